"""Quantum Fisher information for time and frequency estimation.

The central quantity is F(lambda) = tr(rho Lam^2) with the symmetric
logarithmic derivative Lam defined by d rho / d lambda =
(Lam rho + rho Lam) / 2.  In the eigenbasis of rho the matrix elements
are Lam[j][k] = 2 (d rho)[j][k] / (p_j + p_k), and eigenvalue pairs
whose sum falls below a cutoff are dropped.

Closed forms for the two-branch cat state and the noiseless baselines
sit next to the generic numeric route so every analytic claim can be
cross-checked against the eigenbasis formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import NoiseSchedule, schedule_eval
from .hilbert import (CatSpec, DensityMatrix, Operator, SensorModel,
                      ValidationError, commutator, commutator_norms,
                      hermiticity_defect, operator_expectation)
from .linalg import jacobi_eigh

SLD_PAIR_CUTOFF = 1e-10
DRHO_HERMITICITY_TOL = 1e-8
DRHO_TRACE_TOL = 1e-8
PURITY_TOL = 1e-10

PARAMETERS = ("time", "omega")


@dataclass(frozen=True, eq=False)
class SldResult:
    """Symmetric logarithmic derivative plus truncation bookkeeping."""

    sld: Operator
    truncated_rank: int


@dataclass(frozen=True, eq=False)
class QfiReport:
    """A Fisher information value and how it was obtained."""

    value: float
    method: str
    parameter: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.parameter not in PARAMETERS:
            raise ValidationError(f"unknown parameter {self.parameter!r}")
        if not (self.value >= 0.0 or math.isinf(self.value)):
            raise ValidationError("Fisher information must be nonnegative")

    @property
    def diverged(self) -> bool:
        return bool(self.diagnostics.get("diverged", False))

    def to_dict(self) -> dict:
        return {"value": self.value, "method": self.method,
                "parameter": self.parameter, "diagnostics": self.diagnostics}


def _check_parameter(parameter: str):
    if parameter not in PARAMETERS:
        raise ValidationError(f"unknown parameter {parameter!r}")


def sld_and_qfi(rho: DensityMatrix, drho, parameter: str = "time"
                ) -> tuple[SldResult, QfiReport]:
    """SLD and QFI from the eigenbasis formula.

    ``drho`` must be Hermitian and traceless within 1e-8.  Pairs with
    p_j + p_k < 1e-10 contribute nothing; ``truncated_rank`` counts the
    eigenvalues whose diagonal pair fell below the cutoff.
    """
    _check_parameter(parameter)
    dm = drho.matrix if isinstance(drho, Operator) else np.asarray(
        drho, dtype=complex)
    if dm.shape != rho.matrix.shape:
        raise ValidationError("drho dimension does not match the state")
    if hermiticity_defect(dm) > DRHO_HERMITICITY_TOL:
        raise ValidationError("drho must be Hermitian within 1e-8")
    tr = complex(np.trace(dm))
    scale = max(1.0, float(np.max(np.abs(dm))))
    if abs(tr) > DRHO_TRACE_TOL * scale:
        raise ValidationError(f"drho must be traceless (got tr {tr!r})")

    w, v = jacobi_eigh(rho.matrix)
    dd = v.conj().T @ dm @ v
    sums = w[:, None] + w[None, :]
    keep = sums >= SLD_PAIR_CUTOFF
    if not np.any(keep):
        raise ValidationError("all eigenvalue pairs fall below the SLD cutoff")
    lam = np.zeros_like(dd)
    lam[keep] = 2.0 * dd[keep] / sums[keep]
    qfi = float(np.sum(w[:, None] * np.abs(lam) ** 2))
    truncated = int(np.sum(2.0 * w < SLD_PAIR_CUTOFF))

    sld_full = v @ lam @ v.conj().T
    sld_full = 0.5 * (sld_full + sld_full.conj().T)
    result = SldResult(sld=Operator(sld_full, hermitian=True),
                       truncated_rank=truncated)
    report = QfiReport(value=qfi, method="numeric_sld", parameter=parameter,
                       diagnostics={"truncated_rank": truncated,
                                    "min_eigenvalue": float(w[0]),
                                    "purity": rho.purity()})
    return result, report


def drho_dt(model: SensorModel, schedule: NoiseSchedule, rho: DensityMatrix,
            t: float) -> np.ndarray:
    """Equation-of-motion derivative -i[H, rho] - gamma_t [L, [L, rho]]."""
    if rho.dim != model.dim:
        raise ValidationError("state dimension does not match the model")
    rate, _ = schedule_eval(schedule, t)
    h = model.hamiltonian()
    out = -1j * commutator(h, rho.matrix)
    if rate != 0.0:
        lm = model.lindblad.matrix
        out = out - rate * commutator(lm, commutator(lm, rho.matrix))
    return out


def drho_domega(model: SensorModel, schedule: NoiseSchedule,
                rho_t: DensityMatrix, t: float) -> np.ndarray:
    """Frequency derivative of the evolved state, valid for L = H.

    Every element carries a phase exp(-i omega (e_j - e_k) t) and a
    decay exp(-omega^2 (e_j - e_k)^2 Gamma); differentiating in omega
    gives -i (t/omega) [H, rho] - (2 Gamma / omega) [H, [H, rho]].
    """
    if not model.energy_lindblad:
        raise ValidationError(
            "frequency derivatives require energy dephasing (L = H)")
    if rho_t.dim != model.dim:
        raise ValidationError("state dimension does not match the model")
    _, integral = schedule_eval(schedule, t)
    h = model.hamiltonian()
    out = -1j * (t / model.omega) * commutator(h, rho_t.matrix)
    if integral != 0.0:
        out = out - (2.0 * integral / model.omega) * commutator(
            h, commutator(h, rho_t.matrix))
    return out


def qfi_quadratic_bound(rho: DensityMatrix, drho) -> QfiReport:
    """tr[(d rho)^2]; doubled into an equality when the state is pure."""
    dm = drho.matrix if isinstance(drho, Operator) else np.asarray(
        drho, dtype=complex)
    if dm.shape != rho.matrix.shape:
        raise ValidationError("drho dimension does not match the state")
    val = float(np.sum(np.abs(dm) ** 2))
    purity = rho.purity()
    pure = purity >= 1.0 - PURITY_TOL
    return QfiReport(value=2.0 * val if pure else val,
                     method="quadratic_bound", parameter="time",
                     diagnostics={"purity": purity,
                                  "pure_state_equality": pure})


def qfi_time_lower_bound(model: SensorModel, schedule: NoiseSchedule,
                         rho: DensityMatrix, t: float) -> QfiReport:
    """||[H, rho]||_2^2 + gamma_t^2 ||[L, [L, rho]]||_2^2."""
    rate, integral = schedule_eval(schedule, t)
    hop = Operator(model.hamiltonian(), hermitian=True)
    n_h, n_ll = commutator_norms(hop, model.lindblad, rho)
    value = n_h + rate * rate * n_ll
    return QfiReport(value=value, method="lower_bound", parameter="time",
                     diagnostics={"rate": rate, "integral": integral,
                                  "norm_h_sq": n_h, "norm_ll_sq": n_ll})


def qfi_freq_lower_bound(model: SensorModel, schedule: NoiseSchedule,
                         rho: DensityMatrix, t: float) -> QfiReport:
    """(t^2/w^2) ||[H, rho]||_2^2 + (4 Gamma^2/w^2) ||[H, [H, rho]]||_2^2."""
    if not model.energy_lindblad:
        raise ValidationError(
            "the frequency bound requires energy dephasing (L = H)")
    _, integral = schedule_eval(schedule, t)
    w = model.omega
    hop = Operator(model.hamiltonian(), hermitian=True)
    n_h, n_hh = commutator_norms(hop, hop, rho)
    value = (t * t / (w * w)) * n_h + \
        (4.0 * integral * integral / (w * w)) * n_hh
    return QfiReport(value=value, method="lower_bound", parameter="omega",
                     diagnostics={"integral": integral, "norm_h_sq": n_h,
                                  "norm_hh_sq": n_hh})


def _decay_quotient(numerator: float, x: float) -> float:
    """numerator / (1 - exp(-x)) with the x -> 0 limit handled upstream."""
    return numerator / (-math.expm1(-x))


def qfi_time_cat(spec: CatSpec, schedule: NoiseSchedule, t: float) -> QfiReport:
    """Exact time-estimation QFI of the two-branch cat state.

    F = e^{-2 dL^2 G} (dE^2 + gamma_t^2 dL^4 / (1 - e^{-2 dL^2 G})).

    At G = 0 the second term is 0 when the rate is still 0 (a ramp at
    its onset) and diverges when the rate has already switched on (a
    constant schedule evaluated exactly at its onset); the divergence is
    reported as an infinity flag, not a crash.
    """
    rate, integral = schedule_eval(schedule, t)
    x = 2.0 * spec.delta_l ** 2 * integral
    diagnostics = {"rate": rate, "integral": integral, "exponent": x}
    if x == 0.0:
        onset_rate = schedule.rate_right(t)
        if onset_rate * spec.delta_l ** 2 > 0.0:
            diagnostics["diverged"] = True
            return QfiReport(value=math.inf, method="analytic_cat",
                             parameter="time", diagnostics=diagnostics)
        value = spec.delta_e ** 2
    else:
        noise_term = _decay_quotient(rate * rate * spec.delta_l ** 4, x)
        value = math.exp(-x) * (spec.delta_e ** 2 + noise_term)
    return QfiReport(value=value, method="analytic_cat", parameter="time",
                     diagnostics=diagnostics)


def qfi_freq_cat(spec: CatSpec, schedule: NoiseSchedule, t: float) -> QfiReport:
    """Exact frequency-estimation QFI of the cat state, for L = H.

    F = (dE^2/w^2) e^{-2 dE^2 G} (4 dE^2 G^2 / (1 - e^{-2 dE^2 G}) + t^2).
    """
    if spec.delta_l != spec.delta_e:
        raise ValidationError(
            "frequency QFI requires energy dephasing (delta_l == delta_e)")
    _, integral = schedule_eval(schedule, t)
    de = spec.delta_e
    x = 2.0 * de * de * integral
    if x == 0.0:
        bracket = t * t
    else:
        bracket = _decay_quotient(4.0 * de * de * integral * integral, x) \
            + t * t
    value = (de * de / (spec.omega ** 2)) * math.exp(-x) * bracket
    return QfiReport(value=value, method="analytic_cat", parameter="omega",
                     diagnostics={"integral": integral, "exponent": x})


def qfi_closed(spec_or_model, rho: DensityMatrix | None = None,
               t: float = 0.0, parameter: str = "time") -> QfiReport:
    """Noiseless baselines: 4 var(H), and (t^2/w^2) 4 var(H) for omega.

    Accepts a CatSpec (var(H) = dE^2/4 exactly) or a SensorModel with a
    pure state.
    """
    _check_parameter(parameter)
    if isinstance(spec_or_model, CatSpec):
        spec = spec_or_model
        var_h = 0.25 * spec.delta_e ** 2
        omega = spec.omega
    elif isinstance(spec_or_model, SensorModel):
        model = spec_or_model
        if rho is None:
            raise ValidationError("a state is required with a model")
        purity = rho.purity()
        if purity < 1.0 - PURITY_TOL:
            raise ValidationError(
                f"closed-evolution baseline needs a pure state "
                f"(purity {purity:.12f})")
        _, var_h = operator_expectation(
            Operator(model.hamiltonian(), hermitian=True), rho)
        omega = model.omega
    else:
        raise ValidationError("expected a CatSpec or SensorModel")
    if parameter == "time":
        value = 4.0 * var_h
    else:
        value = 4.0 * var_h * t * t / (omega * omega)
    return QfiReport(value=value, method="closed_baseline",
                     parameter=parameter, diagnostics={"var_h": var_h})
