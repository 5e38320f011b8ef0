"""Time evolution under commuting dephasing.

The equation of motion is

    d rho / dt = -i [H, rho] - gamma_t [L, [L, rho]]

with Hermitian L commuting with H and a nonnegative, possibly
time-dependent rate gamma_t that switches on at an onset time t0.
Because H and L commute, every matrix element in their joint eigenbasis
evolves independently: a phase exp(-i(E_j - E_k)t) and a decay
exp(-(l_j - l_k)^2 * Gamma) with Gamma the integrated rate.  The closed
form is used wherever possible; the fixed-step RK4 integrator exists to
cross-check it and to handle states off the analytic path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import (DensityMatrix, NumericalContractError, SensorModel,
                      CatSpec, ValidationError)

TRACE_DRIFT_TOL = 1e-9
POSITIVITY_FLOOR = -1e-7
CONVERGENCE_TOL = 1e-8
MAX_STEPS_DEFAULT = 10_000

SCHEDULE_VARIANTS = ("constant", "linear_ramp", "piecewise_linear")


@dataclass(frozen=True)
class NoiseSchedule:
    """Dephasing rate profile gamma_t with onset t0.

    Noise acts strictly after the onset: the reported rate is zero for
    t <= t0.  Integrals are closed-form for all three variants.
    """

    variant: str
    gamma: float = 0.0
    gamma_dot: float = 0.0
    t0: float = 0.0
    knots: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.variant not in SCHEDULE_VARIANTS:
            raise ValidationError(f"unknown schedule variant {self.variant!r}")
        if self.t0 < 0.0 or not math.isfinite(self.t0):
            raise ValidationError("t0 must be nonnegative and finite")
        if self.variant == "constant":
            if self.gamma < 0.0 or not math.isfinite(self.gamma):
                raise ValidationError("gamma must be nonnegative and finite")
        elif self.variant == "linear_ramp":
            if self.gamma_dot < 0.0 or not math.isfinite(self.gamma_dot):
                raise ValidationError(
                    "ramp slope must be nonnegative and finite")
        else:
            ks = self.knots
            if len(ks) < 2:
                raise ValidationError("piecewise schedule needs >= 2 knots")
            for tk, gk in ks:
                if not (math.isfinite(tk) and math.isfinite(gk)):
                    raise ValidationError("knots must be finite")
                if gk < 0.0:
                    raise ValidationError(f"negative rate {gk} at knot t={tk}")
                if tk < 0.0:
                    raise ValidationError("knot times must be nonnegative")
            for (ta, _), (tb, _) in zip(ks, ks[1:]):
                if not tb > ta:
                    raise ValidationError("knot times must strictly increase")
            object.__setattr__(self, "t0", ks[0][0])

    @classmethod
    def constant(cls, gamma: float, t0: float = 0.0) -> "NoiseSchedule":
        return cls(variant="constant", gamma=float(gamma), t0=float(t0))

    @classmethod
    def linear_ramp(cls, gamma_dot: float, t0: float = 0.0) -> "NoiseSchedule":
        return cls(variant="linear_ramp", gamma_dot=float(gamma_dot),
                   t0=float(t0))

    @classmethod
    def piecewise_linear(cls, knots) -> "NoiseSchedule":
        ks = tuple((float(t), float(g)) for t, g in knots)
        return cls(variant="piecewise_linear", knots=ks)

    def rate(self, t: float) -> float:
        """gamma_t; zero at and before the onset, by convention."""
        if self.variant == "constant":
            return self.gamma if t > self.t0 else 0.0
        if self.variant == "linear_ramp":
            return self.gamma_dot * (t - self.t0) if t > self.t0 else 0.0
        return self._piecewise_rate(t, right=False)

    def rate_right(self, t: float) -> float:
        """Right-continuous rate: the value just after t.

        Differs from ``rate`` only exactly at onset and knot times.  The
        integrator samples this so a step that begins at the onset
        integrates the post-onset dynamics; divergence checks use it to
        spot a rate that switches on discontinuously."""
        if self.variant == "constant":
            return self.gamma if t >= self.t0 else 0.0
        if self.variant == "linear_ramp":
            return self.gamma_dot * (t - self.t0) if t >= self.t0 else 0.0
        return self._piecewise_rate(t, right=True)

    def _piecewise_rate(self, t: float, right: bool) -> float:
        ks = self.knots
        if t < ks[0][0]:
            return 0.0
        if t == ks[0][0]:
            # left convention reports 0 exactly at the onset knot
            return ks[0][1] if right else 0.0
        if t >= ks[-1][0]:
            return ks[-1][1]
        for (ta, ga), (tb, gb) in zip(ks, ks[1:]):
            if ta <= t < tb:
                return ga + (gb - ga) * (t - ta) / (tb - ta)
        return ks[-1][1]

    def integral(self, t: float) -> float:
        """Integrated rate from the onset up to t (0 when t <= t0)."""
        if self.variant == "constant":
            return self.gamma * max(0.0, t - self.t0)
        if self.variant == "linear_ramp":
            dt = max(0.0, t - self.t0)
            return 0.5 * self.gamma_dot * dt * dt
        ks = self.knots
        if t <= ks[0][0]:
            return 0.0
        total = 0.0
        for (ta, ga), (tb, gb) in zip(ks, ks[1:]):
            if t <= ta:
                break
            hi = min(t, tb)
            # exact trapezoid of the linear segment, cut at t if needed
            ghi = ga + (gb - ga) * (hi - ta) / (tb - ta)
            total += 0.5 * (ga + ghi) * (hi - ta)
        if t > ks[-1][0]:
            total += ks[-1][1] * (t - ks[-1][0])
        return total

    def max_rate(self, t_final: float) -> float:
        if self.variant == "constant":
            return self.gamma if t_final > self.t0 else 0.0
        if self.variant == "linear_ramp":
            return self.gamma_dot * max(0.0, t_final - self.t0)
        best = 0.0
        for tk, gk in self.knots:
            if tk <= t_final:
                best = max(best, gk)
        best = max(best, self._piecewise_rate(min(t_final, self.knots[-1][0]),
                                              right=True))
        return best

    def breakpoints(self, t_final: float) -> list[float]:
        """Times in (0, t_final) where the rate is not smooth."""
        if self.variant == "piecewise_linear":
            pts = [tk for tk, _ in self.knots]
        else:
            pts = [self.t0]
        return sorted({p for p in pts if 0.0 < p < t_final})


def schedule_eval(schedule: NoiseSchedule, t: float) -> tuple[float, float]:
    """(gamma_t, integral of gamma from t0 to t) at a single time."""
    if t < 0.0 or not math.isfinite(t):
        raise ValidationError("t must be nonnegative and finite")
    return schedule.rate(t), schedule.integral(t)


@dataclass(frozen=True)
class EvolutionSpec:
    """Everything an integration run needs besides the initial state."""

    model: SensorModel
    schedule: NoiseSchedule
    t_final: float
    dt: float | None = None

    def __post_init__(self):
        if self.t_final < 0.0 or not math.isfinite(self.t_final):
            raise ValidationError("t_final must be nonnegative and finite")
        if self.dt is not None and (not math.isfinite(self.dt)
                                    or self.dt <= 0.0):
            raise ValidationError("dt must be positive and finite")


@dataclass(frozen=True)
class CatDiagonalization:
    """Spectral data of the analytically evolved two-branch state."""

    p: float
    p_star: float
    phase: float
    decay: float

    def __post_init__(self):
        if not math.isclose(self.p + self.p_star, 1.0, abs_tol=1e-12):
            raise ValidationError("branch eigenvalues must sum to 1")
        if self.p_star < -1e-12 or self.p > 1.0 + 1e-12:
            raise ValidationError("branch eigenvalues out of [0, 1]")


def default_step(model: SensorModel, schedule: NoiseSchedule,
                 t_final: float) -> float:
    """Step size rule: resolve the fastest phase, the fastest decay, and
    never take fewer than 10^4 steps over the run."""
    if t_final <= 0.0:
        raise ValidationError("t_final must be positive")
    candidates = [t_final / MAX_STEPS_DEFAULT]
    eps = model.spectrum
    phase = model.omega * (float(np.max(eps)) - float(np.min(eps)))
    if phase > 0.0:
        candidates.append(0.01 / phase)
    lam = model.lindblad_spectrum
    lgap = float(np.max(lam)) - float(np.min(lam))
    gmax = schedule.max_rate(t_final)
    if gmax * lgap * lgap > 0.0:
        candidates.append(0.1 / (gmax * lgap * lgap))
    return min(candidates)


def evolve_closed(model: SensorModel, rho0: DensityMatrix,
                  t: float) -> DensityMatrix:
    """Noiseless evolution, exact in the eigenbasis of H."""
    if t < 0.0 or not math.isfinite(t):
        raise ValidationError("t must be nonnegative and finite")
    if rho0.dim != model.dim:
        raise ValidationError("state dimension does not match the model")
    v = model.basis
    eps = model.spectrum
    rt = v.conj().T @ rho0.matrix @ v
    freq = model.omega * (eps[:, None] - eps[None, :])
    rt = rt * np.exp(-1j * freq * t)
    out = v @ rt @ v.conj().T
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(out)


def _rhs(h: np.ndarray, l: np.ndarray, g: float,
         rho: np.ndarray) -> np.ndarray:
    out = -1j * (h @ rho - rho @ h)
    if g != 0.0:
        k = l @ rho - rho @ l
        out -= g * (l @ k - k @ l)
    return out


def _rk4_segment(h: np.ndarray, l: np.ndarray, schedule: NoiseSchedule,
                 rho: np.ndarray, t_start: float, t_end: float,
                 dt_target: float) -> np.ndarray:
    span = t_end - t_start
    n = max(1, int(math.ceil(span / dt_target - 1e-12)))
    dt = span / n
    for i in range(n):
        ta = t_start + i * dt
        tb = t_end if i == n - 1 else t_start + (i + 1) * dt
        step = tb - ta
        g1 = schedule.rate_right(ta)
        gm = schedule.rate_right(0.5 * (ta + tb))
        # The segment end is a breakpoint; the rate that belongs to this
        # segment there is the left limit, not the value after the jump.
        g2 = schedule.rate(tb) if i == n - 1 else schedule.rate_right(tb)
        k1 = _rhs(h, l, g1, rho)
        k2 = _rhs(h, l, gm, rho + 0.5 * step * k1)
        k3 = _rhs(h, l, gm, rho + 0.5 * step * k2)
        k4 = _rhs(h, l, g2, rho + step * k3)
        rho = rho + (step / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        rho = 0.5 * (rho + rho.conj().T)
    return rho


def _integrate(model: SensorModel, schedule: NoiseSchedule,
               rho: np.ndarray, t_start: float, t_end: float,
               dt_target: float) -> np.ndarray:
    h = model.hamiltonian()
    l = model.lindblad.matrix
    cuts = [p for p in schedule.breakpoints(t_end) if p > t_start]
    lo = t_start
    for cut in cuts + [t_end]:
        if cut > lo:
            rho = _rk4_segment(h, l, schedule, rho, lo, cut, dt_target)
            lo = cut
    return rho


def evolve_lindblad_numeric(spec: EvolutionSpec, rho0: DensityMatrix,
                            verify_convergence: bool = False) -> DensityMatrix:
    """Fixed-step RK4 integration of the dephasing master equation.

    The state is re-symmetrized after every step.  Integration is split
    at schedule breakpoints (onset, knots) so each RK4 segment sees a
    smooth rate.  The run fails with NumericalContractError if the trace
    drifts beyond 1e-9 or the final state dips below -1e-7 in its
    spectrum; with ``verify_convergence`` the run is repeated at half
    the step and any entry disagreeing by more than 1e-8 is an error.
    """
    model, schedule = spec.model, spec.schedule
    if rho0.dim != model.dim:
        raise ValidationError("state dimension does not match the model")
    if spec.t_final == 0.0:
        return rho0
    dt = spec.dt if spec.dt is not None else default_step(
        model, schedule, spec.t_final)

    rho = np.array(rho0.matrix, dtype=complex)
    rho = _integrate(model, schedule, rho, 0.0, spec.t_final, dt)

    drift = abs(complex(np.trace(rho)) - 1.0)
    if drift > TRACE_DRIFT_TOL:
        raise NumericalContractError(
            f"trace drifted by {drift:.3e} > {TRACE_DRIFT_TOL}; "
            f"retry with a smaller dt (current {dt:.3e})")

    if verify_convergence:
        fine = np.array(rho0.matrix, dtype=complex)
        fine = _integrate(model, schedule, fine, 0.0, spec.t_final, dt / 2.0)
        gap = float(np.max(np.abs(fine - rho)))
        if gap > CONVERGENCE_TOL:
            raise NumericalContractError(
                f"halving dt moved entries by {gap:.3e} > {CONVERGENCE_TOL}; "
                f"retry with a smaller dt (current {dt:.3e})")
        rho = fine

    return _contract_state(rho, dt)


def _contract_state(rho: np.ndarray, dt: float) -> DensityMatrix:
    """Wrap an integrated array, converting invariant breakage into a
    numerical-contract failure (the inputs were valid; the step wasn't)."""
    drift = abs(complex(np.trace(rho)) - 1.0)
    if drift > TRACE_DRIFT_TOL:
        raise NumericalContractError(
            f"trace drifted by {drift:.3e} > {TRACE_DRIFT_TOL}; "
            f"retry with a smaller dt (current {dt:.3e})")
    try:
        return DensityMatrix(rho, positivity_tol=-POSITIVITY_FLOOR)
    except ValidationError as exc:
        raise NumericalContractError(
            f"integration broke a state invariant ({exc}); "
            f"retry with a smaller dt (current {dt:.3e})") from exc


def trajectory(spec: EvolutionSpec, rho0: DensityMatrix,
               samples: int) -> list[tuple[float, DensityMatrix]]:
    """States at ``samples`` evenly spaced times from 0 to t_final."""
    if samples < 2:
        raise ValidationError("need at least 2 samples")
    model, schedule = spec.model, spec.schedule
    if spec.t_final <= 0.0:
        raise ValidationError("t_final must be positive for a trajectory")
    dt = spec.dt if spec.dt is not None else default_step(
        model, schedule, spec.t_final)
    times = np.linspace(0.0, spec.t_final, samples)
    out = [(0.0, rho0)]
    rho = np.array(rho0.matrix, dtype=complex)
    for ta, tb in zip(times, times[1:]):
        rho = _integrate(model, schedule, rho, float(ta), float(tb), dt)
        out.append((float(tb), _contract_state(rho.copy(), dt)))
    return out


def cat_state_analytic(spec: CatSpec, schedule: NoiseSchedule,
                       t: float) -> tuple[DensityMatrix, CatDiagonalization]:
    """Exact two-branch state at time t, plus its spectral data.

    Populations stay at 1/2; the off-diagonal element is
    (1/2) exp(i dE t) exp(-dL^2 Gamma), so the eigenvalues are
    (1 +- exp(-dL^2 Gamma)) / 2.
    """
    rate, integral = schedule_eval(schedule, t)
    del rate
    decay = spec.delta_l ** 2 * integral
    phase = spec.delta_e * t
    coher = 0.5 * math.exp(-decay)
    off = coher * complex(math.cos(phase), math.sin(phase))
    rho = np.array([[0.5, off], [np.conj(off), 0.5]], dtype=complex)
    diag = CatDiagonalization(p=0.5 * (1.0 + math.exp(-decay)),
                              p_star=0.5 * (1.0 - math.exp(-decay)),
                              phase=phase, decay=decay)
    return DensityMatrix(rho), diag
