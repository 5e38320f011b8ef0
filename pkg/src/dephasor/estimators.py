"""Practical readout: branch-interference observables and error propagation.

The measured signal for both sensor families is

    <O> = cos(dE t) exp(-dL^2 Gamma)

with unit-magnitude eigenvalues of O on the branch pair, so
(Delta O)^2 = 1 - <O>^2, and a parameter estimate from inverting the
mean carries variance (Delta O)^2 / |d<O>/d lambda|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import NoiseSchedule, schedule_eval
from .fisher import qfi_freq_cat, qfi_time_cat
from .hilbert import CatSpec, Operator, SensorModel, ValidationError

PARAMETERS = ("time", "omega")


@dataclass(frozen=True, eq=False)
class ObservableSpec:
    """A readout observable and the family it belongs to."""

    kind: str
    operator: Operator


@dataclass(frozen=True)
class EstimateReport:
    """Signal statistics and the propagated estimator variance.

    ``d_mean`` and ``variance_estimator`` are None when only the signal
    itself was requested.  A stationary signal (d_mean == 0) makes the
    estimator variance an explicit infinity rather than an error.
    """

    mean: float
    variance_o: float
    d_mean: float | None = None
    variance_estimator: float | None = None
    parameter: str | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def diverged(self) -> bool:
        return self.variance_estimator is not None and \
            math.isinf(self.variance_estimator)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "variance_O": self.variance_o,
                "d_mean": self.d_mean,
                "variance_estimator": self.variance_estimator,
                "parameter": self.parameter,
                "diagnostics": self.diagnostics}


def optimal_observable(model: SensorModel) -> ObservableSpec:
    """The branch-interference readout for a sensor family.

    Qubit networks measure the product of single-qubit sigma_x, which on
    the computational basis is the bit-complement exchange matrix.  Any
    two-level model measures the branch swap.
    """
    if model.kind == "qubit_network":
        dim = model.dim
        op = np.zeros((dim, dim), dtype=complex)
        for b in range(dim):
            op[b, dim - 1 - b] = 1.0
        return ObservableSpec(kind="parity",
                              operator=Operator(op, hermitian=True))
    if model.dim == 2:
        op = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
        return ObservableSpec(kind="branch_swap",
                              operator=Operator(op, hermitian=True))
    raise ValidationError(
        "custom models need an explicitly chosen observable")


def observable_expectation(spec: CatSpec, schedule: NoiseSchedule,
                           t: float) -> EstimateReport:
    """Signal mean and variance at a single time."""
    _, integral = schedule_eval(schedule, t)
    mean = math.cos(spec.delta_e * t) * math.exp(
        -spec.delta_l ** 2 * integral)
    return EstimateReport(mean=mean, variance_o=1.0 - mean * mean,
                          diagnostics={"integral": integral})


def _signal_derivative(spec: CatSpec, schedule: NoiseSchedule, t: float,
                       parameter: str) -> float:
    rate, integral = schedule_eval(schedule, t)
    phase = spec.delta_e * t
    if parameter == "time":
        envelope = math.exp(-spec.delta_l ** 2 * integral)
        return -envelope * (spec.delta_e * math.sin(phase)
                            + rate * spec.delta_l ** 2 * math.cos(phase))
    # frequency readout assumes energy dephasing, so the envelope decays
    # with dE^2 and picks up an omega dependence through it
    if spec.delta_l != spec.delta_e:
        raise ValidationError(
            "frequency estimation requires energy dephasing "
            "(delta_l == delta_e)")
    envelope = math.exp(-spec.delta_e ** 2 * integral)
    de = spec.delta_e
    return -envelope * ((de * t / spec.omega) * math.sin(phase)
                        + (2.0 * de * de * integral / spec.omega)
                        * math.cos(phase))


def estimator_variance(spec: CatSpec, schedule: NoiseSchedule, t: float,
                       parameter: str) -> EstimateReport:
    """Error propagation var(O) / |d<O>/d lambda|^2 at a single time."""
    if parameter not in PARAMETERS:
        raise ValidationError(f"unknown parameter {parameter!r}")
    base = observable_expectation(spec, schedule, t)
    d_mean = _signal_derivative(spec, schedule, t, parameter)
    if d_mean == 0.0:
        var_est = math.inf
    else:
        var_est = base.variance_o / (d_mean * d_mean)
    diagnostics = dict(base.diagnostics)
    if math.isinf(var_est):
        diagnostics["diverged"] = True
    return EstimateReport(mean=base.mean, variance_o=base.variance_o,
                          d_mean=d_mean, variance_estimator=var_est,
                          parameter=parameter, diagnostics=diagnostics)


def saturation_ratio(spec: CatSpec, schedule: NoiseSchedule, t: float,
                     parameter: str) -> float:
    """var(estimate) times the matching QFI; 1 means a saturated bound.

    Infinite on a stationary signal or a diverged QFI; never drops below
    1 beyond numerical error.
    """
    est = estimator_variance(spec, schedule, t, parameter)
    if parameter == "time":
        qfi = qfi_time_cat(spec, schedule, t)
    else:
        qfi = qfi_freq_cat(spec, schedule, t)
    if est.diverged or qfi.diverged:
        return math.inf
    return est.variance_estimator * qfi.value
