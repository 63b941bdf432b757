"""Mach-Zehnder superposition of the two operator orderings.

The output ports carry ``(U_lower + e^{i phi} U_upper) psi / 2`` (D1) and
``(U_lower - e^{i phi} U_upper) psi / 2`` (D2). With the default arms,
``U_lower = -i x~p~`` and ``U_upper = -i p~x~``, so at ``phi = pi`` D1 holds
the commutator and D2 the anti-commutator; ``phi = 0`` swaps them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .elements import (
    ElementPipeline,
    MomentumBench,
    PositionBench,
    run_pipeline,
)
from .errors import ArmError, InvalidArgumentError, OpticsError
from .field import BenchParams, ComplexField, norm_sq


@dataclass(frozen=True)
class InterferometerSpec:
    upper_arm: ElementPipeline
    lower_arm: ElementPipeline
    phase: float = math.pi

    def __post_init__(self):
        for name in ("upper_arm", "lower_arm"):
            arm = getattr(self, name)
            if not isinstance(arm, ElementPipeline):
                arm = ElementPipeline(arm)
                object.__setattr__(self, name, arm)
            n = arm.count(MomentumBench)
            if n != 1:
                raise InvalidArgumentError(
                    f"{name} must contain exactly one momentum bench, found {n}"
                )

    def with_phase(self, phase: float) -> InterferometerSpec:
        return replace(self, phase=float(phase))


def default_spec(params: BenchParams, phase: float = math.pi, edge: str = "clear") -> InterferometerSpec:
    """Upper arm implements p~x~, lower arm x~p~ (both in temporal order)."""
    x = PositionBench(params.l, edge)
    p = MomentumBench.from_params(params, edge)
    return InterferometerSpec(
        upper_arm=ElementPipeline((x, p)),
        lower_arm=ElementPipeline((p, x)),
        phase=phase,
    )


@dataclass(frozen=True)
class PortOutputs:
    d1: ComplexField
    d2: ComplexField
    raw_probabilities: tuple


def run_arms(psi: ComplexField, spec: InterferometerSpec):
    """Return ``(U_lower psi, U_upper psi)``."""
    out = []
    for label, arm in (("lower", spec.lower_arm), ("upper", spec.upper_arm)):
        try:
            out.append(run_pipeline(psi, arm))
        except OpticsError as exc:
            raise ArmError(label, exc) from exc
    return tuple(out)


def combine_ports(lower: ComplexField, upper: ComplexField, phase: float) -> PortOutputs:
    rotated = upper * np.exp(1j * phase)
    d1 = (lower + rotated) * 0.5
    d2 = (lower - rotated) * 0.5
    return PortOutputs(d1, d2, (norm_sq(d1), norm_sq(d2)))


def run_interferometer(psi: ComplexField, spec: InterferometerSpec) -> PortOutputs:
    lower, upper = run_arms(psi, spec)
    return combine_ports(lower, upper, spec.phase)


@dataclass(frozen=True, eq=False)
class ProbabilityMap:
    """Detection probability at D1, ``intensity[j, i] = |d1(x_i; phi_j)|^2``.

    Rows are not normalised, so the phase dependence of the total port power
    stays visible.
    """

    phases: np.ndarray
    x_axis: np.ndarray
    intensity: np.ndarray

    def column(self, phase: float) -> np.ndarray:
        """Profile at the sampled phase closest to ``phase`` (mod 2 pi)."""
        d = np.angle(np.exp(1j * (self.phases - phase)))
        return self.intensity[int(np.argmin(np.abs(d)))]

    def normalized(self) -> ProbabilityMap:
        dx = self.x_axis[1] - self.x_axis[0]
        totals = self.intensity.sum(axis=1, keepdims=True) * dx
        return ProbabilityMap(self.phases, self.x_axis, self.intensity / np.where(totals > 0, totals, 1.0))

    def to_csv(self) -> str:
        lines = ["phi_rad,x_m,intensity"]
        for phi, row in zip(self.phases, self.intensity):
            ph = f"{phi:.17g}"
            lines.extend(f"{ph},{x:.17g},{v:.17g}" for x, v in zip(self.x_axis, row))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "phi_rad": self.phases.tolist(),
            "x_m": self.x_axis.tolist(),
            "shape": list(self.intensity.shape),
            "layout": "row-major, rows = phi, columns = x",
            "intensity": self.intensity.ravel().tolist(),
        }
        return json.dumps(payload, sort_keys=True)


def sweep_phases(n: int) -> np.ndarray:
    if n < 2:
        raise InvalidArgumentError("a phase sweep needs at least two phases")
    return 2.0 * np.pi * np.arange(n) / n


def phase_sweep(psi: ComplexField, spec: InterferometerSpec, phases) -> ProbabilityMap:
    phases = np.asarray(phases, dtype=float)
    if phases.size == 0:
        raise InvalidArgumentError("phases must be non-empty")
    lower, upper = run_arms(psi, spec)
    rot = np.exp(1j * phases)[:, None]
    d1 = 0.5 * (lower.samples[None, :] + rot * upper.samples[None, :])
    return ProbabilityMap(phases, psi.x, np.abs(d1) ** 2)


@dataclass(frozen=True)
class PortSwitchReport:
    passed: bool
    max_deviation: float


def port_switch_check(psi: ComplexField, spec: InterferometerSpec, tol: float = 1e-12) -> PortSwitchReport:
    """Check ``d1(phi=0) == d2(phi=pi)`` and ``d2(phi=0) == d1(phi=pi)``."""
    lower, upper = run_arms(psi, spec)
    at0 = combine_ports(lower, upper, 0.0)
    atpi = combine_ports(lower, upper, math.pi)
    scale = max(np.abs(lower.samples).max(), np.abs(upper.samples).max(), 1e-300)
    dev = max(
        np.abs(at0.d1.samples - atpi.d2.samples).max(),
        np.abs(at0.d2.samples - atpi.d1.samples).max(),
    ) / scale
    return PortSwitchReport(bool(dev <= tol), float(dev))
