"""Closed-form oracles and the check suite run by ``xpcomm validate``.

For the Gaussian input ``psi = (2/pi w^2)^(1/4) exp(-x^2/w^2)``::

    x~p~ psi = i (2C/w^2) x^2 psi
    p~x~ psi = i C (2x^2/w^2 - 1) psi
    [x~, p~] psi = i C psi,   {x~, p~} psi = i C (4x^2/w^2 - 1) psi
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .elements import lens_fourier_transform
from .errors import OpticsError
from .field import (
    BenchParams,
    ComplexField,
    GridSpec,
    fidelity,
    gaussian_input,
    norm_sq,
    normalize,
    relative_l2,
    relative_l2_phase_free,
)
from .interferometer import InterferometerSpec, combine_ports, run_arms
from .wigner import wigner_transform

COMMUTATOR_TOL = 1e-4
FIDELITY_MIN = 0.9999
ANTICOMMUTATOR_TOL = 1e-3
LENS_TOL = 1e-9
WAIST_TOL = 1e-6
PARSEVAL_TOL = 1e-9
MARGINAL_TOL = 1e-6
CONTAINMENT_TOL = 1e-6


def xp_closed_form(grid: GridSpec, params: BenchParams, w: float) -> ComplexField:
    psi = gaussian_input(grid, w)
    return psi.with_samples(1j * (2 * params.C / w**2) * psi.x**2 * psi.samples)


def px_closed_form(grid: GridSpec, params: BenchParams, w: float) -> ComplexField:
    psi = gaussian_input(grid, w)
    return psi.with_samples(1j * params.C * (2 * psi.x**2 / w**2 - 1) * psi.samples)


def anticommutator_profile(grid: GridSpec, w: float) -> ComplexField:
    """Normalised ``(4x^2/w^2 - 1) psi``."""
    psi = gaussian_input(grid, w)
    return normalize(psi.with_samples((4 * psi.x**2 / w**2 - 1) * psi.samples))


def lens_gaussian_closed_form(grid: GridSpec, params: BenchParams, w: float) -> ComplexField:
    """Back-focal-plane field of the Gaussian input, on the paired grid."""
    lam_f = params.lambda_ * params.f
    fgrid = GridSpec(grid.n_points, lam_f / (2 * grid.spacing))
    p = fgrid.x
    amp = (2 / (math.pi * w**2)) ** 0.25 * math.sqrt(math.pi) * w
    return ComplexField(fgrid, amp / np.sqrt(1j * lam_f) * np.exp(-((math.pi * w * p / lam_f) ** 2)))


def momentum_marginal_direct(field: ComplexField, k: np.ndarray) -> np.ndarray:
    """``|phi(k)|^2`` with ``phi(k) = (2 pi)^-1/2 sum psi(x) exp(-i k x) dx``."""
    x = field.x
    out = np.empty(k.size)
    for start in range(0, k.size, 256):
        kk = k[start : start + 256]
        phi = np.exp(-1j * np.outer(kk, x)) @ field.samples * field.grid.spacing / math.sqrt(2 * math.pi)
        out[start : start + 256] = np.abs(phi) ** 2
    return out


def wigner_marginal_errors(field: ComplexField, wmap=None):
    """L1 errors of the position and momentum marginals of ``field``'s Wigner map."""
    wmap = wmap or wigner_transform(field)
    step = int(round(wmap.dx / field.grid.spacing))
    ex = float(np.sum(np.abs(wmap.position_marginal() - field.intensity[::step])) * wmap.dx)
    # |phi|^2 is evaluated only where it can be non-negligible; the rest of
    # the k axis is compared against zero
    pm = wmap.momentum_marginal()
    window = np.abs(wmap.k_axis) <= 40.0 / _rms_width(field)
    exact = np.zeros_like(pm)
    exact[window] = momentum_marginal_direct(field, wmap.k_axis[window])
    ek = float(np.sum(np.abs(pm - exact)) * wmap.dk)
    return ex, ek


def _rms_width(field: ComplexField) -> float:
    p = field.intensity / field.intensity.sum()
    mean = float(np.sum(p * field.x))
    return max(math.sqrt(float(np.sum(p * (field.x - mean) ** 2))), field.grid.spacing)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float | None
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        measured = "n/a" if self.measured is None else f"{self.measured:.10g}"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"{status}  {self.name:<28} measured={measured}  tol={self.tolerance:g}{extra}"

    def as_dict(self):
        return {
            "name": self.name,
            "passed": self.passed,
            "measured": self.measured,
            "tolerance": self.tolerance,
            "detail": self.detail,
        }


def _describe(exc: OpticsError) -> str:
    """Name the innermost cause; arm and pipeline wrappers only add location."""
    where = []
    while getattr(exc, "cause", None) is not None:
        if hasattr(exc, "arm"):
            where.append(f"{exc.arm} arm")
        if hasattr(exc, "index"):
            where.append(f"element {exc.index}")
        exc = exc.cause
    loc = f" [{', '.join(where)}]" if where else ""
    return f"{type(exc).__name__}: {exc}{loc}"


def _check(name, tolerance, fn, *, minimum=False):
    try:
        measured, detail = fn()
    except OpticsError as exc:
        return CheckResult(name, False, None, tolerance, _describe(exc))
    if not math.isfinite(measured):
        return CheckResult(name, False, measured, tolerance, detail)
    passed = measured >= tolerance if minimum else measured <= tolerance
    return CheckResult(name, bool(passed), float(measured), tolerance, detail)


def run_validation(params: BenchParams, spec: InterferometerSpec, grid: GridSpec) -> list[CheckResult]:
    """Run the oracle suite on a Gaussian input; one :class:`CheckResult` per check."""
    w = params.w
    clip_messages = []
    results = []

    def arms():
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            out = run_arms(psi, spec)
        clip_messages.extend(str(c.message) for c in caught)
        return out

    try:
        psi = gaussian_input(grid, w)
    except OpticsError as exc:
        return [CheckResult("input", False, None, 0.0, _describe(exc))]

    cache = {}

    def lower_upper():
        if "arms" not in cache:
            cache["arms"] = arms()
        return cache["arms"]

    def commutator():
        lower, upper = lower_upper()
        return relative_l2(lower - upper, psi * params.C), "(U_lower - U_upper) psi vs C psi"

    def commutator_port():
        lower, upper = lower_upper()
        d1 = combine_ports(lower, upper, math.pi).d1
        return fidelity(normalize(d1), psi), "fidelity(normalize(D1 at phi=pi), psi)"

    def anticommutator():
        lower, upper = lower_upper()
        d1 = combine_ports(lower, upper, 0.0).d1
        return relative_l2_phase_free(normalize(d1), anticommutator_profile(grid, w)), "D1 at phi=0 vs (4x^2/w^2-1) psi"

    def lens_pair():
        out = lens_fourier_transform(psi, params.lambda_, params.f)
        return relative_l2(out, lens_gaussian_closed_form(grid, params, w)), "lens(psi) vs analytic Gaussian pair"

    def waist():
        out = lens_fourier_transform(psi, params.lambda_, params.f)
        second = float(np.sum(out.intensity * out.x**2) / np.sum(out.intensity))
        w_fit = 2 * math.sqrt(second)
        w_exact = params.lambda_ * params.f / (math.pi * w)
        return abs(w_fit / w_exact - 1), f"fitted waist {w_fit:.6e} m vs {w_exact:.6e} m"

    def parseval():
        out = lens_fourier_transform(psi, params.lambda_, params.f)
        return abs(norm_sq(out) - norm_sq(psi)), "norm change under the lens transform"

    def marginals():
        ex, ek = wigner_marginal_errors(psi)
        return max(ex, ek), f"position L1 {ex:.2e}, momentum L1 {ek:.2e}"

    def containment():
        lower_upper()
        outside = np.abs(psi.x) > params.l
        frac = float(np.sum(psi.intensity[outside]) / np.sum(psi.intensity))
        if clip_messages:
            return math.inf, "; ".join(dict.fromkeys(clip_messages))
        return frac, "input power outside [-l, l]; no clipping warnings"

    results.append(_check("commutator_identity", COMMUTATOR_TOL, commutator))
    results.append(_check("commutator_port_fidelity", FIDELITY_MIN, commutator_port, minimum=True))
    results.append(_check("anticommutator_closed_form", ANTICOMMUTATOR_TOL, anticommutator))
    results.append(_check("lens_gaussian_pair", LENS_TOL, lens_pair))
    results.append(_check("lens_waist_moment", WAIST_TOL, waist))
    results.append(_check("parseval", PARSEVAL_TOL, parseval))
    results.append(_check("wigner_marginals", MARGINAL_TOL, marginals))
    results.append(_check("containment", CONTAINMENT_TOL, containment))
    return results
