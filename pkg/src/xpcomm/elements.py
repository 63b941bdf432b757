"""Thin optical elements and the benches realising x~ and p~.

Pipelines are stored in *temporal* order: the first element is the first one
the photon meets.  The operator product ``x~ p~`` therefore corresponds to the
pipeline ``[MomentumBench, PositionBench]``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import (
    ClippingWarning,
    FourierPlaneCoverageError,
    InvalidArgumentError,
    InvalidRegionError,
    OpticsError,
    PipelineError,
)
from .field import BenchParams, ComplexField, GridSpec, norm_sq

CLIP_THRESHOLD = 1e-6
EDGES = ("clear", "opaque")
TWO_PI = 2.0 * math.pi


def _positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise InvalidArgumentError(f"{name} must be positive, got {value!r}")


def _check_edge(edge):
    if edge not in EDGES:
        raise InvalidArgumentError(f"edge must be one of {EDGES}, got {edge!r}")


def _outside_fraction(field: ComplexField, l: float) -> float:
    total = norm_sq(field)
    if total == 0:
        return 0.0
    outside = np.abs(field.x) > l
    return float(np.sum(np.abs(field.samples[outside]) ** 2) * field.grid.spacing / total)


# ---------------------------------------------------------------- primitives


def apply_phase_shifter(field: ComplexField, region, shift: float) -> ComplexField:
    lo, hi = region
    g = field.grid
    if not (-g.half_extent <= lo <= hi <= g.half_extent):
        raise InvalidRegionError(
            f"region [{lo:g}, {hi:g}] m is not inside the grid [{-g.half_extent:g}, {g.half_extent:g}] m"
        )
    shift = math.fmod(shift, TWO_PI)
    if shift == 0.0:
        return field
    x = field.x
    inside = (x >= lo) & (x <= hi)
    out = field.samples.copy()
    out[inside] *= np.exp(1j * shift)
    return field.with_samples(out)


def linear_transmission(x: np.ndarray, l: float, edge: str = "clear") -> np.ndarray:
    """Amplitude transmission ``|x|/l`` inside ``[-l, l]``.

    Outside the region the attenuator is either fully transparent
    (``edge="clear"``) or fully opaque (``edge="opaque"``).
    """
    t = np.abs(x) / l
    outside = np.abs(x) > l
    t[outside] = 1.0 if edge == "clear" else 0.0
    return t


def apply_linear_attenuator(field: ComplexField, l: float, edge: str = "clear") -> ComplexField:
    _positive("l", l)
    _check_edge(edge)
    return field.with_samples(field.samples * linear_transmission(field.x, l, edge))


def apply_hard_aperture(field: ComplexField, l: float) -> ComplexField:
    _positive("l", l)
    return field.with_samples(np.where(np.abs(field.x) <= l, field.samples, 0.0))


def axis_flip(field: ComplexField) -> ComplexField:
    """Relabel ``x -> -x``.

    On the FFT grid ``-x_i`` is sample ``(n - i) mod n``; the unpaired
    endpoint ``-half_extent`` maps onto itself.
    """
    return field.with_samples(np.roll(field.samples[::-1], 1))


def fourier_grid(grid: GridSpec, wavelength: float, f: float) -> GridSpec:
    """Grid of the lens back focal plane, paired by ``dx * dp = lambda f / n``."""
    return GridSpec(grid.n_points, wavelength * f / (2.0 * grid.spacing))


def lens_fourier_transform(field: ComplexField, wavelength: float, f: float) -> ComplexField:
    """Field in the back focal plane of a thin lens.

    Evaluates ``(i lambda f)^-1/2 * integral psi(x) exp(-2 pi i x p / (lambda f)) dx``
    on the paired grid. With centred indices ``x_n = (n - N/2) dx`` the kernel
    is the ordinary DFT sandwiched between ``ifftshift``/``fftshift``; the
    leftover factor ``exp(-i pi N / 2)`` is 1 for N a multiple of 4.
    """
    _positive("wavelength", wavelength)
    _positive("f", f)
    g = field.grid
    out_grid = fourier_grid(g, wavelength, f)
    spectrum = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(field.samples)))
    prefactor = g.spacing / np.sqrt(1j * wavelength * f)
    return ComplexField(out_grid, prefactor * spectrum)


# ---------------------------------------------------------------- benches


def apply_position_bench(field: ComplexField, params_or_l, edge: str = "clear") -> ComplexField:
    """Multiply by ``x / l``: a pi phase plate on ``x <= 0`` then ``|x|/l`` attenuation.

    ``params_or_l`` is a :class:`BenchParams` or the half-width ``l`` itself.
    """
    l = params_or_l.l if isinstance(params_or_l, BenchParams) else float(params_or_l)
    _positive("l", l)
    _check_edge(edge)
    g = field.grid
    if l > g.half_extent:
        raise InvalidArgumentError(f"l = {l:g} m exceeds the grid half extent {g.half_extent:g} m")
    frac = _outside_fraction(field, l)
    if frac > CLIP_THRESHOLD:
        warnings.warn(
            f"{frac:.3g} of the power lies outside [-l, l] (l = {l:g} m); "
            "the bench deviates from x/l there",
            ClippingWarning,
            stacklevel=2,
        )
    # with a clear edge the plate must cover the whole x <= 0 half so that
    # the transmission stays odd beyond -l
    lo = -l if edge == "opaque" else -g.half_extent
    shifted = apply_phase_shifter(field, (lo, 0.0), math.pi)
    return apply_linear_attenuator(shifted, l, edge)


def apply_momentum_bench(field: ComplexField, params: BenchParams, edge: str = "clear") -> ComplexField:
    """4f system with the position bench in the Fourier plane.

    Returns ``-i (p~ psi)(x)``; the global ``-i`` is kept, and the image
    inversion of the 4f system is undone by an explicit axis flip.
    """
    return _momentum_bench(field, params.lambda_, params.f, params.l, edge)


def _momentum_bench(field, wavelength, f, l, edge):
    fgrid = fourier_grid(field.grid, wavelength, f)
    if fgrid.half_extent < l:
        raise FourierPlaneCoverageError(
            f"Fourier-plane half extent {fgrid.half_extent:g} m is narrower than l = {l:g} m; "
            "increase n_points or decrease the grid extent"
        )
    spectrum = lens_fourier_transform(field, wavelength, f)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        spectrum = apply_position_bench(spectrum, l, edge)
    for w in caught:
        warnings.warn(f"Fourier plane: {w.message}", w.category, stacklevel=3)
    image = lens_fourier_transform(spectrum, wavelength, f)
    return axis_flip(ComplexField(field.grid, image.samples))


# ---------------------------------------------------------------- element descriptors


@dataclass(frozen=True)
class PhaseShifter:
    region: tuple
    shift: float

    def __post_init__(self):
        lo, hi = self.region
        if not lo <= hi:
            raise InvalidRegionError(f"empty region [{lo}, {hi}]")
        object.__setattr__(self, "region", (float(lo), float(hi)))
        shift = math.fmod(float(self.shift), TWO_PI) % TWO_PI
        # tiny negative shifts wrap to exactly 2 pi
        object.__setattr__(self, "shift", 0.0 if shift >= TWO_PI else shift)

    def apply(self, field):
        return apply_phase_shifter(field, self.region, self.shift)


@dataclass(frozen=True)
class LinearAttenuator:
    l: float
    edge: str = "clear"

    def __post_init__(self):
        _positive("l", self.l)
        _check_edge(self.edge)

    def apply(self, field):
        return apply_linear_attenuator(field, self.l, self.edge)


@dataclass(frozen=True)
class HardAperture:
    l: float

    def __post_init__(self):
        _positive("l", self.l)

    def apply(self, field):
        return apply_hard_aperture(field, self.l)


@dataclass(frozen=True)
class LensFT:
    wavelength: float
    f: float

    def __post_init__(self):
        _positive("wavelength", self.wavelength)
        _positive("f", self.f)

    def apply(self, field):
        return lens_fourier_transform(field, self.wavelength, self.f)


@dataclass(frozen=True)
class AxisFlip:
    def apply(self, field):
        return axis_flip(field)


@dataclass(frozen=True)
class PositionBench:
    l: float
    edge: str = "clear"

    def __post_init__(self):
        _positive("l", self.l)
        _check_edge(self.edge)

    def apply(self, field):
        return apply_position_bench(field, self.l, self.edge)


@dataclass(frozen=True)
class MomentumBench:
    wavelength: float
    f: float
    l: float
    edge: str = "clear"

    def __post_init__(self):
        _positive("wavelength", self.wavelength)
        _positive("f", self.f)
        _positive("l", self.l)
        _check_edge(self.edge)

    @classmethod
    def from_params(cls, params: BenchParams, edge: str = "clear"):
        return cls(params.lambda_, params.f, params.l, edge)

    def apply(self, field):
        return _momentum_bench(field, self.wavelength, self.f, self.l, self.edge)


OpticalElement = Union[
    PhaseShifter, LinearAttenuator, HardAperture, LensFT, AxisFlip, PositionBench, MomentumBench
]


@dataclass(frozen=True)
class ElementPipeline:
    elements: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def count(self, kind) -> int:
        return sum(isinstance(e, kind) for e in self.elements)


def run_pipeline(field: ComplexField, pipeline: ElementPipeline | Sequence) -> ComplexField:
    for i, element in enumerate(pipeline):
        try:
            field = element.apply(field)
        except OpticsError as exc:
            raise PipelineError(i, element, exc) from exc
    return field


def position_pipeline(params: BenchParams, edge: str = "clear") -> ElementPipeline:
    return ElementPipeline((PositionBench(params.l, edge),))


def momentum_pipeline(params: BenchParams, edge: str = "clear") -> ElementPipeline:
    return ElementPipeline((MomentumBench.from_params(params, edge),))
