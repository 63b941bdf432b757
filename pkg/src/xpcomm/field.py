"""Sampled 1-D transverse wave functions.

Fields carry physical units: coordinates in metres, amplitudes in m^-1/2,
so that ``sum(|psi|^2) * dx`` is a probability.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import constants

from .errors import (
    IncompatibleGridError,
    InvalidArgumentError,
    TruncationRiskError,
    ZeroNormError,
)

MIN_POINTS = 16
GRID_RTOL = 1e-12


def _is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on ``[-half_extent, +half_extent)``.

    Sample ``i`` sits at ``-half_extent + i * spacing``; the upper endpoint is
    excluded so the grid pairs with the FFT.
    """

    n_points: int
    half_extent: float

    def __post_init__(self):
        if isinstance(self.n_points, bool) or not isinstance(self.n_points, (int, np.integer)):
            raise InvalidArgumentError(f"n_points must be an integer, got {self.n_points!r}")
        if self.n_points < MIN_POINTS or not _is_power_of_two(int(self.n_points)):
            raise InvalidArgumentError(
                f"n_points must be a power of two >= {MIN_POINTS}, got {self.n_points}"
            )
        if not (math.isfinite(self.half_extent) and self.half_extent > 0):
            raise InvalidArgumentError(f"half_extent must be positive, got {self.half_extent!r}")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "half_extent", float(self.half_extent))

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / self.n_points

    @property
    def x(self) -> np.ndarray:
        return -self.half_extent + np.arange(self.n_points) * self.spacing

    def compatible(self, other: GridSpec) -> bool:
        return self.n_points == other.n_points and math.isclose(
            self.half_extent, other.half_extent, rel_tol=GRID_RTOL
        )


def make_grid(n_points: int, half_extent: float) -> GridSpec:
    return GridSpec(n_points, half_extent)


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Immutable complex samples on a :class:`GridSpec`.

    Supports ``+``, ``-`` between fields on compatible grids and scaling by
    complex scalars.
    """

    grid: GridSpec
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = np.array(self.samples, dtype=complex)
        if samples.shape != (self.grid.n_points,):
            raise InvalidArgumentError(
                f"expected {self.grid.n_points} samples, got shape {samples.shape}"
            )
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    def with_samples(self, samples) -> ComplexField:
        return ComplexField(self.grid, samples)

    def _check(self, other: ComplexField) -> None:
        if not self.grid.compatible(other.grid):
            raise IncompatibleGridError(f"{self.grid} vs {other.grid}")

    def __add__(self, other):
        if not isinstance(other, ComplexField):
            return NotImplemented
        self._check(other)
        return self.with_samples(self.samples + other.samples)

    def __sub__(self, other):
        if not isinstance(other, ComplexField):
            return NotImplemented
        self._check(other)
        return self.with_samples(self.samples - other.samples)

    def __mul__(self, scalar):
        if isinstance(scalar, ComplexField):
            return NotImplemented
        return self.with_samples(self.samples * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_samples(-self.samples)


@dataclass(frozen=True)
class BenchParams:
    """Physical constants of the scheme, in SI units.

    ``lambda_`` is the wavelength, ``f`` the lens focal length, ``l`` the
    half-width of the attenuator region and ``w`` the Gaussian waist.
    """

    lambda_: float
    f: float
    l: float
    w: float
    hbar: float = constants.hbar

    def __post_init__(self):
        for name in ("lambda_", "f", "l", "w", "hbar"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidArgumentError(f"{name} must be positive, got {value!r}")

    @property
    def C(self) -> float:
        """Dimensionless commutator constant, ``[x~, p~] = iC``."""
        return self.lambda_ * self.f / (2.0 * math.pi * self.l**2)

    @property
    def momentum_scale(self) -> float:
        """``p~ = momentum_scale * p``, with ``p`` in SI units."""
        return self.lambda_ * self.f / (2.0 * math.pi * self.hbar * self.l)


DEFAULT_PARAMS = BenchParams(lambda_=800e-9, f=0.5, l=1.5e-3, w=0.5e-3)
DEFAULT_GRID = GridSpec(4096, 6e-3)


def gaussian_samples(x: np.ndarray, w: float, center: float = 0.0) -> np.ndarray:
    return (2.0 / (math.pi * w**2)) ** 0.25 * np.exp(-((x - center) ** 2) / w**2)


def gaussian_input(grid: GridSpec, w: float) -> ComplexField:
    if not w > 0:
        raise InvalidArgumentError(f"waist must be positive, got {w!r}")
    if grid.half_extent < 4.0 * w:
        raise TruncationRiskError(
            f"grid half extent {grid.half_extent:g} m is below 4w = {4 * w:g} m"
        )
    return ComplexField(grid, gaussian_samples(grid.x, w))


def norm_sq(field: ComplexField) -> float:
    return float(np.sum(np.abs(field.samples) ** 2) * field.grid.spacing)


def normalize(field: ComplexField) -> ComplexField:
    n2 = norm_sq(field)
    if not n2 > 1e-300:
        raise ZeroNormError("cannot normalize a field with zero norm")
    return field.with_samples(field.samples / math.sqrt(n2))


def inner(a: ComplexField, b: ComplexField) -> complex:
    """``<a|b> = sum(conj(a) * b) dx``."""
    if not a.grid.compatible(b.grid):
        raise IncompatibleGridError(f"{a.grid} vs {b.grid}")
    return complex(np.vdot(a.samples, b.samples) * a.grid.spacing)


def fidelity(a: ComplexField, b: ComplexField) -> float:
    overlap = inner(a, b)
    denom = norm_sq(a) * norm_sq(b)
    if not denom > 0:
        raise ZeroNormError("fidelity is undefined for zero fields")
    return abs(overlap) ** 2 / denom


def relative_l2(a: ComplexField, ref: ComplexField) -> float:
    """``||a - ref|| / ||ref||``."""
    return math.sqrt(norm_sq(a - ref) / norm_sq(ref))


def relative_l2_phase_free(a: ComplexField, ref: ComplexField) -> float:
    """Relative L2 distance after removing the best-fit global phase of ``a``."""
    overlap = inner(a, ref)
    phase = overlap / abs(overlap) if overlap != 0 else 1.0
    return relative_l2(a * phase, ref)


def write_field_csv(field: ComplexField, path) -> None:
    """Write ``x_m,re,im`` rows in ascending x at 17 significant digits."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(field_csv_text(field))


def field_csv_text(field: ComplexField) -> str:
    lines = ["x_m,re,im"]
    for x, z in zip(field.x, field.samples):
        lines.append(f"{x:.17g},{z.real:.17g},{z.imag:.17g}")
    return "\n".join(lines) + "\n"


def read_field_csv(path) -> ComplexField:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["x_m", "re", "im"]:
            raise InvalidArgumentError(f"unexpected field CSV header {header}")
        rows = [(float(x), float(re), float(im)) for x, re, im in reader]
    data = np.array(rows)
    grid = GridSpec(len(rows), -data[0, 0])
    if not np.allclose(grid.x, data[:, 0], rtol=0, atol=grid.spacing * 1e-9):
        raise InvalidArgumentError("CSV x column is not a uniform FFT grid")
    return ComplexField(grid, data[:, 1] + 1j * data[:, 2])
