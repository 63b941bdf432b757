"""Spatial Wigner function of a sampled field.

Convention::

    W(x, k) = (1/pi) * integral conj(psi(x + y)) psi(x - y) exp(2 i k y) dy

with ``k = p / hbar`` in rad/m, so that ``integral W dx dk = 1`` and
``2 pi integral W^2 dx dk = 1`` for a pure state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import IncompatibleAxesError, InvalidArgumentError, PreconditionError
from .field import ComplexField, norm_sq

CONVENTION = "1/pi * integral, k = p/hbar"
MAX_ROWS = 512
REALITY_TOL = 1e-10
_CHUNK = 64


@dataclass(frozen=True, eq=False)
class WignerMap:
    x_axis: np.ndarray
    k_axis: np.ndarray
    values: np.ndarray
    imag_residue: float = 0.0

    @property
    def dx(self) -> float:
        return float(self.x_axis[1] - self.x_axis[0]) if self.x_axis.size > 1 else 1.0

    @property
    def dk(self) -> float:
        return float(self.k_axis[1] - self.k_axis[0])

    def integral(self, values=None) -> float:
        v = self.values if values is None else values
        return float(v.sum() * self.dx * self.dk)

    def position_marginal(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.dk

    def momentum_marginal(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.dx

    def purity(self) -> float:
        return 2.0 * np.pi * self.integral(self.values**2)

    def cropped(self, x_max: float, k_max: float) -> WignerMap:
        xs = np.abs(self.x_axis) <= x_max
        ks = np.abs(self.k_axis) <= k_max
        return WignerMap(self.x_axis[xs], self.k_axis[ks], self.values[np.ix_(xs, ks)], self.imag_residue)

    def to_json(self) -> str:
        payload = {
            "convention": CONVENTION,
            "x_axis": self.x_axis.tolist(),
            "k_axis": self.k_axis.tolist(),
            "shape": list(self.values.shape),
            "layout": "row-major, rows = x, columns = k",
            "values": self.values.ravel().tolist(),
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> WignerMap:
        d = json.loads(text)
        values = np.array(d["values"], dtype=float).reshape(d["shape"])
        return cls(np.array(d["x_axis"]), np.array(d["k_axis"]), values)

    def to_csv(self) -> str:
        lines = ["x_m,k_radpm,w"]
        for x, row in zip(self.x_axis, self.values):
            xs = f"{x:.17g}"
            lines.extend(f"{xs},{k:.17g},{v:.17g}" for k, v in zip(self.k_axis, row))
        return "\n".join(lines) + "\n"


def field_support(field: ComplexField, tol: float = 1e-9):
    """Symmetric ``(x_max, k_max)`` holding all but ``tol`` of the field's power.

    Used to crop Wigner maps for output; ``k`` comes from the field's own
    spectrum rather than from the row-decimated map.
    """
    n = field.grid.n_points
    spectrum = np.abs(np.fft.fftshift(np.fft.fft(np.fft.ifftshift(field.samples)))) ** 2
    k = (np.arange(n) - n // 2) * (2 * np.pi / (n * field.grid.spacing))
    return _symmetric_window(field.x, field.intensity, tol), _symmetric_window(k, spectrum, tol)


def _symmetric_window(axis, weights, tol):
    order = np.argsort(np.abs(axis))
    cum = np.cumsum(weights[order])
    total = cum[-1]
    if total == 0:
        return float(np.abs(axis).max())
    idx = int(np.searchsorted(cum, total * (1.0 - tol)))
    return float(np.abs(axis[order[min(idx, len(order) - 1)]]))


def wigner_transform(field: ComplexField, row_step: int | None = None, norm_tol: float = 1e-9) -> WignerMap:
    """Wigner map of a normalised field.

    Lags are ``y = m dx`` for ``m`` in ``[-n, n)`` with zero padding outside
    the grid, so the lag DFT has length ``M = 2n``. The kernel
    ``exp(2 i k m dx)`` then pairs with ``k_j = j * pi / (M dx)``,
    ``j`` in ``[-M/2, M/2)``. Rows are evaluated every ``row_step`` samples
    (default: at most 512 rows); rows stay on the field grid, so
    ``x = 0`` is always a row.
    """
    n2 = norm_sq(field)
    if abs(n2 - 1.0) > norm_tol:
        raise PreconditionError(f"wigner_transform needs a normalised field, norm_sq = {n2!r}")
    n = field.grid.n_points
    dx = field.grid.spacing
    if row_step is None:
        row_step = max(1, n // MAX_ROWS)
    if row_step < 1 or n % row_step:
        raise InvalidArgumentError(f"row_step must divide {n}, got {row_step}")

    M = 2 * n
    lags = np.arange(-n, n)
    rows = np.arange(0, n, row_step)
    padded = np.zeros(3 * n, dtype=complex)
    padded[n : 2 * n] = field.samples

    values = np.empty((rows.size, M))
    residue = 0.0
    for start in range(0, rows.size, _CHUNK):
        r = rows[start : start + _CHUNK, None] + n
        corr = np.conj(padded[r + lags]) * padded[r - lags]
        # lag 0 to index 0, transform, then centre k
        w = np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(corr, axes=1), axis=1), axes=1)
        w *= M * dx / np.pi
        residue = max(residue, float(np.abs(w.imag).max()))
        values[start : start + w.shape[0]] = w.real

    peak = float(np.abs(values).max())
    if residue > REALITY_TOL * max(peak, 1e-300):
        raise AssertionError(f"Wigner transform imaginary residue {residue:g} exceeds tolerance")
    k_axis = (np.arange(M) - M // 2) * (np.pi / (M * dx))
    return WignerMap(field.x[rows], k_axis, values, residue / max(peak, 1e-300))


@dataclass(frozen=True)
class NegativityMetrics:
    min_value: float
    min_location: tuple
    negative_volume: float
    max_value: float

    def as_dict(self):
        return {
            "min_value": self.min_value,
            "min_location": {"x_m": self.min_location[0], "k_radpm": self.min_location[1]},
            "negative_volume": self.negative_volume,
            "max_value": self.max_value,
        }


def negativity_metrics(wmap: WignerMap) -> NegativityMetrics:
    v = wmap.values
    i, j = np.unravel_index(int(np.argmin(v)), v.shape)
    return NegativityMetrics(
        min_value=float(v[i, j]),
        min_location=(float(wmap.x_axis[i]), float(wmap.k_axis[j])),
        negative_volume=wmap.integral(np.abs(v)) - 1.0,
        max_value=float(v.max()),
    )


def wigner_compare(a: WignerMap, b: WignerMap) -> float:
    """``max|a - b| / max|a|`` over a shared grid."""
    if (
        a.values.shape != b.values.shape
        or not np.allclose(a.x_axis, b.x_axis, rtol=1e-12, atol=0)
        or not np.allclose(a.k_axis, b.k_axis, rtol=1e-12, atol=0)
    ):
        raise IncompatibleAxesError("Wigner maps are sampled on different axes")
    return float(np.abs(a.values - b.values).max() / np.abs(a.values).max())
