"""Simulation of an interferometric test of position/momentum non-commutativity."""

from .bench import BenchDocument, BenchParseError, default_document, parse_bench, render_bench
from .elements import (
    ElementPipeline,
    apply_momentum_bench,
    apply_position_bench,
    lens_fourier_transform,
    run_pipeline,
)
from .field import (
    DEFAULT_GRID,
    DEFAULT_PARAMS,
    BenchParams,
    ComplexField,
    GridSpec,
    fidelity,
    gaussian_input,
    make_grid,
    norm_sq,
    normalize,
)
from .interferometer import (
    InterferometerSpec,
    default_spec,
    phase_sweep,
    port_switch_check,
    run_interferometer,
)
from .wigner import negativity_metrics, wigner_compare, wigner_transform

__version__ = "0.1.0"

__all__ = [
    "BenchDocument",
    "BenchParams",
    "BenchParseError",
    "ComplexField",
    "ElementPipeline",
    "GridSpec",
    "InterferometerSpec",
    "DEFAULT_GRID",
    "DEFAULT_PARAMS",
    "apply_momentum_bench",
    "apply_position_bench",
    "default_document",
    "default_spec",
    "fidelity",
    "gaussian_input",
    "lens_fourier_transform",
    "make_grid",
    "negativity_metrics",
    "norm_sq",
    "normalize",
    "parse_bench",
    "phase_sweep",
    "port_switch_check",
    "render_bench",
    "run_interferometer",
    "run_pipeline",
    "wigner_compare",
    "wigner_transform",
]
