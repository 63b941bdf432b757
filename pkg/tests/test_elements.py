import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from xpcomm.elements import (
    AxisFlip,
    ElementPipeline,
    HardAperture,
    LensFT,
    LinearAttenuator,
    MomentumBench,
    PhaseShifter,
    PositionBench,
    apply_hard_aperture,
    apply_linear_attenuator,
    apply_momentum_bench,
    apply_phase_shifter,
    apply_position_bench,
    axis_flip,
    fourier_grid,
    lens_fourier_transform,
    run_pipeline,
)
from xpcomm.errors import (
    ClippingWarning,
    FourierPlaneCoverageError,
    InvalidArgumentError,
    InvalidRegionError,
    PipelineError,
)
from xpcomm.field import (
    BenchParams,
    ComplexField,
    GridSpec,
    fidelity,
    gaussian_input,
    gaussian_samples,
    norm_sq,
    normalize,
    relative_l2,
)

L = 1.5e-3
W = 0.5e-3


def _sample_index(field, x):
    i = int(np.argmin(np.abs(field.x - x)))
    assert field.x[i] == pytest.approx(x, abs=1e-15)
    return i


# ---------------------------------------------------------------- phase shifter


def test_phase_shifter_flips_left_half(psi):
    out = apply_phase_shifter(psi, (-L, 0.0), math.pi)
    left, right = _sample_index(psi, -0.75e-3 + 0.0), _sample_index(psi, 0.75e-3)
    # -l/2 and +l/2 land on samples because l/2 = 256 spacings
    assert out.samples[left] == pytest.approx(-psi.samples[left], abs=1e-15)
    assert out.samples[right] == psi.samples[right]
    assert abs(norm_sq(out) - norm_sq(psi)) < 1e-12


def test_phase_shifter_zero_and_full_turn(psi):
    assert np.array_equal(apply_phase_shifter(psi, (-L, 0.0), 0.0).samples, psi.samples)
    full = apply_phase_shifter(psi, (-L, 0.0), 2 * math.pi)
    np.testing.assert_allclose(full.samples, psi.samples, rtol=0, atol=1e-12)


def test_phase_shifter_region_outside_grid(psi):
    with pytest.raises(InvalidRegionError):
        apply_phase_shifter(psi, (-7e-3, 0.0), math.pi)


def test_phase_shifter_descriptor_wraps_shift():
    assert PhaseShifter((-L, 0.0), 5 * math.pi).shift == pytest.approx(math.pi, abs=1e-12)
    assert PhaseShifter((-L, 0.0), -math.pi / 2).shift == pytest.approx(1.5 * math.pi, abs=1e-12)
    with pytest.raises(InvalidRegionError):
        PhaseShifter((1e-3, -1e-3), 1.0)


# ---------------------------------------------------------------- attenuator


@pytest.mark.parametrize("edge", ["clear", "opaque"])
def test_attenuator_centre_and_edges(psi, edge):
    out = apply_linear_attenuator(psi, L, edge)
    i0, ip, im = (_sample_index(psi, v) for v in (0.0, L, -L))
    assert out.samples[i0] == 0
    assert abs(out.samples[ip]) == pytest.approx(abs(psi.samples[ip]), rel=1e-15)
    assert abs(out.samples[im]) == pytest.approx(abs(psi.samples[im]), rel=1e-15)


def test_attenuator_uniform_power_third(grid):
    inside = np.abs(grid.x) <= L
    uniform = ComplexField(grid, inside.astype(complex))
    ratio = norm_sq(apply_linear_attenuator(uniform, L)) / norm_sq(uniform)
    # l = 512 spacings: brute-force sum of (m/512)^2 over m = -512..512
    m = np.arange(-512, 513)
    brute = float(np.sum((m / 512.0) ** 2) / m.size)
    assert ratio == pytest.approx(brute, rel=1e-13)
    assert brute == pytest.approx(513 / 1536, rel=1e-15)
    assert abs(ratio - 1 / 3) < 1e-3


def test_attenuator_edge_models(grid):
    ones = ComplexField(grid, np.ones(grid.n_points, dtype=complex))
    far = np.abs(grid.x) > L
    clear = apply_linear_attenuator(ones, L, "clear")
    opaque = apply_linear_attenuator(ones, L, "opaque")
    assert np.all(clear.samples[far] == 1)
    assert np.all(opaque.samples[far] == 0)
    assert np.all(np.abs(clear.samples) <= 1) and np.all(np.abs(opaque.samples) <= 1)


def test_hard_aperture(psi):
    out = apply_hard_aperture(psi, 0.5e-3)
    assert np.all(out.samples[np.abs(psi.x) > 0.5e-3] == 0)
    inside = np.abs(psi.x) <= 0.5e-3
    assert np.array_equal(out.samples[inside], psi.samples[inside])


def test_attenuator_rejects_bad_edge(psi):
    with pytest.raises(InvalidArgumentError):
        apply_linear_attenuator(psi, L, "grey")


# ---------------------------------------------------------------- position bench


def test_position_bench_antisymmetric(psi):
    out = apply_position_bench(psi, L)
    s = out.samples
    # sample i pairs with n - i; index 0 (x = -H) has no partner
    np.testing.assert_allclose(s[1:], -s[1:][::-1], rtol=0, atol=1e-12 * np.abs(s).max())


def test_position_bench_power_ratio_against_quadrature(psi):
    out = apply_position_bench(psi, L)
    ratio = norm_sq(out) / norm_sq(psi)

    def density(x):
        return math.sqrt(2 / math.pi) / W * math.exp(-2 * x * x / W**2)

    inside, _ = integrate.quad(lambda x: (x / L) ** 2 * density(x), -L, L, epsabs=1e-14)
    outside = special.erfc(math.sqrt(2) * L / W)
    assert ratio == pytest.approx(inside + outside, rel=1e-9)
    # the untruncated second moment gives w^2 / (4 l^2)
    assert ratio == pytest.approx(W**2 / (4 * L**2), rel=1e-6)
    assert W**2 / (4 * L**2) == pytest.approx(0.027778, abs=1e-6)


@pytest.mark.parametrize("edge", ["clear", "opaque"])
def test_position_bench_is_direct_multiplier(psi, edge):
    out = apply_position_bench(psi, L, edge)
    inside = np.abs(psi.x) <= L
    direct = psi.x[inside] / L * psi.samples[inside]
    np.testing.assert_allclose(out.samples[inside], direct, rtol=0, atol=1e-12)


def test_position_bench_composed_twice(psi):
    twice = apply_position_bench(apply_position_bench(psi, L), L)
    inside = np.abs(psi.x) <= L
    np.testing.assert_allclose(twice.samples[inside], (psi.x[inside] / L) ** 2 * psi.samples[inside], rtol=0, atol=1e-12)


def test_position_bench_opaque_truncates(psi):
    wide = psi.with_samples(np.ones(psi.grid.n_points, dtype=complex))
    with pytest.warns(ClippingWarning):
        out = apply_position_bench(wide, L, "opaque")
    assert np.all(out.samples[np.abs(psi.x) > L] == 0)


def test_position_bench_errors_and_warnings(grid):
    wide = gaussian_input(grid, 1.4e-3)
    with pytest.warns(ClippingWarning, match="outside"):
        apply_position_bench(wide, L)
    with pytest.raises(InvalidArgumentError):
        apply_position_bench(wide, 7e-3)


def test_position_bench_silent_for_contained_field(psi):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        apply_position_bench(psi, L)


def test_position_bench_accepts_params(psi, params):
    a = apply_position_bench(psi, params)
    b = apply_position_bench(psi, params.l)
    assert np.array_equal(a.samples, b.samples)


# ---------------------------------------------------------------- lens


def test_lens_gaussian_waist(psi, params):
    out = lens_fourier_transform(psi, params.lambda_, params.f)
    w_f = params.lambda_ * params.f / (math.pi * W)
    assert w_f == pytest.approx(0.2546e-3, rel=1e-3)
    p = out.intensity / out.intensity.sum()
    mean = float(np.sum(p * out.x))
    fitted = 2 * math.sqrt(float(np.sum(p * (out.x - mean) ** 2)))
    assert abs(mean) < 1e-12
    assert fitted == pytest.approx(w_f, rel=1e-6)


def test_lens_matches_analytic_pair(psi, params):
    lam_f = params.lambda_ * params.f
    out = lens_fourier_transform(psi, params.lambda_, params.f)
    p = out.x
    amp = (2 / (math.pi * W**2)) ** 0.25 * math.sqrt(math.pi) * W
    exact = amp / np.sqrt(1j * lam_f) * np.exp(-((math.pi * W * p / lam_f) ** 2))
    assert np.linalg.norm(out.samples - exact) / np.linalg.norm(exact) < 1e-9


def test_lens_output_grid(psi, params):
    out = lens_fourier_transform(psi, params.lambda_, params.f)
    lam_f = params.lambda_ * params.f
    assert out.grid.spacing == pytest.approx(lam_f / (psi.grid.n_points * psi.grid.spacing), rel=1e-14)
    assert out.grid.half_extent == pytest.approx(psi.grid.n_points * out.grid.spacing / 2, rel=1e-14)
    assert fourier_grid(psi.grid, params.lambda_, params.f) == out.grid


def test_lens_parseval(rng, params):
    grid = GridSpec(1024, 3e-3)
    f = ComplexField(grid, rng.normal(size=1024) + 1j * rng.normal(size=1024))
    out = lens_fourier_transform(f, params.lambda_, params.f)
    assert abs(norm_sq(out) - norm_sq(f)) <= 1e-9 * norm_sq(f)


def test_lens_twice_is_parity(grid, params):
    f = ComplexField(grid, gaussian_samples(grid.x, 0.3e-3, 0.4e-3) * np.exp(2j * grid.x / 1e-3))
    f = normalize(f)
    twice = lens_fourier_transform(lens_fourier_transform(f, params.lambda_, params.f), params.lambda_, params.f)
    back = ComplexField(grid, twice.samples)
    assert fidelity(back, axis_flip(f)) == pytest.approx(1.0, abs=1e-9)
    # the unimodular factor is -i: two factors of (i lambda f)^-1/2
    ratio = back.samples[np.argmax(np.abs(back.samples))] / axis_flip(f).samples[np.argmax(np.abs(back.samples))]
    assert ratio == pytest.approx(-1j, abs=1e-9)


def test_axis_flip_pairs_samples(grid):
    flipped = axis_flip(ComplexField(grid, grid.x.astype(complex)))
    np.testing.assert_allclose(flipped.samples[1:].real, -grid.x[1:], rtol=0, atol=1e-18)
    assert flipped.samples[0] == grid.x[0]


# ---------------------------------------------------------------- momentum bench


def _scale(params):
    return params.lambda_ * params.f / (2 * math.pi * params.l)


def test_momentum_bench_gaussian_closed_form(psi, params):
    out = apply_momentum_bench(psi, params)
    # -i p~ psi with p~ psi = (lambda f / 2 pi l) (2 i x / w^2) psi
    exact = psi.with_samples(_scale(params) * (2 * psi.x / W**2) * psi.samples)
    assert relative_l2(out, exact) < 1e-6
    assert fidelity(out, exact) >= 1 - 1e-6
    assert abs(out.samples[psi.grid.n_points // 2]) < 1e-12 * np.abs(out.samples).max()


def test_momentum_bench_finite_differences(psi, params):
    out = apply_momentum_bench(psi, params)
    s, dx = psi.samples, psi.grid.spacing
    deriv = np.zeros_like(s)
    deriv[1:-1] = (s[2:] - s[:-2]) / (2 * dx)
    # (lambda f / 2 pi l) (-i d/dx) psi, times the bench's -i
    expected = psi.with_samples(-_scale(params) * deriv)
    assert relative_l2(out, expected) <= 1e-4


def test_momentum_bench_flips_parity(psi, params):
    odd = normalize(psi.with_samples(psi.x * psi.samples))
    out = apply_momentum_bench(odd, params).samples
    np.testing.assert_allclose(out[1:], out[1:][::-1], rtol=0, atol=1e-10 * np.abs(out).max())


def test_momentum_bench_coverage_error(params):
    coarse = gaussian_input(GridSpec(64, 6e-3), 0.5e-3)
    with pytest.raises(FourierPlaneCoverageError):
        apply_momentum_bench(coarse, params)


def test_momentum_bench_fourier_clipping_warning(params):
    grid = GridSpec(4096, 6e-3)
    narrow = gaussian_input(grid, 0.05e-3)  # w_F = 2.5 mm > l
    with pytest.warns(ClippingWarning, match="Fourier plane"):
        apply_momentum_bench(narrow, params)


# ---------------------------------------------------------------- pipelines


def test_empty_pipeline_identity(psi):
    assert run_pipeline(psi, ElementPipeline()) is psi


def test_singleton_pipeline(psi):
    out = run_pipeline(psi, [PositionBench(L)])
    assert np.array_equal(out.samples, apply_position_bench(psi, L).samples)


def test_primitive_pipeline_equals_position_bench(psi, params):
    pipe = ElementPipeline((PhaseShifter((-psi.grid.half_extent, 0.0), math.pi), LinearAttenuator(L)))
    np.testing.assert_allclose(run_pipeline(psi, pipe).samples, apply_position_bench(psi, L).samples, rtol=0, atol=1e-15)


def test_primitive_pipeline_equals_momentum_bench(psi, params):
    lens = LensFT(params.lambda_, params.f)
    # the position bench acts on the Fourier-plane grid; a plain phase shifter
    # there needs that grid's extent
    fg = fourier_grid(psi.grid, params.lambda_, params.f)
    pipe = ElementPipeline(
        (lens, PhaseShifter((-fg.half_extent, 0.0), math.pi), LinearAttenuator(L), lens, AxisFlip())
    )
    out = run_pipeline(psi, pipe)
    ref = apply_momentum_bench(psi, params)
    np.testing.assert_allclose(out.samples, ref.samples, rtol=0, atol=1e-12 * np.abs(ref.samples).max())


def test_xp_pipeline_closed_form(psi, params):
    out = run_pipeline(psi, [MomentumBench.from_params(params), PositionBench(L)])
    C = params.C
    expected = psi.with_samples(-1j * 1j * (2 * C / W**2) * psi.x**2 * psi.samples)
    assert relative_l2(out, expected) < 1e-4


def test_pipeline_error_carries_index(psi, params):
    pipe = [AxisFlip(), PositionBench(L), PhaseShifter((-9e-3, 0.0), 1.0)]
    with pytest.raises(PipelineError) as info:
        run_pipeline(psi, pipe)
    assert info.value.index == 2
    assert isinstance(info.value.cause, InvalidRegionError)


# ---------------------------------------------------------------- invariants


def _hermite1(grid, w):
    return normalize(ComplexField(grid, grid.x * gaussian_samples(grid.x, w)))


def _displaced(grid, w, shift):
    return normalize(ComplexField(grid, gaussian_samples(grid.x, w, shift)))


@pytest.mark.parametrize(
    "make",
    [
        lambda g: gaussian_input(g, 0.5e-3),
        lambda g: _hermite1(g, 0.4e-3),
        lambda g: _displaced(g, 0.35e-3, 0.35e-3),
        lambda g: _displaced(g, 0.35e-3, -0.2e-3),
    ],
    ids=["gaussian", "hermite1", "displaced_right", "displaced_left"],
)
def test_commutator_identity(grid, params, make):
    f = make(grid)
    xp = run_pipeline(f, [MomentumBench.from_params(params), PositionBench(L)])
    px = run_pipeline(f, [PositionBench(L), MomentumBench.from_params(params)])
    assert relative_l2(xp - px, f * params.C) <= 1e-4


def test_opaque_edge_commutator_error(grid, params, psi):
    """With the truncating edge the identity only holds to about 1e-3."""
    xp = run_pipeline(psi, [MomentumBench.from_params(params, "opaque"), PositionBench(L, "opaque")])
    px = run_pipeline(psi, [PositionBench(L, "opaque"), MomentumBench.from_params(params, "opaque")])
    err = relative_l2(xp - px, psi * params.C)
    assert 1e-4 < err < 2e-3


_GRID = GridSpec(1024, 3e-3)
_PARAMS = BenchParams(lambda_=800e-9, f=0.5, l=1.5e-3, w=0.5e-3)
_ELEMENTS = [
    PhaseShifter((-1e-3, 0.5e-3), 1.3),
    LinearAttenuator(1e-3),
    LinearAttenuator(1e-3, "opaque"),
    HardAperture(0.7e-3),
    LensFT(800e-9, 0.5),
    AxisFlip(),
    PositionBench(1.5e-3),
    PositionBench(1.5e-3, "opaque"),
    MomentumBench.from_params(_PARAMS),
    MomentumBench.from_params(_PARAMS, "opaque"),
]


@given(
    re=st.lists(st.floats(-1, 1), min_size=8, max_size=8),
    im=st.lists(st.floats(-1, 1), min_size=8, max_size=8),
    chain=st.lists(st.sampled_from(range(len(_ELEMENTS))), min_size=1, max_size=4),
)
@settings(max_examples=150, deadline=None)
def test_passivity(re, im, chain):
    # smooth random field: a few Hermite-Gauss-like components
    x = _GRID.x / 0.4e-3
    samples = sum((a + 1j * b) * x**k for k, (a, b) in enumerate(zip(re, im))) * np.exp(-x * x / 2)
    field = ComplexField(_GRID, samples)
    before = norm_sq(field)
    if before == 0:
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClippingWarning)
        for i in chain:
            out = _ELEMENTS[i].apply(field)
            assert norm_sq(out) <= norm_sq(field) * (1 + 1e-9)
            if isinstance(_ELEMENTS[i], LensFT):
                out = ComplexField(_GRID, out.samples)
            field = out
    assert norm_sq(field) <= before * (1 + 1e-9)
