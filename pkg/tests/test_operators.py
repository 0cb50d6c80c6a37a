import math
import warnings

import numpy as np
import pytest

from affine_synth._accel import HAVE_NUMBA
from affine_synth.geometry import Box, DilationSchedule, Lattice, dyadic_schedule
from affine_synth.grids import (Grid, GridField, field_from_function, grid1d,
                                lp_norm, mean_value)
from affine_synth.operators import (CommensurabilityError, CoverageError,
                                    MassLossError, OperatorContext, analyze,
                                    analyze_scale, cesaro_partials,
                                    construct_coefficients,
                                    deriv_synth_commutator_residual,
                                    diff_analysis_commutator_residual,
                                    frame_reconstruct, mask_adapted,
                                    quasi_interpolant,
                                    riesz_analysis_commutator_residual,
                                    riesz_synth_commutator_residual,
                                    scale_averaged_approx, synthesize,
                                    synthesize_scale)
from affine_synth.sequences import (CoeffArray, mixed_norm, seq_norm)
from affine_synth.synthesizers import (NormParams, bandlimited, bspline_form,
                                       gaussian, indicator_cell, tent)

LAT = Lattice((1.0,))


def make_ctx(p=2.0, box=8.0, n=1 << 12, J=4, psi=None, phi=None, lat=LAT):
    g = grid1d(-box, box, n)
    sched = dyadic_schedule(2, J)
    return OperatorContext(psi or indicator_cell(lat),
                           phi or indicator_cell(lat),
                           lat, sched, NormParams(p), g)


def gauss_field(grid, center=0.0, width=1.0):
    return field_from_function(
        grid, lambda x: np.exp(-np.pi * ((x - center) / width) ** 2))


# ---------------------------------------------------------------------------
# synthesis
# ---------------------------------------------------------------------------


def test_synthesize_scale_single_delta():
    ctx = make_ctx()
    f = synthesize_scale(ctx, 1, {(0,): 1.0})
    x = ctx.grid.axes()[0]
    expected = np.where((x >= 0) & (x < 0.5), math.sqrt(2), 0.0)
    assert np.array_equal(f.values.real, expected)
    assert abs(lp_norm(f, 2) - 1.0) < 1e-14  # norm-preserving rescaling


def test_synthesize_scale_abutting_translates():
    ctx = make_ctx()
    f = synthesize_scale(ctx, 1, {(0,): 1.0, (1,): 1.0})
    x = ctx.grid.axes()[0]
    expected = np.where((x >= 0) & (x < 1.0), math.sqrt(2), 0.0)
    assert np.array_equal(f.values.real, expected)
    assert abs(lp_norm(f, 2) - math.sqrt(2)) < 1e-14


def test_synthesize_scale_zero():
    ctx = make_ctx()
    assert lp_norm(synthesize_scale(ctx, 1, {}), 2) == 0.0


def test_synthesize_mass_loss_error():
    ctx = make_ctx(box=4.0, n=1 << 10)
    with pytest.raises(MassLossError):
        synthesize_scale(ctx, 1, {(100,): 1.0})


def test_synthesize_norm_equality_case():
    # hand-checkable equality case of the synthesis norm
    ctx = make_ctx()
    c = CoeffArray(({(0,): 1.0, (1,): 1.0},))
    f = synthesize(ctx, c)
    assert abs(mixed_norm(c, 2) - lp_norm(f, 2)) < 1e-14


def test_synthesize_retains_scales():
    ctx = make_ctx()
    c = CoeffArray(({(0,): 1.0}, {(0,): 1.0}))
    total, parts = synthesize(ctx, c, return_scales=True)
    assert len(parts) == 2
    recon = parts[0].values + parts[1].values
    assert np.array_equal(total.values, recon)


def test_synthesis_bound_instance():
    # || Sc ||_p <= |det b|^{-1} || P|psi| ||_{L^p(bC)} || c ||_{l1(lp)}
    from affine_synth.synthesizers import periodization_majorant_norm

    rng = np.random.Generator(np.random.PCG64(21))
    for psi in (indicator_cell(LAT, normalized=False), tent(LAT),
                gaussian(LAT)):
        ctx = make_ctx(psi=psi)
        for p in (1.0, 2.0, 4.0):
            ctx_p = make_ctx(p=p, psi=psi)
            c = CoeffArray((
                {(int(k),): complex(rng.normal(), rng.normal())
                 for k in rng.integers(0, 6, size=4)},
                {(int(k),): complex(rng.normal(), rng.normal())
                 for k in rng.integers(0, 6, size=4)}))
            lhs = lp_norm(synthesize(ctx_p, c), p)
            bound = periodization_majorant_norm(psi, LAT, p) * mixed_norm(c, p)
            assert lhs <= bound * (1 + 1e-6) + 1e-9


def test_homogeneity():
    ctx = make_ctx()
    c = CoeffArray(({(0,): 1.0, (2,): -0.5},))
    f1 = synthesize(ctx, CoeffArray(({k: 5.0 * v for k, v in
                                      c.scale(1).items()},)))
    f2 = synthesize(ctx, c)
    assert np.abs(f1.values - 5.0 * f2.values).max() < 1e-12


# ---------------------------------------------------------------------------
# analysis
# ---------------------------------------------------------------------------


def test_analyze_scale_half_cell_overlaps():
    ctx = make_ctx(p=2.0)
    g = ctx.grid
    f = field_from_function(g, lambda x: ((x >= 0) & (x < 1)).astype(float))
    s = analyze_scale(ctx, 1, f)
    assert set(s) == {(0,), (1,)}
    assert abs(s[(0,)] - 2 ** -0.5) < 1e-14
    assert abs(s[(1,)] - 2 ** -0.5) < 1e-14
    assert abs(seq_norm(s, 2.0) - 1.0) < 1e-14  # attains the analysis bound


def test_analyze_scale_zero_field():
    ctx = make_ctx()
    f = GridField(ctx.grid, np.zeros(ctx.grid.n))
    assert analyze_scale(ctx, 1, f) == {}


def test_analyze_scale_p1_no_rescaling():
    ctx = make_ctx(p=1.0)
    f = field_from_function(ctx.grid,
                            lambda x: ((x >= 0) & (x < 1)).astype(float))
    s = analyze_scale(ctx, 1, f)
    assert abs(s[(0,)] - 0.5) < 1e-14
    assert abs(s[(1,)] - 0.5) < 1e-14
    assert abs(seq_norm(s, 1.0) - 1.0) < 1e-14


def test_analyze_stacks_scales():
    ctx = make_ctx()
    f = gauss_field(ctx.grid)
    c = analyze(ctx, f, 3)
    assert c.J == 3
    for j in (1, 2, 3):
        assert c.scale(j) == analyze_scale(ctx, j, f)


def test_analyze_coverage_error_for_live_boundary():
    ctx = make_ctx(box=2.0, n=1 << 9)
    f = field_from_function(ctx.grid, lambda x: np.ones_like(x))
    with pytest.raises(CoverageError):
        analyze_scale(ctx, 1, f)


def test_commensurability_guard():
    # scale 8 shifts are half a sample on this grid
    g = grid1d(-32, 32, 1 << 13)
    ctx = OperatorContext(indicator_cell(LAT), indicator_cell(LAT), LAT,
                          dyadic_schedule(2, 8), NormParams(2.0), g)
    with pytest.raises(CommensurabilityError):
        synthesize_scale(ctx, 8, {(0,): 1.0})


# ---------------------------------------------------------------------------
# quasi-interpolation, averaging, witnesses
# ---------------------------------------------------------------------------


def test_quasi_interpolant_reproduces_constants_in_core():
    ctx = make_ctx()
    g = ctx.grid
    f = field_from_function(g, lambda x: ((x >= -4) & (x < 4)).astype(float))
    out = quasi_interpolant(ctx, f, 2)
    x = g.axes()[0]
    core = (x >= -3) & (x < 3)
    assert np.abs(out.values[core] - 1.0).max() < 1e-12


def test_scale_average_j1_is_quasi_interpolant():
    ctx = make_ctx()
    f = gauss_field(ctx.grid)
    a = scale_averaged_approx(ctx, f, 1)
    b = quasi_interpolant(ctx, f, 1)
    assert np.array_equal(a.values, b.values)


def test_scale_average_warns_without_certificate():
    g = grid1d(-8, 8, 1 << 12)
    sched = DilationSchedule((2.0, 4.0))  # no exponential certificate stored
    ctx = OperatorContext(indicator_cell(LAT), indicator_cell(LAT), LAT,
                          sched, NormParams(2.0), g)
    with pytest.warns(UserWarning):
        scale_averaged_approx(ctx, gauss_field(g), 2)


def test_construct_coefficients_zero():
    ctx = make_ctx()
    c = construct_coefficients(ctx, GridField(ctx.grid,
                                              np.zeros(ctx.grid.n)), 3)
    assert all(not s for s in c.scales)


def test_construct_coefficients_norm_bound_and_convergence():
    ctx = make_ctx(J=8, n=1 << 13)
    f = gauss_field(ctx.grid)
    fnorm = lp_norm(f, 2)
    errs = {}
    for J in (2, 8):
        c = construct_coefficients(ctx, f, J)
        assert mixed_norm(c, 2) <= fnorm * (1 + 1e-6)
        errs[J] = lp_norm(synthesize(ctx, c) - f, 2) / fnorm
    assert errs[8] <= 0.5 * errs[2]


def test_mask_adapted_identity_and_empty():
    ctx = make_ctx()
    c = CoeffArray(({(0,): 1.0, (3,): 2.0},))
    big = Box((-100.0,), (100.0,))
    assert mask_adapted(ctx, c, big).scale(1) == c.scale(1)
    sliver = Box((0.0,), (1e-6,))
    assert mask_adapted(ctx, c, sliver).scale(1) == {}


def test_mask_adapted_support_arithmetic():
    # alpha = 2, b = 1, omega = [0,1): psi_{1,k} support [k/2, (k+1)/2)
    ctx = make_ctx()
    omega = Box((0.0,), (1.0,))
    c = CoeffArray(({(k,): 1.0 for k in range(-3, 5)},))
    kept = mask_adapted(ctx, c, omega).scale(1)
    assert set(kept) == {(0,), (1,)}


def test_mask_adapted_synthesis_vanishes_outside_exactly():
    ctx = make_ctx()
    omega = Box((-2.0,), (2.0,))
    f = gauss_field(ctx.grid, width=0.5)
    c = mask_adapted(ctx, construct_coefficients(ctx, f, 4), omega)
    g = synthesize(ctx, c)
    x = ctx.grid.axes()[0]
    outside = (x < -2.0) | (x >= 2.0)
    assert np.abs(g.values[outside]).max() == 0.0


def test_mask_adapted_rejects_unbounded():
    ctx = make_ctx(psi=gaussian(LAT))
    c = CoeffArray(({(0,): 1.0},))
    with pytest.raises(ValueError):
        mask_adapted(ctx, c, Box((-1.0,), (1.0,)))


# ---------------------------------------------------------------------------
# commutation identities
# ---------------------------------------------------------------------------


def riesz_ctx(n=1 << 13, box=32.0):
    g = grid1d(-box, box, n)
    return OperatorContext(gaussian(LAT), bandlimited(LAT), LAT,
                           dyadic_schedule(2, 6), NormParams(1.0), g)


def test_riesz_synth_zero_sequence():
    assert riesz_synth_commutator_residual(riesz_ctx(), {}) == 0.0


def test_riesz_synth_residual_and_homogeneity():
    ctx = riesz_ctx()
    s = {(0,): 1.0, (1,): -1.0}
    r = riesz_synth_commutator_residual(ctx, s)
    assert r < 1e-3
    r5 = riesz_synth_commutator_residual(ctx, {(0,): 5.0, (1,): -5.0})
    assert abs(r - r5) < 1e-12


def test_riesz_synth_rejects_nonzero_mean():
    with pytest.raises(ValueError):
        riesz_synth_commutator_residual(riesz_ctx(), {(0,): 1.0})


def test_riesz_analysis_zero_field():
    ctx = riesz_ctx()
    f = GridField(ctx.grid, np.zeros(ctx.grid.n))
    assert riesz_analysis_commutator_residual(ctx, f, 1) == 0.0


def test_riesz_analysis_needs_bandlimited_analyzer():
    ctx = make_ctx(p=1.0, psi=gaussian(LAT))
    f = gauss_field(ctx.grid)
    with pytest.raises(ValueError):
        riesz_analysis_commutator_residual(ctx, f, 1)


def test_riesz_analysis_sign_necessity():
    g = grid1d(-32, 32, 1 << 13)
    sched = DilationSchedule((-2.0, 4.0, -8.0))
    ctx = OperatorContext(gaussian(LAT), bandlimited(LAT), LAT, sched,
                          NormParams(1.0), g)
    f = field_from_function(g, lambda x: np.exp(-np.pi * (x - 1) ** 2)
                            - np.exp(-np.pi * (x + 1) ** 2))
    with_sign = riesz_analysis_commutator_residual(ctx, f, 1)
    without = riesz_analysis_commutator_residual(ctx, f, 1, drop_sign=True)
    assert with_sign < 1e-3
    assert without > 100 * with_sign


def test_deriv_synth_rho_zero_exact():
    ctx = make_ctx(psi=bspline_form(1, indicator_cell(LAT)))
    c = CoeffArray(({(0,): 1.0},))
    assert deriv_synth_commutator_residual(ctx, 1, (0,), c) == 0.0


def test_deriv_synth_m2_residual_decreases_under_refinement():
    c = CoeffArray(({(0,): 1.0, (3,): -0.5}, {(1,): 0.7}))
    res = {}
    for n in (1 << 13, 1 << 14):
        g = grid1d(-8, 8, n)
        ctx = OperatorContext(bspline_form(2, indicator_cell(LAT)),
                              indicator_cell(LAT), LAT, dyadic_schedule(2, 4),
                              NormParams(2.0), g)
        res[n] = deriv_synth_commutator_residual(ctx, 2, (1,), c)
    assert res[1 << 14] < 0.5 * res[1 << 13]
    assert res[1 << 14] < 1e-3


def test_deriv_synth_validation():
    ctx = make_ctx(psi=bspline_form(1, indicator_cell(LAT)))
    c = CoeffArray(({(0,): 1.0},))
    with pytest.raises(ValueError):
        deriv_synth_commutator_residual(ctx, 1, (2,), c)  # |rho| > m
    lat2 = Lattice((2.0,))
    g = grid1d(-8, 8, 1 << 12)
    ctx2 = OperatorContext(bspline_form(1, indicator_cell(lat2)),
                           indicator_cell(lat2), lat2, dyadic_schedule(2, 3),
                           NormParams(2.0), g)
    with pytest.raises(ValueError):
        deriv_synth_commutator_residual(ctx2, 1, (1,), c)  # b != I


def test_diff_analysis_exact_rearrangement():
    g = grid1d(-8, 8, 1 << 13)
    ctx = OperatorContext(tent(LAT), indicator_cell(LAT), LAT,
                          dyadic_schedule(2, 4), NormParams(2.0), g)
    f = gauss_field(g)
    assert diff_analysis_commutator_residual(ctx, f, 1, (1,)) < 1e-12
    assert diff_analysis_commutator_residual(ctx, f, 2, (2,)) < 1e-12


def test_diff_analysis_zero_field():
    ctx = make_ctx()
    f = GridField(ctx.grid, np.zeros(ctx.grid.n))
    assert diff_analysis_commutator_residual(ctx, f, 1, (1,)) == 0.0


# ---------------------------------------------------------------------------
# frame reconstruction
# ---------------------------------------------------------------------------


def test_frame_reconstruct_zero():
    ctx = make_ctx()
    f = GridField(ctx.grid, np.zeros(ctx.grid.n))
    approx, trace = frame_reconstruct(ctx, f, 4)
    assert lp_norm(approx, 2) == 0.0
    assert all(v == 0.0 for v in trace)


def test_frame_reconstruct_trace_decreases():
    ctx = make_ctx(J=8, n=1 << 13)
    f = gauss_field(ctx.grid)
    approx, trace = frame_reconstruct(ctx, f, 8)
    assert trace[-1] < trace[0] / 4


# ---------------------------------------------------------------------------
# backends
# ---------------------------------------------------------------------------


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")
def test_backends_agree():
    from affine_synth import _accel

    rng = np.random.Generator(np.random.PCG64(22))
    ks = np.array([[0], [1], [3]], dtype=np.int64)
    svals = rng.normal(size=3) + 1j * rng.normal(size=3)
    psi = tent(LAT)
    kind, order, width, norm, slo, shi = psi.profile_arrays()
    out_a = np.zeros(1 << 10, dtype=complex)
    out_b = np.zeros(1 << 10, dtype=complex)
    args = (-8.0, 16.0 / (1 << 10), 2.0, 1.0, 1.25, ks, svals,
            kind, order, width, norm, slo, shi)
    _accel._synth_1d_numba(out_a, *args)
    _accel._synth_1d_numpy(out_b, *args)
    assert np.abs(out_a - out_b).max() < 1e-14

    coef_a = np.zeros(3, dtype=complex)
    coef_b = np.zeros(3, dtype=complex)
    vals = rng.normal(size=1 << 10) + 0j
    args_a = (vals, -8.0, 16.0 / (1 << 10), 2.0, 1.0, 1.25, ks,
              kind, order, width, norm, slo, shi)
    _accel._analyze_1d_numba(coef_a, *args_a)
    _accel._analyze_1d_numpy(coef_b, *args_a)
    assert np.abs(coef_a - coef_b).max() < 1e-14


def test_2d_synthesis_and_analysis_roundtrip():
    lat = Lattice((1.0, 1.0))
    g = Grid(Box((-4.0, -4.0), (4.0, 4.0)), (128, 128))
    ctx = OperatorContext(indicator_cell(lat), indicator_cell(lat), lat,
                          dyadic_schedule(2, 2), NormParams(2.0), g)
    f = field_from_function(
        g, lambda x, y: np.exp(-np.pi * (x ** 2 + y ** 2)))
    out = quasi_interpolant(ctx, f, 2)
    rel = lp_norm(out - f, 2) / lp_norm(f, 2)
    assert rel < 0.25  # first-order cell averaging at alpha = 4, d = 2


def test_2d_synthesize_example():
    lat = Lattice((1.0, 1.0))
    g = Grid(Box((-2.0, -2.0), (2.0, 2.0)), (64, 64))
    ctx = OperatorContext(indicator_cell(lat), indicator_cell(lat), lat,
                          dyadic_schedule(2, 1), NormParams(2.0), g)
    f = synthesize_scale(ctx, 1, {(0, 0): 1.0})
    # |det a_1|^{1/2} = 2 on the quarter cell [0, 1/2)^2
    assert abs(lp_norm(f, 2) - 1.0) < 1e-14
    assert f.values.real.max() == 2.0
