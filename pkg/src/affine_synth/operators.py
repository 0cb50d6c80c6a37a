"""Synthesis and analysis operators, scale averaging, and commutation checks.

Exact-quadrature conventions: inner products use the same rectangle rule as
the field norms, so with indicator analyzers and dyadic dilations the
analysis coefficients are exact.  Scale indices are 1-based.  At scale j the
lattice shift b k / alpha_j must land on whole grid samples (checked), which
keeps every translate arithmetic exact.

The Riesz commutation residuals compare a whole-line principal-value
quadrature of the Riesz transform against the discrete-kernel route; see the
individual docstrings.  Translate sums clip at the box edge (no periodic
wrap), emulating the whole line.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import _accel
from .geometry import (Box, DilationSchedule, Lattice, lattice_points_touching,
                       translate_support)
from .grids import (Grid, GridField, VectorField, MeanWarning,
                    field_from_spectrum, fourier_multiplier, lp_norm,
                    mean_value, multiindices, riesz_transform_pv,
                    spectral_derivative)
from .sequences import (CoeffArray, CutoffSpec, SeqMap, canonical,
                        convolve_seq, difference, discrete_riesz_kernel,
                        mean_zero_check, seq_support_arrays)
from .synthesizers import (NormParams, Synthesizer, bump_1d, indicator_cell,
                           spectrum)

__all__ = [
    "OperatorContext", "MassLossError", "CoverageError", "CommensurabilityError",
    "synthesize_scale", "synthesize", "analyze_scale", "analyze",
    "quasi_interpolant", "cesaro_partials", "scale_averaged_approx",
    "construct_coefficients", "mask_adapted",
    "riesz_synth_commutator_residual", "riesz_analysis_commutator_residual",
    "deriv_synth_commutator_residual", "diff_analysis_commutator_residual",
    "frame_reconstruct", "sobolev_scale_averaged", "hardy_scale_averaged",
]


class MassLossError(ValueError):
    """A nonzero coefficient sits on a translate wholly outside the grid box."""


class CoverageError(ValueError):
    """The grid box does not cover the analyzer translates the field needs."""


class CommensurabilityError(ValueError):
    """Lattice shifts at this scale do not land on whole grid samples."""


@dataclass(frozen=True)
class OperatorContext:
    psi: Synthesizer
    phi: Synthesizer
    lat: Lattice
    sched: DilationSchedule
    norm: NormParams
    grid: Grid

    def __post_init__(self):
        for t in range(self.lat.d):
            steps = abs(self.lat.diag[t]) / self.grid.h[t]
            if abs(steps - round(steps)) > 1e-9 * max(1.0, steps) or steps < 1:
                raise CommensurabilityError(
                    f"b[{t}] = {self.lat.diag[t]} is not a whole number of "
                    f"grid steps h = {self.grid.h[t]}")

    @property
    def d(self) -> int:
        return self.lat.d

    def shift_samples(self, j: int) -> tuple[int, ...]:
        """Per-axis sample count of the lattice shift b / alpha_j."""
        alpha = self.sched.alpha(j)
        out = []
        for t in range(self.d):
            steps = self.lat.diag[t] / alpha / self.grid.h[t]
            if abs(steps - round(steps)) > 1e-9 * max(1.0, abs(steps)) or \
                    round(steps) == 0:
                raise CommensurabilityError(
                    f"scale {j}: shift b/alpha = {self.lat.diag[t] / alpha} "
                    f"is not a whole number of grid steps h = {self.grid.h[t]}")
            out.append(int(round(steps)))
        return tuple(out)


# ---------------------------------------------------------------------------
# synthesis
# ---------------------------------------------------------------------------


def _synth_accum(out: np.ndarray, grid: Grid, alpha: float, lat: Lattice,
                 pref: complex, ks: np.ndarray, vals: np.ndarray,
                 synth: Synthesizer) -> None:
    if synth.closed_form():
        kind, order, width, norm, slo, shi = synth.profile_arrays()
        if grid.d == 1:
            _accel.synth_1d(out, grid.box.lo[0], grid.h[0], alpha,
                            lat.diag[0], pref, ks, vals,
                            kind, order, width, norm, slo, shi)
        else:
            _accel.synth_2d(out, grid.box.lo[0], grid.box.lo[1],
                            grid.h[0], grid.h[1], alpha,
                            lat.diag[0], lat.diag[1], pref, ks, vals,
                            kind, order, width, norm, slo, shi)
        return
    # generic path: windowed vectorized evaluation of the synthesizer
    axes = grid.axes()
    sup = synth.support
    for idx in range(len(ks)):
        windows = []
        for t in range(grid.d):
            i0, i1 = _accel._axis_window(grid.box.lo[t], grid.h[t], grid.n[t],
                                         alpha, lat.diag[t], int(ks[idx, t]),
                                         sup.lo[t], sup.hi[t])
            windows.append((i0, i1))
        if any(i1 <= i0 for i0, i1 in windows):
            continue
        pts = np.stack(np.meshgrid(
            *[alpha * axes[t][w[0]:w[1]] - lat.diag[t] * ks[idx, t]
              for t, w in enumerate(windows)], indexing="ij"), axis=-1)
        sl = tuple(slice(w[0], w[1]) for w in windows)
        out[sl] += (vals[idx] * pref) * synth.evaluate(pts)


def synthesize_scale(ctx: OperatorContext, j: int, s: SeqMap,
                     synthesizer: Synthesizer | None = None) -> GridField:
    """S_j s = sum_k s_k |alpha_j|^{d/p} psi(alpha_j x - b k) on the grid.

    Errors out when a nonzero coefficient sits on a translate disjoint from
    the grid box (silent mass loss).
    """
    synth = synthesizer if synthesizer is not None else ctx.psi
    ctx.shift_samples(j)
    alpha = ctx.sched.alpha(j)
    pref = abs(alpha) ** (ctx.d * ctx.norm.inv_p)
    out = np.zeros(ctx.grid.n, dtype=complex)
    s = canonical(s)
    if not s:
        return GridField(ctx.grid, out)
    ks, vals = seq_support_arrays(s, ctx.d)
    sup = synth.support
    for k in ks:
        tbox = translate_support(ctx.lat, sup, j, ctx.sched, k)
        if not tbox.intersects(ctx.grid.box):
            raise MassLossError(
                f"coefficient at j={j}, k={tuple(int(v) for v in k)} lies "
                "wholly outside the grid box")
    _synth_accum(out, ctx.grid, alpha, ctx.lat, pref, ks, vals, synth)
    return GridField(ctx.grid, out)


def synthesize(ctx: OperatorContext, c: CoeffArray,
               return_scales: bool = False):
    """Sc = sum_j S_j c_j; optionally retains the per-scale fields so the
    absolute convergence over j can be inspected."""
    if c.J > ctx.sched.J:
        raise ValueError(f"coefficients use {c.J} scales, schedule has {ctx.sched.J}")
    total = np.zeros(ctx.grid.n, dtype=complex)
    parts = []
    for j in range(1, c.J + 1):
        f = synthesize_scale(ctx, j, c.scale(j))
        total += f.values
        if return_scales:
            parts.append(f)
    out = GridField(ctx.grid, total)
    return (out, parts) if return_scales else out


# ---------------------------------------------------------------------------
# analysis
# ---------------------------------------------------------------------------


def _check_boundary_decay(f: GridField, j: int, tol: float = 1e-10) -> None:
    """Analysis clips translates at the box edge; that is exact only when the
    field has decayed there, so a live boundary layer is a coverage failure."""
    peak = float(np.abs(f.values).max())
    if peak == 0.0:
        return
    edge = 0.0
    for t in range(f.d):
        for pos in (0, -1):
            sl = [slice(None)] * f.d
            sl[t] = pos
            edge = max(edge, float(np.abs(f.values[tuple(sl)]).max()))
    if edge > tol * peak:
        raise CoverageError(
            f"scale {j}: field boundary value {edge:.3e} exceeds "
            f"{tol:g} * peak; translates needed near the edge would be clipped")


def analyze_scale(ctx: OperatorContext, j: int, f: GridField,
                  analyzer: Synthesizer | None = None) -> SeqMap:
    """(T_j f)_k = |det b| <f, phi_{j,k}> by grid quadrature.

    phi_{j,k} carries the L^q normalization |alpha_j|^{d/q}.  Bandlimited
    analyzers go through an exact spectral cross-correlation (periodic);
    pointwise analyzers enumerate translates touching the box and error out
    when the field's numerical support needs translates the box cannot hold.
    """
    phi = analyzer if analyzer is not None else ctx.phi
    shifts = ctx.shift_samples(j)
    alpha = ctx.sched.alpha(j)
    pref = ctx.lat.abs_det_b * ctx.grid.cell_volume * \
        abs(alpha) ** (ctx.d * ctx.norm.inv_q)
    if phi.inner == "bandlimited":
        return _analyze_bandlimited(ctx, j, f, phi, pref, shifts)
    _check_boundary_decay(f, j)
    sup = phi.support
    ks = lattice_points_touching(ctx.lat, ctx.grid.box, sup, j, ctx.sched)
    if len(ks) == 0:
        return {}
    coefs = np.zeros(len(ks), dtype=complex)
    kind, order, width, norm, slo, shi = phi.profile_arrays()
    g = ctx.grid
    if ctx.d == 1:
        _accel.analyze_1d(coefs, f.values, g.box.lo[0], g.h[0], alpha,
                          ctx.lat.diag[0], pref, ks,
                          kind, order, width, norm, slo, shi)
    else:
        _accel.analyze_2d(coefs, f.values, g.box.lo[0], g.box.lo[1],
                          g.h[0], g.h[1], alpha,
                          ctx.lat.diag[0], ctx.lat.diag[1], pref, ks,
                          kind, order, width, norm, slo, shi)
    return canonical({tuple(int(v) for v in k): c
                      for k, c in zip(ks, coefs)})


def _analyze_bandlimited(ctx, j, f, phi, pref, shifts) -> SeqMap:
    """Spectral route: phi(alpha x) sampled from its transform, then a
    cross-correlation picks out every coefficient at once (periodic)."""
    alpha = ctx.sched.alpha(j)
    g = ctx.grid

    def ghat(*xi):
        return spectrum(phi, [np.asarray(x) / alpha for x in xi]) / \
            abs(alpha) ** (ctx.d * (1.0 - ctx.norm.inv_q))

    gfield = field_from_spectrum(g, ghat)
    corr = np.fft.ifftn(np.fft.fftn(f.values) *
                        np.conj(np.fft.fftn(gfield.values)))
    cell = indicator_cell(ctx.lat).support
    ks = lattice_points_touching(ctx.lat, g.box, cell, j, ctx.sched)
    out: SeqMap = {}
    for k in ks:
        idx = tuple((int(k[t]) * shifts[t]) % g.n[t] for t in range(ctx.d))
        out[tuple(int(v) for v in k)] = pref * corr[idx]
    return canonical(out)


def analyze(ctx: OperatorContext, f: GridField, J: int,
            analyzer: Synthesizer | None = None) -> CoeffArray:
    """Tf: stacked per-scale analysis for j = 1..J."""
    if J > ctx.sched.J:
        raise ValueError(f"J = {J} exceeds schedule length {ctx.sched.J}")
    return CoeffArray(tuple(analyze_scale(ctx, j, f, analyzer)
                            for j in range(1, J + 1)))


# ---------------------------------------------------------------------------
# quasi-interpolation and scale averaging
# ---------------------------------------------------------------------------


def quasi_interpolant(ctx: OperatorContext, f: GridField, j: int) -> GridField:
    """S_j T_j f: analyze then synthesize at one scale."""
    return synthesize_scale(ctx, j, analyze_scale(ctx, j, f))


def cesaro_partials(ctx: OperatorContext, f: GridField, J: int) -> list[GridField]:
    """Partial Cesaro means (1/J') sum_{j<=J'} S_j T_j f for J' = 1..J."""
    acc = np.zeros(ctx.grid.n, dtype=complex)
    out = []
    for j in range(1, J + 1):
        acc = acc + quasi_interpolant(ctx, f, j).values
        out.append(GridField(ctx.grid, acc / j))
    return out


def scale_averaged_approx(ctx: OperatorContext, f: GridField, J: int) -> GridField:
    """(1/J) sum_{j=1}^J S_j T_j f; warns when the schedule lacks the
    exponential-expansion certificate the convergence theorem assumes."""
    if not ctx.sched.expands_exponentially:
        warnings.warn("schedule lacks the exponential expansion certificate; "
                      "scale-averaged convergence is not guaranteed")
    return cesaro_partials(ctx, f, J)[-1]


def construct_coefficients(ctx: OperatorContext, f: GridField, J: int) -> CoeffArray:
    """The surjectivity witness: c_{J;j,k} = (1/J)|det b| <f, phi_{j,k}>
    for j = 1..J, with the analyzer forced to the normalized cell indicator."""
    phi = indicator_cell(ctx.lat, normalized=True)
    scales = []
    for j in range(1, J + 1):
        s = analyze_scale(ctx, j, f, analyzer=phi)
        scales.append({k: v / J for k, v in s.items()})
    return CoeffArray(tuple(scales))


def mask_adapted(ctx: OperatorContext, c: CoeffArray, omega: Box) -> CoeffArray:
    """Zero every c_{j,k} whose translate support is not contained in omega,
    so the synthesis vanishes outside omega exactly.  Needs compact support."""
    if ctx.psi.unbounded:
        raise ValueError("adapted masking needs a compactly supported synthesizer")
    sup = ctx.psi.support

    def mask(j, s):
        kept = {}
        for k, v in s.items():
            if omega.contains_box(translate_support(ctx.lat, sup, j, ctx.sched, k)):
                kept[k] = v
        return kept

    return c.map_scales(mask)


# ---------------------------------------------------------------------------
# commutation residuals
# ---------------------------------------------------------------------------


def _shift_add_nowrap(out: np.ndarray, src: np.ndarray, shift: tuple[int, ...],
                      coeff: complex) -> None:
    """out += coeff * src shifted by `shift` samples, clipping at the edges
    (whole-line semantics: no periodic wrap)."""
    tgt_sl, src_sl = [], []
    for t, m in enumerate(shift):
        n = out.shape[t]
        t0, t1 = max(0, m), min(n, n + m)
        if t1 <= t0:
            return
        tgt_sl.append(slice(t0, t1))
        src_sl.append(slice(t0 - m, t1 - m))
    out[tuple(tgt_sl)] += coeff * src[tuple(src_sl)]


def _require_zero_mean(s: SeqMap) -> None:
    mean, ok = mean_zero_check(s)
    if not ok:
        raise ValueError(f"sequence has nonzero mean {mean:.3e}; "
                         "the discrete Hardy identities need zero mean")


def _double_box(grid: Grid) -> Grid:
    lo = tuple(2.0 * v for v in grid.box.lo)
    hi = tuple(2.0 * v for v in grid.box.hi)
    return Grid(Box(lo, hi), tuple(2 * n for n in grid.n))


def _embed(f: GridField, grid: Grid) -> GridField:
    """Zero-extend a field onto an enclosing grid with the same spacing."""
    out = np.zeros(grid.n, dtype=complex)
    sl = []
    for t in range(f.d):
        off = (f.grid.box.lo[t] - grid.box.lo[t]) / grid.h[t]
        if abs(off - round(off)) > 1e-9:
            raise ValueError("boxes are not sample-aligned")
        o = int(round(off))
        sl.append(slice(o, o + f.grid.n[t]))
    out[tuple(sl)] = f.values
    return GridField(grid, out, meta=f.meta)


def riesz_synth_commutator_residual(ctx: OperatorContext, s: SeqMap,
                                    cut: CutoffSpec | None = None,
                                    lambda_radii: tuple[float, float] = (0.25, 0.4375),
                                    refine: int = 0) -> float:
    """Relative L^1 residual of: Riesz transform commutes with synthesis.

    Left side: whole-line principal-value Riesz quadrature applied to
    sum_k s_k (psi*lambda*mu)(x - bk).  Right side: sum_k (z*s)_k
    (psi*lambda)(x - bk).  Both translate sums clip at the box edge,
    emulating the whole line, so the residual is dominated by the spatial
    truncation of the bump tails; `refine` doubles the box (keeping the
    spacing) that many times, which is the refinement the residual halves
    under.

    A smooth synthesizer (gaussian) keeps the sampled spectra exact; s must
    have zero mean.
    """
    s = canonical(s)
    if not s:
        return 0.0
    _require_zero_mean(s)
    cut = cut or CutoffSpec()
    grid = ctx.grid
    for _ in range(refine):
        grid = _double_box(grid)
    ctxr = replace(ctx, grid=grid)
    d = ctx.d

    def lam_hat(*xi):
        out = np.ones(np.broadcast_shapes(*(np.shape(x) for x in xi)))
        for t in range(d):
            out = out * bump_1d(np.asarray(xi[t]) * ctx.lat.diag[t], *lambda_radii)
        return out

    def mu_hat(*xi):
        return cut.nu([np.asarray(xi[t]) * ctx.lat.diag[t] for t in range(d)])

    psi_field = _sample_synth(ctxr.grid, ctx.psi)
    g1 = fourier_multiplier(psi_field, lambda *xi: lam_hat(*xi) * mu_hat(*xi))
    g2 = fourier_multiplier(psi_field, lam_hat)

    steps = [int(round(ctx.lat.diag[t] / ctxr.grid.h[t])) for t in range(d)]
    lhs_in = np.zeros(ctxr.grid.n, dtype=complex)
    for k, v in sorted(s.items()):
        _shift_add_nowrap(lhs_in, g1.values,
                          tuple(steps[t] * k[t] for t in range(d)), v)
    lhs = riesz_transform_pv(GridField(ctxr.grid, lhs_in))

    kmax = max(int(math.ceil((ctxr.grid.box.hi[t] - ctxr.grid.box.lo[t])
                             / abs(ctx.lat.diag[t]))) for t in range(d))
    spread = max(int(np.abs(np.array(list(s.keys()))).max()), 1)
    z = discrete_riesz_kernel(cut, ctx.lat, kmax + spread + 4)
    t_seq = convolve_seq(s, z)
    rhs_comps = [np.zeros(ctxr.grid.n, dtype=complex) for _ in range(d)]
    for k, vec in sorted(t_seq.items()):
        shift = tuple(steps[t] * k[t] for t in range(d))
        for t in range(d):
            _shift_add_nowrap(rhs_comps[t], g2.values, shift, vec[t])

    num = _vec_l1(ctxr.grid, [c.values for c in lhs.components], rhs_comps)
    den = _vec_l1(ctxr.grid, rhs_comps, None)
    return num / den


def _vec_l1(grid: Grid, comps, other) -> float:
    if other is None:
        mag = np.sqrt(sum(np.abs(c) ** 2 for c in comps))
    else:
        mag = np.sqrt(sum(np.abs(a - b) ** 2 for a, b in zip(comps, other)))
    return float(mag.sum() * grid.cell_volume)


def _sample_synth(grid: Grid, s: Synthesizer) -> GridField:
    return GridField(grid, s.evaluate(grid.points()).astype(complex))


def riesz_analysis_commutator_residual(ctx: OperatorContext, f: GridField,
                                       j: int, cut: CutoffSpec | None = None,
                                       drop_sign: bool = False,
                                       refine: int = 0) -> float:
    """Relative ell^1 residual of: Riesz transform commutes with analysis.

    Compares z * (T_j f) against sign(alpha_j) T_j (R(mu_j * f)) for a
    bandlimited analyzer; R is the whole-line principal-value quadrature.
    `refine` doubles the box (fixed spacing, zero-extending f).
    `drop_sign` omits the sign(alpha_j) factor (the negative-dilation test).
    """
    if ctx.phi.inner != "bandlimited":
        raise ValueError("the analysis commutation lemma needs a bandlimited analyzer")
    cut = cut or CutoffSpec()
    grid = ctx.grid
    for _ in range(refine):
        grid = _double_box(grid)
    ctxr = replace(ctx, grid=grid)
    if refine:
        f = _embed(f, grid)
    alpha = ctx.sched.alpha(j)
    d = ctx.d

    tjf = analyze_scale(ctxr, j, f)
    if not tjf:
        return 0.0
    kmax = int(max(np.abs(np.array(list(tjf.keys()))).max(), 1))
    z = discrete_riesz_kernel(cut, ctx.lat, 2 * kmax + 2)
    lhs = convolve_seq(tjf, z)

    def muj_hat(*xi):
        return cut.nu([np.asarray(xi[t]) * ctx.lat.diag[t] / alpha
                       for t in range(d)])

    w = fourier_multiplier(f, muj_hat)
    rw = riesz_transform_pv(w)
    sign = 1.0 if drop_sign else math.copysign(1.0, alpha)
    rhs: dict[tuple, np.ndarray] = {}
    for t in range(d):
        comp = analyze_scale(ctxr, j, rw.components[t])
        for k, v in comp.items():
            rhs.setdefault(k, np.zeros(d, dtype=complex))[t] = sign * v

    keys = sorted(set(tjf.keys()) & set(rhs.keys()) | set(rhs.keys()))
    num = 0.0
    den = 0.0
    zero = np.zeros(d, dtype=complex)
    for k in keys:
        l = lhs.get(k, zero)
        r = rhs.get(k, zero)
        num += float(np.linalg.norm(l - r))
        den += float(np.linalg.norm(r))
    return num / den


def deriv_synth_commutator_residual(ctx: OperatorContext, m: int,
                                    rho: tuple[int, ...],
                                    c: CoeffArray) -> float:
    """Relative L^p residual of: derivatives commute with synthesis.

    Left: spectral D^rho of the synthesized field.  Right: synthesis with
    the companion synthesizer (spline orders dropped by rho per axis) from
    the coefficients alpha_j^{|rho|} Delta^rho c_j.  Needs b = I and the
    convolution-form synthesizer; |rho| <= m.
    """
    from .synthesizers import eta_rho

    rho = tuple(int(r) for r in rho)
    if sum(rho) > m:
        raise ValueError(f"|rho| = {sum(rho)} exceeds m = {m}")
    if any(abs(b - 1.0) > 1e-12 for b in ctx.lat.diag):
        raise ValueError("the derivative identity is stated for b = I")
    if any(o < m for o in ctx.psi.orders):
        raise ValueError(f"synthesizer lacks the {m} spline factors of the "
                         "convolution form")
    eta = replace(ctx.psi, orders=tuple(o - m for o in ctx.psi.orders))
    companion = eta_rho(rho, m, eta)

    field = synthesize(ctx, c)
    order = sum(rho)
    # rho = 0 keeps both sides on the identical code path (residual exactly 0)
    lhs = field if order == 0 else spectral_derivative(field, rho)
    total = np.zeros(ctx.grid.n, dtype=complex)
    for j in range(1, c.J + 1):
        alpha = ctx.sched.alpha(j)
        coeffs = {k: v * alpha ** order
                  for k, v in difference(c.scale(j), rho).items()}
        total += synthesize_scale(ctx, j, coeffs, synthesizer=companion).values
    rhs = GridField(ctx.grid, total)
    den = lp_norm(rhs, ctx.norm.p)
    if den == 0.0:
        return 0.0
    return lp_norm(lhs - rhs, ctx.norm.p) / den


def diff_analysis_commutator_residual(ctx: OperatorContext, f: GridField,
                                      j: int, rho: tuple[int, ...]) -> float:
    """Relative ell^p residual of: differences commute with analysis.

    alpha_j^{|rho|} Delta^rho (T_j f) against T_j applied to the backward
    difference quotient of f with step 1/alpha_j (exact grid shifts; both
    sides are the same finite sums reordered, so the residual is
    quadrature-exact for fields that vanish at the box edge).
    """
    rho = tuple(int(r) for r in rho)
    if any(abs(b - 1.0) > 1e-12 for b in ctx.lat.diag):
        raise ValueError("the difference identity is stated for b = I")
    alpha = ctx.sched.alpha(j)
    steps = []
    for t in range(ctx.d):
        r = 1.0 / alpha / ctx.grid.h[t]
        if abs(r - round(r)) > 1e-9 or round(r) == 0:
            raise CommensurabilityError(
                f"1/alpha_{j} is not a whole number of grid steps on axis {t}")
        steps.append(int(round(r)))

    lhs = {k: v * abs(alpha) ** sum(rho)
           for k, v in difference(analyze_scale(ctx, j, f), rho).items()}

    vals = f.values
    for t, r in enumerate(rho):
        for _ in range(r):
            vals = alpha * (vals - np.roll(vals, steps[t], axis=t))
    rhs = analyze_scale(ctx, j, GridField(ctx.grid, vals))

    keys = sorted(set(lhs) | set(rhs))
    if not keys:
        return 0.0
    num = np.array([abs(lhs.get(k, 0.0) - rhs.get(k, 0.0)) for k in keys])
    den = np.array([abs(rhs.get(k, 0.0)) for k in keys])
    p = ctx.norm.p
    if math.isinf(p):
        top, bot = float(num.max()), float(den.max())
    else:
        top = float((num ** p).sum() ** (1 / p))
        bot = float((den ** p).sum() ** (1 / p))
    if bot == 0.0:
        return 0.0 if top == 0.0 else math.inf
    return top / bot


# ---------------------------------------------------------------------------
# reconstruction wrappers
# ---------------------------------------------------------------------------


def frame_reconstruct(ctx: OperatorContext, f: GridField, J: int,
                      p: float | None = None):
    """Cesaro synthesis S_*(Tf) at depth J plus the trace of partial errors
    ||(1/J') sum_{j<=J'} S_j T_j f - f||_p for J' = 1..J."""
    p = ctx.norm.p if p is None else p
    partials = cesaro_partials(ctx, f, J)
    trace = [lp_norm(g - f, p) for g in partials]
    return partials[-1], trace


def sobolev_scale_averaged(ctx: OperatorContext, f: GridField, J: int,
                           m: int, p: float) -> GridField:
    """Cesaro average for the Sobolev convergence theorem (b = I, psi in
    convolution form with a unit-integral inner factor); the caller measures
    the error with the Sobolev norm."""
    if any(abs(b - 1.0) > 1e-12 for b in ctx.lat.diag):
        raise ValueError("the Sobolev averaging theorem is stated for b = I")
    if any(o < m for o in ctx.psi.orders):
        raise ValueError("synthesizer lacks the convolution form for this m")
    return scale_averaged_approx(ctx, f, J)


def hardy_scale_averaged(ctx: OperatorContext, f: GridField, J: int) -> GridField:
    """Cesaro average for the Hardy convergence theorem; warns when f has a
    non-negligible mean (the h^1 machinery then degrades to a proxy)."""
    mean = mean_value(f)
    n1 = lp_norm(f, 1.0)
    if n1 > 0 and abs(mean) > 1e-9 * n1:
        warnings.warn(f"hardy averaging input has mean {mean:.3e}",
                      MeanWarning)
    return scale_averaged_approx(ctx, f, J)
