"""Doubly indexed coefficient arrays, mixed norms, and discrete Riesz kernels.

Sequences over Z^d are finitely supported maps ``{index tuple: complex}``
with canonical support (stored values are nonzero; anything absent reads 0).
Scale indices j are 1-based throughout, matching the dilation schedule.

The discrete Riesz kernel is the coefficient sequence of the periodic
multiplier  zeta(xi) = -i (xi b^{-1} / |xi b^{-1}|) nu(xi)  on the centered
unit cube; the Fourier series uses e^{-2 pi i xi k}, so coefficients are
extracted with e^{+2 pi i xi k}.  In one dimension the singular factor is
summed in closed form (the sawtooth series with coefficients 1/(pi k)) and
only the smooth remainder goes through the DFT, which makes the two
refinement levels of the Richardson check agree to near machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._profiles import bump_1d, inverse_bump_l1_norm
from .geometry import Lattice

__all__ = [
    "SeqMap", "CoeffArray", "KernelSeq", "CutoffSpec",
    "canonical", "delta_seq", "seq_add", "seq_scale", "seq_norm",
    "mixed_norm", "sup_mixed_norm", "difference", "sobolev_seq_norm",
    "convolve_seq", "discrete_riesz_kernel", "discretized_riesz_kernel",
    "hilbert_sequence", "h1_seq_norm", "h1_mixed_norm", "mean_zero_check",
    "spectral_helpers", "export_kernel_csv",
]

SeqMap = dict  # {tuple[int, ...]: complex}

MEAN_ZERO_TOL = 1e-12
RICHARDSON_TOL = 1e-8


# ---------------------------------------------------------------------------
# finitely supported sequences
# ---------------------------------------------------------------------------


def canonical(s: SeqMap) -> SeqMap:
    """Drop exact zeros so the stored support is canonical."""
    return {k: complex(v) for k, v in sorted(s.items()) if v != 0}


def delta_seq(k, value: complex = 1.0) -> SeqMap:
    return {tuple(int(i) for i in np.atleast_1d(k)): complex(value)}


def seq_add(a: SeqMap, b: SeqMap) -> SeqMap:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0.0) + v
    return canonical(out)


def seq_scale(s: SeqMap, factor: complex) -> SeqMap:
    return canonical({k: v * factor for k, v in s.items()})


def seq_norm(s: SeqMap, p: float) -> float:
    """ell^p norm of one finitely supported sequence."""
    if p < 1.0:
        raise ValueError("p must lie in [1, inf]")
    if not s:
        return 0.0
    mags = np.array([abs(v) for _, v in sorted(s.items())])
    if math.isinf(p):
        return float(mags.max())
    return float((mags ** p).sum() ** (1.0 / p))


def seq_support_arrays(s: SeqMap, d: int):
    """(ks (N,d) int64, vals (N,) complex128), lexicographically sorted."""
    if not s:
        return np.empty((0, d), dtype=np.int64), np.empty(0, dtype=np.complex128)
    keys = sorted(s.keys())
    ks = np.array(keys, dtype=np.int64).reshape(len(keys), d)
    vals = np.array([s[k] for k in keys], dtype=np.complex128)
    return ks, vals


@dataclass(frozen=True)
class CoeffArray:
    """Finitely supported c_{j,k}, scales j = 1..J (scales[j-1])."""

    scales: tuple[SeqMap, ...]

    def __post_init__(self):
        object.__setattr__(self, "scales",
                           tuple(canonical(s) for s in self.scales))

    @property
    def J(self) -> int:
        return len(self.scales)

    def scale(self, j: int) -> SeqMap:
        if not 1 <= j <= self.J:
            raise IndexError(f"scale {j} outside 1..{self.J}")
        return self.scales[j - 1]

    def __getitem__(self, jk):
        j, k = jk
        return self.scale(j).get(tuple(k), 0.0)

    def map_scales(self, fn) -> "CoeffArray":
        return CoeffArray(tuple(fn(j + 1, s) for j, s in enumerate(self.scales)))


def mixed_norm(c: CoeffArray, p: float) -> float:
    """||c||_{ell^1(ell^p)} = sum_j (sum_k |c_{j,k}|^p)^{1/p}."""
    return float(sum(seq_norm(s, p) for s in c.scales))


def sup_mixed_norm(c: CoeffArray, p: float) -> float:
    """||c||_{ell^inf(ell^p)} = sup_j (sum_k |c_{j,k}|^p)^{1/p}."""
    if not c.scales:
        return 0.0
    return float(max(seq_norm(s, p) for s in c.scales))


def difference(s: SeqMap, rho: tuple[int, ...]) -> SeqMap:
    """Backward differences on the index: Delta_t s = {s_k - s_{k-e_t}}.

    Higher orders compose per axis; the support grows by rho_t on axis t.
    """
    rho = tuple(int(r) for r in rho)
    out = dict(s)
    for t, r in enumerate(rho):
        for _ in range(r):
            nxt: SeqMap = {}
            for k, v in out.items():
                nxt[k] = nxt.get(k, 0.0) + v
                shifted = list(k)
                shifted[t] += 1
                shifted = tuple(shifted)
                nxt[shifted] = nxt.get(shifted, 0.0) - v
            out = nxt
    return canonical(out)


def sobolev_seq_norm(c: CoeffArray, m: int, p: float, sched) -> float:
    """||c||_{ell^1(w^{m,p},alpha)}: dilation-weighted differences.

    sum_j sum_{|rho| <= m} |alpha_j|^{|rho|} || (Delta^rho c)_j ||_{ell^p}.
    """
    from .grids import multiindices

    if c.J > sched.J:
        raise ValueError(f"coefficients use {c.J} scales, schedule has {sched.J}")
    if not c.scales:
        return 0.0
    d = len(next(iter(c.scales[0]), (0,))) if c.scales[0] else None
    total = 0.0
    for j in range(1, c.J + 1):
        s = c.scale(j)
        if not s:
            continue
        dd = len(next(iter(s)))
        alpha = abs(sched.alpha(j))
        for rho in multiindices(dd, m):
            total += alpha ** sum(rho) * seq_norm(difference(s, rho), p)
    return total


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CutoffSpec:
    """Smooth cutoff nu: tensor product of 1-d bumps, 1 near 0, 0 outside C_0.

    nu(xi) = prod_t bump(xi_t) with bump == 1 on |.| <= inner_radius and
    bump == 0 beyond outer_radius <= 1/2; the ramp is the standard e^{-1/t}
    mollifier spline, so nu is C-infinity with nu(0) = 1.
    """

    inner_radius: float = 0.125
    outer_radius: float = 0.375

    def __post_init__(self):
        if not 0.0 < self.inner_radius < self.outer_radius <= 0.5:
            raise ValueError("need 0 < inner < outer <= 1/2")

    def nu(self, xi: list[np.ndarray]) -> np.ndarray:
        out = np.ones(np.broadcast_shapes(*(np.shape(x) for x in xi)))
        for x in xi:
            out = out * bump_1d(x, self.inner_radius, self.outer_radius)
        return out

    def nu_1d(self, xi: np.ndarray) -> np.ndarray:
        return bump_1d(xi, self.inner_radius, self.outer_radius)

    def inv_transform_l1(self, d: int = 1) -> float:
        """||nu-check||_1; tensor structure gives the d-th power of the 1-d norm."""
        return inverse_bump_l1_norm(self.inner_radius, self.outer_radius) ** d


@dataclass(frozen=True)
class KernelSeq:
    """Vector-valued sequence on |k|_inf <= K with explicit truncation data."""

    ks: np.ndarray            # (N, d) int64, lexicographic
    values: np.ndarray        # (N, d) complex128
    K: int
    provenance: str           # "cutoff" | "discretized" | "hilbert"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        idx = {tuple(k): i for i, k in enumerate(self.ks.tolist())}
        object.__setattr__(self, "_index", idx)

    @property
    def d(self) -> int:
        return self.ks.shape[1]

    def value(self, k) -> np.ndarray:
        i = self._index.get(tuple(k))
        if i is None:
            return np.zeros(self.d, dtype=complex)
        return self.values[i]

    def dense(self) -> np.ndarray:
        """Values as a dense array of shape (2K+1,)*d + (d,), index k + K."""
        shape = (2 * self.K + 1,) * self.d + (self.d,)
        out = np.zeros(shape, dtype=complex)
        for i, k in enumerate(self.ks):
            out[tuple(int(v) + self.K for v in k)] = self.values[i]
        return out

    def decay_constant(self) -> float:
        """max |k|_inf^d * |z_k| over the outer half shell (tail model A/|k|^d)."""
        mag = np.linalg.norm(self.values, axis=1)
        kinf = np.abs(self.ks).max(axis=1)
        sel = kinf >= max(1, self.K // 2)
        if not sel.any():
            sel = kinf >= 1
        return float((kinf[sel] ** self.d * mag[sel]).max())

    def difference_constant(self) -> float:
        """max |k|^{d+1} |z_k - z_{k-e_1}| over the outer shell (Lipschitz model)."""
        cached = self.meta.get("_difference_constant")
        if cached is not None:
            return cached
        kinf = np.abs(self.ks).max(axis=1)
        shell = (kinf >= max(1, self.K // 2)) & (kinf < self.K)
        if self.d == 1:
            # lexicographic order makes k-1 the previous row
            diff = np.zeros(len(self.ks))
            diff[1:] = np.linalg.norm(self.values[1:] - self.values[:-1],
                                      axis=1)
            best = float((kinf[shell] ** 2 * diff[shell]).max())
        else:
            best = 0.0
            for i in np.nonzero(shell)[0]:
                k = self.ks[i]
                prev = self.value((int(k[0]) - 1,) + tuple(int(v)
                                                           for v in k[1:]))
                d = float(np.linalg.norm(self.values[i] - prev))
                best = max(best, float(kinf[i]) ** (self.d + 1) * d)
        self.meta["_difference_constant"] = best
        return best


def _all_ks(K: int, d: int) -> np.ndarray:
    r = np.arange(-K, K + 1, dtype=np.int64)
    grids = np.meshgrid(*([r] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def zeta_multiplier(cut: CutoffSpec, lat: Lattice, xi: list[np.ndarray]) -> list[np.ndarray]:
    """The defining multiplier -i (xi b^{-1} / |xi b^{-1}|) nu(xi), 0 at 0."""
    d = lat.d
    w = [np.asarray(xi[t]) / lat.diag[t] for t in range(d)]
    norm = np.sqrt(sum(np.asarray(v) ** 2 for v in w) *
                   np.ones(np.broadcast_shapes(*(np.shape(x) for x in xi))))
    safe = np.where(norm == 0.0, 1.0, norm)
    nu = cut.nu(xi)
    return [np.where(norm == 0.0, 0.0, -1j * (w[t] * np.ones_like(norm)) / safe * nu)
            for t in range(d)]


def _kernel_1d_at(cut: CutoffSpec, lat: Lattice, K: int, N: int) -> np.ndarray:
    """Coefficients on |k| <= K at DFT resolution N, via the sawtooth split."""
    sgn_b = math.copysign(1.0, lat.diag[0])
    xi = np.fft.fftfreq(N)
    # smooth remainder: zeta(xi) + i sign(b) sign(xi)(1 - 2|xi|)
    nu = cut.nu_1d(xi)
    smooth = sgn_b * np.sign(xi) * (nu - 1.0 + 2.0 * np.abs(xi))
    # coefficients of -i*smooth w.r.t. e^{-2 pi i xi k}: real sine integrals
    r = np.fft.ifft(-1j * smooth)
    ks = np.arange(-K, K + 1)
    vals = r[ks % N].real.astype(complex)
    nz = ks != 0
    vals[nz] += sgn_b / (np.pi * ks[nz])
    vals[ks == 0] = 0.0
    return vals.reshape(-1, 1)


def _kernel_nd_at(cut: CutoffSpec, lat: Lattice, K: int, N: int) -> np.ndarray:
    """Plain rectangle-rule coefficients for d >= 2 at resolution N per axis."""
    d = lat.d
    xi = np.meshgrid(*[np.fft.fftfreq(N)] * d, indexing="ij", sparse=True)
    comps = zeta_multiplier(cut, lat, xi)
    ks = _all_ks(K, d)
    out = np.zeros((len(ks), d), dtype=complex)
    for t in range(d):
        coeff = np.fft.ifftn(comps[t] * np.ones((N,) * d))
        out[:, t] = coeff[tuple((ks % N).T)]
    center = (np.abs(ks).max(axis=1) == 0)
    out[center] = 0.0
    return out


def discrete_riesz_kernel(cut: CutoffSpec, lat: Lattice, K: int,
                          resolution: int | None = None) -> KernelSeq:
    """Kernel z_k = int_{C_0} zeta(xi) e^{+2 pi i xi k} dxi for |k|_inf <= K.

    Uses a fine DFT (resolution >= 8K per axis) and errors out when two
    refinement levels disagree beyond 1e-8 on any retained coefficient.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    d = lat.d
    if resolution is not None and resolution < 2 * K + 2:
        raise ValueError("resolution must exceed 2K (coefficient aliasing)")
    if d == 1:
        N = resolution or max(8 * K, 4096)
        coarse = _kernel_1d_at(cut, lat, K, N)
        vals = _kernel_1d_at(cut, lat, K, 2 * N)
        levels = (N, 2 * N)
    else:
        N = resolution or max(8 * K, 2048)
        coarse = _kernel_nd_at(cut, lat, K, N // 2)
        vals = _kernel_nd_at(cut, lat, K, N)
        levels = (N // 2, N)
    disagree = float(np.abs(vals - coarse).max())
    if disagree > RICHARDSON_TOL:
        raise ValueError(
            f"kernel resolution failure: levels {levels} disagree by {disagree:.3e}")
    return KernelSeq(_all_ks(K, d), vals, K, "cutoff",
                     meta={"inner_radius": cut.inner_radius,
                           "outer_radius": cut.outer_radius,
                           "b": list(lat.diag), "resolution": levels[-1],
                           "richardson_disagreement": disagree})


def riesz_kernel_quadrature(cut: CutoffSpec, lat: Lattice, K: int,
                            N: int) -> np.ndarray:
    """Oracle route: plain rectangle-rule coefficients of zeta in d = 1,
    no singular split (aliasing error ~ 2K/(pi N^2)); values for |k| <= K."""
    if lat.d != 1:
        raise ValueError("the quadrature oracle is one-dimensional")
    xi = np.fft.fftfreq(N)
    vals = np.fft.ifft(zeta_multiplier(cut, lat, [xi])[0])
    ks = np.arange(-K, K + 1)
    out = vals[ks % N].astype(complex)
    out[ks == 0] = 0.0
    return out.reshape(-1, 1)


def discretized_riesz_kernel(lat: Lattice, K: int) -> KernelSeq:
    """z^b_k = Z(bk) = C_d (bk)/|bk|^{d+1}, zero at k = 0 (no cutoff)."""
    if K < 1:
        raise ValueError("K must be at least 1")
    d = lat.d
    cd = math.gamma((d + 1) / 2.0) * math.pi ** (-(d + 1) / 2.0)
    ks = _all_ks(K, d)
    bk = ks * np.array(lat.diag)
    r = np.linalg.norm(bk, axis=1)
    safe = np.where(r == 0.0, 1.0, r)
    vals = cd * bk / safe[:, None] ** (d + 1)
    vals[r == 0.0] = 0.0
    return KernelSeq(ks, vals.astype(complex), K, "discretized",
                     meta={"b": list(lat.diag)})


def hilbert_sequence(K: int) -> KernelSeq:
    """z^I_k = 1/(pi k) for k != 0: the d = 1, b = 1 discretized kernel."""
    return discretized_riesz_kernel(Lattice((1.0,)), K)


def convolve_seq(s: SeqMap, z: KernelSeq) -> SeqMap:
    """(s * z)_k = sum_l z_l s_{k-l} over |l|_inf <= K; values are d-vectors."""
    if not s:
        return {}
    d = z.d
    ks, svals = seq_support_arrays(s, d)
    lo = ks.min(axis=0)
    hi = ks.max(axis=0)
    sshape = tuple(int(h - l) + 1 for l, h in zip(lo, hi))
    sdense = np.zeros(sshape, dtype=complex)
    sdense[tuple((ks - lo).T)] = svals
    zdense = z.dense()
    out: SeqMap = {}
    if d == 1:
        conv = np.convolve(sdense, zdense[:, 0])
    else:
        from scipy.signal import convolve as sconv

        conv = np.stack([sconv(sdense, zdense[..., t], method="direct")
                         for t in range(d)], axis=-1)
    base = lo - z.K
    it = np.ndindex(conv.shape[:1] if d == 1 else conv.shape[:-1])
    for idx in it:
        v = conv[idx] if d > 1 else np.array([conv[idx[0]]])
        if np.any(v != 0):
            key = tuple(int(base[t] + idx[t]) for t in range(d))
            out[key] = v
    return out


def seq_vector_l1(sv: SeqMap) -> float:
    """ell^1 norm of a vector-valued sequence with pointwise Euclidean length."""
    return float(sum(np.linalg.norm(v) for _, v in sorted(sv.items())))


def mean_zero_check(s: SeqMap) -> tuple[complex, bool]:
    """Exact finite sum of the entries; zero at tolerance 1e-12."""
    mean = complex(sum(v for _, v in sorted(s.items())))
    scale = max(1.0, sum(abs(v) for v in s.values()))
    return mean, abs(mean) <= MEAN_ZERO_TOL * scale


def h1_seq_norm(s: SeqMap, z: KernelSeq) -> tuple[float, float]:
    """(||s||_1 + ||s * z||_1 over |k| <= K,  truncation tail bound).

    The tail bound follows the 1/|k|^d kernel decay: infinite when the mean
    of s is nonzero (the truncated sum then grows like log K in d = 1), else
    Lipschitz-of-z times the first moment of s summed over |k| > K.
    """
    if not s:
        return 0.0, 0.0
    mean, is_zero = mean_zero_check(s)
    value = seq_norm(s, 1.0) + seq_vector_l1(convolve_seq(s, z))
    if not is_zero:
        return value, math.inf
    m1 = sum(abs(v) * max(1, int(np.abs(k).max()))
             for k, v in sorted(s.items()))
    c_d = 2.0 if z.d == 1 else 2.0 * math.pi
    tail = z.difference_constant() * m1 * c_d / max(z.K, 1)
    return value, tail


def h1_mixed_norm(c: CoeffArray, z: KernelSeq) -> tuple[float, float]:
    """||c||_{ell^1(h^1)} = sum_j ||c_j||_{h^1}, with the summed tail bound."""
    total, tail = 0.0, 0.0
    for s in c.scales:
        v, t = h1_seq_norm(s, z)
        total += v
        tail += t
    return total, tail


# ---------------------------------------------------------------------------
# spectral helper fields mu, lambda, mu_j
# ---------------------------------------------------------------------------


def spectral_helpers(cut: CutoffSpec, lat: Lattice, j: int, sched, grid,
                     lambda_radii: tuple[float, float] = (0.25, 0.4375)):
    """Grid realizations of mu, lambda, mu_j.

    mu^(xi) = nu(xi b); lambda^ is the same bump profile rescaled into
    C_0 b^{-1} with lambda^(0) = 1; mu_j^(xi) = nu(xi b / alpha_j).
    Errors out when a multiplier support pokes past the grid Nyquist band or
    the realized field has not decayed at the box boundary (leakage > 1e-8).
    """
    from .grids import field_from_spectrum

    alpha = sched.alpha(j)
    d = lat.d

    def check_band(scale_t):
        for t in range(d):
            nyq = 0.5 / grid.h[t]
            if cut.outer_radius * abs(scale_t(t)) > nyq:
                raise ValueError(
                    f"multiplier support exceeds Nyquist on axis {t}: "
                    f"{cut.outer_radius * abs(scale_t(t)):.3g} > {nyq:.3g}")

    check_band(lambda t: 1.0 / lat.diag[t])
    check_band(lambda t: alpha / lat.diag[t])

    def mu_hat(*xi):
        return cut.nu([np.asarray(xi[t]) * lat.diag[t] for t in range(d)])

    def lam_hat(*xi):
        out = np.ones(np.broadcast_shapes(*(np.shape(x) for x in xi)))
        for t in range(d):
            out = out * bump_1d(np.asarray(xi[t]) * lat.diag[t], *lambda_radii)
        return out

    def muj_hat(*xi):
        return cut.nu([np.asarray(xi[t]) * lat.diag[t] / alpha for t in range(d)])

    fields = {
        "mu": field_from_spectrum(grid, mu_hat, meta="mu"),
        "lambda": field_from_spectrum(grid, lam_hat, meta="lambda"),
        "mu_j": field_from_spectrum(grid, muj_hat, meta=f"mu_{j}"),
    }
    for name, f in fields.items():
        peak = float(np.abs(f.values).max())
        edge = 0.0
        for t in range(d):
            sl = [slice(None)] * d
            sl[t] = 0
            edge = max(edge, float(np.abs(f.values[tuple(sl)]).max()))
        if peak > 0 and edge / peak > 1e-8:
            raise ValueError(
                f"{name}: boundary leakage {edge / peak:.3e} exceeds 1e-8 "
                "(box too small for this multiplier)")
    return fields


def export_kernel_csv(z: KernelSeq, path) -> None:
    """CSV export: k columns, Re/Im per component, header with provenance."""
    with open(path, "w") as fh:
        fh.write(f"# provenance={z.provenance}\n")
        for key in sorted(z.meta):
            fh.write(f"# {key}={z.meta[key]}\n")
        fh.write(f"# K={z.K}\n")
        cols = [f"k{t}" for t in range(z.d)]
        cols += [f"re{t},im{t}" for t in range(z.d)]
        fh.write(",".join(cols) + "\n")
        order = np.lexsort(tuple(z.ks[:, t] for t in reversed(range(z.d))))
        for i in order:
            parts = [str(int(v)) for v in z.ks[i]]
            for t in range(z.d):
                parts.append(repr(z.values[i, t].real))
                parts.append(repr(z.values[i, t].imag))
            fh.write(",".join(parts) + "\n")
