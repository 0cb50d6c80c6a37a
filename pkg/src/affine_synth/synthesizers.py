"""Catalog of synthesizers and analyzers with exact point evaluation.

Every shipped function is a tensor product over axes of a cardinal B-spline
block (``orders[t]`` normalized cell-indicator factors) convolved with one
elementary inner factor:

    delta         nothing (pure spline)
    indicator     the period-cell indicator, plain 1_{bC} or |bC|^{-1} 1_{bC}
    gaussian      exp(-pi |x/w|^2) / w^d
    mexican-hat   (1 - x^2) exp(-x^2 / 2), one dimension
    bandlimited   inverse transform of a smooth bump supported in C_0 b^{-1}

Spline-with-indicator composites have closed forms (the indicator just raises
the spline order); spline-with-smooth composites are evaluated by
Gauss-Legendre quadrature over the spline knot intervals.  The catalog
requires positive lattice entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _accel
from ._profiles import (bump_1d, inverse_bump_radius, inverse_bump_values)
from .geometry import Box, Lattice

__all__ = [
    "Synthesizer", "NormParams",
    "indicator_cell", "tent", "bspline_form", "gaussian", "mexican_hat",
    "bandlimited", "eta_rho", "parse_synthesizer",
]

GAUSS_TAIL_TOL = 1e-12
# radius r with int_{|u|>r} exp(-pi u^2) du < 1e-12 (per unit width, one axis)
GAUSS_RADIUS = 4.0
MEXHAT_RADIUS = 8.5


@dataclass(frozen=True)
class NormParams:
    """Conjugate exponent pair 1/p + 1/q = 1, with q = inf at p = 1."""

    p: float

    def __post_init__(self):
        if not (self.p >= 1.0):
            raise ValueError("p must lie in [1, inf]")

    @property
    def q(self) -> float:
        if self.p == 1.0:
            return math.inf
        if math.isinf(self.p):
            return 1.0
        return self.p / (self.p - 1.0)

    @property
    def inv_p(self) -> float:
        return 0.0 if math.isinf(self.p) else 1.0 / self.p

    @property
    def inv_q(self) -> float:
        q = self.q
        return 0.0 if math.isinf(q) else 1.0 / q


@dataclass(frozen=True)
class Synthesizer:
    kind: str                      # catalog name, also the spec-string head
    lat: Lattice
    orders: tuple[int, ...]        # per-axis count of normalized cell factors
    inner: str                     # "delta"|"indicator"|"gaussian"|"mexican-hat"|"bandlimited"
    normalized: bool = True        # indicator inner: |bC|^{-1} 1_{bC} vs 1_{bC}
    width: float = 1.0             # gaussian width
    radii: tuple[float, float] = (0.25, 0.4375)  # bandlimited bump radii

    def __post_init__(self):
        if any(b <= 0 for b in self.lat.diag):
            raise ValueError("synthesizer catalog requires positive lattice entries")
        if len(self.orders) != self.lat.d:
            raise ValueError("orders must give one spline order per axis")
        if self.inner == "delta" and any(o < 1 for o in self.orders):
            raise ValueError("pure spline needs at least one factor per axis")
        if self.inner == "mexican-hat" and self.lat.d != 1:
            raise ValueError("mexican hat ships in one dimension only")

    # -- structure ---------------------------------------------------------

    @property
    def d(self) -> int:
        return self.lat.d

    @property
    def unbounded(self) -> bool:
        return self.inner in ("gaussian", "mexican-hat", "bandlimited")

    @property
    def truncation_tol(self) -> float:
        return GAUSS_TAIL_TOL

    def _inner_radius(self) -> float:
        if self.inner == "gaussian":
            return GAUSS_RADIUS * self.width
        if self.inner == "mexican-hat":
            return MEXHAT_RADIUS
        if self.inner == "bandlimited":
            return inverse_bump_radius(*self.radii) * max(self.lat.diag)
        return 0.0

    @property
    def support(self) -> Box:
        """Support box (truncated at tolerance 1e-12 for unbounded kinds)."""
        lo, hi = [], []
        r = self._inner_radius()
        for t in range(self.d):
            b = self.lat.diag[t]
            o = self.orders[t] + (1 if self.inner == "indicator" else 0)
            lo.append(0.0 - r)
            hi.append(max(o * b + r, r if r > 0.0 else o * b))
        return Box(tuple(lo), tuple(hi))

    def integral(self) -> float:
        """gamma = integral of the synthesizer (closed form)."""
        if self.inner == "mexican-hat":
            return 0.0
        if self.inner == "indicator" and not self.normalized:
            return self.lat.abs_det_b
        return 1.0

    # -- numeric profile for the accelerated kernels ------------------------

    def axis_profile(self, t: int) -> tuple[int, int, float, float]:
        """(kind, order, width, norm) codes for axis t; see _accel."""
        b = self.lat.diag[t]
        o = self.orders[t]
        if self.inner == "delta":
            return (_accel.KIND_SPLINE, o, b, 1.0 / b)
        if self.inner == "indicator":
            norm = 1.0 / b if self.normalized else 1.0
            return (_accel.KIND_SPLINE, o + 1, b, norm)
        if self.inner == "gaussian":
            if o:
                raise ValueError("spline-gaussian composites have no closed axis form")
            return (_accel.KIND_GAUSSIAN, 0, self.width, 1.0)
        if self.inner == "mexican-hat":
            if o:
                raise ValueError("spline-mexican-hat composites have no closed axis form")
            return (_accel.KIND_MEXHAT, 0, 1.0, 1.0)
        raise ValueError(f"no pointwise profile for inner={self.inner!r}")

    def closed_form(self) -> bool:
        """True when the accelerated per-point kernels can evaluate it."""
        if self.inner in ("delta", "indicator"):
            return True
        return self.inner in ("gaussian", "mexican-hat") and not any(self.orders)

    def profile_arrays(self):
        prof = [self.axis_profile(t) for t in range(self.d)]
        kind = np.array([p[0] for p in prof], dtype=np.int64)
        order = np.array([p[1] for p in prof], dtype=np.int64)
        width = np.array([p[2] for p in prof], dtype=np.float64)
        norm = np.array([p[3] for p in prof], dtype=np.float64)
        sup = self.support
        return kind, order, width, norm, np.array(sup.lo), np.array(sup.hi)

    # -- evaluation ----------------------------------------------------------

    def _axis_values(self, t: int, u: np.ndarray) -> np.ndarray:
        b = self.lat.diag[t]
        o = self.orders[t]
        if self.inner in ("delta", "indicator"):
            kind, order, width, norm = self.axis_profile(t)
            return _accel.axis_values(kind, order, width, norm, u)
        if self.inner == "bandlimited":
            if o:
                raise ValueError("bandlimited analyzers carry no spline factors")
            return inverse_bump_values(u / b, *self.radii) / b
        # smooth inner behind a spline block: Gauss-Legendre over knot cells
        if self.inner == "gaussian":
            inner = lambda v: np.exp(-np.pi * (v / self.width) ** 2) / self.width
        else:
            inner = lambda v: (1.0 - v * v) * np.exp(-0.5 * v * v)
        if o == 0:
            return inner(u)
        nodes, weights = np.polynomial.legendre.leggauss(24)
        out = np.zeros_like(np.asarray(u, dtype=float))
        for cell in range(o):
            y = b * (cell + 0.5 + 0.5 * nodes)          # nodes in [cell*b, (cell+1)*b)
            w = weights * (b / 2.0)
            spline = _accel.bspline_values(o, y / b) / b
            for yi, wi, si in zip(y, w, spline):
                out += wi * si * inner(u - yi)
        return out

    def evaluate(self, pts) -> np.ndarray:
        """Pointwise values; pts has shape (..., d) (or plain floats when d=1)."""
        pts = np.asarray(pts, dtype=float)
        if self.d == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
            pts = pts.reshape(pts.shape + (1,))
        out = np.ones(pts.shape[:-1])
        for t in range(self.d):
            out = out * self._axis_values(t, pts[..., t])
        return out

    def __call__(self, pts) -> np.ndarray:
        return self.evaluate(pts)

    def spec_string(self) -> str:
        return self.kind


# -- constructors ------------------------------------------------------------


def indicator_cell(lat: Lattice, normalized: bool = True) -> Synthesizer:
    """|bC|^{-1} 1_{bC} (normalized, the canonical analyzer) or plain 1_{bC}."""
    return Synthesizer("indicator" if normalized else "indicator:plain",
                       lat, (0,) * lat.d, "indicator", normalized=normalized)


def tent(lat: Lattice) -> Synthesizer:
    """beta * beta per axis; translates form a partition of unity."""
    return replace(bspline_form(1, indicator_cell(lat)), kind="tent")


def bspline_form(m: int, inner: Synthesizer) -> Synthesizer:
    """The convolution form: m normalized cell factors in front of `inner`."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    name = f"bspline:m={m}:inner={inner.kind}"
    return replace(inner, kind=name,
                   orders=tuple(o + m for o in inner.orders))


def gaussian(lat: Lattice, width: float = 1.0) -> Synthesizer:
    if width <= 0:
        raise ValueError("width must be positive")
    return Synthesizer(f"gaussian:w={width:g}", lat, (0,) * lat.d,
                       "gaussian", width=width)


def mexican_hat(lat: Lattice) -> Synthesizer:
    return Synthesizer("mexican-hat", lat, (0,), "mexican-hat")


def bandlimited(lat: Lattice, inner_radius: float = 0.25,
                outer_radius: float = 0.4375) -> Synthesizer:
    """Analyzer whose transform is a smooth bump supported in C_0 b^{-1}.

    The bump equals 1 at 0 (so the integral is 1) and vanishes for
    |xi_t b_t| >= outer_radius < 1/2.
    """
    if not 0.0 < inner_radius < outer_radius <= 0.5:
        raise ValueError("need 0 < inner < outer <= 1/2")
    if outer_radius == 0.5:
        raise ValueError("bump support must stay inside the open cube C_0")
    return Synthesizer("bandlimited", lat, (0,) * lat.d, "bandlimited",
                       radii=(inner_radius, outer_radius))


def spectrum(s: Synthesizer, xi: list[np.ndarray]) -> np.ndarray:
    """Fourier transform of a bandlimited analyzer at row frequencies xi."""
    if s.inner != "bandlimited":
        raise ValueError("spectrum() is for bandlimited analyzers")
    out = np.ones(np.broadcast_shapes(*(np.shape(x) for x in xi)))
    for t in range(s.d):
        out = out * bump_1d(xi[t] * s.lat.diag[t], *s.radii)
    return out


def eta_rho(rho: tuple[int, ...], m: int, eta: Synthesizer) -> Synthesizer:
    """Companion synthesizer for the derivative-to-difference identity.

    On axis t the spline order drops from m to m - rho_t (the slab factors
    carry a delta on their own axis, a cell indicator on every other axis).
    rho = 0 returns the full convolution form itself.
    """
    rho = tuple(int(r) for r in rho)
    if len(rho) != eta.d:
        raise ValueError("rho must have one entry per axis")
    if any(r < 0 for r in rho):
        raise ValueError("rho entries must be nonnegative")
    if sum(rho) > m:
        raise ValueError(f"|rho| = {sum(rho)} exceeds m = {m}")
    name = f"eta:rho={','.join(map(str, rho))}:m={m}:inner={eta.kind}"
    return replace(eta, kind=name,
                   orders=tuple(m - r + o for r, o in zip(rho, eta.orders)))


def periodization_majorant_norm(s: Synthesizer, lat: Lattice, p: float,
                                probe: int | None = None) -> float:
    """|| P|psi| ||_{L^p(bC)} by fine-grid quadrature of the wrapped sum.

    The probe grid is periodic over the cell, so the rectangle rule is
    spectrally accurate for the smooth kinds and exact for the aligned
    indicator/spline kinds.  For p = inf the argmax is refined locally.
    """
    if p < 1.0:
        raise ValueError("p must lie in [1, inf]")
    d = lat.d
    if probe is None:
        probe = 4096 if d == 1 else 512
    axes = [lat.diag[t] * (np.arange(probe) + 0.5) / probe for t in range(d)]
    sup = s.support

    def wrapped_abs(pts):  # pts shape (..., d)
        out = np.zeros(pts.shape[:-1])
        k_ranges = []
        for t in range(d):
            b = lat.diag[t]
            lo = math.floor((-sup.hi[t]) / b)
            hi = math.ceil((lat.diag[t] - sup.lo[t]) / b)
            k_ranges.append(range(lo, hi + 1))
        import itertools
        for k in itertools.product(*k_ranges):
            shift = pts - np.array([lat.diag[t] * k[t] for t in range(d)])
            out += np.abs(s.evaluate(shift))
        return lat.abs_det_b * out

    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    vals = wrapped_abs(mesh)
    if math.isinf(p):
        peak = float(vals.max())
        if s.unbounded:  # refine the argmax for smooth periodizations
            arg = np.unravel_index(int(vals.argmax()), vals.shape)
            center = np.array([axes[t][arg[t]] for t in range(d)])
            span = np.array([lat.diag[t] / probe for t in range(d)])
            fine = [center[t] + span[t] * np.linspace(-1, 1, 129) for t in range(d)]
            fmesh = np.stack(np.meshgrid(*fine, indexing="ij"), axis=-1)
            peak = max(peak, float(wrapped_abs(fmesh).max()))
        return peak
    cellvol = lat.abs_det_b / probe ** d
    return float((np.sum(vals ** p) * cellvol) ** (1.0 / p))


def quadrature_integral(s: Synthesizer, rtol: float = 1e-10) -> float:
    """Oracle: integral of the synthesizer by adaptive quadrature."""
    from scipy.integrate import quad

    sup = s.support
    if s.d == 1:
        val, _ = quad(lambda u: float(s.evaluate(u).real),
                      sup.lo[0], sup.hi[0], epsabs=rtol, epsrel=rtol, limit=400)
        return val
    # tensor structure: product of per-axis integrals
    total = 1.0
    for t in range(s.d):
        axis = replace(s, lat=Lattice((s.lat.diag[t],)), orders=(s.orders[t],))
        a = axis.support
        val, _ = quad(lambda u: float(axis.evaluate(u).real),
                      a.lo[0], a.hi[0], epsabs=rtol, epsrel=rtol, limit=400)
        total *= val
    return total


def parse_synthesizer(spec: str, lat: Lattice) -> Synthesizer:
    """Parse CLI spec strings.

    Grammar: ``indicator`` | ``indicator:plain`` | ``tent`` |
    ``bspline:m=<int>:inner=<spec>`` | ``gaussian[:w=<float>]`` |
    ``mexican-hat`` | ``bandlimited[:ir=<float>:or=<float>]``.
    """
    head, _, rest = spec.partition(":")
    opts = {}
    for part in rest.split(":"):
        if not part:
            continue
        if "=" in part:
            key, _, val = part.partition("=")
            opts[key] = val
        else:
            opts[part] = True
    if head == "indicator":
        return indicator_cell(lat, normalized=not opts.get("plain", False))
    if head == "tent":
        return tent(lat)
    if head == "gaussian":
        return gaussian(lat, width=float(opts.get("w", 1.0)))
    if head == "mexican-hat":
        return mexican_hat(lat)
    if head == "bandlimited":
        return bandlimited(lat, inner_radius=float(opts.get("ir", 0.25)),
                           outer_radius=float(opts.get("or", 0.4375)))
    if head == "bspline":
        if "m" not in opts or "inner" not in opts:
            raise ValueError(f"bspline spec needs m= and inner=: {spec!r}")
        # the inner spec is everything after "inner="
        inner_spec = rest[rest.index("inner=") + len("inner="):]
        return bspline_form(int(opts["m"]), parse_synthesizer(inner_spec, lat))
    raise ValueError(f"unknown synthesizer spec {spec!r}")
