"""Lattices, boxes and expanding dilation schedules.

All dilations are isotropic diagonal (a_j = alpha_j * I) and the translation
matrix b is diagonal, so every index computation decomposes per axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Lattice",
    "DilationSchedule",
    "Box",
    "dyadic_schedule",
    "check_exponential_expansion",
    "lattice_points_touching",
]


@dataclass(frozen=True)
class Lattice:
    """Translation lattice b Z^d for a diagonal matrix b = diag(diag)."""

    diag: tuple[float, ...]

    def __post_init__(self):
        diag = tuple(float(v) for v in self.diag)
        if len(diag) == 0:
            raise ValueError("lattice needs at least one axis")
        if any(v == 0.0 for v in diag):
            raise ValueError("diagonal entries of b must be nonzero")
        object.__setattr__(self, "diag", diag)

    @property
    def d(self) -> int:
        return len(self.diag)

    @property
    def det_b(self) -> float:
        return math.prod(self.diag)

    @property
    def abs_det_b(self) -> float:
        return abs(self.det_b)

    @property
    def cell_volume(self) -> float:
        """|bC|, the volume of one period cell."""
        return self.abs_det_b

    def cell_box(self) -> "Box":
        """The period cell bC = prod_t [0, b_t) (or [b_t, 0) for b_t < 0)."""
        lo = tuple(min(0.0, v) for v in self.diag)
        hi = tuple(max(0.0, v) for v in self.diag)
        return Box(lo, hi)


def lattice(*diag: float) -> Lattice:
    return Lattice(tuple(diag))


@dataclass(frozen=True)
class Box:
    """Half-open axis-aligned box prod_t [lo_t, hi_t)."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi):
            raise ValueError("lo and hi must have the same dimension")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError("box requires lo < hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def sides(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    @property
    def volume(self) -> float:
        return math.prod(self.sides)

    def contains_box(self, other: "Box") -> bool:
        return all(a <= c and d <= b for a, b, c, d in
                   zip(self.lo, self.hi, other.lo, other.hi))

    def intersects(self, other: "Box") -> bool:
        return all(a < d and c < b for a, b, c, d in
                   zip(self.lo, self.hi, other.lo, other.hi))


def box1d(lo: float, hi: float) -> Box:
    return Box((lo,), (hi,))


@dataclass(frozen=True)
class DilationSchedule:
    """Finite expanding dilation sequence a_j = alpha_j * I, j = 1..J.

    `expansion_delta` stores the delta < 1 certifying exponential expansion
    (max_j |alpha_j / alpha_{j+1}| <= delta); None when not certified.
    """

    alphas: tuple[float, ...]
    expansion_delta: float | None = field(default=None)

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        if len(alphas) < 1:
            raise ValueError("schedule needs at least one scale")
        if any(a == 0.0 for a in alphas):
            raise ValueError("dilation factors must be nonzero")
        mags = [abs(a) for a in alphas]
        if any(m2 <= m1 for m1, m2 in zip(mags, mags[1:])):
            raise ValueError("|alpha_j| must be strictly increasing")
        if self.expansion_delta is not None and not (0.0 < self.expansion_delta < 1.0):
            raise ValueError("stored expansion delta must lie in (0, 1)")
        object.__setattr__(self, "alphas", alphas)

    @property
    def J(self) -> int:
        return len(self.alphas)

    @property
    def expands_exponentially(self) -> bool:
        return self.expansion_delta is not None

    def alpha(self, j: int) -> float:
        """Dilation factor at 1-based scale index j."""
        if not 1 <= j <= self.J:
            raise IndexError(f"scale index {j} outside 1..{self.J}")
        return self.alphas[j - 1]


def dyadic_schedule(base: float, J: int) -> DilationSchedule:
    """Geometric schedule alpha_j = base**j, certified with delta = 1/base."""
    if base <= 1.0:
        raise ValueError("base must exceed 1")
    if J < 1:
        raise ValueError("J must be a positive integer")
    alphas = []
    a = 1.0
    for _ in range(J):
        a *= base
        alphas.append(a)
    return DilationSchedule(tuple(alphas), expansion_delta=1.0 / base)


def check_exponential_expansion(sched: DilationSchedule) -> tuple[bool, float]:
    """Largest consecutive ratio max_j |alpha_j / alpha_{j+1}|.

    Returns (holds, delta) where holds means delta < 1.  Needs J >= 2.
    """
    if sched.J < 2:
        raise ValueError("need at least two scales to test expansion")
    ratios = [abs(a / b) for a, b in zip(sched.alphas, sched.alphas[1:])]
    delta = max(ratios)
    return delta < 1.0, delta


def lattice_points_touching(lat: Lattice, box: Box, support: Box,
                            j: int, sched: DilationSchedule) -> np.ndarray:
    """All k in Z^d whose translate support (support + b k) / alpha_j meets box.

    `support` is the synthesizer support in its own coordinates; boxes are
    half-open so grazing contact at a shared endpoint does not count.
    Returns an (N, d) int64 array in lexicographic order (empty allowed).
    """
    alpha = sched.alpha(j)
    d = lat.d
    if box.d != d or support.d != d:
        raise ValueError("dimension mismatch between lattice, box and support")
    ranges = []
    for t in range(d):
        b = lat.diag[t]
        s_lo, s_hi = support.lo[t], support.hi[t]
        # translate support on axis t: interval with endpoints (s + b k)/alpha
        u1_lo, u1_hi = box.lo[t], box.hi[t]
        # need min < box.hi and max > box.lo, solved for k
        # endpoints of the translate: (s_lo + b k)/alpha and (s_hi + b k)/alpha
        if alpha > 0:
            lo_expr = (s_lo, s_hi)
        else:
            lo_expr = (s_hi, s_lo)
        # translate_lo = (lo_expr[0] + b k)/alpha, translate_hi = (lo_expr[1] + b k)/alpha
        # conditions: translate_lo < u1_hi  and  translate_hi > u1_lo
        #  -> k strictly between two bounds, direction depending on sign(b/alpha)
        c = b / alpha
        bound1 = (u1_hi - lo_expr[0] / alpha) / c  # from translate_lo < u1_hi
        bound2 = (u1_lo - lo_expr[1] / alpha) / c  # from translate_hi > u1_lo
        if c > 0:
            k_hi_excl, k_lo_excl = bound1, bound2
        else:
            k_hi_excl, k_lo_excl = bound2, bound1
        k_min = int(math.floor(k_lo_excl)) + 1
        k_max = int(math.ceil(k_hi_excl)) - 1
        if k_max < k_min:
            return np.empty((0, d), dtype=np.int64)
        ranges.append(np.arange(k_min, k_max + 1, dtype=np.int64))
    grids = np.meshgrid(*ranges, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def translate_support(lat: Lattice, support: Box, j: int,
                      sched: DilationSchedule, k) -> Box:
    """Support box of psi_{j,k}: (support + b k) / alpha_j."""
    alpha = sched.alpha(j)
    lo, hi = [], []
    for t in range(lat.d):
        a = (support.lo[t] + lat.diag[t] * k[t]) / alpha
        b = (support.hi[t] + lat.diag[t] * k[t]) / alpha
        lo.append(min(a, b))
        hi.append(max(a, b))
    return Box(tuple(lo), tuple(hi))
