"""Smooth compactly supported bump profiles shared by cutoffs and analyzers."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def smoothstep(t: np.ndarray) -> np.ndarray:
    """C-infinity ramp: 0 for t <= 0, 1 for t >= 1, e^{-1/t}-spline between."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    out[t >= 1.0] = 1.0
    inside = (t > 0.0) & (t < 1.0)
    ti = t[inside]
    g1 = np.exp(-1.0 / ti)
    g2 = np.exp(-1.0 / (1.0 - ti))
    out[inside] = g1 / (g1 + g2)
    return out


def bump_1d(xi: np.ndarray, inner: float, outer: float) -> np.ndarray:
    """Even C-infinity bump: 1 on |xi| <= inner, 0 beyond |xi| >= outer."""
    if not 0.0 < inner < outer:
        raise ValueError("need 0 < inner < outer")
    a = np.abs(np.asarray(xi, dtype=float))
    return smoothstep((outer - a) / (outer - inner))


@lru_cache(maxsize=8)
def inverse_bump_table(inner: float, outer: float,
                       radius: float = 512.0,
                       n_xi: int = 1 << 13,
                       n_u: int = 1 << 15) -> tuple[np.ndarray, np.ndarray]:
    """Samples (u, values) of the inverse Fourier transform of bump_1d.

    The bump is smooth and supported in [-outer, outer], so the rectangle
    rule in xi is spectrally accurate; values are real and even in u.
    """
    xi = (np.arange(n_xi) - n_xi // 2) / n_xi * (2.0 * outer * 1.0625)
    dxi = xi[1] - xi[0]
    w = bump_1d(xi, inner, outer)
    u = np.linspace(0.0, radius, n_u)
    # cos transform; exploit evenness of the bump
    vals = (w[None, :] * np.cos(2.0 * np.pi * np.outer(u, xi))).sum(axis=1) * dxi
    return u, vals


def inverse_bump_values(u: np.ndarray, inner: float, outer: float) -> np.ndarray:
    """Pointwise inverse transform of the bump via the cached table."""
    tab_u, tab_v = inverse_bump_table(inner, outer)
    return np.interp(np.abs(np.asarray(u, dtype=float)), tab_u, tab_v,
                     right=0.0)


def inverse_bump_l1_norm(inner: float, outer: float) -> float:
    """L1 norm of the inverse transform of the 1-d bump."""
    tab_u, tab_v = inverse_bump_table(inner, outer)
    du = tab_u[1] - tab_u[0]
    return 2.0 * float(np.sum(np.abs(tab_v)) * du) - float(np.abs(tab_v[0])) * du


def inverse_bump_radius(inner: float, outer: float, tol: float = 1e-12) -> float:
    """Radius beyond which the inverse transform stays below tol * peak."""
    tab_u, tab_v = inverse_bump_table(inner, outer)
    peak = np.abs(tab_v).max()
    above = np.nonzero(np.abs(tab_v) > tol * peak)[0]
    if len(above) == 0:
        return 0.0
    return float(tab_u[min(above[-1] + 1, len(tab_u) - 1)])
