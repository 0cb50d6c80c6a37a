"""Hot inner loops: per-translate accumulation for synthesis and analysis.

Every kernel exists twice, as a numba ``@njit`` version and as a pure-numpy
version with identical semantics.  The active backend is chosen once at import
time from the ``AFFINE_SYNTH_BACKEND`` environment variable:

    AFFINE_SYNTH_BACKEND=numba   force numba (error if unavailable)
    AFFINE_SYNTH_BACKEND=numpy   force the pure-numpy fallback
    unset / "auto"               numba when importable, else numpy

``benchmarks/bench_backends.py`` times the two paths against each other.

Synthesizer profiles are passed to the kernels as flat numeric codes so the
loops stay object-free:

    kind 0: tensor B-spline, per-axis value  norm * B_order(u / width)
    kind 1: gaussian,        per-axis value  exp(-pi (u/width)^2) / width
    kind 2: mexican hat,     per-axis value  (1 - u^2) exp(-u^2 / 2)

with per-axis ``order``, ``width``, ``norm`` and support window
``[slo, shi)``.  B_o is the cardinal B-spline with o indicator factors
(support [0, o)); the half-open convention at the knots is exact.
"""

from __future__ import annotations

import math
import os

import numpy as np

_env = os.environ.get("AFFINE_SYNTH_BACKEND", "auto").strip().lower() or "auto"
if _env not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"AFFINE_SYNTH_BACKEND={_env!r}: expected 'auto', 'numba' or 'numpy'"
    )

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag instead
    HAVE_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore[misc]
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


if _env == "numba" and not HAVE_NUMBA:
    raise RuntimeError("AFFINE_SYNTH_BACKEND=numba but numba is not importable")

USE_NUMBA = HAVE_NUMBA and _env != "numpy"

KIND_SPLINE = 0
KIND_GAUSSIAN = 1
KIND_MEXHAT = 2

_MAX_BINOM = 16  # highest spline order the loops support
_BINOM = np.zeros((_MAX_BINOM + 1, _MAX_BINOM + 1))
for _o in range(_MAX_BINOM + 1):
    for _i in range(_o + 1):
        _BINOM[_o, _i] = math.comb(_o, _i)
_FACT = np.array([float(math.factorial(i)) for i in range(_MAX_BINOM + 1)])


# ---------------------------------------------------------------------------
# scalar axis evaluation (numba flavour)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _bspline_scalar(order, t):
    # cardinal B-spline with `order` indicator factors, support [0, order)
    if t < 0.0 or t >= order:
        return 0.0
    if order == 1:
        return 1.0
    acc = 0.0
    sign = 1.0
    for i in range(order + 1):
        d = t - i
        if d > 0.0:
            acc += sign * _BINOM[order, i] * d ** (order - 1)
        sign = -sign
    return acc / _FACT[order - 1]


@njit(cache=True)
def _axis_scalar(kind, order, width, norm, u):
    if kind == KIND_SPLINE:
        return norm * _bspline_scalar(order, u / width)
    if kind == KIND_GAUSSIAN:
        v = u / width
        return math.exp(-math.pi * v * v) / width
    v = u * u
    return (1.0 - v) * math.exp(-0.5 * v)


@njit(cache=True)
def _synth_1d_numba(out, x0, h, alpha, b0, pref, ks, svals,
                    kind, order, width, norm, slo, shi):
    n = out.shape[0]
    for idx in range(ks.shape[0]):
        k = ks[idx, 0]
        sv = svals[idx] * pref
        ulo = slo[0] + b0 * k
        uhi = shi[0] + b0 * k
        if alpha > 0.0:
            xlo = ulo / alpha
            xhi = uhi / alpha
        else:
            xlo = uhi / alpha
            xhi = ulo / alpha
        i0 = int(math.floor((xlo - x0) / h)) - 1
        i1 = int(math.ceil((xhi - x0) / h)) + 1
        if i0 < 0:
            i0 = 0
        if i1 > n:
            i1 = n
        for i in range(i0, i1):
            u = alpha * (x0 + i * h) - b0 * k
            w = _axis_scalar(kind[0], order[0], width[0], norm[0], u)
            if w != 0.0:
                out[i] += sv * w


@njit(cache=True)
def _synth_2d_numba(out, x0, y0, hx, hy, alpha, b0, b1, pref, ks, svals,
                    kind, order, width, norm, slo, shi):
    nx = out.shape[0]
    ny = out.shape[1]
    for idx in range(ks.shape[0]):
        kx = ks[idx, 0]
        ky = ks[idx, 1]
        sv = svals[idx] * pref
        ulo = slo[0] + b0 * kx
        uhi = shi[0] + b0 * kx
        vlo = slo[1] + b1 * ky
        vhi = shi[1] + b1 * ky
        if alpha > 0.0:
            xlo, xhi = ulo / alpha, uhi / alpha
            ylo, yhi = vlo / alpha, vhi / alpha
        else:
            xlo, xhi = uhi / alpha, ulo / alpha
            ylo, yhi = vhi / alpha, vlo / alpha
        i0 = max(int(math.floor((xlo - x0) / hx)) - 1, 0)
        i1 = min(int(math.ceil((xhi - x0) / hx)) + 1, nx)
        j0 = max(int(math.floor((ylo - y0) / hy)) - 1, 0)
        j1 = min(int(math.ceil((yhi - y0) / hy)) + 1, ny)
        for i in range(i0, i1):
            u = alpha * (x0 + i * hx) - b0 * kx
            wu = _axis_scalar(kind[0], order[0], width[0], norm[0], u)
            if wu == 0.0:
                continue
            for j in range(j0, j1):
                v = alpha * (y0 + j * hy) - b1 * ky
                wv = _axis_scalar(kind[1], order[1], width[1], norm[1], v)
                if wv != 0.0:
                    out[i, j] += sv * wu * wv


@njit(cache=True)
def _analyze_1d_numba(coefs, values, x0, h, alpha, b0, pref, ks,
                      kind, order, width, norm, slo, shi):
    n = values.shape[0]
    for idx in range(ks.shape[0]):
        k = ks[idx, 0]
        ulo = slo[0] + b0 * k
        uhi = shi[0] + b0 * k
        if alpha > 0.0:
            xlo, xhi = ulo / alpha, uhi / alpha
        else:
            xlo, xhi = uhi / alpha, ulo / alpha
        i0 = max(int(math.floor((xlo - x0) / h)) - 1, 0)
        i1 = min(int(math.ceil((xhi - x0) / h)) + 1, n)
        acc = 0.0 + 0.0j
        for i in range(i0, i1):
            u = alpha * (x0 + i * h) - b0 * k
            w = _axis_scalar(kind[0], order[0], width[0], norm[0], u)
            if w != 0.0:
                acc += values[i] * w
        coefs[idx] = acc * pref


@njit(cache=True)
def _analyze_2d_numba(coefs, values, x0, y0, hx, hy, alpha, b0, b1, pref, ks,
                      kind, order, width, norm, slo, shi):
    nx = values.shape[0]
    ny = values.shape[1]
    for idx in range(ks.shape[0]):
        kx = ks[idx, 0]
        ky = ks[idx, 1]
        ulo = slo[0] + b0 * kx
        uhi = shi[0] + b0 * kx
        vlo = slo[1] + b1 * ky
        vhi = shi[1] + b1 * ky
        if alpha > 0.0:
            xlo, xhi = ulo / alpha, uhi / alpha
            ylo, yhi = vlo / alpha, vhi / alpha
        else:
            xlo, xhi = uhi / alpha, ulo / alpha
            ylo, yhi = vhi / alpha, vlo / alpha
        i0 = max(int(math.floor((xlo - x0) / hx)) - 1, 0)
        i1 = min(int(math.ceil((xhi - x0) / hx)) + 1, nx)
        j0 = max(int(math.floor((ylo - y0) / hy)) - 1, 0)
        j1 = min(int(math.ceil((yhi - y0) / hy)) + 1, ny)
        acc = 0.0 + 0.0j
        for i in range(i0, i1):
            u = alpha * (x0 + i * hx) - b0 * kx
            wu = _axis_scalar(kind[0], order[0], width[0], norm[0], u)
            if wu == 0.0:
                continue
            for j in range(j0, j1):
                v = alpha * (y0 + j * hy) - b1 * ky
                wv = _axis_scalar(kind[1], order[1], width[1], norm[1], v)
                if wv != 0.0:
                    acc += values[i, j] * wu * wv
        coefs[idx] = acc * pref


# ---------------------------------------------------------------------------
# numpy fallbacks
# ---------------------------------------------------------------------------


def bspline_values(order: int, t: np.ndarray) -> np.ndarray:
    """Cardinal B-spline B_order on an array, support [0, order)."""
    t = np.asarray(t, dtype=float)
    if order == 1:
        return ((t >= 0.0) & (t < 1.0)).astype(float)
    out = np.zeros_like(t)
    sign = 1.0
    for i in range(order + 1):
        d = t - i
        out += sign * _BINOM[order, i] * np.where(d > 0.0, d, 0.0) ** (order - 1)
        sign = -sign
    out /= _FACT[order - 1]
    out[(t < 0.0) | (t >= order)] = 0.0
    return out


def axis_values(kind: int, order: int, width: float, norm: float,
                u: np.ndarray) -> np.ndarray:
    if kind == KIND_SPLINE:
        return norm * bspline_values(order, u / width)
    if kind == KIND_GAUSSIAN:
        v = u / width
        return np.exp(-np.pi * v * v) / width
    v = u * u
    return (1.0 - v) * np.exp(-0.5 * v)


def _axis_window(x0, h, n, alpha, b, k, slo, shi):
    ulo = slo + b * k
    uhi = shi + b * k
    if alpha > 0.0:
        xlo, xhi = ulo / alpha, uhi / alpha
    else:
        xlo, xhi = uhi / alpha, ulo / alpha
    i0 = max(int(math.floor((xlo - x0) / h)) - 1, 0)
    i1 = min(int(math.ceil((xhi - x0) / h)) + 1, n)
    return i0, i1


def _synth_1d_numpy(out, x0, h, alpha, b0, pref, ks, svals,
                    kind, order, width, norm, slo, shi):
    n = out.shape[0]
    for idx in range(ks.shape[0]):
        k = int(ks[idx, 0])
        i0, i1 = _axis_window(x0, h, n, alpha, b0, k, slo[0], shi[0])
        if i1 <= i0:
            continue
        u = alpha * (x0 + h * np.arange(i0, i1)) - b0 * k
        out[i0:i1] += (svals[idx] * pref) * axis_values(
            kind[0], order[0], width[0], norm[0], u)


def _synth_2d_numpy(out, x0, y0, hx, hy, alpha, b0, b1, pref, ks, svals,
                    kind, order, width, norm, slo, shi):
    nx, ny = out.shape
    for idx in range(ks.shape[0]):
        kx = int(ks[idx, 0])
        ky = int(ks[idx, 1])
        i0, i1 = _axis_window(x0, hx, nx, alpha, b0, kx, slo[0], shi[0])
        j0, j1 = _axis_window(y0, hy, ny, alpha, b1, ky, slo[1], shi[1])
        if i1 <= i0 or j1 <= j0:
            continue
        u = alpha * (x0 + hx * np.arange(i0, i1)) - b0 * kx
        v = alpha * (y0 + hy * np.arange(j0, j1)) - b1 * ky
        wu = axis_values(kind[0], order[0], width[0], norm[0], u)
        wv = axis_values(kind[1], order[1], width[1], norm[1], v)
        out[i0:i1, j0:j1] += (svals[idx] * pref) * np.outer(wu, wv)


def _analyze_1d_numpy(coefs, values, x0, h, alpha, b0, pref, ks,
                      kind, order, width, norm, slo, shi):
    n = values.shape[0]
    for idx in range(ks.shape[0]):
        k = int(ks[idx, 0])
        i0, i1 = _axis_window(x0, h, n, alpha, b0, k, slo[0], shi[0])
        if i1 <= i0:
            coefs[idx] = 0.0
            continue
        u = alpha * (x0 + h * np.arange(i0, i1)) - b0 * k
        w = axis_values(kind[0], order[0], width[0], norm[0], u)
        coefs[idx] = pref * np.sum(values[i0:i1] * w)


def _analyze_2d_numpy(coefs, values, x0, y0, hx, hy, alpha, b0, b1, pref, ks,
                      kind, order, width, norm, slo, shi):
    nx, ny = values.shape
    for idx in range(ks.shape[0]):
        kx = int(ks[idx, 0])
        ky = int(ks[idx, 1])
        i0, i1 = _axis_window(x0, hx, nx, alpha, b0, kx, slo[0], shi[0])
        j0, j1 = _axis_window(y0, hy, ny, alpha, b1, ky, slo[1], shi[1])
        if i1 <= i0 or j1 <= j0:
            coefs[idx] = 0.0
            continue
        u = alpha * (x0 + hx * np.arange(i0, i1)) - b0 * kx
        v = alpha * (y0 + hy * np.arange(j0, j1)) - b1 * ky
        wu = axis_values(kind[0], order[0], width[0], norm[0], u)
        wv = axis_values(kind[1], order[1], width[1], norm[1], v)
        coefs[idx] = pref * np.sum(values[i0:i1, j0:j1] * np.outer(wu, wv))


if USE_NUMBA:
    synth_1d = _synth_1d_numba
    synth_2d = _synth_2d_numba
    analyze_1d = _analyze_1d_numba
    analyze_2d = _analyze_2d_numba
    BACKEND = "numba"
else:
    synth_1d = _synth_1d_numpy
    synth_2d = _synth_2d_numpy
    analyze_1d = _analyze_1d_numpy
    analyze_2d = _analyze_2d_numpy
    BACKEND = "numpy"
