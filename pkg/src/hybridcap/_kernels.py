"""Hot loops of the hybrid-noise model, in numba and in plain numpy.

``HNC_USE_NUMBA=0`` (or numba missing) binds the module-level names to the
numpy versions. Both backends take and return float64 arrays and must agree
to rounding; ``tests/test_kernels.py`` checks that.

Every kernel works on log-weights so that ``y**p / p!`` never overflows.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("HNC_USE_NUMBA", "1") != "0"

_LOG_2PI = math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)
_CHUNK = 256


# ---------------------------------------------------------------- numpy


def convolve_grid_np(n, y, logw, var):
    """``out[i] = sum_j exp(logw[j] - (n[i]-y[j])**2 / (2 var))``."""
    out = np.empty(n.shape[0])
    for lo in range(0, n.shape[0], _CHUNK):
        d = n[lo:lo + _CHUNK, None] - y[None, :]
        out[lo:lo + _CHUNK] = np.exp(logw[None, :] - d * d / (2.0 * var)).sum(axis=1)
    return out


def cdf_grid_np(n, y, w, sigma):
    """``out[i] = sum_j w[j] * Phi((n[i]-y[j]) / sigma)``."""
    from scipy.special import ndtr

    out = np.empty(n.shape[0])
    for lo in range(0, n.shape[0], _CHUNK):
        z = (n[lo:lo + _CHUNK, None] - y[None, :]) / sigma
        out[lo:lo + _CHUNK] = (ndtr(z) * w[None, :]).sum(axis=1)
    return out


def _trap_weights_np(m, h):
    w = np.full(m, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _log_fy_np(y, p, lgp1):
    with np.errstate(divide="ignore"):
        ly = np.log(y)
    # 0**0 = 1 for p = 0
    lp = np.where(y > 0, p * ly, 0.0 if p == 0 else -np.inf)
    return lp - y - lgp1


def convolve_printed_np(n, p, lgp1, var, m):
    """Raw density with the sum truncated to ``y in [0, n]`` (0 for n <= 0)."""
    out = np.zeros(n.shape[0])
    lnorm = -0.5 * (_LOG_2PI + math.log(var))
    for i in range(n.shape[0]):
        ni = n[i]
        if ni <= 0:
            continue
        y = np.linspace(0.0, ni, m)
        w = _trap_weights_np(m, ni / (m - 1))
        d = ni - y
        out[i] = np.sum(w * np.exp(_log_fy_np(y, p, lgp1) - d * d / (2.0 * var) + lnorm))
    return out


def published_sums_np(ni, p, lgp1, var, m, scale):
    """Per-sample sums of the published mean / second-moment / variance terms.

    For each sample ``x`` the dummy grid runs over ``u in [0, x/scale]`` with
    ``y = scale*u`` and weight ``scale*du``. Returns ``(mean_t, second_t,
    cross_t)`` where

    * ``mean_t   = x    * sum fX(x - y)   fY(y) dy``
    * ``second_t = x**2 * sum fX(x**2 - y) fY(y) dy``
    * ``cross_t  = x**2 * sum (fX(x - y) fY(y))**2 dy``
    """
    k = ni.shape[0]
    mean_t = np.zeros(k)
    second_t = np.zeros(k)
    cross_t = np.zeros(k)
    lnorm = -0.5 * (_LOG_2PI + math.log(var))
    for i in range(k):
        x = ni[i]
        if x <= 0:
            continue
        umax = x / scale
        u = np.linspace(0.0, umax, m)
        y = scale * u
        w = scale * _trap_weights_np(m, umax / (m - 1))
        lfy = _log_fy_np(y, p, lgp1)
        a = lfy + lnorm - (x - y) ** 2 / (2.0 * var)
        b = lfy + lnorm - (x * x - y) ** 2 / (2.0 * var)
        mean_t[i] = x * np.sum(w * np.exp(a))
        second_t[i] = x * x * np.sum(w * np.exp(b))
        cross_t[i] = x * x * np.sum(w * np.exp(2.0 * a))
    return mean_t, second_t, cross_t


# ---------------------------------------------------------------- numba

if HAVE_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)

    @_jit
    def convolve_grid_nb(n, y, logw, var):
        out = np.empty(n.shape[0])
        inv = 1.0 / (2.0 * var)
        for i in range(n.shape[0]):
            s = 0.0
            for j in range(y.shape[0]):
                d = n[i] - y[j]
                s += math.exp(logw[j] - d * d * inv)
            out[i] = s
        return out

    @_jit
    def cdf_grid_nb(n, y, w, sigma):
        out = np.empty(n.shape[0])
        for i in range(n.shape[0]):
            s = 0.0
            for j in range(y.shape[0]):
                s += w[j] * 0.5 * math.erfc(-(n[i] - y[j]) / (sigma * _SQRT2))
            out[i] = s
        return out

    @_jit
    def _log_fy_nb(y, p, lgp1):
        if y > 0:
            return p * math.log(y) - y - lgp1
        if p == 0:
            return -lgp1
        return -math.inf

    @_jit
    def convolve_printed_nb(n, p, lgp1, var, m):
        out = np.zeros(n.shape[0])
        lnorm = -0.5 * (_LOG_2PI + math.log(var))
        inv = 1.0 / (2.0 * var)
        for i in range(n.shape[0]):
            ni = n[i]
            if ni <= 0:
                continue
            h = ni / (m - 1)
            s = 0.0
            for j in range(m):
                y = j * h if j < m - 1 else ni
                wj = 0.5 * h if (j == 0 or j == m - 1) else h
                d = ni - y
                s += wj * math.exp(_log_fy_nb(y, p, lgp1) - d * d * inv + lnorm)
            out[i] = s
        return out

    @_jit
    def published_sums_nb(ni, p, lgp1, var, m, scale):
        k = ni.shape[0]
        mean_t = np.zeros(k)
        second_t = np.zeros(k)
        cross_t = np.zeros(k)
        lnorm = -0.5 * (_LOG_2PI + math.log(var))
        inv = 1.0 / (2.0 * var)
        for i in range(k):
            x = ni[i]
            if x <= 0:
                continue
            umax = x / scale
            du = umax / (m - 1)
            sm = 0.0
            ss = 0.0
            sc = 0.0
            for j in range(m):
                u = j * du if j < m - 1 else umax
                y = scale * u
                wj = scale * (0.5 * du if (j == 0 or j == m - 1) else du)
                lfy = _log_fy_nb(y, p, lgp1) + lnorm
                a = lfy - (x - y) * (x - y) * inv
                b = lfy - (x * x - y) * (x * x - y) * inv
                sm += wj * math.exp(a)
                ss += wj * math.exp(b)
                sc += wj * math.exp(2.0 * a)
            mean_t[i] = x * sm
            second_t[i] = x * x * ss
            cross_t[i] = x * x * sc
        return mean_t, second_t, cross_t


_NUMPY = {
    "convolve_grid": convolve_grid_np,
    "cdf_grid": cdf_grid_np,
    "convolve_printed": convolve_printed_np,
    "published_sums": published_sums_np,
}
_NUMBA = (
    {
        "convolve_grid": convolve_grid_nb,
        "cdf_grid": cdf_grid_nb,
        "convolve_printed": convolve_printed_nb,
        "published_sums": published_sums_nb,
    }
    if HAVE_NUMBA
    else {}
)


def backend(name: str) -> dict:
    """Kernel table for ``"numba"`` or ``"numpy"``."""
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not installed")
        return _NUMBA
    if name == "numpy":
        return _NUMPY
    raise ValueError(f"unknown backend {name!r}")


ACTIVE = "numba" if USE_NUMBA else "numpy"
_k = backend(ACTIVE)
convolve_grid = _k["convolve_grid"]
cdf_grid = _k["cdf_grid"]
convolve_printed = _k["convolve_printed"]
published_sums = _k["published_sums"]
