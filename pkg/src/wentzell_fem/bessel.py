"""Integer-order Bessel functions J_n and I_n for real arguments 0 <= x <= 30.

Evaluated by the ascending series for small arguments and Miller's backward
recurrence (normalized with the Neumann sum) otherwise. The scaled variants
``J_n(x) / x**n`` and ``I_n(x) / x**n`` stay finite and nonzero at x = 0.
"""
from __future__ import annotations

import math

import numpy as np

MAX_ARG = 30.0
_SERIES_SWITCH = 2.0


def _check(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > MAX_ARG):
        raise ValueError(f"Bessel evaluators are limited to 0 <= x <= {MAX_ARG}")
    return x


def _series_scaled(n: int, x, sign: float):
    """sum_m sign^m (x/2)^(2m) / (m! (n+m)!) / 2^n, i.e. J_n/x^n (sign=-1) or I_n/x^n (sign=+1)."""
    x = np.asarray(x, dtype=float)
    q = sign * (0.5 * x) ** 2
    term = np.full_like(x, 1.0 / (2.0**n * math.factorial(n)))
    total = term.copy()
    for m in range(1, 200):
        term = term * q / (m * (n + m))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total


def _miller(nmax: int, x, sign: float) -> np.ndarray:
    """Orders 0..nmax at each x > 0 by backward recurrence, shape (nmax+1, len(x)).

    ``sign=-1`` gives J_n, normalized by J_0 + 2 sum J_2k = 1; ``sign=+1`` gives
    I_n, normalized by I_0 + 2 sum I_k = e^x.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    top = max(nmax, int(x.max()))
    start = 2 * ((top + int(math.sqrt(40.0 * max(top, 1))) + 20) // 2)
    cur = np.full_like(x, 1e-30)
    nxt = np.zeros_like(x)
    out = np.zeros((nmax + 1, len(x)))
    if start <= nmax:
        out[start] = cur
    norm = np.zeros_like(x)
    for k in range(start, 0, -1):
        prev = 2.0 * k / x * cur + sign * nxt
        nxt, cur = cur, prev
        if k - 1 > 0 and (sign > 0 or (k - 1) % 2 == 0):
            norm += 2.0 * cur
        if k - 1 <= nmax:
            out[k - 1] = cur
        big = np.abs(cur) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            cur, nxt, norm = cur * scale, nxt * scale, norm * scale
            out[k - 1 :] *= scale
    norm += cur
    if sign > 0:
        return out / norm * np.exp(x)
    return out / norm


def jn_scaled(n: int, x):
    """J_n(x) / x**n."""
    x = _check(x)
    flat = np.atleast_1d(x).ravel()
    out = np.empty_like(flat)
    small = flat < _SERIES_SWITCH
    out[small] = _series_scaled(n, flat[small], -1.0)
    if np.any(~small):
        big = flat[~small]
        out[~small] = _miller(n, big, -1.0)[n] / big**n
    return out.reshape(x.shape) if x.ndim else float(out[0])


def in_scaled(n: int, x):
    """I_n(x) / x**n."""
    x = _check(x)
    # positive series: no cancellation; use it wherever the term count stays modest
    return _series_scaled(n, x, 1.0) if x.ndim else float(_series_scaled(n, x, 1.0))


def jn(n: int, x):
    x = _check(x)
    return jn_scaled(n, x) * x**n


def iv(n: int, x):
    x = _check(x)
    return in_scaled(n, x) * x**n


def jn_all(nmax: int, x: float) -> np.ndarray:
    """J_0(x) .. J_nmax(x) for scalar x."""
    x = float(_check(x))
    if x < _SERIES_SWITCH:
        return np.array([_series_scaled(n, np.array(x), -1.0) * x**n for n in range(nmax + 1)], dtype=float)
    return _miller(nmax, x, -1.0)[:, 0]


def in_all(nmax: int, x: float) -> np.ndarray:
    x = float(_check(x))
    if x < _SERIES_SWITCH:
        return np.array([_series_scaled(n, np.array(x), 1.0) * x**n for n in range(nmax + 1)], dtype=float)
    return _miller(nmax, x, 1.0)[:, 0]
