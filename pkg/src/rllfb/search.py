"""One-dimensional maximisers used by the capacity and DP code."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(f: Callable[[float], float], lo: float, hi: float,
               tol: float = 1e-10, max_iter: int = 200) -> tuple[float, float]:
    """Golden-section search for the maximum of a unimodal f on [lo, hi]."""
    if hi < lo:
        lo, hi = hi, lo
    if hi - lo <= tol:
        x = 0.5 * (lo + hi)
        return x, f(x)
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    # compare the interior survivors with the endpoints so a boundary
    # maximum is not lost
    best = max(((fc, c), (fd, d), (f(lo), lo), (f(hi), hi)), key=lambda t: t[0])
    return best[1], best[0]


def is_unimodal(values: np.ndarray, slack: float = 1e-13) -> bool:
    """Values rise (weakly) to a single peak and then fall."""
    k = int(np.argmax(values))
    rise = np.diff(values[: k + 1])
    fall = np.diff(values[k:])
    return bool(np.all(rise >= -slack) and np.all(fall <= slack))


def maximize_on_interval(f: Callable[[float], float], lo: float, hi: float,
                         tol: float = 1e-10, probe: int = 65,
                         dense: int = 4001) -> tuple[float, float, bool]:
    """Maximise f on [lo, hi].

    Uses golden-section search when a coarse probe looks unimodal, otherwise
    a dense grid followed by golden refinement of the best cell.  The third
    return value reports whether the fallback was taken.
    """
    if hi - lo <= tol:
        x = 0.5 * (lo + hi)
        return x, f(x), False
    grid = np.linspace(lo, hi, probe)
    vals = np.array([f(float(x)) for x in grid])
    if is_unimodal(vals):
        k = int(np.argmax(vals))
        a = grid[max(k - 1, 0)]
        b = grid[min(k + 1, probe - 1)]
        x, fx = golden_max(f, float(a), float(b), tol)
        return x, fx, False
    grid = np.linspace(lo, hi, dense)
    vals = np.array([f(float(x)) for x in grid])
    k = int(np.argmax(vals))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, dense - 1)]
    x, fx = golden_max(f, float(a), float(b), tol)
    return x, fx, True
