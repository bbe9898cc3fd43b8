"""Feedback capacity of the input-constrained binary channel.

Two independent evaluations are provided: direct maximisation of the
single-letter rate function over the input parameter z, and bisection on the
first-order optimality condition written in terms of p = P(Y=1).  The
symmetric, S- and Z-channel special cases have their own reduced formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .channel import ChannelParams, binary_entropy, xlog2x
from .search import golden_max, maximize_on_interval

Z_TOL = 1e-10
ROOT_XTOL = 1e-13
ROOT_EDGE = 1e-15


class SingularParametersError(ValueError):
    """The root formulation divides by 1 - alpha - beta = 0."""


@dataclass(frozen=True)
class CapacityResult:
    capacity: float
    z_opt: float
    p_opt: float
    method: str  # "maximization" or "root"

    def to_dict(self) -> dict:
        return {"capacity": self.capacity, "z_opt": self.z_opt,
                "p_opt": self.p_opt, "method": self.method}


def rate_function(z, params: ChannelParams):
    """Single-letter objective R(z) whose maximum over z is the capacity.

    Works elementwise on numpy arrays.
    """
    params.require_canonical()
    a, b = params.alpha, params.beta
    ha, hb = binary_entropy(a), binary_entropy(b)
    ab = a * (1.0 - b)
    if isinstance(z, np.ndarray):
        p = a * (1.0 - z) + (1.0 - b) * z
        safe = np.where(p > 0.0, p, 1.0)
        cross = np.where(p > 0.0, p * binary_entropy(np.minimum(ab / safe, 1.0)), 0.0)
    else:
        z = float(z)
        p = a * (1.0 - z) + (1.0 - b) * z
        cross = p * binary_entropy(min(ab / p, 1.0)) if p > 0.0 else 0.0
    num = (binary_entropy(p) + cross
           - ((1.0 - z) + (1.0 - b) * z) * ha
           - (z + a * (1.0 - z)) * hb)
    return num / (1.0 + p)


def z_bounds(params: ChannelParams) -> tuple[float, float]:
    """Closed-form interval known to contain the maximiser of R."""
    params.require_canonical()
    sa, sab = math.sqrt(params.alpha), math.sqrt(params.alpha_bar)
    sb, sbb = math.sqrt(params.beta), math.sqrt(params.beta_bar)
    lo = sa / (sa + sbb) if sa + sbb > 0 else 0.5
    hi = sab / (sab + sb) if sab + sb > 0 else 0.5
    return lo, hi


def capacity_by_maximization(params: ChannelParams) -> CapacityResult:
    """Maximise R(z) over [z_L, z_U]."""
    lo, hi = z_bounds(params)
    z, val, _ = maximize_on_interval(lambda t: rate_function(t, params), lo, hi, Z_TOL)
    return CapacityResult(max(val, 0.0), z, params.output_one_prob(z), "maximization")


def optimality_lhs(p: float, params: ChannelParams) -> float:
    """Left side of the first-order condition in p; strictly decreasing on (alpha*beta_bar, 1)."""
    a, b = params.alpha, params.beta
    ab = a * (1.0 - b)
    bracket = (2.0 * math.log2(1.0 - p) - (1.0 + ab) * math.log2(p - ab) + xlog2x(ab))
    return (1.0 - ab) * (binary_entropy(a) - binary_entropy(b)) + ((1.0 - b) - a) * bracket


def _z_from_p(p: float, params: ChannelParams) -> float:
    span = params.beta_bar - params.alpha
    return 0.5 if span <= 0 else (p - params.alpha) / span


def capacity_by_root(params: ChannelParams) -> CapacityResult:
    """Solve the optimality condition by bisection and evaluate the closed form."""
    params.require_canonical()
    a, b = params.alpha, params.beta
    gap = 1.0 - a - b
    if abs(gap) < 1e-12:
        msg = "alpha + beta = 1 is singular for the root form; use capacity_by_maximization"
        raise SingularParametersError(msg)
    ab = a * (1.0 - b)
    p = bisect(optimality_lhs, ab + ROOT_EDGE, 1.0 - ROOT_EDGE, args=(params,),
               xtol=ROOT_XTOL, maxiter=500)
    cap = (math.log2((1.0 - p) / (p - ab))
           + b * binary_entropy(a) / gap - (1.0 - a) * binary_entropy(b) / gap)
    return CapacityResult(cap, _z_from_p(p, params), p, "root")


def _check(a: float, b: float, tol: float, what: str) -> None:
    if abs(a - b) > tol:
        msg = f"{what}: forms disagree ({a!r} vs {b!r})"
        raise ArithmeticError(msg)


def bsc_capacity(alpha: float) -> CapacityResult:
    """Symmetric channel: maximisation over p in [sqrt(alpha*(1-alpha)), 1/2], checked against its root form."""
    if not 0.0 <= alpha <= 0.5:
        msg = f"bsc_capacity needs 0 <= alpha <= 0.5 (canonicalize first), got {alpha}"
        raise ValueError(msg)
    x = alpha * (1.0 - alpha)
    h = binary_entropy(alpha)

    def objective(p: float) -> float:
        cross = p * binary_entropy(min(x / p, 1.0)) if p > 0 else 0.0
        return (binary_entropy(p) + cross) / (1.0 + p) - h

    lo = math.sqrt(x)
    p_max, c_max = golden_max(objective, lo, 0.5, Z_TOL)

    def lhs(p: float) -> float:
        return xlog2x(x) + 2.0 * math.log2(1.0 - p) - (1.0 + x) * math.log2(p - x)

    p_root = bisect(lhs, x + ROOT_EDGE, 1.0 - ROOT_EDGE, xtol=ROOT_XTOL, maxiter=500)
    c_root = math.log2((1.0 - p_root) / (p_root - x)) - h
    _check(c_max, c_root, 1e-8, "bsc_capacity")
    z = 0.5 if alpha == 0.5 else (p_root - alpha) / (1.0 - 2.0 * alpha)
    return CapacityResult(max(c_max, 0.0), z, p_root, "maximization")


def s_channel_forms(p, alpha: float):
    """Both algebraic forms of the S-channel objective at output parameter p."""
    ha = binary_entropy(alpha)
    abar = 1.0 - alpha
    if isinstance(p, np.ndarray):
        cross = np.where(p > 0, p * binary_entropy(np.minimum(alpha / np.where(p > 0, p, 1.0), 1.0)), 0.0)
        shaped = binary_entropy(np.clip((1.0 - p) / abar, 0.0, 1.0))
    else:
        cross = p * binary_entropy(min(alpha / p, 1.0)) if p > 0 else 0.0
        shaped = binary_entropy(min(max((1.0 - p) / abar, 0.0), 1.0))
    first = (binary_entropy(p) + cross - ha) / (1.0 + p)
    second = abar * shaped / (1.0 + p)
    return first, second


def s_channel_capacity(alpha: float) -> CapacityResult:
    """Channel with beta = 0: maximum over p in [sqrt(alpha), 1]."""
    if not 0.0 <= alpha < 1.0:
        msg = f"s_channel_capacity needs 0 <= alpha < 1, got {alpha}"
        raise ValueError(msg)
    p, c = golden_max(lambda t: s_channel_forms(t, alpha)[0], math.sqrt(alpha), 1.0, Z_TOL)
    first, second = s_channel_forms(p, alpha)
    _check(first, second, 1e-10, "s_channel_capacity")
    z = (p - alpha) / (1.0 - alpha)
    return CapacityResult(max(c, 0.0), z, p, "maximization")


def z_channel_optimal_p(beta: float) -> float:
    """Root in (0, 1) of (1-p)^2 = p * 2^(H(beta)/(1-beta))."""
    c = 2.0 ** (binary_entropy(beta) / (1.0 - beta))
    s = 2.0 + c
    # smaller root of p^2 - s p + 1 = 0, written to avoid cancellation
    return 2.0 / (s + math.sqrt(s * s - 4.0))


def z_channel_capacity(beta: float) -> CapacityResult:
    """Channel with alpha = 0: closed-form quadratic root, checked against maximisation."""
    if not 0.0 <= beta < 1.0:
        msg = f"z_channel_capacity needs 0 <= beta < 1, got {beta}"
        raise ValueError(msg)
    p = z_channel_optimal_p(beta)
    cap = -math.log2(1.0 - p)
    slope = binary_entropy(beta) / (1.0 - beta)
    _, c_max = golden_max(lambda t: (binary_entropy(t) - t * slope) / (1.0 + t),
                          0.0, 1.0 - beta, Z_TOL)
    _check(cap, c_max, 1e-10, "z_channel_capacity")
    return CapacityResult(cap, p / (1.0 - beta), p, "root")
