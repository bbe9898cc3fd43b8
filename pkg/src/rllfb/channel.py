"""Binary-input binary-output channel model and entropy helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Slack used when checking probabilities and the canonical half-plane.
PROB_EPS = 1e-12


def binary_entropy(p):
    """Binary entropy in bits, with 0*log(0) taken as 0.

    Accepts a float or a numpy array.
    """
    if isinstance(p, np.ndarray):
        if np.any((p < -PROB_EPS) | (p > 1 + PROB_EPS)):
            raise ValueError("binary_entropy: argument outside [0, 1]")
        q = np.clip(p, 0.0, 1.0)
        inner = (q > 0.0) & (q < 1.0)
        safe = np.where(inner, q, 0.5)
        out = -safe * np.log2(safe) - (1.0 - safe) * np.log2(1.0 - safe)
        return np.where(inner, out, 0.0)
    p = float(p)
    if p < -PROB_EPS or p > 1 + PROB_EPS or math.isnan(p):
        msg = f"binary_entropy: argument {p!r} outside [0, 1]"
        raise ValueError(msg)
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def xlog2x(x: float) -> float:
    """x*log2(x) with the 0*log(0) = 0 convention."""
    return 0.0 if x <= 0.0 else x * math.log2(x)


@dataclass(frozen=True)
class ChannelParams:
    """Crossover probabilities: alpha = P(Y=1|X=0), beta = P(Y=0|X=1)."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                msg = f"{name}={v!r} is not a probability"
                raise ValueError(msg)

    @property
    def alpha_bar(self) -> float:
        return 1.0 - self.alpha

    @property
    def beta_bar(self) -> float:
        return 1.0 - self.beta

    @property
    def is_canonical(self) -> bool:
        return self.alpha + self.beta <= 1.0 + PROB_EPS

    def require_canonical(self) -> None:
        if not self.is_canonical:
            msg = f"channel ({self.alpha}, {self.beta}) is not canonical; call canonicalize first"
            raise ValueError(msg)

    def output_one_prob(self, z: float) -> float:
        """P(Y=1) when P(X=1) = z."""
        return self.alpha * (1.0 - z) + self.beta_bar * z


def canonicalize(params: ChannelParams) -> tuple[ChannelParams, bool]:
    """Map to alpha + beta <= 1 by complementing the output if needed."""
    if params.alpha + params.beta <= 1.0:
        return params, False
    return ChannelParams(1.0 - params.alpha, 1.0 - params.beta), True


def likelihood(params: ChannelParams, y: int, x: int) -> float:
    """p(y|x) of the channel."""
    if x not in (0, 1) or y not in (0, 1):
        msg = f"bits expected, got x={x!r}, y={y!r}"
        raise ValueError(msg)
    if x == 0:
        return params.alpha if y == 1 else 1.0 - params.alpha
    return params.beta if y == 0 else 1.0 - params.beta


def likelihood_table(params: ChannelParams) -> np.ndarray:
    """Array L[x, y] = p(y|x)."""
    a, b = params.alpha, params.beta
    return np.array([[1.0 - a, a], [b, 1.0 - b]])


def transmit(params: ChannelParams, x: int, rng: np.random.Generator) -> int:
    """Send one bit through the channel."""
    if x not in (0, 1):
        msg = f"input must be a bit, got {x!r}"
        raise ValueError(msg)
    p_one = params.alpha if x == 0 else params.beta_bar
    return int(rng.random() < p_one)


def is_rll(bits) -> bool:
    """True when the sequence has no two consecutive ones."""
    prev = 0
    for b in bits:
        if b and prev:
            return False
        prev = b
    return True
