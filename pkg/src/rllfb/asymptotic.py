"""Small-noise expansions of the symmetric-channel capacity, with and without feedback."""

from __future__ import annotations

import math

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0
LOG2_GOLDEN = math.log2(GOLDEN)

#: coefficient of alpha*log2(alpha) with feedback
FEEDBACK_XLOGX = (2.0 - GOLDEN) / (3.0 - GOLDEN)
#: coefficient of alpha (bits).  The expansion is natural in nats, where the
#: linear term is (ln(2-g) - (2-g)) / (3-g); dividing by ln 2 gives bits.
FEEDBACK_LINEAR = (math.log(2.0 - GOLDEN) - (2.0 - GOLDEN)) / ((3.0 - GOLDEN) * math.log(2.0))
#: coefficient of alpha*log2(alpha) without feedback
NONFEEDBACK_XLOGX = (2.0 * GOLDEN + 2.0) / (4.0 * GOLDEN + 3.0)


def _check(alpha: float) -> None:
    if not 0.0 < alpha <= 0.1:
        msg = f"expansion is only meaningful for 0 < alpha <= 0.1, got {alpha}"
        raise ValueError(msg)


def bsc_feedback_asymptotic(alpha: float) -> float:
    """Feedback capacity up to o(alpha)."""
    _check(alpha)
    return LOG2_GOLDEN + FEEDBACK_XLOGX * alpha * math.log2(alpha) + FEEDBACK_LINEAR * alpha


def bsc_nonfeedback_asymptotic(alpha: float) -> float:
    """Capacity without feedback up to O(alpha); only the alpha*log(alpha) term is known."""
    _check(alpha)
    return LOG2_GOLDEN + NONFEEDBACK_XLOGX * alpha * math.log2(alpha)


def coefficient_gap() -> float:
    """How much faster the capacity without feedback falls off, in the alpha*log(alpha) term."""
    return NONFEEDBACK_XLOGX - FEEDBACK_XLOGX
