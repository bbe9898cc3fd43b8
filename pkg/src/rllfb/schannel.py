"""Zero-error scheme for the channel with beta = 0.

A message is first mapped to a length-N word of fixed weight (enumerative
coding).  Each bit b is then sent as b, 1-b, b, ... until a 0 is received;
since a 1 is never received as 0, the parity of the number of uses tells b.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, binary_entropy, transmit
from .search import golden_max
from .streams import stream, trial_seed

MAX_USES_PER_BIT = 10**6


class NonTerminationError(RuntimeError):
    """No 0 was received within the use cap."""


@dataclass(frozen=True)
class ShapedMessage:
    bits: tuple[int, ...]
    weight: int

    def __post_init__(self) -> None:
        if sum(self.bits) != self.weight:
            msg = f"word has weight {sum(self.bits)}, declared {self.weight}"
            raise ValueError(msg)


def enumerative_encode(index: int, n: int, w: int) -> ShapedMessage:
    """The index-th weight-w word of length n in lexicographic order."""
    total = math.comb(n, w)
    if not 0 <= index < total:
        msg = f"index {index} outside [0, {total})"
        raise ValueError(msg)
    bits = []
    ones = w
    for pos in range(n):
        rest = n - pos - 1
        with_zero = math.comb(rest, ones)  # completions that put a 0 here
        if index < with_zero:
            bits.append(0)
        else:
            bits.append(1)
            index -= with_zero
            ones -= 1
    return ShapedMessage(tuple(bits), w)


def enumerative_decode(msg: ShapedMessage) -> int:
    """Lexicographic rank of a fixed-weight word."""
    if sum(msg.bits) != msg.weight:
        err = "word weight does not match the declared weight"
        raise ValueError(err)
    n = len(msg.bits)
    ones = msg.weight
    rank = 0
    for pos, b in enumerate(msg.bits):
        if b:
            rank += math.comb(n - pos - 1, ones)
            ones -= 1
    return rank


def transmit_bit(b: int, params: ChannelParams, rng: np.random.Generator,
                 max_uses: int = MAX_USES_PER_BIT) -> tuple[int, list[int], list[int]]:
    """Send b, 1-b, b, ... until a 0 comes back.  Returns (uses, sent, received)."""
    if params.beta != 0.0:
        msg = "repeat-until-zero signalling needs beta = 0"
        raise ValueError(msg)
    sent, received = [], []
    sym = b
    for _ in range(max_uses):
        y = transmit(params, sym, rng)
        sent.append(sym)
        received.append(y)
        if y == 0:
            return len(sent), sent, received
        sym ^= 1
    msg = f"no 0 received in {max_uses} uses"
    raise NonTerminationError(msg)


def decode_bit(ell: int) -> int:
    """Odd number of uses means 0, even means 1."""
    if ell < 1:
        msg = f"use count must be positive, got {ell}"
        raise ValueError(msg)
    return 0 if ell % 2 else 1


def expected_uses(alpha: float, z: float) -> float:
    """Mean uses per bit when a fraction z of the bits are 1."""
    p = z + alpha * (1.0 - z)
    return (1.0 + p) / (1.0 - alpha)


def shaping_rate(alpha: float, z: float) -> float:
    """Bits per use when the word has a fraction z of ones."""
    return binary_entropy(z) / expected_uses(alpha, z)


def optimal_shaping(alpha: float) -> tuple[float, float]:
    """(z*, rate) maximising H(z) / E[uses]."""
    if not 0.0 <= alpha < 1.0:
        msg = f"need 0 <= alpha < 1, got {alpha}"
        raise ValueError(msg)
    return golden_max(lambda z: shaping_rate(alpha, z), 0.0, 1.0, 1e-12)


@dataclass
class SchemeResult:
    alpha: float
    n: int
    weight: int
    z_star: float
    trials: int
    errors: int
    total_uses: int
    total_bits: int
    per_trial_uses: list[int]
    seeds: list[int]

    @property
    def message_bits(self) -> float:
        return math.log2(math.comb(self.n, self.weight))

    @property
    def empirical_rate(self) -> float:
        return self.message_bits / (self.total_uses / self.trials)

    @property
    def mean_uses_per_bit(self) -> float:
        return self.total_uses / self.total_bits

    @property
    def predicted_uses_per_bit(self) -> float:
        return expected_uses(self.alpha, self.weight / self.n)

    def summary(self) -> dict:
        return {
            "schema": 1, "alpha": self.alpha, "N": self.n, "weight": self.weight,
            "z_star": self.z_star, "trials": self.trials, "errors": self.errors,
            "empirical_rate": self.empirical_rate, "mean_uses_per_bit": self.mean_uses_per_bit,
            "predicted_uses_per_bit": self.predicted_uses_per_bit,
            "message_bits": self.message_bits,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["seed", "N", "uses", "rate"])
        for seed, uses in zip(self.seeds, self.per_trial_uses):
            w.writerow([seed, self.n, uses, repr(self.message_bits / uses)])
        return buf.getvalue()


def run_schannel_scheme(alpha: float, n: int, trials: int, seed: int = 0) -> SchemeResult:
    """Send uniformly drawn shaped messages and decode them from use counts."""
    if n > 64:
        msg = "word length above 64 is outside the supported range"
        raise ValueError(msg)
    params = ChannelParams(alpha, 0.0)
    z_star, _ = optimal_shaping(alpha)
    weight = int(math.floor(n * z_star))
    size = math.comb(n, weight)
    errors = 0
    total_uses = 0
    per_trial, seeds = [], []
    for i in range(trials):
        ts = trial_seed(seed, i)
        index = int(stream(ts, "message").integers(0, size)) if size > 1 else 0
        word = enumerative_encode(index, n, weight)
        rng = stream(ts, "channel")
        uses = 0
        prev = 0
        decoded = []
        for b in word.bits:
            ell, sent, _ = transmit_bit(b, params, rng)
            if prev == 1 and sent[0] == 1 or sent[-1] != 0:
                msg = "no-consecutive-ones rule broken across bits"
                raise AssertionError(msg)
            prev = sent[-1]
            uses += ell
            decoded.append(decode_bit(ell))
        if enumerative_decode(ShapedMessage(tuple(decoded), sum(decoded))) != index:
            errors += 1
        total_uses += uses
        per_trial.append(uses)
        seeds.append(ts)
    return SchemeResult(alpha, n, weight, z_star, trials, errors, total_uses, n * trials,
                        per_trial, seeds)
