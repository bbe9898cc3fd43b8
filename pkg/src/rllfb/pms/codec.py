"""Two-phase posterior matching over the constrained channel.

Phase I drives the message-interval process for T = n - ceil(sqrt(n)) uses and
leaves the decoder with a short list of candidates.  Phase II spends the
remaining uses telling the decoder which list entry is right, one bit at a time,
with the RLL-safe repetition code b0b0...b0 and threshold decoding.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from ..channel import ChannelParams, is_rll, likelihood_table, transmit
from ..qgraph import NODES, QPolicy, build_policy, conditional_mutual_information
from ..streams import stream
from .engine import Child, IntervalState

#: slack used by the per-step invariant checks
CHECK_TOL = 1e-9


def s_min(params: ChannelParams, policy: QPolicy | None = None) -> float:
    """Smallest positive P(X=x, X_prev=0 | q) over x and q."""
    policy = policy or build_policy(params)
    vals = [v for q in NODES for v in policy.joint_x_xprev(q)[0] if v > 0.0]
    return min(vals)


def ratio_bound(params: ChannelParams, policy: QPolicy) -> float:
    """max over x, y, q of p(y|x) / P(Y=y|q)."""
    lik = likelihood_table(params)
    best = 0.0
    for q in NODES:
        p10 = policy.pi_xminus_given_q(q) * policy.prob_one_after_zero(q)
        for y in (0, 1):
            py = (1.0 - p10) * lik[0, y] + p10 * lik[1, y]
            if py > 0.0:
                best = max(best, lik[0, y] / py, lik[1, y] / py)
    return best


class SharedRandomness:
    """Node Q0 and the shift stream U, rebuilt identically from the seed on both ends."""

    def __init__(self, seed: int, policy: QPolicy):
        self._gen = stream(seed, "shared")
        cdf = np.cumsum(policy.pi_q)
        self.q0 = int(np.searchsorted(cdf, self._gen.random() * cdf[-1], side="right")) + 1
        self.q0 = min(self.q0, 4)

    def next_u(self) -> float:
        return float(self._gen.random())


def encoder_select_bit(children: list[Child], v: float) -> Child:
    """Pick a child with probability proportional to its length."""
    if len(children) == 1:
        return children[0]
    total = sum(c.length for c in children)
    acc = 0.0
    for c in children[:-1]:
        acc += c.length / total
        if v < acc:
            return c
    return children[-1]


def phase2_encode(bit: int, length: int) -> list[int]:
    """Codeword b0b0...b0 of even length."""
    if length % 2 or length <= 0:
        msg = f"codeword length must be positive and even, got {length}"
        raise ValueError(msg)
    if bit not in (0, 1):
        msg = f"bit expected, got {bit!r}"
        raise ValueError(msg)
    return [bit, 0] * (length // 2)


def phase2_decode(samples, params: ChannelParams) -> int:
    """Threshold rule on the outputs observed where b was sent."""
    samples = list(samples)
    if not samples:
        return 0
    frac = sum(samples) / len(samples)
    return 0 if frac <= (params.alpha + params.beta_bar) / 2.0 else 1


def phase2_layout(list_size: int, zeta: int, fixed_bits: int | None = None) -> tuple[int, int, int]:
    """(bits k, codeword length L, bits actually sent) for the clean-up phase.

    One leading use is a guard 0 so the first codeword cannot follow a 1.
    The number of b-samples per bit is rounded down to an even count: under
    the "fraction <= threshold means 0" rule an extra odd sample only adds
    error when the threshold is 1/2.
    """
    k = fixed_bits if fixed_bits is not None else (max(list_size - 1, 0)).bit_length()
    if k == 0:
        return 0, 0, 0
    room = zeta - 1
    samples = room // (2 * k)
    if samples > 2 and samples % 2:
        samples -= 1
    if samples >= 1:
        return k, 2 * samples, k
    return k, 2, max(room // 2, 0)


def decoder_collect_list(sets, xi_star: float, horizon: int) -> list[int]:
    """Messages whose interval reached xi_star in steps 1..horizon (sorted by id)."""
    found: set[int] = set()
    for i, st in enumerate(sets, start=1):
        if i > horizon:
            break
        found.update(st.messages_at_least(xi_star))
    return sorted(found)


@dataclass
class StepRecord:
    i: int
    q: int
    x: int
    y: int
    s_true: float
    num_intervals: int


@dataclass
class InvariantReport:
    steps_checked: int = 0
    max_total_error: float = 0.0
    max_partition_error: float = 0.0
    max_bound_ratio: float = 0.0
    max_growth: int = 0
    encoder_decoder_equal: bool = True
    rll: bool = True

    @property
    def ok(self) -> bool:
        return (self.max_total_error <= CHECK_TOL and self.max_partition_error <= CHECK_TOL
                and self.max_bound_ratio <= 1.0 + CHECK_TOL and self.max_growth <= 2
                and self.encoder_decoder_equal and self.rll)


@dataclass
class PmsTrace:
    message: int
    num_messages: int
    n: int
    rate: float
    phase1_steps: int
    xi_star: float
    steps: list[StepRecord]
    candidates: list[int]
    list_index: int | None
    phase2_bits_sent: list[int]
    phase2_bits_decoded: list[int]
    codeword_length: int
    decoded: int | None
    transmitted: list[int] = field(repr=False)
    received: list[int] = field(repr=False)
    checks: InvariantReport | None = None

    @property
    def correct(self) -> bool:
        return self.decoded == self.message

    @property
    def uses(self) -> int:
        return len(self.transmitted)

    def summary(self) -> dict:
        return {
            "message": self.message, "decoded": self.decoded, "correct": self.correct,
            "list_size": len(self.candidates), "in_list": self.list_index is not None,
            "channel_uses": self.uses, "num_messages": self.num_messages,
            "phase1_steps": self.phase1_steps, "phase2_bits": len(self.phase2_bits_sent),
            "codeword_length": self.codeword_length,
        }

    def jsonl(self) -> str:
        return "".join(json.dumps(asdict(r), sort_keys=True) + "\n" for r in self.steps)


def default_message_count(n: int, rate: float) -> int:
    return max(2, int(math.ceil(2.0 ** (n * rate) - 1e-9)))


def _draw_message(seed: int, count: int) -> int:
    gen = stream(seed, "message")
    nbits = max(count - 1, 1).bit_length()
    while True:
        words = gen.integers(0, 1 << 32, size=(nbits + 31) // 32, dtype=np.uint64)
        v = 0
        for w in words:
            v = (v << 32) | int(w)
        v &= (1 << nbits) - 1
        if v < count:
            return v


class Decoder:
    """Tracks the interval set from outputs and the shared stream only."""

    def __init__(self, num_messages: int, seed: int, params: ChannelParams, policy: QPolicy):
        self.shared = SharedRandomness(seed, policy)
        self.state = IntervalState.initial(num_messages, self.shared.q0, policy, params)

    def split(self) -> None:
        self.state.split(self.shared.next_u())

    def observe(self, y: int) -> float:
        return self.state.update(y)


class Encoder(Decoder):
    """Decoder state plus the true message interval and the private stream V."""

    def __init__(self, message: int, num_messages: int, seed: int, params: ChannelParams, policy: QPolicy):
        super().__init__(num_messages, seed, params, policy)
        self.v = stream(seed, "encoder")
        self.true_index = self._initial_true_index(message)

    def _initial_true_index(self, message: int) -> int:
        st = self.state
        hits = [(st.idx0[r] + message - st.msg0[r])
                for r in range(st.num_runs) if st.msg0[r] <= message < st.msg0[r] + st.cnt[r]]
        if len(hits) == 1:
            return hits[0]
        # the message straddles P0 at time 1: pick a part by length, like any split
        kids = [Child(i, st.length_of(i), 0) for i in hits]
        return encoder_select_bit(kids, float(self.v.random())).index

    def choose_bit(self) -> int:
        v = float(self.v.random())
        kids = self.state.straddles.get(self.true_index)
        if kids is None:
            return self.state.x_of(self.true_index)
        chosen = encoder_select_bit(kids, v)
        self.true_index = chosen.index
        return chosen.x


def run_pms(message: int | None, n: int, rate: float, params: ChannelParams, seed: int,
            num_messages: int | None = None, xi: float | None = None, check: bool = False,
            phase2_bits: str = "list", policy: QPolicy | None = None,
            keep_steps: bool = True) -> PmsTrace:
    """Simulate one block of the two-phase scheme.

    num_messages defaults to ceil(2**(n*rate)); when given it takes precedence
    and rate is only recorded.  xi caps the list threshold at S_min.  With
    check=True an independent decoder is advanced in lockstep and the per-step
    invariants are measured.  phase2_bits is "list" (ceil(log2 |list|) bits) or
    "fixed" (ceil(log2(n / xi*)) bits).
    """
    params.require_canonical()
    policy = policy or build_policy(params)
    if rate >= conditional_mutual_information(policy, params):
        warnings.warn("rate is not below capacity; the scheme is expected to fail", stacklevel=2)
    count = num_messages if num_messages is not None else default_message_count(n, rate)
    if message is None:
        message = _draw_message(seed, count)
    if not 0 <= message < count:
        msg = f"message {message} outside [0, {count})"
        raise ValueError(msg)
    zeta = math.isqrt(n - 1) + 1 if n > 1 else 1  # ceil(sqrt(n))
    horizon = n - zeta
    if horizon < 1:
        msg = f"block length {n} too short"
        raise ValueError(msg)
    smin = s_min(params, policy)
    xi_star = smin if xi is None else min(xi, smin)

    enc = Encoder(message, count, seed, params, policy)
    dec = Decoder(count, seed, params, policy) if check else None
    noise = stream(seed, "channel")
    report = InvariantReport() if check else None
    bound_k = ratio_bound(params, policy)
    log_first = -math.log(count)

    found: set[int] = set(enc.state.messages_at_least(xi_star))
    steps: list[StepRecord] = []
    xs: list[int] = []
    ys: list[int] = []
    for i in range(1, horizon + 1):
        st = enc.state
        q = st.q
        before = st.num_intervals if check else 0
        enc.split()
        x = enc.choose_bit()
        y = transmit(params, x, noise)
        xs.append(x)
        ys.append(y)
        total = enc.observe(y)
        st = enc.state
        if check:
            dec.split()
            dec.observe(y)
            report.steps_checked += 1
            report.encoder_decoder_equal &= dec.state.same_as(st)
            report.max_total_error = max(report.max_total_error, abs(total - 1.0), abs(st.total() - 1.0))
            p0 = policy.pi_xminus_given_q(st.q)
            report.max_partition_error = max(report.max_partition_error, abs(st.class_mass(0) - p0))
            peak = float(st.s.max())
            if peak > 0:
                limit = log_first + i * math.log(bound_k)
                report.max_bound_ratio = max(report.max_bound_ratio, math.exp(math.log(peak) - limit))
            report.max_growth = max(report.max_growth, st.num_intervals - before)
        if keep_steps:
            steps.append(StepRecord(i, q, x, y, st.length_of(enc.true_index), st.num_intervals))
        if i < horizon:
            found.update(st.messages_at_least(xi_star))

    final = enc.state
    candidates = sorted(found, key=lambda m: (-final.message_mass(m), m))
    list_index = candidates.index(message) if message in found else None

    fixed = math.ceil(math.log2(n / xi_star)) if phase2_bits == "fixed" else None
    k, length, sent = phase2_layout(len(candidates), zeta, fixed)
    send_index = list_index if list_index is not None else 0
    bits = [(send_index >> (k - 1 - j)) & 1 for j in range(k)] if k else []
    phase2_out: list[int] = []
    decoded_bits: list[int] = []
    guard_and_code = [0]
    for j in range(sent):
        guard_and_code += phase2_encode(bits[j], length)
    guard_and_code += [0] * (zeta - len(guard_and_code))
    for x in guard_and_code:
        xs.append(x)
        phase2_out.append(transmit(params, x, noise))
    ys.extend(phase2_out)
    for j in range(k):
        if j < sent:
            block = phase2_out[1 + j * length: 1 + (j + 1) * length]
            decoded_bits.append(phase2_decode(block[0::2], params))
        else:
            decoded_bits.append(0)
    idx = 0
    for b in decoded_bits:
        idx = (idx << 1) | b
    decoded = candidates[idx] if idx < len(candidates) else None
    if check:
        report.rll = is_rll(xs)
    return PmsTrace(message, count, n, rate, horizon, xi_star, steps, candidates, list_index,
                    bits[:sent], decoded_bits, length, decoded, xs, ys, report)
