"""Message-interval bookkeeping shared by the encoder and the decoder.

The interval set is stored as *runs*: maximal blocks of messages with
consecutive indices and consecutive ids that have been treated identically
so far and therefore share one length and one history bit.  Only the (at most
two) runs crossing a label boundary are touched individually at each step, so
message counts far beyond 2**16 are cheap.  Intervals are laid out per history
class in ascending index order, which is also the order of the run list.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from ..channel import ChannelParams, likelihood_table
from ..qgraph import TRANSITIONS, QPolicy

#: cut points closer than this to an interval edge do not split it
EDGE = 1e-14
#: lengths below this are floored to zero
UNDERFLOW = 1e-300


class ImpossibleObservationError(ValueError):
    """The received output has zero probability at the current node."""


@dataclass(frozen=True)
class MessageInterval:
    index: int
    message: int
    length: float
    left: float
    history_bit: int


@dataclass(frozen=True)
class Child:
    index: int
    length: float
    x: int


class IntervalState:
    """Ordered interval set J_i together with the node q_{i-1}."""

    def __init__(self, policy: QPolicy, params: ChannelParams, idx0: list[int], msg0: list[int],
                 cnt: list[int], s: np.ndarray, hist: np.ndarray, q: int, time: int = 1,
                 next_index: int | None = None):
        self.policy = policy
        self.params = params
        self.idx0 = idx0
        self.msg0 = msg0
        self.cnt = cnt
        self.cntf = np.array([float(c) for c in cnt])
        self._count = sum(cnt)
        self.s = s
        self.hist = hist
        self.q = q
        self.time = time
        self.next_index = next_index if next_index is not None else (idx0[-1] + cnt[-1] if idx0 else 1)
        self.x: np.ndarray | None = None
        self.straddles: dict[int, list[Child]] = {}
        self._lik = likelihood_table(params)

    # construction -----------------------------------------------------

    @classmethod
    def initial(cls, num_messages: int, q0: int, policy: QPolicy, params: ChannelParams) -> "IntervalState":
        """Equal lengths; the interval straddling P(X_prev=0|q0) is cut in two.

        Indices follow left-end order so the index-ordered layout reproduces
        the natural positions.
        """
        m = int(num_messages)
        if m < 2:
            msg = "need at least two messages"
            raise ValueError(msg)
        size = 1.0 / m
        p0 = policy.pi_xminus_given_q(q0)
        k0 = min(int(math.floor(p0 * m)), m)
        frac = p0 * m - k0
        idx, msg, cnt, s, hist = [], [], [], [], []

        def add(i, first, c, length, h):
            if c > 0:
                idx.append(i); msg.append(first); cnt.append(c); s.append(length); hist.append(h)

        if k0 < m and frac * size > EDGE and (1.0 - frac) * size > EDGE:
            add(1, 0, k0, size, 0)
            add(k0 + 1, k0, 1, frac * size, 0)
            add(k0 + 2, k0, 1, (1.0 - frac) * size, 1)
            add(k0 + 3, k0 + 1, m - k0 - 1, size, 1)
            nxt = m + 2
        else:
            if k0 < m and frac * size > EDGE:
                k0 += 1  # boundary sits on the next message edge up to rounding
            add(1, 0, k0, size, 0)
            add(k0 + 1, k0, m - k0, size, 1)
            nxt = m + 1
        return cls(policy, params, idx, msg, cnt, np.array(s), np.array(hist, dtype=np.int8),
                   q0, 1, nxt)

    def copy(self) -> "IntervalState":
        out = IntervalState(self.policy, self.params, list(self.idx0), list(self.msg0),
                            list(self.cnt), self.s.copy(), self.hist.copy(), self.q,
                            self.time, self.next_index)
        out.x = None if self.x is None else self.x.copy()
        out.straddles = dict(self.straddles)
        return out

    # views ------------------------------------------------------------

    @property
    def num_runs(self) -> int:
        return len(self.idx0)

    @property
    def num_intervals(self) -> int:
        return self._count

    def masses(self) -> np.ndarray:
        return self.cntf * self.s

    def total(self) -> float:
        return float(self.masses().sum())

    def class_mass(self, bit: int) -> float:
        return float(self.masses()[self.hist == bit].sum())

    def run_starts(self) -> np.ndarray:
        """Left end of each run under the index-ordered layout."""
        mass = self.masses()
        starts = np.empty(len(mass))
        p0 = self.policy.pi_xminus_given_q(self.q)
        for bit, base in ((0, 0.0), (1, p0)):
            sel = self.hist == bit
            m = mass[sel]
            starts[sel] = base + np.cumsum(m) - m
        return starts

    def intervals(self, limit: int = 1 << 16) -> list[MessageInterval]:
        """Expanded list of intervals in index order."""
        if self.num_intervals > limit:
            msg = f"{self.num_intervals} intervals exceed the expansion limit"
            raise ValueError(msg)
        starts = self.run_starts()
        out = []
        for r in range(self.num_runs):
            s = float(self.s[r])
            for k in range(self.cnt[r]):
                out.append(MessageInterval(self.idx0[r] + k, self.msg0[r] + k, s,
                                           float(starts[r] + k * s), int(self.hist[r])))
        return out

    def find_run(self, index: int) -> int:
        r = bisect.bisect_right(self.idx0, index) - 1
        if r < 0 or index >= self.idx0[r] + self.cnt[r]:
            msg = f"no interval with index {index}"
            raise KeyError(msg)
        return r

    def length_of(self, index: int) -> float:
        return float(self.s[self.find_run(index)])

    def x_of(self, index: int) -> int:
        return int(self.x[self.find_run(index)])

    def messages_at_least(self, threshold: float) -> list[int]:
        out = []
        for r in np.flatnonzero(self.s >= threshold):
            out.extend(range(self.msg0[r], self.msg0[r] + self.cnt[r]))
        return out

    def message_mass(self, message: int) -> float:
        tot = 0.0
        for r in range(self.num_runs):
            if self.msg0[r] <= message < self.msg0[r] + self.cnt[r]:
                tot += float(self.s[r])
        return tot

    def same_as(self, other: "IntervalState") -> bool:
        """Bit-identical state (used to check encoder/decoder agreement)."""
        return (self.q == other.q and self.time == other.time
                and self.next_index == other.next_index
                and self.idx0 == other.idx0 and self.msg0 == other.msg0 and self.cnt == other.cnt
                and np.array_equal(self.s, other.s) and np.array_equal(self.hist, other.hist)
                and ((self.x is None and other.x is None)
                     or (self.x is not None and other.x is not None and np.array_equal(self.x, other.x))))

    # one step ---------------------------------------------------------

    def label_boundaries(self, u: float) -> tuple[float, float, float, float]:
        """(P0, P10, start of the 1-arc, start of the 0-arc) in unshifted coordinates."""
        q = self.q
        p0 = self.policy.pi_xminus_given_q(q)
        p10 = p0 * self.policy.prob_one_after_zero(q)
        if p0 <= 0.0:
            return p0, p10, 0.0, 0.0
        c1 = (p0 - u * p0) % p0
        c0 = (c1 + p10) % p0
        return p0, p10, c1, c0

    def split(self, u: float) -> None:
        """Cyclic shift by u*P0 and split at the two boundary points; sets self.x.

        History-bit-1 intervals get x = 0.  Within [0, P0) the label is 1 on
        an arc of length P10 that starts where the shifted coordinate wraps
        through 0; intervals are cut at both ends of that arc, including the
        wrap point when P10 is 0 or P0 and both sides carry the same label.
        """
        if not 0.0 <= u < 1.0:
            msg = f"shift must lie in [0, 1), got {u}"
            raise ValueError(msg)
        p0, p10, c1, c0 = self.label_boundaries(u)
        n = self.num_runs
        x = np.zeros(n, dtype=np.int8)
        self.straddles = {}
        if p0 > 0.0:
            sel = np.flatnonzero(self.hist == 0)
            if sel.size:
                m = self.masses()[sel]
                end = np.cumsum(m)
                start = end - m

                def label(y):
                    return ((y - c1) % p0) < p10

                x[sel] = label(0.5 * (start + end))
                cuts: dict[int, tuple[float, list[float]]] = {}
                points = (c1,) if abs(c0 - c1) <= EDGE or abs(abs(c0 - c1) - p0) <= EDGE else (c1, c0)
                for b in points:
                    if b <= EDGE or b >= p0 - EDGE:
                        continue
                    j = int(np.searchsorted(end, b, side="right"))
                    if j < sel.size and start[j] + EDGE < b < end[j] - EDGE:
                        cuts.setdefault(int(sel[j]), (float(start[j]), []))[1].append(b - start[j])
                if cuts:
                    x = self._apply_cuts(cuts, x, label)
        self.x = x

    def _apply_cuts(self, cuts: dict[int, tuple[float, list[float]]], x: np.ndarray,
                    label) -> np.ndarray:
        fresh: list[tuple[int, int, float, int]] = []
        pieces_at: dict[int, tuple] = {}
        for r in sorted(cuts):  # ascending so fresh indices follow position order
            t0, offsets = cuts[r]
            size = float(self.s[r])
            idx, msg, cnt, ps, px = [], [], [], [], []
            for kind, a, b, pieces in _cut_run(sorted(offsets), size, self.cnt[r]):
                if kind == "run":
                    idx.append(self.idx0[r] + a); msg.append(self.msg0[r] + a); cnt.append(b - a)
                    ps.append(size); px.append(int(label(t0 + 0.5 * (a + b) * size)))
                    continue
                k = a
                base = t0 + k * size
                children = []
                acc = 0.0
                for j, length in enumerate(pieces):
                    bit = int(label(base + acc + 0.5 * length))
                    acc += length
                    if j == 0:
                        cidx = self.idx0[r] + k
                        idx.append(cidx); msg.append(self.msg0[r] + k); cnt.append(1)
                        ps.append(length); px.append(bit)
                    else:
                        cidx = self.next_index
                        self.next_index += 1
                        fresh.append((cidx, self.msg0[r] + k, length, bit))
                    children.append(Child(cidx, length, bit))
                self.straddles[self.idx0[r] + k] = children
            pieces_at[r] = (idx, msg, cnt, ps, px)
        parts_s, parts_h, parts_x, parts_c = [], [], [], []
        last = 0
        for r in sorted(pieces_at):
            idx, msg, cnt, ps, px = pieces_at[r]
            parts_s += [self.s[last:r], np.array(ps)]
            parts_h += [self.hist[last:r], np.zeros(len(ps), dtype=np.int8)]
            parts_x += [x[last:r], np.array(px, dtype=np.int8)]
            parts_c += [self.cntf[last:r], np.array(cnt, dtype=float)]
            last = r + 1
        parts_s.append(self.s[last:]); parts_h.append(self.hist[last:])
        parts_x.append(x[last:]); parts_c.append(self.cntf[last:])
        for r in sorted(pieces_at, reverse=True):  # in-place list splices, right to left
            idx, msg, cnt, _, _ = pieces_at[r]
            self.idx0[r:r + 1] = idx
            self.msg0[r:r + 1] = msg
            self.cnt[r:r + 1] = cnt
        if fresh:
            for cidx, m, _, _ in fresh:
                self.idx0.append(cidx); self.msg0.append(m); self.cnt.append(1)
            parts_s.append(np.array([f[2] for f in fresh]))
            parts_h.append(np.zeros(len(fresh), dtype=np.int8))
            parts_x.append(np.array([f[3] for f in fresh], dtype=np.int8))
            parts_c.append(np.ones(len(fresh)))
            self._count += len(fresh)
        self.s = np.concatenate(parts_s)
        self.hist = np.concatenate(parts_h)
        self.cntf = np.concatenate(parts_c)
        return np.concatenate(parts_x)

    def output_prob(self, y: int) -> float:
        """P(Y=y | q) under the policy."""
        q = self.q
        p10 = self.policy.pi_xminus_given_q(q) * self.policy.prob_one_after_zero(q)
        return (1.0 - p10) * self._lik[0, y] + p10 * self._lik[1, y]

    def update(self, y: int) -> float:
        """Bayes step after observing y; returns the total before renormalisation."""
        if self.x is None:
            msg = "split must run before update"
            raise RuntimeError(msg)
        py = self.output_prob(y)
        if py <= 0.0:
            msg = f"output {y} is impossible at node {self.q}"
            raise ImpossibleObservationError(msg)
        ratio = self._lik[:, y] / py
        s = self.s * ratio[self.x]
        total = float((self.cntf * s).sum())
        s /= total
        s[s < UNDERFLOW] = 0.0
        self.s = s
        self.hist = self.x
        self.x = None
        self.q = TRANSITIONS[(self.q, y)]
        self.time += 1
        return total


def _cut_run(offsets: list[float], size: float, count: int):
    """Pieces of a run, in position order, for cut offsets measured from its left end.

    Yields ("run", a, b, None) for whole messages a..b-1 and
    ("split", k, None, lengths) for a message cut into 2 or 3 children.
    """
    events = []
    for off in offsets:
        k = min(max(int(math.floor(off / size)), 0), count - 1) if size > 0 else 0
        left = off - k * size
        if left < EDGE:
            events.append(("clean", k, 0.0))
        elif size - left < EDGE:
            events.append(("clean", k + 1, 0.0))
        else:
            events.append(("split", k, left))
    out = []
    cursor = 0
    i = 0
    while i < len(events):
        kind, k, left = events[i]
        if kind == "clean":
            if k > cursor:
                out.append(("run", cursor, k, None))
                cursor = k
            i += 1
            continue
        lefts = [left]
        while i + 1 < len(events) and events[i + 1][0] == "split" and events[i + 1][1] == k:
            i += 1
            lefts.append(events[i][2])
        if k > cursor:
            out.append(("run", cursor, k, None))
        marks = [0.0] + lefts + [size]
        out.append(("split", k, None, [b - a for a, b in zip(marks, marks[1:])]))
        cursor = k + 1
        i += 1
    if cursor < count:
        out.append(("run", cursor, count, None))
    return out
