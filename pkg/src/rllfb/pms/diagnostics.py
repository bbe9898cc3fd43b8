"""One-step moments of the true-interval growth, against their closed form.

For a true interval of length s the quantity of interest is
psi = E[(S_next / s)^(-rho) | x_prev, q, x, q_next].  Its closed form is
phi * (1 + s*rho / (P*(2 - rho))) when x_prev = 0 (P = P(X=x, X_prev=0 | q))
and phi when x_prev = 1, where phi = (p(y|x) / P(Y=y|q))^(-rho).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..channel import ChannelParams, likelihood_table
from ..qgraph import NODES, TRANSITIONS, QPolicy, build_policy
from ..streams import stream
from .codec import s_min


def output_for(q: int, q_next: int) -> int:
    for y in (0, 1):
        if TRANSITIONS[(q, y)] == q_next:
            return y
    msg = f"no edge from node {q} to node {q_next}"
    raise ValueError(msg)


def phi(policy: QPolicy, params: ChannelParams, q: int, x: int, q_next: int, rho: float) -> float:
    y = output_for(q, q_next)
    lik = likelihood_table(params)
    p10 = policy.pi_xminus_given_q(q) * policy.prob_one_after_zero(q)
    py = (1.0 - p10) * lik[0, y] + p10 * lik[1, y]
    return (lik[x, y] / py) ** (-rho)


def joint_zero_prev(policy: QPolicy, q: int, x: int) -> float:
    """P(X=x, X_prev=0 | q)."""
    return float(policy.joint_x_xprev(q)[0, x])


def psi_closed_form(policy: QPolicy, params: ChannelParams, s: float, x_prev: int,
                    q: int, x: int, q_next: int, rho: float) -> float:
    base = phi(policy, params, q, x, q_next, rho)
    if x_prev == 1:
        return base
    p = joint_zero_prev(policy, q, x)
    return base * ((p - s) / p + 2.0 * s / (p * (2.0 - rho)))


def delta_bound(policy: QPolicy, s: float, rho: float) -> float:
    """max over (q, x) with positive mass of log2 of the split penalty."""
    worst = 0.0
    for q in NODES:
        for x in (0, 1):
            p = joint_zero_prev(policy, q, x)
            if p > 0:
                worst = max(worst, math.log2(1.0 + s * rho / (p * (2.0 - rho))))
    return worst


def psi_monte_carlo(policy: QPolicy, params: ChannelParams, s: float, x_prev: int, q: int,
                    x: int, q_next: int, rho: float, samples: int,
                    rng: np.random.Generator) -> tuple[float, float, int]:
    """Mean, standard error and accepted sample count of the one-step moment.

    Simulates the shift, the split at the boundary points and the encoder's
    length-proportional choice, and keeps draws whose input bit equals x.
    """
    base = phi(policy, params, q, x, q_next, rho)
    if x_prev == 1:
        return base, 0.0, samples
    p0 = policy.pi_xminus_given_q(q)
    p10 = p0 * policy.prob_one_after_zero(q)
    tau = rng.random(samples) * p0
    v = rng.random(samples)
    w = tau + v * s  # unwrapped position of the chosen point
    label = ((w % p0) < p10).astype(int)
    keep = label == x
    tau, w = tau[keep], w[keep]
    lo, hi = tau.copy(), tau + s
    for b in (p10, p0, p0 + p10):
        lo = np.where((b > lo) & (b <= w), b, lo)
        hi = np.where((b < hi) & (b > w), b, hi)
    vals = base * ((hi - lo) / s) ** (-rho)
    if vals.size < 2:
        return float("nan"), float("inf"), int(vals.size)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(vals.size)), int(vals.size)


@dataclass
class PsiRow:
    s: float
    x_prev: int
    q: int
    x: int
    q_next: int
    rho: float
    phi: float
    psi_closed: float
    psi_mc: float
    psi_se: float
    phi_bound: float

    @property
    def matches(self) -> bool:
        return bool(abs(self.psi_mc - self.psi_closed) <= 3.0 * self.psi_se + 1e-12)

    @property
    def within_bound(self) -> bool:
        return bool(self.psi_closed <= self.phi_bound * (1 + 1e-12)
                    and self.psi_mc <= self.phi_bound + 3.0 * self.psi_se + 1e-12)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["matches"] = self.matches
        d["within_bound"] = self.within_bound
        return d


def sample_tuples(policy: QPolicy, params: ChannelParams, count: int, rng: np.random.Generator):
    """Random admissible (s, x_prev, q, x, q_next, rho) configurations with s <= S_min."""
    smin = s_min(params, policy)
    lik = likelihood_table(params)
    options = []
    for q in NODES:
        if policy.pi_q[q - 1] <= 0:
            continue
        for xp in (0, 1):
            prior = policy.pi_xminus_given_q(q) if xp == 0 else 1.0 - policy.pi_xminus_given_q(q)
            if prior <= 0:
                continue
            for x in (0, 1):
                if policy.transfer[q - 1, xp, x] <= 0:
                    continue
                for y in (0, 1):
                    if lik[x, y] > 0:
                        options.append((xp, q, x, TRANSITIONS[(q, y)]))
    out = []
    for _ in range(count):
        xp, q, x, qn = options[int(rng.integers(len(options)))]
        s = float(smin * rng.uniform(0.05, 1.0))
        rho = float(rng.uniform(0.0, 0.95))
        out.append((s, xp, q, x, qn, rho))
    return out


def psi_phi_diagnostic(params: ChannelParams, rho: float | None = None, trials: int = 200_000,
                       tuples: int = 20, seed: int = 0) -> list[PsiRow]:
    """Closed form against simulation for random configurations.

    With rho given, every sampled tuple uses it; otherwise rho is sampled too.
    """
    if rho is not None and not 0.0 <= rho < 1.0:
        msg = f"rho must lie in [0, 1), got {rho}"
        raise ValueError(msg)
    params.require_canonical()
    policy = build_policy(params)
    rng = stream(seed, "diagnostic")
    rows = []
    for s, xp, q, x, qn, r in sample_tuples(policy, params, tuples, rng):
        r = r if rho is None else rho
        base = phi(policy, params, q, x, qn, r)
        closed = psi_closed_form(policy, params, s, xp, q, x, qn, r)
        mc, se, _ = psi_monte_carlo(policy, params, s, xp, q, x, qn, r, trials, rng)
        bound = base * 2.0 ** delta_bound(policy, s, r)
        rows.append(PsiRow(s, xp, q, x, qn, r, float(base), float(closed), mc, se, float(bound)))
    return rows
