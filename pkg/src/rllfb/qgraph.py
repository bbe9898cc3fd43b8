"""Four-node output quantisation graph and the capacity-achieving input law on it.

Nodes are numbered 1..4.  Arrays indexed by node use position node-1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .capacity import capacity_by_maximization
from .channel import ChannelParams, binary_entropy, likelihood_table

NODES = (1, 2, 3, 4)

#: next node after observing output y at node q
TRANSITIONS: dict[tuple[int, int], int] = {
    (1, 0): 4, (1, 1): 2,
    (2, 0): 3, (2, 1): 1,
    (3, 0): 3, (3, 1): 1,
    (4, 0): 3, (4, 1): 1,
}


class DegeneratePolicyError(ValueError):
    """A ratio in the policy construction is 0/0."""


def step(q: int, y: int) -> int:
    return TRANSITIONS[(q, y)]


def q_walk(q0: int, outputs) -> int:
    """Fold the transition map over an output sequence."""
    if q0 not in NODES:
        msg = f"unknown node {q0!r}"
        raise ValueError(msg)
    q = q0
    for y in outputs:
        q = TRANSITIONS[(q, int(y))]
    return q


def _ratio(num: float, den: float, what: str) -> float:
    if den <= 0.0:
        if num <= 0.0:
            msg = f"{what} is 0/0 for these channel parameters"
            raise DegeneratePolicyError(msg)
        msg = f"{what} has a zero denominator"
        raise DegeneratePolicyError(msg)
    return num / den


def compute_z_values(params: ChannelParams, z2: float | None = None) -> tuple[float, float, float, float]:
    """The four posteriors P(X_prev = 0 | node) visited by the optimal policy."""
    params.require_canonical()
    a, b = params.alpha, params.beta
    ab_, bb = 1.0 - a, 1.0 - b
    if z2 is None:
        z2 = capacity_by_maximization(params).z_opt
    zb = 1.0 - z2
    z1 = _ratio(a * zb, a * zb + bb * z2, "z1")
    z3 = _ratio(ab_ * zb, ab_ * zb + b * z2, "z3")
    z4 = _ratio(ab_ * bb * z2, ab_ * bb * z2 + a * b * zb, "z4")
    return z1, z2, z3, z4


@dataclass(frozen=True)
class QPolicy:
    z_values: tuple[float, float, float, float]
    transfer: np.ndarray  # shape (4, 2, 2): [node-1, x_prev, x]
    pi_q: np.ndarray  # shape (4,)
    p: float
    q_param: float

    def pi_xminus_given_q(self, node: int) -> float:
        """P(X_prev = 0 | node)."""
        return self.z_values[node - 1]

    def prob_one_after_zero(self, node: int) -> float:
        """p*(X=1 | X_prev=0, node)."""
        return float(self.transfer[node - 1, 0, 1])

    def joint_x_xprev(self, node: int) -> np.ndarray:
        """Array J[x_prev, x] = P(X_prev, X | node)."""
        z = self.z_values[node - 1]
        w = np.array([z, 1.0 - z])
        return w[:, None] * self.transfer[node - 1]

    def to_json(self) -> str:
        doc = {
            "schema": 1,
            "z_values": list(self.z_values),
            "transfer": {str(q): self.transfer[q - 1].tolist() for q in NODES},
            "pi_q": self.pi_q.tolist(),
            "pi_xminus0_given_q": list(self.z_values),
            "p": self.p,
            "q_param": self.q_param,
        }
        return json.dumps(doc, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "QPolicy":
        doc = json.loads(text)
        transfer = np.array([doc["transfer"][str(q)] for q in NODES])
        return cls(tuple(doc["z_values"]), transfer, np.array(doc["pi_q"]),
                   doc["p"], doc["q_param"])


def build_policy(params: ChannelParams, z2: float | None = None) -> QPolicy:
    """Assemble transfer matrices and the stationary node law."""
    z = compute_z_values(params, z2)
    z1, z2, z3, z4 = z
    alternating = np.array([[0.0, 1.0], [1.0, 0.0]])
    r3 = _ratio(z2, z3, "z2/z3")
    r4 = _ratio(z2, z4, "z2/z4")
    transfer = np.stack([
        alternating,
        alternating,
        np.array([[1.0 - r3, r3], [1.0, 0.0]]),
        np.array([[1.0 - r4, r4], [1.0, 0.0]]),
    ])
    p = params.output_one_prob(z2)
    q = params.alpha * params.beta_bar / p if p > 0 else 0.0
    pi_q = np.array([p, p * q, 1.0 - p, p * (1.0 - q)]) / (1.0 + p)
    return QPolicy(z, transfer, pi_q, p, q)


def joint_state_law(policy: QPolicy) -> np.ndarray:
    """Array pi[x_prev, node-1]."""
    z = np.array(policy.z_values)
    return np.stack([policy.pi_q * z, policy.pi_q * (1.0 - z)])


def transition_kernel(policy: QPolicy, params: ChannelParams) -> np.ndarray:
    """Kernel of the chain on (X, node), flattened as 2*(node-1) + x.

    K[(x_prev, q), (x, q_next)] = sum_y 1{q_next = g(q, y)} p(y|x) p*(x | x_prev, q).
    """
    lik = likelihood_table(params)
    k = np.zeros((8, 8))
    for q in NODES:
        for xp in (0, 1):
            row = 2 * (q - 1) + xp
            for x in (0, 1):
                px = policy.transfer[q - 1, xp, x]
                for y in (0, 1):
                    col = 2 * (step(q, y) - 1) + x
                    k[row, col] += lik[x, y] * px
    return k


def _flat_law(policy: QPolicy) -> np.ndarray:
    return joint_state_law(policy).T.reshape(-1)


def stationary_check(policy: QPolicy, params: ChannelParams) -> float:
    """max |pi K - pi| for the claimed stationary law."""
    pi = _flat_law(policy)
    return float(np.max(np.abs(pi @ transition_kernel(policy, params) - pi)))


def chain_is_ergodic(policy: QPolicy, params: ChannelParams) -> bool:
    """Irreducible and aperiodic on the support of the stationary law."""
    pi = _flat_law(policy)
    support = pi > 1e-15
    k = transition_kernel(policy, params)[np.ix_(support, support)]
    m = k.shape[0]
    adj = (k > 0).astype(float)
    # a nonnegative matrix is primitive iff its (m-1)^2+1 power is positive
    power = np.linalg.matrix_power(adj, (m - 1) ** 2 + 1)
    return bool(np.all(power > 0))


def conditional_mutual_information(policy: QPolicy, params: ChannelParams) -> float:
    """I(X; Y | node) under the stationary law, by explicit summation."""
    lik = likelihood_table(params)
    total = 0.0
    for q in NODES:
        wq = policy.pi_q[q - 1]
        if wq <= 0.0:
            continue
        px1 = float(policy.joint_x_xprev(q)[:, 1].sum())
        py1 = (1.0 - px1) * lik[0, 1] + px1 * lik[1, 1]
        cond = (1.0 - px1) * binary_entropy(lik[0, 1]) + px1 * binary_entropy(lik[1, 1])
        total += wq * (binary_entropy(py1) - cond)
    return float(total)
