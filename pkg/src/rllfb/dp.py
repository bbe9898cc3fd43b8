"""Average-reward dynamic program whose optimal reward is the feedback capacity.

State z = P(X_prev = 0 | past outputs); action delta = P(X_prev = 0, X = 1 | past
outputs), constrained to 0 <= delta <= z by the no-consecutive-ones rule.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .capacity import capacity_by_maximization
from .channel import ChannelParams, binary_entropy
from .qgraph import TRANSITIONS, compute_z_values
from .search import golden_max

ACTION_EPS = 1e-12


class UnreachableOutputError(ValueError):
    """The requested output has zero probability under the action."""


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, span: float):
        super().__init__(message)
        self.span = span


def _check_action(z: float, delta: float) -> None:
    if not (-ACTION_EPS <= delta <= z + ACTION_EPS) or not (0.0 <= z <= 1.0):
        msg = f"action delta={delta} is not in [0, z={z}]"
        raise ValueError(msg)


def output_one_prob(delta, params: ChannelParams):
    """P(Y=1) given the action."""
    return params.alpha * (1.0 - delta) + params.beta_bar * delta


def state_transition(z: float, delta: float, y: int, params: ChannelParams) -> float:
    """Posterior P(X=0 | outputs) after observing y."""
    _check_action(z, delta)
    a, b = params.alpha, params.beta
    db = 1.0 - delta
    if y == 0:
        num, den = (1.0 - a) * db, (1.0 - a) * db + b * delta
    elif y == 1:
        num, den = a * db, a * db + (1.0 - b) * delta
    else:
        msg = f"output must be a bit, got {y!r}"
        raise ValueError(msg)
    if den <= 0.0:
        msg = f"output {y} has zero probability at delta={delta}"
        raise UnreachableOutputError(msg)
    return num / den


def next_states(delta: np.ndarray, params: ChannelParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised successor states (after y=0, after y=1) and P(Y=1).

    Successors of zero-probability outputs are set to 0; callers weight them by 0.
    """
    a, b = params.alpha, params.beta
    db = 1.0 - delta
    p1 = a * db + (1.0 - b) * delta
    p0 = 1.0 - p1
    s0 = np.where(p0 > 0.0, (1.0 - a) * db / np.where(p0 > 0.0, p0, 1.0), 0.0)
    s1 = np.where(p1 > 0.0, a * db / np.where(p1 > 0.0, p1, 1.0), 0.0)
    return np.clip(s0, 0.0, 1.0), np.clip(s1, 0.0, 1.0), p1


def reward(z: float, delta, params: ChannelParams):
    """I(X; Y) for one channel use under the action (does not depend on z beyond feasibility)."""
    if not isinstance(delta, np.ndarray):
        _check_action(z, delta)
    return (binary_entropy(output_one_prob(delta, params))
            - (1.0 - delta) * binary_entropy(params.alpha)
            - delta * binary_entropy(params.beta))


def joint_table(z: float, delta: float, params: ChannelParams) -> np.ndarray:
    """P(x_prev, x, y | z, delta); rows (0,0), (0,1), (1,0), columns y = 0, 1."""
    _check_action(z, delta)
    a, b = params.alpha, params.beta
    return np.array([
        [(1.0 - a) * (z - delta), a * (z - delta)],
        [b * delta, (1.0 - b) * delta],
        [(1.0 - a) * (1.0 - z), a * (1.0 - z)],
    ])


@dataclass
class ValueFunction:
    grid: np.ndarray
    values: np.ndarray
    rho: float = float("nan")
    delta_opt: np.ndarray | None = None
    span: float = float("nan")
    iterations: int = 0
    residual: np.ndarray | None = field(default=None, repr=False)

    def __call__(self, z):
        return np.interp(z, self.grid, self.values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["z", "h", "delta_opt", "residual"])
        delta = self.delta_opt if self.delta_opt is not None else np.full_like(self.grid, np.nan)
        res = self.residual if self.residual is not None else np.full_like(self.grid, np.nan)
        for row in zip(self.grid, self.values, delta, res):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def uniform_grid(n: int) -> np.ndarray:
    if n < 2:
        msg = "grid needs at least two points"
        raise ValueError(msg)
    return np.linspace(0.0, 1.0, n)


def action_objective(h: Callable[[np.ndarray], np.ndarray], params: ChannelParams) -> Callable:
    """delta -> r(delta) + (1-p) h(arg1) + p h(arg2), vectorised."""
    h0 = binary_entropy(params.alpha)
    h1 = binary_entropy(params.beta)

    def g(delta):
        d = np.atleast_1d(np.asarray(delta, dtype=float))
        s0, s1, p1 = next_states(d, params)
        r = binary_entropy(p1) - (1.0 - d) * h0 - d * h1
        v0 = np.where(p1 < 1.0, h(s0), 0.0)
        v1 = np.where(p1 > 0.0, h(s1), 0.0)
        return r + (1.0 - p1) * v0 + p1 * v1

    return g


def apply_operator(h: Callable[[np.ndarray], np.ndarray], grid: np.ndarray,
                   params: ChannelParams, refine: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """(Th)(z) and a maximising action at each grid state.

    The bracketed objective depends on delta only, so (Th)(z) is the running
    maximum over delta in [0, z].  Actions are scanned on the state grid; the
    best few interior local maxima are refined by golden-section search.
    """
    g = action_objective(h, params)
    vals = g(grid)
    best = np.maximum.accumulate(vals)
    # index of the (last) maximiser within each prefix
    is_new = np.empty(len(vals), dtype=bool)
    is_new[0] = True
    is_new[1:] = vals[1:] >= best[:-1]
    arg = np.maximum.accumulate(np.where(is_new, np.arange(len(vals)), 0))
    delta = grid[arg].copy()

    inner = np.flatnonzero((vals[1:-1] >= vals[:-2]) & (vals[1:-1] > vals[2:])) + 1
    if inner.size:
        top = inner[np.argsort(vals[inner])[::-1][:refine]]
        for j in top:
            x, fx = golden_max(lambda t: float(g(t)[0]), float(grid[j - 1]), float(grid[j + 1]), 1e-12)
            better = (grid >= x) & (fx > best)
            best = np.where(better, fx, best)
            delta = np.where(better, x, delta)
    return best, delta


def dp_operator(h: ValueFunction, params: ChannelParams) -> ValueFunction:
    """One application of the DP operator with linear interpolation off-grid."""
    params.require_canonical()
    th, delta = apply_operator(h, h.grid, params)
    return ValueFunction(h.grid, th, h.rho, delta)


def value_iteration(params: ChannelParams, grid_size: int = 2000, max_iters: int = 5000,
                    tol: float = 1e-10) -> ValueFunction:
    """Relative value iteration referenced at z = 1.

    Stops when span(Th - h) <= tol; rho is the midpoint of the bracketing
    bounds min(Th - h) <= rho <= max(Th - h).
    """
    params.require_canonical()
    if grid_size < 100:
        msg = "grid_size must be at least 100"
        raise ValueError(msg)
    grid = uniform_grid(grid_size)
    h = ValueFunction(grid, np.zeros(grid_size))
    span = float("inf")
    for it in range(1, max_iters + 1):
        th, delta = apply_operator(h, grid, params)
        diff = th - h.values
        span = float(diff.max() - diff.min())
        if span <= tol:
            rho = 0.5 * float(diff.max() + diff.min())
            return ValueFunction(grid, h.values.copy(), rho, delta, span, it, diff - rho)
        h = ValueFunction(grid, th - th[-1])
    msg = f"relative value iteration did not converge in {max_iters} sweeps (span {span:.3e})"
    raise ConvergenceError(msg, span)


@dataclass(frozen=True)
class BellmanSolution:
    """Closed-form relative value function and its constants."""

    params: ChannelParams
    rho: float
    z1: float
    z2: float

    @classmethod
    def for_channel(cls, params: ChannelParams) -> "BellmanSolution":
        res = capacity_by_maximization(params)
        z1, z2, _, _ = compute_z_values(params, res.z_opt)
        return cls(params, res.capacity, z1, z2)

    def h1(self, z):
        return reward(1.0, z, self.params)

    def x_fun(self, z):
        return self.h1(z) - output_one_prob(z, self.params) * self.rho

    def h2(self, z):
        z = np.asarray(z, dtype=float)
        _, s1, p1 = next_states(np.atleast_1d(z), self.params)
        tail = np.where(p1 > 0.0, p1 * self.x_fun(s1), 0.0)
        out = (self.x_fun(np.atleast_1d(z)) + tail) / (1.0 - self.params.alpha * self.params.beta_bar)
        return out if z.ndim else float(out[0])

    def __call__(self, z):
        arr = np.atleast_1d(np.asarray(z, dtype=float))
        out = np.where(arr <= self.z1, self.h1(arr),
                       np.where(arr <= self.z2, self.h2(arr), self.rho))
        return out if np.ndim(z) else float(out[0])


def bellman_solution_h(z, params: ChannelParams):
    """Explicit solution of the Bellman equation, evaluated at z."""
    return BellmanSolution.for_channel(params)(z)


@dataclass(frozen=True)
class BellmanReport:
    residual: float
    action_error: float
    grid_step: float
    rho: float
    z2: float


def bellman_check(params: ChannelParams, grid_size: int = 10_000) -> BellmanReport:
    """Apply the operator to the explicit solution on a grid.

    Reports max |(Th)(z) - h(z) - rho| and the largest distance between the
    scanned maximiser and min(z, z2).
    """
    params.require_canonical()
    sol = BellmanSolution.for_channel(params)
    grid = uniform_grid(grid_size)
    th, delta = apply_operator(sol, grid, params)
    resid = float(np.max(np.abs(th - sol(grid) - sol.rho)))
    act = float(np.max(np.abs(delta - np.minimum(grid, sol.z2))))
    return BellmanReport(resid, act, float(grid[1] - grid[0]), sol.rho, sol.z2)


def bellman_residual(params: ChannelParams, grid_size: int = 10_000) -> float:
    return bellman_check(params, grid_size).residual


def orbit_closure(params: ChannelParams) -> float:
    """Largest |arg_j(min(z_i, z2)) - z_{g(i, j-1)}| over reachable edges."""
    zs = compute_z_values(params)
    z2 = zs[1]
    worst = 0.0
    for i in range(1, 5):
        d = min(zs[i - 1], z2)
        p1 = float(output_one_prob(d, params))
        for y in (0, 1):
            if (p1 if y else 1.0 - p1) <= 0.0:
                continue
            nxt = state_transition(zs[i - 1], d, y, params)
            worst = max(worst, abs(nxt - zs[TRANSITIONS[(i, y)] - 1]))
    return worst
