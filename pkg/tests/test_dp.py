import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rllfb.capacity import bsc_capacity, capacity_by_maximization
from rllfb.channel import ChannelParams, binary_entropy
from rllfb.dp import (
    BellmanSolution,
    ConvergenceError,
    UnreachableOutputError,
    ValueFunction,
    apply_operator,
    bellman_check,
    bellman_residual,
    bellman_solution_h,
    dp_operator,
    joint_table,
    orbit_closure,
    reward,
    state_transition,
    uniform_grid,
    value_iteration,
)
from rllfb.qgraph import compute_z_values

LOG2_PHI = 0.6942419136306173


def test_state_transition_certain():
    p = ChannelParams(0.1, 0.2)
    assert state_transition(0.6, 0.0, 0, p) == 1.0
    assert state_transition(0.6, 0.0, 1, p) == 1.0


def test_state_transition_from_z2():
    p = ChannelParams(0.1, 0.2)
    z1, z2, z3, _ = compute_z_values(p)
    assert state_transition(z2, z2, 1, p) == pytest.approx(z1, abs=1e-14)
    assert state_transition(z2, z2, 0, p) == pytest.approx(z3, abs=1e-14)


def test_state_transition_errors():
    with pytest.raises(UnreachableOutputError):
        state_transition(0.5, 0.0, 1, ChannelParams(0.0, 0.0))
    with pytest.raises(ValueError):
        state_transition(0.3, 0.5, 0, ChannelParams(0.1, 0.1))


def test_reward_examples():
    p = ChannelParams(0.1, 0.2)
    assert reward(0.5, 0.0, p) == pytest.approx(0.0, abs=1e-15)
    half = ChannelParams(0.5, 0.5)
    assert all(reward(1.0, d, half) == pytest.approx(0.0, abs=1e-15) for d in np.linspace(0, 1, 11))


def test_reward_against_joint_table():
    p = ChannelParams(0.1, 0.2)
    t = joint_table(0.7, 0.3, p)
    pxy = np.array([t[0] + t[2], t[1]])  # rows x = 0, 1
    px = pxy.sum(axis=1, keepdims=True)
    py = pxy.sum(axis=0, keepdims=True)
    mask = pxy > 0
    mi = float(np.sum(pxy[mask] * np.log2(pxy[mask] / (px @ py)[mask])))
    assert reward(0.7, 0.3, p) == pytest.approx(mi, abs=1e-14)
    assert t.sum() == pytest.approx(1.0)


def test_operator_constant_shift():
    p = ChannelParams(0.1, 0.2)
    grid = uniform_grid(501)
    th0, _ = apply_operator(lambda z: np.zeros_like(z), grid, p)
    th5, _ = apply_operator(lambda z: np.full_like(z, 5.0), grid, p)
    assert np.allclose(th5, th0 + 5.0, atol=1e-12)
    # with h = 0 the operator is the best one-step reward over delta in [0, z]
    r = reward(1.0, grid, p)
    assert np.all(th0 >= np.maximum.accumulate(r) - 1e-15)


def test_operator_monotone(rng):
    p = ChannelParams(0.25, 0.25)
    grid = uniform_grid(401)
    h1 = rng.random(401)
    h2 = h1 + rng.random(401)
    t1 = dp_operator(ValueFunction(grid, h1), p).values
    t2 = dp_operator(ValueFunction(grid, h2), p).values
    assert np.all(t1 <= t2 + 1e-12)


def test_value_iteration_examples():
    assert value_iteration(ChannelParams(0, 0), grid_size=1000).rho == pytest.approx(LOG2_PHI, abs=1e-4)
    vf = value_iteration(ChannelParams(0.25, 0.25), grid_size=2000)
    assert vf.rho == pytest.approx(bsc_capacity(0.25).capacity, abs=1e-4)
    assert value_iteration(ChannelParams(0.5, 0.5), grid_size=500).rho == pytest.approx(0.0, abs=1e-9)


def test_value_iteration_nonconvergence():
    with pytest.raises(ConvergenceError) as info:
        value_iteration(ChannelParams(0.25, 0.25), grid_size=500, max_iters=2, tol=1e-14)
    assert info.value.span > 0


def test_value_csv_layout():
    vf = value_iteration(ChannelParams(0.1, 0.1), grid_size=200)
    text = vf.to_csv()
    lines = text.split("\r\n")
    assert lines[0] == "z,h,delta_opt,residual"
    assert len(lines) == 202 and lines[-1] == ""


def test_bellman_solution_branches():
    p = ChannelParams(0.1, 0.2)
    sol = BellmanSolution.for_channel(p)
    assert sol(0.9) == pytest.approx(sol.rho)
    assert sol.h1(sol.z1) == pytest.approx(sol.h2(sol.z1), abs=1e-10)
    assert sol.h2(sol.z2) == pytest.approx(sol.rho, abs=1e-10)
    assert bellman_solution_h(0.05, p) == pytest.approx(float(sol.h1(0.05)))


def test_bellman_residual_examples():
    assert bellman_residual(ChannelParams(0.25, 0.25), 10_000) <= 1e-6
    assert bellman_residual(ChannelParams(0.2, 0.0), 10_000) <= 1e-6
    rep = bellman_check(ChannelParams(0.25, 0.25), 10_000)
    assert rep.action_error <= rep.grid_step


canonical = st.tuples(st.floats(0.0, 0.97, allow_subnormal=False), st.floats(0.0, 0.97, allow_subnormal=False)).filter(lambda t: t[0] + t[1] <= 0.97)


@settings(max_examples=15, deadline=None)
@given(canonical)
def test_bellman_property(ab):
    rep = bellman_check(ChannelParams(*ab), 4000)
    assert rep.residual <= 1e-6
    assert rep.action_error <= rep.grid_step


@settings(max_examples=40, deadline=None)
@given(canonical)
def test_orbit_closure(ab):
    assert orbit_closure(ChannelParams(*ab)) <= 1e-12
