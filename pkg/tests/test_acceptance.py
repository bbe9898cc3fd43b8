"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line (also collected in the terminal
summary) before asserting.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from rllfb.asymptotic import (
    GOLDEN,
    NONFEEDBACK_XLOGX,
    FEEDBACK_XLOGX,
    bsc_feedback_asymptotic,
    bsc_nonfeedback_asymptotic,
    coefficient_gap,
)
from rllfb.capacity import (
    bsc_capacity,
    capacity_by_maximization,
    capacity_by_root,
    rate_function,
    s_channel_capacity,
    z_bounds,
    z_channel_capacity,
)
from rllfb.channel import ChannelParams, is_rll
from rllfb.cli import canonical_grid
from rllfb.dp import bellman_check, orbit_closure, value_iteration
from rllfb.pms import run_pms
from rllfb.pms.diagnostics import psi_phi_diagnostic
from rllfb.qgraph import (
    TRANSITIONS,
    build_policy,
    compute_z_values,
    conditional_mutual_information,
    stationary_check,
)
from rllfb.schannel import run_schannel_scheme
from rllfb.streams import trial_seed

GRID = [ChannelParams(a, b) for a, b in canonical_grid(20, 0.98)]
SEED = 2024


def pms_error_rate(params, n, rate, trials, seed, num_messages=None, check=False):
    errors, reports = 0, []
    for i in range(trials):
        tr = run_pms(None, n, rate, params, trial_seed(seed, i), num_messages=num_messages,
                     check=check, keep_steps=False)
        errors += not tr.correct
        if check:
            reports.append((tr.checks, is_rll(tr.transmitted)))
    return errors / trials, reports


def test_golden_anchor(verdict):
    start = time.perf_counter()
    values = [bsc_capacity(0.0).capacity, z_channel_capacity(0.0).capacity,
              s_channel_capacity(0.0).capacity]
    elapsed = time.perf_counter() - start
    target = math.log2((1.0 + math.sqrt(5.0)) / 2.0)
    worst = max(abs(v - target) for v in values)
    ok = worst <= 1e-9 and elapsed < 1.0 and abs(target - 0.6942419136306173) <= 1e-15
    assert verdict(1, ok, f"max |C(0) - log2 golden| = {worst:.1e}, {elapsed:.3f} s")


def test_method_triangle(verdict):
    start = time.perf_counter()
    d_root = d_info = d_dp = 0.0
    for p in GRID:
        c = capacity_by_maximization(p)
        d_root = max(d_root, abs(c.capacity - capacity_by_root(p).capacity))
        d_info = max(d_info, abs(c.capacity - conditional_mutual_information(build_policy(p, c.z_opt), p)))
        d_dp = max(d_dp, abs(c.capacity - value_iteration(p, grid_size=2000).rho))
    elapsed = time.perf_counter() - start
    ok = d_root <= 1e-8 and d_info <= 1e-8 and d_dp <= 2e-4 and elapsed < 300
    detail = (f"{len(GRID)} channels, root {d_root:.1e}, I(X;Y|Q) {d_info:.1e}, "
              f"DP {d_dp:.1e}, {elapsed:.0f} s")
    assert verdict(2, ok, detail)


def test_bellman_certificate(verdict):
    rng = np.random.default_rng(SEED)
    worst_res, worst_act, ok = 0.0, 0.0, True
    for _ in range(10):
        a = float(rng.uniform(0.0, 0.98))
        b = float(rng.uniform(0.0, 0.98 - a))
        rep = bellman_check(ChannelParams(a, b), grid_size=10_000)
        worst_res = max(worst_res, rep.residual)
        worst_act = max(worst_act, rep.action_error)
        ok &= rep.residual <= 1e-6 and rep.action_error <= rep.grid_step
    assert verdict(3, ok, f"10 channels, residual {worst_res:.1e}, action error {worst_act:.1e}")


def test_search_interval(verdict):
    z = np.linspace(0.0, 1.0, 100_000)
    h = z[1] - z[0]
    ok, worst = True, 0.0
    for p in GRID:
        arg = z[int(np.argmax(rate_function(z, p)))]
        lo, hi = z_bounds(p)
        outside = max(lo - arg, arg - hi, 0.0)
        worst = max(worst, outside)
        ok &= outside <= h
    diag_ok = True
    for a in np.linspace(0.0, 0.49, 50):
        p = ChannelParams(float(a), float(a))
        arg = z[int(np.argmax(rate_function(z, p)))]
        out_prob = a + (1.0 - 2.0 * a) * arg
        diag_ok &= math.sqrt(a * (1.0 - a)) - h <= out_prob <= 0.5 + h
    ok = bool(ok and diag_ok)
    assert verdict(4, ok, f"grid argmax outside [z_L, z_U] by at most {worst:.1e}; BSC diagonal ok={diag_ok}")


def test_orbit_closure(verdict):
    g_table = {(1, 0): 4, (1, 1): 2, (2, 0): 3, (2, 1): 1,
               (3, 0): 3, (3, 1): 1, (4, 0): 3, (4, 1): 1}
    ordered, worst = True, 0.0
    for p in GRID:
        z1, z2, z3, z4 = compute_z_values(p)
        ordered &= z1 <= z2 + 1e-12 and z2 <= z3 + 1e-12 and z3 <= z4 + 1e-12
        worst = max(worst, orbit_closure(p))
    ok = bool(ordered and worst <= 1e-12 and TRANSITIONS == g_table)
    assert verdict(5, ok, f"ordering ok={ordered}, closure error {worst:.1e}")


def test_stationary_law(verdict):
    resid, mass = 0.0, 0.0
    for p in GRID:
        pol = build_policy(p)
        resid = max(resid, stationary_check(pol, p))
        mass = max(mass, abs(float(np.sum(pol.pi_q)) - 1.0))
    ok = resid <= 1e-10 and mass <= 1e-12
    assert verdict(6, ok, f"residual {resid:.1e}, |sum pi - 1| {mass:.1e}")


def test_small_noise_coefficients(verdict):
    gap = coefficient_gap()
    direct = (2 * GOLDEN + 2) / (4 * GOLDEN + 3) - (2 - GOLDEN) / (3 - GOLDEN)
    ok = gap > 0 and abs(gap - direct) <= 1e-15 and abs(gap - 0.2767) <= 5e-4
    ok &= NONFEEDBACK_XLOGX > FEEDBACK_XLOGX
    for a in (1e-3, 1e-4):
        ok &= bsc_feedback_asymptotic(a) > bsc_nonfeedback_asymptotic(a)
    scaled = []
    for a in (1e-2, 1e-3, 1e-4):
        err = abs(bsc_capacity(a).capacity - bsc_feedback_asymptotic(a))
        scaled.append(err / (a * math.log2(a)) ** 2)
    ratio = max(scaled) / min(scaled)
    ok = bool(ok and ratio < 3.0)
    detail = f"gap {gap:.7f}, scaled residuals {', '.join(f'{s:.4f}' for s in scaled)} (ratio {ratio:.2f})"
    assert verdict(7, ok, detail)


@pytest.mark.slow
def test_pms_invariants_and_trend(verdict):
    p = ChannelParams(0.25, 0.25)
    rate = 0.5 * capacity_by_maximization(p).capacity
    rates = {}
    for n in (100, 200, 400, 800):
        rates[n], reports = pms_error_rate(p, n, rate, 1000, SEED, check=(n == 200))
        if n == 200:
            inv_ok = len(reports) == 1000 and all(r.ok and rll for r, rll in reports)
            worst_total = max(r.max_total_error for r, _ in reports)
            worst_part = max(r.max_partition_error for r, _ in reports)
            worst_ratio = max(r.max_bound_ratio for r, _ in reports)
    trend = [rates[n] for n in sorted(rates)]
    monotone = all(b < a for a, b in zip(trend, trend[1:]))
    ok = bool(inv_ok and monotone)
    detail = (f"1000 checked runs ok={inv_ok} (sum {worst_total:.1e}, partition {worst_part:.1e}, "
              f"bound ratio {worst_ratio:.3f}); error rates {trend}")
    assert verdict(8, ok, detail)


@pytest.mark.slow
def test_pms_end_to_end(verdict):
    noiseless, _ = pms_error_rate(ChannelParams(0.0, 0.0), 200, 0.5, 1000, SEED, num_messages=16)
    p = ChannelParams(0.1, 0.1)
    rate = 0.3 * capacity_by_maximization(p).capacity
    trend = [pms_error_rate(p, n, rate, 1000, SEED + 1)[0] for n in (100, 200, 400, 800)]
    decreasing = all(b < a for a, b in zip(trend, trend[1:]))
    ok = noiseless <= 0.01 and trend[-1] <= 0.10 and decreasing
    assert verdict(9, ok, f"noiseless error {noiseless}, (0.1, 0.1) error rates {trend}")


@pytest.mark.slow
def test_schannel_scheme(verdict):
    ok, parts = True, []
    for a in (0.1, 0.2, 0.3):
        cap = s_channel_capacity(a).capacity
        res = run_schannel_scheme(a, 48, 10_000, seed=SEED)
        uses_err = abs(res.mean_uses_per_bit / res.predicted_uses_per_bit - 1.0)
        gap = 1.0 - res.empirical_rate / cap
        smaller = [run_schannel_scheme(a, n, 2000, seed=SEED).empirical_rate for n in (12, 24)]
        improving = smaller[0] < smaller[1] < res.empirical_rate
        ok &= res.errors == 0 and uses_err <= 0.01 and gap <= 0.12 and improving
        parts.append(f"a={a}: {res.errors} errors, E[l] off {uses_err:.2%}, gap {gap:.1%}")
    assert verdict(10, bool(ok), "; ".join(parts))


def test_psi_diagnostic(verdict):
    ok, parts = True, []
    for a, b in ((0.25, 0.25), (0.1, 0.2)):
        rows = psi_phi_diagnostic(ChannelParams(a, b), trials=200_000, tuples=20, seed=0)
        m = sum(r.matches for r in rows)
        w = sum(r.within_bound for r in rows)
        ok &= m == len(rows) == 20 and w == 20
        parts.append(f"({a}, {b}): {m}/20 within 3 SE, {w}/20 under bound")
    assert verdict(11, bool(ok), "; ".join(parts))


def test_determinism(verdict, tmp_path):
    commands = [
        ["capacity", "--alpha", "0.1", "--beta", "0.2", "--json"],
        ["sweep-zs", "--grid", "11", "--out", "{out}"],
        ["dp-solve", "--alpha", "0.25", "--beta", "0.25", "--grid", "200", "--json", "--out", "{out}"],
        ["simulate-pms", "--alpha", "0.25", "--beta", "0.25", "--n", "100", "--rate-fraction", "0.5",
         "--trials", "5", "--seed", "3", "--json", "--out", "{out}"],
        ["simulate-schannel", "--alpha", "0.2", "--n", "24", "--trials", "50", "--seed", "3",
         "--json", "--out", "{out}"],
        ["psi-check", "--alpha", "0.25", "--beta", "0.25", "--trials", "2000", "--tuples", "5",
         "--json", "--out", "{out}"],
    ]
    same = 0
    for k, cmd in enumerate(commands):
        outputs = []
        out = tmp_path / f"{k}.csv"
        for _ in range(2):
            out.unlink(missing_ok=True)
            argv = [a.replace("{out}", str(out)) for a in cmd]
            proc = subprocess.run([sys.executable, "-m", "rllfb", *argv], capture_output=True, check=True)
            outputs.append((proc.stdout, out.read_bytes() if out.exists() else b""))
        same += outputs[0] == outputs[1] and len(outputs[0][0]) > 0
    assert verdict(12, same == len(commands), f"{same}/{len(commands)} commands byte-identical")
