"""Command-line front end: capacities, sweeps, DP, and Monte Carlo runs.

Every command prints a short text report, or a JSON document with --json.
--out writes the tabular part (CSV, CRLF line endings) to a file.  Output is a
pure function of the arguments, so identical invocations are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .asymptotic import (
    bsc_feedback_asymptotic,
    bsc_nonfeedback_asymptotic,
    coefficient_gap,
)
from .capacity import (
    SingularParametersError,
    bsc_capacity,
    capacity_by_maximization,
    capacity_by_root,
    s_channel_capacity,
    z_bounds,
    z_channel_capacity,
)
from .channel import ChannelParams, canonicalize
from .dp import ConvergenceError, bellman_check, value_iteration
from .qgraph import DegeneratePolicyError, build_policy, conditional_mutual_information
from .schannel import run_schannel_scheme
from .streams import trial_seed

SCHEMA = 1
AGREE_TOL = 1e-6
DP_TOL = 2e-4


def dumps(obj) -> str:
    return json.dumps({"schema": SCHEMA, **obj}, sort_keys=True, indent=1) + "\n"


def rows_to_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def channel_from(args) -> tuple[ChannelParams, bool]:
    return canonicalize(ChannelParams(args.alpha, args.beta))


def canonical_grid(points: int = 20, limit: float = 0.98) -> list[tuple[float, float]]:
    """points x points channels covering alpha + beta <= limit.

    alpha takes the values limit*i/points, i < points; for each, beta runs
    evenly over [0, limit - alpha].
    """
    out = []
    for i in range(points):
        a = limit * i / points
        for j in range(points):
            out.append((a, (limit - a) * j / (points - 1)))
    return out


@dataclass
class SweepRow:
    alpha: float
    beta: float
    c_formula: float
    c_root: float
    c_dp: float
    i_xy_given_q: float
    bellman_residual: float
    z2: float
    z_lower: float
    z_upper: float
    ok: bool


def sweep_row(params: ChannelParams, grid: int = 2000) -> SweepRow:
    c_max = capacity_by_maximization(params)
    try:
        c_root = capacity_by_root(params).capacity
    except SingularParametersError:
        c_root = 0.0  # the output does not depend on the input
    try:
        policy = build_policy(params, c_max.z_opt)
        info = conditional_mutual_information(policy, params)
        resid = bellman_check(params, grid_size=grid).residual
    except DegeneratePolicyError:
        info, resid = c_max.capacity, 0.0
    c_dp = value_iteration(params, grid_size=grid).rho
    zl, zu = z_bounds(params)
    ok = (abs(c_max.capacity - c_root) <= AGREE_TOL and abs(c_max.capacity - info) <= AGREE_TOL
          and abs(c_max.capacity - c_dp) <= DP_TOL)
    return SweepRow(params.alpha, params.beta, c_max.capacity, c_root, c_dp, info, resid,
                    c_max.z_opt, zl, zu, ok)


def emit(args, text: str, payload: dict, table: str | None = None) -> None:
    if table is not None and args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(table)
    sys.stdout.write(dumps(payload) if args.json else text)


# commands -----------------------------------------------------------------

def cmd_capacity(args) -> int:
    params, flipped = channel_from(args)
    c_max = capacity_by_maximization(params)
    try:
        c_root: float | None = capacity_by_root(params).capacity
    except SingularParametersError:
        c_root = None
    try:
        info: float | None = conditional_mutual_information(build_policy(params, c_max.z_opt), params)
    except DegeneratePolicyError:
        info = None
    checks = [v for v in (c_root, info) if v is not None]
    worst = max((abs(v - c_max.capacity) for v in checks), default=0.0)
    ok = worst <= AGREE_TOL
    payload = {
        "alpha": params.alpha, "beta": params.beta, "canonicalized": flipped,
        "capacity": c_max.capacity, "z_opt": c_max.z_opt, "p_opt": c_max.p_opt,
        "capacity_root": c_root, "i_xy_given_q": info, "max_disagreement": worst, "ok": ok,
    }
    lines = []
    if flipped:
        lines.append(f"canonicalized: input ({args.alpha}, {args.beta}) -> ({params.alpha!r}, {params.beta!r})")
    lines.append(f"capacity {c_max.capacity:.6f}")
    lines.append(f"z_opt {c_max.z_opt!r}  p_opt {c_max.p_opt!r}")
    lines.append(f"root form {c_root!r}  I(X;Y|Q) {info!r}  max disagreement {worst:.3e}")
    if not ok:
        lines.append("FAIL: methods disagree")
    emit(args, "\n".join(lines) + "\n", payload)
    return 0 if ok else 1


def cmd_sweep_zs(args) -> int:
    rows = []
    for v in np.linspace(0.0, 0.5, args.grid):
        v = float(v)
        rows.append((v, z_channel_capacity(v).capacity, s_channel_capacity(v).capacity))
    table = rows_to_csv(["param", "c_z", "c_s"], rows)
    payload = {"rows": [dict(zip(("param", "c_z", "c_s"), r)) for r in rows]}
    emit(args, table if not args.out else f"wrote {len(rows)} rows to {args.out}\n", payload, table)
    return 0


def cmd_sweep(args) -> int:
    rows = [sweep_row(ChannelParams(a, b), grid=args.grid) for a, b in canonical_grid(args.points)]
    fields = list(SweepRow.__dataclass_fields__)
    table = rows_to_csv(fields, [tuple(asdict(r).values()) for r in rows])
    bad = sum(not r.ok for r in rows)
    payload = {"rows": [asdict(r) for r in rows], "failures": bad}
    emit(args, table if not args.out else f"wrote {len(rows)} rows, {bad} flagged\n", payload, table)
    return 0 if bad == 0 else 1


def cmd_dp_solve(args) -> int:
    params, flipped = channel_from(args)
    try:
        vf = value_iteration(params, grid_size=args.grid, max_iters=args.iters, tol=args.tol)
    except ConvergenceError as exc:
        sys.stderr.write(f"{exc}\n")
        return 2
    payload = {"alpha": params.alpha, "beta": params.beta, "canonicalized": flipped,
               "rho": vf.rho, "span": vf.span, "iterations": vf.iterations, "grid": args.grid}
    text = f"rho {vf.rho!r}\niterations {vf.iterations}  span {vf.span:.3e}\n"
    emit(args, text, payload, vf.to_csv())
    return 0


def cmd_bellman_check(args) -> int:
    params, flipped = channel_from(args)
    rep = bellman_check(params, grid_size=args.grid)
    ok = rep.residual <= 1e-6
    payload = {"alpha": params.alpha, "beta": params.beta, "canonicalized": flipped,
               **asdict(rep), "ok": ok}
    text = (f"residual {rep.residual:.3e}  action error {rep.action_error:.3e}"
            f"  (grid step {rep.grid_step:.1e})\nrho {rep.rho!r}  z2 {rep.z2!r}\n")
    emit(args, text, payload)
    return 0 if ok else 1


def cmd_simulate_pms(args) -> int:
    from .pms import run_pms

    params, flipped = channel_from(args)
    rate = args.rate
    if args.rate_fraction is not None:
        rate = args.rate_fraction * capacity_by_maximization(params).capacity
    if rate is None:
        sys.stderr.write("either --rate or --rate-fraction is required\n")
        return 2
    errors = 0
    rows = []
    checks_ok = True
    with warnings.catch_warnings():
        warnings.simplefilter("ignore" if args.json else "default")
        for i in range(args.trials):
            ts = trial_seed(args.seed, i)
            tr = run_pms(None, args.n, rate, params, seed=ts, num_messages=args.messages,
                         check=args.check, keep_steps=False)
            errors += not tr.correct
            if tr.checks is not None:
                checks_ok &= tr.checks.ok
            rows.append((i, ts, tr.message, -1 if tr.decoded is None else tr.decoded,
                         int(tr.correct), len(tr.candidates),
                         -1 if tr.list_index is None else tr.list_index))
    err_rate = errors / args.trials
    payload = {"alpha": params.alpha, "beta": params.beta, "canonicalized": flipped,
               "n": args.n, "rate": rate, "messages": args.messages, "trials": args.trials,
               "seed": args.seed, "errors": errors, "error_rate": err_rate}
    if args.check:
        payload["invariants_ok"] = checks_ok
    table = rows_to_csv(["trial", "seed", "message", "decoded", "correct", "list_size",
                         "list_index"], rows)
    text = f"error rate {err_rate!r} ({errors}/{args.trials})\n"
    if args.check:
        text += f"invariants {'ok' if checks_ok else 'VIOLATED'}\n"
    emit(args, text, payload, table)
    return 0 if checks_ok else 1


def cmd_simulate_schannel(args) -> int:
    res = run_schannel_scheme(args.alpha, args.n, args.trials, seed=args.seed)
    cap = s_channel_capacity(args.alpha).capacity
    payload = {**res.summary(), "capacity": cap, "seed": args.seed}
    text = (f"empirical rate {res.empirical_rate!r}  capacity {cap!r}\n"
            f"errors {res.errors}/{res.trials}  uses/bit {res.mean_uses_per_bit!r}"
            f" (predicted {res.predicted_uses_per_bit!r})\n")
    emit(args, text, payload, res.to_csv())
    return 0 if res.errors == 0 else 1


def cmd_asymptotic(args) -> int:
    rows = []
    for a in (float(t) for t in args.alphas.split(",")):
        exact = bsc_capacity(a).capacity
        fb = bsc_feedback_asymptotic(a)
        nfb = bsc_nonfeedback_asymptotic(a)
        resid = exact - fb
        rows.append((a, exact, fb, nfb, resid, resid / (a * math.log2(a)) ** 2))
    header = ["alpha", "exact", "feedback_expansion", "nonfeedback_expansion", "residual",
              "scaled_residual"]
    table = rows_to_csv(header, rows)
    payload = {"rows": [dict(zip(header, r)) for r in rows], "coefficient_gap": coefficient_gap()}
    emit(args, table, payload, table)
    return 0


def cmd_psi_check(args) -> int:
    from .pms.diagnostics import psi_phi_diagnostic

    params, flipped = channel_from(args)
    rows = psi_phi_diagnostic(params, rho=args.rho, trials=args.trials, tuples=args.tuples,
                              seed=args.seed)
    ok = all(r.matches and r.within_bound for r in rows)
    dicts = [r.to_dict() for r in rows]
    header = list(dicts[0]) if dicts else []
    table = rows_to_csv(header, [tuple(d.values()) for d in dicts])
    payload = {"alpha": params.alpha, "beta": params.beta, "canonicalized": flipped,
               "rows": dicts, "ok": ok}
    emit(args, table, payload, table)
    return 0 if ok else 1


# parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rllfb", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, channel=True):
        p = sub.add_parser(name, help=help_)
        if channel:
            p.add_argument("--alpha", type=float, default=0.0)
            p.add_argument("--beta", type=float, default=0.0)
        p.add_argument("--json", action="store_true", help="print a JSON document")
        p.add_argument("--out", help="write the CSV table to this path")
        p.set_defaults(func=func)
        return p

    add("capacity", cmd_capacity, "capacity by maximization, root form and I(X;Y|Q)")
    p = add("sweep-zs", cmd_sweep_zs, "Z-channel and S-channel capacity over [0, 0.5]", channel=False)
    p.add_argument("--grid", type=int, default=51)
    p = add("sweep", cmd_sweep, "all capacity methods on a grid of channels", channel=False)
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--grid", type=int, default=2000)
    p = add("dp-solve", cmd_dp_solve, "relative value iteration")
    p.add_argument("--grid", type=int, default=2000)
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--tol", type=float, default=1e-10)
    p = add("bellman-check", cmd_bellman_check, "residual of the explicit Bellman solution")
    p.add_argument("--grid", type=int, default=10_000)
    p = add("simulate-pms", cmd_simulate_pms, "Monte Carlo runs of the posterior matching scheme")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--rate", type=float)
    p.add_argument("--rate-fraction", type=float, help="rate as a fraction of capacity")
    p.add_argument("--messages", type=int, help="message count (overrides 2^(n*rate))")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--check", action="store_true", help="verify per-step invariants")
    p = add("simulate-schannel", cmd_simulate_schannel, "zero-error scheme for beta = 0",
            channel=False)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--n", type=int, default=48, help="shaped word length")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p = add("asymptotic", cmd_asymptotic, "small-noise expansions against the exact value",
            channel=False)
    p.add_argument("--alphas", default="1e-2,1e-3,1e-4")
    p = add("psi-check", cmd_psi_check, "one-step moment closed form against simulation")
    p.add_argument("--rho", type=float)
    p.add_argument("--trials", type=int, default=200_000)
    p.add_argument("--tuples", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
