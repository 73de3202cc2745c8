"""Command-line front end.

    csense validate --config scenario.yaml
    csense build-fisher --config scenario.yaml --out fisher.csv
    csense build-dp --config scenario.yaml --out dp.npz [-d 10 -L 10 -M 4096]
    csense inspect fisher.csv | dp.npz
    csense run --config scenario.yaml [--policies gfis2,dp] [--seed 7] [--out results/]

Exit codes: 0 success, 1 usage error, 2 config error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericError
from .fisher import build_fisher_table
from .harness.config import check_policy_name, load_config
from .harness.results import read_fisher_table, write_fisher_table
from .harness.runner import build_dp, run_comparison
from .policies.dp import DpPolicy

OUT_ENV = "CSENSE_OUT"

log = logging.getLogger("controlled_sensing")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="csense", description="Controlled sensing simulator (GFIS2 vs DP).")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a policy comparison and write CSVs")
    r.add_argument("--config", required=True)
    r.add_argument("--policies", help="comma-separated, e.g. gfis2,dp,random,full-budget,fixed:3")
    r.add_argument("--seed", type=int, help="first replicate seed (replicates use seed, seed+1, ...)")
    r.add_argument("--out", default=os.environ.get(OUT_ENV, "results"))
    r.add_argument("--fisher-table", help="prebuilt Fisher table CSV")
    r.add_argument("--dp-table", help="prebuilt DP table (.npz)")
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--timing", action="store_true", help="add wall_time to metrics.csv (not reproducible)")
    r.add_argument("--quiet", action="store_true")

    b = sub.add_parser("build-dp", help="solve the DP and save its table")
    b.add_argument("--config", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("-d", "--resolution", type=int)
    b.add_argument("-L", "--horizon", type=int)
    b.add_argument("-M", "--samples", type=int)
    b.add_argument("--threads", type=int, default=1)

    f = sub.add_parser("build-fisher", help="build the GFIS2 lookup table")
    f.add_argument("--config", required=True)
    f.add_argument("--out", required=True)

    i = sub.add_parser("inspect", help="print a Fisher (.csv) or DP (.npz) table")
    i.add_argument("table")

    v = sub.add_parser("validate", help="validate a scenario config")
    v.add_argument("--config", required=True)
    return p


def _print_fisher(table, out=None):
    out = out or sys.stdout
    a = table.n_controls
    print("phi(x, u)", file=out)
    print("state " + " ".join(f"{'u' + str(u):>12}" for u in range(a)) + "  best", file=out)
    for x in range(table.n_states):
        vals = " ".join(f"{v:12.6g}" for v in table.phi[x])
        print(f"{x:>5} {vals}  {int(table.best_control[x]):>4}", file=out)


def _print_dp(policy: DpPolicy, out=None):
    out = out or sys.stdout
    g = policy.grid
    print(f"DP table: n={g.n} d={g.d} points={len(g)} horizon={policy.horizon} samples={policy.samples}", file=out)
    for u, c in enumerate(policy.controls):
        print(f"  control {u}: {c}", file=out)
    s1 = policy.stage(1)
    print("stage 1 (first 20 points): belief -> control, cost-to-go", file=out)
    for k in range(min(20, len(g))):
        b = " ".join(f"{v:.2f}" for v in g.points[k])
        print(f"  [{b}] -> {int(s1.controls[k])}  {s1.values[k]:.6g}", file=out)
    counts = np.bincount(s1.controls, minlength=len(policy.controls))
    print("stage 1 control usage over grid: " + " ".join(str(int(c)) for c in counts), file=out)


def _summary(result, out=None):
    out = out or sys.stdout
    print(f"{'policy':<14}{'MSE':>12}{'+-SE':>10}{'accuracy':>11}{'+-SE':>9}{'time[s]':>10}", file=out)
    for r in result.reports.values():
        print(
            f"{r.policy:<14}{r.mse:>12.5f}{r.mse_se:>10.5f}{r.detection_accuracy:>11.4f}{r.accuracy_se:>9.4f}{r.wall_time:>10.2f}",
            file=out,
        )
        if r.mse_out_of_range:
            print(f"  note: {r.policy} MSE outside [0, 2] (raw posteriors)", file=out)


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    policies = args.policies.split(",") if args.policies else list(cfg.policies)
    n_controls = len(cfg.controls)
    for k, name in enumerate(policies):
        check_policy_name(name, n_controls, f"--policies[{k}]")
    seeds = None
    if args.seed is not None:
        seeds = [args.seed + i for i in range(len(cfg.seeds))]
    table = read_fisher_table(args.fisher_table) if args.fisher_table else None
    dp = DpPolicy.load(args.dp_table) if args.dp_table else None
    result = run_comparison(
        cfg, policies, args.out, seeds=seeds, fisher_table=table, dp_policy=dp, workers=args.threads, timing=args.timing
    )
    if not args.quiet:
        _summary(result)
        print(f"wrote {', '.join(str(f) for f in result.files)}")
    return 0


def _cmd_build_dp(args) -> int:
    cfg = load_config(args.config)
    policy = build_dp(cfg, workers=args.threads, L=args.horizon, d=args.resolution, samples=args.samples)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "wb") as fh:
        policy.save(fh)
    print(f"wrote DP table ({len(policy.grid)} points x {policy.horizon} stages) to {out}")
    return 0


def _cmd_build_fisher(args) -> int:
    cfg = load_config(args.config)
    table = build_fisher_table(cfg.build_model())
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_fisher_table(out, table)
    _print_fisher(table)
    return 0


def _cmd_inspect(args) -> int:
    path = Path(args.table)
    if not path.exists():
        print(f"csense: no such file {path}", file=sys.stderr)
        return 2
    try:
        if path.suffix == ".npz":
            _print_dp(DpPolicy.load(path))
        else:
            _print_fisher(read_fisher_table(path))
    except (ValueError, KeyError) as exc:
        print(f"csense: cannot read {path}: {exc}", file=sys.stderr)
        return 2
    return 0


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(
        f"{args.config}: ok ({cfg.n_states} states, {len(cfg.sensors)} sensors, "
        f"{len(cfg.controls)} controls, budget {cfg.budget})"
    )
    return 0


COMMANDS = {
    "run": _cmd_run,
    "build-dp": _cmd_build_dp,
    "build-fisher": _cmd_build_fisher,
    "inspect": _cmd_inspect,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"csense: config error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"csense: numeric failure: {exc}", file=sys.stderr)
        return 3
