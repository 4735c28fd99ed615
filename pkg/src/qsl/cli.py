"""Command-line interface.

Subcommands: run (a JSON scenario), fig2 (driven-dephased qubit saturation),
erasure (incoherent vs coherently enhanced erasure), envcheck (joint
system-environment energy-variance sweep), verify (random invariant sweep).
Exit status is 0 iff no invariant was violated and no error was raised.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import BoundViolationError, ContractError
from .experiments import (envcheck_experiment, erasure_experiment,
                          fig2_experiment, run_scenario, verify_sweep,
                          _write_json)
from .scenario import ScenarioConfig
from .tolerances import DEFAULT_TOL


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsl",
        description="Speed limits on observables of open quantum systems")
    parser.add_argument("--out-dir", type=Path, default=Path("."),
                        help="directory for output files")
    parser.add_argument("--tol-scale", type=float, default=1.0,
                        help="uniform scale factor on every tolerance")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for randomized commands")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a JSON scenario file")
    p_run.add_argument("config", type=Path)

    p_fig2 = sub.add_parser("fig2", help="driven-dephased qubit experiment")
    p_fig2.add_argument("--omega", type=float, default=1.0)
    p_fig2.add_argument("--kappa", type=float, default=0.1)
    p_fig2.add_argument("--init", choices=("z1", "diag"), default="z1")
    p_fig2.add_argument("--t-max", type=float, default=10.0)
    p_fig2.add_argument("--steps", type=int, default=4000)

    p_er = sub.add_parser("erasure", help="erasure comparison")
    p_er.add_argument("--a", type=float, default=0.9238795325112867)
    p_er.add_argument("--b", type=float, default=0.3826834323650898)
    p_er.add_argument("--gamma", type=float, default=1.0)
    p_er.add_argument("--epsilon", type=float, default=0.5)
    p_er.add_argument("--t-max", type=float, default=2.0)
    p_er.add_argument("--steps", type=int, default=2000)

    p_env = sub.add_parser("envcheck", help="energy-variance bound sweep")
    p_env.add_argument("--scenarios", type=int, default=200)
    p_env.add_argument("--instants", type=int, default=100)
    p_env.add_argument("--t-max", type=float, default=1.0)

    p_ver = sub.add_parser("verify", help="random invariant sweep")
    p_ver.add_argument("--trials", type=int, default=10000)
    p_ver.add_argument("--dims", type=str, default="2-8",
                       help="dimension range, e.g. 2-8 or 2,4,6")
    return parser


def _parse_dims(text: str) -> tuple[int, ...]:
    if "-" in text:
        lo, hi = text.split("-", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(v) for v in text.split(","))


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    tol = DEFAULT_TOL.scaled(args.tol_scale)
    out_dir = args.out_dir
    try:
        if args.command == "run":
            config = ScenarioConfig.parse(args.config.read_text())
            written = run_scenario(config, out_dir, tol)
            for kind, path in written.items():
                print(f"{kind}: {path}")
            return 0
        if args.command == "fig2":
            written, summary = fig2_experiment(
                omega=args.omega, kappa=args.kappa, init=args.init,
                t_max=args.t_max, steps=args.steps, out_dir=out_dir, tol=tol)
            for kind, path in written.items():
                print(f"{kind}: {path}")
            return 0
        if args.command == "erasure":
            written, summary = erasure_experiment(
                a=args.a, b=args.b, gamma=args.gamma, epsilon=args.epsilon,
                t_max=args.t_max, steps=args.steps, out_dir=out_dir, tol=tol)
            for kind, path in written.items():
                print(f"{kind}: {path}")
            return 0 if summary["max_abs_z_excess"] <= 1e-9 else 1
        if args.command == "envcheck":
            summary = envcheck_experiment(
                seed=args.seed, scenarios=args.scenarios, instants=args.instants,
                t_max=args.t_max, out_dir=out_dir, tol=tol)
            print(json.dumps(
                {k: v for k, v in summary.items() if not k.startswith("worst")},
                indent=2, sort_keys=True))
            return 0 if summary["pass_literal"] else 1
        if args.command == "verify":
            summary = verify_sweep(seed=args.seed, trials=args.trials,
                                   dims=_parse_dims(args.dims), tol=tol)
            out_dir.mkdir(parents=True, exist_ok=True)
            path = out_dir / f"verify_{args.seed}.json"
            _write_json(path, summary)
            failing = [name for name, rec in summary["invariants"].items()
                       if not rec["ok"]]
            print(f"verify: {summary['trials']} trials, "
                  f"{len(summary['invariants'])} invariants, "
                  f"{'PASS' if summary['pass'] else 'FAIL: ' + ', '.join(failing)}")
            print(f"summary: {path}")
            return 0 if summary["pass"] else 1
    except (ContractError, BoundViolationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
