"""Command-line driver: frequency-domain sweeps, solver runs, self-checks.

Exit codes are a stable contract: 0 success, 1 computational failure,
2 usage error. All outputs are deterministic for identical invocations;
wall-clock timing goes only into the JSON manifest next to each CSV.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from stmg import experiments, lfa, linalg, multigrid, verify
from stmg.errors import Diverged, ExcludedFrequency, NoConvergence, SingularMatrix, SingularSymbol

_FAILURES = (Diverged, ExcludedFrequency, NoConvergence, SingularMatrix, SingularSymbol, ValueError)


def _default_threads(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("STMG_LFA_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def cmd_lfa(args) -> int:
    threads = _default_threads(args.threads)
    t0 = time.perf_counter()
    try:
        rows = experiments.run_lfa_sweep(
            strategies=(args.strategy,),
            p_ts=(args.pt,),
            mus=args.mu_list,
            n_xs=args.nx,
            n_slabs=args.slabs,
            omega_t=args.omega,
            nu1=args.nu1,
            nu2=args.nu2,
            threads=threads,
        )
    except _FAILURES as exc:
        print(f"lfa sweep failed ({args.strategy}, p_t={args.pt}): {exc}", file=sys.stderr)
        return 1
    out = Path(args.out)
    experiments.write_csv(out, rows)
    experiments.write_manifest(
        out.with_suffix(".manifest.json"),
        "lfa",
        {
            "strategy": args.strategy,
            "pt": args.pt,
            "mu_list": args.mu_list,
            "nx": args.nx,
            "slabs": args.slabs,
            "omega": args.omega,
            "nu1": args.nu1,
            "nu2": args.nu2,
            "threads": threads,
        },
        time.perf_counter() - t0,
        [str(out)],
    )
    for row in rows:
        print(
            f"strategy={row['strategy']} p_t={row['p_t']} mu={row['mu']} "
            f"factor={row['factor']} contraction={row['contraction']} "
            f"excluded={row['excluded_count']}"
        )
    return 0


def cmd_solve(args) -> int:
    if args.dims == 2 and args.ny is not None and args.ny != args.nx:
        print("solve: the 2D grid is square; --ny must equal --nx", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    try:
        spec = experiments.ProblemSpec(args.dims, args.pt, args.px, args.nx, args.slabs, args.mu)
        cfg = multigrid.MgConfig(args.omega, args.nu1, args.nu2, args.strategy)
        run = experiments.run_solver_experiment(spec, cfg, iters=args.iters)
    except _FAILURES as exc:
        print(f"solve failed (dims={args.dims}, p_t={args.pt}, p_x={args.px}): {exc}", file=sys.stderr)
        return 1
    norms = run.residuals
    rate_known = len(norms) >= 3
    rows = []
    for i, r in enumerate(norms):
        rows.append(
            {
                "iteration": repr(i),
                "residual": repr(r),
                "ratio": repr(norms[i] / norms[i - 1]) if i >= 1 and norms[i - 1] else "",
                "rate": repr(run.rate) if (rate_known and i == len(norms) - 1) else "",
            }
        )
    out = Path(args.out)
    experiments.write_csv(out, rows)
    experiments.write_manifest(
        out.with_suffix(".manifest.json"),
        "solve",
        {
            "dims": args.dims,
            "pt": args.pt,
            "px": args.px,
            "mu": args.mu,
            "nx": args.nx,
            "slabs": args.slabs,
            "strategy": args.strategy,
            "iters": args.iters,
            "omega": args.omega,
            "nu1": args.nu1,
            "nu2": args.nu2,
        },
        time.perf_counter() - t0,
        [str(out)],
    )
    if rate_known:
        print(f"rate={run.rate!r} after {len(norms) - 1} iterations")
    else:
        print(f"{len(norms) - 1} iteration(s); too few residuals for a rate")
    return 0


def cmd_verify(args) -> int:
    try:
        results = verify.run_checks(fault=args.inject_fault)
    except ValueError as exc:
        print(f"verify: {exc}", file=sys.stderr)
        return 2
    if args.json:
        doc = [
            {"name": r.name, "passed": r.passed, "detail": r.detail, "seconds": r.seconds}
            for r in results
        ]
        print(json.dumps(doc, indent=2))
    else:
        width = max(len(r.name) for r in results)
        print(f"kernel backend: {linalg.backend()}")
        for r in results:
            mark = "pass" if r.passed else "FAIL"
            print(f"  {r.name:<{width}}  {mark}  {r.detail} [{r.seconds:.2f}s]")
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"first failing check: {failed[0].name}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stmg",
        description="Space-time multigrid solver and Fourier-mode analysis for linear advection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_lfa = sub.add_parser("lfa", help="sweep smoothing and two-grid factors over frequencies")
    p_lfa.add_argument("--strategy", choices=("semi", "full"), required=True)
    p_lfa.add_argument("--pt", type=int, required=True, help="temporal polynomial degree")
    p_lfa.add_argument("--mu-list", type=_float_list, default=list(experiments.LFA_SWEEP_DEFAULT_MUS))
    p_lfa.add_argument("--nx", type=_int_list, default=[32], help="cell count(s), comma separated")
    p_lfa.add_argument("--slabs", type=int, default=8)
    p_lfa.add_argument("--omega", type=float, default=0.5)
    p_lfa.add_argument("--nu1", type=int, default=1)
    p_lfa.add_argument("--nu2", type=int, default=1)
    p_lfa.add_argument("--threads", type=int, default=None)
    p_lfa.add_argument("--out", default="lfa_sweep.csv")
    p_lfa.set_defaults(fn=cmd_lfa)

    p_solve = sub.add_parser("solve", help="run the two-grid solver on a manufactured problem")
    p_solve.add_argument("--dims", type=int, choices=(1, 2), default=1)
    p_solve.add_argument("--pt", type=int, required=True)
    p_solve.add_argument("--px", type=int, required=True)
    p_solve.add_argument("--mu", type=float, required=True)
    p_solve.add_argument("--nx", type=int, required=True)
    p_solve.add_argument("--ny", type=int, default=None, help="must equal --nx (square 2D grid)")
    p_solve.add_argument("--slabs", type=int, default=8)
    p_solve.add_argument("--strategy", choices=("semi", "full"), default="semi")
    p_solve.add_argument("--iters", type=int, default=60)
    p_solve.add_argument("--omega", type=float, default=0.5)
    p_solve.add_argument("--nu1", type=int, default=1)
    p_solve.add_argument("--nu2", type=int, default=1)
    p_solve.add_argument("--out", default="solve_run.csv")
    p_solve.set_defaults(fn=cmd_solve)

    p_verify = sub.add_parser("verify", help="run the dense-oracle and property self-checks")
    p_verify.add_argument("--json", action="store_true")
    p_verify.add_argument("--inject-fault", default=None, help=argparse.SUPPRESS)
    p_verify.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
