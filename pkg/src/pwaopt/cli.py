"""Command-line interface: batch runs, benchmark suites, and the HTTP service.

Subcommands::

    pwaopt run   --problem FILE | --benchmark NAME  [--algo pwas|pwasp] ...
    pwaopt suite --benchmarks NAME[,NAME...] [--reps N] ...
    pwaopt serve [--port P] [--state-dir DIR]

``run`` writes history.jsonl, convergence.csv, and report.json into the
output directory.  Exit codes: 2 for unreadable/invalid inputs, 3 for an
infeasible problem.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .acquisition import AcquisitionConfig
from .benchmarks import benchmark_names, get_benchmark, run_benchmark, run_suite
from .driver import preference_oracle, run_pwas, run_pwasp, write_history_jsonl
from .problem import InfeasibleProblemError, ValidationError, load_problem
from .surrogate import FitConfig

EXIT_BAD_INPUT = 2
EXIT_INFEASIBLE = 3


def _add_run_options(p):
    p.add_argument("--algo", choices=("pwas", "pwasp"), default="pwas")
    p.add_argument("--nmax", type=int, default=100)
    p.add_argument("--ninit", type=int, default=None)
    p.add_argument("--k", type=int, default=20, help="initial surrogate partitions")
    p.add_argument("--delta", type=float, default=None,
                   help="exploration weight (default 0.05 for pwas, 1.0 for pwasp)")
    p.add_argument("--strategy", choices=("one-step", "multi-step"), default="multi-step")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("pwaopt-out"))


def build_parser():
    parser = argparse.ArgumentParser(prog="pwaopt",
                                     description="Piecewise affine surrogate optimization")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one optimization")
    src = run_p.add_mutually_exclusive_group(required=True)
    src.add_argument("--problem", type=Path, help="problem JSON file")
    src.add_argument("--benchmark", help="built-in benchmark name")
    _add_run_options(run_p)

    suite_p = sub.add_parser("suite", help="run repeated benchmark suites")
    suite_p.add_argument("--benchmarks", required=True,
                         help="comma-separated benchmark names")
    suite_p.add_argument("--reps", type=int, default=5)
    suite_p.add_argument("--jobs", type=int, default=1)
    _add_run_options(suite_p)

    serve_p = sub.add_parser("serve", help="start the interactive preference service")
    serve_p.add_argument("--port", type=int, default=8711)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--state-dir", type=Path, default=Path("pwaopt-sessions"))
    return parser


def _write_report(out_dir: Path, report, meta):
    out_dir.mkdir(parents=True, exist_ok=True)
    write_history_jsonl(report["history"], out_dir / "history.jsonl")
    with open(out_dir / "convergence.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "best_f", "f", "seed", "benchmark", "algorithm"])
        for rec in report["history"]:
            writer.writerow([rec.iter, rec.incumbent_f, rec.f,
                             meta["seed"], meta["source"], meta["algo"]])
    payload = {
        "best_point": report["best_point"].as_list(),
        "best_value": report["best_value"],
        "evaluations": len(report["history"]),
        **meta,
    }
    (out_dir / "report.json").write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return payload


def _cmd_run(args):
    fit_cfg = FitConfig(K_init=args.k)
    delta = args.delta if args.delta is not None else (0.05 if args.algo == "pwas" else 1.0)
    acq_cfg = AcquisitionConfig(strategy=args.strategy, delta=delta)

    if args.benchmark:
        try:
            get_benchmark(args.benchmark)
        except KeyError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_BAD_INPUT
        report = run_benchmark(args.benchmark, algorithm=args.algo, seed=args.seed,
                               n_max=args.nmax, n_init=args.ninit,
                               k_partitions=args.k, delta=delta, strategy=args.strategy)
        source = get_benchmark(args.benchmark).name
    else:
        if not args.problem.is_file():
            print(f"error: problem file not found: {args.problem}", file=sys.stderr)
            return EXIT_BAD_INPUT
        try:
            problem, objective = load_problem(args.problem)
        except (ValidationError, ValueError, KeyError, json.JSONDecodeError) as exc:
            print(f"error: invalid problem file: {exc}", file=sys.stderr)
            return EXIT_BAD_INPUT
        n_init = args.ninit or min(20, args.nmax)
        if objective is None:
            print("error: problem file declares no objective expression; "
                  "batch runs need one", file=sys.stderr)
            return EXIT_BAD_INPUT
        if args.algo == "pwas":
            report = run_pwas(problem, objective, n_init=n_init, n_max=args.nmax,
                              fit_config=fit_cfg, acq_config=acq_cfg, seed=args.seed)
        else:
            oracle = preference_oracle(objective, sense=problem.sense)
            report = run_pwasp(problem, oracle, n_init=n_init, n_max=args.nmax,
                               fit_config=fit_cfg, acq_config=acq_cfg, seed=args.seed)
            report["best_value"] = objective(report["best_point"])
        source = str(args.problem)

    payload = _write_report(args.out, report,
                            {"seed": args.seed, "algo": args.algo, "source": source})
    print(json.dumps({"best_value": payload["best_value"],
                      "best_point": payload["best_point"],
                      "out": str(args.out)}, indent=2))
    return 0


def _cmd_suite(args):
    names = [n.strip() for n in args.benchmarks.split(",") if n.strip()]
    for n in names:
        try:
            get_benchmark(n)
        except KeyError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_BAD_INPUT
    summary = run_suite(names, algorithm=args.algo, repetitions=args.reps,
                        base_seed=args.seed, n_max=args.nmax, out_dir=args.out,
                        n_jobs=args.jobs, n_init=args.ninit, k_partitions=args.k,
                        delta=args.delta, strategy=args.strategy)
    for row in summary:
        print(json.dumps(row))
    print(f"wrote {args.out}/summary.csv and {args.out}/convergence.csv")
    return 0


def _cmd_serve(args):
    from .service import serve_forever
    serve_forever(host=args.host, port=args.port, state_dir=args.state_dir)
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "suite":
            return _cmd_suite(args)
        return _cmd_serve(args)
    except InfeasibleProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
