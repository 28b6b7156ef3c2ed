"""Synthetic mixed-variable benchmark problems with known optima.

Each benchmark bundles the problem declaration (bounds, classes, linear
constraints), the exact objective, and the best known value/argbest for
sanity checks.  A small harness runs repeated seeded optimizations and
emits convergence and summary tables as CSV.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .acquisition import AcquisitionConfig
from .driver import preference_oracle, run_pwas, run_pwasp
from .problem import Point, Problem, ValidationError
from .surrogate import FitConfig


@dataclass
class BenchmarkDef:
    name: str
    problem: Problem
    objective: callable          # Point -> float in the problem's declared sense
    optimum_value: float
    optimizer: Point


def _rosenbrock2(x):
    return -(100.0 * (x[1] - x[0] ** 2) ** 2 + (x[0] - 1.0) ** 2) / 300.0


def _camel6(x):
    a1 = (4.0 - 2.1 * x[0] ** 2 + x[0] ** 4 / 3.0) * x[0] ** 2
    a2 = x[0] * x[1]
    a3 = (-4.0 + 4.0 * x[1] ** 2) * x[1] ** 2
    return -(a1 + a2 + a3) / 10.0


def _beale(x):
    return -((1.5 - x[0] + x[0] * x[1]) ** 2
             + (2.25 - x[0] + x[0] * x[1] ** 2) ** 2
             + (2.625 - x[0] + x[0] * x[1] ** 3) ** 2) / 50.0


_PIECES = (_rosenbrock2, _camel6, _beale)


def func_2c(point: Point):
    x = point.x
    return _PIECES[point.z[0]](x) + _PIECES[point.z[1]](x)


def func_3c(point: Point):
    x = point.x
    f2 = func_2c(point)
    third = point.z[2]
    if third == 0:
        return f2 + 5.0 * _camel6(x)
    if third == 1:
        return f2 + 2.0 * _rosenbrock2(x)
    return f2 + float(point.z[1]) * _beale(x)


def ackley_5c(point: Point):
    a, b, c = 20.0, 0.2, 2.0 * math.pi
    x = float(point.x[0])
    zi = -1.0 + 0.125 * point.z.astype(float)
    n = 6.0
    s1 = x ** 2 + float(np.sum(zi ** 2))
    s2 = math.cos(c * x) + float(np.sum(np.cos(c * zi)))
    return a * math.exp(-b * math.sqrt(s1 / n)) + math.exp(s2 / n) - a - math.e


_HORST6_Q = np.array([[0.992934, -0.640117, 0.337286],
                      [-0.640117, -0.814622, 0.960807],
                      [0.337286, 0.960807, 0.500874]])
_HORST6_P = np.array([-0.992372, -0.046466, 0.891766])


def horst6_hs044(point: Point):
    x, y = point.x, point.y.astype(float)
    fh = float(x @ _HORST6_Q @ x + _HORST6_P @ x)
    fy = y[0] - y[1] - y[2] - y[0] * y[2] + y[0] * y[3] + y[1] * y[2] - y[1] * y[3]
    weights = ((1.0, 1.0), (0.5, 1.0), (1.0, 2.0))[point.z[0]]
    f1 = weights[0] * fh + weights[1] * fy
    return abs(f1) if point.z[1] == 0 else f1


def _ros_xy(x, y):
    return 100.0 * (x[1] - x[0] ** 2) ** 2 + (x[0] - 1.0) ** 2 + (y - 3.0) ** 2


def _cam_xy(x, y):
    a1 = (4.0 - 2.1 * x[0] ** 2 + x[0] ** 4 / 3.0) * x[0] ** 2
    a2 = x[0] * x[1]
    a3 = (-4.0 + 4.0 * x[1] ** 2) * x[1] ** 2
    return a1 + a2 + a3 + (y - 5.0) ** 2


def ros_cam(point: Point):
    x, y = point.x, float(point.y[0])
    f1 = _ros_xy(x, y) if point.z[0] == 0 else _cam_xy(x, y)
    f2 = _ros_xy(x, y) if point.z[1] == 0 else _cam_xy(x, y)
    return f1 + f2


def branin(point: Point):
    x1, x2 = point.x
    a, b, c = 1.0, 5.1 / (4.0 * math.pi ** 2), 5.0 / math.pi
    r, s, t = 6.0, 10.0, 1.0 / (8.0 * math.pi)
    return a * (x2 - b * x1 ** 2 + c * x1 - r) ** 2 + s * (1.0 - t) * math.cos(x1) + s


def mixed_synthetic(point: Point):
    x1 = float(point.x[0])
    if point.z[0] == 0:
        return x1 ** 2 + 2.0 * x1 + 1.0
    if point.z[0] == 1:
        return x1 + 100.0
    return (1.0 - x1) ** 3


_PWA_PLANES = np.array([
    [0.8031, 0.0219, -0.3227],
    [0.2458, -0.5823, -0.1997],
    [0.0942, -0.5617, -0.1622],
    [0.9462, -0.7299, -0.7141],
    [-0.4799, 0.1084, -0.1210],
    [0.5770, 0.1574, -0.1788],
])


def pwa_example(point: Point):
    v = np.array([point.x[0], point.x[1], 1.0])
    return float(np.max(_PWA_PLANES @ v))


_HORST6_AINEQ = np.array([
    [0.488509, 0.063565, 0.945686],
    [-0.578592, -0.324014, -0.501754],
    [-0.719203, 0.099562, 0.445225],
    [-0.346896, 0.637939, -0.257623],
    [-0.202821, 0.647361, 0.920135],
    [-0.983091, -0.886420, -0.802444],
    [-0.305441, -0.180123, -0.515399],
])
_HORST6_BINEQ = np.array([
    [1.0, 2.0, 0.0, 0.0],
    [4.0, 1.0, 0.0, 0.0],
    [3.0, 4.0, 0.0, 0.0],
    [0.0, 0.0, 2.0, 1.0],
    [0.0, 0.0, 1.0, 2.0],
    [0.0, 0.0, 1.0, 1.0],
])
_HORST6_B = [2.86506, -1.49161, 0.51959, 1.58409, 2.19804, -1.30185, -0.73829,
             8.0, 12.0, 12.0, 8.0, 8.0, 5.0]

_ROSCAM_AINEQ = np.array([
    [1.6295, 1.0],
    [0.5, 3.875],
    [-4.3023, -4.0],
    [-2.0, 1.0],
    [0.5, -1.0],
])
_ROSCAM_B = [3.0786, 3.324, -1.4909, 0.5, 0.5]


def _registry():
    defs = {}

    defs["func-2c"] = BenchmarkDef(
        "func-2c",
        Problem(n_c=2, n_d=2, n_i=[3, 3], lx=[-1.0, -1.0], ux=[1.0, 1.0], sense="maximize"),
        func_2c, 0.20632,
        Point(x=[0.0898, -0.7126], y=[], z=[1, 1]))

    defs["func-3c"] = BenchmarkDef(
        "func-3c",
        Problem(n_c=2, n_d=3, n_i=[3, 3, 3], lx=[-1.0, -1.0], ux=[1.0, 1.0], sense="maximize"),
        func_3c, 0.72214,
        Point(x=[0.0898, -0.7126], y=[], z=[1, 1, 0]))

    defs["ackley-5c"] = BenchmarkDef(
        "ackley-5c",
        Problem(n_c=1, n_d=5, n_i=[17] * 5, lx=[-1.0], ux=[1.0], sense="maximize"),
        ackley_5c, 0.0,
        Point(x=[0.0], y=[], z=[8] * 5))

    defs["horst6-hs044-modified"] = BenchmarkDef(
        "horst6-hs044-modified",
        Problem(n_c=3, n_int=4, n_d=2, n_i=[3, 2],
                lx=[0.0, 0.0, 0.0], ux=[6.0, 6.0, 3.0],
                ly=[0, 0, 0, 0], uy=[3, 10, 3, 10],
                Aineq=np.vstack([_HORST6_AINEQ, np.zeros((6, 3))]),
                Bineq=np.vstack([np.zeros((7, 4)), _HORST6_BINEQ]),
                bineq=_HORST6_B, sense="minimize"),
        horst6_hs044, -62.579,
        Point(x=[5.21066, 5.0279, 0.0], y=[0, 3, 0, 4], z=[2, 1]))

    defs["ros-cam-modified"] = BenchmarkDef(
        "ros-cam-modified",
        Problem(n_c=2, n_int=1, n_d=2, n_i=[2, 2],
                lx=[-2.0, -2.0], ux=[2.0, 2.0], ly=[1], uy=[10],
                Aineq=_ROSCAM_AINEQ, bineq=_ROSCAM_B, sense="minimize"),
        ros_cam, -1.81,
        Point(x=[0.0781, 0.6562], y=[5], z=[1, 1]))

    defs["branin"] = BenchmarkDef(
        "branin",
        Problem(n_c=2, lx=[-5.0, 0.0], ux=[10.0, 15.0], sense="minimize"),
        branin, 0.39789,
        Point(x=[math.pi, 2.275], y=[], z=[]))

    defs["mixed-synthetic"] = BenchmarkDef(
        "mixed-synthetic",
        Problem(n_c=1, n_d=1, n_i=[3], lx=[-5.0], ux=[5.0], sense="minimize"),
        mixed_synthetic, -64.0,
        Point(x=[5.0], y=[], z=[2]))

    # argbest computed by LP over the max-of-affine epigraph on [-1, 1]^2
    defs["pwa-example"] = BenchmarkDef(
        "pwa-example",
        Problem(n_c=2, lx=[-1.0, -1.0], ux=[1.0, 1.0], sense="minimize"),
        pwa_example, -0.1490832470206574,
        Point(x=[0.0553406, -0.01407098], y=[], z=[]))

    return defs


_BENCHMARKS = _registry()
_ALIASES = {"horst6": "horst6-hs044-modified", "ros-cam": "ros-cam-modified",
            "func2c": "func-2c", "func3c": "func-3c", "ackley5c": "ackley-5c"}


def benchmark_names():
    return sorted(_BENCHMARKS)


def get_benchmark(name) -> BenchmarkDef:
    key = str(name).lower()
    key = _ALIASES.get(key, key)
    if key not in _BENCHMARKS:
        raise KeyError(f"unknown benchmark {name!r}; known: {', '.join(benchmark_names())}")
    return _BENCHMARKS[key]


def eval_benchmark(name, X) -> float:
    """Evaluate a benchmark at a point (a Point or a flat value list)."""
    bench = get_benchmark(name)
    p = bench.problem
    point = X if isinstance(X, Point) else Point.from_list(X, p.n_c, p.n_int, p.n_d)
    p.validate_point(point)
    if point.z.size and any(not 0 <= point.z[i] < p.n_i[i] for i in range(p.n_d)):
        raise ValidationError("class index out of range")
    return float(bench.objective(point))


def default_n_init(bench: BenchmarkDef, n_max):
    """Constrained problems start from ceil(n_max / 4) samples, box-only
    ones from 20 (capped by the budget)."""
    if bench.problem.bineq.size or bench.problem.beq.size:
        return min(math.ceil(n_max / 4), n_max)
    return min(20, n_max)


def run_benchmark(name, algorithm="pwas", seed=0, n_max=100, n_init=None,
                  k_partitions=20, delta=None, strategy="multi-step",
                  solve_time_limit=30.0):
    """One seeded optimization run; returns the report from the driver."""
    bench = get_benchmark(name)
    if n_init is None:
        n_init = default_n_init(bench, n_max)
    if delta is None:
        delta = 0.05 if algorithm == "pwas" else 1.0
    fit_cfg = FitConfig(K_init=k_partitions)
    acq_cfg = AcquisitionConfig(strategy=strategy, delta=delta,
                                solve_time_limit=solve_time_limit)
    if algorithm == "pwas":
        report = run_pwas(bench.problem, bench.objective, n_init=n_init, n_max=n_max,
                          fit_config=fit_cfg, acq_config=acq_cfg, seed=seed)
    elif algorithm == "pwasp":
        oracle = preference_oracle(bench.objective, sense=bench.problem.sense)
        report = run_pwasp(bench.problem, oracle, n_init=n_init, n_max=n_max,
                           fit_config=fit_cfg, acq_config=acq_cfg, seed=seed)
        # evaluations are recorded for reporting only, never shown to the optimizer
        report["best_value"] = float(bench.objective(report["best_point"]))
        p = bench.problem
        for rec in report["history"]:
            rec.f = float(bench.objective(Point.from_list(rec.X, p.n_c, p.n_int, p.n_d)))
            rec.incumbent_f = float(bench.objective(
                Point.from_list(rec.incumbent, p.n_c, p.n_int, p.n_d)))
    else:
        raise ValueError("algorithm must be pwas or pwasp")
    return report


def _run_one(args):
    name, algorithm, seed, kwargs = args
    report = run_benchmark(name, algorithm=algorithm, seed=seed, **kwargs)
    history = [(rec.iter, rec.incumbent_f, rec.f) for rec in report["history"]]
    return name, algorithm, seed, report["best_value"], history


def run_suite(names, algorithm="pwas", repetitions=5, base_seed=0, n_max=100,
              out_dir=None, n_jobs=1, **kwargs):
    """Run ``repetitions`` seeded runs per benchmark; returns summary rows.

    Writes ``convergence.csv`` (iter, best_f, f, seed, benchmark,
    algorithm) and ``summary.csv`` when ``out_dir`` is given.  Runs are
    independent, so repetitions can execute across processes.
    """
    jobs = [(str(name), algorithm, base_seed + r, dict(kwargs, n_max=n_max))
            for name in names for r in range(repetitions)]
    if n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(job) for job in jobs]

    convergence = []
    per_bench = {}
    for name, algo, seed, best, history in results:
        key = get_benchmark(name).name
        per_bench.setdefault(key, []).append((seed, best, history))
        for it, best_f, f in history:
            convergence.append({"iter": it, "best_f": best_f, "f": f, "seed": seed,
                                "benchmark": key, "algorithm": algo})

    summary = []
    for key, runs in per_bench.items():
        row = {"benchmark": key, "algorithm": algorithm, "repetitions": len(runs),
               "budget": n_max}
        for checkpoint in (100, 200):
            if n_max >= checkpoint:
                vals = [hist[checkpoint - 1][1] for _, _, hist in runs if len(hist) >= checkpoint]
                if vals:
                    row[f"mean_at_{checkpoint}"] = float(np.mean(vals))
                    row[f"std_at_{checkpoint}"] = float(np.std(vals))
        row["mean_best"] = float(np.mean([b for _, b, _ in runs]))
        row["std_best"] = float(np.std([b for _, b, _ in runs]))
        summary.append(row)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "convergence.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=["iter", "best_f", "f", "seed",
                                                    "benchmark", "algorithm"])
            writer.writeheader()
            writer.writerows(convergence)
        if summary:
            fields = sorted({k for row in summary for k in row},
                            key=lambda k: (k not in ("benchmark", "algorithm"), k))
            with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
                writer = csv.DictWriter(fh, fieldnames=fields)
                writer.writeheader()
                writer.writerows(summary)
    return summary
