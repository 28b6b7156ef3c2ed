import itertools
import os

import numpy as np
import pytest

from pwaopt.milp import MILPModel, solve_lp, solve_milp

from oracles import oracle_lp, oracle_milp, random_milp_instance


def test_lp_simple_max():
    m = MILPModel()
    x1 = m.add_var("x1", 0.0, np.inf)
    x2 = m.add_var("x2", 0.0, np.inf)
    m.add_row({x1: 1.0, x2: 1.0}, "<=", 1.0)
    m.set_objective({x1: -1.0, x2: -1.0})  # maximize x1 + x2
    sol = solve_lp(m)
    assert sol.is_optimal
    assert sol.objective == pytest.approx(-1.0)


def test_lp_infeasible():
    m = MILPModel()
    x = m.add_var("x", 0.0, np.inf)
    m.add_row({x: 1.0}, "<=", -1.0)
    m.set_objective({x: 0.0})
    assert solve_lp(m).status == "infeasible"


def test_lp_unbounded():
    m = MILPModel()
    x = m.add_var("x", -np.inf, np.inf)
    m.set_objective({x: 1.0})
    assert solve_lp(m).status == "unbounded"


def test_random_lps_match_textbook_simplex():
    rng = np.random.default_rng(11)
    for _ in range(20):
        n = int(rng.integers(2, 7))
        rows = int(rng.integers(1, 6))
        c = rng.normal(size=n).round(3)
        A = rng.normal(size=(rows, n)).round(3)
        b = (A @ np.full(n, 0.25) + np.abs(rng.normal(size=rows)) + 0.05).round(3)
        bounds = [(-4.0, 4.0)] * n

        m = MILPModel()
        for j in range(n):
            m.add_var(f"x{j}", -4.0, 4.0)
        for i in range(rows):
            m.add_row(A[i], "<=", b[i])
        m.set_objective(c)
        sol = solve_lp(m)
        status, _, obj = oracle_lp(c, A_ub=A, b_ub=b, bounds=bounds)
        assert sol.status == status == "optimal"
        assert sol.objective == pytest.approx(obj, abs=1e-6)


def test_knapsack_matches_enumeration():
    rng = np.random.default_rng(5)
    values = rng.uniform(1, 10, size=10).round(2)
    weights = rng.uniform(1, 5, size=10).round(2)
    cap = 0.4 * weights.sum()

    m = MILPModel()
    z = [m.add_var(f"z{i}", kind="binary") for i in range(10)]
    m.add_row({zi: wi for zi, wi in zip(z, weights)}, "<=", cap)
    m.set_objective({zi: -vi for zi, vi in zip(z, values)})
    sol = solve_milp(m)
    assert sol.is_optimal

    best = min(
        -values @ np.array(bits)
        for bits in itertools.product((0, 1), repeat=10)
        if weights @ np.array(bits) <= cap
    )
    assert sol.objective == pytest.approx(best, abs=1e-9)


def test_pure_lp_through_milp():
    m = MILPModel()
    x = m.add_var("x", 0.0, 2.0)
    m.add_row({x: 1.0}, "<=", 1.5)
    m.set_objective({x: -1.0})
    assert solve_milp(m).objective == pytest.approx(solve_lp(m).objective)


def test_onehot_argmin():
    m = MILPModel()
    z = [m.add_var(f"z{i}", kind="binary") for i in range(5)]
    m.add_row({zi: 1.0 for zi in z}, "=", 1.0)
    coef = [3.0, -1.0, 2.0, 0.5, 4.0]
    m.set_objective({zi: ci for zi, ci in zip(z, coef)})
    sol = solve_milp(m)
    assert sol.objective == pytest.approx(-1.0)
    assert sol.x[z[1]] == pytest.approx(1.0)


def test_integer_bounds_required():
    m = MILPModel()
    with pytest.raises(ValueError):
        m.add_var("y", 0.0, np.inf, kind="integer")


def test_milp_oracle_equivalence_sample():
    rng = np.random.default_rng(77)
    for _ in range(25):
        c, A, b, bounds, integ = random_milp_instance(rng)
        m = MILPModel()
        for j, (lo, hi) in enumerate(bounds):
            m.add_var(f"v{j}", lo, hi, "binary" if integ[j] else "continuous")
        for i in range(len(b)):
            m.add_row(A[i], "<=", b[i])
        m.set_objective(c)
        sol = solve_milp(m)
        status, _, obj = oracle_milp(c, A, b, None, None, bounds, integ)
        assert sol.status == status
        if status == "optimal":
            assert sol.objective == pytest.approx(obj, abs=1e-8)
            assert m.row_violation(sol.x) <= 1e-7


def test_optimal_solutions_pass_residual_check():
    rng = np.random.default_rng(3)
    for _ in range(10):
        c, A, b, bounds, integ = random_milp_instance(rng, max_binaries=6, max_cont=3)
        m = MILPModel()
        for j, (lo, hi) in enumerate(bounds):
            m.add_var(f"v{j}", lo, hi, "binary" if integ[j] else "continuous")
        for i in range(len(b)):
            m.add_row(A[i], "<=", b[i])
        m.set_objective(c)
        sol = solve_milp(m)
        if sol.is_optimal:
            assert m.row_violation(sol.x) <= 1e-7
            ints = sol.x[integ.astype(bool)]
            assert np.all(np.abs(ints - np.round(ints)) <= 1e-6)


def test_node_limit_returns_incumbent_status():
    rng = np.random.default_rng(9)
    c, A, b, bounds, integ = random_milp_instance(rng, max_binaries=12, max_cont=2)
    m = MILPModel()
    for j, (lo, hi) in enumerate(bounds):
        m.add_var(f"v{j}", lo, hi, "binary" if integ[j] else "continuous")
    for i in range(len(b)):
        m.add_row(A[i], "<=", b[i])
    m.set_objective(c)
    sol = solve_milp(m, nodes=1)
    assert sol.status in ("optimal", "node_limit", "gap_limit")


def test_lp_dump_via_env_flag(tmp_path, monkeypatch):
    monkeypatch.setenv("PWAS_DUMP_MILP", "1")
    monkeypatch.setenv("PWAS_DUMP_DIR", str(tmp_path))
    m = MILPModel("dumptest")
    x = m.add_var("x", 0.0, 1.0)
    z = m.add_var("z", kind="binary")
    y = m.add_var("y", -3.0, 3.0, kind="integer")
    m.add_row({x: 1.0, z: -2.0}, "<=", 0.5)
    m.add_row({y: 1.0, x: 1.0}, ">=", -1.0)
    m.set_objective({x: 1.0, z: 1.0, y: 0.5})
    solve_milp(m)
    dumps = list(tmp_path.glob("dumptest-*.lp"))
    assert len(dumps) == 1
    text = dumps[0].read_text()
    assert "Minimize" in text and "Subject To" in text
    assert "Binary" in text and "General" in text and text.rstrip().endswith("End")
