import itertools

import numpy as np
import pytest

from pwaopt.problem import (INT_AS_CATEGORICAL, INT_SCALED, InfeasibleProblemError,
                            Point, Problem, ValidationError, build_encoded_space,
                            combination_count, load_problem, tighten_bounds)


def simple_mixed_problem(**overrides):
    kwargs = dict(n_c=2, n_int=1, n_d=2, n_i=[3, 2],
                  lx=[-2.0, 0.0], ux=[2.0, 10.0], ly=[1], uy=[10])
    kwargs.update(overrides)
    return Problem(**kwargs)


def random_feasible_point(problem, rng):
    x = rng.uniform(problem.lx, problem.ux)
    y = rng.integers(problem.ly, problem.uy + 1) if problem.n_int else np.zeros(0, dtype=int)
    z = np.array([rng.integers(k) for k in problem.n_i], dtype=int)
    return Point(x=x, y=y, z=z)


def test_continuous_scaling_examples():
    p = Problem(n_c=1, lx=[0.0], ux=[10.0])
    space = build_encoded_space(p, 100)
    assert space.encode(Point(x=[5.0], y=[], z=[]))[0] == pytest.approx(0.0)
    assert space.encode(Point(x=[10.0], y=[], z=[]))[0] == pytest.approx(1.0)


def test_integer_mode_selection():
    p = Problem(n_int=1, ly=[1], uy=[10])
    space = build_encoded_space(p, 100)
    assert space.mode == INT_AS_CATEGORICAL
    assert space.n == 10  # one bit per integer value 1..10

    # Horst6-hs044 integer ranges: 4 * 11 * 4 * 11 = 1936 >= 100
    p = Problem(n_int=4, ly=[0, 0, 0, 0], uy=[3, 10, 3, 10])
    assert combination_count(p, 100) == 100  # saturated
    assert build_encoded_space(p, 100).mode == INT_SCALED


def test_no_integers_is_scaled_mode():
    p = Problem(n_c=1, lx=[0.0], ux=[1.0])
    assert build_encoded_space(p, 100).mode == INT_SCALED


def test_empty_integer_range_rejected():
    p = simple_mixed_problem()
    p.ly = np.array([2])
    p.uy = np.array([2])
    build_encoded_space(p, 100)  # single-valued range is fine
    with pytest.raises(ValidationError):
        Problem(n_int=1, ly=[3], uy=[2])


def test_int_scaled_endpoint():
    p = Problem(n_int=1, n_c=1, lx=[0.0], ux=[1.0], ly=[1], uy=[10])
    space = build_encoded_space(p, 5)  # 10 combinations >= 5 -> scaled
    assert space.mode == INT_SCALED
    v = space.encode(Point(x=[0.5], y=[1], z=[]))
    assert v[1] == pytest.approx(-1.0)


def test_onehot_encode_example():
    p = Problem(n_d=1, n_i=[3])
    space = build_encoded_space(p, 100)
    v = space.encode(Point(x=[], y=[], z=[1]))
    assert v.tolist() == [0.0, 1.0, 0.0]


def test_func2c_optimum_encoding():
    p = Problem(n_c=2, n_d=2, n_i=[3, 3], lx=[-1.0, -1.0], ux=[1.0, 1.0])
    space = build_encoded_space(p, 100)
    v = space.encode(Point(x=[0.0898, -0.7126], y=[], z=[1, 1]))
    assert np.allclose(v[:2], [0.0898, -0.7126])
    assert v[2:].tolist() == [0, 1, 0, 0, 1, 0]


@pytest.mark.parametrize("n_max", [5, 100])
def test_roundtrip_property(n_max):
    rng = np.random.default_rng(0)
    p = simple_mixed_problem()
    space = build_encoded_space(p, n_max)
    for _ in range(1000):
        pt = random_feasible_point(p, rng)
        back = space.decode(space.encode(pt))
        assert np.all(back.y == pt.y) and np.all(back.z == pt.z)
        assert np.allclose(back.x, pt.x, atol=1e-12)


def test_constraint_equivalence_residuals():
    rng = np.random.default_rng(1)
    p = simple_mixed_problem(
        Aineq=[[1.0, 0.5], [0.0, -1.0]], Bineq=[[2.0], [1.0]],
        Cineq=[[0.5, 0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 0.0, 0.0]], bineq=[30.0, 5.0],
        Aeq=[[1.0, 1.0]], Beq=[[0.0]], Ceq=[[0.0] * 5], beq=[3.0])
    for n_max in (5, 100):
        space = build_encoded_space(p, n_max)
        for _ in range(200):
            pt = random_feasible_point(p, rng)
            eq_o, ineq_o = p.residuals(pt)
            eq_e, ineq_e = space.residuals(space.encode(pt))
            assert np.allclose(eq_o, eq_e, atol=1e-9)
            assert np.allclose(ineq_o, ineq_e, atol=1e-9)


def test_tighten_noop_without_inequalities():
    p = simple_mixed_problem()
    space = build_encoded_space(p, 100)
    tight = tighten_bounds(space)
    assert np.array_equal(tight.lb, space.lb) and np.array_equal(tight.ub, space.ub)


def test_tighten_single_constraint():
    p = Problem(n_c=1, lx=[-2.0], ux=[2.0], Aineq=[[1.0]], bineq=[0.0])
    tight = tighten_bounds(build_encoded_space(p, 100))
    assert tight.ub[0] == pytest.approx(0.0, abs=1e-9)
    assert tight.lb[0] == pytest.approx(-1.0, abs=1e-9)


def _vertices_2d(A, b, lo, hi):
    """All vertices of {A x <= b} intersected with the box, by pairwise
    line intersection (independent of any LP code)."""
    rows = [(A[i], b[i]) for i in range(len(b))]
    rows += [(np.array([1.0, 0.0]), hi[0]), (np.array([-1.0, 0.0]), -lo[0]),
             (np.array([0.0, 1.0]), hi[1]), (np.array([0.0, -1.0]), -lo[1])]
    pts = []
    for (a1, c1), (a2, c2) in itertools.combinations(rows, 2):
        M = np.array([a1, a2])
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, [c1, c2])
        if all(r @ x <= c + 1e-9 for r, c in rows):
            pts.append(x)
    return np.array(pts)


def test_tighten_roscam_against_vertex_enumeration():
    A = np.array([[1.6295, 1.0], [0.5, 3.875], [-4.3023, -4.0], [-2.0, 1.0], [0.5, -1.0]])
    b = np.array([3.0786, 3.324, -1.4909, 0.5, 0.5])
    p = Problem(n_c=2, lx=[-2.0, -2.0], ux=[2.0, 2.0], Aineq=A, bineq=b)
    tight = tighten_bounds(build_encoded_space(p, 100))
    verts = _vertices_2d(A, b, p.lx, p.ux)
    assert len(verts) >= 3
    # map encoded bounds back to original coordinates (gain 2, offset 0)
    lo = tight.lb[:2] * 2.0
    hi = tight.ub[:2] * 2.0
    assert np.allclose(lo, verts.min(axis=0), atol=1e-6)
    assert np.allclose(hi, verts.max(axis=0), atol=1e-6)


def test_tightening_soundness_rejection_sampling():
    rng = np.random.default_rng(3)
    p = simple_mixed_problem(Aineq=[[1.0, 1.0]], Bineq=[[1.0]],
                             Cineq=[[0.0] * 5], bineq=[8.0])
    space = tighten_bounds(build_encoded_space(p, 100))
    found = 0
    for _ in range(3000):
        pt = random_feasible_point(p, rng)
        if not p.is_feasible(pt):
            continue
        found += 1
        v = space.encode(pt)
        assert np.all(v >= space.lb - 1e-9) and np.all(v <= space.ub + 1e-9)
    assert found > 50


def test_tighten_bounds_never_widen():
    p = Problem(n_c=1, lx=[-2.0], ux=[2.0], Aineq=[[1.0]], bineq=[100.0])
    tight = tighten_bounds(build_encoded_space(p, 100))
    assert tight.lb[0] >= -1.0 and tight.ub[0] <= 1.0


def test_infeasible_problem_detected_in_tightening():
    p = Problem(n_c=1, lx=[0.0], ux=[5.0], Aineq=[[1.0], [-1.0]], bineq=[-1.0, -2.0])
    with pytest.raises(InfeasibleProblemError):
        tighten_bounds(build_encoded_space(p, 100))


def test_decode_rejects_bad_onehot():
    p = Problem(n_d=1, n_i=[3])
    space = build_encoded_space(p, 100)
    with pytest.raises(ValidationError):
        space.decode(np.array([0.5, 0.5, 0.0]))
    with pytest.raises(ValidationError):
        space.decode(np.array([1.0, 1.0, 0.0]))
    with pytest.raises(ValidationError):
        space.decode(np.array([1.0 - 5e-9, 0.0, 0.0]))  # beyond snap tolerance


def test_decode_snaps_near_binary():
    p = Problem(n_d=1, n_i=[3])
    space = build_encoded_space(p, 100)
    pt = space.decode(np.array([1.0 - 1e-10, 1e-10, 0.0]))
    assert pt.z.tolist() == [0]


def test_problem_validation_errors():
    with pytest.raises(ValidationError):
        Problem(n_c=1, lx=[1.0], ux=[0.0])
    with pytest.raises(ValidationError):
        Problem(n_d=1, n_i=[1])
    with pytest.raises(ValidationError):
        Problem(n_c=1, lx=[0.0], ux=[1.0], Aineq=[[1.0, 2.0]], bineq=[1.0])
    with pytest.raises(ValidationError):
        simple_mixed_problem().validate_point(Point(x=[0.0, 0.0], y=[1], z=[5, 0]))


def test_problem_file_roundtrip(tmp_path):
    doc = {
        "n_c": 1, "n_int": 0, "n_d": 1, "n_i": [2],
        "lx": [-1.0], "ux": [1.0],
        "objective": "x[0]**2 + (1 if z[0] == 0 else 0)",
    }
    path = tmp_path / "problem.json"
    path.write_text(__import__("json").dumps(doc))
    problem, objective = load_problem(path)
    assert problem.sense == "minimize"
    assert objective(Point(x=[0.5], y=[], z=[1])) == pytest.approx(0.25)
    assert objective(Point(x=[0.0], y=[], z=[0])) == pytest.approx(1.0)
