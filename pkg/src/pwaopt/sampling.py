"""Initial sampling: Latin hypercube designs and feasible scatter fills.

Box-only problems get a plain Latin hypercube design (stratified numeric
coordinates, uniform class draws for one-hot blocks).  Constrained
problems filter an oversampled design by the constraint residuals and
top up any shortfall by solving MILPs sequentially, each maximizing the
exploration objective (max-box radius over numeric coordinates plus
average Hamming distance over one-hot bits, equally weighted) subject to
the admissible set, with the points chosen so far as the sample archive.
"""

from __future__ import annotations

import numpy as np

from .acquisition import BigMBundle, build_base_milp, encode_hamming, encode_maxbox
from .milp import solve_milp
from .problem import INT_SCALED, EncodedSpace, InfeasibleProblemError

#: LHS candidates generated per requested feasible point
OVERSAMPLE = 10


def lhs(space: EncodedSpace, N: int, seed) -> np.ndarray:
    """Latin hypercube design of N encoded points.

    Each numeric coordinate places one value in each of N equal-width
    strata of its box; every one-hot block picks a class uniformly.
    Scaled-integer coordinates are stratified like continuous ones (no
    grid snapping here; see :func:`feasible_initial`).
    """
    rng = np.random.default_rng(seed)
    V = np.zeros((N, space.n))
    for i in space.numeric_coords:
        width = (space.ub[i] - space.lb[i]) / N
        strata = rng.permutation(N)
        V[:, i] = space.lb[i] + (strata + rng.uniform(size=N)) * width
    for start, w in space.onehot_blocks:
        cls = rng.integers(w, size=N)
        V[np.arange(N), start + cls] = 1.0
    return V


def _snap_integer_grid(space: EncodedSpace, V):
    """Snap scaled-integer coordinates to their integer lattice."""
    if space.mode != INT_SCALED or not space.problem.n_int:
        return V
    p = space.problem
    s = slice(p.n_c, p.n_c + p.n_int)
    g = np.where(space.int_gain > 0, space.int_gain, 1.0)
    y = np.clip(np.round(space.int_gain * V[:, s] + space.int_offset), p.ly, p.uy)
    V = V.copy()
    V[:, s] = np.where(space.int_gain > 0, (y - space.int_offset) / g, 0.0)
    return V


def _exploration_bundle(space: EncodedSpace) -> BigMBundle:
    numeric = space.numeric_coords
    M_E = 2.0 * (float(np.max(space.ub[numeric])) - float(np.min(space.lb[numeric]))) if numeric else 2.0
    return BigMBundle(M_phi=1.0, M_s_plus=np.zeros(1), M_s_minus=np.zeros(1), M_E=max(M_E, 1e-6))


def _scatter_fill(space: EncodedSpace, chosen, count):
    """Sequential MILP scatter: maximize max-box + Hamming exploration
    against the points chosen so far."""
    bundle = _exploration_bundle(space)
    points = list(chosen)
    for _ in range(count):
        milp, enc = build_base_milp(space, "initial-scatter")
        obj = {}
        if points:
            X = np.asarray(points)
            numeric = space.numeric_coords
            if numeric:
                beta = encode_maxbox(X[:, numeric], bundle, milp, [enc[i] for i in numeric])
                obj[beta] = -1.0
            bits = space.binary_coords
            if bits:
                coeffs, const = encode_hamming(X[:, bits], [enc[i] for i in bits])
                for var, c in coeffs.items():
                    obj[var] = obj.get(var, 0.0) - c
        if obj:
            milp.set_objective(obj)
        sol = solve_milp(milp, time=60.0)
        if sol.status == "infeasible":
            raise InfeasibleProblemError("problem infeasible")
        if sol.x is None:
            raise RuntimeError(f"initial scatter MILP returned {sol.status}")
        points.append(space.snap(sol.x[[int(i) for i in enc]]))
    return points[len(chosen):]


def feasible_initial(space: EncodedSpace, N_init: int, seed) -> np.ndarray:
    """Exactly ``N_init`` feasible, scattered encoded points.

    LHS candidates (oversampled 10x, integer coordinates snapped to their
    lattice) are filtered by the constraint residuals; any shortfall is
    filled by the sequential MILP scatter.  Raises
    :class:`InfeasibleProblemError` when the admissible set is empty.
    """
    if N_init < 1:
        raise ValueError("N_init must be >= 1")
    constrained = space.h_eq.size or space.h_ineq.size
    if not constrained:
        return _snap_integer_grid(space, lhs(space, N_init, seed))

    candidates = _snap_integer_grid(space, lhs(space, OVERSAMPLE * N_init, seed))
    chosen = []
    seen = set()
    for v in candidates:
        if len(chosen) == N_init:
            break
        if not space.is_feasible(v, tol=1e-8):
            continue
        key = v.tobytes()
        if key in seen:
            continue
        seen.add(key)
        chosen.append(v)
    if len(chosen) < N_init:
        chosen.extend(_scatter_fill(space, chosen, N_init - len(chosen)))
    return np.asarray(chosen)
