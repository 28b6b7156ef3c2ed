"""Independent oracles used by the tests.

The simplex here is a deliberately plain two-phase tableau implementation
with Bland's rule, written against the textbook description and kept
separate from the package's solver path so LP/MILP results can be
cross-checked between two unrelated codebases.  The MILP oracle is brute
force: enumerate every assignment of the integer variables and solve the
remaining LP.
"""

import itertools

import numpy as np


def oracle_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None):
    """min c.x subject to A_ub x <= b_ub, A_eq x = b_eq, bounds.

    bounds is a list of (lo, hi) pairs (entries may be +-inf).  Returns
    (status, x, objective) with status in optimal/infeasible/unbounded.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, float))
    b_ub = np.zeros(0) if b_ub is None else np.atleast_1d(np.asarray(b_ub, float))
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, float))
    b_eq = np.zeros(0) if b_eq is None else np.atleast_1d(np.asarray(b_eq, float))
    if bounds is None:
        bounds = [(-np.inf, np.inf)] * n
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)

    # substitute x = lo + s (or x = -s' when only an upper bound exists,
    # or x = s+ - s- when free); upper bounds become extra <= rows
    cols = []          # (kind, index) kind: shifted | negshifted | free
    shift = np.zeros(n)
    for j in range(n):
        if np.isfinite(lo[j]):
            cols.append(("shifted", j))
            shift[j] = lo[j]
        elif np.isfinite(hi[j]):
            cols.append(("negshifted", j))
            shift[j] = hi[j]
        else:
            cols.append(("free", j))

    def expand(A):
        out = []
        for kind, j in cols:
            col = A[:, j]
            if kind == "shifted":
                out.append(col)
            elif kind == "negshifted":
                out.append(-col)
            else:
                out.append(col)
                out.append(-col)
        return np.column_stack(out) if out else np.zeros((A.shape[0], 0))

    extra_rows, extra_rhs = [], []
    for j in range(n):
        if np.isfinite(lo[j]) and np.isfinite(hi[j]):
            row = np.zeros(n)
            row[j] = 1.0
            extra_rows.append(row)
            extra_rhs.append(hi[j])

    A_ub_full = np.vstack([A_ub] + ([np.array(extra_rows)] if extra_rows else []))
    b_ub_full = np.concatenate([b_ub, np.array(extra_rhs)]) if extra_rows else b_ub
    b_ub_s = b_ub_full - A_ub_full @ shift
    b_eq_s = b_eq - A_eq @ shift
    T_ub = expand(A_ub_full)
    T_eq = expand(A_eq)
    c_s = expand(c.reshape(1, -1)).ravel()
    offset = float(c @ shift)

    m_ub, m_eq = T_ub.shape[0], T_eq.shape[0]
    ns = T_ub.shape[1]
    # standard form rows: [T_ub | I] s = b_ub ; [T_eq | 0] s = b_eq
    A_std = np.zeros((m_ub + m_eq, ns + m_ub))
    A_std[:m_ub, :ns] = T_ub
    A_std[:m_ub, ns:] = np.eye(m_ub)
    A_std[m_ub:, :ns] = T_eq
    b_std = np.concatenate([b_ub_s, b_eq_s])
    neg = b_std < 0
    A_std[neg] *= -1
    b_std[neg] *= -1

    status, sol = _two_phase(A_std, b_std, np.concatenate([c_s, np.zeros(m_ub)]))
    if status != "optimal":
        return status, None, None
    s = sol[:ns]
    x = np.zeros(n)
    i = 0
    for kind, j in cols:
        if kind == "shifted":
            x[j] = shift[j] + s[i]
            i += 1
        elif kind == "negshifted":
            x[j] = shift[j] - s[i]
            i += 1
        else:
            x[j] = s[i] - s[i + 1]
            i += 2
    return "optimal", x, float(c @ x)


def _two_phase(A, b, c, tol=1e-9, max_pivots=20000):
    """Tableau simplex with artificial variables and Bland's rule."""
    m, n = A.shape
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    basis = list(range(n, n + m))
    # phase 1 objective: minimize sum of artificials
    T[m, n:n + m] = 1.0
    for i in range(m):
        T[m] -= T[i]
    if not _pivot_loop(T, basis, n + m, tol, max_pivots):
        raise RuntimeError("oracle simplex exceeded pivot budget (phase 1)")
    if T[m, -1] < -tol:
        return "infeasible", None
    # drive remaining artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= n:
            row = T[i, :n]
            j = next((jj for jj in range(n) if abs(row[jj]) > tol), None)
            if j is not None:
                _pivot(T, i, j, basis)
    # phase 2
    T[m, :] = 0.0
    T[m, :n] = c
    for i in range(m):
        if basis[i] < n:
            T[m] -= c[basis[i]] * T[i]
    keep = [j for j in range(n)] + [n + m]
    T2 = T[:, keep]
    # artificial columns removed; recompute column count
    ok = _pivot_loop(T2, basis, n, tol, max_pivots)
    if not ok:
        return "unbounded", None
    x = np.zeros(n)
    for i, bj in enumerate(basis):
        if bj < n:
            x[bj] = T2[i, -1]
    return "optimal", x


def _pivot_loop(T, basis, ncols, tol, max_pivots):
    m = T.shape[0] - 1
    for _ in range(max_pivots):
        col = next((j for j in range(ncols) if T[m, j] < -tol), None)
        if col is None:
            return True
        ratios = [(T[i, -1] / T[i, col], basis[i], i)
                  for i in range(m) if T[i, col] > tol]
        if not ratios:
            return False  # unbounded
        _, _, row = min(ratios, key=lambda t: (t[0], t[1]))
        _pivot(T, row, col, basis)
    raise RuntimeError("oracle simplex exceeded pivot budget")


def _pivot(T, row, col, basis):
    T[row] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row and abs(T[i, col]) > 0:
            T[i] -= T[i, col] * T[row]
    basis[row] = col


def oracle_milp(c, A_ub, b_ub, A_eq, b_eq, bounds, integrality):
    """Brute-force MILP: enumerate integer assignments, LP per assignment."""
    c = np.asarray(c, dtype=float)
    n = c.size
    integrality = np.asarray(integrality, dtype=bool)
    int_idx = np.flatnonzero(integrality)
    cont_idx = np.flatnonzero(~integrality)
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, float))
    b_ub = np.zeros(0) if b_ub is None else np.atleast_1d(np.asarray(b_ub, float))
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, float))
    b_eq = np.zeros(0) if b_eq is None else np.atleast_1d(np.asarray(b_eq, float))

    ranges = []
    for j in int_idx:
        lo, hi = bounds[j]
        ranges.append(range(int(np.ceil(lo)), int(np.floor(hi)) + 1))

    best = (np.inf, None)
    for combo in itertools.product(*ranges):
        combo = np.asarray(combo, dtype=float)
        if cont_idx.size == 0:
            x = np.zeros(n)
            x[int_idx] = combo
            if np.all(A_ub @ x - b_ub <= 1e-9) and np.all(np.abs(A_eq @ x - b_eq) <= 1e-9):
                val = float(c @ x)
                if val < best[0]:
                    best = (val, x)
            continue
        rhs_ub = b_ub - A_ub[:, int_idx] @ combo if b_ub.size else b_ub
        rhs_eq = b_eq - A_eq[:, int_idx] @ combo if b_eq.size else b_eq
        status, xc, val = oracle_lp(
            c[cont_idx],
            A_ub[:, cont_idx] if b_ub.size else None, rhs_ub if b_ub.size else None,
            A_eq[:, cont_idx] if b_eq.size else None, rhs_eq if b_eq.size else None,
            [bounds[j] for j in cont_idx])
        if status != "optimal":
            continue
        total = val + float(c[int_idx] @ combo)
        if total < best[0]:
            x = np.zeros(n)
            x[int_idx] = combo
            x[cont_idx] = xc
            best = (total, x)
    if best[1] is None:
        return "infeasible", None, None
    return "optimal", best[1], best[0]


def random_milp_instance(rng, max_binaries=12, max_cont=6):
    """A random bounded MILP with binaries and continuous variables."""
    nb = int(rng.integers(2, max_binaries + 1))
    nc = int(rng.integers(0, max_cont + 1))
    n = nb + nc
    c = rng.normal(size=n).round(3)
    m = int(rng.integers(1, 5))
    A = rng.normal(size=(m, n)).round(3)
    # keep the all-half point feasible so instances are rarely infeasible
    x0 = np.full(n, 0.5)
    b = (A @ x0 + np.abs(rng.normal(size=m)) + 0.1).round(3)
    bounds = [(0.0, 1.0)] * nb + [(-2.0, 2.0)] * nc
    integrality = np.array([1] * nb + [0] * nc)
    return c, A, b, bounds, integrality
