"""Dense LP/MILP modeling layer and solver interface.

Models are built row by row with :class:`MILPModel` and solved through
:func:`solve_lp` / :func:`solve_milp`.  The numerical engine is HiGHS
(via ``scipy.optimize``), which comfortably covers the acquisition
problems this package generates (a few hundred variables and rows, dense
big-M blocks).  The modeling surface is solver-agnostic so the backend
can be swapped without touching callers.

Setting the environment variable ``PWAS_DUMP_MILP=1`` writes every solved
model to a CPLEX-LP text file (directory ``PWAS_DUMP_DIR``, default the
working directory) for cross-checking against external solvers.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass

import numpy as np
from scipy import optimize as sciopt
from scipy.optimize import Bounds, LinearConstraint

FEAS_TOL = 1e-7
INT_TOL = 1e-6

_RELATIONS = ("<=", "=", ">=")
_dump_counter = itertools.count()


@dataclass
class VariableRecord:
    name: str
    lb: float
    ub: float
    kind: str  # "continuous" | "integer" | "binary"


@dataclass
class MILPSolution:
    """Solver outcome.

    ``status`` is one of ``optimal``, ``infeasible``, ``unbounded``,
    ``gap_limit``, ``node_limit``.  ``x`` and ``objective`` are ``None``
    unless an incumbent exists; ``gap`` is the absolute MIP gap of the
    incumbent (0 for proven optima and LPs).
    """

    status: str
    x: np.ndarray = None
    objective: float = None
    gap: float = float("nan")

    @property
    def is_optimal(self):
        return self.status == "optimal"


class MILPModel:
    """A dense mixed-integer linear program: variables, rows, objective."""

    def __init__(self, name="model"):
        self.name = name
        self.variables: list[VariableRecord] = []
        self.rows = []  # (index array, coeff array, relation, rhs)
        self._obj = {}
        self.obj_constant = 0.0

    @property
    def num_vars(self):
        return len(self.variables)

    @property
    def num_rows(self):
        return len(self.rows)

    def add_var(self, name=None, lb=0.0, ub=np.inf, kind="continuous"):
        """Add a variable and return its column index."""
        if kind not in ("continuous", "integer", "binary"):
            raise ValueError(f"unknown variable kind {kind!r}")
        if kind == "binary":
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if kind in ("integer", "binary") and not (np.isfinite(lb) and np.isfinite(ub)):
            raise ValueError("integer variables must have finite bounds")
        if lb > ub:
            raise ValueError(f"variable {name!r} has lb > ub")
        idx = len(self.variables)
        self.variables.append(VariableRecord(name or f"v{idx}", float(lb), float(ub), kind))
        return idx

    def add_vars(self, count, prefix, lb=0.0, ub=np.inf, kind="continuous"):
        return [self.add_var(f"{prefix}{i}", lb, ub, kind) for i in range(count)]

    def _coeffs(self, coeffs):
        if isinstance(coeffs, dict):
            idx = np.fromiter(coeffs.keys(), dtype=int, count=len(coeffs))
            val = np.fromiter(coeffs.values(), dtype=float, count=len(coeffs))
        else:
            arr = np.asarray(coeffs, dtype=float)
            if arr.shape != (self.num_vars,):
                raise ValueError("dense row width must equal the variable count")
            idx = np.nonzero(arr)[0]
            val = arr[idx]
        if idx.size and (idx.min() < 0 or idx.max() >= self.num_vars):
            raise ValueError("row references an unknown variable index")
        return idx, val

    def add_row(self, coeffs, relation, rhs):
        """Add ``coeffs . x  <relation>  rhs`` with relation in <=, =, >=."""
        if relation not in _RELATIONS:
            raise ValueError(f"relation must be one of {_RELATIONS}")
        idx, val = self._coeffs(coeffs)
        self.rows.append((idx, val, relation, float(rhs)))

    def set_objective(self, coeffs, constant=0.0, merge=False):
        idx, val = self._coeffs(coeffs)
        if not merge:
            self._obj = {}
            self.obj_constant = 0.0
        for i, v in zip(idx, val):
            self._obj[int(i)] = self._obj.get(int(i), 0.0) + float(v)
        self.obj_constant += float(constant)

    def objective_vector(self):
        c = np.zeros(self.num_vars)
        for i, v in self._obj.items():
            c[i] = v
        return c

    def dense(self):
        """Materialize (c, A, relations, b, lb, ub, integrality)."""
        n = self.num_vars
        A = np.zeros((self.num_rows, n))
        rel = []
        b = np.zeros(self.num_rows)
        for r, (idx, val, relation, rhs) in enumerate(self.rows):
            A[r, idx] = val
            rel.append(relation)
            b[r] = rhs
        lb = np.array([v.lb for v in self.variables])
        ub = np.array([v.ub for v in self.variables])
        integrality = np.array([0 if v.kind == "continuous" else 1 for v in self.variables])
        return self.objective_vector(), A, rel, b, lb, ub, integrality

    def row_violation(self, x):
        """Largest constraint violation of ``x`` over all rows."""
        worst = 0.0
        for idx, val, relation, rhs in self.rows:
            lhs = float(val @ x[idx])
            if relation == "<=":
                worst = max(worst, lhs - rhs)
            elif relation == ">=":
                worst = max(worst, rhs - lhs)
            else:
                worst = max(worst, abs(lhs - rhs))
        return worst

    # -- CPLEX-LP text dump -------------------------------------------------

    def to_lp_string(self):
        def term(c, name, first):
            sign = "-" if c < 0 else ("" if first else "+")
            return f"{sign} {abs(c):.17g} {name} "

        lines = [f"\\ {self.name}", "Minimize", " obj: "]
        parts, first = [], True
        obj = self._obj or {0: 0.0} if self.num_vars else {}
        for i in sorted(obj):
            parts.append(term(obj[i], self.variables[i].name, first))
            first = False
        lines[-1] += "".join(parts).strip()
        lines.append("Subject To")
        for r, (idx, val, relation, rhs) in enumerate(self.rows):
            body, first = [], True
            for i, v in sorted(zip(idx.tolist(), val.tolist())):
                body.append(term(v, self.variables[i].name, first))
                first = False
            op = {"<=": "<=", "=": "=", ">=": ">="}[relation]
            lines.append(f" c{r}: {''.join(body).strip()} {op} {rhs:.17g}")
        lines.append("Bounds")
        for v in self.variables:
            if v.lb == -np.inf and v.ub == np.inf:
                lines.append(f" {v.name} free")
            else:
                lo = "-inf" if v.lb == -np.inf else f"{v.lb:.17g}"
                hi = "+inf" if v.ub == np.inf else f"{v.ub:.17g}"
                lines.append(f" {lo} <= {v.name} <= {hi}")
        generals = [v.name for v in self.variables if v.kind == "integer"]
        binaries = [v.name for v in self.variables if v.kind == "binary"]
        if generals:
            lines.append("General")
            lines.append(" " + " ".join(generals))
        if binaries:
            lines.append("Binary")
            lines.append(" " + " ".join(binaries))
        lines.append("End")
        return "\n".join(lines) + "\n"

    def _maybe_dump(self):
        if os.environ.get("PWAS_DUMP_MILP") != "1":
            return
        out_dir = os.environ.get("PWAS_DUMP_DIR", ".")
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, f"{self.name}-{next(_dump_counter):05d}.lp")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_lp_string())


def _split_rows(A, rel, b):
    rel = np.asarray(rel)
    ub_mask = rel == "<="
    lb_mask = rel == ">="
    eq_mask = rel == "="
    A_ub = np.vstack([A[ub_mask], -A[lb_mask]]) if (ub_mask.any() or lb_mask.any()) else None
    b_ub = np.concatenate([b[ub_mask], -b[lb_mask]]) if A_ub is not None else None
    A_eq = A[eq_mask] if eq_mask.any() else None
    b_eq = b[eq_mask] if eq_mask.any() else None
    return A_ub, b_ub, A_eq, b_eq


def solve_lp(model: MILPModel) -> MILPSolution:
    """Solve the LP relaxation of ``model`` (integrality ignored)."""
    model._maybe_dump()
    c, A, rel, b, lb, ub, _ = model.dense()
    A_ub, b_ub, A_eq, b_eq = _split_rows(A, rel, b)
    res = sciopt.linprog(
        c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
        bounds=np.column_stack([lb, ub]), method="highs",
        options={"primal_feasibility_tolerance": 1e-9, "dual_feasibility_tolerance": 1e-9},
    )
    if res.status == 2:
        return MILPSolution(status="infeasible")
    if res.status == 3:
        return MILPSolution(status="unbounded")
    if res.status != 0:
        raise RuntimeError(f"LP solve failed: {res.message}")
    return MILPSolution(status="optimal", x=np.asarray(res.x),
                        objective=float(res.fun) + model.obj_constant, gap=0.0)


def solve_milp(model: MILPModel, gap=1e-6, nodes=None, time=None) -> MILPSolution:
    """Solve ``model`` by branch-and-bound (HiGHS backend).

    ``gap`` is the target absolute gap for declaring optimality; ``nodes``
    and ``time`` cap the search, returning the best incumbent with status
    ``node_limit`` when hit.
    """
    model._maybe_dump()
    c, A, rel, b, lb, ub, integrality = model.dense()
    if not integrality.any():
        return solve_lp(model)

    constraints = ()
    if model.num_rows:
        row_lb = np.where(np.asarray(rel) == "<=", -np.inf, b)
        row_ub = np.where(np.asarray(rel) == ">=", np.inf, b)
        constraints = LinearConstraint(A, row_lb, row_ub)
    options = {"mip_rel_gap": 0.0}
    if nodes is not None:
        options["node_limit"] = int(nodes)
    if time is not None:
        options["time_limit"] = float(time)
    res = sciopt.milp(c, constraints=constraints, integrality=integrality,
                      bounds=Bounds(lb, ub), options=options)

    if res.status == 2:
        return MILPSolution(status="infeasible")
    if res.status == 3:
        return MILPSolution(status="unbounded")
    if res.x is None:
        if res.status == 1:
            return MILPSolution(status="node_limit")
        return MILPSolution(status="infeasible" if "infeasible" in str(res.message).lower()
                            else "node_limit")

    x = np.asarray(res.x)
    # snap integer coordinates; HiGHS guarantees them within its own tolerance
    mask = integrality.astype(bool)
    if np.any(np.abs(x[mask] - np.round(x[mask])) > INT_TOL * 10):
        raise RuntimeError("MILP solution has non-integral integer variables")
    x[mask] = np.round(x[mask])
    objective = float(c @ x) + model.obj_constant

    dual = getattr(res, "mip_dual_bound", None)
    abs_gap = abs(objective - (dual + model.obj_constant)) if dual is not None and np.isfinite(dual) else 0.0
    if res.status == 0 or abs_gap <= gap:
        status = "optimal" if abs_gap <= gap else "gap_limit"
    else:
        status = "node_limit"
    return MILPSolution(status=status, x=x, objective=objective, gap=abs_gap)
