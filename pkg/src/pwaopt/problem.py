"""Mixed-variable problem declaration and pre-processing.

A :class:`Problem` declares continuous, integer, and categorical variables,
their bounds/classes, and linear equality/inequality constraints over the
mixed vector ``X = [x, y, Z]``.  Before optimization the problem is turned
into an :class:`EncodedSpace`:

* continuous variables are affinely rescaled to ``[-1, 1]``;
* categorical variables are one-hot encoded into binary blocks;
* integer variables are either one-hot encoded as well (when the number of
  integer combinations is small relative to the evaluation budget) or
  rescaled to ``[-1, 1]`` with integrality enforced through auxiliary
  variables inside the MILPs;
* constraint matrices are rewritten in the encoded coordinates, and the
  box of each numeric coordinate is optionally tightened by solving a pair
  of LPs per coordinate over the relaxed feasible set.

Encoded vectors are plain 1-D ``numpy`` arrays of length ``space.n``; the
mapping back to the user's variables is :func:`decode`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

INT_AS_CATEGORICAL = "int-as-categorical"
INT_SCALED = "int-scaled"

#: one-hot entries from MILP outputs must be within this distance of {0, 1}
ONEHOT_SNAP_TOL = 1e-9


class ValidationError(ValueError):
    """Raised when problem data or a point fails structural validation."""


class InfeasibleProblemError(RuntimeError):
    """Raised when the declared constraint set admits no feasible point."""


def _vector(v, length, name, dtype=float):
    arr = np.atleast_1d(np.asarray(v, dtype=dtype))
    if arr.shape != (length,):
        raise ValidationError(f"{name} must have shape ({length},), got {arr.shape}")
    return arr


def _matrix(m, rows, cols, name):
    if m is None:
        return np.zeros((rows, cols))
    arr = np.asarray(m, dtype=float)
    if arr.size == 0:
        return np.zeros((rows, cols))
    arr = np.atleast_2d(arr)
    if arr.shape != (rows, cols):
        raise ValidationError(f"{name} must have shape ({rows}, {cols}), got {arr.shape}")
    return arr


@dataclass
class Point:
    """A point in the original mixed-variable space.

    ``x`` holds the continuous values, ``y`` the integer values, and ``z``
    the class indices of the categorical variables (``0 <= z[i] < n_i[i]``).
    """

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        self.x = np.atleast_1d(np.asarray(self.x, dtype=float)) if np.size(self.x) else np.zeros(0)
        self.y = np.atleast_1d(np.asarray(self.y, dtype=int)) if np.size(self.y) else np.zeros(0, dtype=int)
        self.z = np.atleast_1d(np.asarray(self.z, dtype=int)) if np.size(self.z) else np.zeros(0, dtype=int)

    def as_list(self):
        return [float(v) for v in self.x] + [int(v) for v in self.y] + [int(v) for v in self.z]

    @staticmethod
    def from_list(values, n_c, n_int, n_d):
        values = list(values)
        if len(values) != n_c + n_int + n_d:
            raise ValidationError(f"point must have {n_c + n_int + n_d} entries, got {len(values)}")
        return Point(
            x=np.asarray(values[:n_c], dtype=float),
            y=np.asarray(values[n_c:n_c + n_int], dtype=float).round().astype(int),
            z=np.asarray(values[n_c + n_int:], dtype=float).round().astype(int),
        )


@dataclass
class Problem:
    """Declaration of a linearly constrained mixed-variable problem.

    Constraints are ``Aeq x + Beq y + Ceq z = beq`` and
    ``Aineq x + Bineq y + Cineq z <= bineq`` where ``z`` is the one-hot
    encoding of the categorical variables.  Empty blocks may be ``None``.
    """

    n_c: int = 0
    n_int: int = 0
    n_d: int = 0
    n_i: list = field(default_factory=list)
    lx: np.ndarray = None
    ux: np.ndarray = None
    ly: np.ndarray = None
    uy: np.ndarray = None
    Aeq: np.ndarray = None
    Beq: np.ndarray = None
    Ceq: np.ndarray = None
    beq: np.ndarray = None
    Aineq: np.ndarray = None
    Bineq: np.ndarray = None
    Cineq: np.ndarray = None
    bineq: np.ndarray = None
    sense: str = "minimize"
    x_names: list = None
    y_names: list = None
    z_names: list = None
    z_labels: list = None

    def __post_init__(self):
        if self.n_c < 0 or self.n_int < 0 or self.n_d < 0:
            raise ValidationError("variable counts must be nonnegative")
        if self.n_c + self.n_int + self.n_d == 0:
            raise ValidationError("problem declares no variables")
        if self.sense not in ("minimize", "maximize"):
            raise ValidationError(f"sense must be minimize or maximize, got {self.sense!r}")

        self.n_i = [int(k) for k in (self.n_i or [])]
        if len(self.n_i) != self.n_d:
            raise ValidationError(f"n_i must list {self.n_d} class counts")
        if any(k < 2 for k in self.n_i):
            raise ValidationError("every categorical variable needs at least 2 classes")

        self.lx = _vector(self.lx if self.lx is not None else [], self.n_c, "lx")
        self.ux = _vector(self.ux if self.ux is not None else [], self.n_c, "ux")
        if np.any(self.lx > self.ux):
            raise ValidationError("lx must be <= ux componentwise")
        self.ly = _vector(self.ly if self.ly is not None else [], self.n_int, "ly", dtype=int)
        self.uy = _vector(self.uy if self.uy is not None else [], self.n_int, "uy", dtype=int)
        if np.any(self.ly > self.uy):
            raise ValidationError("ly must be <= uy componentwise")

        self.beq = _vector(self.beq if self.beq is not None else [], self._rows(self.beq), "beq")
        m_eq = self.beq.size
        self.Aeq = _matrix(self.Aeq, m_eq, self.n_c, "Aeq")
        self.Beq = _matrix(self.Beq, m_eq, self.n_int, "Beq")
        self.Ceq = _matrix(self.Ceq, m_eq, self.d_cat, "Ceq")

        self.bineq = _vector(self.bineq if self.bineq is not None else [], self._rows(self.bineq), "bineq")
        m_ineq = self.bineq.size
        self.Aineq = _matrix(self.Aineq, m_ineq, self.n_c, "Aineq")
        self.Bineq = _matrix(self.Bineq, m_ineq, self.n_int, "Bineq")
        self.Cineq = _matrix(self.Cineq, m_ineq, self.d_cat, "Cineq")

        if self.x_names is None:
            self.x_names = [f"x{i + 1}" for i in range(self.n_c)]
        if self.y_names is None:
            self.y_names = [f"y{i + 1}" for i in range(self.n_int)]
        if self.z_names is None:
            self.z_names = [f"Z{i + 1}" for i in range(self.n_d)]
        if self.z_labels is None:
            self.z_labels = [[str(c) for c in range(k)] for k in self.n_i]

    @staticmethod
    def _rows(v):
        return 0 if v is None else np.atleast_1d(np.asarray(v, dtype=float)).size

    @property
    def d_cat(self):
        return int(sum(self.n_i))

    @property
    def n_vars(self):
        return self.n_c + self.n_int + self.n_d

    def int_cardinalities(self):
        """Number of integer values each y_i can take."""
        lo = np.ceil(self.ly).astype(int)
        hi = np.floor(self.uy).astype(int)
        if np.any(lo > hi):
            raise ValidationError("empty integer range: ceil(ly) > floor(uy)")
        return hi - lo + 1

    def validate_point(self, point: Point, tol=1e-9):
        if point.x.size != self.n_c or point.y.size != self.n_int or point.z.size != self.n_d:
            raise ValidationError("point block sizes do not match the problem")
        if np.any(point.x < self.lx - tol) or np.any(point.x > self.ux + tol):
            raise ValidationError("continuous value out of bounds")
        if np.any(point.y < self.ly) or np.any(point.y > self.uy):
            raise ValidationError("integer value out of bounds")
        for i, k in enumerate(self.n_i):
            if not 0 <= point.z[i] < k:
                raise ValidationError(f"class index {point.z[i]} out of range for {self.z_names[i]}")

    def onehot(self, z):
        """One-hot encode class indices into the full categorical block."""
        out = np.zeros(self.d_cat)
        off = 0
        for i, k in enumerate(self.n_i):
            out[off + int(z[i])] = 1.0
            off += k
        return out

    def residuals(self, point: Point):
        """(equality, inequality) constraint residuals at ``point``.

        Inequality residuals are ``Aineq x + ... - bineq`` (feasible <= 0).
        """
        zbin = self.onehot(point.z)
        eq = self.Aeq @ point.x + self.Beq @ point.y + self.Ceq @ zbin - self.beq
        ineq = self.Aineq @ point.x + self.Bineq @ point.y + self.Cineq @ zbin - self.bineq
        return eq, ineq

    def is_feasible(self, point: Point, tol=1e-8):
        try:
            self.validate_point(point, tol=tol)
        except ValidationError:
            return False
        eq, ineq = self.residuals(point)
        return bool(np.all(np.abs(eq) <= tol) and np.all(ineq <= tol))


@dataclass
class EncodedSpace:
    """Scaled/encoded coordinate system for a :class:`Problem`.

    The encoded vector is laid out as ``[x-bar | y-block | z-block]`` where
    the y-block is either one-hot bits (mode ``int-as-categorical``) or
    scaled numeric coordinates (mode ``int-scaled``).  ``lb``/``ub`` carry
    the (possibly tightened) box, ``G_*``/``h_*`` the constraints rewritten
    over encoded coordinates.
    """

    problem: Problem
    mode: str
    n: int
    cont_gain: np.ndarray
    cont_offset: np.ndarray
    int_gain: np.ndarray          # int-scaled mode only (empty otherwise)
    int_offset: np.ndarray
    int_values: list              # int-as-categorical: value list per integer variable
    onehot_blocks: list           # (start, width) of every one-hot block in encoded coords
    int_block_count: int          # how many of onehot_blocks belong to integer variables
    lb: np.ndarray
    ub: np.ndarray
    G_eq: np.ndarray
    h_eq: np.ndarray
    G_ineq: np.ndarray
    h_ineq: np.ndarray

    @property
    def continuous_coords(self):
        """Indices of the scaled continuous coordinates."""
        return list(range(self.problem.n_c))

    @property
    def integer_coords(self):
        """Indices of the scaled integer coordinates (int-scaled mode only)."""
        if self.mode != INT_SCALED:
            return []
        return list(range(self.problem.n_c, self.problem.n_c + self.problem.n_int))

    @property
    def numeric_coords(self):
        return self.continuous_coords + self.integer_coords

    @property
    def binary_coords(self):
        out = []
        for start, width in self.onehot_blocks:
            out.extend(range(start, start + width))
        return out

    @property
    def int_onehot_blocks(self):
        return self.onehot_blocks[: self.int_block_count]

    @property
    def cat_onehot_blocks(self):
        return self.onehot_blocks[self.int_block_count:]

    def encode(self, point: Point):
        """Map a feasible-by-bounds :class:`Point` to its encoded vector."""
        self.problem.validate_point(point)
        v = np.zeros(self.n)
        g = self.cont_gain
        v[: self.problem.n_c] = np.where(g > 0, (point.x - self.cont_offset) / np.where(g > 0, g, 1.0), 0.0)
        pos = self.problem.n_c
        if self.mode == INT_AS_CATEGORICAL:
            for j, values in enumerate(self.int_values):
                idx = int(point.y[j]) - int(values[0])
                if not 0 <= idx < len(values):
                    raise ValidationError(f"integer value {point.y[j]} outside its declared range")
                v[pos + idx] = 1.0
                pos += len(values)
        else:
            g = self.int_gain
            v[pos: pos + self.problem.n_int] = np.where(
                g > 0, (point.y - self.int_offset) / np.where(g > 0, g, 1.0), 0.0
            )
            pos += self.problem.n_int
        v[pos:] = self.problem.onehot(point.z)
        return v

    def decode(self, v, snap_tol=ONEHOT_SNAP_TOL):
        """Map an encoded vector back to a :class:`Point`.

        Binary entries must be within ``snap_tol`` of {0, 1} and each
        one-hot block must contain exactly one 1 after snapping.
        """
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n,):
            raise ValidationError(f"encoded vector must have shape ({self.n},)")
        p = self.problem
        x = self.cont_gain * v[: p.n_c] + self.cont_offset

        bits = {}
        for start, width in self.onehot_blocks:
            block = v[start: start + width]
            snapped = np.round(block)
            if np.any(np.abs(block - snapped) > snap_tol) or not np.all(np.isin(snapped, (0.0, 1.0))):
                raise ValidationError("one-hot block entries are not 0/1 within tolerance")
            if int(snapped.sum()) != 1:
                raise ValidationError("one-hot block does not contain exactly one 1")
            bits[start] = int(np.argmax(snapped))

        if self.mode == INT_AS_CATEGORICAL:
            y = np.zeros(p.n_int, dtype=int)
            for j, (start, width) in enumerate(self.int_onehot_blocks):
                y[j] = int(self.int_values[j][bits[start]])
        else:
            raw = self.int_gain * v[p.n_c: p.n_c + p.n_int] + self.int_offset
            y = np.round(raw).astype(int)
            if np.any(np.abs(raw - y) > 1e-6):
                raise ValidationError("scaled integer coordinate is not integral after decoding")
        z = np.array([bits[start] for start, _ in self.cat_onehot_blocks], dtype=int)
        return Point(x=x, y=y, z=z)

    def snap(self, v, binary_tol=1e-5):
        """Clean up a raw MILP solution vector: snap binaries to {0, 1},
        snap scaled-integer coordinates to the integer grid, and clip
        numeric coordinates to the box."""
        v = np.array(v, dtype=float)
        for start, width in self.onehot_blocks:
            block = v[start: start + width]
            snapped = np.round(block)
            if np.any(np.abs(block - snapped) > binary_tol):
                raise ValidationError("MILP output binary entry too far from 0/1 to snap")
            v[start: start + width] = np.clip(snapped, 0.0, 1.0)
        p = self.problem
        if self.mode == INT_SCALED and p.n_int:
            g = np.where(self.int_gain > 0, self.int_gain, 1.0)
            raw = self.int_gain * v[p.n_c: p.n_c + p.n_int] + self.int_offset
            y = np.clip(np.round(raw), p.ly, p.uy)
            v[p.n_c: p.n_c + p.n_int] = np.where(self.int_gain > 0, (y - self.int_offset) / g, 0.0)
        nc = p.n_c
        v[:nc] = np.clip(v[:nc], self.lb[:nc], self.ub[:nc])
        return v

    def residuals(self, v):
        """(equality, inequality) residuals in encoded coordinates."""
        eq = self.G_eq @ v - self.h_eq
        ineq = self.G_ineq @ v - self.h_ineq
        return eq, ineq

    def is_feasible(self, v, tol=1e-8):
        if np.any(v < self.lb - tol) or np.any(v > self.ub + tol):
            return False
        for start, width in self.onehot_blocks:
            block = v[start: start + width]
            if np.any(np.abs(block - np.round(block)) > tol) or abs(block.sum() - 1.0) > tol:
                return False
        eq, ineq = self.residuals(v)
        return bool(np.all(np.abs(eq) <= tol) and np.all(ineq <= tol))


def combination_count(problem: Problem, cap):
    """Product of integer cardinalities, saturating at ``cap``."""
    total = 1
    for k in problem.int_cardinalities():
        total *= int(k)
        if total >= cap:
            return cap
    return total


def build_encoded_space(problem: Problem, n_max: int) -> EncodedSpace:
    """Construct the scaled/encoded coordinate system for ``problem``.

    Integer variables are one-hot encoded when the number of their value
    combinations is (strictly) below ``n_max``, and rescaled to ``[-1, 1]``
    otherwise.
    """
    if n_max < 1:
        raise ValidationError("n_max must be >= 1")
    p = problem
    cards = p.int_cardinalities()
    use_onehot = p.n_int > 0 and combination_count(p, n_max) < n_max

    cont_gain = (p.ux - p.lx) / 2.0
    cont_offset = (p.ux + p.lx) / 2.0

    onehot_blocks = []
    int_values = []
    pos = p.n_c
    if use_onehot:
        mode = INT_AS_CATEGORICAL
        int_gain = np.zeros(0)
        int_offset = np.zeros(0)
        lo = np.ceil(p.ly).astype(int)
        for j in range(p.n_int):
            width = int(cards[j])
            int_values.append(np.arange(lo[j], lo[j] + width))
            onehot_blocks.append((pos, width))
            pos += width
    else:
        mode = INT_SCALED
        int_gain = (p.uy - p.ly) / 2.0
        int_offset = (p.uy + p.ly) / 2.0
        pos += p.n_int
    int_block_count = len(onehot_blocks)
    for k in p.n_i:
        onehot_blocks.append((pos, k))
        pos += k
    n = pos

    def expand(A, B, C, b):
        rows = b.size
        G = np.zeros((rows, n))
        G[:, : p.n_c] = A * cont_gain
        h = b - A @ cont_offset
        col = p.n_c
        if use_onehot:
            for j in range(p.n_int):
                width = len(int_values[j])
                G[:, col: col + width] = np.outer(B[:, j], int_values[j])
                col += width
        else:
            G[:, col: col + p.n_int] = B * int_gain
            h = h - B @ int_offset
            col += p.n_int
        G[:, col:] = C
        return G, h

    G_eq, h_eq = expand(p.Aeq, p.Beq, p.Ceq, p.beq)
    G_ineq, h_ineq = expand(p.Aineq, p.Bineq, p.Cineq, p.bineq)

    lb = np.zeros(n)
    ub = np.ones(n)
    lb[: p.n_c] = np.where(cont_gain > 0, -1.0, 0.0)
    ub[: p.n_c] = np.where(cont_gain > 0, 1.0, 0.0)
    if mode == INT_SCALED and p.n_int:
        s = slice(p.n_c, p.n_c + p.n_int)
        lb[s] = np.where(int_gain > 0, -1.0, 0.0)
        ub[s] = np.where(int_gain > 0, 1.0, 0.0)

    return EncodedSpace(
        problem=p, mode=mode, n=n,
        cont_gain=cont_gain, cont_offset=cont_offset,
        int_gain=int_gain, int_offset=int_offset, int_values=int_values,
        onehot_blocks=onehot_blocks, int_block_count=int_block_count,
        lb=lb, ub=ub, G_eq=G_eq, h_eq=h_eq, G_ineq=G_ineq, h_ineq=h_ineq,
    )


def tighten_bounds(space: EncodedSpace) -> EncodedSpace:
    """Tighten each numeric coordinate's box via a min/max LP pair.

    Only inequality constraints participate.  The LPs relax integrality
    (one-hot bits in ``[0, 1]`` with block sums pinned to 1), so the
    returned bounds never cut off a feasible point and never widen.
    Raises :class:`InfeasibleProblemError` when the relaxation is empty.
    """
    from .milp import MILPModel, solve_lp

    if space.h_ineq.size == 0:
        return space

    lb = space.lb.copy()
    ub = space.ub.copy()

    def base_model():
        m = MILPModel("bound-tightening")
        for i in range(space.n):
            m.add_var(f"v{i}", lb=lb[i], ub=ub[i])
        for row, rhs in zip(space.G_ineq, space.h_ineq):
            m.add_row(row, "<=", rhs)
        for start, width in space.onehot_blocks:
            sel = np.zeros(space.n)
            sel[start: start + width] = 1.0
            m.add_row(sel, "=", 1.0)
        return m

    for i in space.numeric_coords:
        if lb[i] == ub[i]:
            continue
        for direction in (1.0, -1.0):
            m = base_model()
            obj = np.zeros(space.n)
            obj[i] = direction
            m.set_objective(obj)
            sol = solve_lp(m)
            if sol.status == "infeasible":
                raise InfeasibleProblemError("problem infeasible")
            if sol.status != "optimal":
                continue  # unbounded direction cannot occur inside a box
            val = sol.x[i]
            if direction > 0:
                lb[i] = min(max(lb[i], val), ub[i])
            else:
                ub[i] = max(min(ub[i], val), lb[i])

    return replace(space, lb=lb, ub=ub)


# ---------------------------------------------------------------------------
# problem file format (see docs/problem-format.md)

_SAFE_FUNCS = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "log10", "sqrt", "abs",
                 "floor", "ceil", "maximum", "minimum", "pi", "e")
}
_SAFE_FUNCS.update({"max": max, "min": min, "pow": pow})


def problem_from_dict(data: dict) -> Problem:
    known = {
        "n_c", "n_int", "n_d", "n_i", "lx", "ux", "ly", "uy",
        "Aeq", "Beq", "Ceq", "beq", "Aineq", "Bineq", "Cineq", "bineq",
        "sense", "x_names", "y_names", "z_names", "z_labels",
    }
    fields = {k: v for k, v in data.items() if k in known}
    fields.setdefault("sense", "minimize")
    return Problem(**fields)


def objective_from_dict(data: dict):
    """Optional ``objective`` expression evaluated on (x, y, z) lists.

    The expression is trusted input (it runs under ``eval`` with a
    restricted namespace); problem files are user-authored artifacts.
    """
    expr = data.get("objective")
    if expr is None:
        return None
    code = compile(expr, "<problem objective>", "eval")

    def fun(point: Point):
        ns = dict(_SAFE_FUNCS)
        ns.update({"x": list(point.x), "y": [int(v) for v in point.y], "z": [int(v) for v in point.z]})
        return float(eval(code, {"__builtins__": {}}, ns))

    return fun


def load_problem(path):
    """Load a problem JSON file; returns (Problem, objective-or-None)."""
    with open(Path(path), "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return problem_from_dict(data), objective_from_dict(data)
