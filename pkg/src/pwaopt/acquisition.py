"""Acquisition: pick the next query point by solving a MILP.

The acquisition objective trades off the fitted surrogate (scaled by the
observed value range so the exploration weights are dimensionless)
against exploration terms that measure novelty with respect to the
archive:

* numeric coordinates use the *max-box* term: the largest radius ``beta``
  of an l-infinity ball around the candidate that excludes every archived
  sample, encoded with indicator binaries for "candidate escapes box i on
  coordinate l from above/below";

* one-hot coordinates use the *average Hamming distance* to the archived
  bit vectors, which is linear in the candidate bits.

The surrogate itself enters through a standard big-M encoding: one
indicator binary per region pinned to the separation argmax, and one real
variable per region carrying that region's affine value, so the surrogate
value is their sum.

Two strategies are supported: a single MILP over all variables with
weights (delta1, delta2, delta3), or the multi-step variant solving one
variable type at a time (continuous, then integer, then categorical) with
the other blocks held at the incumbent or at the values just optimized,
using a single weight delta.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .milp import MILPModel, solve_milp
from .problem import INT_AS_CATEGORICAL, INT_SCALED, EncodedSpace
from .surrogate import PWAModel

ONE_STEP = "one-step"
MULTI_STEP = "multi-step"


@dataclass
class AcquisitionConfig:
    """Exploration weights and encoding limits.

    ``delta`` drives the multi-step strategy; ``delta1``/``delta2``/
    ``delta3`` (continuous / integer / categorical) drive the one-step
    strategy and default to ``delta``.  ``eps_df`` floors the surrogate
    scaling; ``n_emax`` caps the number of exploration-encoding binaries
    before the max-box term is restricted to the ``n_s`` most recent
    samples.
    """

    strategy: str = MULTI_STEP
    delta: float = 0.05
    delta1: float = None
    delta2: float = None
    delta3: float = None
    eps_df: float = 1e-6
    n_emax: int = 2000
    n_s: int = 20
    solve_time_limit: float = 30.0

    def __post_init__(self):
        if self.strategy not in (ONE_STEP, MULTI_STEP):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.delta1 is None:
            self.delta1 = self.delta
        if self.delta2 is None:
            self.delta2 = self.delta
        if self.delta3 is None:
            self.delta3 = self.delta
        if min(self.delta, self.delta1, self.delta2, self.delta3) < 0:
            raise ValueError("exploration weights must be nonnegative")
        if self.eps_df <= 0:
            raise ValueError("eps_df must be positive")
        if self.n_s < 1:
            raise ValueError("n_s must be >= 1")


@dataclass
class BigMBundle:
    """Big-M constants valid over the (tightened) encoded box."""

    M_phi: float
    M_s_plus: np.ndarray
    M_s_minus: np.ndarray
    M_E: float


def _interval_max(w, lo, hi):
    """max of w . v over the box [lo, hi], coordinatewise."""
    return float(np.sum(np.maximum(w * lo, w * hi)))


def compute_bigM(model: PWAModel, space: EncodedSpace) -> BigMBundle:
    """Interval-arithmetic big-M constants for the surrogate encoding.

    The box is the tightened encoded box, a superset of the admissible
    set, so the constants are always valid (if not the tightest).
    """
    lo, hi = space.lb, space.ub
    M_phi = 1.0
    for j in range(model.K):
        for h in range(model.K):
            if h == j:
                continue
            M_phi = max(M_phi, _interval_max(model.omega[h] - model.omega[j], lo, hi)
                        + model.gamma[h] - model.gamma[j])
    M_plus = np.array([_interval_max(model.a[j], lo, hi) + model.b[j] for j in range(model.K)])
    M_minus = np.array([-_interval_max(-model.a[j], lo, hi) + model.b[j] for j in range(model.K)])

    numeric = space.numeric_coords
    if numeric:
        M_E = 2.0 * (float(np.max(hi[numeric])) - float(np.min(lo[numeric])))
    else:
        M_E = 2.0
    return BigMBundle(M_phi=float(M_phi), M_s_plus=M_plus, M_s_minus=M_minus, M_E=max(M_E, 1e-6))


def build_base_milp(space: EncodedSpace, name="acquisition"):
    """MILP skeleton over the encoded coordinates: box bounds, one-hot
    rows, encoded constraints, and (in int-scaled mode) auxiliary integer
    variables linked to the scaled coordinates."""
    m = MILPModel(name)
    binary = set(space.binary_coords)
    enc = []
    for i in range(space.n):
        kind = "binary" if i in binary else "continuous"
        enc.append(m.add_var(f"e{i}", space.lb[i], space.ub[i], kind))
    enc = np.array(enc)

    p = space.problem
    if space.mode == INT_SCALED and p.n_int:
        for j in range(p.n_int):
            y = m.add_var(f"yint{j}", float(p.ly[j]), float(p.uy[j]), "integer")
            coord = enc[p.n_c + j]
            # gain * ybar - y = -offset  keeps the scaled coordinate on the grid
            m.add_row({coord: float(space.int_gain[j]), y: -1.0}, "=", -float(space.int_offset[j]))

    for start, width in space.onehot_blocks:
        m.add_row({int(enc[i]): 1.0 for i in range(start, start + width)}, "=", 1.0)
    for row, rhs in zip(space.G_eq, space.h_eq):
        idx = np.nonzero(row)[0]
        if idx.size:
            m.add_row({int(enc[i]): float(row[i]) for i in idx}, "=", float(rhs))
        elif abs(rhs) > 1e-12:
            m.add_row({int(enc[0]): 0.0}, "=", float(rhs))
    for row, rhs in zip(space.G_ineq, space.h_ineq):
        idx = np.nonzero(row)[0]
        if idx.size:
            m.add_row({int(enc[i]): float(row[i]) for i in idx}, "<=", float(rhs))
    return m, enc


def encode_surrogate(model: PWAModel, bundle: BigMBundle, milp: MILPModel, enc):
    """Add the region indicators and per-region value variables.

    Returns (zeta indices, v indices); the surrogate value is the sum of
    the v variables.
    """
    K = model.K
    zeta = [milp.add_var(f"zeta{j}", kind="binary") for j in range(K)]
    v = [milp.add_var(f"vsur{j}", min(0.0, bundle.M_s_minus[j]), max(0.0, bundle.M_s_plus[j]))
         for j in range(K)]
    milp.add_row({z: 1.0 for z in zeta}, "=", 1.0)
    # region j may be selected only where it wins the separation argmax;
    # a strict margin against lower-index regions mirrors the evaluator's
    # lowest-index tie-breaking, so tied regions cannot leak their pieces
    tie_eps = 1e-5 * max(1.0, bundle.M_phi)
    for j in range(K):
        for h in range(K):
            if h == j:
                continue
            row = {}
            diff = model.omega[h] - model.omega[j]
            for i in np.nonzero(diff)[0]:
                row[int(enc[i])] = float(diff[i])
            row[zeta[j]] = row.get(zeta[j], 0.0) + bundle.M_phi
            rhs = bundle.M_phi + float(model.gamma[j] - model.gamma[h])
            if h < j:
                rhs -= tie_eps
            milp.add_row(row, "<=", rhs)
    for j in range(K):
        aj = model.a[j]
        nz = np.nonzero(aj)[0]
        lo, hi = float(bundle.M_s_minus[j]), float(bundle.M_s_plus[j])
        row = {v[j]: 1.0, zeta[j]: -lo}
        for i in nz:
            row[int(enc[i])] = row.get(int(enc[i]), 0.0) - float(aj[i])
        milp.add_row(row, "<=", float(model.b[j]) - lo)
        row = {v[j]: 1.0, zeta[j]: -hi}
        for i in nz:
            row[int(enc[i])] = row.get(int(enc[i]), 0.0) - float(aj[i])
        milp.add_row(row, ">=", float(model.b[j]) - hi)
        milp.add_row({v[j]: 1.0, zeta[j]: -lo}, ">=", 0.0)
        milp.add_row({v[j]: 1.0, zeta[j]: -hi}, "<=", 0.0)
    return zeta, v


def encode_maxbox(samples, bundle: BigMBundle, milp: MILPModel, coord_vars):
    """Add the max-box exploration block over the given coordinate
    variables; ``samples`` holds the archive values of those coordinates
    (one row per archived point).  Returns the beta variable index."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    N, L = samples.shape
    if N < 1 or L != len(coord_vars):
        raise ValueError("max-box needs at least one sample over the chosen coordinates")
    M = bundle.M_E
    beta = milp.add_var("beta", 0.0, M)
    for i in range(N):
        flags = []
        for l, cv in enumerate(coord_vars):
            dp = milp.add_var(f"dpl{i}_{l}", kind="binary")
            dm = milp.add_var(f"dmi{i}_{l}", kind="binary")
            # candidate escapes box i from above / below on coordinate l
            milp.add_row({int(cv): 1.0, beta: -1.0, dp: -M}, ">=", float(samples[i, l]) - M)
            milp.add_row({int(cv): -1.0, beta: -1.0, dm: -M}, ">=", -float(samples[i, l]) - M)
            milp.add_row({dp: 1.0, dm: 1.0}, "<=", 1.0)
            flags.extend([dp, dm])
        milp.add_row({f: 1.0 for f in flags}, ">=", 1.0)
    return beta


def encode_hamming(samples_bits, bit_vars):
    """Average-Hamming-distance exploration as a linear expression.

    Returns ``(coeffs, constant)`` where coeffs maps MILP variable index
    to its coefficient: for archived bits ``z_i``, the average distance is
    ``sum_m [(N - 2 * ones_m) z^m + ones_m] / (d N)``.
    """
    Z = np.atleast_2d(np.asarray(samples_bits, dtype=float))
    N, d = Z.shape
    if N < 1 or d != len(bit_vars):
        raise ValueError("Hamming term needs at least one sample over the chosen bits")
    ones = Z.sum(axis=0)
    scale = 1.0 / (d * N)
    coeffs = {int(b): float((N - 2 * ones[m]) * scale) for m, b in enumerate(bit_vars)}
    constant = float(ones.sum() * scale)
    return coeffs, constant


def _windowed(X_block, n_emax, n_s):
    N, width = X_block.shape
    if width and N * width >= n_emax:
        return X_block[-min(N, n_s):]
    return X_block


def _exclusion_rows(milp, enc, binary_coords, exclude):
    """No-repeat cuts: require Hamming distance >= 1 from each excluded
    binary pattern (used for fully discrete problems only)."""
    for pattern in exclude:
        row = {}
        ones = 0.0
        for i in binary_coords:
            bit = float(np.round(pattern[i]))
            row[int(enc[i])] = 1.0 - 2.0 * bit
            ones += bit
        milp.add_row(row, ">=", 1.0 - ones)


def _solve(milp, cfg, what):
    sol = solve_milp(milp, time=cfg.solve_time_limit)
    if sol.status in ("node_limit", "gap_limit") and sol.x is not None:
        warnings.warn(f"{what} hit the solver limit; using the best incumbent "
                      f"(gap {sol.gap:.3g})", RuntimeWarning)
        return sol
    if not sol.is_optimal:
        raise RuntimeError(f"{what} unexpectedly {sol.status}; the admissible set "
                           "should be nonempty after initialization")
    return sol


def next_sample(space: EncodedSpace, model: PWAModel, cfg: AcquisitionConfig,
                X_enc, f_values=None, incumbent=None, exclude=()):
    """Solve the acquisition problem; returns the next encoded point.

    ``X_enc`` is the archive (one encoded point per row), ``f_values`` the
    observed objective values (``None`` in the preference-based setting,
    where the surrogate scale is already dimensionless and the scaling
    divisor is fixed to 1).  ``incumbent`` is the encoded best point, used
    by the multi-step strategy to freeze inactive variable blocks.
    ``exclude`` lists encoded archive points the candidate must differ
    from on the one-hot bits (fully discrete problems only).
    """
    X_enc = np.atleast_2d(np.asarray(X_enc, dtype=float))
    if f_values is not None and len(f_values):
        fv = np.asarray(f_values, dtype=float)
        delta_f = max(float(fv.max() - fv.min()), cfg.eps_df)
    else:
        delta_f = 1.0
    bundle = compute_bigM(model, space)
    p = space.problem

    blocks = []
    if p.n_c:
        blocks.append(("continuous", space.continuous_coords, cfg.delta1))
    if p.n_int:
        if space.mode == INT_SCALED:
            blocks.append(("integer-box", space.integer_coords, cfg.delta2))
        else:
            bits = [i for start, w in space.int_onehot_blocks for i in range(start, start + w)]
            blocks.append(("integer-hamming", bits, cfg.delta2))
    if p.n_d:
        bits = [i for start, w in space.cat_onehot_blocks for i in range(start, start + w)]
        blocks.append(("categorical", bits, cfg.delta3))

    def add_exploration(milp, enc, kind, coords, weight, obj, const):
        if weight == 0.0 or not coords:
            return const
        if kind in ("continuous", "integer-box"):
            samples = _windowed(X_enc[:, coords], cfg.n_emax, cfg.n_s)
            beta = encode_maxbox(samples, bundle, milp, [enc[i] for i in coords])
            obj[beta] = obj.get(beta, 0.0) - weight
        else:
            coeffs, c0 = encode_hamming(X_enc[:, coords], [enc[i] for i in coords])
            for var, c in coeffs.items():
                obj[var] = obj.get(var, 0.0) - weight * c
            const -= weight * c0
        return const

    def assemble(fixed_mask, fixed_values, active):
        milp, enc = build_base_milp(space)
        for i in np.nonzero(fixed_mask)[0]:
            var = milp.variables[enc[i]]
            var.lb = var.ub = float(fixed_values[i])
        zeta, v = encode_surrogate(model, bundle, milp, enc)
        obj = {vj: 1.0 / delta_f for vj in v}
        const = 0.0
        for kind, coords, weight in active:
            const = add_exploration(milp, enc, kind, coords, weight, obj, const)
        if exclude:
            _exclusion_rows(milp, enc, space.binary_coords, exclude)
        milp.set_objective(obj, constant=const)
        return milp, enc

    if cfg.strategy == ONE_STEP:
        milp, enc = assemble(np.zeros(space.n, dtype=bool), np.zeros(space.n), blocks)
        sol = _solve(milp, cfg, "acquisition MILP")
        return space.snap(sol.x[[int(i) for i in enc]])

    # multi-step: one variable type at a time, others frozen at the
    # incumbent first and then at the freshly optimized values
    if incumbent is None:
        raise ValueError("multi-step acquisition needs the incumbent encoded point")
    current = np.array(incumbent, dtype=float)
    solution = None
    for kind, coords, _ in blocks:
        fixed = np.ones(space.n, dtype=bool)
        fixed[coords] = False
        milp, enc = assemble(fixed, current, [(kind, coords, cfg.delta)])
        sol = _solve(milp, cfg, f"acquisition MILP ({kind} step)")
        solution = space.snap(sol.x[[int(i) for i in enc]])
        current = solution
    return solution
