"""Piecewise affine surrogate fitting and evaluation.

A :class:`PWAModel` carries a convex piecewise affine *separation*
function ``phi(v) = max_j omega_j . v + gamma_j`` whose argmax splits the
space into ``K`` polyhedral regions, and one affine *surrogate* piece
``a_j . v + b_j`` per region.  Evaluating the surrogate means locating the
region of a point (argmax of the separation terms, ties to the lowest
index) and applying that region's affine piece; the result is in general
non-convex and discontinuous across region boundaries, which is what lets
it track the sharp transitions induced by one-hot encoded variables.

Two fitting routes are provided:

* :func:`fit_parc` - from function values, by a block-coordinate scheme:
  K-means initialization on (sample, standardized value) pairs, then
  alternating per-region ridge regression, sample reassignment (residual
  blended with separation confidence), and multinomial softmax refit of
  the separation coefficients; regions holding fewer than ``n_min``
  samples are discarded and their samples absorbed by the best remaining
  region.

* :func:`fit_preference` - from pairwise comparisons only: K-means +
  softmax fix the regions, then a linear program picks the affine pieces
  that honor the preference relations up to slack, with a margin ``sigma``
  separating "better" pairs and an l-infinity penalty on the coefficients.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .milp import MILPModel, solve_lp

#: weight of the separation-confidence term when reassigning samples;
#: 1.0 treats regression residual and classification log-likelihood as a
#: joint objective, which keeps regions spatially coherent once the
#: separation function sharpens while letting residuals decide early on
REASSIGN_BLEND = 1.0


@dataclass
class PWAModel:
    """Fitted separation + surrogate coefficients for K regions."""

    K: int
    omega: np.ndarray   # (K, n)
    gamma: np.ndarray   # (K,)
    a: np.ndarray       # (K, n)
    b: np.ndarray       # (K,)
    fit_info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.omega = np.atleast_2d(np.asarray(self.omega, dtype=float))
        self.gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        self.a = np.atleast_2d(np.asarray(self.a, dtype=float))
        self.b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if not (self.K >= 1 and self.omega.shape[0] == self.K == self.a.shape[0]
                and self.gamma.size == self.K == self.b.size):
            raise ValueError("inconsistent PWA coefficient shapes")
        if not (np.all(np.isfinite(self.omega)) and np.all(np.isfinite(self.a))
                and np.all(np.isfinite(self.gamma)) and np.all(np.isfinite(self.b))):
            raise ValueError("PWA coefficients must be finite")

    @property
    def n(self):
        return self.omega.shape[1]

    def to_dict(self):
        return {"K": self.K, "omega": self.omega.tolist(), "gamma": self.gamma.tolist(),
                "a": self.a.tolist(), "b": self.b.tolist()}

    @staticmethod
    def from_dict(data):
        return PWAModel(K=int(data["K"]), omega=data["omega"], gamma=data["gamma"],
                        a=data["a"], b=data["b"])

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")

    @staticmethod
    def load(path):
        return PWAModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def partition_of(model: PWAModel, v):
    """Region index of each point: argmax of the separation terms,
    ties broken by the lowest index."""
    v = np.asarray(v, dtype=float)
    scores = np.atleast_2d(v) @ model.omega.T + model.gamma
    idx = np.argmax(scores, axis=1)
    return int(idx[0]) if v.ndim == 1 else idx


def evaluate(model: PWAModel, v):
    """Surrogate value at one point or at each row of a matrix."""
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    V = np.atleast_2d(v)
    j = np.argmax(V @ model.omega.T + model.gamma, axis=1)
    vals = np.einsum("ij,ij->i", V, model.a[j]) + model.b[j]
    return float(vals[0]) if single else vals


@dataclass
class FitConfig:
    """Hyperparameters shared by the two fitting routes.

    ``n_min`` is the minimum region occupancy before a region is
    discarded; the default of 2 keeps regions alive at the small archive
    sizes this package targets (ridge regularization covers the
    under-determined fits), while ``n + 1`` would make every affine piece
    fully identifiable at the cost of far coarser early surrogates.
    """

    K_init: int = 20
    n_min: int = None          # defaults to 2
    max_iters: int = 15
    softmax_reg: float = 1e-4
    ridge_reg: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.K_init < 1:
            raise ValueError("K_init must be >= 1")
        if self.softmax_reg <= 0 or self.ridge_reg <= 0:
            raise ValueError("regularization weights must be positive")


@dataclass
class PreferenceSet:
    """Pairwise comparisons over sample indices.

    Each entry is ``(i, j, outcome)`` with outcome -1 (sample i better),
    +1 (sample j better), or 0 (tie).
    """

    pairs: list = field(default_factory=list)

    def add(self, i, j, outcome):
        outcome = int(outcome)
        if outcome not in (-1, 0, 1):
            raise ValueError("preference outcome must be -1, 0, or 1")
        self.pairs.append((int(i), int(j), outcome))

    def __len__(self):
        return len(self.pairs)

    def validate(self, n_samples):
        for i, j, _ in self.pairs:
            if not (0 <= i < n_samples and 0 <= j < n_samples):
                raise ValueError("preference pair references an unknown sample index")


# ---------------------------------------------------------------------------
# building blocks

def kmeans(X, k, rng, max_iters=50):
    """Deterministic K-means: farthest-point seeding (first center drawn
    from ``rng``), at most ``max_iters`` Lloyd iterations, empty clusters
    reseeded to the sample farthest from its center."""
    X = np.asarray(X, dtype=float)
    N = X.shape[0]
    k = min(k, N)
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[int(rng.integers(N))]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        centers[j] = X[int(np.argmax(d2))]
        d2 = np.minimum(d2, np.sum((X - centers[j]) ** 2, axis=1))

    labels = np.zeros(N, dtype=int)
    for _ in range(max_iters):
        dist = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(dist, axis=1)
        for j in range(k):
            members = new_labels == j
            if members.any():
                centers[j] = X[members].mean(axis=0)
            else:
                far = int(np.argmax(dist[np.arange(N), new_labels]))
                centers[j] = X[far]
                new_labels[far] = j
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels, centers


def _compact_labels(labels):
    active = np.unique(labels)
    remap = {int(j): r for r, j in enumerate(active)}
    return np.array([remap[int(j)] for j in labels], dtype=int), active.size


def softmax_fit(X, labels, k, reg, iters=200, tol=1e-6):
    """Multinomial softmax regression of region labels on X.

    Gradient ascent with step halving on non-improvement; returns the
    separation coefficients (omega, gamma).  ``k == 1`` yields zeros.
    """
    N, n = X.shape
    if k == 1:
        return np.zeros((1, n)), np.zeros(1)
    Y = np.zeros((N, k))
    Y[np.arange(N), labels] = 1.0
    W = np.zeros((k, n))
    g = np.zeros(k)

    def loss(W, g):
        logits = X @ W.T + g
        logits -= logits.max(axis=1, keepdims=True)
        logZ = np.log(np.exp(logits).sum(axis=1))
        nll = -(logits[np.arange(N), labels] - logZ).mean()
        return nll + reg * (np.sum(W * W) + np.sum(g * g))

    current = loss(W, g)
    lr = 1.0
    for _ in range(iters):
        logits = X @ W.T + g
        logits -= logits.max(axis=1, keepdims=True)
        P = np.exp(logits)
        P /= P.sum(axis=1, keepdims=True)
        grad_W = (P - Y).T @ X / N + 2 * reg * W
        grad_g = (P - Y).mean(axis=0) + 2 * reg * g
        cand = loss(W - lr * grad_W, g - lr * grad_g)
        if cand < current:
            W -= lr * grad_W
            g -= lr * grad_g
            if current - cand < tol:
                current = cand
                break
            current = cand
            lr *= 1.2
        else:
            lr *= 0.5
            if lr < 1e-12:
                break
    return W, g


def _ridge_pieces(X, f, labels, k, ridge_reg):
    """Per-region affine least squares; empty regions get +inf residuals."""
    N, n = X.shape
    a = np.zeros((k, n))
    b = np.zeros(k)
    dead = np.zeros(k, dtype=bool)
    Phi = np.column_stack([X, np.ones(N)])
    for j in range(k):
        members = labels == j
        m = int(members.sum())
        if m == 0:
            dead[j] = True
            continue
        A = Phi[members]
        w = np.linalg.solve(A.T @ A + ridge_reg * np.eye(n + 1), A.T @ f[members])
        a[j] = w[:n]
        b[j] = w[n]
    return a, b, dead


def fit_parc(X, f, cfg: FitConfig) -> PWAModel:
    """Fit a PWA surrogate to function values by block-coordinate descent.

    Function values are standardized internally; the returned coefficients
    are mapped back to the original scale.  Regions left with fewer than
    ``n_min`` samples at the end are discarded and their samples absorbed
    by the surviving region with the best separation score.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    f = np.asarray(f, dtype=float).ravel()
    N, n = X.shape
    if N < 2:
        raise ValueError("need at least 2 samples to fit a surrogate")
    if not np.all(np.isfinite(f)):
        raise ValueError("function values must be finite")
    rng = np.random.default_rng(cfg.seed)
    n_min = cfg.n_min if cfg.n_min is not None else 2

    f_mean = float(f.mean())
    f_std = float(f.std())
    if f_std < 1e-12:
        f_std = 1.0
    fs = (f - f_mean) / f_std

    k = min(cfg.K_init, N)
    labels, _ = kmeans(np.column_stack([X, fs]), k, rng)
    labels, k = _compact_labels(labels)

    omega = np.zeros((k, n))
    gamma = np.zeros(k)
    have_separation = False
    # blended phase: classification pull keeps regions spatially coherent
    # while the global structure forms, then a short pure-residual polish
    # settles the boundaries at their prediction-optimal location
    for blend, rounds in ((REASSIGN_BLEND, cfg.max_iters), (0.0, max(3, cfg.max_iters // 3))):
        for _ in range(rounds):
            a, b, dead = _ridge_pieces(X, fs, labels, k, cfg.ridge_reg)
            resid2 = (X @ a.T + b - fs[:, None]) ** 2
            resid2[:, dead] = np.inf
            if blend > 0.0 and have_separation and k > 1:
                logits = X @ omega.T + gamma
                logits -= logits.max(axis=1, keepdims=True)
                logp = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
                cost = resid2 - blend * logp
                cost[:, dead] = np.inf
            else:
                cost = resid2
            new_labels = np.argmin(cost, axis=1)
            new_labels, k_new = _compact_labels(new_labels)
            omega, gamma = softmax_fit(X, new_labels, k_new, cfg.softmax_reg)
            have_separation = True
            if k_new == k and np.array_equal(new_labels, labels):
                labels = new_labels
                break
            labels, k = new_labels, k_new

    # discard undersized regions; absorb their samples by separation score
    counts = np.bincount(labels, minlength=k)
    keep = np.flatnonzero(counts >= n_min)
    if keep.size == 0:
        keep = np.array([int(np.argmax(counts))])
    if keep.size < k:
        scores = X @ omega[keep].T + gamma[keep]
        absorbed = np.argmax(scores, axis=1)
        relabel = labels.copy()
        for r, j in enumerate(keep):
            relabel[labels == j] = r
        discard_mask = ~np.isin(labels, keep)
        relabel[discard_mask] = absorbed[discard_mask]
        labels, k = relabel, keep.size
        omega, gamma = softmax_fit(X, labels, k, cfg.softmax_reg)

    # consistency pass: the surrogate is evaluated on the partition induced
    # by argmax (lowest index on ties), so the affine pieces must be fitted
    # on exactly that partition; regions whose territory holds no sample
    # (e.g. duplicated separation rows) are unreachable and dropped
    territory = np.argmax(X @ omega.T + gamma, axis=1)
    occupied = np.unique(territory)
    if occupied.size < k:
        omega, gamma = omega[occupied], gamma[occupied]
        territory, k = _compact_labels(territory)
    labels = territory

    a, b, dead = _ridge_pieces(X, fs, labels, k, cfg.ridge_reg)
    if dead.any():  # cannot happen after the consistency pass, but stay safe
        a[dead] = 0.0
        b[dead] = fs.mean()

    model = PWAModel(K=k, omega=omega, gamma=gamma, a=a * f_std, b=b * f_std + f_mean)
    pred = evaluate(model, X)
    model.fit_info = {"train_rmse": float(np.sqrt(np.mean((pred - f) ** 2))),
                      "region_counts": np.bincount(labels, minlength=k).tolist()}
    return model


def fit_preference(X, prefs: PreferenceSet, cfg: FitConfig, sigma=None, alpha=1e-2) -> PWAModel:
    """Fit a PWA surrogate from pairwise preferences.

    Region structure comes from K-means + softmax on the samples alone;
    the affine pieces solve an LP minimizing the total violation of the
    preference relations (margin ``sigma``, default ``1/N``) plus
    ``alpha`` times the l-infinity norm of the coefficients.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    N, n = X.shape
    if N < 2:
        raise ValueError("need at least 2 samples to fit a surrogate")
    prefs.validate(N)
    if sigma is None:
        sigma = 1.0 / N
    rng = np.random.default_rng(cfg.seed)

    k = min(cfg.K_init, N)
    labels, _ = kmeans(X, k, rng)
    labels, k = _compact_labels(labels)
    omega, gamma = softmax_fit(X, labels, k, cfg.softmax_reg)
    region = np.argmax(X @ omega.T + gamma, axis=1)

    M_c = len(prefs)
    lp = MILPModel("preference-fit")
    a_idx = np.array([[lp.add_var(f"a{j}_{l}", -np.inf, np.inf) for l in range(n)] for j in range(k)])
    b_idx = np.array([lp.add_var(f"b{j}", -np.inf, np.inf) for j in range(k)])
    eps_idx = [lp.add_var(f"eps{m}", 0.0, np.inf) for m in range(M_c)]
    xi = lp.add_var("xi", 0.0, np.inf)

    def surrogate_coeffs(sample, sign, row):
        j = int(region[sample])
        for l in range(n):
            c = sign * X[sample, l]
            if c != 0.0:
                row[a_idx[j, l]] = row.get(a_idx[j, l], 0.0) + c
        row[b_idx[j]] = row.get(b_idx[j], 0.0) + sign

    for m, (i, j, outcome) in enumerate(prefs.pairs):
        if outcome == -1:
            better, worse = i, j
        elif outcome == 1:
            better, worse = j, i
        else:
            for s in (1.0, -1.0):
                row = {eps_idx[m]: -1.0}
                surrogate_coeffs(i, s, row)
                surrogate_coeffs(j, -s, row)
                lp.add_row(row, "<=", sigma)
            continue
        row = {eps_idx[m]: -1.0}
        surrogate_coeffs(better, 1.0, row)
        surrogate_coeffs(worse, -1.0, row)
        lp.add_row(row, "<=", -sigma)

    for j in range(k):
        for l in range(n):
            lp.add_row({a_idx[j, l]: 1.0, xi: -1.0}, "<=", 0.0)
            lp.add_row({a_idx[j, l]: -1.0, xi: -1.0}, "<=", 0.0)
        lp.add_row({b_idx[j]: 1.0, xi: -1.0}, "<=", 0.0)
        lp.add_row({b_idx[j]: -1.0, xi: -1.0}, "<=", 0.0)

    obj = {e: 1.0 for e in eps_idx}
    obj[xi] = alpha
    lp.set_objective(obj)
    sol = solve_lp(lp)
    if not sol.is_optimal:  # slacks make the LP always feasible and bounded
        raise RuntimeError(f"preference LP unexpectedly returned {sol.status}")

    a = sol.x[a_idx.reshape(-1)].reshape(k, n)
    b = sol.x[b_idx]
    slacks = sol.x[eps_idx] if M_c else np.zeros(0)
    model = PWAModel(K=k, omega=omega, gamma=gamma, a=a, b=b)
    model.fit_info = {"total_slack": float(slacks.sum()),
                      "violated": int(np.sum(slacks > 1e-6)),
                      "objective": sol.objective}
    return model


# ---------------------------------------------------------------------------
# estimator-style wrappers

class PiecewiseAffineRegressor(BaseEstimator, RegressorMixin):
    """Scikit-learn style wrapper around :func:`fit_parc`."""

    def __init__(self, K_init=20, n_min=None, max_iters=15,
                 softmax_reg=1e-4, ridge_reg=1e-8, seed=0):
        self.K_init = K_init
        self.n_min = n_min
        self.max_iters = max_iters
        self.softmax_reg = softmax_reg
        self.ridge_reg = ridge_reg
        self.seed = seed

    def _config(self):
        return FitConfig(K_init=self.K_init, n_min=self.n_min, max_iters=self.max_iters,
                         softmax_reg=self.softmax_reg, ridge_reg=self.ridge_reg, seed=self.seed)

    def fit(self, X, y):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        if X.shape[0] != y.size:
            raise ValueError("X and y disagree on the number of samples")
        self.model_ = fit_parc(X, y, self._config())
        return self

    def predict(self, X):
        self._check_fitted()
        return evaluate(self.model_, np.atleast_2d(np.asarray(X, dtype=float)))

    def partition(self, X):
        self._check_fitted()
        return partition_of(self.model_, np.atleast_2d(np.asarray(X, dtype=float)))

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise RuntimeError("estimator is not fitted yet; call fit first")


class PreferenceSurrogate(BaseEstimator):
    """Scikit-learn style wrapper around :func:`fit_preference`."""

    def __init__(self, K_init=20, softmax_reg=1e-4, sigma=None, alpha=1e-2, seed=0):
        self.K_init = K_init
        self.softmax_reg = softmax_reg
        self.sigma = sigma
        self.alpha = alpha
        self.seed = seed

    def fit(self, X, preferences):
        prefs = preferences if isinstance(preferences, PreferenceSet) else PreferenceSet(list(preferences))
        cfg = FitConfig(K_init=self.K_init, softmax_reg=self.softmax_reg, seed=self.seed)
        self.model_ = fit_preference(np.atleast_2d(np.asarray(X, dtype=float)), prefs, cfg,
                                     sigma=self.sigma, alpha=self.alpha)
        return self

    def predict(self, X):
        if not hasattr(self, "model_"):
            raise RuntimeError("estimator is not fitted yet; call fit first")
        return evaluate(self.model_, np.atleast_2d(np.asarray(X, dtype=float)))
