"""Optimization loops: value-driven and preference-driven ask/tell sessions.

:class:`PWASOptimizer` runs the value-based loop: the first ``n_init``
asks return a feasible initial design, after which every ask fits the
piecewise affine surrogate to the archive and solves the acquisition
MILP.  :class:`PWASpOptimizer` runs the preference-based variant, where
each ask yields a pair (current incumbent, new candidate) and the caller
answers with -1 / 0 / +1; the surrogate is shaped by the collected
comparisons instead of function values.

Both classes are strict state machines (ask and tell must alternate) and
are deterministic given (problem, seed, configs).  The convenience
runners :func:`run_pwas` / :func:`run_pwasp` drive a callback to the full
budget and return a report with the incumbent and per-iteration history.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .acquisition import AcquisitionConfig, next_sample
from .problem import Point, Problem, build_encoded_space, tighten_bounds
from .sampling import feasible_initial
from .surrogate import FitConfig, PreferenceSet, fit_parc, fit_preference


def _derived_seed(*parts):
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


@dataclass
class HistoryRecord:
    iter: int
    X: list
    f: float = None
    preference: int = None
    incumbent: list = None
    incumbent_f: float = None

    def to_json(self):
        data = {"iter": self.iter, "X": self.X}
        if self.f is not None:
            data["f"] = self.f
        if self.preference is not None:
            data["preference"] = self.preference
        data["incumbent"] = self.incumbent
        if self.incumbent_f is not None:
            data["incumbent_f"] = self.incumbent_f
        return data


def write_history_jsonl(history, path):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in history:
            fh.write(json.dumps(rec.to_json()) + "\n")


class _SessionBase:
    def __init__(self, problem: Problem, n_init, n_max, fit_config, acq_config, seed):
        if n_init < 2:
            raise ValueError("n_init must be >= 2")
        if n_max < n_init:
            raise ValueError("n_max must be >= n_init")
        self.problem = problem
        self.n_init = int(n_init)
        self.n_max = int(n_max)
        self.fit_config = fit_config or FitConfig()
        self.acq_config = acq_config or AcquisitionConfig()
        self.seed = int(seed)
        self.space = tighten_bounds(build_encoded_space(problem, self.n_max))
        self.initial = feasible_initial(self.space, self.n_init, _derived_seed(self.seed, 0))
        self.X_enc: list[np.ndarray] = []
        self.history: list[HistoryRecord] = []
        self._pending = None

    # internal objective sense is always "minimize"
    def _to_internal(self, f_user):
        return -f_user if self.problem.sense == "maximize" else f_user

    def _to_user(self, f_internal):
        if f_internal is None:
            return None
        return -f_internal if self.problem.sense == "maximize" else f_internal

    def _fit_seed(self, step):
        return _derived_seed(self.seed, 1, step)

    def _require_no_pending(self):
        if self._pending is not None:
            raise RuntimeError("protocol error: ask called twice without tell")

    def _require_pending(self):
        if self._pending is None:
            raise RuntimeError("protocol error: tell without a pending ask")

    def _fully_discrete(self):
        return not self.space.numeric_coords

    def _acquire(self, model, f_values, incumbent_idx):
        X = np.asarray(self.X_enc)
        incumbent = self.X_enc[incumbent_idx]
        v = next_sample(self.space, model, self.acq_config, X, f_values=f_values,
                        incumbent=incumbent)
        if self._fully_discrete() and any(np.array_equal(v, q) for q in self.X_enc):
            try:
                v = next_sample(self.space, model, self.acq_config, X, f_values=f_values,
                                incumbent=incumbent, exclude=list(self.X_enc))
            except RuntimeError:
                pass  # domain exhausted: accept the repeat
        assert self.space.is_feasible(v, tol=1e-8), "acquired point violates constraints"
        return v


class PWASOptimizer(_SessionBase):
    """Value-driven ask/tell session (surrogate fitted to f-values)."""

    def __init__(self, problem: Problem, n_init=20, n_max=100,
                 fit_config: FitConfig = None, acq_config: AcquisitionConfig = None, seed=0):
        super().__init__(problem, n_init, n_max, fit_config, acq_config, seed)
        self.f_internal: list[float] = []
        self.best_index = None

    @property
    def n_evals(self):
        return len(self.f_internal)

    def exhausted(self):
        return self.n_evals >= self.n_max

    def ask(self) -> Point:
        self._require_no_pending()
        if self.exhausted():
            raise RuntimeError("evaluation budget exhausted")
        k = self.n_evals
        if k < self.n_init:
            v = self.initial[k]
        else:
            cfg = self.fit_config
            model = fit_parc(np.asarray(self.X_enc), np.asarray(self.f_internal),
                             FitConfig(K_init=cfg.K_init, n_min=cfg.n_min,
                                       max_iters=cfg.max_iters, softmax_reg=cfg.softmax_reg,
                                       ridge_reg=cfg.ridge_reg, seed=self._fit_seed(k)))
            v = self._acquire(model, self.f_internal, self.best_index)
        self._pending = v
        return self.space.decode(v)

    def tell(self, f_value) -> "PWASOptimizer":
        self._require_pending()
        f_user = float(f_value)
        if not np.isfinite(f_user):
            raise ValueError("objective value must be finite")
        v = self._pending
        self._pending = None
        self.X_enc.append(v)
        self.f_internal.append(self._to_internal(f_user))
        k = len(self.f_internal) - 1
        if self.best_index is None or self.f_internal[k] < self.f_internal[self.best_index]:
            self.best_index = k
        best_pt, best_f = self.best()
        self.history.append(HistoryRecord(
            iter=k + 1, X=self.space.decode(v).as_list(), f=f_user,
            incumbent=best_pt.as_list(), incumbent_f=best_f))
        return self

    def best(self):
        if self.best_index is None:
            return None, None
        return (self.space.decode(self.X_enc[self.best_index]),
                self._to_user(self.f_internal[self.best_index]))


class PWASpOptimizer(_SessionBase):
    """Preference-driven ask/tell session.

    ``ask`` returns the pair (incumbent, new candidate); ``tell`` takes
    the comparison outcome: -1 if the incumbent is better, +1 if the
    candidate is better, 0 for a tie.  The budget is ``n_max - 1``
    comparisons over ``n_max`` distinct samples.
    """

    def __init__(self, problem: Problem, n_init=20, n_max=100,
                 fit_config: FitConfig = None, acq_config: AcquisitionConfig = None, seed=0):
        super().__init__(problem, n_init, n_max, fit_config, acq_config, seed)
        self.preferences = PreferenceSet()
        self.i_star = 0
        self.X_enc.append(self.initial[0])

    @property
    def n_comparisons(self):
        return len(self.preferences)

    def exhausted(self):
        return self.n_comparisons >= self.n_max - 1

    def ask(self):
        self._require_no_pending()
        if self.exhausted():
            raise RuntimeError("comparison budget exhausted")
        t = self.n_comparisons
        if t + 1 < self.n_init:
            v = self.initial[t + 1]
        else:
            model = self._fit(t + 1)
            v = self._acquire(model, None, self.i_star)
        self._pending = v
        return (self.space.decode(self.X_enc[self.i_star]), self.space.decode(v))

    def _fit(self, step):
        cfg = self.fit_config
        return fit_preference(np.asarray(self.X_enc), self.preferences,
                              FitConfig(K_init=cfg.K_init, n_min=cfg.n_min,
                                        max_iters=cfg.max_iters, softmax_reg=cfg.softmax_reg,
                                        ridge_reg=cfg.ridge_reg, seed=self._fit_seed(step)))

    def tell(self, outcome) -> "PWASpOptimizer":
        self._require_pending()
        outcome = int(outcome)
        if outcome not in (-1, 0, 1):
            raise ValueError("preference outcome must be -1, 0, or 1")
        v = self._pending
        self._pending = None
        self.X_enc.append(v)
        candidate = len(self.X_enc) - 1
        self.preferences.add(self.i_star, candidate, outcome)
        if outcome == 1:
            self.i_star = candidate
        self.history.append(HistoryRecord(
            iter=self.n_comparisons, X=self.space.decode(v).as_list(),
            preference=outcome, incumbent=self.best()[0].as_list()))
        return self

    def best(self):
        return self.space.decode(self.X_enc[self.i_star]), None


def run_pwas(problem: Problem, objective, n_init=20, n_max=100,
             fit_config: FitConfig = None, acq_config: AcquisitionConfig = None, seed=0):
    """Run the full value-based loop; ``objective`` maps Point -> float
    in the problem's declared sense.  Returns a report dict with the best
    point, best value, and the per-evaluation history."""
    opt = PWASOptimizer(problem, n_init=n_init, n_max=n_max,
                        fit_config=fit_config, acq_config=acq_config, seed=seed)
    while not opt.exhausted():
        x = opt.ask()
        opt.tell(objective(x))
    best_pt, best_f = opt.best()
    return {"best_point": best_pt, "best_value": best_f,
            "history": opt.history, "optimizer": opt}


def run_pwasp(problem: Problem, preference, n_init=20, n_max=100,
              fit_config: FitConfig = None, acq_config: AcquisitionConfig = None, seed=0):
    """Run the full preference-based loop; ``preference(a, b)`` returns
    -1 / 0 / +1 per the comparison semantics of :class:`PWASpOptimizer`."""
    if acq_config is None:
        acq_config = AcquisitionConfig(delta=1.0)
    opt = PWASpOptimizer(problem, n_init=n_init, n_max=n_max,
                         fit_config=fit_config, acq_config=acq_config, seed=seed)
    while not opt.exhausted():
        a, b = opt.ask()
        opt.tell(preference(a, b))
    return {"best_point": opt.best()[0], "best_value": None,
            "history": opt.history, "optimizer": opt}


def preference_oracle(objective, sense="minimize", tie_tol=0.0):
    """Synthetic decision-maker comparing two points by their objective."""
    def pref(a: Point, b: Point):
        fa, fb = objective(a), objective(b)
        if sense == "maximize":
            fa, fb = -fa, -fb
        if abs(fa - fb) <= tie_tol:
            return 0
        return -1 if fa < fb else 1
    return pref
