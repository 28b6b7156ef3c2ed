"""Mixed-variable global optimization with piecewise affine surrogates.

Public surface: problem declaration and encoding (:mod:`pwaopt.problem`),
surrogate fitting (:mod:`pwaopt.surrogate`), acquisition
(:mod:`pwaopt.acquisition`), initial sampling (:mod:`pwaopt.sampling`),
the ask/tell optimizers and runners (:mod:`pwaopt.driver`), benchmark
problems (:mod:`pwaopt.benchmarks`), and a CLI / HTTP service
(:mod:`pwaopt.cli`, :mod:`pwaopt.service`).
"""

from .acquisition import AcquisitionConfig
from .driver import (PWASOptimizer, PWASpOptimizer, preference_oracle,
                     run_pwas, run_pwasp)
from .problem import (EncodedSpace, InfeasibleProblemError, Point, Problem,
                      ValidationError, build_encoded_space, load_problem,
                      tighten_bounds)
from .surrogate import (FitConfig, PiecewiseAffineRegressor, PreferenceSet,
                        PreferenceSurrogate, PWAModel, evaluate, fit_parc,
                        fit_preference, partition_of)

__version__ = "0.1.0"

__all__ = [
    "AcquisitionConfig", "EncodedSpace", "FitConfig", "InfeasibleProblemError",
    "PWAModel", "PWASOptimizer", "PWASpOptimizer", "PiecewiseAffineRegressor",
    "Point", "PreferenceSet", "PreferenceSurrogate", "Problem", "ValidationError",
    "build_encoded_space", "evaluate", "fit_parc", "fit_preference",
    "load_problem", "partition_of", "preference_oracle", "run_pwas",
    "run_pwasp", "tighten_bounds",
]
