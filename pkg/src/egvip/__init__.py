"""Extragradient-family solvers for variational inequality problems.

The package is organized by what varies between chapters of the theory:
single-call stochastic extrapolation (`solvers_eg`), Polyak-type adaptive
steps with and without line search (`solvers_polyak`), step sizes for
operators with norm-proportional smoothness (`solvers_l0l1`), and
communication-skipping federated loops (`fl`).  `problems` holds the
seeded testbeds, `harness` the config/CSV plumbing, `verify` the
executable theory checks, `service`/`cli` the thin delivery layer.
"""

from .core import (
    AffineFiniteSumOperator,
    FiniteSumOperator,
    metric_relative_error,
    rng_stream,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    MetricRow,
    parse_config_file,
    parse_config_text,
    rows_to_csv,
    run_experiment,
)
from .problems import (
    QuadraticGameSpec,
    make_cubic_minmax,
    make_global_forsaken,
    make_policeman_burglar,
    make_quadratic_game,
    make_robust_least_squares,
    make_weak_minty_scalar,
)
from .sampling import (
    er_constants,
    full_sampling,
    importance_probabilities,
    single_element,
    tau_minibatch,
)
from .verify import verify_theory

__version__ = "0.1.0"

__all__ = [
    "AffineFiniteSumOperator",
    "ConfigError",
    "ExperimentConfig",
    "FiniteSumOperator",
    "MetricRow",
    "QuadraticGameSpec",
    "er_constants",
    "full_sampling",
    "importance_probabilities",
    "make_cubic_minmax",
    "make_global_forsaken",
    "make_policeman_burglar",
    "make_quadratic_game",
    "make_robust_least_squares",
    "make_weak_minty_scalar",
    "metric_relative_error",
    "parse_config_file",
    "parse_config_text",
    "rows_to_csv",
    "rng_stream",
    "run_experiment",
    "single_element",
    "tau_minibatch",
    "verify_theory",
]
