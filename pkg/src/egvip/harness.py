"""Experiment configuration, runners, and CSV emission.

Configs are plain TOML files with one flat section per experiment: scalar
values, inline arrays, nothing nested.  A section names a problem constructor,
an algorithm, a step policy, sampling scheme, seeds, and what to record; the
runner executes every seed and emits MetricRow tuples that serialize to a CSV
with the fixed header

    experiment,seed,iteration,oracle_calls,comm_rounds,metric,value

sorted by (experiment, seed, iteration, metric) so identical configs produce
identical bytes.  Divergence is data, not an exception: the run stops and a
`diverged` row is written.

The theory-verification suites live in :mod:`egvip.verify`; `verify_theory`
is re-exported here because the CLI treats it as part of the harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import fl as fl_mod
from . import problems as problems_mod
from .core import (
    FiniteSumOperator,
    Point,
    is_diverged,
    metric_relative_error,
    rng_stream,
)
from .sampling import (
    SamplingScheme,
    er_constants,
    full_sampling,
    importance_probabilities,
    single_element,
    tau_minibatch,
)
from .solvers_eg import (
    SpegState,
    StepPolicy,
    config_weak_minty,
    constant_policy,
    custom_policy,
    eg_step,
    gda_step,
    horizon_policy,
    policy_constant,
    speg_init,
    speg_step,
    switching_policy,
    weak_minty_policy,
)
from .solvers_l0l1 import (
    eg_l0l1_step,
    gamma_adaptive,
    make_l0l1_config,
    weak_minty_margin,
)
from .solvers_polyak import (
    GammaMode,
    PolyakState,
    dec_polyak_seg_step,
    gamma_constant,
    gamma_line_search,
    polyak_eg_step,
    polyak_init,
    polyak_seg_step,
    while_loop_budget,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "MetricRow",
    "CSV_HEADER",
    "parse_config_text",
    "parse_config_file",
    "serialize_config",
    "list_problems",
    "list_algorithms",
    "list_policies",
    "run_experiment",
    "run_config_text",
    "rows_to_csv",
    "experiment_er_constants",
    "verify_theory",
]

CSV_HEADER = "experiment,seed,iteration,oracle_calls,comm_rounds,metric,value"


class ConfigError(ValueError):
    """Invalid configuration; ``path`` points at the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class MetricRow:
    experiment: str
    seed: int
    iteration: int
    oracle_calls: int
    comm_rounds: int
    metric: str
    value: float

    def sort_key(self):
        return (self.experiment, self.seed, self.iteration, self.metric)


# ---------------------------------------------------------------------------
# config parsing


_TOP_KEYS = {
    "problem",
    "algorithm",
    "seeds",
    "iterations",
    "record_every",
    "metrics",
    "scheme",
    "tau",
    "x0",
    "x0_scale",
    "max_oracle_calls",
    "stop_metric",
    "stop_value",
}

# Per-algorithm tuning knobs (anything else in a section is rejected).
_ALGO_KEYS: dict[str, set] = {
    "gda": {"gamma"},
    "eg": {"gamma", "omega", "same_sample"},
    "speg": {
        "policy", "omega", "gamma", "mu", "delta", "L", "sigma_star_sq", "eps",
        "rho", "track_min_fhat",
    },
    "polyak-eg": {"gamma", "A", "beta", "grow", "gamma_start"},
    "polyak-seg": {"gamma", "A", "beta", "grow", "gamma_start"},
    "dec-polyak-seg": {"gamma", "A", "beta", "grow", "gamma_start"},
    "eg-l0l1": {"regime", "alpha", "L0", "L1", "c0", "c1"},
    "proxskip-vip": {"gamma", "p", "q", "theoretical"},
    "proxskip-l-svrgda": {"gamma", "p", "q", "theoretical"},
    "local-gda": {"gamma", "p", "sync_every", "theoretical"},
    "local-eg": {"gamma", "omega", "p", "sync_every", "theoretical"},
}

_FL_ALGOS = {"proxskip-vip", "proxskip-l-svrgda", "local-gda", "local-eg"}

_POLICIES = ("constant", "switching", "horizon", "weak-minty")


@dataclass
class ExperimentConfig:
    name: str
    problem: str
    problem_params: dict
    algorithm: str
    algorithm_params: dict
    seeds: tuple
    iterations: int
    record_every: int = 1
    metrics: tuple = ("rel_err",)
    scheme_kind: str = "full"
    tau: int = 1
    x0: object = "ones"
    x0_scale: float = 1.0
    max_oracle_calls: Optional[int] = None
    stop_metric: Optional[str] = None
    stop_value: float = 0.0


def parse_config_text(text: str) -> list[ExperimentConfig]:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<config>", f"not valid TOML: {exc}") from None
    configs = []
    for name, section in raw.items():
        if not isinstance(section, dict):
            raise ConfigError(name, "top-level values must live inside a section")
        configs.append(_parse_section(name, section))
    if not configs:
        raise ConfigError("<config>", "no experiment sections")
    return configs


def parse_config_file(path) -> list[ExperimentConfig]:
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_config_text(data.decode("utf-8"))


def _parse_section(name: str, section: dict) -> ExperimentConfig:
    def need(key, types, check=None, what=""):
        if key not in section:
            raise ConfigError(f"{name}.{key}", "missing required key")
        val = section[key]
        if not isinstance(val, types) or isinstance(val, bool) and bool not in (
            types if isinstance(types, tuple) else (types,)
        ):
            raise ConfigError(f"{name}.{key}", f"expected {what or types}")
        if check is not None and not check(val):
            raise ConfigError(f"{name}.{key}", f"invalid value {val!r}")
        return val

    problem = need("problem", str)
    if problem not in _PROBLEM_BUILDERS:
        raise ConfigError(f"{name}.problem", f"unknown problem {problem!r}; "
                          f"known: {sorted(_PROBLEM_BUILDERS)}")
    algorithm = need("algorithm", str)
    if algorithm not in _ALGO_KEYS:
        raise ConfigError(f"{name}.algorithm", f"unknown algorithm {algorithm!r}; "
                          f"known: {sorted(_ALGO_KEYS)}")
    seeds = need("seeds", list, lambda v: len(v) > 0 and all(
        isinstance(s, int) and not isinstance(s, bool) for s in v),
        "non-empty list of integers")
    iterations = need("iterations", int, lambda v: v >= 0, "integer >= 0")

    problem_params = {}
    algo_params = {}
    for key, val in section.items():
        if key.startswith("problem_"):
            problem_params[key[len("problem_"):]] = val
        elif key in _TOP_KEYS:
            continue
        elif key in _ALGO_KEYS[algorithm]:
            algo_params[key] = val
        else:
            raise ConfigError(f"{name}.{key}", "unknown key for this algorithm")

    record_every = section.get("record_every", 1)
    if not isinstance(record_every, int) or record_every < 1:
        raise ConfigError(f"{name}.record_every", "must be a positive integer")
    metrics = tuple(section.get("metrics", ["rel_err"]))
    for m in metrics:
        if m not in _METRIC_NAMES:
            raise ConfigError(f"{name}.metrics", f"unknown metric {m!r}; "
                              f"known: {sorted(_METRIC_NAMES)}")
    scheme_kind = section.get("scheme", "full")
    if scheme_kind not in ("full", "minibatch", "single-uniform", "single-importance"):
        raise ConfigError(f"{name}.scheme", f"unknown scheme {scheme_kind!r}")
    tau = section.get("tau", 1)
    if not isinstance(tau, int) or tau < 1:
        raise ConfigError(f"{name}.tau", "must be a positive integer")
    x0 = section.get("x0", "ones")
    if not (x0 in ("ones", "zeros", "gauss") or isinstance(x0, list)):
        raise ConfigError(f"{name}.x0", "expected 'ones', 'zeros', 'gauss' or a list")
    stop_metric = section.get("stop_metric")
    if stop_metric is not None and stop_metric not in _METRIC_NAMES:
        raise ConfigError(f"{name}.stop_metric", f"unknown metric {stop_metric!r}")
    cfg = ExperimentConfig(
        name=name,
        problem=problem,
        problem_params=problem_params,
        algorithm=algorithm,
        algorithm_params=algo_params,
        seeds=tuple(seeds),
        iterations=iterations,
        record_every=record_every,
        metrics=metrics,
        scheme_kind=scheme_kind,
        tau=tau,
        x0=x0,
        x0_scale=float(section.get("x0_scale", 1.0)),
        max_oracle_calls=section.get("max_oracle_calls"),
        stop_metric=stop_metric,
        stop_value=float(section.get("stop_value", 0.0)),
    )
    if (algorithm in _FL_ALGOS) != (problem == "client-games"):
        raise ConfigError(
            f"{name}.algorithm",
            "federated algorithms pair with problem = 'client-games' and "
            "nothing else does",
        )
    return cfg


def _toml_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        text = repr(v)
        return text if ("." in text or "e" in text or "E" in text) else text + ".0"
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_scalar(v) for v in value) + "]"
    raise ConfigError("<serialize>", f"cannot serialize {type(value).__name__}")


def serialize_config(sections: dict) -> str:
    """Inverse of parse for the flat-section subset: parse(serialize(d)) == d."""
    lines = []
    for name, body in sections.items():
        lines.append(f"[{name}]")
        for key, value in body.items():
            lines.append(f"{key} = {_toml_scalar(value)}")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# problem registry


def _build_quadratic_game(params: dict, path: str) -> FiniteSumOperator:
    spec_kwargs = dict(
        n=params.pop("n", 100),
        d=params.pop("d", 30),
        eig_a=tuple(params.pop("eig_a", (0.1, 1.0))),
        eig_b=tuple(params.pop("eig_b", (0.0, 1.0))),
        eig_c=tuple(params.pop("eig_c", (0.1, 1.0))),
        interpolated=params.pop("interpolated", False),
        seed=params.pop("seed", 0),
    )
    _reject_extras(params, path)
    try:
        return problems_mod.make_quadratic_game(
            problems_mod.QuadraticGameSpec(**spec_kwargs)
        )
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def _build_weak_minty(params, path):
    n = params.pop("n", 100)
    seed = params.pop("seed", 0)
    _reject_extras(params, path)
    return problems_mod.make_weak_minty_scalar(n, seed)


def _build_global_forsaken(params, path):
    _reject_extras(params, path)
    return problems_mod.make_global_forsaken()


def _build_cubic(params, path):
    kwargs = dict(
        d=params.pop("d", 5),
        seed=params.pop("seed", 0),
        eig_a=tuple(params.pop("eig_a", (0.5, 1.0))),
        eig_b=tuple(params.pop("eig_b", (0.5, 1.0))),
        eig_c=tuple(params.pop("eig_c", (0.5, 1.0))),
    )
    _reject_extras(params, path)
    return problems_mod.make_cubic_minmax(**kwargs)


def _build_rls(params, path):
    lam = params.pop("lam", 50.0)
    n_nodes = params.pop("n_nodes", 1)
    if "csv" in params:
        a_mat, y0 = problems_mod.load_rls_csv(params.pop("csv"))
    else:
        a_mat, y0 = problems_mod.synthetic_rls_data(
            r=params.pop("r", 200), s=params.pop("s", 20),
            seed=params.pop("seed", 0),
        )
    _reject_extras(params, path)
    try:
        return problems_mod.make_robust_least_squares(a_mat, y0, lam, n_nodes)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def _build_policeman(params, path):
    kwargs = dict(n=params.pop("n", 10), d=params.pop("d", 50),
                  seed=params.pop("seed", 0))
    _reject_extras(params, path)
    return problems_mod.make_policeman_burglar(**kwargs)


def _build_sign_power(params, path):
    q = params.pop("q", 3.0)
    _reject_extras(params, path)
    try:
        return problems_mod.make_sign_power_operator(q)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def _build_client_games(params, path):
    kwargs = dict(
        n_clients=params.pop("n_clients", 20),
        m=params.pop("m", 100),
        d=params.pop("d", 20),
        eig_a=tuple(params.pop("eig_a", (0.01, 1.0))),
        eig_b=tuple(params.pop("eig_b", (0.0, 1.0))),
        eig_c=tuple(params.pop("eig_c", (0.01, 1.0))),
        seed=params.pop("seed", 0),
        interpolated=params.pop("interpolated", False),
    )
    _reject_extras(params, path)
    return fl_mod.make_client_games(**kwargs)


def _reject_extras(params: dict, path: str):
    if params:
        key = sorted(params)[0]
        raise ConfigError(f"{path}_{key}", "unknown problem parameter")


_PROBLEM_BUILDERS: dict[str, Callable] = {
    "quadratic-game": _build_quadratic_game,
    "weak-minty-scalar": _build_weak_minty,
    "global-forsaken": _build_global_forsaken,
    "cubic-minmax": _build_cubic,
    "robust-least-squares": _build_rls,
    "policeman-burglar": _build_policeman,
    "sign-power": _build_sign_power,
    "client-games": _build_client_games,
}


def list_problems() -> list[str]:
    return sorted(_PROBLEM_BUILDERS)


def list_algorithms() -> list[str]:
    return sorted(_ALGO_KEYS)


def list_policies() -> list[str]:
    return list(_POLICIES)


_METRIC_NAMES = {
    "rel_err",
    "dist_sq",
    "norm_f_sq",
    "min_norm_fhat_sq",
    "lyapunov_r_sq",
    "gamma",
    "omega",
    "gamma_scaled",
    "loops_total",
    "lyapunov_v",
    "duality_gap",
}


# ---------------------------------------------------------------------------
# shared runner plumbing


def _build_scheme(cfg: ExperimentConfig, op) -> Optional[SamplingScheme]:
    if cfg.scheme_kind == "full":
        return full_sampling()
    n = op[0].n if isinstance(op, list) else op.n
    if cfg.scheme_kind == "minibatch":
        if cfg.tau > n:
            raise ConfigError(f"{cfg.name}.tau", f"tau = {cfg.tau} exceeds n = {n}")
        return tau_minibatch(cfg.tau)
    if cfg.scheme_kind == "single-uniform":
        return single_element(np.full(n, 1.0 / n))
    if cfg.scheme_kind == "single-importance":
        l_list = op.L_list if not isinstance(op, list) else None
        if l_list is None:
            raise ConfigError(
                f"{cfg.name}.scheme",
                "importance sampling needs per-component Lipschitz metadata",
            )
        return single_element(importance_probabilities(l_list))
    raise ConfigError(f"{cfg.name}.scheme", f"unhandled scheme {cfg.scheme_kind}")


def _initial_point(cfg: ExperimentConfig, dim: int, seed: int) -> Point:
    if isinstance(cfg.x0, list):
        x0 = np.asarray(cfg.x0, dtype=float)
        if x0.shape != (dim,):
            raise ConfigError(f"{cfg.name}.x0", f"expected length {dim}")
    elif cfg.x0 == "ones":
        x0 = np.ones(dim)
    elif cfg.x0 == "zeros":
        x0 = np.zeros(dim)
    else:
        x0 = rng_stream(seed, cfg.name, "x0").standard_normal(dim)
    return cfg.x0_scale * x0


def _resolve_er(cfg, op, scheme, need_delta, need_sigma):
    """delta and sigma*^2 for policies: explicit values win, otherwise the
    closed forms; refusing to guess when neither is available."""
    params = cfg.algorithm_params
    delta = params.get("delta")
    sigma = params.get("sigma_star_sq")
    if (delta is None and need_delta) or (sigma is None and need_sigma):
        if op.L_list is None or op.x_star is None:
            raise ConfigError(
                f"{cfg.name}.delta",
                "no closed-form expected-residual constants for this problem; "
                "pass delta / sigma_star_sq explicitly",
            )
        d_closed, s_closed = er_constants(op, scheme)
        if delta is None:
            delta = d_closed
        if sigma is None:
            sigma = s_closed
    return float(delta or 0.0), float(sigma or 0.0)


class _Recorder:
    def __init__(self, cfg: ExperimentConfig, seed: int):
        self.cfg = cfg
        self.seed = seed
        self.rows: list[MetricRow] = []

    def emit(self, iteration, oracle_calls, comm_rounds, values: dict):
        for metric in self.cfg.metrics:
            if metric in values:
                self.rows.append(MetricRow(
                    self.cfg.name, self.seed, iteration, int(oracle_calls),
                    int(comm_rounds), metric, float(values[metric]),
                ))

    def status(self, iteration, oracle_calls, comm_rounds, label):
        self.rows.append(MetricRow(
            self.cfg.name, self.seed, iteration, int(oracle_calls),
            int(comm_rounds), label, 1.0,
        ))


def _should_record(cfg, k, final):
    return k % cfg.record_every == 0 or k == final


# ---------------------------------------------------------------------------
# single-operator runners


def _run_iterative(cfg: ExperimentConfig, proto: FiniteSumOperator, seed: int):
    op = proto.fresh()
    scheme = _build_scheme(cfg, op)
    rng = rng_stream(seed, cfg.name, "sampling")
    rec = _Recorder(cfg, seed)
    x0 = _initial_point(cfg, op.d, seed)
    if op.projection is not None:
        x0 = op.projection(x0)
    step, snapshot, state = _make_stepper(cfg, op, scheme, rng, x0)

    final = cfg.iterations
    k = 0
    while True:
        values = snapshot(state, k)
        if _should_record(cfg, k, final):
            rec.emit(k, op.calls, 0, values)
        if cfg.stop_metric is not None and values.get(
            cfg.stop_metric, math.inf
        ) <= cfg.stop_value:
            rec.status(k, op.calls, 0, "stopped")
            break
        if k >= final:
            break
        if cfg.max_oracle_calls is not None and op.calls >= cfg.max_oracle_calls:
            rec.status(k, op.calls, 0, "oracle_budget_exhausted")
            break
        state = step(state, k)
        k += 1
        x = _state_point(state)
        if is_diverged(x):
            rec.status(k, op.calls, 0, "diverged")
            break
        if getattr(state, "converged", False):
            values = snapshot(state, k)
            rec.emit(k, op.calls, 0, values)
            rec.status(k, op.calls, 0, "converged")
            break
    return rec.rows


def _state_point(state):
    if isinstance(state, np.ndarray):
        return state
    return state.x


def _make_stepper(cfg, op, scheme, rng, x0):
    """Returns (step(state, k) -> state', snapshot(state, k) -> dict, state0)."""
    params = cfg.algorithm_params
    algo = cfg.algorithm
    x_star = op.x_star
    r0_sq = None
    if x_star is not None:
        diff = x0 - x_star
        r0_sq = float(diff @ diff)
        if r0_sq == 0.0:
            r0_sq = None  # started at the solution; rel_err undefined

    def base_values(x):
        out = {}
        if x_star is not None:
            d = x - x_star
            out["dist_sq"] = float(d @ d)
            if r0_sq:
                out["rel_err"] = out["dist_sq"] / r0_sq
        if "norm_f_sq" in cfg.metrics or cfg.stop_metric == "norm_f_sq":
            f = op.full(x, count=False)
            out["norm_f_sq"] = float(f @ f)
        return out

    if algo == "gda":
        gamma = _require_float(cfg, "gamma")

        def step(x, k):
            return gda_step(op, x, gamma, scheme, rng)

        return step, lambda x, k: base_values(x), x0

    if algo == "eg":
        gamma = _require_float(cfg, "gamma")
        omega = float(params.get("omega", gamma))
        same = bool(params.get("same_sample", False))

        def step(x, k):
            return eg_step(op, x, gamma, omega, scheme, rng, same_sample=same)

        return step, lambda x, k: base_values(x), x0

    if algo == "speg":
        policy = _build_policy(cfg, op, scheme, r0_sq)
        track_min = (
            "min_norm_fhat_sq" in cfg.metrics
            or cfg.stop_metric == "min_norm_fhat_sq"
            or bool(params.get("track_min_fhat", False))
        )
        state0 = speg_init(op, x0, scheme, rng)
        running = {"min": math.inf}

        def step(state, k):
            gamma_k, omega_k = policy.steps(k)
            new = speg_step(op, state, gamma_k, omega_k, scheme, rng)
            if track_min:
                f = op.full(new.xhat_prev, count=False)
                running["min"] = min(running["min"], float(f @ f))
            return new

        def snapshot(state, k):
            out = base_values(state.x)
            if "lyapunov_r_sq" in cfg.metrics or cfg.stop_metric == "lyapunov_r_sq":
                d1 = state.x - x_star
                d2 = state.x - state.xhat_prev
                out["lyapunov_r_sq"] = float(d1 @ d1) + float(d2 @ d2)
            if track_min and running["min"] < math.inf:
                out["min_norm_fhat_sq"] = running["min"]
            g, w = policy.steps(k)
            out["gamma"], out["omega"] = g, w
            return out

        return step, snapshot, state0

    if algo in ("polyak-eg", "polyak-seg", "dec-polyak-seg"):
        mode = _build_gamma_mode(cfg, op)
        gamma_start = float(params.get("gamma_start", params.get("gamma", 1.0)))
        state0 = polyak_init(x0, gamma_start)

        def step(state, k):
            if algo == "polyak-eg":
                return polyak_eg_step(op, state, mode)
            if algo == "polyak-seg":
                return polyak_seg_step(op, state, scheme, mode, rng)
            return dec_polyak_seg_step(op, state, scheme, mode, rng)

        def snapshot(state, k):
            out = base_values(state.x)
            out["gamma"] = state.gamma_prev
            out["omega"] = state.omega_prev
            out["gamma_scaled"] = state.gamma_scaled
            out["loops_total"] = float(state.loops_total)
            return out

        return step, snapshot, state0

    if algo == "eg-l0l1":
        l0l1 = _build_l0l1(cfg, op)
        last = {"gamma": math.nan, "omega": math.nan}
        if (
            l0l1.regime == "weak_minty"
            and op.rho is not None
            and x_star is not None
            and weak_minty_margin(l0l1, math.sqrt(r0_sq or 0.0), op.rho) <= 0.0
        ):
            import warnings

            from .solvers_l0l1 import InfeasibleWeakMintyWarning

            warnings.warn(
                f"{cfg.name}: weak-Minty feasibility margin is nonpositive at "
                "this start point; only local behavior is guaranteed",
                InfeasibleWeakMintyWarning,
                stacklevel=2,
            )

        def step(x, k):
            x_next, info = eg_l0l1_step(op, x, l0l1, return_info=True)
            last.update(gamma=info["gamma"], omega=info["omega"])
            return x_next

        def snapshot(x, k):
            out = base_values(x)
            f = op.full(x, count=False)
            norm = float(np.linalg.norm(f))
            out.setdefault("norm_f_sq", norm * norm)
            gamma, omega = gamma_adaptive(l0l1, norm)
            out["gamma"], out["omega"] = gamma, omega
            return out

        return step, snapshot, x0

    raise ConfigError(f"{cfg.name}.algorithm", f"unhandled algorithm {algo!r}")


def _require_float(cfg, key):
    try:
        return float(cfg.algorithm_params[key])
    except KeyError:
        raise ConfigError(f"{cfg.name}.{key}", "missing required key") from None


def _build_policy(cfg, op, scheme, r0_sq) -> StepPolicy:
    params = cfg.algorithm_params
    kind = params.get("policy", "constant")
    if kind not in _POLICIES:
        raise ConfigError(f"{cfg.name}.policy", f"unknown policy {kind!r}; "
                          f"known: {_POLICIES}")
    if kind == "weak-minty":
        if "gamma" in params and "omega" in params:
            return weak_minty_policy(float(params["gamma"]), float(params["omega"]))
        L = float(params.get("L", op.L or 0.0))
        rho = float(params.get("rho", op.rho or 0.0))
        delta, sigma = _resolve_er(cfg, op, scheme, True, True)
        try:
            gamma, omega, _tau = config_weak_minty(
                L, rho, delta, sigma, r0_sq or 1.0, cfg.iterations or 1
            )
        except ValueError as exc:
            raise ConfigError(f"{cfg.name}.policy", str(exc)) from None
        return weak_minty_policy(gamma, omega)
    if kind == "constant" and "omega" in params:
        return constant_policy(float(params["omega"]))
    mu = params.get("mu", op.mu)
    L = params.get("L", op.L)
    if mu is None or L is None:
        raise ConfigError(f"{cfg.name}.mu",
                          "policy needs mu and L (metadata or explicit)")
    mu, L = float(mu), float(L)
    delta, sigma = _resolve_er(cfg, op, scheme, True, kind == "constant")
    if kind == "constant":
        return constant_policy(
            policy_constant(mu, delta, L, sigma, params.get("eps"))
        )
    if kind == "switching":
        return switching_policy(mu, delta, L)
    return horizon_policy(mu, delta, L, cfg.iterations)


def _build_gamma_mode(cfg, op) -> GammaMode:
    params = cfg.algorithm_params
    if "gamma" in params and "beta" not in params:
        return gamma_constant(float(params["gamma"]))
    beta = float(params.get("beta", 0.5))
    a = float(params.get("A", 1.0 / 3.0))
    cap = 200
    l_ref = None
    if op.L_list is not None:
        l_ref = float(np.max(op.L_list))
    elif op.L is not None:
        l_ref = float(op.L)
    if l_ref is not None:
        gamma_start = float(params.get("gamma_start", params.get("gamma", 1.0)))
        if l_ref * gamma_start / a >= 1.0:
            cap = 10 * max(1, while_loop_budget(l_ref, gamma_start, a, beta))
    try:
        return gamma_line_search(beta, a, bool(params.get("grow", False)), cap)
    except ValueError as exc:
        raise ConfigError(f"{cfg.name}.beta", str(exc)) from None


def _build_l0l1(cfg, op):
    params = cfg.algorithm_params
    regime = params.get("regime", "monotone")
    alpha = float(params.get("alpha", op.alpha if op.alpha is not None else 1.0))
    l0 = params.get("L0", op.L0)
    l1 = params.get("L1", op.L1)
    c0, c1 = params.get("c0"), params.get("c1")
    if c0 is None and (l0 is None or l1 is None):
        raise ConfigError(
            f"{cfg.name}.L0",
            "need either (L0, L1) constants or a (c0, c1) override",
        )
    try:
        return make_l0l1_config(
            regime, alpha,
            float(l0 if l0 is not None else 0.0),
            float(l1 if l1 is not None else 0.0),
            None if c0 is None else float(c0),
            None if c1 is None else float(c1),
        )
    except ValueError as exc:
        raise ConfigError(f"{cfg.name}.regime", str(exc)) from None


# ---------------------------------------------------------------------------
# federated runner


def _run_fl(cfg: ExperimentConfig, protos: list, seed: int):
    ops = [op.fresh() for op in protos]
    params = cfg.algorithm_params
    rec = _Recorder(cfg, seed)
    rng = rng_stream(seed, cfg.name, "network")
    x_star = fl_mod.solve_consensus_solution(ops)
    f_star = [op.full(x_star, count=False) for op in ops]
    dim = ops[0].d
    x0 = _initial_point(cfg, dim, seed)

    theoretical = params.get("theoretical")
    if theoretical is not None:
        if theoretical not in ("gda", "svrg"):
            raise ConfigError(f"{cfg.name}.theoretical", "expected 'gda' or 'svrg'")
        mu, ell = fl_mod.network_constants(ops, variance_reduced=theoretical == "svrg")
        resolved = fl_mod.theoretical_params(theoretical, ell, mu)
    else:
        resolved = {}
    gamma = float(params.get("gamma", resolved.get("gamma", 0.0)))
    p = float(params.get("p", resolved.get("p", 1.0)))
    q = float(params.get("q", resolved.get("q", 0.0)))
    if gamma <= 0.0:
        raise ConfigError(f"{cfg.name}.gamma",
                          "missing (pass explicitly or set theoretical mode)")
    try:
        net = fl_mod.NetworkConfig(n_clients=len(ops), gamma=gamma, p=p, q=q)
    except ValueError as exc:
        raise ConfigError(f"{cfg.name}.p", str(exc)) from None

    scheme = _build_scheme(cfg, ops) if cfg.scheme_kind != "full" else None
    sync_every = int(params.get("sync_every", math.ceil(1.0 / p)))
    states = fl_mod.init_clients(ops, x0)
    log = fl_mod.CommLog()
    r0_sq = sum(float((st.x - x_star) @ (st.x - x_star)) for st in states)
    svrg_m = 4.0 / q if q > 0.0 else 0.0

    def snapshot(states):
        out = {}
        dist = sum(float((st.x - x_star) @ (st.x - x_star)) for st in states)
        out["dist_sq"] = dist
        if r0_sq > 0.0:
            out["rel_err"] = dist / r0_sq
        if "lyapunov_v" in cfg.metrics or cfg.stop_metric == "lyapunov_v":
            sigma_sq = 0.0
            if cfg.algorithm == "proxskip-l-svrgda":
                sigma_sq = fl_mod.svrg_sigma_sq(states, x_star)
            out["lyapunov_v"] = fl_mod.lyapunov_V(
                states, x_star, f_star, gamma, p,
                M=svrg_m if cfg.algorithm == "proxskip-l-svrgda" else 0.0,
                sigma_sq=sigma_sq,
            )
        return out

    def calls():
        return sum(op.calls for op in ops)

    final = cfg.iterations
    k = 0
    while True:
        values = snapshot(states)
        if _should_record(cfg, k, final):
            rec.emit(k, calls(), log.rounds, values)
        if cfg.stop_metric is not None and values.get(
            cfg.stop_metric, math.inf
        ) <= cfg.stop_value:
            rec.status(k, calls(), log.rounds, "stopped")
            break
        if k >= final:
            break
        if cfg.algorithm == "proxskip-vip":
            states, comm = fl_mod.proxskip_vip_round(states, net, scheme, rng)
            log.record(comm)
        elif cfg.algorithm == "proxskip-l-svrgda":
            states, comm = fl_mod.proxskip_l_svrgda_round(states, net, rng)
            log.record(comm)
        elif cfg.algorithm == "local-gda":
            states = fl_mod.local_gda_round(states, sync_every, gamma, scheme, rng)
            log.record(True)
        else:
            states = fl_mod.local_eg_round(
                states, sync_every, gamma,
                params.get("omega"), scheme, rng,
            )
            log.record(True)
        k += 1
        if any(is_diverged(st.x) for st in states):
            rec.status(k, calls(), log.rounds, "diverged")
            break
    return rec.rows


# ---------------------------------------------------------------------------
# entry points


def run_experiment(cfg: ExperimentConfig) -> list[MetricRow]:
    """Execute all seeds of one experiment and return sorted rows."""
    path = f"{cfg.name}.problem"
    builder = _PROBLEM_BUILDERS[cfg.problem]
    proto = builder(dict(cfg.problem_params), path)
    rows: list[MetricRow] = []
    for seed in cfg.seeds:
        if cfg.algorithm in _FL_ALGOS:
            rows.extend(_run_fl(cfg, proto, seed))
        else:
            rows.extend(_run_iterative(cfg, proto, seed))
    rows.sort(key=MetricRow.sort_key)
    return rows


def run_config_text(text: str, only: Optional[str] = None) -> list[MetricRow]:
    rows = []
    configs = parse_config_text(text)
    if only is not None and only not in {c.name for c in configs}:
        raise ConfigError(only, "no such experiment section")
    for cfg in configs:
        if only is None or cfg.name == only:
            rows.extend(run_experiment(cfg))
    rows.sort(key=MetricRow.sort_key)
    return rows


def rows_to_csv(rows) -> str:
    lines = [CSV_HEADER]
    for row in sorted(rows, key=MetricRow.sort_key):
        lines.append(
            f"{row.experiment},{row.seed},{row.iteration},{row.oracle_calls},"
            f"{row.comm_rounds},{row.metric},{row.value!r}"
        )
    return "\n".join(lines) + "\n"


def experiment_er_constants(cfg: ExperimentConfig) -> dict:
    """Closed-form (delta, sigma*^2) for the config's problem and scheme."""
    builder = _PROBLEM_BUILDERS[cfg.problem]
    proto = builder(dict(cfg.problem_params), f"{cfg.name}.problem")
    if isinstance(proto, list):
        raise ConfigError(f"{cfg.name}.problem",
                          "expected-residual constants apply per operator, "
                          "not to a client network")
    scheme = _build_scheme(cfg, proto)
    if proto.L_list is None or proto.x_star is None:
        raise ConfigError(f"{cfg.name}.problem",
                          "no closed-form constants without L_list and x*")
    delta, sigma = er_constants(proto, scheme)
    return {"experiment": cfg.name, "delta": delta, "sigma_star_sq": sigma}


def verify_theory(suite: str = "all"):
    """Re-export of the verification suites; see :mod:`egvip.verify`."""
    from .verify import verify_theory as _impl

    return _impl(suite)
