"""Adaptive extragradient steps under generalized (L0, L1) smoothness.

An operator is alpha-symmetric (L0, L1)-Lipschitz when the local Lipschitz
modulus grows like L0 + L1 ||F||^alpha.  The step-size rules here exploit
that: gamma is inversely proportional to the current gradient norm raised to
alpha, so steps grow as the method approaches a solution instead of being
pinned to a global worst-case constant that may not even exist (the cubic
problems have no finite L).

The numeric constants in the step rules are roots of small transcendental
equations.  They are re-derived by bisection at import time and cross-checked
against their rounded printed values, so a transcription slip fails loudly
rather than silently changing every experiment.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import FiniteSumOperator, Point, rng_stream

__all__ = [
    "NU_EQUATIONS",
    "NU_VALUES",
    "FitDegenerateWarning",
    "InfeasibleWeakMintyWarning",
    "L0L1Config",
    "solve_nu",
    "k_constants",
    "make_l0l1_config",
    "gamma_adaptive",
    "eg_l0l1_step",
    "weak_minty_margin",
    "spectral_norm",
    "numerical_jacobian",
    "fit_l0l1",
]


class FitDegenerateWarning(UserWarning):
    """All sample points had the same gradient norm; the slope is unidentifiable."""


class InfeasibleWeakMintyWarning(UserWarning):
    """The weak-Minty feasibility margin is nonpositive for this start point."""


# ---------------------------------------------------------------------------
# transcendental roots

# Residual functions, their bisection bracket [1e-6, 1], and the rounded
# values printed alongside the step-size table.  Keys A-D follow the order the
# equations appear; semantic aliases map regimes onto them.
NU_EQUATIONS: dict[str, Callable[[float], float]] = {
    "A": lambda v: 1.0 - 2.0 * v - v * v * math.exp(2.0 * v),
    "B": lambda v: 1.0 - 4.0 * v - 2.0 * v * v * math.exp(2.0 * v),
    "C": lambda v: v * math.exp(v) - 1.0 / math.sqrt(2.0),
    "D": lambda v: v * math.exp(v) - 1.0,
}

_NU_ALIASES = {
    "strong_alpha1": "A",
    "strong_alpha1_refined": "B",
    "monotone_alpha1": "C",
    "weak_minty_alpha1": "D",
}

_NU_PRINTED = {"A": 0.363, "B": 0.21, "C": 0.45, "D": 0.567}


def solve_nu(equation: str, tol: float = 1e-14) -> float:
    """Bisection root of the named equation on [1e-6, 1].

    All four residuals are strictly decreasing on the bracket with a sign
    change, so the root is unique there.
    """
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    key = _NU_ALIASES.get(equation, equation)
    try:
        resid = NU_EQUATIONS[key]
    except KeyError:
        raise ValueError(f"unknown equation {equation!r}") from None
    lo, hi = 1e-6, 1.0
    f_lo, f_hi = resid(lo), resid(hi)
    if f_lo * f_hi > 0.0:
        raise RuntimeError(f"no sign change for equation {key} on [{lo}, {hi}]")
    while hi - lo > 1e-16:
        mid = 0.5 * (lo + hi)
        f_mid = resid(mid)
        if abs(f_mid) < tol:
            return mid
        if f_lo * f_mid <= 0.0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def _startup_nu_table() -> dict[str, float]:
    table = {key: solve_nu(key, tol=1e-14) for key in NU_EQUATIONS}
    # Golden-ratio conjugate: root of 1 - nu - nu^2 = 0, used by the
    # strongly monotone fractional-alpha step (printed as 0.61).
    table["strong_frac"] = (math.sqrt(5.0) - 1.0) / 2.0
    printed = dict(_NU_PRINTED, strong_frac=0.618)
    for key, target in printed.items():
        if abs(table[key] - target) > 0.005:
            raise RuntimeError(
                f"nu constant drift: equation {key} gave {table[key]:.6f}, "
                f"expected about {target}"
            )
    return table


NU_VALUES = _startup_nu_table()


# ---------------------------------------------------------------------------
# fractional-alpha constants


def k_constants(L0: float, L1: float, alpha: float) -> tuple[float, float, float]:
    """(K0, K1, K2) of the equivalent plain-Lipschitz-style bound for
    alpha in (0, 1)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1); the alpha = 1 path has no K form")
    if L0 < 0.0 or L1 < 0.0:
        raise ValueError("L0 and L1 must be nonnegative")
    pow2 = 2.0 ** (alpha * alpha / (1.0 - alpha))
    k0 = L0 * (pow2 + 1.0)
    k1 = L1 * pow2
    k2 = (
        L1 ** (1.0 / (1.0 - alpha))
        * pow2
        * 3.0**alpha
        * (1.0 - alpha) ** (alpha / (1.0 - alpha))
    )
    return k0, k1, k2


# ---------------------------------------------------------------------------
# configuration and step sizes

_REGIMES = ("strongly_monotone", "monotone", "weak_minty")


@dataclass(frozen=True)
class L0L1Config:
    """Resolved step-size configuration for one run.

    ``nu`` is the transcendental constant the regime calls for (None when the
    formula has none); ``k0/k1/k2`` are populated only for alpha < 1.  Setting
    ``c0``/``c1`` switches to the plain empirical rule 1/(c0 + c1 ||F||^alpha)
    used by the experiment grid searches.
    """

    regime: str
    alpha: float
    L0: float
    L1: float
    nu: Optional[float] = None
    k0: float = 0.0
    k1: float = 0.0
    k2: float = 0.0
    c0: Optional[float] = None
    c1: Optional[float] = None


def make_l0l1_config(
    regime: str,
    alpha: float,
    L0: float,
    L1: float,
    c0: Optional[float] = None,
    c1: Optional[float] = None,
) -> L0L1Config:
    if regime not in _REGIMES:
        raise ValueError(f"regime must be one of {_REGIMES}, got {regime!r}")
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must be in (0, 1]")
    if L0 < 0.0 or L1 < 0.0:
        raise ValueError("L0 and L1 must be nonnegative")
    if (c0 is None) != (c1 is None):
        raise ValueError("c0 and c1 must be overridden together")
    nu = None
    k0 = k1 = k2 = 0.0
    if alpha == 1.0:
        nu = NU_VALUES[
            {
                "strongly_monotone": "A",
                "monotone": "C",
                "weak_minty": "D",
            }[regime]
        ]
    else:
        k0, k1, k2 = k_constants(L0, L1, alpha)
        if regime == "strongly_monotone":
            nu = NU_VALUES["strong_frac"]
    return L0L1Config(
        regime=regime, alpha=alpha, L0=L0, L1=L1, nu=nu, k0=k0, k1=k1, k2=k2,
        c0=c0, c1=c1,
    )


def gamma_adaptive(config: L0L1Config, f_norm: float) -> tuple[float, float]:
    """Step sizes (gamma, omega) as a function of the current ||F(x)||.

    omega equals gamma except in the weak-Minty regime, where the update step
    is halved.  gamma is non-increasing in ||F||, so steps lengthen as the
    iterates approach a solution.
    """
    if f_norm < 0.0:
        raise ValueError("f_norm must be nonnegative")
    a = config.alpha
    if config.c0 is not None:
        gamma = 1.0 / (config.c0 + config.c1 * f_norm**a)
    elif a == 1.0:
        gamma = config.nu / (config.L0 + config.L1 * f_norm)
    elif config.regime == "strongly_monotone":
        gamma = config.nu / (
            config.k0 * 2.0
            + (2.0 * config.k1 + 2.0 ** (1.0 - a) * config.k2 ** (1.0 - a)) * f_norm**a
        )
    else:
        # Monotone and weak-Minty fractional rows share the same gamma.
        gamma = 1.0 / (
            2.0 * math.sqrt(2.0) * config.k0
            + (
                2.0 * math.sqrt(2.0) * config.k1
                + 2.0 ** (1.5 * (1.0 - a)) * config.k2 ** (1.0 - a)
            )
            * f_norm**a
        )
    omega = gamma / 2.0 if config.regime == "weak_minty" else gamma
    return gamma, omega


def weak_minty_margin(config: L0L1Config, r0: float, rho: float) -> float:
    """Feasibility margin of the weak-Minty step rule at start radius r0.

    Positive means the global rate applies; nonpositive triggers a warning in
    the runners but the iteration itself is still well defined.
    """
    if config.alpha == 1.0:
        worst = config.L0 * (1.0 + config.L1 * r0 * math.exp(config.L1 * r0))
        return config.nu / worst - 4.0 * rho
    a = config.alpha
    f_cap = (config.k0 + config.k2 * r0 ** (a / (1.0 - a))) ** a * r0**a
    denom = 2.0 * math.sqrt(2.0) * config.k0 + 2.0 * math.sqrt(2.0) * (
        config.k1 + 2.0 ** (-1.5) * config.k2 ** (1.0 - a)
    ) * f_cap
    return 1.0 / denom - 4.0 * rho


def eg_l0l1_step(
    op: FiniteSumOperator,
    x: Point,
    config: L0L1Config,
    return_info: bool = False,
):
    """Extragradient step with the adaptive (L0, L1) step size evaluated at
    ||F(x)||.  Two full oracle evaluations per call."""
    f_x = op.full(x)
    gamma, omega = gamma_adaptive(config, float(np.linalg.norm(f_x)))
    xh = x - gamma * f_x
    if op.projection is not None:
        xh = op.projection(xh)
    x_next = x - omega * op.full(xh)
    if op.projection is not None:
        x_next = op.projection(x_next)
    if return_info:
        return x_next, {"gamma": gamma, "omega": omega,
                        "norm_f": float(np.linalg.norm(f_x))}
    return x_next


# ---------------------------------------------------------------------------
# Jacobian-norm verification


def spectral_norm(mat: np.ndarray, tol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Largest singular value via power iteration on M^T M."""
    m = np.asarray(mat, dtype=float)
    if m.size == 0:
        return 0.0
    gram_mul = lambda v: m.T @ (m @ v)
    v = rng_stream(0, "power-iteration").standard_normal(m.shape[1])
    norm_v = np.linalg.norm(v)
    if norm_v == 0.0:
        return 0.0
    v /= norm_v
    lam = 0.0
    for _ in range(max_iter):
        w = gram_mul(v)
        lam_new = float(v @ w)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return math.sqrt(max(lam_new, 0.0))
        lam = lam_new
    return math.sqrt(max(lam, 0.0))


def numerical_jacobian(
    f: Callable[[Point], Point], x: Point, h: float = 1e-6
) -> np.ndarray:
    """Central-difference Jacobian, one column per coordinate."""
    x = np.asarray(x, dtype=float)
    d = x.size
    cols = []
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        cols.append((f(x + e) - f(x - e)) / (2.0 * h))
    return np.stack(cols, axis=1)


def fit_l0l1(
    op: FiniteSumOperator,
    sample_points,
    alpha: float,
) -> tuple[float, float, float]:
    """Fit ||J(x)|| <= L0 + L1 ||F(x)||^alpha over the sample points.

    Least-squares slope clipped to be nonnegative, then the intercept is
    lifted so the bound holds at every sample; the returned max_violation is
    the largest remaining positive residual (zero up to rounding by
    construction).  Uses the analytic Jacobian when the operator has one,
    central differences otherwise; none of the evaluations touch the oracle
    counter.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must be in (0, 1]")
    points = [np.asarray(p, dtype=float) for p in sample_points]
    if len(points) < 10:
        raise ValueError("need at least 10 sample points")
    full = lambda z: op.full(z, count=False)
    jac = op.jacobian if op.jacobian is not None else (
        lambda z: numerical_jacobian(full, z)
    )
    norms_j = np.array([spectral_norm(jac(p)) for p in points])
    norms_f = np.array([float(np.linalg.norm(full(p))) ** alpha for p in points])

    t_var = float(np.var(norms_f))
    scale = max(float(np.mean(norms_f)) ** 2, 1.0)
    if t_var <= 1e-20 * scale:
        warnings.warn(
            "all sample points have the same gradient norm; returning L1 = 0",
            FitDegenerateWarning,
            stacklevel=2,
        )
        slope = 0.0
    else:
        slope = float(np.cov(norms_f, norms_j, bias=True)[0, 1]) / t_var
    l1 = max(slope, 0.0)
    l0 = float(np.max(norms_j - l1 * norms_f))
    violation = float(np.max(norms_j - (l0 + l1 * norms_f)))
    return l0, l1, max(violation, 0.0)
