"""Extragradient-family steppers and the single-call stochastic variant.

The deterministic pieces are the classical GDA and extragradient updates.  The
stochastic workhorse is SPEG: a past-extragradient scheme that reuses the last
extrapolation-point evaluation, so each iteration costs one sampled oracle
call instead of the two that same-sample SEG pays.  Step-size policies for the
quasi-strongly monotone regime (constant, switching, horizon-based) and the
weak-Minty configuration helper live here as well.

Steppers never allocate randomness themselves; callers pass a Generator so
runs stay reproducible under any interleaving.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import FiniteSumOperator, Point
from .sampling import SamplingScheme, draw_indices

__all__ = [
    "SpegState",
    "StepPolicy",
    "gda_step",
    "eg_step",
    "speg_init",
    "speg_step",
    "policy_constant",
    "policy_switching",
    "policy_horizon",
    "config_weak_minty",
    "constant_policy",
    "switching_policy",
    "horizon_policy",
    "weak_minty_policy",
    "custom_policy",
]


def _maybe_project(op: FiniteSumOperator, x: Point) -> Point:
    return x if op.projection is None else op.projection(x)


def _sampled(op, scheme, rng, x):
    if scheme is None or scheme.kind == "full":
        return op.full(x)
    idx, coeffs = draw_indices(scheme, rng, op.n)
    return op.weighted(idx, coeffs, x)


# ---------------------------------------------------------------------------
# deterministic / generic steppers


def gda_step(
    op: FiniteSumOperator,
    x: Point,
    omega: float,
    scheme: Optional[SamplingScheme] = None,
    rng: Optional[np.random.Generator] = None,
) -> Point:
    """Plain (stochastic) gradient descent-ascent: x - omega * g(x).

    Kept mostly as a baseline; on bilinear games this recursion expands
    ||x||^2 by (1 + omega^2 L^2) per step no matter how small omega is.
    """
    if not omega > 0.0:
        raise ValueError("omega must be positive")
    return _maybe_project(op, x - omega * _sampled(op, scheme, rng, x))


def eg_step(
    op: FiniteSumOperator,
    x: Point,
    gamma: float,
    omega: float,
    scheme: Optional[SamplingScheme] = None,
    rng: Optional[np.random.Generator] = None,
    same_sample: bool = False,
    return_extrapolation: bool = False,
):
    """One extragradient step: x_hat = x - gamma*g1(x); x' = x - omega*g2(x_hat).

    With ``same_sample=True`` both evaluations reuse one sampling draw (the
    same-sample SEG estimator); otherwise the second draw is independent.
    Deterministic when the scheme is None or full.  Returns x', or the pair
    (x', x_hat) when ``return_extrapolation`` is set.
    """
    if not (gamma > 0.0 and omega > 0.0):
        raise ValueError("step sizes must be positive")
    if scheme is None or scheme.kind == "full":
        xh = _maybe_project(op, x - gamma * op.full(x))
        x_next = _maybe_project(op, x - omega * op.full(xh))
    else:
        idx, coeffs = draw_indices(scheme, rng, op.n)
        xh = _maybe_project(op, x - gamma * op.weighted(idx, coeffs, x))
        if not same_sample:
            idx, coeffs = draw_indices(scheme, rng, op.n)
        x_next = _maybe_project(op, x - omega * op.weighted(idx, coeffs, xh))
    if return_extrapolation:
        return x_next, xh
    return x_next


# ---------------------------------------------------------------------------
# SPEG


@dataclass
class SpegState:
    """Iterate, previous extrapolation point, and the cached evaluation there.

    ``g_prev`` is always the most recent sampled evaluation at ``xhat_prev``;
    reusing it is what makes the method single-call.
    """

    x: Point
    xhat_prev: Point
    g_prev: Point
    k: int = 0


def speg_init(
    op: FiniteSumOperator,
    x0: Point,
    scheme: Optional[SamplingScheme] = None,
    rng: Optional[np.random.Generator] = None,
) -> SpegState:
    """Bootstrap with the convention x_hat_{-1} = x_0.

    Costs one sampled evaluation (at x_0) that is counted like any other
    oracle call; every subsequent iteration performs exactly one more.
    """
    x0 = np.asarray(x0, dtype=float)
    return SpegState(x=x0, xhat_prev=x0, g_prev=_sampled(op, scheme, rng, x0), k=0)


def speg_step(
    op: FiniteSumOperator,
    state: SpegState,
    gamma_k: float,
    omega_k: float,
    scheme: Optional[SamplingScheme] = None,
    rng: Optional[np.random.Generator] = None,
) -> SpegState:
    """x_hat_k = x_k - gamma_k * F_{v_{k-1}}(x_hat_{k-1});
    x_{k+1} = x_k - omega_k * F_{v_k}(x_hat_k)."""
    if not (gamma_k > 0.0 and omega_k > 0.0):
        raise ValueError("step sizes must be positive")
    xh = _maybe_project(op, state.x - gamma_k * state.g_prev)
    g = _sampled(op, scheme, rng, xh)
    x_next = _maybe_project(op, state.x - omega_k * g)
    return SpegState(x=x_next, xhat_prev=xh, g_prev=g, k=state.k + 1)


# ---------------------------------------------------------------------------
# step-size policies (quasi-strongly monotone regime uses gamma_k = omega_k)


def policy_constant(
    mu: float,
    delta: float,
    L: float,
    sigma_star_sq: float = 0.0,
    eps: Optional[float] = None,
) -> float:
    """Constant step omega = min{mu/(18 delta), 1/(4L), eps*mu/(48 sigma*^2)}.

    Terms whose denominator is zero are dropped from the min; the noise term
    also drops when no target accuracy eps is supplied (the run then settles
    in a noise-dominated neighborhood instead of at a prescribed one).
    """
    if not (mu > 0.0 and L > 0.0):
        raise ValueError("mu and L must be positive")
    if delta < 0.0 or sigma_star_sq < 0.0:
        raise ValueError("delta and sigma*^2 must be nonnegative")
    terms = [1.0 / (4.0 * L)]
    if delta > 0.0:
        terms.append(mu / (18.0 * delta))
    if sigma_star_sq > 0.0 and eps is not None:
        if not eps > 0.0:
            raise ValueError("eps must be positive")
        terms.append(eps * mu / (48.0 * sigma_star_sq))
    return min(terms)


def _omega_bar(mu: float, delta: float, L: float) -> float:
    if not (mu > 0.0 and L > 0.0):
        raise ValueError("mu and L must be positive")
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    if delta > 0.0:
        return min(1.0 / (4.0 * L), mu / (18.0 * delta))
    return 1.0 / (4.0 * L)


def policy_switching(k: int, mu: float, delta: float, L: float) -> float:
    """Constant omega-bar up to k* = ceil(4/(mu omega-bar)) inclusive, then the
    decreasing tail (2k+1)/(k+1)^2 * 2/mu."""
    ob = _omega_bar(mu, delta, L)
    k_star = math.ceil(4.0 / (mu * ob))
    if k <= k_star:
        return ob
    return (2.0 * k + 1.0) / (k + 1.0) ** 2 * 2.0 / mu


def policy_horizon(k: int, K: int, mu: float, delta: float, L: float) -> float:
    """Horizon-aware schedule: constant when the budget K is short or during
    the first half, harmonic decay afterwards."""
    ob = _omega_bar(mu, delta, L)
    if K <= 2.0 / (mu * ob):
        return ob
    k0 = math.ceil(K / 2.0)
    if k <= k0:
        return ob
    return 2.0 / (2.0 / ob + (mu / 2.0) * (k - k0))


def config_weak_minty(
    L: float,
    rho: float,
    delta: float = 0.0,
    sigma_star_sq: float = 0.0,
    r0_sq: float = 1.0,
    K: int = 1,
    gamma: Optional[float] = None,
) -> tuple[float, float, int]:
    """Feasible (gamma, omega, batch size tau) for the weak-Minty regime.

    Requires rho < 1/(2L).  gamma defaults to the midpoint of its open
    interval (max{2 rho, 1/(2L)}, 1/L); omega is 90% of its upper bound
    min{gamma - 2 rho, 1/(4L) - gamma/4}; tau is the ceiling of the variance
    bound, which collapses to 1 in the deterministic case.
    """
    if not L > 0.0:
        raise ValueError("L must be positive")
    if rho < 0.0 or delta < 0.0 or sigma_star_sq < 0.0:
        raise ValueError("rho, delta, sigma*^2 must be nonnegative")
    if rho >= 1.0 / (2.0 * L):
        raise ValueError(
            f"infeasible: rho = {rho} must be below 1/(2L) = {1.0 / (2.0 * L)}"
        )
    lo = max(2.0 * rho, 1.0 / (2.0 * L))
    hi = 1.0 / L
    if gamma is None:
        gamma = 0.5 * (lo + hi)
    elif not lo < gamma < hi:
        raise ValueError(f"gamma must lie in ({lo}, {hi})")
    omega = 0.9 * min(gamma - 2.0 * rho, 1.0 / (4.0 * L) - gamma / 4.0)
    terms = [1.0]
    if delta > 0.0:
        terms.append(32.0 * delta / ((1.0 - L * gamma) * L**3 * omega))
        terms.append(48.0 * omega * gamma * delta * (K - 1) / (1.0 - L * gamma) ** 2)
    if sigma_star_sq > 0.0:
        if not r0_sq > 0.0:
            raise ValueError("r0_sq must be positive when sigma*^2 > 0")
        terms.append(
            2.0 * omega * gamma * sigma_star_sq * (K - 1) / ((1.0 - L * gamma) * r0_sq)
        )
    return gamma, omega, math.ceil(max(terms))


# ---------------------------------------------------------------------------
# policy objects for the harness


@dataclass(frozen=True)
class StepPolicy:
    """Step-size rule consumed by the runners: k -> (gamma_k, omega_k).

    The quasi-strongly monotone policies all use gamma_k = omega_k; only the
    weak-Minty configuration separates the two.
    """

    kind: str
    omega: float = 0.0
    gamma: float = 0.0
    mu: float = 0.0
    delta: float = 0.0
    L: float = 0.0
    horizon: int = 0
    schedule: Optional[Callable[[int], tuple[float, float]]] = None

    def steps(self, k: int) -> tuple[float, float]:
        if self.kind == "constant":
            return self.omega, self.omega
        if self.kind == "switching":
            w = policy_switching(k, self.mu, self.delta, self.L)
            return w, w
        if self.kind == "horizon":
            w = policy_horizon(k, self.horizon, self.mu, self.delta, self.L)
            return w, w
        if self.kind == "weak_minty":
            return self.gamma, self.omega
        if self.kind == "custom":
            return self.schedule(k)
        raise ValueError(f"unknown policy kind {self.kind!r}")


def constant_policy(omega: float) -> StepPolicy:
    if not omega > 0.0:
        raise ValueError("omega must be positive")
    return StepPolicy(kind="constant", omega=omega)


def switching_policy(mu: float, delta: float, L: float) -> StepPolicy:
    _omega_bar(mu, delta, L)
    return StepPolicy(kind="switching", mu=mu, delta=delta, L=L)


def horizon_policy(mu: float, delta: float, L: float, K: int) -> StepPolicy:
    _omega_bar(mu, delta, L)
    if K < 1:
        raise ValueError("horizon must be >= 1")
    return StepPolicy(kind="horizon", mu=mu, delta=delta, L=L, horizon=K)


def weak_minty_policy(gamma: float, omega: float) -> StepPolicy:
    if not (gamma > 0.0 and omega > 0.0):
        raise ValueError("step sizes must be positive")
    if not omega < gamma:
        raise ValueError("weak-Minty update step must be smaller than gamma")
    return StepPolicy(kind="weak_minty", gamma=gamma, omega=omega)


def custom_policy(schedule: Callable[[int], tuple[float, float]]) -> StepPolicy:
    return StepPolicy(kind="custom", schedule=schedule)
