"""Polyak-type extragradient methods.

The common trick: after the extrapolation x_hat = x - gamma F(x), the update
step length is chosen by the Polyak ratio omega = <F(x_hat), x - x_hat> /
||F(x_hat)||^2, which minimizes the distance bound to the solution along the
direction F(x_hat).  The analysis only needs the extrapolation step to keep
F(x_hat) close to F(x) in the relative sense ||F(x_hat) - F(x)|| <= A ||F(x)||
(the critical condition), which either holds automatically for gamma <= A/L or
is enforced by a backtracking line search whose total cost over a whole run is
bounded once and for all.

Variants: deterministic PolyakEG(-LS), same-sample stochastic PolyakSEG(-LS),
and the decreasing-step DecPolyakSEG(-LS) for non-interpolated noise.  The
decreasing variant tracks u_k = gamma_k * c_k with c_k = sqrt(k+1); u is only
ever multiplied by beta or kept, so the recorded schedule gamma_k * c_k is
non-increasing exactly, not merely up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .core import CONVERGED_NORM, FiniteSumOperator, Point
from .sampling import SamplingScheme, draw_indices

__all__ = [
    "LineSearchFailure",
    "PolyakState",
    "GammaMode",
    "gamma_constant",
    "gamma_line_search",
    "polyak_init",
    "polyak_update_step",
    "critical_condition",
    "line_search_gamma",
    "while_loop_budget",
    "polyak_eg_step",
    "polyak_seg_step",
    "dec_polyak_seg_step",
]


class LineSearchFailure(RuntimeError):
    """Backtracking exceeded its hard cap (non-Lipschitz or broken operator)."""


@dataclass
class PolyakState:
    """Mutable-by-replacement run state shared by all Polyak variants.

    ``gamma_scaled`` is gamma_prev * c_{k-1}, maintained only by the
    decreasing variant; ``loops_total`` accumulates line-search shrinks over
    the whole run so the budget theorem can be asserted exactly.
    ``grow_trials`` counts the optional expansion probes separately, since the
    budget only covers shrinks.
    """

    x: Point
    gamma_prev: float
    omega_prev: float = math.inf
    k: int = 0
    loops_total: int = 0
    grow_trials: int = 0
    gamma_scaled: float = 0.0
    converged: bool = False


def polyak_init(x0: Point, gamma_start: float) -> PolyakState:
    if not gamma_start > 0.0:
        raise ValueError("gamma_start must be positive")
    x0 = np.asarray(x0, dtype=float)
    # c_{-1} = 1, so the scaled schedule starts at gamma_start itself.
    return PolyakState(x=x0, gamma_prev=gamma_start, gamma_scaled=gamma_start)


@dataclass(frozen=True)
class GammaMode:
    """Extrapolation-step rule: fixed gamma, or backtracking with (beta, A).

    ``cap`` bounds the total shrinks a single search may perform; runners set
    it to 10x the theoretical budget when L is known.  ``grow`` enables the
    optional pre-expansion of the warm start while the condition still holds.
    """

    kind: str
    gamma: float = 0.0
    beta: float = 0.5
    A: float = 1.0 / 3.0
    grow: bool = False
    cap: int = 200


def gamma_constant(gamma: float) -> GammaMode:
    if not gamma > 0.0:
        raise ValueError("gamma must be positive")
    return GammaMode(kind="constant", gamma=gamma)


def gamma_line_search(
    beta: float, A: float, grow: bool = False, cap: int = 200
) -> GammaMode:
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must be in (0, 1)")
    if not 0.0 < A <= 1.0:
        raise ValueError("A must be in (0, 1]")
    return GammaMode(kind="line_search", beta=beta, A=A, grow=grow, cap=cap)


# ---------------------------------------------------------------------------
# building blocks


def polyak_update_step(f_hat: Point, x: Point, x_hat: Point) -> float:
    """omega = <F(x_hat), x - x_hat> / ||F(x_hat)||^2."""
    denom = float(f_hat @ f_hat)
    if denom == 0.0:
        raise ZeroDivisionError("F(x_hat) = 0: caller should stop as converged")
    return float(f_hat @ (x - x_hat)) / denom


def critical_condition(f_x: Point, f_hat: Point, A: float) -> bool:
    """||F(x_hat) - F(x)|| <= A ||F(x)||."""
    if not 0.0 < A <= 1.0:
        raise ValueError("A must be in (0, 1]")
    return float(np.linalg.norm(f_hat - f_x)) <= A * float(np.linalg.norm(f_x))


def while_loop_budget(L: float, gamma_start: float, A: float, beta: float) -> int:
    """floor(log(L gamma_start / A) / log(1/beta)) + 1, the run-wide bound on
    shrink iterations for an L-Lipschitz operator."""
    if not (L > 0.0 and gamma_start > 0.0 and A > 0.0):
        raise ValueError("inputs must be positive")
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must be in (0, 1)")
    return math.floor(math.log(L * gamma_start / A) / math.log(1.0 / beta)) + 1


def _backtrack(
    g: Callable[[Point], Point],
    x: Point,
    g_x: Point,
    gamma_start: float,
    beta: float,
    A: float,
    cap: int,
) -> tuple[float, Point, Point, int]:
    """Shrink gamma by beta until the critical condition holds.

    Returns (gamma, x_hat, g(x_hat), shrink count); raises LineSearchFailure
    past the cap.  The accepted evaluation g(x_hat) is returned so callers can
    reuse it for the Polyak ratio instead of paying a second oracle call.
    """
    norm_x = float(np.linalg.norm(g_x))
    gamma = gamma_start
    loops = 0
    while True:
        xh = x - gamma * g_x
        g_xh = g(xh)
        if float(np.linalg.norm(g_xh - g_x)) <= A * norm_x:
            return gamma, xh, g_xh, loops
        loops += 1
        if loops > cap:
            raise LineSearchFailure(
                f"critical condition still failing after {cap} shrinks "
                f"(gamma down to {gamma:.3e})"
            )
        gamma *= beta


def line_search_gamma(
    op_or_batch,
    x: Point,
    gamma_start: float,
    beta: float,
    A: float,
    cap: int = 200,
) -> tuple[float, Point, int]:
    """Public backtracking interface: returns (gamma, x_hat, shrink count).

    ``op_or_batch`` is either a FiniteSumOperator (full evaluations) or a
    callable z -> F_S(z) for an already-drawn minibatch.
    """
    if not gamma_start > 0.0:
        raise ValueError("gamma_start must be positive")
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must be in (0, 1)")
    if not 0.0 < A <= 1.0:
        raise ValueError("A must be in (0, 1]")
    g = op_or_batch.full if isinstance(op_or_batch, FiniteSumOperator) else op_or_batch
    gamma, xh, _, loops = _backtrack(g, x, g(x), gamma_start, beta, A, cap)
    return gamma, xh, loops


def _grow(
    g: Callable[[Point], Point],
    x: Point,
    g_x: Point,
    gamma: float,
    beta: float,
    A: float,
    cap: int,
) -> tuple[float, int]:
    """Optional warm-start expansion: multiply gamma by 1/beta while the
    condition keeps holding, then back off one factor."""
    norm_x = float(np.linalg.norm(g_x))
    trials = 0
    while trials < cap:
        cand = gamma / beta
        xh = x - cand * g_x
        trials += 1
        if float(np.linalg.norm(g(xh) - g_x)) > A * norm_x:
            break
        gamma = cand
    return gamma, trials


# ---------------------------------------------------------------------------
# steppers


def _polyak_core(
    g: Callable[[Point], Point],
    state: PolyakState,
    mode: GammaMode,
    warm_start: float,
) -> tuple[Optional[tuple[Point, float, Point]], float, int, int]:
    """Shared extrapolation logic.

    Returns ((x_hat, gamma, g_xhat) or None if converged at x, the gamma
    actually used, shrink count, grow-trial count).
    """
    g_x = g(state.x)
    if float(np.linalg.norm(g_x)) <= CONVERGED_NORM:
        return None, warm_start, 0, 0
    if mode.kind == "constant":
        gamma = mode.gamma if warm_start <= 0.0 else warm_start
        xh = state.x - gamma * g_x
        return (xh, gamma, g(xh)), gamma, 0, 0
    if mode.kind != "line_search":
        raise ValueError(f"unknown gamma mode {mode.kind!r}")
    grow_trials = 0
    gamma0 = warm_start
    if mode.grow:
        gamma0, grow_trials = _grow(g, state.x, g_x, gamma0, mode.beta, mode.A, mode.cap)
    gamma, xh, g_xh, loops = _backtrack(
        g, state.x, g_x, gamma0, mode.beta, mode.A, mode.cap
    )
    return (xh, gamma, g_xh), gamma, loops, grow_trials


def _finish(state: PolyakState, result, gamma, loops, grow_trials, omega_clip):
    if result is None:
        return replace(state, converged=True)
    xh, gamma, g_xh = result
    if float(np.linalg.norm(g_xh)) <= CONVERGED_NORM:
        return replace(
            state,
            x=xh,
            gamma_prev=gamma,
            loops_total=state.loops_total + loops,
            grow_trials=state.grow_trials + grow_trials,
            converged=True,
        )
    omega = polyak_update_step(g_xh, state.x, xh)
    if omega_clip:
        omega = min(omega, state.omega_prev)
    x_next = state.x - omega * g_xh
    return replace(
        state,
        x=x_next,
        gamma_prev=gamma,
        omega_prev=omega,
        k=state.k + 1,
        loops_total=state.loops_total + loops,
        grow_trials=state.grow_trials + grow_trials,
    )


def polyak_eg_step(
    op: FiniteSumOperator, state: PolyakState, mode: GammaMode
) -> PolyakState:
    """Deterministic PolyakEG / PolyakEG-LS step.

    Line-search mode warm-starts from gamma_prev; constant mode ignores the
    state's gamma and uses the mode's.  A vanishing F(x) or F(x_hat) flips the
    converged flag instead of dividing by zero.
    """
    warm = state.gamma_prev if mode.kind == "line_search" else mode.gamma
    result, gamma, loops, grow = _polyak_core(op.full, state, mode, warm)
    return _finish(state, result, gamma, loops, grow, omega_clip=False)


def _batch_evaluator(op, scheme, rng):
    if scheme is None or scheme.kind == "full":
        return op.full
    idx, coeffs = draw_indices(scheme, rng, op.n)
    return lambda z: op.weighted(idx, coeffs, z)


def polyak_seg_step(
    op: FiniteSumOperator,
    state: PolyakState,
    scheme: Optional[SamplingScheme],
    mode: GammaMode,
    rng: Optional[np.random.Generator] = None,
) -> PolyakState:
    """Same-sample stochastic step: one minibatch S_k is drawn and used for
    the extrapolation, the critical condition, and the Polyak ratio."""
    g = _batch_evaluator(op, scheme, rng)
    warm = state.gamma_prev if mode.kind == "line_search" else mode.gamma
    result, gamma, loops, grow = _polyak_core(g, state, mode, warm)
    return _finish(state, result, gamma, loops, grow, omega_clip=False)


def _c_default(k: int) -> float:
    return 1.0 if k < 0 else math.sqrt(k + 1.0)


def dec_polyak_seg_step(
    op: FiniteSumOperator,
    state: PolyakState,
    scheme: Optional[SamplingScheme],
    mode: GammaMode,
    rng: Optional[np.random.Generator] = None,
    c_fn: Callable[[int], float] = _c_default,
) -> PolyakState:
    """Decreasing-step variant: the warm start is capped at
    (c_{k-1}/c_k) * gamma_{k-1} before any backtracking, and the update step
    is clipped by its own previous value, so both schedules shrink by
    construction.

    The cap is applied through the scaled variable u = gamma * c: constant
    mode keeps u, backtracking multiplies it by beta per shrink, hence
    gamma_k * c_k is non-increasing exactly in floating point.
    """
    g = _batch_evaluator(op, scheme, rng)
    u_prev = state.gamma_scaled if state.gamma_scaled > 0.0 else state.gamma_prev
    c_k = c_fn(state.k)
    warm = u_prev / c_k
    result, gamma, loops, grow = _polyak_core(g, state, mode, warm)
    new = _finish(state, result, gamma, loops, grow, omega_clip=True)
    if result is not None:
        new = replace(new, gamma_scaled=u_prev * mode.beta**loops)
    return new
