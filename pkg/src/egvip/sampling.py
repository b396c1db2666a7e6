"""Sampling schemes and expected-residual constants.

A sampling vector v in R^n has E[v_i] = 1 and induces the estimator
g(x) = (1/n) sum_i v_i F_i(x). Three schemes are supported:

* full:            v = (1, ..., 1), the deterministic mean
* tau-minibatch:   v = (n/tau) sum_{i in S} e_i over a uniform size-tau subset S
* single-element:  v = e_i / p_i with probability p_i

The expected residual (ER) condition bounds the second moment

    E || (g(x) - g(x*)) - (F(x) - F(x*)) ||^2  <=  (delta/2) ||x - x*||^2,

and the closed forms for delta and sigma*^2 = E||g(x*)||^2 below are what
the step-size policies consume.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import FiniteSumOperator


@dataclass(frozen=True)
class SamplingScheme:
    kind: str                 # "full" | "tau_minibatch" | "single_element"
    tau: int | None = None
    probs: np.ndarray | None = None

    def batch_size(self, n: int) -> int:
        """Oracle calls consumed by one draw."""
        if self.kind == "full":
            return n
        if self.kind == "tau_minibatch":
            return int(self.tau)
        return 1


def full_sampling() -> SamplingScheme:
    return SamplingScheme(kind="full")


def tau_minibatch(tau: int) -> SamplingScheme:
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    return SamplingScheme(kind="tau_minibatch", tau=int(tau))


def single_element(probs) -> SamplingScheme:
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 1 or np.any(probs < 0):
        raise ValueError("probs must be a nonnegative vector")
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError(f"probs must sum to 1, got {probs.sum()}")
    return SamplingScheme(kind="single_element", probs=probs)


def importance_probabilities(L_list) -> np.ndarray:
    """p_i = L_i / sum_j L_j."""
    L_list = np.asarray(L_list, dtype=float)
    total = L_list.sum()
    if total <= 0:
        raise ValueError("importance sampling needs at least one positive L_i")
    return L_list / total


def _partial_fisher_yates(rng: np.random.Generator, n: int, tau: int) -> np.ndarray:
    # first tau entries of a Fisher-Yates shuffle; uniform over size-tau subsets
    if tau == 1:
        return rng.integers(n, size=1)
    idx = np.arange(n)
    for t in range(tau):
        j = int(rng.integers(t, n))
        idx[t], idx[j] = idx[j], idx[t]
    return idx[:tau].copy()


_COEFF_CACHE: dict = {}


def _uniform_coeffs(tau: int) -> np.ndarray:
    # shared read-only 1/tau coefficient vector; callers never mutate it
    arr = _COEFF_CACHE.get(tau)
    if arr is None:
        arr = np.full(tau, 1.0 / tau)
        arr.flags.writeable = False
        _COEFF_CACHE[tau] = arr
    return arr


def draw_indices(scheme: SamplingScheme, rng: np.random.Generator, n: int):
    """One draw as (indices, coefficients): g(x) = sum_j coeffs[j] F_{idx[j]}(x)."""
    if scheme.kind == "full":
        return np.arange(n), np.full(n, 1.0 / n)
    if scheme.kind == "tau_minibatch":
        tau = scheme.tau
        if tau > n:
            raise ValueError(f"tau={tau} exceeds n={n}")
        idx = _partial_fisher_yates(rng, n, tau)
        return idx, _uniform_coeffs(tau)
    if scheme.kind == "single_element":
        probs = scheme.probs
        if probs.shape != (n,):
            raise ValueError(f"probs has shape {probs.shape}, expected ({n},)")
        j = int(rng.choice(n, p=probs))
        return np.array([j]), np.array([1.0 / (n * probs[j])])
    raise ValueError(f"unknown sampling kind {scheme.kind!r}")


def draw_sampling_vector(scheme: SamplingScheme, rng: np.random.Generator, n: int) -> np.ndarray:
    """The dense sampling vector v in R^n for one draw (E[v] = all-ones)."""
    idx, coeffs = draw_indices(scheme, rng, n)
    v = np.zeros(n)
    v[idx] = coeffs * n
    return v


def draw_index_matrix(scheme: SamplingScheme, rng: np.random.Generator, n: int, count: int):
    """count independent draws at once, for Monte-Carlo checks.

    Returns (count, tau) subset indices for minibatch, (count,) for
    single-element; full sampling has nothing to draw.
    """
    if scheme.kind == "tau_minibatch":
        tiled = np.tile(np.arange(n), (count, 1))
        return rng.permuted(tiled, axis=1)[:, : scheme.tau]
    if scheme.kind == "single_element":
        return rng.choice(n, size=count, p=scheme.probs)
    raise ValueError(f"nothing to draw for scheme {scheme.kind!r}")


def estimate(op: FiniteSumOperator, scheme: SamplingScheme, rng: np.random.Generator, x):
    """One sampled evaluation of g(x) (counts batch_size oracle calls)."""
    idx, coeffs = draw_indices(scheme, rng, op.n)
    return op.weighted(idx, coeffs, x)


# -- expected residual constants -------------------------------------------


def er_constants_minibatch(L_list, star_norm_sqs, tau: int):
    """(delta, sigma*^2) for tau-minibatch sampling.

    delta    = (2 / (n tau)) ((n - tau) / (n - 1)) sum_i L_i^2
    sigma*^2 = (1 / (n tau)) ((n - tau) / (n - 1)) sum_i ||F_i(x*)||^2
    """
    L_list = np.asarray(L_list, dtype=float)
    star_norm_sqs = np.asarray(star_norm_sqs, dtype=float)
    n = L_list.shape[0]
    if n == 1:
        # a single component is the deterministic operator; no residual
        warnings.warn("n=1 finite sum: expected-residual constants are trivially (0, 0)")
        return 0.0, 0.0
    if not 1 <= tau <= n:
        raise ValueError(f"tau must be in [1, {n}], got {tau}")
    scale = (n - tau) / ((n - 1) * n * tau)
    delta = 2.0 * scale * float(np.sum(L_list**2))
    sigma_sq = scale * float(np.sum(star_norm_sqs))
    return delta, sigma_sq


def er_constants_single_element(L_list, star_norm_sqs, probs):
    """(delta, sigma*^2) for single-element sampling with probabilities p.

    delta    = (2 / n^2) sum_i L_i^2 / p_i
    sigma*^2 = (1 / n^2) sum_i ||F_i(x*)||^2 / p_i
    """
    L_list = np.asarray(L_list, dtype=float)
    star_norm_sqs = np.asarray(star_norm_sqs, dtype=float)
    probs = np.asarray(probs, dtype=float)
    n = L_list.shape[0]
    if probs.shape != (n,):
        raise ValueError("probs and L_list must have the same length")
    if np.any(probs <= 0):
        raise ValueError("single-element sampling requires p_i > 0 for every component")
    delta = (2.0 / n**2) * float(np.sum(L_list**2 / probs))
    sigma_sq = (1.0 / n**2) * float(np.sum(star_norm_sqs / probs))
    return delta, sigma_sq


def star_norm_sqs(op: FiniteSumOperator) -> np.ndarray:
    """||F_i(x*)||^2 for every component (uncounted; needs op.x_star)."""
    if op.x_star is None:
        raise ValueError("operator has no known solution x_star")
    return np.array(
        [float(np.sum(op.component(i, op.x_star, count=False) ** 2)) for i in range(op.n)]
    )


def er_constants(op: FiniteSumOperator, scheme: SamplingScheme):
    """(delta, sigma*^2) for an operator/scheme pair, using op metadata."""
    if scheme.kind == "full":
        return 0.0, 0.0
    if op.L_list is None:
        raise ValueError("operator has no per-component Lipschitz constants")
    stars = star_norm_sqs(op)
    if scheme.kind == "tau_minibatch":
        return er_constants_minibatch(op.L_list, stars, scheme.tau)
    return er_constants_single_element(op.L_list, stars, scheme.probs)
