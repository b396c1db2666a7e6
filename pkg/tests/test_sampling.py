"""Sampling vectors, unbiasedness, and the expected-residual constants.

The small-n cases are checked by exact enumeration over the outcome space,
not by Monte Carlo, so the delta / sigma*^2 closed forms are pinned without
statistical slack.  One Monte-Carlo test at the end exercises the ER
inequality itself on a random quadratic game.
"""

import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from egvip.core import AffineFiniteSumOperator, rng_stream
from egvip.problems import QuadraticGameSpec, make_quadratic_game
from egvip.sampling import (
    draw_index_matrix,
    draw_indices,
    draw_sampling_vector,
    er_constants,
    er_constants_minibatch,
    er_constants_single_element,
    estimate,
    full_sampling,
    importance_probabilities,
    single_element,
    star_norm_sqs,
    tau_minibatch,
)


# -- scheme constructors ------------------------------------------------------


def test_constructor_validation():
    with pytest.raises(ValueError, match="tau must be >= 1"):
        tau_minibatch(0)
    with pytest.raises(ValueError, match="nonnegative"):
        single_element([0.5, -0.5, 1.0])
    with pytest.raises(ValueError, match="sum to 1"):
        single_element([0.3, 0.3])


def test_batch_size():
    assert full_sampling().batch_size(7) == 7
    assert tau_minibatch(3).batch_size(7) == 3
    assert single_element(np.full(7, 1 / 7)).batch_size(7) == 1


def test_importance_probabilities():
    np.testing.assert_allclose(importance_probabilities([1.0, 3.0]), [0.25, 0.75])
    with pytest.raises(ValueError, match="positive"):
        importance_probabilities([0.0, 0.0])


# -- draws ---------------------------------------------------------------------


def test_full_draw_is_deterministic_mean():
    idx, coeffs = draw_indices(full_sampling(), rng_stream(0, "t"), 5)
    np.testing.assert_array_equal(idx, np.arange(5))
    np.testing.assert_allclose(coeffs, np.full(5, 0.2))


def test_minibatch_tau_exceeds_n():
    with pytest.raises(ValueError, match="exceeds"):
        draw_indices(tau_minibatch(4), rng_stream(0, "t"), 3)


def test_single_element_outcome_vectors():
    # with p = (0.9, 0.1) the only possible sampling vectors are
    # (1/0.9, 0) and (0, 10); their p-weighted mean is the all-ones vector
    scheme = single_element(np.array([0.9, 0.1]))
    rng = rng_stream(0, "outcomes")
    seen = set()
    for _ in range(200):
        v = draw_sampling_vector(scheme, rng, 2)
        seen.add(tuple(np.round(v, 12)))
    expected = {(round(1 / 0.9, 12), 0.0), (0.0, 10.0)}
    assert seen == expected
    outcomes = {(round(1 / 0.9, 12), 0.0): 0.9, (0.0, 10.0): 0.1}
    mean = sum(p * np.array(v) for v, p in outcomes.items())
    np.testing.assert_allclose(mean, np.ones(2))


def test_minibatch_vector_unbiased_two_components():
    # n=2, tau=1: outcomes (2,0) and (0,2), each with probability 1/2
    scheme = tau_minibatch(1)
    rng = rng_stream(1, "unbiased")
    draws = np.array([draw_sampling_vector(scheme, rng, 2) for _ in range(4000)])
    vals, counts = np.unique(draws, axis=0, return_counts=True)
    np.testing.assert_array_equal(np.sort(vals.ravel()), [0.0, 0.0, 2.0, 2.0])
    # empirical frequency of each outcome within 5 sigma of 1/2
    assert abs(counts[0] / 4000 - 0.5) < 5 * np.sqrt(0.25 / 4000)
    np.testing.assert_allclose(draws.mean(axis=0), np.ones(2), atol=0.06)


def test_minibatch_draws_cover_all_subsets_uniformly():
    n, tau, count = 5, 2, 6000
    rng = rng_stream(2, "subsets")
    idx = draw_index_matrix(tau_minibatch(tau), rng, n, count)
    assert idx.shape == (count, tau)
    keys = [tuple(sorted(row)) for row in idx]
    freq = {k: keys.count(k) / count for k in set(keys)}
    assert set(freq) == set(itertools.combinations(range(n), tau))
    p = 1 / 10  # C(5,2) subsets
    bound = 5 * np.sqrt(p * (1 - p) / count)
    for got in freq.values():
        assert abs(got - p) < bound


def test_draw_index_matrix_single_and_full():
    probs = np.array([0.7, 0.2, 0.1])
    idx = draw_index_matrix(single_element(probs), rng_stream(3, "m"), 3, 5000)
    assert idx.shape == (5000,)
    freq = np.bincount(idx, minlength=3) / 5000
    np.testing.assert_allclose(freq, probs, atol=0.03)
    with pytest.raises(ValueError, match="nothing to draw"):
        draw_index_matrix(full_sampling(), rng_stream(0, "m"), 3, 10)


def test_estimate_counts_batch_size():
    mats = np.stack([np.eye(2) * (i + 1) for i in range(6)])
    op = AffineFiniteSumOperator(mats, np.zeros((6, 2)))
    estimate(op, tau_minibatch(2), rng_stream(0, "e"), np.ones(2))
    assert op.calls == 2
    estimate(op, full_sampling(), rng_stream(0, "e"), np.ones(2))
    assert op.calls == 2 + 6


# -- closed-form constants -------------------------------------------------------


def test_minibatch_constants_hand_example():
    # n=2, tau=1, L=(1,1), ||F_i(x*)||^2=(1,1):
    # scale = 1/2, delta = 2*(1/2)*2 = 2, sigma*^2 = (1/2)*2 = 1
    delta, sigma = er_constants_minibatch([1.0, 1.0], [1.0, 1.0], 1)
    assert delta == pytest.approx(2.0)
    assert sigma == pytest.approx(1.0)


def test_full_batch_has_no_residual():
    delta, sigma = er_constants_minibatch([1.0, 2.0, 3.0], [1.0, 1.0, 1.0], 3)
    assert delta == 0.0
    assert sigma == 0.0


def test_single_component_sum_warns():
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        delta, sigma = er_constants_minibatch([2.0], [1.0], 1)
    assert (delta, sigma) == (0.0, 0.0)
    assert any("n=1" in str(w.message) for w in rec)


def test_minibatch_tau_out_of_range():
    with pytest.raises(ValueError, match=r"tau must be in \[1, 3\]"):
        er_constants_minibatch([1.0, 1.0, 1.0], [0.0, 0.0, 0.0], 4)


def test_uniform_single_element_formula():
    # uniform p: delta = (2/n) sum L_i^2
    L = np.array([1.0, 2.0, 3.0, 4.0])
    delta, _ = er_constants_single_element(L, np.zeros(4), np.full(4, 0.25))
    assert delta == pytest.approx((2.0 / 4.0) * float(np.sum(L**2)))


def test_importance_single_element_formula():
    # p_i = L_i / sum L: delta = (2/n^2) (sum L_i)^2
    L = np.array([1.0, 2.0, 3.0, 4.0])
    delta, _ = er_constants_single_element(L, np.zeros(4), importance_probabilities(L))
    assert delta == pytest.approx((2.0 / 16.0) * float(np.sum(L)) ** 2)


def test_importance_never_worse_than_uniform():
    # Cauchy-Schwarz: (sum L)^2 <= n sum L^2, with a 10x gap when one
    # component dominates a flock of near-zero ones
    L = np.concatenate([np.full(9, 1e-9), [1.0]])
    d_us, _ = er_constants_single_element(L, np.zeros(10), np.full(10, 0.1))
    d_is, _ = er_constants_single_element(L, np.zeros(10), importance_probabilities(L))
    assert d_is <= d_us
    assert d_is / d_us == pytest.approx(0.1, rel=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(1e-3, 1e3), min_size=2, max_size=12))
def test_importance_bound_property(L):
    L = np.array(L)
    d_us, _ = er_constants_single_element(L, np.zeros(L.size), np.full(L.size, 1 / L.size))
    d_is, _ = er_constants_single_element(L, np.zeros(L.size), importance_probabilities(L))
    assert d_is <= d_us * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**31 - 1))
def test_delta_nonincreasing_in_tau(n, seed):
    rng = np.random.default_rng(seed)
    L = rng.uniform(0.1, 5.0, size=n)
    stars = rng.uniform(0.0, 2.0, size=n)
    deltas = [er_constants_minibatch(L, stars, tau)[0] for tau in range(1, n + 1)]
    assert all(a >= b - 1e-15 for a, b in zip(deltas, deltas[1:]))
    assert deltas[-1] == 0.0


def test_single_element_validation():
    with pytest.raises(ValueError, match="same length"):
        er_constants_single_element([1.0, 1.0], [0.0, 0.0], [1.0])
    with pytest.raises(ValueError, match="p_i > 0"):
        er_constants_single_element([1.0, 1.0], [0.0, 0.0], [1.0, 0.0])


def test_er_constants_dispatch():
    op = make_quadratic_game(QuadraticGameSpec(n=6, d=2, seed=3))
    assert er_constants(op, full_sampling()) == (0.0, 0.0)
    d_mb, s_mb = er_constants(op, tau_minibatch(2))
    stars = star_norm_sqs(op)
    assert (d_mb, s_mb) == er_constants_minibatch(op.L_list, stars, 2)
    bare = AffineFiniteSumOperator(np.zeros((2, 2, 2)), np.zeros((2, 2)))
    with pytest.raises(ValueError, match="no per-component Lipschitz"):
        er_constants(bare, tau_minibatch(1))
    with pytest.raises(ValueError, match="no known solution"):
        star_norm_sqs(bare)


def test_interpolated_game_has_zero_sigma():
    op = make_quadratic_game(QuadraticGameSpec(n=8, d=2, seed=5, interpolated=True))
    _, sigma = er_constants(op, tau_minibatch(3))
    assert sigma <= 1e-16


# -- the ER inequality itself ------------------------------------------------------


def _exact_residual_second_moment(op, scheme, x):
    """E||g(x) - g(x*) - (F(x) - F(x*))||^2 by enumeration (tau=1 schemes)."""
    diffs = op.mats @ (x - op.x_star)  # (n, d): F_i(x) - F_i(x*)
    mean = diffs.mean(axis=0)
    if scheme.kind == "tau_minibatch" and scheme.tau == 1:
        resid = diffs - mean
        return float(np.mean(np.sum(resid**2, axis=1)))
    if scheme.kind == "single_element":
        n = op.n
        total = 0.0
        for j, p in enumerate(scheme.probs):
            resid = diffs[j] / (n * p) - mean
            total += p * float(resid @ resid)
        return total
    raise AssertionError("enumeration only covers the single-draw schemes")


def test_er_inequality_exact_enumeration():
    op = make_quadratic_game(QuadraticGameSpec(n=5, d=2, seed=11))
    rng = rng_stream(0, "er-points")
    for scheme in (
        tau_minibatch(1),
        single_element(np.full(5, 0.2)),
        single_element(importance_probabilities(op.L_list)),
    ):
        delta, _ = er_constants(op, scheme)
        for _ in range(5):
            x = op.x_star + rng.standard_normal(op.d)
            lhs = _exact_residual_second_moment(op, scheme, x)
            r_sq = float(np.sum((x - op.x_star) ** 2))
            assert lhs <= 0.5 * delta * r_sq + 1e-12


def test_er_inequality_monte_carlo():
    """10^4 joint draws against (delta/2) r^2 with a 3-sigma style cushion."""
    op = make_quadratic_game(QuadraticGameSpec(n=12, d=3, seed=7))
    scheme = tau_minibatch(4)
    delta, _ = er_constants(op, scheme)
    rng = rng_stream(1, "er-mc")
    x = op.x_star + rng.standard_normal(op.d)
    r_sq = float(np.sum((x - op.x_star) ** 2))
    count = 10_000
    idx = draw_index_matrix(scheme, rng, op.n, count)
    diffs = op.mats @ (x - op.x_star)
    resid = diffs[idx].mean(axis=1) - diffs.mean(axis=0)
    measured = float(np.mean(np.sum(resid**2, axis=1)))
    assert measured <= 0.5 * delta * r_sq * (1.0 + 3.0 / np.sqrt(count))
