"""Operator plumbing: oracle accounting, rng streams, divergence flags."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from egvip.core import (
    AffineFiniteSumOperator,
    DIVERGENCE_NORM,
    FiniteSumOperator,
    eval_full,
    eval_sampled,
    is_diverged,
    metric_relative_error,
    rng_stream,
)


def bilinear_op(n=4):
    # n identical copies of F(w1, w2) = (w2, -w1)
    mat = np.array([[0.0, 1.0], [-1.0, 0.0]])
    mats = np.tile(mat, (n, 1, 1))
    return AffineFiniteSumOperator(mats, np.zeros((n, 2)), x_star=np.zeros(2), L=1.0)


# -- rng streams ------------------------------------------------------------


def test_rng_stream_reproducible():
    a = rng_stream(3, "exp", "sampling").standard_normal(8)
    b = rng_stream(3, "exp", "sampling").standard_normal(8)
    np.testing.assert_array_equal(a, b)


def test_rng_stream_distinct_per_label_and_seed():
    base = rng_stream(3, "exp", "sampling").standard_normal(8)
    assert not np.allclose(base, rng_stream(3, "exp", "x0").standard_normal(8))
    assert not np.allclose(base, rng_stream(4, "exp", "sampling").standard_normal(8))
    # label order matters
    assert not np.allclose(base, rng_stream(3, "sampling", "exp").standard_normal(8))


def test_rng_stream_labels_are_stringified():
    a = rng_stream(0, 7, "x").standard_normal(4)
    b = rng_stream(0, "7", "x").standard_normal(4)
    np.testing.assert_array_equal(a, b)


# -- oracle accounting -------------------------------------------------------


def test_call_accounting():
    op = bilinear_op(n=5)
    x = np.array([1.0, 0.0])
    op.component(2, x)
    assert op.calls == 1
    op.full(x)
    assert op.calls == 1 + 5
    op.weighted(np.array([0, 3]), np.array([0.5, 0.5]), x)
    assert op.calls == 1 + 5 + 2
    op.full(x, count=False)
    op.component(0, x, count=False)
    assert op.calls == 8


def test_fresh_gives_independent_counter():
    op = bilinear_op()
    op.full(np.zeros(2))
    clone = op.fresh()
    assert clone.calls == 0
    clone.full(np.zeros(2))
    assert op.calls == op.n
    assert clone.calls == clone.n


def test_full_is_component_mean():
    # two components x and -x cancel exactly
    op = FiniteSumOperator([lambda x: x.copy(), lambda x: -x], 2)
    np.testing.assert_allclose(op.full(np.array([3.0, -1.0])), np.zeros(2))


def test_identical_components_full_matches_each():
    op = bilinear_op()
    x = np.array([1.0, 0.0])
    np.testing.assert_array_equal(op.full(x, count=False), np.array([0.0, -1.0]))
    np.testing.assert_array_equal(op.component(1, x, count=False), np.array([0.0, -1.0]))


def test_quadratic_game_vanishes_at_solution():
    from egvip.problems import QuadraticGameSpec, make_quadratic_game

    op = make_quadratic_game(QuadraticGameSpec(n=100, d=30, seed=0))
    f = op.full(op.x_star, count=False)
    assert np.linalg.norm(f) <= 1e-10


# -- sampled evaluation -------------------------------------------------------


def test_eval_sampled_all_ones_is_full():
    op = bilinear_op(n=3)
    x = np.array([0.7, -0.2])
    np.testing.assert_allclose(
        eval_sampled(op, np.ones(3), x), eval_full(op.fresh(), x)
    )


def test_eval_sampled_single_component():
    # v = n e_j / (n p_j) with p_j = 1/n collapses to F_j exactly
    mats = np.stack([np.eye(2), 2.0 * np.eye(2), 3.0 * np.eye(2)])
    op = AffineFiniteSumOperator(mats, np.zeros((3, 2)))
    x = np.array([1.0, -1.0])
    v = np.array([0.0, 3.0, 0.0])
    np.testing.assert_allclose(eval_sampled(op, v, x), 2.0 * x)


def test_eval_sampled_counts_nonzeros():
    op = bilinear_op(n=6)
    eval_sampled(op, np.array([0.0, 2.0, 0.0, 4.0, 0.0, 0.0]), np.ones(2))
    assert op.calls == 2


def test_eval_sampled_shape_mismatch():
    op = bilinear_op(n=3)
    with pytest.raises(ValueError, match="sampling vector"):
        eval_sampled(op, np.ones(4), np.ones(2))


# -- affine fast paths ---------------------------------------------------------


def test_affine_shape_validation():
    with pytest.raises(ValueError, match=r"expected mats \(n, d, d\)"):
        AffineFiniteSumOperator(np.zeros((2, 3, 4)), np.zeros((2, 3)))
    with pytest.raises(ValueError, match=r"offs \(n, d\)"):
        AffineFiniteSumOperator(np.zeros((2, 3, 3)), np.zeros((3, 3)))


def test_affine_jacobian_defaults_to_mean_matrix():
    op = bilinear_op()
    np.testing.assert_array_equal(op.jacobian(np.ones(2)), op.mean_mat)

    marker = np.eye(2)
    op2 = AffineFiniteSumOperator(
        np.zeros((2, 2, 2)), np.zeros((2, 2)), jacobian=lambda x: marker
    )
    assert op2.jacobian(np.zeros(2)) is marker


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 5), st.integers(2, 7))
def test_affine_weighted_matches_generic(seed, d, n):
    """The vectorized subset mean agrees with the callable-loop fallback."""
    rng = np.random.default_rng(seed)
    mats = rng.standard_normal((n, d, d))
    offs = rng.standard_normal((n, d))
    fast = AffineFiniteSumOperator(mats, offs)
    slow = FiniteSumOperator(
        [lambda x, M=mats[i], b=offs[i]: M @ x + b for i in range(n)], d
    )
    x = rng.standard_normal(d)
    tau = int(rng.integers(1, n + 1))
    idx = rng.choice(n, size=tau, replace=False)
    coeffs = rng.standard_normal(tau)
    np.testing.assert_allclose(
        fast.weighted(idx, coeffs, x), slow.weighted(idx, coeffs, x), atol=1e-12
    )
    np.testing.assert_allclose(fast.full(x), slow.full(x), atol=1e-12)


# -- metrics and guards ---------------------------------------------------------


def test_relative_error_quarter():
    x0 = np.array([2.0, 0.0])
    x_star = np.zeros(2)
    assert metric_relative_error(np.array([1.0, 0.0]), x0, x_star) == pytest.approx(0.25)
    assert metric_relative_error(x0, x0, x_star) == pytest.approx(1.0)
    assert metric_relative_error(x_star, x0, x_star) == 0.0


def test_relative_error_undefined_from_solution():
    z = np.zeros(2)
    with pytest.raises(ValueError, match="x0 equals x_star"):
        metric_relative_error(np.ones(2), z, z)


def test_is_diverged():
    assert not is_diverged(np.zeros(3))
    assert not is_diverged(np.full(3, DIVERGENCE_NORM / 2))
    assert is_diverged(np.array([1.0, np.nan]))
    assert is_diverged(np.array([np.inf, 0.0]))
    assert is_diverged(np.full(2, DIVERGENCE_NORM))  # norm sqrt(2)e12 > 1e12
