"""Adaptive (L0, L1) step sizes: transcendental constants, step formulas,
and the Jacobian-growth fit.

The nu roots are checked against their defining equations (residual under
1e-12) and the rounded values printed with the step-size table.  Step-size
formulas get hand-computed values at f_norm = 0 and 1 where every term
collapses, plus a monotonicity property.  fit_l0l1 is exercised on the three
operators with known answers: a linear game (constant Jacobian), the cubic
game (growing Jacobian), and the sign-power operator, whose fitted pair on
the frozen radial grid must land within 10% of (1 + 2*sqrt(2), 2*sqrt(2)).
"""

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from egvip.core import AffineFiniteSumOperator
from egvip.problems import (
    make_cubic_minmax,
    make_policeman_burglar,
    make_sign_power_operator,
)
from egvip.solvers_l0l1 import (
    NU_EQUATIONS,
    NU_VALUES,
    FitDegenerateWarning,
    eg_l0l1_step,
    fit_l0l1,
    gamma_adaptive,
    k_constants,
    make_l0l1_config,
    numerical_jacobian,
    solve_nu,
    spectral_norm,
    weak_minty_margin,
)

SQRT2 = math.sqrt(2.0)


def bilinear_op():
    mats = np.array([[[0.0, 1.0], [-1.0, 0.0]]])
    return AffineFiniteSumOperator(mats, np.zeros((1, 2)), x_star=np.zeros(2))


# -- transcendental roots -------------------------------------------------------------


def test_nu_roots_satisfy_their_equations():
    for key, resid in NU_EQUATIONS.items():
        root = solve_nu(key)
        assert abs(resid(root)) < 1e-12, key
        assert 0.0 < root < 1.0


def test_nu_printed_windows():
    assert abs(NU_VALUES["A"] - 0.363) <= 0.005
    assert abs(NU_VALUES["B"] - 0.21) <= 0.005
    assert abs(NU_VALUES["C"] - 0.45) <= 0.005
    assert abs(NU_VALUES["D"] - 0.567) <= 0.005
    assert abs(NU_VALUES["strong_frac"] - 0.618) <= 0.005


def test_strong_frac_is_golden_ratio_conjugate():
    # root of 1 - nu - nu^2, stored exactly, not bisected
    assert NU_VALUES["strong_frac"] == (math.sqrt(5.0) - 1.0) / 2.0


def test_nu_aliases_resolve_to_the_lettered_equations():
    assert solve_nu("strong_alpha1") == solve_nu("A")
    assert solve_nu("strong_alpha1_refined") == solve_nu("B")
    assert solve_nu("monotone_alpha1") == solve_nu("C")
    assert solve_nu("weak_minty_alpha1") == solve_nu("D")


def test_solve_nu_validation():
    with pytest.raises(ValueError, match="unknown equation 'E'"):
        solve_nu("E")
    with pytest.raises(ValueError, match="tol must be positive"):
        solve_nu("A", tol=0.0)


# -- fractional-alpha K constants -----------------------------------------------------


def test_k_constants_hand_case():
    # L0 = L1 = 1, alpha = 1/2: 2^{alpha^2/(1-alpha)} = sqrt(2), so
    # K0 = sqrt(2)+1, K1 = sqrt(2), K2 = sqrt(2)*sqrt(3)*(1/2) = sqrt(6)/2.
    k0, k1, k2 = k_constants(1.0, 1.0, 0.5)
    assert k0 == pytest.approx(SQRT2 + 1.0, rel=1e-15)
    assert k1 == pytest.approx(SQRT2, rel=1e-15)
    assert k2 == pytest.approx(math.sqrt(6.0) / 2.0, rel=1e-15)


def test_k_constants_vanish_with_l1():
    k0, k1, k2 = k_constants(3.0, 0.0, 0.25)
    assert k0 == pytest.approx(3.0 * (2.0 ** (0.0625 / 0.75) + 1.0))
    assert k1 == 0.0
    assert k2 == 0.0


def test_k_constants_validation():
    with pytest.raises(ValueError, match="alpha = 1 path has no K form"):
        k_constants(1.0, 1.0, 1.0)
    with pytest.raises(ValueError, match="nonnegative"):
        k_constants(-1.0, 1.0, 0.5)


# -- config construction --------------------------------------------------------------


def test_config_alpha1_picks_regime_equation():
    for regime, key in [
        ("strongly_monotone", "A"),
        ("monotone", "C"),
        ("weak_minty", "D"),
    ]:
        cfg = make_l0l1_config(regime, 1.0, 2.0, 3.0)
        assert cfg.nu == NU_VALUES[key]
        assert cfg.k0 == cfg.k1 == cfg.k2 == 0.0


def test_config_fractional_populates_k():
    cfg = make_l0l1_config("strongly_monotone", 0.5, 1.0, 1.0)
    assert cfg.nu == NU_VALUES["strong_frac"]
    assert (cfg.k0, cfg.k1, cfg.k2) == k_constants(1.0, 1.0, 0.5)
    # the monotone fractional formula has no nu at all
    mono = make_l0l1_config("monotone", 0.5, 1.0, 1.0)
    assert mono.nu is None
    assert mono.k0 > 0.0


def test_config_validation():
    with pytest.raises(ValueError, match="regime must be one of"):
        make_l0l1_config("convex", 1.0, 1.0, 1.0)
    with pytest.raises(ValueError, match=r"alpha must be in \(0, 1\]"):
        make_l0l1_config("monotone", 0.0, 1.0, 1.0)
    with pytest.raises(ValueError, match=r"alpha must be in \(0, 1\]"):
        make_l0l1_config("monotone", 1.5, 1.0, 1.0)
    with pytest.raises(ValueError, match="nonnegative"):
        make_l0l1_config("monotone", 0.5, -1.0, 1.0)
    with pytest.raises(ValueError, match="overridden together"):
        make_l0l1_config("monotone", 0.5, 1.0, 1.0, c0=10.0)


# -- adaptive step sizes --------------------------------------------------------------


def test_gamma_c0_c1_override():
    cfg = make_l0l1_config("monotone", 0.5, 0.0, 0.0, c0=10.0, c1=10.0)
    gamma, omega = gamma_adaptive(cfg, 4.0)
    assert gamma == pytest.approx(1.0 / (10.0 + 10.0 * 2.0), rel=1e-15)
    assert omega == gamma


def test_gamma_alpha1_hand_value():
    cfg = make_l0l1_config("strongly_monotone", 1.0, 1.0 + 2.0 * SQRT2, 2.0 * SQRT2)
    gamma, omega = gamma_adaptive(cfg, 1.0)
    assert gamma == pytest.approx(NU_VALUES["A"] / (1.0 + 4.0 * SQRT2), rel=1e-15)
    assert omega == gamma


def test_gamma_alpha1_monotone_without_l1_is_constant():
    # with L1 = 0 the step never moves: nu_C / L0 ~ 0.45 / L0
    cfg = make_l0l1_config("monotone", 1.0, 4.0, 0.0)
    g_small, _ = gamma_adaptive(cfg, 0.01)
    g_large, _ = gamma_adaptive(cfg, 100.0)
    assert g_small == g_large == pytest.approx(NU_VALUES["C"] / 4.0, rel=1e-15)
    assert abs(g_small * 4.0 - 0.45) <= 0.005


def test_gamma_fractional_at_zero_norm():
    strong = make_l0l1_config("strongly_monotone", 0.5, 1.0, 1.0)
    gamma, _ = gamma_adaptive(strong, 0.0)
    assert gamma == pytest.approx(strong.nu / (2.0 * strong.k0), rel=1e-15)
    mono = make_l0l1_config("monotone", 0.5, 1.0, 1.0)
    gamma, _ = gamma_adaptive(mono, 0.0)
    assert gamma == pytest.approx(1.0 / (2.0 * SQRT2 * mono.k0), rel=1e-15)


def test_gamma_weak_minty_halves_omega():
    cfg = make_l0l1_config("weak_minty", 1.0, 1.0, 1.0)
    gamma, omega = gamma_adaptive(cfg, 2.0)
    assert omega == gamma / 2.0
    frac = make_l0l1_config("weak_minty", 0.5, 1.0, 1.0)
    gamma, omega = gamma_adaptive(frac, 2.0)
    assert omega == gamma / 2.0


def test_gamma_rejects_negative_norm():
    cfg = make_l0l1_config("monotone", 1.0, 1.0, 1.0)
    with pytest.raises(ValueError, match="f_norm must be nonnegative"):
        gamma_adaptive(cfg, -1.0)


@settings(max_examples=60, deadline=None)
@given(
    f_lo=st.floats(min_value=0.0, max_value=1e6),
    bump=st.floats(min_value=0.0, max_value=1e6),
    alpha=st.sampled_from([0.25, 0.5, 0.75, 1.0]),
    regime=st.sampled_from(["strongly_monotone", "monotone", "weak_minty"]),
)
def test_gamma_non_increasing_in_f_norm(f_lo, bump, alpha, regime):
    cfg = make_l0l1_config(regime, alpha, 1.5, 0.7)
    g_lo, _ = gamma_adaptive(cfg, f_lo)
    g_hi, _ = gamma_adaptive(cfg, f_lo + bump)
    assert g_hi <= g_lo


# -- weak-Minty feasibility margin ----------------------------------------------------


def test_weak_minty_margin_alpha1_hand_case():
    # L0 = 1, L1 = 0 collapses the worst-case factor to 1: margin = nu_D - 4 rho
    cfg = make_l0l1_config("weak_minty", 1.0, 1.0, 0.0)
    assert weak_minty_margin(cfg, 5.0, 0.1) == pytest.approx(
        NU_VALUES["D"] - 0.4, rel=1e-12
    )
    assert weak_minty_margin(cfg, 5.0, 0.1) > 0.0
    assert weak_minty_margin(cfg, 5.0, 0.15) < 0.0


def test_weak_minty_margin_linear_in_rho_and_shrinks_with_radius():
    cfg = make_l0l1_config("weak_minty", 0.5, 1.0, 1.0)
    base = weak_minty_margin(cfg, 1.0, 0.0)
    assert weak_minty_margin(cfg, 1.0, 0.02) == pytest.approx(base - 0.08, abs=1e-12)
    assert weak_minty_margin(cfg, 2.0, 0.0) < base


# -- the adaptive extragradient step --------------------------------------------------


def test_eg_l0l1_step_matches_manual_update():
    op = bilinear_op()
    cfg = make_l0l1_config("monotone", 1.0, 1.0, 1.0)
    x = np.array([1.0, 0.5])
    f_x = op.full(x, count=False)
    gamma, omega = gamma_adaptive(cfg, float(np.linalg.norm(f_x)))
    xh = x - gamma * f_x
    expected = x - omega * op.full(xh, count=False)
    x_next, info = eg_l0l1_step(op, x, cfg, return_info=True)
    np.testing.assert_allclose(x_next, expected, rtol=1e-15)
    assert info["gamma"] == gamma
    assert info["omega"] == omega
    assert info["norm_f"] == pytest.approx(float(np.linalg.norm(f_x)))


def test_eg_l0l1_step_counts_two_full_evaluations():
    mats = np.stack([np.eye(2)] * 3)
    op = AffineFiniteSumOperator(mats, np.zeros((3, 2)), x_star=np.zeros(2))
    cfg = make_l0l1_config("strongly_monotone", 1.0, 1.0, 0.0)
    eg_l0l1_step(op, np.ones(2), cfg)
    assert op.calls == 2 * op.n


def test_eg_l0l1_step_respects_projection():
    op = make_policeman_burglar(4, 6, seed=3)
    cfg = make_l0l1_config("monotone", 1.0, 0.0, 0.0, c0=1.0, c1=1.0)
    x = np.concatenate([np.full(6, 1.0 / 6.0), np.full(6, 1.0 / 6.0)])
    for _ in range(5):
        x = eg_l0l1_step(op, x, cfg)
    assert np.all(x >= -1e-12)
    assert np.sum(x[:6]) == pytest.approx(1.0)
    assert np.sum(x[6:]) == pytest.approx(1.0)


def test_eg_l0l1_converges_on_rotation():
    # monotone bilinear game: plain EG diverges slowly for fixed large steps,
    # but the adaptive step keeps gamma below 1/L = 1 and contracts
    op = bilinear_op()
    cfg = make_l0l1_config("monotone", 1.0, 1.0, 1.0)
    x = np.array([1.0, 0.0])
    for _ in range(400):
        x = eg_l0l1_step(op, x, cfg)
    assert np.linalg.norm(x) < 1e-3


# -- spectral norm and numerical Jacobian ---------------------------------------------


def test_spectral_norm_matches_numpy():
    rng = np.random.default_rng(7)
    for shape in [(5, 3), (3, 5), (4, 4)]:
        m = rng.standard_normal(shape)
        assert spectral_norm(m) == pytest.approx(np.linalg.norm(m, 2), rel=1e-8)


def test_spectral_norm_edge_cases():
    assert spectral_norm(np.diag([3.0, -4.0])) == pytest.approx(4.0)
    assert spectral_norm(np.zeros((3, 3))) == 0.0
    assert spectral_norm(np.zeros((0, 0))) == 0.0


def test_numerical_jacobian_exact_on_affine():
    m = np.array([[1.0, 2.0, 0.5], [-1.0, 0.0, 3.0]])
    f = lambda x: m @ x + np.array([4.0, -1.0])
    np.testing.assert_allclose(
        numerical_jacobian(f, np.array([0.3, -2.0, 1.1])), m, atol=1e-9
    )


# -- the (L0, L1) fit -----------------------------------------------------------------


def radial_grid():
    radii = np.geomspace(0.1, 5.0, 15)
    angles = np.linspace(0.0, 2.0 * np.pi, 9)[:-1]
    return [r * np.array([np.cos(t), np.sin(t)]) for r in radii for t in angles]


def test_fit_linear_game_recovers_spectral_norm():
    # constant Jacobian: slope 0, intercept ||M|| = sqrt(2)
    mats = np.array([[[1.0, 1.0], [-1.0, 1.0]]])
    op = AffineFiniteSumOperator(mats, np.zeros((1, 2)), x_star=np.zeros(2))
    pts = [np.array([np.cos(t), np.sin(t)]) * (1.0 + 0.1 * i) for i, t in enumerate(np.linspace(0.0, 3.0, 12))]
    l0, l1, violation = fit_l0l1(op, pts, 0.5)
    assert l1 < 1e-12
    assert l0 == pytest.approx(SQRT2, abs=1e-9)
    assert violation == 0.0


def test_fit_cubic_game_finds_growth():
    op = make_cubic_minmax(d=3, seed=0)
    rng = np.random.default_rng(1)
    pts = [rng.normal(0.0, 2.0, op.d) for _ in range(60)]
    l0, l1, violation = fit_l0l1(op, pts, 0.5)
    assert l1 > 0.0
    assert violation == 0.0
    # certified bound must hold on the fitting sample
    for p in pts:
        jn = np.linalg.norm(op.jacobian(p), 2)
        fn = np.linalg.norm(op.full(p, count=False))
        assert jn <= l0 + l1 * math.sqrt(fn) + 1e-6


def test_fit_sign_power_reproduces_quoted_constants():
    # frozen radial grid; the fitted pair must sit within 10% of
    # (1 + 2 sqrt(2), 2 sqrt(2)) at the default exponent
    op = make_sign_power_operator()
    l0, l1, violation = fit_l0l1(op, radial_grid(), op.alpha)
    target0 = 1.0 + 2.0 * SQRT2
    target1 = 2.0 * SQRT2
    assert abs(l0 - target0) / target0 < 0.10
    assert abs(l1 - target1) / target1 < 0.10
    assert violation == 0.0
    # regression pins for the deterministic fit on this exact grid
    assert l0 == pytest.approx(3.643841, rel=1e-5)
    assert l1 == pytest.approx(2.853259, rel=1e-5)


def test_fit_bound_holds_on_sign_power_sample():
    op = make_sign_power_operator()
    pts = radial_grid()
    l0, l1, _ = fit_l0l1(op, pts, op.alpha)
    for p in pts:
        jn = np.linalg.norm(op.jacobian(p), 2)
        fn = np.linalg.norm(op.full(p, count=False))
        assert jn <= l0 + l1 * fn**op.alpha + 1e-6


def test_fit_uses_finite_differences_without_analytic_jacobian():
    mats = np.array([[[1.0, 1.0], [-1.0, 1.0]]])
    op = AffineFiniteSumOperator(mats, np.zeros((1, 2)), x_star=np.zeros(2))
    op.jacobian = None
    pts = [np.array([1.0 + 0.2 * i, -0.5 * i]) for i in range(12)]
    l0, l1, violation = fit_l0l1(op, pts, 0.5)
    assert l1 < 1e-6
    assert l0 == pytest.approx(SQRT2, abs=1e-5)
    assert op.calls == 0  # the fit never touches the oracle counter


def test_fit_degenerate_warns_and_zeroes_slope():
    # constant operator: every sample has the same gradient norm
    mats = np.zeros((1, 2, 2))
    offs = np.array([[3.0, 4.0]])
    op = AffineFiniteSumOperator(mats, offs)
    pts = [np.array([float(i), -float(i)]) for i in range(12)]
    with pytest.warns(FitDegenerateWarning, match="same gradient norm"):
        l0, l1, violation = fit_l0l1(op, pts, 1.0)
    assert l1 == 0.0
    assert l0 == 0.0  # the zero matrix has zero spectral norm
    assert violation == 0.0


def test_fit_validation():
    op = bilinear_op()
    with pytest.raises(ValueError, match="at least 10 sample points"):
        fit_l0l1(op, [np.zeros(2)] * 9, 0.5)
    with pytest.raises(ValueError, match=r"alpha must be in \(0, 1\]"):
        fit_l0l1(op, [np.zeros(2)] * 10, 0.0)
