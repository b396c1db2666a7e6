"""Theory-verification suites.

Every suite pins a seeded instance and asserts the exact inequality the
corresponding convergence result promises, with the tolerance stated next
to the assertion.  Results come back as machine-readable CheckResult rows;
nothing here raises on a failed check.

A few instances are engineered for floating-point honesty rather than
statistical flash:

* Contraction suites translate the game so the solution is exactly the
  origin (zero offsets).  A solved x* carries ~1e-14 of solve error, and
  after a thousand contraction steps the iterate is closer to the true
  fixed point than that, at which point measured per-step ratios are all
  noise.  With zero offsets the fixed point is exact in fp and ratios stay
  clean down to denormals.

* Averaging n random components concentrates the mean spectrum, so eig
  bands are anchored (a narrow band at mu, a narrow band near 1) to keep
  the true slow mode close to the asserted rate; otherwise the trajectory
  underflows mid-run.

* The ProxSkip Lyapunov descent is a per-round expectation statement; on
  skip rounds the control-variate part of V is frozen, so no coin sequence
  descends forever.  The check uses a far start (iterate error dominating
  the control-variate error by ~1e2) and a 300-round window, inside which
  descent does hold pathwise with margin.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import fl
from .core import AffineFiniteSumOperator, FiniteSumOperator, rng_stream
from .problems import (
    QuadraticGameSpec,
    make_cubic_minmax,
    make_global_forsaken,
    make_quadratic_game,
    make_weak_minty_scalar,
)
from .sampling import (
    draw_index_matrix,
    er_constants,
    importance_probabilities,
    single_element,
    tau_minibatch,
)
from .solvers_eg import (
    eg_step,
    policy_constant,
    policy_switching,
    speg_init,
    speg_step,
)
from .solvers_l0l1 import (
    NU_EQUATIONS,
    NU_VALUES,
    eg_l0l1_step,
    fit_l0l1,
    make_l0l1_config,
    solve_nu,
)
from .solvers_polyak import (
    gamma_constant,
    gamma_line_search,
    dec_polyak_seg_step,
    polyak_eg_step,
    polyak_init,
    while_loop_budget,
)

__all__ = ["CheckResult", "VerifyReport", "SUITE_NAMES", "verify_theory"]


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ""

    def to_dict(self):
        return asdict(self)


@dataclass
class VerifyReport:
    suite: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {
            "suite": self.suite,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }


def _check(suite, name, measured, threshold, *, le=True, detail=""):
    measured = float(measured)
    threshold = float(threshold)
    ok = measured <= threshold if le else measured >= threshold
    return CheckResult(suite, name, bool(ok), measured, threshold, detail)


def _translated_game(spec: QuadraticGameSpec) -> AffineFiniteSumOperator:
    """The game with offsets dropped: same matrices, solution exactly 0."""
    base = make_quadratic_game(spec)
    return AffineFiniteSumOperator(
        [m.copy() for m in base.mats],
        [np.zeros(base.d) for _ in range(base.n)],
        x_star=np.zeros(base.d),
        mu=base.mu,
        L=base.L,
        L_list=base.L_list,
        name=base.name + "-origin",
    )


_SEEDS_50 = tuple(range(1, 51))


# ---------------------------------------------------------------------------
# deterministic extragradient


def suite_eg_contraction():
    """Strongly monotone game, gamma = omega = 1/(4L): per-step squared
    distance shrinks by at least 1 - mu/(4L), 2000 steps, slack 1e-10.
    Asserted with the labeled constants mu = 0.1, L = 1; the drawn game has
    mu_true >= mu and L_true <= L, so the bound applies a fortiori."""
    spec = QuadraticGameSpec(n=100, d=30, eig_a=(0.1, 0.15), eig_b=(0.0, 0.3),
                             eig_c=(0.9, 1.0), interpolated=True, seed=11)
    op = _translated_game(spec)
    mu, L = 0.1, 1.0
    gamma = 1.0 / (4.0 * L)
    factor = 1.0 - mu / (4.0 * L)
    x = np.ones(op.d)
    d_prev = float(x @ x)
    worst = -math.inf
    for _ in range(2000):
        x = eg_step(op, x, gamma, gamma)
        d_cur = float(x @ x)
        worst = max(worst, d_cur / d_prev - factor)
        d_prev = d_cur
    return [_check("eg-contraction", "per-step-factor", worst, 1e-10,
                   detail=f"worst ratio minus (1 - mu/4L); final dist^2 = "
                          f"{d_prev:.3e}")]


def suite_eg_monotone_rate():
    """Bilinear game, gamma = omega = 1/(sqrt2 L): the best squared operator
    norm so far obeys min_k ||F||^2 <= 4 L^2 R0^2 / (K+1) for every K."""
    spec = QuadraticGameSpec(n=1, d=30, eig_a=(0.0, 0.0), eig_b=(0.3, 1.0),
                             eig_c=(0.0, 0.0), interpolated=True, seed=7)
    op = _translated_game(spec)
    L = op.L
    gamma = 1.0 / (math.sqrt(2.0) * L)
    x = np.ones(op.d)
    r0_sq = float(x @ x)
    best = math.inf
    worst = -math.inf
    for k in range(5001):
        f = op.full(x, count=False)
        best = min(best, float(f @ f))
        bound = 4.0 * L * L * r0_sq / (k + 1.0)
        worst = max(worst, best / bound)
        x = eg_step(op, x, gamma, gamma)
    return [_check("eg-monotone-rate", "min-residual-rate", worst, 1.0,
                   detail=f"max over K <= 5000 of min squared norm over the "
                          f"exact bound; L = {L:.4f}")]


# ---------------------------------------------------------------------------
# stochastic single-call extragradient


def suite_speg_interpolated():
    """Interpolated game (sigma*^2 = 0): constant omega from the closed-form
    constants drives the 50-seed mean of R_k^2 below 1e-8 within the
    theorem's iteration budget, and the averaged per-step contraction stays
    within 10% of 1 - omega mu / 2."""
    spec = QuadraticGameSpec(n=50, d=5, eig_a=(0.5, 1.0), eig_b=(0.0, 1.0),
                             eig_c=(0.5, 1.0), interpolated=True, seed=3)
    proto = make_quadratic_game(spec)
    scheme = tau_minibatch(1)
    delta, sigma_sq = er_constants(proto, scheme)
    mu, L = proto.mu, proto.L
    omega = policy_constant(mu, delta, L)
    x0 = np.ones(proto.d)
    r0_sq = float((x0 - proto.x_star) @ (x0 - proto.x_star))
    budget = math.ceil(max(8.0 * L / mu, 36.0 * delta / mu**2)
                       * math.log(2.0 * r0_sq / 1e-8))

    ops = [proto.fresh() for _ in _SEEDS_50]
    rngs = [rng_stream(s, "speg-interpolated", "sampling") for s in _SEEDS_50]
    states = [speg_init(op, x0, scheme, rng) for op, rng in zip(ops, rngs)]

    def mean_r_sq():
        acc = 0.0
        for st in states:
            d1 = st.x - proto.x_star
            d2 = st.x - st.xhat_prev
            acc += float(d1 @ d1) + float(d2 @ d2)
        return acc / len(states)

    slacked = (1.0 - omega * mu / 2.0) * 1.1
    prev = mean_r_sq()
    worst = -math.inf
    hit = None
    for k in range(budget):
        states = [speg_step(op, st, omega, omega, scheme, rng)
                  for op, st, rng in zip(ops, states, rngs)]
        cur = mean_r_sq()
        worst = max(worst, cur / prev - slacked)
        prev = cur
        if cur < 1e-8:
            hit = k + 1
            break
    checks = [
        _check("speg-interpolated", "budget",
               hit if hit is not None else budget + 1, budget,
               detail=f"iteration at which mean R^2 < 1e-8 "
                      f"(sigma*^2 = {sigma_sq:.1e}, omega = {omega:.5f})"),
        _check("speg-interpolated", "averaged-contraction", worst, 0.0,
               detail="worst mean-ratio minus 1.1 (1 - omega mu / 2)"),
    ]
    return checks


def suite_speg_switching():
    """Non-interpolated game: at a matched budget of 1e5 oracle calls the
    switching policy's 50-seed mean relative error is at most half the
    constant policy's (it lands orders of magnitude lower)."""
    spec = QuadraticGameSpec(n=50, d=2, eig_a=(0.6, 1.0), eig_b=(0.0, 1.0),
                             eig_c=(0.6, 1.0), interpolated=False, seed=5)
    proto = make_quadratic_game(spec)
    scheme = tau_minibatch(10)
    delta, _ = er_constants(proto, scheme)
    mu, L = proto.mu, proto.L
    omega_bar = policy_constant(mu, delta, L)
    x0 = np.ones(proto.d)
    r0_sq = float((x0 - proto.x_star) @ (x0 - proto.x_star))
    finals = {}
    for label in ("constant", "switching"):
        errs = []
        for s in _SEEDS_50:
            op = proto.fresh()
            rng = rng_stream(s, "speg-switching-" + label, "sampling")
            st = speg_init(op, x0, scheme, rng)
            k = 0
            while op.calls + scheme.tau <= 100_000:
                w = omega_bar if label == "constant" else \
                    policy_switching(k, mu, delta, L)
                st = speg_step(op, st, w, w, scheme, rng)
                k += 1
            d = st.x - proto.x_star
            errs.append(float(d @ d) / r0_sq)
        finals[label] = float(np.mean(errs))
    ratio = finals["switching"] / finals["constant"]
    return [_check("speg-switching", "error-ratio-at-budget", ratio, 0.5,
                   detail=f"switching {finals['switching']:.3e} vs constant "
                          f"{finals['constant']:.3e}")]


def suite_er_constants():
    """Monte-Carlo second moment of the sampled residual stays below
    (delta/2) ||x - x*||^2 with 3% headroom at 100 random points, 1e4 draws,
    for tau in {1, n/10, n/2} and single-element uniform / importance."""
    spec = QuadraticGameSpec(n=100, d=3, eig_a=(0.5, 1.0), eig_b=(0.0, 1.0),
                             eig_c=(0.5, 1.0), interpolated=False, seed=13)
    op = make_quadratic_game(spec)
    n, dim = op.n, op.d
    rng_pts = rng_stream(0, "er-constants", "points")
    u = rng_pts.standard_normal((dim, 100))
    u *= rng_pts.uniform(0.5, 3.0, size=100)
    u_sq = np.sum(u * u, axis=0)
    p_all = np.einsum("nij,jk->nik", op.mats, u)
    p_bar = p_all.mean(axis=0)

    schemes = {
        "tau-1": tau_minibatch(1),
        "tau-n10": tau_minibatch(n // 10),
        "tau-n2": tau_minibatch(n // 2),
        "single-uniform": single_element(np.full(n, 1.0 / n)),
        "single-importance": single_element(
            importance_probabilities(op.L_list)),
    }
    draws = 10_000
    checks = []
    for label, scheme in schemes.items():
        delta, _ = er_constants(op, scheme)
        rng = rng_stream(1, "er-constants", label)
        idx = draw_index_matrix(scheme, rng, n, draws)
        acc = np.zeros(100)
        if scheme.kind == "tau_minibatch":
            chunk = max(1, 2_000_000 // (scheme.tau * dim))
            for lo in range(0, draws, chunk):
                est = p_all[idx[lo:lo + chunk]].mean(axis=1) - p_bar
                acc += np.sum(est * est, axis=1).sum(axis=0)
        else:
            coeff = 1.0 / (n * scheme.probs[idx])
            chunk = 2_000_000 // dim
            for lo in range(0, draws, chunk):
                est = (p_all[idx[lo:lo + chunk]]
                       * coeff[lo:lo + chunk, None, None] - p_bar)
                acc += np.sum(est * est, axis=1).sum(axis=0)
        worst = float(np.max((acc / draws) / (0.5 * delta * u_sq)))
        checks.append(_check("er-constants", label, worst, 1.03,
                             detail=f"worst point moment over (delta/2)||u||^2"
                                    f"; delta = {delta:.4f}"))
    return checks


def suite_weak_minty():
    """Scalar weak-Minty family (L = 8, rho = 1/32): SPEG with gamma = 0.08,
    omega = 0.01, batches of 6 drives the seed-averaged best squared full
    residual at the extrapolated points below 1e-3 of its initial value
    within 1e4 iterations."""
    proto = make_weak_minty_scalar(100, seed=2)
    scheme = tau_minibatch(6)
    gamma, omega = 0.08, 0.01
    x0 = np.ones(2)
    bests, firsts = [], []
    for s in _SEEDS_50:
        op = proto.fresh()
        rng = rng_stream(s, "weak-minty", "sampling")
        st = speg_init(op, x0, scheme, rng)
        best = math.inf
        first = None
        for _ in range(10_000):
            st = speg_step(op, st, gamma, omega, scheme, rng)
            f = op.full(st.xhat_prev, count=False)
            fsq = float(f @ f)
            if first is None:
                first = fsq
            best = min(best, fsq)
            if best < 1e-4 * first:
                break  # min over iterations only improves
        bests.append(best)
        firsts.append(first)
    ratio = float(np.mean(bests)) / float(np.mean(firsts))
    return [_check("weak-minty", "best-residual-decay", ratio, 1e-3,
                   detail="seed-averaged min ||F(xhat)||^2 over its initial "
                          "value")]


# ---------------------------------------------------------------------------
# Polyak step sizes


def suite_ls_budget():
    """100 random (L, gamma_start, A, beta) draws on 2x2 strongly monotone
    quadratics rescaled to sigma_max = L: the cumulative while-loop count
    over a 1000-iteration run never exceeds
    floor(log(L gamma_start / A) / log(1/beta)) + 1, and every accepted
    step stays at or above min(beta A / L, gamma_start)."""
    rng = rng_stream(0, "ls-budget", "configs")
    worst_budget = -math.inf
    worst_floor = math.inf
    for _ in range(100):
        L = float(np.exp(rng.uniform(np.log(0.5), np.log(20.0))))
        a_const = float(rng.uniform(0.1, 0.8))
        beta = float(rng.uniform(0.3, 0.9))
        gamma_start = float(np.exp(rng.uniform(0.0, np.log(100.0)))) \
            * a_const / L
        a, c = rng.uniform(0.2, 1.0, size=2)
        b = rng.uniform(0.0, 1.0)
        m = np.array([[a, b], [-b, c]])
        m *= L / np.linalg.svd(m, compute_uv=False)[0]
        op = AffineFiniteSumOperator([m], [np.zeros(2)],
                                     x_star=np.zeros(2), L=L)
        budget = while_loop_budget(L, gamma_start, a_const, beta)
        mode = gamma_line_search(beta, a_const, grow=False, cap=budget + 64)
        state = polyak_init(rng.uniform(-2.0, 2.0, size=2), gamma_start)
        floor = min(beta * a_const / L, gamma_start)
        for _ in range(1000):
            state = polyak_eg_step(op, state, mode)
            if state.converged:
                break
            worst_floor = min(worst_floor, state.gamma_prev - floor)
        worst_budget = max(worst_budget, state.loops_total - budget)
    return [
        _check("ls-budget", "cumulative-loops", worst_budget, 0.0,
               detail="worst loops_total minus the exact integer budget"),
        _check("ls-budget", "gamma-floor", -worst_floor, 0.0,
               detail="negated worst gamma minus min(beta A / L, "
                      "gamma_start); nonpositive means the floor held"),
    ]


def suite_polyak_contraction():
    """Constant gamma = 1/(3L) with acceptance threshold A = 1/3 gives the
    per-step squared-distance factor 1 - mu/(4L) exactly; checked for 2000
    steps with slack 1e-10 on a game whose labeled constants are
    mu = 0.01, L = 1."""
    spec = QuadraticGameSpec(n=100, d=30, eig_a=(0.01, 0.02),
                             eig_b=(0.0, 0.3), eig_c=(0.9, 1.0),
                             interpolated=True, seed=23)
    op = _translated_game(spec)
    mu, L = 0.01, 1.0
    factor = 1.0 - mu / (4.0 * L)
    mode = gamma_constant(1.0 / (3.0 * L))
    state = polyak_init(np.ones(op.d), 1.0 / (3.0 * L))
    d_prev = float(state.x @ state.x)
    worst = -math.inf
    steps = 0
    for _ in range(2000):
        state = polyak_eg_step(op, state, mode)
        if state.converged:
            break
        d_cur = float(state.x @ state.x)
        worst = max(worst, d_cur / d_prev - factor)
        d_prev = d_cur
        steps += 1
    checks = [
        _check("polyak-contraction", "per-step-factor", worst, 1e-10,
               detail=f"worst ratio minus (1 - mu/4L) over {steps} steps"),
        _check("polyak-contraction", "full-horizon", steps, 2000, le=False,
               detail="steps completed before any early convergence"),
    ]
    return checks


def suite_dec_polyak_schedule():
    """Decreasing Polyak SEG over 1e4 stochastic iterations: omega_k and
    gamma_k sqrt(k+1) are non-increasing as stored floats, and with line
    search on L-Lipschitz components gamma_k never drops below
    beta A / (L sqrt(k+1))."""
    spec = QuadraticGameSpec(n=20, d=2, eig_a=(0.5, 1.0), eig_b=(0.0, 1.0),
                             eig_c=(0.5, 1.0), interpolated=False, seed=9)
    op = make_quadratic_game(spec)
    scheme = tau_minibatch(1)
    l_max = float(np.max(op.L_list))
    beta, a_const = 0.5, 1.0 / 3.0
    gamma_start = 16.0 * a_const / l_max
    mode = gamma_line_search(beta, a_const, grow=False, cap=200)
    rng = rng_stream(1, "dec-polyak", "sampling")
    state = polyak_init(np.ones(op.d), gamma_start)
    bad_omega = bad_u = 0
    worst_floor = math.inf
    last_omega, last_u = math.inf, state.gamma_scaled
    for k in range(10_000):
        state = dec_polyak_seg_step(op, state, scheme, mode, rng)
        if state.converged:
            break
        if state.omega_prev > last_omega:
            bad_omega += 1
        if state.gamma_scaled > last_u:
            bad_u += 1
        floor = beta * a_const / (l_max * math.sqrt(k + 1.0))
        worst_floor = min(worst_floor, state.gamma_prev - floor)
        last_omega, last_u = state.omega_prev, state.gamma_scaled
    return [
        _check("dec-polyak-schedule", "omega-non-increasing", bad_omega, 0.0,
               detail="count of exact increases in omega_k"),
        _check("dec-polyak-schedule", "scaled-gamma-non-increasing", bad_u,
               0.0, detail="count of exact increases in gamma_k sqrt(k+1)"),
        _check("dec-polyak-schedule", "gamma-floor", -worst_floor, 0.0,
               detail=f"negated worst gamma minus beta A/(L sqrt(k+1)); "
                      f"loops_total = {state.loops_total}"),
    ]


# ---------------------------------------------------------------------------
# (L0, L1) machinery


_NU_WINDOWS = {
    "A": (0.363, 0.005),
    "B": (0.21, 0.005),
    "C": (0.45, 0.005),
    "D": (0.567, 0.005),
}


def suite_nu_roots():
    """The four transcendental step-size roots: residual below 1e-12 and
    value inside the printed window (+-0.005)."""
    checks = []
    for key, (center, width) in _NU_WINDOWS.items():
        nu = solve_nu(key)
        resid = abs(NU_EQUATIONS[key](nu))
        checks.append(_check("nu-roots", f"residual-{key}", resid, 1e-12,
                             detail=f"nu_{key} = {nu:.12f}"))
        checks.append(_check("nu-roots", f"window-{key}", abs(nu - center),
                             width, detail=f"|nu_{key} - {center}|"))
    return checks


def _sinh_game() -> FiniteSumOperator:
    """F(u) = (sinh u1 + u2/2, sinh u2 - u1/2): quasi-strongly monotone
    with mu = 1 exactly (u sinh u >= u^2 and the rotation is orthogonal to
    u), F(0) = 0 exactly in fp, and pointwise ||J(z)|| <= 1.12 + ||F(z)||
    on [-2,2]^2 (the binding point is the origin, where the gap is
    sqrt(5)/2 ~= 1.118)."""

    def f(u):
        return np.array([math.sinh(u[0]) + 0.5 * u[1],
                         math.sinh(u[1]) - 0.5 * u[0]])

    def jac(u):
        return np.array([[math.cosh(u[0]), 0.5], [-0.5, math.cosh(u[1])]])

    return FiniteSumOperator([f], 2, x_star=np.zeros(2), mu=1.0,
                             jacobian=jac, name="sinh-game")


def suite_l0l1_contraction():
    """Adaptive EG on the sinh game: certify (L0, L1) = (1.12, 1) on a grid
    covering the trajectory, then assert the per-step squared-distance
    factor 1 - nu mu / (L0 (1 + L1 e^{L1 R} R)) for 300 steps, slack 1e-8."""
    op = _sinh_game()
    l0, l1 = 1.12, 1.0
    grid = np.linspace(-2.0, 2.0, 201)
    worst_cert = -math.inf
    for u1 in grid:
        for u2 in grid:
            z = np.array([u1, u2])
            sj = float(np.linalg.svd(op.jacobian(z), compute_uv=False)[0])
            gap = sj - l1 * float(np.linalg.norm(op.full(z, count=False)))
            worst_cert = max(worst_cert, gap)
    cfg = make_l0l1_config("strongly_monotone", 1.0, l0, l1)
    x0 = np.array([0.5, 0.5])
    r = float(np.linalg.norm(x0))
    factor = 1.0 - NU_VALUES["A"] * op.mu / (l0 * (1.0 + l1 * math.exp(l1 * r) * r))
    x = x0
    d_prev = float(x @ x)
    worst = -math.inf
    for _ in range(300):
        x = eg_l0l1_step(op, x, cfg)
        d_cur = float(x @ x)
        worst = max(worst, d_cur / d_prev - factor)
        d_prev = d_cur
    return [
        _check("l0l1-contraction", "constant-certificate", worst_cert, l0,
               detail="grid max of ||J|| - L1 ||F|| must stay below L0"),
        _check("l0l1-contraction", "per-step-factor", worst, 1e-8,
               detail=f"worst ratio minus factor {factor:.6f}"),
    ]


def suite_l0l1_experiments():
    """Adaptive steps as run in the experiments chapter: the cubic game with
    (c0, c1) = (10, 10) reaches relative error 1e-6 within 1e5 iterations,
    GlobalForsaken from (1, 1) with (c0, c1) = (1, 1) reaches ||x|| < 1e-4,
    and in both runs gamma_k is non-decreasing from iteration 10 on."""
    checks = []

    op = make_cubic_minmax(d=5, seed=1)
    cfg = make_l0l1_config("monotone", 0.5, 0.0, 0.0, c0=10.0, c1=10.0)
    x0 = 0.5 * np.ones(op.d)
    r0_sq = float(x0 @ x0)
    x = x0
    gammas = []
    hit = 100_001
    for k in range(100_000):
        x, info = eg_l0l1_step(op, x, cfg, return_info=True)
        gammas.append(info["gamma"])
        if float(x @ x) / r0_sq < 1e-6:
            hit = k + 1
            break
    dips = int(np.sum(np.diff(np.array(gammas)[10:]) < 0.0))
    checks.append(_check("l0l1-experiments", "cubic-converges", hit, 100_000,
                         detail="iterations to relative error 1e-6 with "
                                "(c0, c1) = (10, 10)"))
    checks.append(_check("l0l1-experiments", "cubic-gamma-monotone", dips,
                         0.0, detail="gamma decreases after iteration 10"))

    gf = make_global_forsaken()
    cfg_gf = make_l0l1_config("weak_minty", 1.0, 0.0, 0.0, c0=1.0, c1=1.0)
    x = np.array([1.0, 1.0])
    gammas = []
    hit = 100_001
    for k in range(100_000):
        x, info = eg_l0l1_step(gf, x, cfg_gf, return_info=True)
        gammas.append(info["gamma"])
        if float(np.linalg.norm(x)) < 1e-4:
            hit = k + 1
            break
    dips = int(np.sum(np.diff(np.array(gammas)[10:]) < 0.0)) \
        if len(gammas) > 11 else 0
    checks.append(_check("l0l1-experiments", "forsaken-converges", hit,
                         100_000, detail="iterations to ||x|| < 1e-4 with "
                                         "(c0, c1) = (1, 1)"))
    checks.append(_check("l0l1-experiments", "forsaken-gamma-monotone", dips,
                         0.0, detail="gamma decreases after iteration 10"))
    return checks


def suite_jacobian_fit():
    """fit_l0l1 lifts the intercept so the bound holds at every sample:
    zero violations (<= 1e-6) on a 1e4-point grid for the cubic game, and
    on an affine game the fitted pair is (sqrt 2, 0) up to 1e-3 / 1e-6."""
    op = make_cubic_minmax(d=5, seed=1)
    rng = rng_stream(0, "jacobian-fit", "grid")
    pts = [rng.uniform(-2.0, 2.0, size=op.d) for _ in range(10_000)]
    _, _, viol = fit_l0l1(op, pts, 0.5)
    checks = [_check("jacobian-fit", "cubic-violations", viol, 1e-6,
                     detail="largest positive residual after the intercept "
                            "lift, 1e4 points")]

    m = np.array([[1.0, 1.0], [-1.0, 1.0]])
    lin = AffineFiniteSumOperator([m], [np.zeros(2)], x_star=np.zeros(2))
    pts2 = [rng.uniform(-3.0, 3.0, size=2) for _ in range(200)]
    l0, l1, _ = fit_l0l1(lin, pts2, 1.0)
    checks.append(_check("jacobian-fit", "linear-l0", abs(l0 - math.sqrt(2.0)),
                         1e-3, detail=f"fitted L0 = {l0:.8f}"))
    checks.append(_check("jacobian-fit", "linear-l1", l1, 1e-6,
                         detail="constant-norm operator fits slope zero"))
    return checks


# ---------------------------------------------------------------------------
# federated


def _fl_network():
    return fl.make_client_games(n_clients=20, m=100, d=20,
                                eig_a=(0.01, 0.05), eig_b=(0.0, 0.3),
                                eig_c=(0.9, 1.0), seed=7)


def suite_proxskip_lyapunov():
    """Deterministic ProxSkip at gamma = 1/(2 ell), p = sqrt(gamma mu).

    Window check: from a far start (iterate error ~1e2 times the
    control-variate error) V decreases by at least 1 - min(gamma mu, p^2)
    every one of 300 rounds, slack 1e-10.  Descent is an expectation
    statement, so no coin sequence sustains it forever; the window keeps
    the iterate-error term dominant, where it does hold pathwise.

    Communication check: from a unit-scale start, ProxSkip needs at most
    half the communicated rounds Local GDA (H = ceil(1/p), same gamma)
    needs to reach relative error 1e-6; Local GDA plateaus above it."""
    ops = _fl_network()
    mu, ell = fl.network_constants(ops)
    params = fl.theoretical_params("gda", ell, mu)
    gamma, p = params["gamma"], params["p"]
    rho = min(gamma * mu, p * p)
    z_star = fl.solve_consensus_solution(ops)
    f_star = [op.full(z_star, count=False) for op in ops]
    net = fl.NetworkConfig(n_clients=len(ops), gamma=gamma, p=p)

    direction = rng_stream(3, "proxskip-lyapunov", "start").standard_normal(
        ops[0].d)
    direction /= np.linalg.norm(direction)
    states = fl.init_clients(ops, z_star + 100.0 * direction)
    rng = rng_stream(1, "proxskip-lyapunov", "coins")
    v_prev = fl.lyapunov_V(states, z_star, f_star, gamma, p)
    worst = -math.inf
    for _ in range(300):
        states, _ = fl.proxskip_vip_round(states, net, rng=rng)
        v_cur = fl.lyapunov_V(states, z_star, f_star, gamma, p)
        worst = max(worst, v_cur / v_prev - (1.0 - rho))
        v_prev = v_cur
    checks = [_check("proxskip-lyapunov", "per-round-descent", worst, 1e-10,
                     detail=f"worst V ratio minus (1 - {rho:.5f}), 300 "
                            f"rounds")]

    x0 = z_star + rng_stream(4, "proxskip-comms", "start").standard_normal(
        ops[0].d)
    r0 = len(ops) * float((x0 - z_star) @ (x0 - z_star))

    def rel(states):
        return sum(float((st.x - z_star) @ (st.x - z_star))
                   for st in states) / r0

    states = fl.init_clients(ops, x0)
    rng = rng_stream(1, "proxskip-comms", "coins")
    log = fl.CommLog()
    ps_comms = None
    for _ in range(60_000):
        states, comm = fl.proxskip_vip_round(states, net, rng=rng)
        log.record(comm)
        if rel(states) <= 1e-6:
            ps_comms = log.rounds
            break
    if ps_comms is None:
        checks.append(_check("proxskip-lyapunov", "comm-advantage",
                             math.inf, 0.5,
                             detail="ProxSkip did not reach 1e-6"))
        return checks

    h_local = math.ceil(1.0 / p)
    states = fl.init_clients(ops, x0)
    cap = 10 * ps_comms
    lg_comms = cap
    for k in range(cap):
        states = fl.local_gda_round(states, h_local, gamma)
        if rel(states) <= 1e-6:
            lg_comms = k + 1
            break
    checks.append(_check("proxskip-lyapunov", "comm-advantage",
                         ps_comms / lg_comms, 0.5,
                         detail=f"{ps_comms} ProxSkip comms vs {lg_comms} "
                                f"Local GDA comm rounds (H = {h_local}; cap "
                                f"{cap} treated as not reached)"))
    return checks


def suite_proxskip_svrg():
    """Variance-reduced ProxSkip at the heterogeneous stochastic game:
    50-seed mean relative error below 1e-6 within the 20 (ell_hat/mu)
    log(1/eps) budget, while plain stochastic ProxSkip at the same budget
    plateaus at least 10x higher."""
    ops = fl.make_client_games(n_clients=10, m=10, d=2, eig_a=(0.5, 1.0),
                               eig_b=(0.0, 1.0), eig_c=(0.5, 1.0), seed=15)
    mu, ell_hat = fl.network_constants(ops, variance_reduced=True)
    params = fl.theoretical_params("svrg", ell_hat, mu)
    net = fl.NetworkConfig(n_clients=len(ops), gamma=params["gamma"],
                           p=params["p"], q=params["q"])
    budget = math.ceil(20.0 * (ell_hat / mu) * math.log(1e6))
    z_star = fl.solve_consensus_solution(ops)
    x0 = z_star + rng_stream(5, "proxskip-svrg", "start").standard_normal(
        ops[0].d)
    r0 = len(ops) * float((x0 - z_star) @ (x0 - z_star))
    scheme = tau_minibatch(1)
    finals = {"svrg": [], "plain": []}
    for seed in _SEEDS_50:
        for label in ("svrg", "plain"):
            sts = fl.init_clients([op.fresh() for op in ops], x0)
            rng = rng_stream(seed, "proxskip-svrg-" + label, "rounds")
            for _ in range(budget):
                if label == "svrg":
                    sts, _ = fl.proxskip_l_svrgda_round(sts, net, rng)
                else:
                    sts, _ = fl.proxskip_vip_round(sts, net, scheme, rng)
            finals[label].append(sum(
                float((st.x - z_star) @ (st.x - z_star)) for st in sts) / r0)
    svrg = float(np.mean(finals["svrg"]))
    plain = float(np.mean(finals["plain"]))
    return [
        _check("proxskip-svrg", "vr-budget", svrg, 1e-6,
               detail=f"mean relative error after {budget} rounds"),
        _check("proxskip-svrg", "plain-plateau", plain / max(svrg, 1e-300),
               10.0, le=False,
               detail=f"plain {plain:.3e} over vr {svrg:.3e}"),
    ]


def suite_comm_frequency():
    """Communicated fraction over 1e5 ProxSkip rounds within four binomial
    standard errors of p = 0.05."""
    m = np.array([[1.0]])
    op = AffineFiniteSumOperator([m], [np.zeros(1)], x_star=np.zeros(1))
    net = fl.NetworkConfig(n_clients=1, gamma=0.1, p=0.05)
    states = fl.init_clients([op], np.ones(1))
    rng = rng_stream(0, "comm-frequency", "coins")
    log = fl.CommLog()
    n_rounds = 100_000
    for _ in range(n_rounds):
        states, comm = fl.proxskip_vip_round(states, net, rng=rng)
        log.record(comm)
    freq = log.rounds / n_rounds
    tol = 4.0 * math.sqrt(0.05 * 0.95 / n_rounds)
    return [_check("comm-frequency", "frequency", abs(freq - 0.05), tol,
                   detail=f"measured {freq:.5f} over {n_rounds} rounds")]


# ---------------------------------------------------------------------------
# dispatch


_SUITES = {
    "eg-contraction": suite_eg_contraction,
    "eg-monotone-rate": suite_eg_monotone_rate,
    "speg-interpolated": suite_speg_interpolated,
    "speg-switching": suite_speg_switching,
    "er-constants": suite_er_constants,
    "weak-minty": suite_weak_minty,
    "ls-budget": suite_ls_budget,
    "polyak-contraction": suite_polyak_contraction,
    "dec-polyak-schedule": suite_dec_polyak_schedule,
    "nu-roots": suite_nu_roots,
    "l0l1-contraction": suite_l0l1_contraction,
    "l0l1-experiments": suite_l0l1_experiments,
    "jacobian-fit": suite_jacobian_fit,
    "proxskip-lyapunov": suite_proxskip_lyapunov,
    "proxskip-svrg": suite_proxskip_svrg,
    "comm-frequency": suite_comm_frequency,
}

SUITE_NAMES = tuple(_SUITES)


def verify_theory(suite: str = "all") -> VerifyReport:
    """Run one named suite, or every suite for "all"."""
    if suite == "all":
        report = VerifyReport("all")
        for fn in _SUITES.values():
            report.checks.extend(fn())
        return report
    if suite not in _SUITES:
        raise ValueError(f"unknown suite {suite!r}; known: "
                         f"{', '.join(SUITE_NAMES)} or 'all'")
    return VerifyReport(suite, _SUITES[suite]())
