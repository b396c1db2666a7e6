"""Constructors for the operator testbeds used in the experiments.

Every constructor returns a :class:`~egvip.core.FiniteSumOperator` (affine
families use the dense :class:`~egvip.core.AffineFiniteSumOperator`) carrying
whatever metadata the solvers and theory checks need: the solution when it is
known, a strong-monotonicity modulus ``mu``, per-component Lipschitz constants,
a weak-Minty parameter ``rho``, and so on.

Convention for the ``mu`` field: ``mu > 0`` means the mean operator is
mu-(quasi-)strongly monotone, ``mu == 0.0`` means plain monotone, and ``None``
means neither is claimed (the weak-Minty instances carry ``rho`` instead).

All randomness is funneled through :func:`~egvip.core.rng_stream`, so a
``(seed, label)`` pair pins an instance bit for bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import AffineFiniteSumOperator, FiniteSumOperator, Point, rng_stream

__all__ = [
    "QuadraticGameSpec",
    "make_quadratic_game",
    "make_weak_minty_scalar",
    "make_global_forsaken",
    "make_cubic_minmax",
    "make_robust_least_squares",
    "synthetic_rls_data",
    "load_rls_csv",
    "make_policeman_burglar",
    "make_sign_power_operator",
    "project_simplex",
    "duality_gap",
]


# ---------------------------------------------------------------------------
# random matrix helpers


def _random_orthogonal(rng: np.random.Generator, d: int) -> np.ndarray:
    """Haar-ish orthogonal matrix via QR with a sign-fixed R diagonal."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def _random_spd(rng: np.random.Generator, d: int, lo: float, hi: float) -> np.ndarray:
    """Symmetric matrix Q diag(eig) Q^T with eigenvalues uniform in [lo, hi]."""
    q = _random_orthogonal(rng, d)
    eig = rng.uniform(lo, hi, size=d)
    m = (q * eig) @ q.T
    return 0.5 * (m + m.T)


def _random_with_singular_values(
    rng: np.random.Generator, d: int, lo: float, hi: float
) -> np.ndarray:
    u = _random_orthogonal(rng, d)
    v = _random_orthogonal(rng, d)
    s = rng.uniform(lo, hi, size=d)
    return (u * s) @ v.T


def _check_interval(name: str, interval) -> tuple[float, float]:
    lo, hi = float(interval[0]), float(interval[1])
    if lo < 0.0:
        raise ValueError(f"{name}: lower bound must be >= 0, got {lo}")
    if hi < lo:
        raise ValueError(f"{name}: empty interval [{lo}, {hi}]")
    return lo, hi


def _component_spectral_norms(mats: np.ndarray) -> np.ndarray:
    # np.linalg.svd on a stack returns singular values in descending order.
    return np.linalg.svd(mats, compute_uv=False)[:, 0]


# ---------------------------------------------------------------------------
# quadratic games


@dataclass(frozen=True)
class QuadraticGameSpec:
    """Parameters of a random finite-sum quadratic saddle-point game.

    ``d`` is the dimension of each player's block, so the operator lives in
    R^{2d}.  ``eig_a`` / ``eig_c`` bound the eigenvalues of the symmetric PSD
    diagonal blocks, ``eig_b`` bounds the singular values of the coupling
    block.  With ``interpolated=True`` the linear terms are chosen so every
    component vanishes at the drawn solution.
    """

    n: int
    d: int
    eig_a: tuple[float, float] = (0.1, 1.0)
    eig_b: tuple[float, float] = (0.0, 1.0)
    eig_c: tuple[float, float] = (0.1, 1.0)
    interpolated: bool = False
    seed: int = 0


def make_quadratic_game(spec: QuadraticGameSpec) -> AffineFiniteSumOperator:
    """Random game with components F_i(w1, w2) = (A_i w1 + B_i w2 + a_i,
    C_i w2 - B_i^T w1 + c_i).

    The metadata modulus is ``min(eig_a.lo, eig_c.lo)``: the symmetric part of
    the mean block matrix is blockdiag(mean A_i, mean C_i), and averaging
    preserves the common eigenvalue floor.
    """
    if spec.n < 1:
        raise ValueError("need at least one component")
    a_lo, a_hi = _check_interval("eig_a", spec.eig_a)
    b_lo, b_hi = _check_interval("eig_b", spec.eig_b)
    c_lo, c_hi = _check_interval("eig_c", spec.eig_c)

    rng = rng_stream(spec.seed, "quadratic-game")
    n, d = spec.n, spec.d
    mats = np.zeros((n, 2 * d, 2 * d))
    for i in range(n):
        a = _random_spd(rng, d, a_lo, a_hi)
        b = _random_with_singular_values(rng, d, b_lo, b_hi)
        c = _random_spd(rng, d, c_lo, c_hi)
        mats[i, :d, :d] = a
        mats[i, :d, d:] = b
        mats[i, d:, :d] = -b.T
        mats[i, d:, d:] = c

    if spec.interpolated:
        x_star = rng.standard_normal(2 * d)
        offs = -mats @ x_star
    else:
        offs = rng.standard_normal((n, 2 * d))
        x_star = np.linalg.solve(mats.mean(axis=0), -offs.mean(axis=0))

    l_list = _component_spectral_norms(mats)
    op = AffineFiniteSumOperator(
        mats,
        offs,
        x_star=x_star,
        mu=min(a_lo, c_lo),
        L=float(np.linalg.norm(mats.mean(axis=0), 2)),
        L_list=l_list,
        name="quadratic-game",
    )
    return op


def make_weak_minty_scalar(n: int, seed: int = 0) -> AffineFiniteSumOperator:
    """Finite sum of rotation-like 2x2 components F_i = [[z_i, s_i], [-s_i, z_i]] x.

    Coefficients are drawn around (-1, sqrt(63)) and then shifted so the means
    are exact, which pins the mean operator at [[-1, sqrt(63)], [-sqrt(63), -1]]
    with norm 8.  The game is weak Minty with rho = 1/32 around x* = 0, and
    because every component is linear with zero offset the noise at the
    solution vanishes.
    """
    if n < 2:
        raise ValueError("need n >= 2 to shift the empirical means")
    rng = rng_stream(seed, "weak-minty-scalar")
    zeta = rng.normal(-1.0, 1.0, size=n)
    xi = rng.normal(np.sqrt(63.0), 1.0, size=n)
    zeta += -1.0 - zeta.mean()
    xi += np.sqrt(63.0) - xi.mean()

    mats = np.zeros((n, 2, 2))
    mats[:, 0, 0] = zeta
    mats[:, 0, 1] = xi
    mats[:, 1, 0] = -xi
    mats[:, 1, 1] = zeta
    offs = np.zeros((n, 2))
    return AffineFiniteSumOperator(
        mats,
        offs,
        x_star=np.zeros(2),
        L=8.0,
        L_list=_component_spectral_norms(mats),
        rho=1.0 / 32.0,
        name="weak-minty-scalar",
    )


# ---------------------------------------------------------------------------
# nonlinear toy problems


def _psi_prime(w):
    return (4.0 / 7.0) * w**5 - (4.0 / 3.0) * w**3 + (2.0 / 3.0) * w


def _psi_second(w):
    return (20.0 / 7.0) * w**4 - 4.0 * w**2 + 2.0 / 3.0


def make_global_forsaken() -> FiniteSumOperator:
    """Two-dimensional polynomial game whose only equilibrium is the origin.

    F(w1, w2) = (w2 + psi'(w1), -w1 + psi'(w2)) with
    psi(w) = 2w^6/21 - w^4/3 + w^2/3.  Not monotone; satisfies the weak Minty
    condition with rho just under 0.12, which is why it serves as the stress
    test for the weak-Minty step-size rules.
    """

    def f(x: Point) -> Point:
        return np.array([x[1] + _psi_prime(x[0]), -x[0] + _psi_prime(x[1])])

    def jac(x: Point) -> np.ndarray:
        return np.array([[_psi_second(x[0]), 1.0], [-1.0, _psi_second(x[1])]])

    return FiniteSumOperator(
        [f],
        2,
        x_star=np.zeros(2),
        rho=0.119732,
        jacobian=jac,
        name="global-forsaken",
    )


def make_cubic_minmax(
    d: int,
    seed: int = 0,
    eig_a: tuple[float, float] = (0.5, 1.0),
    eig_b: tuple[float, float] = (0.5, 1.0),
    eig_c: tuple[float, float] = (0.5, 1.0),
) -> FiniteSumOperator:
    """Monotone but non-Lipschitz game from the cubic-growth saddle function
    (1/3)(w1^T A w1)^{3/2} + w1^T B w2 - (1/3)(w2^T C w2)^{3/2}.

    A, B, C are symmetric positive definite with eigenvalues in the given
    intervals.  F(x) = ((w1^T A w1)^{1/2} A w1 + B w2,
    (w2^T C w2)^{1/2} C w2 - B^T w1); the only zero is the origin, and the
    Jacobian norm grows like ||x||, so constant-step methods need tiny steps
    while the gradient-norm-adaptive ones do not.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = rng_stream(seed, "cubic-minmax")
    a = _random_spd(rng, d, *_check_interval("eig_a", eig_a))
    b = _random_spd(rng, d, *_check_interval("eig_b", eig_b))
    c = _random_spd(rng, d, *_check_interval("eig_c", eig_c))

    def f(x: Point) -> Point:
        w1, w2 = x[:d], x[d:]
        aw1 = a @ w1
        cw2 = c @ w2
        qa = np.sqrt(max(w1 @ aw1, 0.0))
        qc = np.sqrt(max(w2 @ cw2, 0.0))
        return np.concatenate([qa * aw1 + b @ w2, qc * cw2 - b @ w1])

    def jac(x: Point) -> np.ndarray:
        w1, w2 = x[:d], x[d:]
        aw1 = a @ w1
        cw2 = c @ w2
        qa = np.sqrt(max(w1 @ aw1, 0.0))
        qc = np.sqrt(max(w2 @ cw2, 0.0))
        out = np.zeros((2 * d, 2 * d))
        out[:d, :d] = qa * a
        if qa > 0.0:
            out[:d, :d] += np.outer(aw1, aw1) / qa
        out[d:, d:] = qc * c
        if qc > 0.0:
            out[d:, d:] += np.outer(cw2, cw2) / qc
        out[:d, d:] = b
        out[d:, :d] = -b
        return out

    return FiniteSumOperator(
        [f],
        2 * d,
        x_star=np.zeros(2 * d),
        mu=0.0,
        alpha=0.5,
        jacobian=jac,
        name="cubic-minmax",
    )


def make_sign_power_operator(q: float = 3.0) -> FiniteSumOperator:
    """Odd power-growth operator F(u1, u2) = (sign(u1)|u1|^q + u2,
    sign(u2)|u2|^q - u1).

    Monotone (the symmetric part of the Jacobian is diag(q|u|^{q-1}) >= 0)
    with zero at the origin.  The Jacobian norm grows like ||F||^{(q-1)/q},
    so alpha = (q-1)/q.  The default q = 3 is the exponent at which
    fit_l0l1 on a radial sample grid reproduces the quoted constants
    (L0, L1) = (1 + 2*sqrt(2), 2*sqrt(2)); smaller exponents cap the fitted
    slope below 2*sqrt(2).  Those constants are attached as metadata only
    for the default exponent, since they are specific to it.
    """
    if not q > 1.0:
        raise ValueError("q must be > 1")
    is_default = q == 3.0

    def f(x: Point) -> Point:
        return np.array(
            [
                np.sign(x[0]) * abs(x[0]) ** q + x[1],
                np.sign(x[1]) * abs(x[1]) ** q - x[0],
            ]
        )

    def jac(x: Point) -> np.ndarray:
        return np.array(
            [
                [q * abs(x[0]) ** (q - 1.0), 1.0],
                [-1.0, q * abs(x[1]) ** (q - 1.0)],
            ]
        )

    return FiniteSumOperator(
        [f],
        2,
        x_star=np.zeros(2),
        mu=0.0,
        alpha=(q - 1.0) / q,
        L0=1.0 + 2.0 * np.sqrt(2.0) if is_default else None,
        L1=2.0 * np.sqrt(2.0) if is_default else None,
        jacobian=jac,
        name="sign-power",
    )


# ---------------------------------------------------------------------------
# robust least squares


def make_robust_least_squares(
    a_mat: np.ndarray, y0: np.ndarray, lam: float, n_nodes: int = 1
) -> AffineFiniteSumOperator:
    """Saddle operator of the penalized robust least-squares objective
    ||A beta - y||^2 - lam ||y - y0||^2, split row-wise into n_nodes blocks.

    Components are scaled by n_nodes so their mean equals the gradient
    operator of the full (summed) objective; the modulus metadata
    min{2 lambda_min(A^T A), 2(lam - 1)} then applies to the mean operator
    exactly.  lam must exceed 1 or the y-block is not strongly concave.
    """
    a_mat = np.asarray(a_mat, dtype=float)
    y0 = np.asarray(y0, dtype=float).ravel()
    if a_mat.ndim != 2:
        raise ValueError("A must be a 2-d matrix")
    r, s = a_mat.shape
    if y0.shape != (r,):
        raise ValueError(f"y0 must have length {r}, got {y0.shape}")
    if not lam > 1.0:
        raise ValueError("lam must be > 1 for strong monotonicity")
    if not 1 <= n_nodes <= r:
        raise ValueError("n_nodes must be between 1 and the number of rows")

    dim = s + r
    base = r // n_nodes
    bounds = [i * base for i in range(n_nodes)] + [r]

    mats = np.zeros((n_nodes, dim, dim))
    offs = np.zeros((n_nodes, dim))
    for i in range(n_nodes):
        lo, hi = bounds[i], bounds[i + 1]
        rows = a_mat[lo:hi]
        m = mats[i]
        m[:s, :s] = 2.0 * rows.T @ rows
        m[:s, s + lo : s + hi] = -2.0 * rows.T
        m[s + lo : s + hi, :s] = 2.0 * rows
        m[s + lo : s + hi, s + lo : s + hi] = (2.0 * lam - 2.0) * np.eye(hi - lo)
        m *= n_nodes
        offs[i, s + lo : s + hi] = -2.0 * lam * n_nodes * y0[lo:hi]

    mean_mat = mats.mean(axis=0)
    mean_off = offs.mean(axis=0)
    x_star = np.linalg.solve(mean_mat, -mean_off)
    mu = min(
        2.0 * float(np.linalg.eigvalsh(a_mat.T @ a_mat)[0]),
        2.0 * (lam - 1.0),
    )
    return AffineFiniteSumOperator(
        mats,
        offs,
        x_star=x_star,
        mu=mu,
        L=float(np.linalg.norm(mean_mat, 2)),
        L_list=_component_spectral_norms(mats),
        name="robust-least-squares",
    )


def synthetic_rls_data(
    r: int = 200, s: int = 20, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Random regression data y0 = A beta0 + eps with the appendix dimensions."""
    rng = rng_stream(seed, "rls-data")
    a_mat = rng.standard_normal((r, s))
    beta0 = rng.normal(0.0, np.sqrt(0.1), size=s)
    eps = rng.normal(0.0, np.sqrt(0.01), size=r)
    return a_mat, a_mat @ beta0 + eps


def load_rls_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read regression data from CSV: header row, one sample per row, last
    column is the target y0."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric value") from exc
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    if data.shape[1] < 2:
        raise ValueError(f"{path}: need at least one feature column plus target")
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: non-finite values")
    return data[:, :-1], data[:, -1]


# ---------------------------------------------------------------------------
# matrix game on the simplex


def make_policeman_burglar(n: int, d: int, seed: int = 0) -> AffineFiniteSumOperator:
    """Bilinear matrix game on the product of two d-simplices.

    Each payoff matrix has entries A_i(r, s) = w_r (1 - exp(-0.8 |r - s|))
    with w_r = |N(0,1)|, so the diagonal vanishes and all entries are
    nonnegative.  The operator components are F_i(x1, x2) =
    (A_i x2, -A_i^T x1), and the attached projection clips both blocks back
    onto the simplex after every solver step.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    rng = rng_stream(seed, "policeman-burglar")
    idx = np.arange(d)
    decay = 1.0 - np.exp(-0.8 * np.abs(idx[:, None] - idx[None, :]))

    mats = np.zeros((n, 2 * d, 2 * d))
    payoffs = np.zeros((n, d, d))
    for i in range(n):
        w = np.abs(rng.standard_normal(d))
        payoffs[i] = w[:, None] * decay
        mats[i, :d, d:] = payoffs[i]
        mats[i, d:, :d] = -payoffs[i].T

    def proj(x: Point) -> Point:
        return np.concatenate([project_simplex(x[:d]), project_simplex(x[d:])])

    op = AffineFiniteSumOperator(
        np.asarray(mats),
        np.zeros((n, 2 * d)),
        mu=0.0,
        L_list=_component_spectral_norms(mats),
        projection=proj,
        name="policeman-burglar",
    )
    op.L = float(np.linalg.norm(op.mean_mat, 2))
    op.payoff_mean = payoffs.mean(axis=0)
    return op


def project_simplex(x: Point) -> Point:
    """Euclidean projection onto the probability simplex (sort and threshold)."""
    x = np.asarray(x, dtype=float)
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, x.size + 1)
    k = ks[u - css / ks > 0][-1]
    return np.maximum(x - css[k - 1] / k, 0.0)


def duality_gap(a_mean: np.ndarray, x1: Point, x2: Point) -> float:
    """Exploitability max_j (x1^T A)_j - min_i (A x2)_i of a simplex pair.

    Both points must lie on the simplex; the gap of a matrix game is then
    nonnegative and zero exactly at equilibria.
    """
    for name, p in (("x1", x1), ("x2", x2)):
        p = np.asarray(p)
        if abs(p.sum() - 1.0) > 1e-8 or p.min() < -1e-8:
            raise ValueError(f"{name} is not on the simplex")
    return float(np.max(x1 @ a_mean) - np.min(a_mean @ x2))
