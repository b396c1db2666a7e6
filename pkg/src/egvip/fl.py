"""Simulated federated solvers with communication accounting.

The distributed problem is the consensus reformulation: every client i keeps a
full copy x_i of the decision variable, the stacked operator is the sum of the
per-client operators H_i (each a finite-sum mean over that client's data), and
the consensus regularizer's prox is plain averaging.  ProxSkip replaces the
prox at every step with a prox at random steps: a server coin theta_k with
probability p decides whether this round communicates, and the control vectors
h_i absorb the client drift so that skipping rounds does not bias the limit.

Everything here is single-threaded and sequential in client order; the unit of
cost the thesis cares about is the number of averaging events, tracked by
CommLog, plus each operator's own oracle counter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .core import FiniteSumOperator, Point, rng_stream
from .problems import QuadraticGameSpec, make_quadratic_game
from .sampling import SamplingScheme, draw_indices

__all__ = [
    "ClientState",
    "NetworkConfig",
    "CommLog",
    "init_clients",
    "consensus_prox",
    "proxskip_vip_round",
    "proxskip_l_svrgda_round",
    "local_gda_round",
    "local_eg_round",
    "theoretical_params",
    "lyapunov_V",
    "svrg_sigma_sq",
    "cocoercivity_affine",
    "network_constants",
    "solve_consensus_solution",
    "make_client_games",
]


@dataclass
class ClientState:
    """One client's local iterate, control variate, and SVRG anchor.

    ``f_w`` caches the full local evaluation at the anchor so the
    variance-reduced estimator pays m_i oracle calls only when the anchor
    actually moves.
    """

    op: FiniteSumOperator
    x: Point
    h: Point
    w: Point
    f_w: Optional[Point] = None


@dataclass(frozen=True)
class NetworkConfig:
    """Round parameters: communication probability p, SVRG anchor probability
    q, and the common step size.  Theoretical mode ties p = sqrt(gamma mu) and
    q = 2 gamma mu (see theoretical_params)."""

    n_clients: int
    gamma: float
    p: float
    q: float = 0.0

    def __post_init__(self):
        if self.n_clients < 1:
            raise ValueError("need at least one client")
        if not 0.0 < self.p <= 1.0:
            raise ValueError("p must be in (0, 1]")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError("q must be in [0, 1]")
        if not self.gamma > 0.0:
            raise ValueError("gamma must be positive")


@dataclass
class CommLog:
    """Counts averaging events against total rounds."""

    iterations: int = 0
    rounds: int = 0
    indices: list = field(default_factory=list)

    def record(self, communicated: bool) -> None:
        if communicated:
            self.rounds += 1
            self.indices.append(self.iterations)
        self.iterations += 1


def init_clients(ops: Sequence[FiniteSumOperator], x0: Point) -> list[ClientState]:
    """All clients start at the same point with zero control variates and the
    start point as SVRG anchor."""
    x0 = np.asarray(x0, dtype=float)
    return [
        ClientState(op=op, x=x0.copy(), h=np.zeros_like(x0), w=x0.copy())
        for op in ops
    ]


def consensus_prox(points: Sequence[Point]) -> list[Point]:
    """Prox of the consensus indicator: every block becomes the average."""
    if len(points) == 0:
        raise ValueError("consensus prox of an empty list")
    avg = np.mean(np.stack([np.asarray(p, dtype=float) for p in points]), axis=0)
    return [avg.copy() for _ in points]


def _estimate(op, scheme, rng, x):
    if scheme is None or scheme.kind == "full":
        return op.full(x)
    idx, coeffs = draw_indices(scheme, rng, op.n)
    return op.weighted(idx, coeffs, x)


def _comm_branch(states, xhats, cfg, communicated):
    ratio = cfg.gamma / cfg.p
    if communicated:
        new_xs = consensus_prox([xh - ratio * st.h for st, xh in zip(states, xhats)])
    else:
        new_xs = xhats
    out = []
    for st, xh, x_new in zip(states, xhats, new_xs):
        h_new = st.h + (x_new - xh) / ratio
        out.append(replace(st, x=x_new, h=h_new))
    return out


def proxskip_vip_round(
    states: Sequence[ClientState],
    cfg: NetworkConfig,
    scheme: Optional[SamplingScheme] = None,
    rng: Optional[np.random.Generator] = None,
) -> tuple[list[ClientState], bool]:
    """One ProxSkip-VIP-FL round.

    Per client: x_hat = x - gamma (g - h) with g the full or sampled local
    evaluation.  A single server coin decides communication; on heads all
    clients are replaced by the average of their shifted points
    x_hat - (gamma/p) h and the control variates absorb the correction
    h += (p/gamma)(x_new - x_hat), which is a no-op on tails.
    """
    if rng is None:
        raise ValueError("rng is required (server coin)")
    communicated = bool(rng.random() < cfg.p)
    xhats = [
        st.x - cfg.gamma * (_estimate(st.op, scheme, rng, st.x) - st.h)
        for st in states
    ]
    return _comm_branch(states, xhats, cfg, communicated), communicated


def proxskip_l_svrgda_round(
    states: Sequence[ClientState],
    cfg: NetworkConfig,
    rng: Optional[np.random.Generator] = None,
) -> tuple[list[ClientState], bool]:
    """Variance-reduced round: loopless SVRG estimator inside ProxSkip.

    The server draws the communication coin theta and the anchor coin zeta
    once each; clients then draw their own component index.  The anchor coin
    is applied before the estimator, so q = 1 degenerates to the exact
    deterministic round (w_i = x_i makes the correction terms cancel).
    """
    if rng is None:
        raise ValueError("rng is required (server coins)")
    communicated = bool(rng.random() < cfg.p)
    refresh = bool(rng.random() < cfg.q)
    xhats = []
    new_states = []
    for st in states:
        if refresh or st.f_w is None:
            st = replace(st, w=st.x.copy(), f_w=None) if refresh else st
            st = replace(st, f_w=st.op.full(st.w))
        j = int(rng.integers(st.op.n))
        g = st.op.component(j, st.x) - st.op.component(j, st.w) + st.f_w
        xhats.append(st.x - cfg.gamma * (g - st.h))
        new_states.append(st)
    return _comm_branch(new_states, xhats, cfg, communicated), communicated


def local_gda_round(
    states: Sequence[ClientState],
    sync_every: int,
    gamma: float,
    scheme: Optional[SamplingScheme] = None,
    rng: Optional[np.random.Generator] = None,
) -> list[ClientState]:
    """Local (S)GDA baseline: sync_every local descent-ascent steps per
    client, then exact averaging (one communication)."""
    if sync_every < 1:
        raise ValueError("sync_every must be >= 1")
    if not gamma > 0.0:
        raise ValueError("gamma must be positive")
    xs = [st.x for st in states]
    for _ in range(sync_every):
        xs = [x - gamma * _estimate(st.op, scheme, rng, x) for st, x in zip(states, xs)]
    return [replace(st, x=x_new) for st, x_new in zip(states, consensus_prox(xs))]


def local_eg_round(
    states: Sequence[ClientState],
    sync_every: int,
    gamma: float,
    omega: Optional[float] = None,
    scheme: Optional[SamplingScheme] = None,
    rng: Optional[np.random.Generator] = None,
) -> list[ClientState]:
    """Local (S)EG baseline with same-sample extrapolation, then averaging."""
    if sync_every < 1:
        raise ValueError("sync_every must be >= 1")
    if not gamma > 0.0:
        raise ValueError("gamma must be positive")
    omega = gamma if omega is None else omega
    xs = [st.x for st in states]
    for _ in range(sync_every):
        nxt = []
        for st, x in zip(states, xs):
            if scheme is None or scheme.kind == "full":
                xh = x - gamma * st.op.full(x)
                nxt.append(x - omega * st.op.full(xh))
            else:
                idx, coeffs = draw_indices(scheme, rng, st.op.n)
                xh = x - gamma * st.op.weighted(idx, coeffs, x)
                nxt.append(x - omega * st.op.weighted(idx, coeffs, xh))
        xs = nxt
    return [replace(st, x=x_new) for st, x_new in zip(states, consensus_prox(xs))]


# ---------------------------------------------------------------------------
# parameter selection and Lyapunov bookkeeping


def theoretical_params(mode: str, ell: float, mu: float) -> dict:
    """Step size and probabilities from the convergence corollaries.

    mode="gda": gamma = 1/(2 ell) with ell the star-cocoercivity constant.
    mode="svrg": gamma = min{1/mu, 1/(6 ell)} with ell the expected-residual
    constant of the component operators, plus the anchor probability
    q = 2 gamma mu.  Both modes communicate with p = sqrt(gamma mu).
    """
    if not (ell > 0.0 and mu > 0.0):
        raise ValueError("ell and mu must be positive")
    if mode == "gda":
        gamma = 1.0 / (2.0 * ell)
        return {"gamma": gamma, "p": math.sqrt(gamma * mu), "q": 0.0}
    if mode == "svrg":
        gamma = min(1.0 / mu, 1.0 / (6.0 * ell))
        return {"gamma": gamma, "p": math.sqrt(gamma * mu), "q": 2.0 * gamma * mu}
    raise ValueError(f"unknown mode {mode!r}")


def lyapunov_V(
    states: Sequence[ClientState],
    x_star: Point,
    f_star: Sequence[Point],
    gamma: float,
    p: float,
    M: float = 0.0,
    sigma_sq: float = 0.0,
) -> float:
    """V = sum_i ||x_i - z*||^2 + (gamma^2/p^2) sum_i ||h_i - H_i(z*)||^2
    + M gamma^2 sigma^2, over the stacked consensus coordinates."""
    if x_star is None:
        raise ValueError("Lyapunov metric needs the consensus solution")
    v = 0.0
    for st, fs in zip(states, f_star):
        v += float(np.sum((st.x - x_star) ** 2))
        v += (gamma / p) ** 2 * float(np.sum((st.h - fs) ** 2))
    return v + M * gamma**2 * sigma_sq


def svrg_sigma_sq(states: Sequence[ClientState], x_star: Point) -> float:
    """sigma_k^2 = sum_i (1/m_i) sum_j ||F_ij(z*) - F_ij(w_i)||^2, evaluated
    without touching the oracle counters."""
    total = 0.0
    for st in states:
        acc = 0.0
        for j in range(st.op.n):
            diff = st.op.component(j, x_star, count=False) - st.op.component(
                j, st.w, count=False
            )
            acc += float(diff @ diff)
        total += acc / st.op.n
    return total


def cocoercivity_affine(mat: np.ndarray) -> float:
    """Star-cocoercivity constant of an affine operator x -> Mx + b around its
    zero: ell = max over eigenvalues of |lambda|^2 / Re(lambda)."""
    eig = np.linalg.eigvals(np.asarray(mat, dtype=float))
    re = eig.real
    if np.any(re <= 0.0):
        return math.inf
    return float(np.max(np.abs(eig) ** 2 / re))


def network_constants(
    ops: Sequence[FiniteSumOperator], variance_reduced: bool = False
) -> tuple[float, float]:
    """(mu, ell) for a network of affine clients.

    mu is the worst per-client modulus min_i lambda_min(sym(mean M_i)).  ell
    is max_i over the client mean matrices for the deterministic method, and
    the max over every component matrix for the variance-reduced one (each
    component's cocoercivity inequality averages into the assumption the
    corollary needs).
    """
    mus = []
    ells = []
    for op in ops:
        mean = op.mean_mat
        sym = 0.5 * (mean + mean.T)
        mus.append(float(np.linalg.eigvalsh(sym)[0]))
        if variance_reduced:
            ells.extend(cocoercivity_affine(m) for m in op.mats)
        else:
            ells.append(cocoercivity_affine(mean))
    return min(mus), max(ells)


def solve_consensus_solution(ops: Sequence[FiniteSumOperator]) -> Point:
    """Zero of the stacked sum: solve sum_i (M_i z + b_i) = 0 for affine
    clients."""
    mat = sum(op.mean_mat for op in ops)
    off = sum(op.mean_off for op in ops)
    return np.linalg.solve(mat, -off)


def make_client_games(
    n_clients: int,
    m: int,
    d: int,
    eig_a=(0.01, 1.0),
    eig_b=(0.0, 1.0),
    eig_c=(0.01, 1.0),
    seed: int = 0,
    interpolated: bool = False,
) -> list[FiniteSumOperator]:
    """Heterogeneous quadratic-game clients: n_clients independent m-component
    games over R^{2d}, each drawn from its own stream of the given seed."""
    return [
        make_quadratic_game(
            QuadraticGameSpec(
                n=m,
                d=d,
                eig_a=eig_a,
                eig_b=eig_b,
                eig_c=eig_c,
                interpolated=interpolated,
                seed=int(rng_stream(seed, "client", str(i)).integers(2**31)),
            )
        )
        for i in range(n_clients)
    ]
