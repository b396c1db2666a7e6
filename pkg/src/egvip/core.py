"""Shared primitives: operators, traces, seeded rng streams.

Everything downstream works with finite-sum root-finding problems

    find x* such that F(x*) = (1/n) sum_{i=1}^n F_i(x*) = 0,

where each component F_i maps R^d -> R^d. Operators carry whatever
problem metadata is known at construction time (solution, Lipschitz
constants, monotonicity moduli, ...) so solvers and checks never have
to re-derive it.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

# A point is a plain 1-d float64 array; we do not wrap it.
Point = np.ndarray

#: iterate norm beyond which a run is declared diverged
DIVERGENCE_NORM = 1e12

#: full-operator norm below which Polyak-type solvers report convergence
CONVERGED_NORM = 1e-14

STATUS_OK = "ok"
STATUS_DIVERGED = "diverged"
STATUS_CONVERGED = "converged"
STATUS_LINE_SEARCH_FAILURE = "line_search_failure"


def _label_key(label) -> int:
    # stable 32-bit key for a stream label (hash() is salted per process)
    digest = hashlib.sha256(str(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def rng_stream(seed: int, *labels) -> np.random.Generator:
    """Seeded generator for (seed, label, label, ...).

    Child streams are derived deterministically from the root seed and the
    label path, so ("exp1", 3, "sampling") always yields the same stream
    regardless of draw order elsewhere. Labels can be strings or ints.
    """
    key = tuple(_label_key(l) for l in labels)
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))


@dataclass
class TraceRecord:
    """One recorded point of a run.

    oracle_calls is cumulative (one call = one component evaluation),
    comm_rounds is cumulative and stays 0 outside the federated solvers.
    """

    iteration: int
    oracle_calls: int
    comm_rounds: int
    metrics: dict
    seed: int


@dataclass
class RunResult:
    status: str
    trace: list
    x: Point
    info: dict = field(default_factory=dict)


class FiniteSumOperator:
    """F(x) = (1/n) sum_i F_i(x) with components given as callables.

    The instance carries an oracle counter (``calls``); every counted
    evaluation of one component increments it by one. Metric code asks
    for uncounted evaluations instead of fudging the counter afterwards.
    """

    def __init__(self, components, d, *, x_star=None, mu=None, L=None, L_list=None,
                 rho=None, alpha=None, L0=None, L1=None, jacobian=None,
                 projection=None, name=""):
        self._components = list(components)
        self.d = int(d)
        self.x_star = None if x_star is None else np.asarray(x_star, dtype=float)
        self.mu = mu
        self.L = L
        self.L_list = None if L_list is None else np.asarray(L_list, dtype=float)
        self.rho = rho
        self.alpha = alpha
        self.L0 = L0
        self.L1 = L1
        self.jacobian = jacobian          # callable x -> (d, d) Jacobian of F, if known
        self.projection = projection      # callable x -> x, applied by constrained solvers
        self.name = name
        self.calls = 0

    @property
    def n(self) -> int:
        return len(self._components)

    def fresh(self):
        """Shallow copy with its own zeroed oracle counter."""
        import copy

        op = copy.copy(self)
        op.calls = 0
        return op

    # -- evaluation -----------------------------------------------------

    def component(self, i, x, *, count=True) -> Point:
        if count:
            self.calls += 1
        return self._components[i](x)

    def full(self, x, *, count=True) -> Point:
        """Mean over all components; counts n oracle calls."""
        if count:
            self.calls += self.n
        acc = self._components[0](x).astype(float, copy=True)
        for comp in self._components[1:]:
            acc += comp(x)
        acc /= self.n
        return acc

    def weighted(self, idx, coeffs, x, *, count=True) -> Point:
        """sum_j coeffs[j] * F_{idx[j]}(x); counts len(idx) calls.

        Coefficients are expected to already include the 1/n of the mean
        and any sampling weights, so a tau-minibatch estimate is
        weighted(S, ones/tau, x).
        """
        if count:
            self.calls += len(idx)
        acc = np.zeros(self.d)
        for j, i in enumerate(idx):
            acc += coeffs[j] * self._components[i](x)
        return acc


class AffineFiniteSumOperator(FiniteSumOperator):
    """Finite sum of affine components F_i(x) = M_i x + b_i.

    Stores the stacked (n, d, d) tensor so subset means vectorize; the
    quadratic games, the scalar weak-Minty family, robust least squares
    and the matrix games are all of this form.
    """

    def __init__(self, mats, offs, **meta):
        mats = np.asarray(mats, dtype=float)
        offs = np.asarray(offs, dtype=float)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2] or offs.shape != mats.shape[:2]:
            raise ValueError("expected mats (n, d, d) and offs (n, d)")
        self.mats = mats
        self.offs = offs
        self.mean_mat = mats.mean(axis=0)
        self.mean_off = offs.mean(axis=0)
        d = mats.shape[1]
        meta.setdefault("jacobian", lambda x, _M=self.mean_mat: _M)
        super().__init__([None] * mats.shape[0], d, **meta)

    @property
    def n(self) -> int:
        return self.mats.shape[0]

    def component(self, i, x, *, count=True) -> Point:
        if count:
            self.calls += 1
        return self.mats[i] @ x + self.offs[i]

    def full(self, x, *, count=True) -> Point:
        if count:
            self.calls += self.n
        return self.mean_mat @ x + self.mean_off

    def weighted(self, idx, coeffs, x, *, count=True) -> Point:
        if count:
            self.calls += len(idx)
        if len(idx) == 1:
            j = idx[0]
            return coeffs[0] * (self.mats[j] @ x + self.offs[j])
        vals = self.mats[idx] @ x + self.offs[idx]
        return coeffs @ vals


def eval_full(op: FiniteSumOperator, x: Point) -> Point:
    """F(x) as the mean of all n components; counts n oracle calls."""
    return op.full(x)


def eval_sampled(op: FiniteSumOperator, v: np.ndarray, x: Point) -> Point:
    """g(x) = (1/n) sum_i v_i F_i(x) for a sampling vector v; counts nnz(v) calls."""
    v = np.asarray(v, dtype=float)
    if v.shape != (op.n,):
        raise ValueError(f"sampling vector has shape {v.shape}, expected ({op.n},)")
    idx = np.flatnonzero(v)
    return op.weighted(idx, v[idx] / op.n, x)


def metric_relative_error(x: Point, x0: Point, x_star: Point) -> float:
    """||x - x*||^2 / ||x0 - x*||^2."""
    denom = float(np.sum((np.asarray(x0) - x_star) ** 2))
    if denom == 0.0:
        raise ValueError("relative error undefined: x0 equals x_star")
    return float(np.sum((np.asarray(x) - x_star) ** 2)) / denom


def is_diverged(x: Point) -> bool:
    """NaN/Inf anywhere, or iterate norm past DIVERGENCE_NORM."""
    x = np.asarray(x)
    if not np.all(np.isfinite(x)):
        return True
    return float(np.linalg.norm(x)) > DIVERGENCE_NORM
