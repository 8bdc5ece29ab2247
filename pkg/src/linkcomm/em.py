"""Reference EM for the Poisson link-community model.

This is the straightforward implementation: it keeps the full propensity
matrix ``theta`` (n x K) and an explicit responsibility vector for every
edge, and evaluates the exact log-likelihood after every iteration.  It is
used to validate the pruned implementation in :mod:`linkcomm.fast` and is
perfectly usable on networks of a few tens of thousands of edges.
"""

from __future__ import annotations

import logging
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .graph import Graph

logger = logging.getLogger(__name__)

SeedLike = Union[None, int, np.random.SeedSequence]


class DegenerateEdgeError(FloatingPointError):
    """An existing edge has zero expected multiplicity under the model."""

    def __init__(self, i: int, j: int):
        super().__init__(f"edge ({i}, {j}) has zero probability under the current parameters")
        self.edge = (i, j)


@dataclass
class EmConfig:
    """Iteration control shared by the naive and fast fits.

    ``tol`` is the relative log-likelihood change used by the naive fit
    (met ``patience`` times in a row); ``k_tol`` is the maximum absolute
    change in any colour degree used by the fast fit.
    """

    max_iter: int = 1_000_000
    tol: float = 1e-10
    patience: int = 3
    k_tol: float = 1e-6
    restarts: int = 100
    threads: int = 1
    record_trace: bool = False

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class OverlapParams:
    theta: np.ndarray

    @property
    def K(self) -> int:
        return self.theta.shape[1]


@dataclass
class Responsibilities:
    """One probability vector per stored edge, aligned with ``g.u``/``g.v``."""

    q: np.ndarray
    degenerate: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))


@dataclass
class EmResult:
    k: np.ndarray
    kappa: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    seed: Optional[int] = None
    q: Optional[np.ndarray] = None
    trace: list = field(default_factory=list)
    degenerate: bool = False
    seconds: float = 0.0

    @property
    def theta(self) -> np.ndarray:
        return theta_from_k(self.k, self.kappa)

    @property
    def K(self) -> int:
        return self.k.shape[1]


@dataclass
class SweepResult:
    best: EmResult
    log_likelihoods: list
    iterations: int
    seconds: float
    runs: list = field(default_factory=list)


def theta_from_k(k: np.ndarray, kappa: Optional[np.ndarray] = None) -> np.ndarray:
    """Propensities from colour degrees: ``theta_iz = k_iz / sqrt(kappa_z)``."""
    k = np.asarray(k, dtype=np.float64)
    if kappa is None:
        kappa = k.sum(axis=0)
    kappa = np.asarray(kappa, dtype=np.float64)
    root = np.sqrt(kappa)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.where(root > 0, k / np.where(root > 0, root, 1.0), 0.0)
    return theta


def edge_rates(g: Graph, theta: np.ndarray) -> np.ndarray:
    """``sum_z theta_uz theta_vz`` for every stored edge."""
    return np.einsum("ez,ez->e", theta[g.u], theta[g.v])


def log_likelihood(g: Graph, params: Union[OverlapParams, np.ndarray]) -> float:
    """Log-likelihood up to additive and multiplicative constants.

    ``sum_ij A_ij log(sum_z theta_iz theta_jz) - sum_ijz theta_iz theta_jz``
    with the first sum over ordered pairs, so every stored edge counts
    twice (a self-loop through ``A_ii = 2``).  Returns ``-inf`` if an edge
    has zero rate.
    """
    theta = params.theta if isinstance(params, OverlapParams) else np.asarray(params, dtype=np.float64)
    if theta.shape[0] != g.n:
        raise ValueError(f"theta has {theta.shape[0]} rows for a graph with n={g.n}")
    mu = edge_rates(g, theta)
    tot = theta.sum(axis=0)
    penalty = float(tot @ tot)
    if np.any(mu <= 0):
        return -np.inf
    return float(2.0 * np.dot(g.count, np.log(mu))) - penalty


def jensen_bound(g: Graph, theta: np.ndarray, q: np.ndarray) -> float:
    """Right-hand side of the Jensen lower bound on :func:`log_likelihood`."""
    prod = theta[g.u] * theta[g.v]
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(q > 0, q * np.log(prod / q), 0.0)
    tot = theta.sum(axis=0)
    return float(2.0 * np.dot(g.count, term.sum(axis=1))) - float(tot @ tot)


def e_step(g: Graph, params: Union[OverlapParams, np.ndarray], strict: bool = True) -> Responsibilities:
    """Posterior colour probabilities of every edge.

    With ``strict=False`` an edge whose rate is zero gets a uniform vector
    and is listed in ``degenerate``; otherwise :class:`DegenerateEdgeError`
    is raised.
    """
    theta = params.theta if isinstance(params, OverlapParams) else params
    prod = theta[g.u] * theta[g.v]
    denom = prod.sum(axis=1)
    bad = np.flatnonzero(~(denom > 0))
    if len(bad):
        if strict:
            e = bad[0]
            raise DegenerateEdgeError(int(g.u[e]), int(g.v[e]))
        prod[bad] = 1.0
        denom[bad] = prod.shape[1]
    return Responsibilities(prod / denom[:, None], bad)


def color_degrees(g: Graph, q: np.ndarray) -> np.ndarray:
    """``k_iz = sum_j A_ij q_ij(z)``."""
    w = q * g.count[:, None]
    k = np.zeros((g.n, q.shape[1]))
    np.add.at(k, g.u, w)
    np.add.at(k, g.v, w)
    return k


def m_step(g: Graph, resp: Union[Responsibilities, np.ndarray]) -> OverlapParams:
    """Maximize the bound over theta for fixed responsibilities."""
    q = resp.q if isinstance(resp, Responsibilities) else resp
    if q.shape[0] != g.num_pairs:
        raise ValueError("responsibilities do not match the graph's edges")
    return OverlapParams(theta_from_k(color_degrees(g, q)))


def initial_color_degrees(g: Graph, K: int, rng: np.random.Generator) -> np.ndarray:
    """Random starting point shared by all fitting routines.

    Draws ``theta`` uniformly on (0, 1] and applies one E+M pass, so the
    result is a consistent set of colour degrees (isolated vertices get 0).
    """
    theta0 = 1.0 - rng.random((g.n, K))
    q = e_step(g, theta0, strict=False).q
    return color_degrees(g, q)


def _check_K(g: Graph, K: int):
    if K < 1:
        raise ValueError("K must be at least 1")
    if K > g.m:
        warnings.warn(f"K={K} exceeds the number of edges m={g.m}; some colours will be empty",
                      RuntimeWarning, stacklevel=3)


def run_em(g: Graph, K: int, config: Optional[EmConfig] = None, seed: SeedLike = None,
           k0: Optional[np.ndarray] = None) -> EmResult:
    """Fit the model with the naive EM iteration.

    Stops when the relative change of the log-likelihood stays below
    ``config.tol`` for ``config.patience`` consecutive iterations, when
    theta stops changing altogether, or after ``config.max_iter``
    iterations.  ``k0`` overrides the random starting colour degrees.
    """
    config = config or EmConfig()
    _check_K(g, K)
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    k = initial_color_degrees(g, K, rng) if k0 is None else np.array(k0, dtype=np.float64)
    theta = theta_from_k(k)
    ll = log_likelihood(g, theta)
    trace = [ll] if config.record_trace else []
    calm = 0
    converged = False
    degenerate = False
    q = None
    it = 0
    while it < config.max_iter:
        it += 1
        resp = e_step(g, theta, strict=False)
        degenerate |= len(resp.degenerate) > 0
        q = resp.q
        new = m_step(g, q).theta
        new_ll = log_likelihood(g, new)
        if config.record_trace:
            trace.append(new_ll)
        still = np.array_equal(new, theta)
        change = abs(new_ll - ll) / max(abs(ll), 1e-300) if np.isfinite(ll) else np.inf
        theta, ll = new, new_ll
        calm = calm + 1 if change < config.tol else 0
        if still or calm >= config.patience:
            converged = True
            break
    k = color_degrees(g, q) if q is not None else k
    return EmResult(k=k, kappa=k.sum(axis=0), log_likelihood=ll, iterations=it,
                    converged=converged, q=q, trace=trace, degenerate=degenerate,
                    seconds=time.perf_counter() - t0)


def _as_seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def restart_seeds(seed: SeedLike, restarts: int) -> list:
    """Independent per-restart seeds derived from one master seed."""
    return _as_seed_sequence(seed).spawn(restarts)


def restart_sweep(g: Graph, K: int, config: Optional[EmConfig] = None, restarts: Optional[int] = None,
                  seed: SeedLike = None, fit: Optional[Callable] = None, **fit_kwargs) -> SweepResult:
    """Run several random restarts and keep the highest log-likelihood.

    ``fit`` defaults to :func:`run_em`; any callable with the signature
    ``fit(g, K, config, seed, **fit_kwargs) -> EmResult`` works.  Restarts
    run on ``config.threads`` worker threads; the selected run does not
    depend on the thread count.
    """
    config = config or EmConfig()
    fit = fit or run_em
    restarts = config.restarts if restarts is None else restarts
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    seeds = restart_seeds(seed, restarts)
    t0 = time.perf_counter()

    def one(s):
        return fit(g, K, config, s, **fit_kwargs)

    if config.threads > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            runs = list(pool.map(one, seeds))
    else:
        runs = [one(s) for s in seeds]
    lls = [r.log_likelihood for r in runs]
    best = int(np.argmax(lls))
    logger.info("best of %d restarts: LL=%.6f (run %d)", restarts, lls[best], best)
    return SweepResult(best=runs[best], log_likelihoods=lls,
                       iterations=sum(r.iterations for r in runs),
                       seconds=time.perf_counter() - t0, runs=runs)
