"""Pruned EM working directly on colour degrees.

The state is the matrix ``k`` of expected colour degrees (``k_iz`` is the
expected number of ends of colour-``z`` edges at vertex ``i``) together with
the column totals ``kappa``.  One sweep over the edges performs a fused E and
M step without ever storing the per-edge responsibilities.  Two pruning
rules shrink the work as the fit settles:

* colour degrees that fall below ``delta`` are set to zero for good, so each
  edge only needs the colours live at both of its ends;
* an edge whose two ends each have a single live colour contributes a
  constant amount every sweep and is moved into a fixed accumulator.

With ``delta = 0`` the iteration is the same as the naive EM in
:mod:`linkcomm.em`, up to floating-point rounding.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .em import (EmConfig, EmResult, SeedLike, SweepResult, _check_K, initial_color_degrees,
                 log_likelihood, restart_sweep, theta_from_k)
from .graph import Graph

#: above this many colours, edges visit only the colours live at both ends
SMALL_K = 8


@dataclass
class PruneConfig:
    delta: float = 0.001
    freeze: bool = True

    def __post_init__(self):
        if not self.delta >= 0:
            raise ValueError("delta must be non-negative")


@numba.njit(cache=True, nogil=True, inline="always")
def _dense_weights(i, j, k, inv, buf_z, buf_w):
    """Fill (colour, k_iz k_jz / kappa_z) for every colour with a positive term; return count."""
    cnt = 0
    for z in range(k.shape[1]):
        w = k[i, z] * k[j, z] * inv[z]
        if w > 0.0:
            buf_z[cnt] = z
            buf_w[cnt] = w
            cnt += 1
    return cnt


@numba.njit(cache=True, nogil=True, inline="always")
def _sparse_weights(i, j, k, inv, cols, ncol, buf_z, buf_w):
    """Same as :func:`_dense_weights` by merging the sorted live-colour lists of both ends."""
    cnt = 0
    a = 0
    b = 0
    na = ncol[i]
    nb = ncol[j]
    while a < na and b < nb:
        za = cols[i, a]
        zb = cols[j, b]
        if za == zb:
            buf_z[cnt] = za
            buf_w[cnt] = k[i, za] * k[j, za] * inv[za]
            cnt += 1
            a += 1
            b += 1
        elif za < zb:
            a += 1
        else:
            b += 1
    return cnt


@numba.njit(cache=True, nogil=True)
def _credit_own(i, c, k, cols, ncol, knew):
    # zero-rate edge: each end keeps its own colour proportions
    tot = 0.0
    for a in range(ncol[i]):
        tot += k[i, cols[i, a]]
    if tot > 0.0:
        for a in range(ncol[i]):
            z = cols[i, a]
            knew[i, z] += c * k[i, z] / tot


@numba.njit(cache=True, nogil=True)
def _sweep_kernel(eu, ev, ec, nlive, k, kappa, cols, ncol, frozen, knew, delta, dense):
    n, K = k.shape
    inv = np.zeros(K)
    for z in range(K):
        if kappa[z] > 0.0:
            inv[z] = 1.0 / kappa[z]
    for i in range(n):
        for z in range(K):
            knew[i, z] = frozen[i, z]
    buf_z = np.empty(K, dtype=np.int64)
    buf_w = np.empty(K)
    degenerate = 0
    # two copies of the edge loop: a shared per-edge helper or a branch inside
    # the loop defeats numba's optimization of this hot path
    if dense:
        for e in range(nlive):
            i = eu[e]
            j = ev[e]
            cnt = _dense_weights(i, j, k, inv, buf_z, buf_w)
            D = 0.0
            for a in range(cnt):
                D += buf_w[a]
            if D > 0.0:
                s = ec[e] / D
                for a in range(cnt):
                    z = buf_z[a]
                    w = buf_w[a] * s
                    knew[i, z] += w
                    knew[j, z] += w
            else:
                degenerate += 1
                _credit_own(i, ec[e], k, cols, ncol, knew)
                _credit_own(j, ec[e], k, cols, ncol, knew)
    else:
        for e in range(nlive):
            i = eu[e]
            j = ev[e]
            cnt = _sparse_weights(i, j, k, inv, cols, ncol, buf_z, buf_w)
            D = 0.0
            for a in range(cnt):
                D += buf_w[a]
            if D > 0.0:
                s = ec[e] / D
                for a in range(cnt):
                    z = buf_z[a]
                    w = buf_w[a] * s
                    knew[i, z] += w
                    knew[j, z] += w
            else:
                degenerate += 1
                _credit_own(i, ec[e], k, cols, ncol, knew)
                _credit_own(j, ec[e], k, cols, ncol, knew)
    change = 0.0
    for i in range(n):
        for z in range(K):
            v = knew[i, z]
            if v < delta:
                v = 0.0
                knew[i, z] = 0.0
            d = abs(v - k[i, z])
            if d > change:
                change = d
    return change, degenerate


@numba.njit(cache=True, nogil=True)
def _live_colors(k, cols, ncol):
    n, K = k.shape
    total = 0
    for i in range(n):
        c = 0
        for z in range(K):
            if k[i, z] > 0.0:
                cols[i, c] = z
                c += 1
        ncol[i] = c
        total += c
    return total


@numba.njit(cache=True, nogil=True)
def _freeze(eu, ev, ec, nlive, cols, ncol, frozen):
    """Move edges between single-colour vertices into ``frozen``; compact the rest."""
    out = 0
    for e in range(nlive):
        i = eu[e]
        j = ev[e]
        if ncol[i] == 1 and ncol[j] == 1:
            frozen[i, cols[i, 0]] += ec[e]
            frozen[j, cols[j, 0]] += ec[e]
        else:
            eu[out] = i
            ev[out] = j
            ec[out] = ec[e]
            out += 1
    return out


class FastEM:
    """Mutable state of one pruned EM run.

    Parameters
    ----------
    g : Graph
    k0 : ndarray, shape (n, K)
        Starting colour degrees.
    prune : PruneConfig, optional
    small_k : int
        Up to this many colours every edge evaluates all of them instead of
        intersecting live-colour lists.
    """

    def __init__(self, g: Graph, k0: np.ndarray, prune: Optional[PruneConfig] = None,
                 small_k: int = SMALL_K):
        self.g = g
        self.prune = prune or PruneConfig()
        self.k = np.array(k0, dtype=np.float64, order="C")
        if self.k.shape[0] != g.n:
            raise ValueError("k0 must have one row per vertex")
        self.K = self.k.shape[1]
        self.k[self.k < self.prune.delta] = 0.0
        self.kappa = self.k.sum(axis=0)
        self.dense = self.K <= small_k
        self._eu = g.u.copy()
        self._ev = g.v.copy()
        self._ec = g.count.astype(np.float64)
        self.nlive = len(self._eu)
        self.frozen = np.zeros_like(self.k)
        self._knew = np.zeros_like(self.k)
        self.cols = np.zeros((g.n, self.K), dtype=np.int64)
        self.ncol = np.zeros(g.n, dtype=np.int64)
        self.live_pairs = _live_colors(self.k, self.cols, self.ncol)
        self.degenerate = 0
        self.iterations = 0
        self._refreeze()

    def _refreeze(self):
        if self.prune.freeze:
            self.nlive = _freeze(self._eu, self._ev, self._ec, self.nlive, self.cols, self.ncol, self.frozen)

    @property
    def live_edges(self) -> int:
        return self.nlive

    @property
    def theta(self) -> np.ndarray:
        return theta_from_k(self.k, self.kappa)

    def step(self) -> float:
        """One fused E+M sweep; returns the largest absolute change in ``k``."""
        change, deg = _sweep_kernel(self._eu, self._ev, self._ec, self.nlive, self.k, self.kappa,
                                    self.cols, self.ncol, self.frozen, self._knew,
                                    self.prune.delta, self.dense)
        self.k, self._knew = self._knew, self.k
        self.kappa = self.k.sum(axis=0)
        self.live_pairs = _live_colors(self.k, self.cols, self.ncol)
        self._refreeze()
        self.degenerate += deg
        self.iterations += 1
        return change


def sweep(g: Graph, k: np.ndarray, kappa: Optional[np.ndarray] = None,
          cfg: Optional[PruneConfig] = None) -> tuple[np.ndarray, np.ndarray]:
    """One standalone sweep from state ``k``; returns ``(k', kappa')``."""
    state = FastEM(g, k, cfg or PruneConfig(delta=0.0, freeze=False))
    if kappa is not None:
        state.kappa = np.asarray(kappa, dtype=np.float64).copy()
    state.step()
    return state.k, state.kappa


def freeze_edges(g: Graph, k: np.ndarray) -> np.ndarray:
    """Boolean mask over ``g``'s edges that can be frozen in state ``k``."""
    single = (np.asarray(k) > 0).sum(axis=1) == 1
    return single[g.u] & single[g.v]


def run_fast_em(g: Graph, K: int, config: Optional[EmConfig] = None, seed: SeedLike = None,
                prune: Optional[PruneConfig] = None, k0: Optional[np.ndarray] = None,
                audit_every: int = 100) -> EmResult:
    """Fit the model with the pruned EM iteration.

    Iterates until no colour degree changes by more than ``config.k_tol``
    or ``config.max_iter`` sweeps.  The log-likelihood is evaluated at the
    end and, if ``audit_every`` is positive, every ``audit_every`` sweeps
    (recorded in ``trace``).
    """
    config = config or EmConfig()
    _check_K(g, K)
    t0 = time.perf_counter()
    if k0 is None:
        k0 = initial_color_degrees(g, K, np.random.default_rng(seed))
    state = FastEM(g, k0, prune)
    trace = []
    if audit_every:
        trace.append(log_likelihood(g, state.theta))
    converged = False
    while state.iterations < config.max_iter:
        change = state.step()
        if audit_every and state.iterations % audit_every == 0:
            trace.append(log_likelihood(g, state.theta))
        if change < config.k_tol:
            converged = True
            break
    ll = log_likelihood(g, state.theta)
    if audit_every and state.iterations % audit_every:
        trace.append(ll)
    return EmResult(k=state.k, kappa=state.kappa, log_likelihood=ll, iterations=state.iterations,
                    converged=converged, trace=trace, degenerate=state.degenerate > 0,
                    seconds=time.perf_counter() - t0)


def fast_sweep(g: Graph, K: int, config: Optional[EmConfig] = None, seed: SeedLike = None,
               prune: Optional[PruneConfig] = None, restarts: Optional[int] = None,
               **kwargs) -> SweepResult:
    """:func:`linkcomm.em.restart_sweep` using :func:`run_fast_em`."""
    return restart_sweep(g, K, config, restarts=restarts, seed=seed, fit=run_fast_em,
                         prune=prune, **kwargs)
