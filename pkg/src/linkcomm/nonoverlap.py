"""Nonoverlapping communities from the relaxed degree-corrected blockmodel.

The link-community fit is read as a relaxation of a degree-corrected
stochastic blockmodel: ``theta_ir`` (normalized to sum to one over the
vertices of each community) times the block matrix ``omega_rs`` gives the
expected number of edges.  A fit is rounded to a hard partition by giving
each vertex its largest ``theta_ir`` and then polished by greedy single
vertex moves that increase the blockmodel likelihood.

The blockmodel likelihood used for the polishing step is the profile
log-likelihood of the degree-corrected blockmodel with constants dropped,

    L = sum_rs m_rs log(m_rs / (kappa_r kappa_s)),

where ``m_rs`` counts edge ends between groups ``r`` and ``s`` (twice for
edges inside a group) and ``kappa_r`` is the total degree of group ``r``.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np

from .em import EmConfig, SeedLike, initial_color_degrees, restart_seeds
from .fast import PruneConfig, run_fast_em
from .graph import Graph

_CHUNK = 1 << 14


@dataclass
class BlockParams:
    """``theta`` (n x K, columns sum to 1) and symmetric ``omega`` (K x K)."""

    theta: np.ndarray
    omega: np.ndarray
    diagonal: bool = True

    @property
    def K(self) -> int:
        return self.theta.shape[1]

    @property
    def vertex_theta(self) -> np.ndarray:
        return self.theta.sum(axis=1)

    @property
    def soft(self) -> np.ndarray:
        """Relaxed memberships ``S_ir = theta_ir / sum_r theta_ir``."""
        tot = self.vertex_theta
        return np.divide(self.theta, tot[:, None], out=np.zeros_like(self.theta), where=tot[:, None] > 0)

    @classmethod
    def from_color_degrees(cls, k: np.ndarray, kappa: Optional[np.ndarray] = None) -> "BlockParams":
        """Diagonal-model parameters equivalent to a link-community state."""
        k = np.asarray(k, dtype=np.float64)
        kappa = k.sum(axis=0) if kappa is None else np.asarray(kappa, dtype=np.float64)
        theta = np.divide(k, kappa, out=np.zeros_like(k), where=kappa > 0)
        return cls(theta, np.diag(kappa), True)


@dataclass
class PairResponsibilities:
    """K x K colour-pair probabilities per stored edge (``u`` end first)."""

    q: np.ndarray
    degenerate: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))


@dataclass
class Partition:
    labels: np.ndarray
    K: int
    tie: Optional[np.ndarray] = None

    @property
    def assigned(self) -> np.ndarray:
        return self.labels >= 0

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels[self.labels >= 0], minlength=self.K)


def _pair_q(p: BlockParams, u, v, strict=False):
    K = p.K
    omega = np.diag(np.diag(p.omega)) if p.diagonal else p.omega
    q = p.theta[u][:, :, None] * omega[None, :, :] * p.theta[v][:, None, :]
    denom = q.sum(axis=(1, 2))
    bad = np.flatnonzero(~(denom > 0))
    if len(bad):
        if strict:
            e = bad[0]
            raise FloatingPointError(f"edge ({u[e]}, {v[e]}) has zero rate")
        q[bad] = np.eye(K) / K if p.diagonal else 1.0 / K**2
        denom[bad] = 1.0
    return q / denom[:, None, None], bad


def general_e_step(g: Graph, p: BlockParams, strict: bool = False) -> PairResponsibilities:
    """``q_ij(r,s) = theta_ir omega_rs theta_js / sum_rs theta_ir omega_rs theta_js``.

    Edges with zero rate get a uniform matrix (uniform over the diagonal
    for the diagonal model) and are listed in ``degenerate``.
    """
    q, bad = _pair_q(p, g.u, g.v, strict)
    return PairResponsibilities(q, bad)


def _accumulate(n, u, v, count, q, diagonal):
    K = q.shape[1]
    c = count.astype(np.float64)
    num = np.zeros((n, K))
    np.add.at(num, u, c[:, None] * q.sum(axis=2))
    np.add.at(num, v, c[:, None] * q.sum(axis=1))
    omega = np.einsum("e,ers->rs", c, q)
    omega = omega + omega.T
    if diagonal:
        omega = np.diag(np.diag(omega))
    return num, omega


def general_m_step(g: Graph, q: PairResponsibilities | np.ndarray, diagonal: bool = False) -> BlockParams:
    """Maximize over ``theta`` and ``omega`` for fixed pair responsibilities."""
    q = q.q if isinstance(q, PairResponsibilities) else q
    if q.shape[0] != g.num_pairs:
        raise ValueError("responsibilities do not match the graph's edges")
    num, omega = _accumulate(g.n, g.u, g.v, g.count, q, diagonal)
    tot = num.sum(axis=0)
    theta = np.divide(num, tot, out=np.zeros_like(num), where=tot > 0)
    return BlockParams(theta, omega, diagonal)


def block_log_likelihood(g: Graph, p: BlockParams) -> float:
    """Relaxed-model log-likelihood, constants dropped (ordered-pair convention)."""
    omega = np.diag(np.diag(p.omega)) if p.diagonal else p.omega
    mu = np.einsum("er,rs,es->e", p.theta[g.u], omega, p.theta[g.v])
    if np.any(mu <= 0):
        return -np.inf
    tot = p.theta.sum(axis=0)
    return float(2.0 * np.dot(g.count, np.log(mu))) - float(tot @ omega @ tot)


@dataclass
class GeneralResult:
    params: BlockParams
    log_likelihood: float
    iterations: int
    converged: bool


def run_general_em(g: Graph, K: int, config: Optional[EmConfig] = None, seed: SeedLike = None,
                   diagonal: bool = False, k0: Optional[np.ndarray] = None,
                   noise: float = 0.1) -> GeneralResult:
    """EM for the blockmodel relaxation with a full (or diagonal) ``omega``.

    Starts from the same random colour degrees as the link-community fits;
    off the diagonal ``omega`` starts at ``noise`` times a uniform draw
    scaled to the mean diagonal entry.
    """
    config = config or EmConfig()
    rng = np.random.default_rng(seed)
    k = initial_color_degrees(g, K, rng) if k0 is None else np.asarray(k0, dtype=np.float64)
    p = BlockParams.from_color_degrees(k)
    p.diagonal = diagonal
    if not diagonal and K > 1:
        u = rng.random((K, K))
        p.omega = p.omega + noise * np.diag(p.omega).mean() * (u + u.T) / 2 * (1 - np.eye(K))
    prev = p.theta * p.omega.sum(axis=1)
    converged = False
    it = 0
    while it < config.max_iter:
        it += 1
        num = np.zeros((g.n, K))
        omega = np.zeros((K, K))
        for lo in range(0, g.num_pairs, _CHUNK):
            u, v, c = g.u[lo:lo + _CHUNK], g.v[lo:lo + _CHUNK], g.count[lo:lo + _CHUNK]
            a, b = _accumulate(g.n, u, v, c, _pair_q(p, u, v)[0], diagonal)
            num += a
            omega += b
        tot = num.sum(axis=0)
        p = BlockParams(np.divide(num, tot, out=np.zeros_like(num), where=tot > 0), omega, diagonal)
        cur = p.theta * p.omega.sum(axis=1)
        change = np.abs(cur - prev).max() if cur.size else 0.0
        prev = cur
        if change < config.k_tol:
            converged = True
            break
    return GeneralResult(p, block_log_likelihood(g, p), it, converged)


def round_to_partition(p: BlockParams, rtol: float = 1e-12) -> Partition:
    """Assign each vertex to its largest ``theta_ir``; zero rows stay unassigned."""
    theta = p.theta
    labels = theta.argmax(axis=1).astype(np.int64)
    top = theta[np.arange(len(theta)), labels]
    zero = ~(top > 0)
    tie = ((theta >= top[:, None] * (1 - rtol)).sum(axis=1) > 1) & ~zero
    labels[zero] = -1
    return Partition(labels, p.K, tie)


def block_counts(g: Graph, part: Partition) -> tuple[np.ndarray, np.ndarray]:
    """``m_rs`` (edge ends between groups, ordered pairs) and group degrees."""
    lab = np.asarray(part.labels)
    K = part.K
    keep = (lab[g.u] >= 0) & (lab[g.v] >= 0)
    a, b, c = lab[g.u][keep], lab[g.v][keep], g.count[keep].astype(np.float64)
    M = np.zeros((K, K))
    np.add.at(M, (a, b), c)
    np.add.at(M, (b, a), c)
    return M, M.sum(axis=1)


def dcsbm_log_likelihood(g: Graph, part: Partition) -> float:
    """Profile log-likelihood of a hard partition under the degree-corrected blockmodel."""
    M, kappa = block_counts(g, part)
    outer = np.outer(kappa, kappa)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(M > 0, M * np.log(np.where(M > 0, M, 1.0) / np.where(outer > 0, outer, 1.0)), 0.0)
    return float(terms.sum())


@numba.njit(cache=True)
def _xlx(x):
    if x <= 0.0:
        return 0.0
    return x * np.log(x)


@numba.njit(cache=True)
def _move_delta(M, kap, e, nz, nnz, loop, d, r, s):
    """Change in the profile likelihood when a vertex moves from ``r`` to ``s``."""
    delta = 0.0
    for a in range(nnz):
        t = nz[a]
        if t == r or t == s:
            continue
        et = e[t]
        delta += 2.0 * (_xlx(M[r, t] - et) - _xlx(M[r, t]) + _xlx(M[s, t] + et) - _xlx(M[s, t]))
    er = e[r]
    es = e[s]
    delta += _xlx(M[r, r] - 2.0 * er - loop) - _xlx(M[r, r])
    delta += _xlx(M[s, s] + 2.0 * es + loop) - _xlx(M[s, s])
    delta += 2.0 * (_xlx(M[r, s] - es + er) - _xlx(M[r, s]))
    delta -= 2.0 * (_xlx(kap[r] - d) - _xlx(kap[r]) + _xlx(kap[s] + d) - _xlx(kap[s]))
    return delta


@numba.njit(cache=True)
def _refine_kernel(indptr, indices, weights, loops, deg, labels, K, tol, max_moves,
                   out_v, out_from, out_to, out_gain):
    n = len(labels)
    E = np.zeros((n, K))
    M = np.zeros((K, K))
    kap = np.zeros(K)
    for v in range(n):
        r = labels[v]
        if r < 0:
            continue
        kap[r] += deg[v]
        M[r, r] += loops[v]
        for p in range(indptr[v], indptr[v + 1]):
            j = indices[p]
            if labels[j] >= 0:
                E[v, labels[j]] += weights[p]
                M[r, labels[j]] += weights[p]
    nz = np.empty(K, dtype=np.int64)
    moves = 0
    while moves < max_moves:
        best = tol
        bv = -1
        bs = -1
        for v in range(n):
            r = labels[v]
            if r < 0 or deg[v] == 0:
                continue
            nnz = 0
            for t in range(K):
                if E[v, t] > 0.0:
                    nz[nnz] = t
                    nnz += 1
            for s in range(K):
                if s == r:
                    continue
                dl = _move_delta(M, kap, E[v], nz, nnz, loops[v], deg[v], r, s)
                if dl > best:
                    best = dl
                    bv = v
                    bs = s
        if bv < 0:
            break
        r = labels[bv]
        s = bs
        ev = E[bv].copy()
        for t in range(K):
            et = ev[t]
            if et == 0.0 or t == r or t == s:
                continue
            M[r, t] -= et
            M[t, r] -= et
            M[s, t] += et
            M[t, s] += et
        lp = loops[bv]
        M[r, r] -= 2.0 * ev[r] + lp
        M[s, s] += 2.0 * ev[s] + lp
        M[r, s] += ev[r] - ev[s]
        M[s, r] = M[r, s]
        kap[r] -= deg[bv]
        kap[s] += deg[bv]
        for p in range(indptr[bv], indptr[bv + 1]):
            j = indices[p]
            E[j, r] -= weights[p]
            E[j, s] += weights[p]
        labels[bv] = s
        out_v[moves] = bv
        out_from[moves] = r
        out_to[moves] = s
        out_gain[moves] = best
        moves += 1
    return moves


@dataclass
class Refinement:
    partition: Partition
    moves: list
    """(vertex, from, to, gain) for every accepted move, in order."""


def vertex_move_refine(g: Graph, part: Partition, tol: Optional[float] = None,
                       max_moves: Optional[int] = None) -> Refinement:
    """Greedy hill climb over single-vertex moves.

    Every round evaluates all (vertex, community) moves and applies the one
    with the largest likelihood gain (ties: lowest vertex, then lowest
    community).  Stops when no move gains more than ``tol``.  Communities
    may end up empty.
    """
    labels = np.array(part.labels, dtype=np.int64)
    K = part.K
    if tol is None:
        tol = 1e-9 * max(1.0, 2.0 * g.m)
    if max_moves is None:
        max_moves = 100 * max(g.n, 1)
    loop = g.u == g.v
    rows = np.concatenate([g.u[~loop], g.v[~loop]])
    cols = np.concatenate([g.v[~loop], g.u[~loop]])
    w = np.concatenate([g.count[~loop], g.count[~loop]]).astype(np.float64)
    order = np.argsort(rows, kind="stable")
    rows, cols, w = rows[order], cols[order], w[order]
    indptr = np.zeros(g.n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    loops = np.zeros(g.n)
    np.add.at(loops, g.u[loop], 2.0 * g.count[loop])
    deg = g.degrees.astype(np.float64)
    out_v = np.zeros(max_moves, dtype=np.int64)
    out_from = np.zeros(max_moves, dtype=np.int64)
    out_to = np.zeros(max_moves, dtype=np.int64)
    out_gain = np.zeros(max_moves)
    nm = _refine_kernel(indptr, cols.astype(np.int64), w, loops, deg, labels, K, float(tol), max_moves,
                        out_v, out_from, out_to, out_gain)
    moves = [(int(out_v[i]), int(out_from[i]), int(out_to[i]), float(out_gain[i])) for i in range(nm)]
    return Refinement(Partition(labels, K), moves)


@dataclass
class NonoverlapResult:
    partition: Partition
    params: BlockParams
    log_likelihood: float
    em_log_likelihood: float
    iterations: int
    moves: int
    seconds: float = 0.0
    log_likelihoods: list = field(default_factory=list)


def _fit_one(g, K, config, seed, prune, general, refine):
    if general:
        fit = run_general_em(g, K, config, seed, diagonal=False)
        params, em_ll, its = fit.params, fit.log_likelihood, fit.iterations
    else:
        fit = run_fast_em(g, K, config, seed, prune=prune, audit_every=0)
        params = BlockParams.from_color_degrees(fit.k, fit.kappa)
        em_ll, its = fit.log_likelihood, fit.iterations
    part = round_to_partition(params)
    nmoves = 0
    if refine:
        ref = vertex_move_refine(g, part)
        part, nmoves = ref.partition, len(ref.moves)
    return NonoverlapResult(part, params, dcsbm_log_likelihood(g, part), em_ll, its, nmoves)


def run_nonoverlap(g: Graph, K: int, config: Optional[EmConfig] = None, seed: SeedLike = None,
                   prune: Optional[PruneConfig] = None, general: bool = False, refine: bool = True,
                   restarts: Optional[int] = None) -> NonoverlapResult:
    """Fit, round and (optionally) refine; keep the restart with the best blockmodel likelihood.

    The default fit is the diagonal (link-community) model via
    :func:`linkcomm.fast.run_fast_em`; ``general=True`` fits the full
    ``omega`` model instead.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    config = config or EmConfig(restarts=10)
    restarts = config.restarts if restarts is None else restarts
    seeds = restart_seeds(seed, restarts)
    t0 = time.perf_counter()

    def one(s):
        return _fit_one(g, K, config, s, prune, general, refine)

    if config.threads > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            runs = list(pool.map(one, seeds))
    else:
        runs = [one(s) for s in seeds]
    lls = [r.log_likelihood for r in runs]
    best = runs[int(np.argmax(lls))]
    best.iterations = sum(r.iterations for r in runs)
    best.seconds = time.perf_counter() - t0
    best.log_likelihoods = lls
    return best
