"""Synthetic benchmarks and scoring.

The two-community generator draws networks from the link-community model
itself: ``x`` vertices attach only to community 0, ``y`` only to community
1, and ``z`` overlap vertices split their expected degree evenly between
the two.  Every vertex has the same expected degree ``k``.

Scores compare covers (per-vertex sets of community ids):

* :func:`fraction_correct` -- fraction of vertices whose full membership set
  is recovered, after the best relabelling of detected communities;
* :func:`jaccard_overlap` -- Jaccard index of true vs detected overlap sets;
* :func:`nmi_partition` -- the usual normalized mutual information of two
  partitions (arithmetic-mean normalization);
* :func:`nmi_cover_variant` -- the overlapping-cover NMI of Lancichinetti,
  Fortunato and Kertesz (New J. Phys. 11, 033015, 2009), defined below.

Cover NMI.  Each community ``X_k`` is a binary random variable over
vertices.  For a pair ``(X_k, Y_l)`` let ``p11, p10, p01, p00`` be the
joint frequencies and ``h(p) = -p log p``.  ``Y_l`` is an admissible match
for ``X_k`` when ``h(p11) + h(p00) > h(p01) + h(p10)``;
``H(X_k|Y) = min_l H(X_k, Y_l) - H(Y_l)`` over admissible ``l`` (or
``H(X_k)`` if there is none).  Then
``H(X|Y) = mean_k H(X_k|Y) / H(X_k)`` and
``N(X|Y) = 1 - (H(X|Y) + H(Y|X)) / 2``.  Communities with ``H(X_k) = 0``
(empty or covering every vertex) carry no information and are skipped.
"""

from __future__ import annotations

import itertools
import logging
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .em import EmConfig, SeedLike
from .fast import PruneConfig, fast_sweep
from .graph import Graph, read_communities, read_edge_list
from .membership import Cover, extract_cover

logger = logging.getLogger(__name__)

AXES = ("degree", "balance", "overlap")


@dataclass
class SyntheticSpec:
    n: int = 10000
    x: int = 4750
    y: int = 4750
    z: int = 500
    k: float = 10.0
    seed: SeedLike = None

    def __post_init__(self):
        if min(self.x, self.y, self.z) < 0 or self.x + self.y + self.z != self.n:
            raise ValueError("need non-negative x, y, z with x + y + z = n")
        if not self.k > 0:
            raise ValueError("expected degree k must be positive")
        if self.x + self.z == 0 or self.y + self.z == 0:
            raise ValueError("both communities need at least one vertex")


@dataclass
class GroundTruth:
    """True community sets per vertex (index-aligned with a graph)."""

    sets: list
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.sets)

    def overlap(self) -> np.ndarray:
        return np.array([len(s) > 1 for s in self.sets], dtype=bool)


@dataclass
class Score:
    fraction_correct: float = float("nan")
    jaccard: float = float("nan")
    nmi: float = float("nan")
    variant_nmi: float = float("nan")


def two_community_theta(spec: SyntheticSpec) -> np.ndarray:
    """Propensities giving every vertex expected degree ``k``.

    A pure vertex of community ``z`` has ``theta = a_z``, an overlap vertex
    ``a_z / 2`` on both colours, where ``a_z**2 * (pure_z + overlap/2) = k``.
    """
    theta = np.zeros((spec.n, 2))
    pure = (spec.x, spec.y)
    starts = (0, spec.x)
    ov = slice(spec.x + spec.y, spec.n)
    for z in range(2):
        a = math.sqrt(spec.k / (pure[z] + spec.z / 2))
        theta[starts[z]:starts[z] + pure[z], z] = a
        theta[ov, z] = a / 2
    return theta


def sample_poisson_graph(theta: np.ndarray, rng: np.random.Generator) -> Graph:
    """Draw a multigraph with ``theta_iz theta_jz`` expected colour-z edges per pair.

    Each colour contributes ``Poisson(T_z**2 / 2)`` edges (``T_z`` the column
    total) whose ends are independent draws proportional to ``theta_iz``;
    this reproduces the independent Poisson counts per pair, including the
    ``theta_iz**2 / 2`` self-loop rate.
    """
    n, K = theta.shape
    us, vs = [], []
    for z in range(K):
        tot = theta[:, z].sum()
        if tot <= 0:
            continue
        m = rng.poisson(tot * tot / 2)
        p = theta[:, z] / tot
        us.append(rng.choice(n, size=m, p=p))
        vs.append(rng.choice(n, size=m, p=p))
    u = np.concatenate(us) if us else np.zeros(0, dtype=np.int64)
    v = np.concatenate(vs) if vs else np.zeros(0, dtype=np.int64)
    return Graph(n, u, v, np.ones(len(u), dtype=np.int64))


def generate_two_community(spec: SyntheticSpec) -> tuple[Graph, GroundTruth]:
    rng = np.random.default_rng(spec.seed)
    g = sample_poisson_graph(two_community_theta(spec), rng)
    sets = ([frozenset({0})] * spec.x + [frozenset({1})] * spec.y + [frozenset({0, 1})] * spec.z)
    return g, GroundTruth(sets, {"x": spec.x, "y": spec.y, "z": spec.z, "k": spec.k})


def _sets_of(obj) -> list:
    if isinstance(obj, (Cover, GroundTruth)):
        return [frozenset(s) for s in (obj.communities if isinstance(obj, Cover) else obj.sets)]
    return [frozenset(s) for s in obj]


def _relabel(sets: list) -> tuple[list, list]:
    labels = sorted({c for s in sets for c in s}, key=lambda c: (str(type(c)), c))
    idx = {c: i for i, c in enumerate(labels)}
    return [frozenset(idx[c] for c in s) for s in sets], labels


def _exact_matches(pairs: Counter, mapping) -> int:
    hits = 0
    for (t, d), cnt in pairs.items():
        mapped = [mapping[c] for c in d]
        if all(c >= 0 for c in mapped) and frozenset(mapped) == t:
            hits += cnt
    return hits


def fraction_correct(truth, cover, exhaustive_limit: int = 8) -> float:
    """Fraction of vertices whose membership set is exactly right.

    Detected communities are first mapped one-to-one onto true communities
    to maximize the score: exhaustively while both sides have at most
    ``exhaustive_limit`` communities, otherwise by maximum-overlap
    assignment.  Unmatched detected communities count as wrong.
    """
    t_sets, _ = _relabel(_sets_of(truth))
    d_sets, _ = _relabel(_sets_of(cover))
    if len(t_sets) != len(d_sets):
        raise ValueError("truth and cover cover different numbers of vertices")
    if not t_sets:
        return 1.0
    kt = 1 + max((max(s) for s in t_sets if s), default=-1)
    kd = 1 + max((max(s) for s in d_sets if s), default=-1)
    if kt != kd:
        warnings.warn(f"aligning {kd} detected communities to {kt} true ones", RuntimeWarning, stacklevel=2)
    n = len(t_sets)
    pairs = Counter(zip(t_sets, d_sets))
    if max(kt, kd) <= exhaustive_limit:
        best = 0
        slots = list(range(kt)) + [-1] * max(0, kd - kt)
        for perm in set(itertools.permutations(slots, kd)):
            best = max(best, _exact_matches(pairs, perm))
        return best / n
    inc = np.zeros((kd, kt))
    for t, d in zip(t_sets, d_sets):
        for a in d:
            for b in t:
                inc[a, b] += 1
    rows, cols = linear_sum_assignment(-inc)
    mapping = np.full(kd, -1)
    mapping[rows] = cols
    return _exact_matches(pairs, mapping) / n


def jaccard_overlap(truth, cover) -> float:
    """``|S & V| / |S | V|`` for true (S) and detected (V) overlap vertices; 1 if both empty."""
    S = {i for i, s in enumerate(_sets_of(truth)) if len(s) > 1}
    V = {i for i, s in enumerate(_sets_of(cover)) if len(s) > 1}
    union = S | V
    return 1.0 if not union else len(S & V) / len(union)


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def nmi_partition(a: Sequence, b: Sequence) -> float:
    """Normalized mutual information ``I(A;B) / ((H(A) + H(B)) / 2)``.

    Equals 1 for partitions identical up to relabelling, including two
    single-block partitions.
    """
    a = np.asarray(getattr(a, "labels", a))
    b = np.asarray(getattr(b, "labels", b))
    if a.shape != b.shape:
        raise ValueError("partitions cover different vertex sets")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("nmi_partition needs full assignments")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    conf = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(conf, (ai, bi), 1)
    ha, hb = _entropy(conf.sum(axis=1)), _entropy(conf.sum(axis=0))
    if ha == 0 and hb == 0:
        return 1.0
    mi = ha + hb - _entropy(conf.ravel())
    return float(min(1.0, max(0.0, 2 * mi / (ha + hb))))


def _membership_matrix(sets: list, n: int) -> np.ndarray:
    sets, _ = _relabel(sets)
    K = 1 + max((max(s) for s in sets if s), default=-1)
    X = np.zeros((n, K), dtype=bool)
    for i, s in enumerate(sets):
        for c in s:
            X[i, c] = True
    return X


def _h(p):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 0, -p * np.log(np.where(p > 0, p, 1.0)), 0.0)


def _conditional_norm(X: np.ndarray, Y: np.ndarray) -> Optional[float]:
    n = X.shape[0]
    px = X.mean(axis=0)
    hx = _h(px) + _h(1 - px)
    keep = hx > 0
    if not keep.any():
        return None
    X, px, hx = X[:, keep], px[keep], hx[keep]
    py = Y.mean(axis=0)
    hy = _h(py) + _h(1 - py)
    Xf, Yf = X.astype(np.float64), Y.astype(np.float64)
    p11 = Xf.T @ Yf / n
    p10 = px[:, None] - p11
    p01 = py[None, :] - p11
    p00 = 1 - p11 - p10 - p01
    a = _h(p11) + _h(p00)
    b = _h(p10) + _h(p01)
    cond = a + b - hy[None, :]
    cond = np.where(a > b, cond, np.inf)
    best = np.minimum(cond.min(axis=1, initial=np.inf), hx)
    return float(np.mean(best / hx))


def nmi_cover_variant(a, b) -> float:
    """Overlapping-cover NMI (see module docstring); 1 for identical covers."""
    sa, sb = _sets_of(a), _sets_of(b)
    if len(sa) != len(sb):
        raise ValueError("covers over different vertex sets")
    n = len(sa)
    if n == 0 or not any(sa) or not any(sb):
        warnings.warn("empty cover; variant NMI is 0", RuntimeWarning, stacklevel=2)
        return 0.0
    X, Y = _membership_matrix(sa, n), _membership_matrix(sb, n)
    hxy, hyx = _conditional_norm(X, Y), _conditional_norm(Y, X)
    if hxy is None or hyx is None:
        # every community is trivial on at least one side
        return 1.0 if hxy is None and hyx is None and _same_cover(sa, sb) else 0.0
    return float(min(1.0, max(0.0, 1 - 0.5 * (hxy + hyx))))


def _same_cover(sa, sb) -> bool:
    ca = {frozenset(i for i, s in enumerate(sa) if c in s) for c in {c for s in sa for c in s}}
    cb = {frozenset(i for i, s in enumerate(sb) if c in s) for c in {c for s in sb for c in s}}
    return ca == cb


def score(truth, cover) -> Score:
    """All metrics that apply; ``nmi`` only when both sides are partitions."""
    st, sc = _sets_of(truth), _sets_of(cover)
    out = Score(fraction_correct(st, sc), jaccard_overlap(st, sc), variant_nmi=nmi_cover_variant(st, sc))
    if all(len(s) == 1 for s in st) and all(len(s) == 1 for s in sc):
        out.nmi = nmi_partition([next(iter(s)) for s in _relabel(st)[0]],
                                [next(iter(s)) for s in _relabel(sc)[0]])
    return out


def truth_for_graph(g: Graph, membership: dict) -> GroundTruth:
    """Align a ``label -> communities`` map with a graph's vertices (missing -> empty set)."""
    return GroundTruth([frozenset(membership.get(lab, frozenset())) for lab in g.labels])


def read_lfr(network_path, community_path) -> tuple[Graph, GroundTruth]:
    """Load an LFR benchmark instance (``network.dat`` + ``community.dat``).

    LFR files are 1-based and list each undirected edge in both directions.
    A ``# mu=<value>`` header in the community file is kept as metadata.
    """
    g = read_edge_list(network_path, symmetrize=True)
    with open(community_path) as fh:
        membership, meta = read_communities(fh.read())
    truth = truth_for_graph(g, membership)
    truth.meta.update(meta)
    return g, truth


def fit_cover(g: Graph, K: int, restarts: int, seed: SeedLike, config: Optional[EmConfig] = None,
              prune: Optional[PruneConfig] = None) -> Cover:
    config = config or EmConfig()
    res = fast_sweep(g, K, config, seed=seed, prune=prune, restarts=restarts, audit_every=0)
    return extract_cover(g, res.best.k)


def grid_spec(axis: str, value: float, n: int = 10000, z: int = 500, k: float = 10.0) -> SyntheticSpec:
    """The synthetic instance for one grid point of a sweep.

    ``degree`` varies ``k`` with ``x = y`` and overlap ``z``; ``balance``
    varies ``x`` (``y = n - z - x``) at degree ``k``; ``overlap`` varies
    ``z`` with ``x = y`` at degree ``k``.
    """
    if axis == "degree":
        return SyntheticSpec(n, (n - z) // 2, n - z - (n - z) // 2, z, float(value))
    if axis == "balance":
        x = int(value)
        return SyntheticSpec(n, x, n - z - x, z, k)
    if axis == "overlap":
        zz = int(value)
        return SyntheticSpec(n, (n - zz) // 2, n - zz - (n - zz) // 2, zz, k)
    raise ValueError(f"unknown axis {axis!r}; expected one of {AXES}")


DEFAULT_GRIDS = {
    "degree": [1, 2, 4, 6, 8, 10, 12, 15, 20],
    "balance": [500, 1000, 2000, 3000, 4000, 4750],
    "overlap": [0, 500, 1000, 2000, 4000, 6000],
}


@dataclass
class SweepRow:
    value: float
    fraction_correct: float
    fraction_correct_err: float
    jaccard: float
    jaccard_err: float
    reps: int


def _mean_err(xs) -> tuple[float, float]:
    xs = np.asarray(xs, dtype=np.float64)
    if len(xs) < 2:
        return float(xs.mean()), 0.0
    return float(xs.mean()), float(xs.std(ddof=1) / math.sqrt(len(xs)))


def run_benchmark_sweep(axis: str, grid: Optional[Iterable[float]] = None, reps: int = 100,
                        restarts: int = 20, seed: SeedLike = None, n: int = 10000, z: int = 500,
                        k: float = 10.0, config: Optional[EmConfig] = None,
                        prune: Optional[PruneConfig] = None) -> list[SweepRow]:
    """Fraction-correct and Jaccard curves along one axis of the synthetic test."""
    if axis not in AXES:
        raise ValueError(f"unknown axis {axis!r}; expected one of {AXES}")
    grid = list(DEFAULT_GRIDS[axis] if grid is None else grid)
    point_seeds = np.random.SeedSequence(seed).spawn(len(grid))
    rows = []
    for value, ps in zip(grid, point_seeds):
        fcs, jacs = [], []
        for rs in ps.spawn(reps):
            gen_seed, fit_seed = rs.spawn(2)
            spec = grid_spec(axis, value, n=n, z=z, k=k)
            spec.seed = gen_seed
            g, truth = generate_two_community(spec)
            cover = fit_cover(g, 2, restarts, fit_seed, config, prune)
            fcs.append(fraction_correct(truth, cover))
            jacs.append(jaccard_overlap(truth, cover))
        fc, fce = _mean_err(fcs)
        jc, jce = _mean_err(jacs)
        logger.info("%s=%s: fraction correct %.4f, jaccard %.4f", axis, value, fc, jc)
        rows.append(SweepRow(float(value), fc, fce, jc, jce, reps))
    return rows


TABLE_HEADER = ("value", "fraction_correct", "fraction_correct_stderr", "jaccard", "jaccard_stderr", "reps")


def format_table(rows: list[SweepRow], axis: str = "value", sep: str = "\t") -> str:
    header = (axis,) + TABLE_HEADER[1:]
    lines = [sep.join(header)]
    for r in rows:
        lines.append(sep.join([f"{r.value:g}", f"{r.fraction_correct:.6f}", f"{r.fraction_correct_err:.6f}",
                               f"{r.jaccard:.6f}", f"{r.jaccard_err:.6f}", str(r.reps)]))
    return "\n".join(lines) + "\n"


def parse_table(text: str, sep: str = "\t") -> list[SweepRow]:
    lines = [l for l in text.splitlines() if l.strip()]
    return [SweepRow(float(a), float(b), float(c), float(d), float(e), int(f))
            for a, b, c, d, e, f in (l.split(sep) for l in lines[1:])]
