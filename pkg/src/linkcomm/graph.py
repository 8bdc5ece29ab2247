"""Undirected multigraph storage and edge-list I/O.

Edges are stored once per unordered pair in ``u <= v`` order together with
their multiplicity.  A self-loop counts as a single edge but contributes 2 to
the degree of its vertex (``A_ii = 2``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


class EdgeListError(ValueError):
    """Raised for malformed or invalid edge-list input."""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class EdgeRecord:
    u: int
    v: int
    count: int = 1


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected multigraph.

    Attributes
    ----------
    n : int
        Number of vertices.
    u, v : ndarray of int64
        Endpoints of each stored edge, with ``u <= v``; pairs are unique.
    count : ndarray of int64
        Multiplicity of each stored edge.
    labels : list
        Original label of every vertex (index ``i`` -> label).
    """

    n: int
    u: np.ndarray
    v: np.ndarray
    count: np.ndarray
    labels: list = field(default_factory=list)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.int64)
        v = np.asarray(self.v, dtype=np.int64)
        c = np.asarray(self.count, dtype=np.int64)
        if not (u.shape == v.shape == c.shape) or u.ndim != 1:
            raise ValueError("edge arrays must be 1-d and of equal length")
        if len(u) and (u.min() < 0 or max(u.max(), v.max()) >= self.n):
            raise ValueError("edge endpoint out of range")
        if len(c) and c.min() < 1:
            raise ValueError("edge multiplicities must be positive")
        # canonical orientation, then sort and merge duplicate pairs
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        if len(lo):
            key = lo * max(self.n, 1) + hi
            order = np.argsort(key, kind="stable")
            key, lo, hi, c = key[order], lo[order], hi[order], c[order]
            first = np.ones(len(key), dtype=bool)
            first[1:] = key[1:] != key[:-1]
            idx = np.flatnonzero(first)
            c = np.add.reduceat(c, idx)
            lo, hi = lo[idx], hi[idx]
        for name, arr in (("u", lo), ("v", hi), ("count", c)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        labels = list(self.labels) if self.labels else list(range(self.n))
        if len(labels) != self.n:
            raise ValueError("labels must have one entry per vertex")
        object.__setattr__(self, "labels", labels)
        deg = np.zeros(self.n, dtype=np.int64)
        np.add.at(deg, lo, c)
        np.add.at(deg, hi, c)
        deg.setflags(write=False)
        object.__setattr__(self, "degrees", deg)

    @property
    def m(self) -> int:
        """Number of undirected edges, multiplicities included."""
        return int(self.count.sum())

    @property
    def num_pairs(self) -> int:
        return len(self.u)

    @property
    def isolated(self) -> np.ndarray:
        """Boolean mask of degree-zero vertices."""
        return self.degrees == 0

    def degree(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(f"vertex {i} out of range for n={self.n}")
        return int(self.degrees[i])

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric sparse adjacency matrix with ``A_ii = 2`` per self-loop."""
        loop = self.u == self.v
        rows = np.concatenate([self.u, self.v[~loop]])
        cols = np.concatenate([self.v, self.u[~loop]])
        vals = np.concatenate([np.where(loop, 2 * self.count, self.count), self.count[~loop]])
        return sp.csr_matrix((vals.astype(np.float64), (rows, cols)), shape=(self.n, self.n))

    def neighbors(self, i: int) -> list[tuple[int, int]]:
        """(neighbor, multiplicity) pairs of vertex ``i``; a self-loop appears once."""
        out = [(int(b), int(c)) for a, b, c in zip(self.u, self.v, self.count) if a == i]
        out += [(int(a), int(c)) for a, b, c in zip(self.u, self.v, self.count) if b == i and a != i]
        return sorted(out)

    def edges(self) -> list[EdgeRecord]:
        return [EdgeRecord(int(a), int(b), int(c)) for a, b, c in zip(self.u, self.v, self.count)]

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n == other.n and self.labels == other.labels
                and np.array_equal(self.u, other.u) and np.array_equal(self.v, other.v)
                and np.array_equal(self.count, other.count))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


def from_edges(edges: Iterable[Sequence], n: Optional[int] = None, labels: Optional[list] = None) -> Graph:
    """Build a graph from ``(u, v)`` or ``(u, v, count)`` tuples of integer ids."""
    rows = [tuple(e) for e in edges]
    u = np.array([r[0] for r in rows], dtype=np.int64)
    v = np.array([r[1] for r in rows], dtype=np.int64)
    c = np.array([r[2] if len(r) > 2 else 1 for r in rows], dtype=np.int64)
    if n is None:
        n = int(max(u.max(), v.max()) + 1) if len(rows) else 0
    return Graph(n, u, v, c, labels or [])


def _parse_label(tok: str, lineno: int) -> Hashable:
    try:
        val = int(tok)
    except ValueError:
        return tok
    if val < 0:
        raise EdgeListError(f"negative vertex id {val}", lineno)
    return val


def load_edge_list(text: str, index_base: Optional[int] = None, symmetrize: bool = False) -> Graph:
    """Parse an edge-list document.

    Each non-blank line holds two vertex ids and an optional positive
    integer multiplicity; ``#`` starts a comment.  Vertex ids may be non-negative
    integers or arbitrary tokens.

    Parameters
    ----------
    text : str
        The document contents.
    index_base : int, optional
        If None (default) vertices are compacted to ``0..n-1`` in first-seen
        order.  If an integer, ids must be integers and vertex ``id -
        index_base`` is used directly, so ids never seen become isolated
        vertices.
    symmetrize : bool
        Treat lines as directed arcs: ``(u, v)`` and ``(v, u)`` collapse to a
        single undirected edge, whose multiplicity is the larger of the two
        directed counts.
    """
    index: dict = {}
    order: list = []
    arcs: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = raw.split("#", 1)[0].split()
        if not toks:
            continue
        if len(toks) not in (2, 3):
            raise EdgeListError(f"expected 2 or 3 tokens, got {len(toks)}", lineno)
        a, b = (_parse_label(t, lineno) for t in toks[:2])
        count = 1
        if len(toks) == 3:
            try:
                count = int(toks[2])
            except ValueError:
                raise EdgeListError(f"malformed multiplicity {toks[2]!r}", lineno) from None
            if count < 1:
                raise EdgeListError(f"multiplicity must be positive, got {count}", lineno)
        ids = []
        for lab in (a, b):
            if index_base is not None:
                if not isinstance(lab, int):
                    raise EdgeListError(f"non-integer vertex id {lab!r}", lineno)
                if lab - index_base < 0:
                    raise EdgeListError(f"vertex id {lab} below index base {index_base}", lineno)
                ids.append(lab - index_base)
            else:
                if lab not in index:
                    index[lab] = len(order)
                    order.append(lab)
                ids.append(index[lab])
        key = (ids[0], ids[1]) if symmetrize else (min(ids), max(ids))
        arcs[key] = arcs.get(key, 0) + count

    if symmetrize:
        merged: dict = {}
        for (a, b), c in arcs.items():
            key = (min(a, b), max(a, b))
            merged[key] = max(merged.get(key, 0), c)
        arcs = merged

    if index_base is None:
        n, labels = len(order), order
    else:
        n = 1 + max((max(k) for k in arcs), default=-1)
        labels = [i + index_base for i in range(n)]
    pairs = sorted(arcs)
    u = np.array([p[0] for p in pairs], dtype=np.int64)
    v = np.array([p[1] for p in pairs], dtype=np.int64)
    c = np.array([arcs[p] for p in pairs], dtype=np.int64)
    return Graph(n, u, v, c, labels)


def read_edge_list(path, **kwargs) -> Graph:
    with open(path) as fh:
        return load_edge_list(fh.read(), **kwargs)


def write_edge_list(g: Graph) -> str:
    """Serialize to the edge-list format using original labels.

    Isolated vertices cannot be expressed in an edge list and are lost.
    """
    lines = []
    for a, b, c in zip(g.u, g.v, g.count):
        la, lb = g.labels[a], g.labels[b]
        lines.append(f"{la} {lb}" if c == 1 else f"{la} {lb} {c}")
    return "\n".join(lines) + ("\n" if lines else "")


def subgraph(g: Graph, vertices: np.ndarray) -> Graph:
    """Induced subgraph on ``vertices`` (kept in the given order)."""
    vertices = np.asarray(vertices, dtype=np.int64)
    remap = np.full(g.n, -1, dtype=np.int64)
    remap[vertices] = np.arange(len(vertices))
    keep = (remap[g.u] >= 0) & (remap[g.v] >= 0)
    return Graph(len(vertices), remap[g.u[keep]], remap[g.v[keep]], g.count[keep],
                 [g.labels[i] for i in vertices])


def largest_component(g: Graph) -> tuple[Graph, np.ndarray]:
    """Induced subgraph on the largest connected component.

    Returns the subgraph and the old -> new id map (``-1`` for dropped
    vertices).  Among equally large components the one containing the
    smallest vertex id wins.
    """
    if g.n == 0:
        raise ValueError("empty graph has no components")
    ncomp, comp = connected_components(g.adjacency(), directed=False)
    sizes = np.bincount(comp, minlength=ncomp)
    best = sizes.max()
    # components are numbered in order of their smallest vertex
    target = int(np.flatnonzero(sizes == best)[0])
    keep = np.flatnonzero(comp == target)
    mapping = np.full(g.n, -1, dtype=np.int64)
    mapping[keep] = np.arange(len(keep))
    return subgraph(g, keep), mapping


def read_communities(text: str) -> tuple[dict, dict]:
    """Parse a ``label community [community ...]`` file.

    Returns ``(membership, meta)`` where membership maps each label to a
    frozenset of community labels.  Header comments of the form
    ``# key=value`` or ``# key value`` populate ``meta`` (e.g. ``mu=0.3``).
    """
    membership: dict = {}
    meta: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip().replace("=", " ").split()
            if len(body) == 2:
                try:
                    meta[body[0]] = float(body[1])
                except ValueError:
                    meta[body[0]] = body[1]
            continue
        toks = line.split()
        if len(toks) < 2:
            raise EdgeListError("community line needs a label and at least one community", lineno)
        lab = _parse_label(toks[0], lineno)
        comms = frozenset(_parse_label(t, lineno) for t in toks[1:])
        membership[lab] = membership.get(lab, frozenset()) | comms
    return membership, meta
