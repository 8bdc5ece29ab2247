"""Turn fitted colour degrees into covers, edge colourings and result files."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graph import Graph

FORMAT = "linkcomm-result/1"

#: JSON schema of the result document written by :func:`dump_results`
RESULT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["format", "mode", "K", "config", "seed", "likelihood", "iterations",
                 "seconds", "degenerate", "vertices", "edges"],
    "properties": {
        "format": {"const": FORMAT},
        "mode": {"enum": ["overlap", "nonoverlap"]},
        "K": {"type": "integer", "minimum": 1},
        "config": {"type": "object"},
        "seed": {"type": ["integer", "null"]},
        "likelihood": {"type": ["number", "null"]},
        "iterations": {"type": "integer", "minimum": 0},
        "seconds": {"type": ["number", "null"]},
        "degenerate": {"type": "boolean"},
        "vertices": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["label", "communities", "fractions"],
                "properties": {
                    "label": {"type": ["integer", "string"]},
                    "communities": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    "fractions": {"type": "array", "items": {"type": "number", "minimum": 0}},
                    "unattributed": {"type": "number"},
                },
            },
        },
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["u", "v", "color", "tie"],
                "properties": {
                    "u": {"type": ["integer", "string"]},
                    "v": {"type": ["integer", "string"]},
                    "color": {"type": "integer", "minimum": 0},
                    "tie": {"type": "boolean"},
                },
            },
        },
    },
}


@dataclass
class Cover:
    """Overlapping community assignment.

    ``communities[i]`` is the set of communities of vertex ``i``;
    ``fractions[i, z]`` the expected fraction of its edge ends with colour
    ``z``.  ``isolated`` vertices have no edges and ``unassigned`` ones have
    edges but no colour degree above the membership threshold.
    """

    communities: list
    fractions: np.ndarray
    isolated: np.ndarray
    unassigned: np.ndarray

    @property
    def K(self) -> int:
        return self.fractions.shape[1]

    @property
    def n(self) -> int:
        return len(self.communities)

    @property
    def unattributed(self) -> np.ndarray:
        """Mass lost to pruning, per vertex (zero for an unpruned fit)."""
        out = 1.0 - self.fractions.sum(axis=1)
        out[self.isolated] = 0.0
        return np.clip(out, 0.0, None)

    def overlap(self) -> np.ndarray:
        return np.array([len(c) > 1 for c in self.communities], dtype=bool)

    def members(self, z: int) -> np.ndarray:
        return np.array([i for i, c in enumerate(self.communities) if z in c], dtype=np.int64)

    @classmethod
    def from_sets(cls, sets: list, K: Optional[int] = None) -> "Cover":
        """Cover with hard memberships only (fractions split evenly)."""
        sets = [frozenset(int(z) for z in s) for s in sets]
        if K is None:
            K = 1 + max((max(s) for s in sets if s), default=0)
        frac = np.zeros((len(sets), K))
        for i, s in enumerate(sets):
            for z in s:
                frac[i, z] = 1.0 / len(s)
        empty = np.array([not s for s in sets], dtype=bool)
        return cls(sets, frac, np.zeros(len(sets), dtype=bool), empty)


@dataclass
class EdgeColoring:
    color: np.ndarray
    tie: np.ndarray
    q: Optional[np.ndarray] = None


def extract_cover(g: Graph, k: np.ndarray, threshold: float = 1.0) -> Cover:
    """Vertex ``i`` joins community ``z`` when ``k_iz`` exceeds ``threshold``.

    Fractions are ``k_iz / degree(i)`` so mass removed by pruning stays
    visible as :attr:`Cover.unattributed`.
    """
    k = np.asarray(k, dtype=np.float64)
    deg = g.degrees.astype(np.float64)
    isolated = deg == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(isolated[:, None], 0.0, k / np.where(isolated, 1.0, deg)[:, None])
    comms = [frozenset(np.flatnonzero(row > threshold).tolist()) for row in k]
    unassigned = np.array([not c for c in comms], dtype=bool) & ~isolated
    return Cover(comms, frac, isolated, unassigned)


def edge_colors(g: Graph, k: np.ndarray, kappa: Optional[np.ndarray] = None,
                with_q: bool = False, rtol: float = 1e-12) -> EdgeColoring:
    """Most probable colour of every stored edge.

    Ties (within ``rtol``) go to the lowest colour and are flagged; an edge
    with zero rate is given a uniform vector and flagged as a tie.
    """
    k = np.asarray(k, dtype=np.float64)
    if kappa is None:
        kappa = k.sum(axis=0)
    inv = np.divide(1.0, kappa, out=np.zeros_like(kappa, dtype=np.float64), where=kappa > 0)
    w = k[g.u] * k[g.v] * inv
    D = w.sum(axis=1)
    bad = ~(D > 0)
    w[bad] = 1.0
    D[bad] = w.shape[1]
    q = w / D[:, None]
    color = q.argmax(axis=1)
    top = q[np.arange(len(q)), color]
    tie = ((q >= top[:, None] * (1 - rtol)).sum(axis=1) > 1) | bad
    return EdgeColoring(color.astype(np.int64), tie, q if with_q else None)


def _jsonable(label):
    if isinstance(label, (np.integer,)):
        return int(label)
    return label if isinstance(label, (int, str)) else str(label)


def result_document(g: Graph, cover: Cover, coloring: Optional[EdgeColoring] = None, *,
                    mode: str = "overlap", config: Optional[dict] = None, seed: Optional[int] = None,
                    likelihood: Optional[float] = None, iterations: int = 0,
                    seconds: Optional[float] = None, degenerate: bool = False,
                    digits: int = 12) -> dict:
    """Assemble the result document for a fit (see :data:`RESULT_SCHEMA`)."""
    if cover.n != g.n:
        raise ValueError("cover and graph sizes differ")
    unattr = cover.unattributed
    vertices = []
    for i in range(g.n):
        if cover.isolated[i]:
            continue
        entry = {
            "label": _jsonable(g.labels[i]),
            "communities": sorted(int(z) for z in cover.communities[i]),
            "fractions": [round(float(f), digits) for f in cover.fractions[i]],
        }
        if unattr[i] > 0:
            entry["unattributed"] = round(float(unattr[i]), digits)
        vertices.append(entry)
    edges = []
    if coloring is not None:
        for a, b, c, t in zip(g.u, g.v, coloring.color, coloring.tie):
            edges.append({"u": _jsonable(g.labels[a]), "v": _jsonable(g.labels[b]),
                          "color": int(c), "tie": bool(t)})
    return {
        "format": FORMAT,
        "mode": mode,
        "K": int(cover.K),
        "config": dict(config or {}),
        "seed": seed,
        "likelihood": None if likelihood is None or not np.isfinite(likelihood) else float(likelihood),
        "iterations": int(iterations),
        "seconds": None if seconds is None else round(float(seconds), 6),
        "degenerate": bool(degenerate),
        "vertices": vertices,
        "edges": edges,
    }


def dump_results(doc: dict) -> str:
    return json.dumps(doc, indent=1) + "\n"


def write_results(path, g: Graph, cover: Cover, coloring: Optional[EdgeColoring] = None, **meta) -> dict:
    doc = result_document(g, cover, coloring, **meta)
    with open(path, "w") as fh:
        fh.write(dump_results(doc))
    return doc


def load_results(text: str) -> dict:
    doc = json.loads(text)
    if doc.get("format") != FORMAT:
        raise ValueError(f"not a {FORMAT} document")
    return doc


def memberships_from_document(doc: dict) -> dict:
    """``label -> frozenset(communities)`` for every vertex in a result document."""
    return {v["label"]: frozenset(v["communities"]) for v in doc["vertices"]}
