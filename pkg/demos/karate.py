"""Overlapping two-community split of Zachary's karate club.

Fits K=2 with 100 restarts, prints each vertex's colour fractions and marks
the vertices that land in both communities, then checks the split against
the club's actual fission.

    python demos/karate.py
"""

import networkx as nx
import numpy as np

from linkcomm import EmConfig, extract_cover, from_edges, fast_sweep

club = nx.karate_club_graph()
g = from_edges(club.edges())
truth = np.array([0 if club.nodes[i]["club"] == "Mr. Hi" else 1 for i in range(g.n)])

fit = fast_sweep(g, 2, EmConfig(), seed=0, restarts=100)
cover = extract_cover(g, fit.best.k)
print(f"best log-likelihood {fit.best.log_likelihood:.4f} over 100 restarts")

side = fit.best.k.argmax(axis=1)
if np.mean(side == truth) < 0.5:
    side = 1 - side
for i in range(g.n):
    mark = "both" if len(cover.communities[i]) > 1 else f"  {side[i]} "
    agree = "" if len(cover.communities[i]) > 1 else ("" if side[i] == truth[i] else "  <- differs from club")
    print(f"vertex {i:2d}  degree {g.degree(i):2d}  fractions {np.round(cover.fractions[i], 3)}  {mark}{agree}")

over = np.flatnonzero(cover.overlap())
print(f"overlap vertices: {over.tolist()}")
print(f"non-overlap vertices on their club's side: {np.sum((side == truth) & ~cover.overlap())}"
      f"/{np.sum(~cover.overlap())}")
