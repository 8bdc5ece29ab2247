"""Recovery of planted overlap as the mean degree grows.

Runs a reduced version of the two-community benchmark (2000 vertices, 100 of
them in both communities, 5 networks per grid point) and prints the
fraction of vertices with exactly the right memberships and the Jaccard
index of the detected overlap.  The full-size sweep is available through
``linkcomm bench --axis degree``.

    python demos/synthetic_sweep.py
"""

from linkcomm.bench import format_table, run_benchmark_sweep

rows = run_benchmark_sweep("degree", grid=[2, 5, 10, 15, 20], reps=5, restarts=10, seed=3, n=2000, z=100)
print(format_table(rows, axis="degree"), end="")
