"""Command-line front end: ``linkcomm detect|nonoverlap|bench|score|convert``.

Exit status is 0 on success, 1 when a fit hit a zero-rate edge (the result
is still written and flagged) and 2 for usage or input errors.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import __version__
from .bench import AXES, DEFAULT_GRIDS, format_table, run_benchmark_sweep, score
from .em import EmConfig, restart_sweep, run_em
from .fast import PruneConfig, fast_sweep
from .graph import EdgeListError, Graph, largest_component, read_communities, read_edge_list, write_edge_list
from .membership import Cover, dump_results, edge_colors, extract_cover, load_results, result_document
from .nonoverlap import run_nonoverlap

logger = logging.getLogger("linkcomm")

EXIT_OK, EXIT_DEGENERATE, EXIT_USAGE = 0, 1, 2
DEFAULT_DELTA = PruneConfig().delta


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    mode: str
    input: str
    K: int
    restarts: int = 100
    delta: float = DEFAULT_DELTA
    tol: Optional[float] = None
    max_iter: int = 1_000_000
    seed: Optional[int] = None
    threads: int = 1
    deterministic: bool = False
    output: Optional[str] = None

    def __post_init__(self):
        if self.K < 1:
            raise UsageError("K must be at least 1")
        if self.restarts < 1:
            raise UsageError("--restarts must be at least 1")
        if not self.delta >= 0:
            raise UsageError("--delta must be non-negative")
        if self.threads < 1:
            raise UsageError("--threads must be at least 1")
        if self.max_iter < 1:
            raise UsageError("--max-iter must be at least 1")

    def em_config(self, naive: bool = False) -> EmConfig:
        cfg = EmConfig(max_iter=self.max_iter, restarts=self.restarts, threads=self.threads)
        if self.tol is not None:
            if naive:
                cfg.tol = self.tol
            else:
                cfg.k_tol = self.tol
        return cfg


def _env_int(name: str) -> Optional[int]:
    val = os.environ.get(name)
    if val is None or val == "":
        return None
    try:
        return int(val)
    except ValueError:
        raise UsageError(f"{name} must be an integer, got {val!r}") from None


def _resolve_seed(args) -> int:
    seed = args.seed if args.seed is not None else _env_int("LINKCOMM_SEED")
    if seed is None:
        seed = 0 if args.deterministic else int(np.random.SeedSequence().generate_state(1, np.uint64)[0] >> 1)
    if seed < 0:
        raise UsageError("seed must be non-negative")
    return seed


def _resolve_threads(args) -> int:
    if args.threads is not None:
        return args.threads
    return _env_int("LINKCOMM_THREADS") or 1


def _read_graph(args) -> Graph:
    try:
        g = read_edge_list(args.input, index_base=args.index_base, symmetrize=args.symmetrize)
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc.strerror or exc}") from None
    except EdgeListError as exc:
        raise UsageError(f"{args.input}: {exc}") from None
    if args.largest_component:
        g, _ = largest_component(g)
    if g.m == 0:
        raise UsageError(f"{args.input}: graph has no edges")
    return g


def _run_config(args, mode: str, restarts_default: int, delta_default: float = DEFAULT_DELTA) -> RunConfig:
    return RunConfig(mode=mode, input=args.input, K=args.K,
                     restarts=args.restarts if args.restarts is not None else restarts_default,
                     delta=args.delta if args.delta is not None else delta_default,
                     tol=args.tol, max_iter=args.max_iter, seed=_resolve_seed(args),
                     threads=_resolve_threads(args), deterministic=args.deterministic, output=args.output)


def _emit(text: str, path: Optional[str]):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _report(ll: float, iterations: int, seconds: float, extra: str = ""):
    print(f"log-likelihood {ll:.6f}  iterations {iterations}  seconds {seconds:.3f}{extra}", file=sys.stderr)


def _doc_config(cfg: RunConfig, **extra) -> dict:
    out = {k: v for k, v in asdict(cfg).items() if k not in ("input", "output", "threads", "seed", "mode")}
    out.update(extra)
    return out


def cmd_detect(args) -> int:
    if args.naive and args.delta is not None:
        raise UsageError("--delta applies only to the fast fit; drop --naive or --delta")
    cfg = _run_config(args, "overlap", 100, 0.0 if args.naive else DEFAULT_DELTA)
    g = _read_graph(args)
    em_cfg = cfg.em_config(naive=args.naive)
    if args.naive:
        sw = restart_sweep(g, cfg.K, em_cfg, seed=cfg.seed, fit=run_em)
    else:
        prune = PruneConfig(delta=cfg.delta, freeze=not args.no_freeze)
        sw = fast_sweep(g, cfg.K, em_cfg, seed=cfg.seed, prune=prune, audit_every=0)
    best = sw.best
    cover = extract_cover(g, best.k)
    coloring = edge_colors(g, best.k, best.kappa)
    doc = result_document(g, cover, coloring, mode="overlap",
                          config=_doc_config(cfg, naive=bool(args.naive), freeze=not args.no_freeze),
                          seed=cfg.seed, likelihood=best.log_likelihood, iterations=sw.iterations,
                          seconds=None if cfg.deterministic else sw.seconds, degenerate=best.degenerate)
    _emit(dump_results(doc), cfg.output)
    n_over = int(cover.overlap().sum())
    _report(best.log_likelihood, sw.iterations, sw.seconds, f"  overlap {n_over}")
    if best.degenerate:
        print("warning: some edges had zero rate during the fit", file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_nonoverlap(args) -> int:
    cfg = _run_config(args, "nonoverlap", 10)
    g = _read_graph(args)
    prune = PruneConfig(delta=cfg.delta, freeze=not args.no_freeze)
    res = run_nonoverlap(g, cfg.K, cfg.em_config(), seed=cfg.seed, prune=prune,
                         general=args.general, refine=not args.no_refine)
    labels = res.partition.labels
    cover = Cover.from_sets([frozenset() if c < 0 else frozenset({int(c)}) for c in labels], cfg.K)
    cover.isolated = g.degrees == 0
    cover.unassigned = (labels < 0) & ~cover.isolated
    doc = result_document(g, cover, None, mode="nonoverlap",
                          config=_doc_config(cfg, general=bool(args.general), refine=not args.no_refine),
                          seed=cfg.seed, likelihood=res.log_likelihood, iterations=res.iterations,
                          seconds=None if cfg.deterministic else res.seconds, degenerate=False)
    _emit(dump_results(doc), cfg.output)
    if args.partition:
        lines = [f"{g.labels[i]}\t{labels[i]}" for i in range(g.n) if labels[i] >= 0]
        _emit("\n".join(lines) + "\n", args.partition)
    _report(res.log_likelihood, res.iterations, res.seconds, f"  moves {res.moves}")
    return EXIT_OK


def _parse_grid(text: Optional[str], axis: str) -> list:
    if text is None:
        return list(DEFAULT_GRIDS[axis])
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--grid must be comma-separated numbers, got {text!r}") from None


def cmd_bench(args) -> int:
    if args.axis not in AXES:
        raise UsageError(f"unknown axis {args.axis!r}; expected one of {', '.join(AXES)}")
    if args.reps < 1 or args.restarts < 1:
        raise UsageError("--reps and --restarts must be at least 1")
    seed = _resolve_seed(args)
    config = EmConfig(max_iter=args.max_iter, restarts=args.restarts, threads=_resolve_threads(args))
    t0 = time.perf_counter()
    try:
        rows = run_benchmark_sweep(args.axis, _parse_grid(args.grid, args.axis), reps=args.reps,
                                   restarts=args.restarts, seed=seed, n=args.n, z=args.z, k=args.k,
                                   config=config, prune=PruneConfig(delta=args.delta))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(format_table(rows, args.axis), args.output)
    print(f"{len(rows)} grid points  seconds {time.perf_counter() - t0:.3f}", file=sys.stderr)
    return EXIT_OK


def _read_cover_file(path: str) -> dict:
    """``label -> communities`` from a result document or a community listing."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    if text.lstrip().startswith("{"):
        try:
            doc = load_results(text)
        except ValueError as exc:
            raise UsageError(f"{path}: {exc}") from None
        return {v["label"]: frozenset(v["communities"]) for v in doc["vertices"]}
    try:
        return read_communities(text)[0]
    except EdgeListError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _normalize(label):
    # JSON keeps integer labels as ints; listings may spell them as strings
    if isinstance(label, str):
        try:
            return int(label)
        except ValueError:
            return label
    return label


def cmd_score(args) -> int:
    truth = {_normalize(k): v for k, v in _read_cover_file(args.truth).items()}
    found = {_normalize(k): v for k, v in _read_cover_file(args.result).items()}
    labels = sorted(set(truth) | set(found), key=lambda x: (isinstance(x, str), x))
    if not labels:
        raise UsageError("no vertices in either file")
    s = score([truth.get(l, frozenset()) for l in labels], [found.get(l, frozenset()) for l in labels])
    lines = [f"vertices\t{len(labels)}"]
    for name in ("fraction_correct", "jaccard", "nmi", "variant_nmi"):
        val = getattr(s, name)
        lines.append(f"{name}\t{'nan' if np.isnan(val) else f'{val:.6f}'}")
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_convert(args) -> int:
    try:
        g = read_edge_list(args.input, index_base=args.index_base, symmetrize=args.symmetrize)
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc.strerror or exc}") from None
    except EdgeListError as exc:
        raise UsageError(f"{args.input}: {exc}") from None
    if args.largest_component:
        g, _ = largest_component(g)
    if args.relabel:
        g = Graph(g.n, g.u, g.v, g.count)
    _emit(write_edge_list(g), args.output)
    print(f"n {g.n}  m {g.m}  distinct pairs {g.num_pairs}", file=sys.stderr)
    return EXIT_OK


def _input_args(p: argparse.ArgumentParser):
    p.add_argument("input", help="edge list: 'u v [count]' per line, '#' comments")
    p.add_argument("--index-base", type=int, default=None,
                   help="treat integer ids as offsets from this base instead of compacting them")
    p.add_argument("--symmetrize", action="store_true",
                   help="input lists directed arcs; merge reciprocal pairs")
    p.add_argument("--largest-component", action="store_true", help="keep only the largest component")


def _fit_args(p: argparse.ArgumentParser, restarts_help: str):
    p.add_argument("-K", type=int, required=True, help="number of communities")
    p.add_argument("--restarts", type=int, default=None, help=restarts_help)
    p.add_argument("--delta", type=float, default=None,
                   help=f"pruning threshold on colour degrees (default {DEFAULT_DELTA:g}; 0 = off)")
    p.add_argument("--no-freeze", action="store_true", help="never freeze single-colour edges")
    p.add_argument("--tol", type=float, default=None, help="convergence tolerance")
    p.add_argument("--max-iter", type=int, default=1_000_000)


def _run_args(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=None, help="master seed (env LINKCOMM_SEED)")
    p.add_argument("--threads", type=int, default=None, help="worker threads for restarts (env LINKCOMM_THREADS)")
    p.add_argument("--deterministic", action="store_true",
                   help="reproducible output: default seed 0 and no timing in the document")
    p.add_argument("-o", "--output", default=None, help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="linkcomm", description="Community detection by link colouring EM.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="overlapping communities")
    _input_args(p)
    _fit_args(p, "random restarts (default 100)")
    _run_args(p)
    p.add_argument("--naive", action="store_true", help="use the reference EM instead of the pruned one")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("nonoverlap", help="non-overlapping communities with vertex-move refinement")
    _input_args(p)
    _fit_args(p, "random restarts (default 10)")
    _run_args(p)
    p.add_argument("--general", action="store_true", help="fit the full block-matrix model")
    p.add_argument("--no-refine", action="store_true", help="skip vertex-move refinement")
    p.add_argument("--partition", default=None, help="also write 'label community' lines here")
    p.set_defaults(func=cmd_nonoverlap)

    p = sub.add_parser("bench", help="synthetic two-community sweep")
    p.add_argument("--axis", default="degree", help=f"one of {', '.join(AXES)}")
    p.add_argument("--grid", default=None, help="comma-separated grid values")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("-n", type=int, default=10000)
    p.add_argument("-z", type=int, default=500, help="overlap size for the degree and balance axes")
    p.add_argument("-k", type=float, default=10.0, help="expected degree for the balance and overlap axes")
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.add_argument("--max-iter", type=int, default=1_000_000)
    _run_args(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("score", help="compare a detected cover with the truth")
    p.add_argument("truth", help="community listing ('label c1 [c2 ...]') or result document")
    p.add_argument("result", help="result document or community listing")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("convert", help="normalize an edge list")
    _input_args(p)
    p.add_argument("--relabel", action="store_true", help="write vertices as 0..n-1")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_convert)
    return ap


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"linkcomm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
