"""``entropy-embed`` command line: load a graph, embed it, write results.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .engine import IterationConfig, default_workers, embed
from .errors import CapabilityError, ConfigurationError, DivergenceError, EmptyGraphError, GraphFormatError, SamplingError
from .graph import Graph, is_snapshot, load_edge_list, read_snapshot
from .metrics import MAX_EXACT_PAIRS, format_table, pe_exact, pe_sampled, separation_report, ssq_aligned
from .output import emit_svg, read_embedding, read_vertex_classes, write_embedding

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3
THREADS_ENV = "ENTROPY_EMBED_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="entropy-embed", description="Embed a graph by minimising predictive entropy.")
    p.add_argument("--input", "-i", type=Path, required=True, help="edge list (two ids per line) or binary snapshot")
    p.add_argument("--dim", "-d", type=int, default=2)
    p.add_argument("--iters", type=int, default=100, help="maximum number of rounds")
    p.add_argument("--threads", "-t", type=int, default=None, help=f"worker threads (default: ${THREADS_ENV} or all cores)")
    p.add_argument("--lanes", type=int, default=16, help="sampler lane width")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hash-bits", type=int, default=None, help="log2 of the edge hash table size")
    p.add_argument("--out", "-o", type=Path, default=None, help="TSV embedding output")
    p.add_argument("--svg", type=Path, default=None, help="SVG drawing (needs --dim 2)")
    p.add_argument("--labels", type=Path, default=None, help="'id class' file used to colour SVG vertices")
    p.add_argument("--metrics", action="store_true", help="print the quality report")
    p.add_argument("--ground-truth", type=Path, default=None, help="TSV of reference coordinates for SSQ")
    p.add_argument("--exact-math", action="store_true", help="use exact erf/exp instead of the piecewise fit")
    p.add_argument("--dump-histogram", type=Path, default=None, help="CSV of the last round's distance histogram")
    p.add_argument("--relabel-period", type=int, default=0, help="re-shuffle vertex ids every R rounds (0 = never)")
    p.add_argument("--verbose", "-v", action="store_true")
    return p


def _threads(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{THREADS_ENV}={env!r} is not an integer") from None
    return default_workers()


def _load(path: Path) -> Graph:
    if is_snapshot(path):
        return read_snapshot(path)
    return load_edge_list(path)


def _ground_truth_rows(g: Graph, path: Path) -> np.ndarray:
    ids, coords = read_embedding(path)
    row_of = {int(v): k for k, v in enumerate(ids)}
    missing = [int(v) for v in g.labels if int(v) not in row_of]
    if missing:
        raise ValueError(f"ground truth lacks vertex {missing[0]}")
    return coords[[row_of[int(v)] for v in g.labels]]


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.dim < 1:
            raise UsageError("--dim must be >= 1")
        if args.svg is not None and args.dim != 2:
            raise UsageError("--svg requires --dim 2")
        threads = _threads(args.threads)
        cfg = IterationConfig(
            max_iters=args.iters,
            lanes=args.lanes,
            workers=threads,
            relabel_period=args.relabel_period,
            exact_math=args.exact_math,
            hash_bits=args.hash_bits,
        )
    except (UsageError, ConfigurationError) as exc:
        print(f"entropy-embed: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")

    try:
        g = _load(args.input)
        result = embed(g, args.dim, cfg, seed=args.seed)
        trace = result.pe_trace
        if trace:
            status = "converged" if result.converged else "stopped at max iterations"
            print(
                f"{result.iterations} rounds ({status}); sampled pe {trace[0]:.4f} -> {trace[-1]:.4f} "
                f"(best {min(trace):.4f}) bits/pair, sigma {result.sigma_trace[-1]:.4g}"
            )
        if args.out is not None:
            write_embedding(result.embedding, args.out, g.labels)
        if args.svg is not None:
            classes = read_vertex_classes(args.labels) if args.labels is not None else None
            emit_svg(g, result.embedding, args.svg, classes)
        if args.dump_histogram is not None and result.histogram is not None:
            result.histogram.to_csv(args.dump_histogram)
        if args.metrics or args.ground_truth is not None:
            if g.num_pairs <= MAX_EXACT_PAIRS:
                report = pe_exact(g, result.embedding)
            else:
                report = pe_sampled(g, result.embedding, 2, args.seed)
            ssq = None
            if args.ground_truth is not None:
                ssq = ssq_aligned(result.embedding, _ground_truth_rows(g, args.ground_truth))
            sep = separation_report(g, result.embedding, 10_000, args.seed)
            print(format_table(report, sep, ssq))
            print(report.to_json())
    except CapabilityError as exc:
        print(f"entropy-embed: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"entropy-embed: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (GraphFormatError, EmptyGraphError, SamplingError, ConfigurationError, ValueError, OSError) as exc:
        print(f"entropy-embed: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main() -> int:
    return run(sys.argv[1:])
