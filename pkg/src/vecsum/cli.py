"""Command line interface: ``vecsum {coreset,stream,cluster,bench,proximity}``.

Exit codes: 0 success, 2 invalid configuration or input, 3 I/O error.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import re
import sys
from typing import IO, Iterator, Optional, Sequence

from .bench import METHODS, ExperimentConfig, run_experiment, write_csv
from .coreset import Coreset, CoresetParams, coreset, estimate_sparse
from .distributed import Cluster
from .exceptions import VecsumError
from .proximity import ProximityBook, parse_edges, parse_records, write_heavy_hitters
from .stream import StreamState
from .vector import SparseVector, WeightedPointSet, sparse_from_pairs

log = logging.getLogger("vecsum")

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


@contextlib.contextmanager
def _open(path: Optional[str], mode: str) -> Iterator[IO[str]]:
    if path in (None, "-"):
        yield sys.stdin if "r" in mode else sys.stdout
    else:
        with open(path, mode, encoding="utf-8", newline="" if "w" in mode else None) as fh:
            yield fh


def parse_vector_line(line: str, lineno: int = 0) -> tuple[SparseVector, float]:
    """One JSON value per line: ``[[i, v], ...]``, a dense ``[x0, x1, ...]``, or
    ``{"pairs": [[i, v], ...], "weight": w}``."""
    obj = json.loads(line)
    weight = 1.0
    if isinstance(obj, dict):
        weight = float(obj.get("weight", 1.0))
        obj = obj.get("pairs", [])
    if not isinstance(obj, list):
        raise VecsumError(f"line {lineno}: expected a JSON list or object")
    if obj and all(isinstance(e, list) for e in obj):
        if any(len(e) != 2 for e in obj):
            raise VecsumError(f"line {lineno}: pairs must be [index, value]")
        return sparse_from_pairs((e[0], e[1]) for e in obj), weight
    return SparseVector.from_dense([float(x) for x in obj]), weight


def read_vectors(fh: IO[str]) -> Iterator[tuple[SparseVector, float]]:
    for lineno, raw in enumerate(fh, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            yield parse_vector_line(line, lineno)
        except (ValueError, TypeError) as exc:
            raise VecsumError(f"line {lineno}: {exc}") from exc


def coreset_json(c: Coreset, **extra) -> dict:
    out = {
        "points": [[[i, v] for i, v in p.pairs()] for p in c.points],
        "weights": [float(w) for w in c.weights],
        "represented_count": int(c.represented_count),
        "represented_weight": float(c.represented_weight),
        "source_indices": [int(i) for i in c.source_indices],
    }
    out.update(extra)
    return out


def _params(args) -> CoresetParams:
    return CoresetParams(args.beta, alpha=args.alpha, rule=args.rule)


def _int_list(text: str) -> list[int]:
    """``"1,2,5-7"`` -> ``[1, 2, 5, 6, 7]``."""
    out: list[int] = []
    for part in filter(None, (t.strip() for t in text.split(","))):
        m = re.fullmatch(r"(\d+)-(\d+)", part)
        if m:
            out.extend(range(int(m.group(1)), int(m.group(2)) + 1))
        else:
            out.append(int(part))
    return out


def cmd_coreset(args) -> int:
    with _open(args.input, "r") as fh:
        pairs = list(read_vectors(fh))
    if not pairs:
        raise VecsumError("input holds no vectors")
    points, weights = zip(*pairs)
    C = coreset(WeightedPointSet.from_weights(points, weights), _params(args))
    with _open(args.out, "w") as out:
        json.dump(coreset_json(C), out)
        out.write("\n")
    return EXIT_OK


def _estimate_line(n: int, stored: int, c: Coreset) -> str:
    return json.dumps({"n": n, "stored_points": stored, "mean": estimate_sparse(c).pairs()})


def cmd_stream(args) -> int:
    state = StreamState(_params(args), args.leaf_size or 2 * (args.beta + 1))
    with _open(args.input, "r") as fh, _open(args.out, "w") as out:
        for p, _w in read_vectors(fh):
            state.insert(p)
            if args.every and state.total_count % args.every == 0:
                out.write(_estimate_line(state.total_count, state.stored_points, state.finalize()) + "\n")
        if state.total_count and (not args.every or state.total_count % args.every):
            out.write(_estimate_line(state.total_count, state.stored_points, state.finalize()) + "\n")
    if not state.total_count:
        raise VecsumError("input holds no vectors")
    return EXIT_OK


def cmd_cluster(args) -> int:
    cluster = Cluster(_params(args), args.leaf_size or 2 * (args.beta + 1), args.machines)
    with _open(args.input, "r") as fh:
        for p, _w in read_vectors(fh):
            cluster.route_insert(p)
    C = cluster.collect()
    with _open(args.out, "w") as out:
        json.dump(coreset_json(C, comm_log=cluster.comm_log, machine_loads=cluster.loads()), out)
        out.write("\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = ExperimentConfig(
        generator=args.gen,
        n=args.n,
        d=args.d,
        nnz=args.nnz,
        path=args.path,
        betas=_int_list(args.betas),
        seeds=_int_list(args.seeds),
        methods=[m.strip() for m in args.methods.split(",") if m.strip()],
        leaf_size=args.leaf_size,
        rule=args.rule,
        alpha=args.alpha,
        timing=not args.no_timing,
    )
    rows = run_experiment(cfg)
    with _open(args.out, "w") as out:
        write_csv(rows, out)
    return EXIT_OK


def cmd_proximity(args) -> int:
    params = CoresetParams(args.beta, alpha=args.alpha, rule=args.rule)
    book = ProximityBook(params, args.leaf_size, scale=args.scale, metric=args.metric, cutoff=args.cutoff)
    with _open(args.input, "r") as fh:
        if args.format == "edges":
            for a, b, w in parse_edges(fh):
                book.ingest_edge(a, b, w)
        else:
            for rec in parse_records(fh):
                book.ingest(rec)
    users = args.user or book.users
    with _open(args.out, "w") as out:
        writer = csv.writer(out, lineterminator="\n")
        if args.degrees:
            writer.writerow(["user", "degree_estimate"])
            deg = book.degree_estimate()
            for i, v in zip(deg.indices.tolist(), deg.values.tolist()):
                writer.writerow([book.users[i], repr(v)])
            return EXIT_OK
        write_heavy_hitters(book, out, args.topk, users)
    return EXIT_OK


def _add_coreset_args(p, beta=100):
    p.add_argument("--beta", type=int, default=beta, help="Frank-Wolfe iterations (coreset size - 1)")
    p.add_argument("--alpha", type=float, default=4.0)
    p.add_argument("--rule", choices=["linear", "farthest"], default="linear")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vecsum", description="Coresets for streaming vector sums.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("coreset", help="compress a file of vectors into a coreset (JSON)")
    p.add_argument("--input", "-i", default="-")
    p.add_argument("--out", "-o", default="-")
    _add_coreset_args(p)
    p.set_defaults(func=cmd_coreset)

    p = sub.add_parser("stream", help="stream vectors and print running estimates")
    p.add_argument("--input", "-i", default="-")
    p.add_argument("--out", "-o", default="-")
    p.add_argument("--leaf-size", type=int, default=None)
    p.add_argument("--every", type=int, default=0, help="emit an estimate every K points (0: only at the end)")
    _add_coreset_args(p)
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("cluster", help="stream vectors over M simulated machines")
    p.add_argument("--input", "-i", default="-")
    p.add_argument("--out", "-o", default="-")
    p.add_argument("--machines", "-M", type=int, default=2)
    p.add_argument("--leaf-size", type=int, default=None)
    _add_coreset_args(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("bench", help="error-vs-budget experiments as CSV")
    p.add_argument("--gen", choices=["gaussian", "identity-rows", "gps-file", "edge-file"], default="gaussian")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--d", type=int, default=20)
    p.add_argument("--nnz", type=int, default=None, help="non-zeros per Gaussian vector (default: dense)")
    p.add_argument("--path", default=None, help="dataset for gps-file / edge-file")
    p.add_argument("--betas", default="100,200,300,400,500,600,900")
    p.add_argument("--seeds", default="0", help="comma list, ranges allowed (0-9)")
    p.add_argument("--methods", default="coreset", help=f"comma list from {','.join(METHODS)}")
    p.add_argument("--leaf-size", type=int, default=None, help="stream the data instead of one offline coreset")
    p.add_argument("--rule", choices=["linear", "farthest"], default="linear")
    p.add_argument("--alpha", type=float, default=4.0)
    p.add_argument("--no-timing", action="store_true", help="write 0 in runtime_ms for reproducible output")
    p.add_argument("--out", "-o", default="-")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("proximity", help="heavy hitters of a proximity graph from GPS records or edges")
    p.add_argument("--input", "-i", default="-")
    p.add_argument("--format", choices=["gps", "edges"], default="gps")
    p.add_argument("--topk", type=int, default=5)
    p.add_argument("--user", action="append", help="query this user (repeatable; default: all)")
    p.add_argument("--degrees", action="store_true", help="edges mode: print the degree estimate instead")
    p.add_argument("--leaf-size", type=int, default=None)
    p.add_argument("--cutoff", type=float, default=None, help="drop proximities below this value")
    p.add_argument("--scale", type=float, default=1.0, help="distance units per coordinate unit")
    p.add_argument("--metric", choices=["planar", "haversine"], default="planar")
    p.add_argument("--out", "-o", default="-")
    _add_coreset_args(p, beta=32)
    p.set_defaults(func=cmd_proximity)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except OSError as exc:
        log.error("%s: %s", getattr(exc, "filename", None) or "I/O error", exc.strerror or exc)
        return EXIT_IO
    except (VecsumError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
