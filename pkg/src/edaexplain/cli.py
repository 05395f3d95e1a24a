"""Batch command line: load CSVs, run one operation, print explanations.

Subcommands: explain (the main path), eval (sampling-accuracy sweep),
serve (HTTP session service). Exit codes: 0 success, including an empty
explanation set; 2 for usage and operation-syntax problems; 1 for data
errors (unreadable files, unknown columns, type mismatches).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ArityError, DataError, EngineError, OpSyntaxError
from .frame import ingest_csv
from .measures import SamplingConfig
from .ops import make_step, parse_operation
from .pipeline import ExplainConfig, RankWeights, explain_step
from .render import build_payload, render_svg, serialize_explanations

# sampling turns itself on past this input size unless --exact is given
AUTO_SAMPLING_ROWS = 50000
DEFAULT_SAMPLE_SIZE = 5000


def _int_tuple(text: str) -> tuple:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _weights(text: str) -> RankWeights:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("weights look like '1,1' (w_i,w_c)")
    try:
        return RankWeights(float(parts[0]), float(parts[1]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _str_list(text: str) -> list:
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="eda-explain",
        description="Explain what an exploratory operation did to a dataset.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("explain", help="run one operation and emit explanations")
    ex.add_argument("--data", action="append", required=True, metavar="CSV",
                    help="input CSV; repeat for join/union")
    ex.add_argument("--op", required=True, help="operation DSL or JSON")
    ex.add_argument("--bins", type=_int_tuple, default=(5, 10), metavar="5,10")
    ex.add_argument("--top-k", type=int, default=None)
    ex.add_argument("--weights", type=_weights, default=RankWeights(), metavar="W_I,W_C")
    ex.add_argument("--columns", type=_str_list, default=None,
                    help="score only these output columns")
    ex.add_argument("--measure", default=None, help="registered measure name")
    ex.add_argument("--sample-size", type=int, default=None,
                    help=f"sample rows for scoring (default {DEFAULT_SAMPLE_SIZE}; "
                         "passing it forces sampling on)")
    ex.add_argument("--seed", type=int, default=0)
    ex.add_argument("--exact", action="store_true",
                    help="no sampling, full re-execution for every intervention")
    ex.add_argument("--no-m2o", action="store_true", help="skip many-to-one mining")
    ex.add_argument("--format", choices=("json", "text"), default="json")
    ex.add_argument("--out", default=None, help="write output here instead of stdout")
    ex.add_argument("--svg-dir", default=None, help="also write one SVG per explanation")
    ex.add_argument("--delimiter", default=",")
    ex.set_defaults(handler=_cmd_explain)

    ev = sub.add_parser("eval", help="sampled-vs-exact ranking accuracy sweep")
    ev.add_argument("--rows", type=int, default=100000)
    ev.add_argument("--cols", type=int, default=15)
    ev.add_argument("--sample-sizes", type=_int_tuple, default=(50, 500, 5000))
    ev.add_argument("--num-seeds", type=int, default=20)
    ev.add_argument("--k", type=int, default=3)
    ev.add_argument("--shift", type=float, default=1.0)
    ev.add_argument("--data-seed", type=int, default=0)
    ev.add_argument("--out", default=None)
    ev.set_defaults(handler=_cmd_eval)

    sv = sub.add_parser("serve", help="start the HTTP session service")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8000)
    sv.add_argument("--ttl", type=int, default=3600, help="session idle eviction, seconds")
    sv.add_argument("--upload-cap", type=int, default=50 * 1024 * 1024, help="bytes")
    sv.add_argument("--timeout", type=float, default=30.0,
                    help="synchronous explanation budget, seconds")
    sv.add_argument("--token", default=None, help="require this bearer token")
    sv.add_argument("--cors-origin", action="append", default=None)
    sv.set_defaults(handler=_cmd_serve)
    return p


def _cmd_explain(args) -> int:
    try:
        op = parse_operation(args.op)
    except OpSyntaxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        frames = [ingest_csv(path, delimiter=args.delimiter) for path in args.data]
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    largest = max(f.row_count for f in frames)
    if args.exact:
        sampling = None
    elif args.sample_size is not None or largest > AUTO_SAMPLING_ROWS:
        size = args.sample_size if args.sample_size is not None else DEFAULT_SAMPLE_SIZE
        sampling = SamplingConfig(enabled=True, sample_size=size, seed=args.seed)
    else:
        sampling = None

    config = ExplainConfig(
        bin_counts=args.bins,
        sampling=sampling,
        measure=args.measure,
        columns=args.columns,
        top_k=args.top_k,
        weights=args.weights,
        mine_m2o=not args.no_m2o,
        exact_interventions=True if args.exact else None,
    )

    try:
        step = make_step(op, frames)
        explanations = explain_step(step, config)
    except ArityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.format == "json":
        payload = build_payload(step, explanations)
        text = json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
    else:
        body = serialize_explanations(explanations, "text").decode("utf-8")
        text = body if body else "no explanations\n"

    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if not explanations:
        print("no explanations", file=sys.stderr)

    if args.svg_dir:
        svg_dir = Path(args.svg_dir)
        svg_dir.mkdir(parents=True, exist_ok=True)
        for i, e in enumerate(explanations):
            (svg_dir / f"explanation_{i:03d}.svg").write_text(render_svg(e), encoding="utf-8")
    return 0


def _cmd_eval(args) -> int:
    from .evalharness import reports_to_csv, run_eval

    try:
        reports = run_eval(
            rows=args.rows,
            cols=args.cols,
            sample_sizes=args.sample_sizes,
            seeds=range(args.num_seeds),
            k=args.k,
            shift_strength=args.shift,
            data_seed=args.data_seed,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    csv_text = reports_to_csv(reports)
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
    else:
        sys.stdout.write(csv_text)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    app = create_app(
        ServiceConfig(
            session_ttl=args.ttl,
            upload_cap=args.upload_cap,
            step_timeout=args.timeout,
            bearer_token=args.token,
            cors_origins=tuple(args.cors_origin) if args.cors_origin else ("*",),
        )
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
