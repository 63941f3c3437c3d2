"""Command-line front end: generate, evaluate, report, oracle.

One JSON config file describes a run (see config.py); flags override only
paths and worker count.  Exit codes: 0 success, 2 invalid config or
schema, 3 I/O failure, 4 prediction/annotation frame-id mismatch.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .annotate import read_trial_json
from .config import ConfigError, RunConfig, load_run_config
from .evaluation import (PredictionFormatError, PredictionSchemaError,
                         UnknownFrameError, ingest_predictions,
                         oracle_detect, write_predictions)
from .pipeline import (evaluate_run, generate_trial, read_results,
                       report_run, write_results)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3
EXIT_FRAME_MISMATCH = 4

WORKERS_ENV = "ORBITBENCH_WORKERS"


def _resolve_workers(flag_value, config_value: int) -> int:
    """--workers beats ORBITBENCH_WORKERS beats the config; 0 means one
    worker per CPU."""
    value = flag_value
    if value is None:
        env = os.environ.get(WORKERS_ENV)
        if env is not None:
            try:
                value = int(env)
            except ValueError:
                raise ConfigError(f"{WORKERS_ENV}={env!r} is not an integer")
    if value is None:
        value = config_value
    if value < 0:
        raise ConfigError("worker count must be >= 0 (0 means auto)")
    if value == 0:
        value = os.cpu_count() or 1
    return value


def _progress_printer(stream):
    state = {"next": 0.05}

    def progress(done, total):
        frac = done / total if total else 1.0
        if frac >= state["next"] or done == total:
            print(f"rendered {done}/{total} frames", file=stream)
            while state["next"] <= frac:
                state["next"] += 0.05

    return progress


def cmd_generate(args) -> int:
    cfg = load_run_config(args.config)
    if args.out is not None:
        cfg = replace(cfg, output_dir=args.out)
    workers = _resolve_workers(args.workers, cfg.workers)
    out = generate_trial(cfg, workers=workers,
                         progress=_progress_printer(sys.stderr))
    print(f"wrote {out['n_frames']} frames and {out['n_records']} "
          f"annotation records under {out['trial_dir']}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    if args.config is not None:
        eval_cfg = load_run_config(args.config).eval
    else:
        eval_cfg = RunConfig().eval
    _, annotations = read_trial_json(args.annotations)
    known = {a.frame_id for a in annotations}
    predictions = ingest_predictions(args.predictions, known_frame_ids=known)
    results = evaluate_run(annotations, predictions, eval_cfg)
    write_results(results, args.out)
    map_value = results["ap_grid"]["map"]
    shown = "n/a" if map_value is None else f"{map_value:.4f}"
    print(f"evaluated {results['n_predictions']} predictions against "
          f"{results['n_annotations']} annotations; mAP {shown}; "
          f"results in {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    results = read_results(args.results)
    bundle = report_run(results, args.out)
    print(f"wrote {len(bundle.files)} report files and manifest "
          f"under {bundle.out_dir}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    if args.min_pixels < 1:
        raise ConfigError("--min-pixels must be >= 1")
    _, annotations = read_trial_json(args.annotations)
    predictions = oracle_detect(annotations, args.min_pixels)
    write_predictions(predictions, args.out)
    print(f"wrote {len(predictions)} oracle predictions to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orbitbench",
        description="Render orbital sweeps over synthetic scenes and "
                    "characterize detector performance across them.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate",
                       help="render a sweep and write trial annotations")
    p.add_argument("--config", required=True, help="run config JSON")
    p.add_argument("--out", help="override the config's output_dir")
    p.add_argument("--workers", type=int,
                   help=f"parallel render workers (default: {WORKERS_ENV} "
                        "env, then config; 0 = one per CPU)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate",
                       help="score a prediction file against annotations")
    p.add_argument("--annotations", required=True,
                   help="trial annotation JSON")
    p.add_argument("--predictions", required=True,
                   help="prediction JSON")
    p.add_argument("--config", help="run config JSON for eval settings")
    p.add_argument("--out", default="results.json",
                   help="results JSON path (default results.json)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report",
                       help="emit CSV/SVG artifacts from a results file")
    p.add_argument("--results", required=True, help="results JSON")
    p.add_argument("--out", default="report",
                   help="output directory (default report/)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("oracle",
                       help="emit pixel-area-threshold oracle predictions")
    p.add_argument("--annotations", required=True,
                   help="trial annotation JSON")
    p.add_argument("--min-pixels", type=int, required=True,
                   help="detection threshold on segment pixel count")
    p.add_argument("--out", default="predictions.json",
                   help="prediction JSON path")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UnknownFrameError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FRAME_MISMATCH
    except (ConfigError, PredictionFormatError, PredictionSchemaError,
            ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
