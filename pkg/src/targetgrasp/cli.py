"""Command-line interface: oneshot runs, suite execution, and serving.

Exit codes: 0 success, 1 suite had unexpected-category cases, 2 for
configuration or I/O problems.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ServiceConfig, load_config
from .detect import Instruction, OracleDetector, RemoteDetector, Triage
from .errors import ConfigError, CorpusNotFound, MalformedSpec, TargetGraspError
from .evaluation import (
    DIMENSIONS,
    load_corpus,
    make_executor,
    report_summary_table,
    report_to_json,
    run_suite,
)
from .pipeline import Session, SimulatedSource, TranscriptWriter
from .scene import build_scene, save_png


def _load_service_config(path) -> ServiceConfig:
    if path is None:
        return ServiceConfig()
    return load_config(path)


def _detector_for(config: ServiceConfig, override=None):
    choice = override or config.detector
    if choice == "remote":
        if config.remote is None:
            raise ConfigError("remote detector requested but not configured")
        return RemoteDetector(config.remote)
    return OracleDetector()


def cmd_oneshot(args) -> int:
    config = _load_service_config(args.config)
    try:
        spec = json.loads(Path(args.scene).read_text())
    except OSError as e:
        print(f"error: cannot read scene file: {e}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as e:
        print(f"error: scene file is not valid JSON: {e}", file=sys.stderr)
        return 2
    try:
        scene = build_scene(spec)
    except MalformedSpec as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    writer = (TranscriptWriter(config.transcript_path)
              if config.transcript_path else None)
    session = Session(
        SimulatedSource(scene, spec=spec), _detector_for(config, args.detector),
        params=config.proposer,
        executor=make_executor(config.mu, config.proposer.gripper.max_width),
        auto_confirm=args.auto_confirm, transcript_writer=writer)
    outcome = session.run(Instruction(args.instruction))

    print(json.dumps(outcome.to_dict(), indent=2, sort_keys=True))
    from .service import render_overlay
    save_png(render_overlay(session), args.overlay)
    return 0


def cmd_suite(args) -> int:
    config = _load_service_config(args.config)
    dimensions = list(DIMENSIONS) if args.all else [args.dimension]
    if not args.all and args.dimension is None:
        print("error: pass --dimension NAME or --all", file=sys.stderr)
        return 2

    detector = _detector_for(config)
    if args.overlay_dir:
        Path(args.overlay_dir).mkdir(parents=True, exist_ok=True)
    reports = []
    for dim in dimensions:
        corpus = None
        corpus_dir = args.corpus_dir or config.corpus_dir
        if corpus_dir:
            corpus = load_corpus(Path(corpus_dir) / f"{dim}.json")
        reports.append(run_suite(dim, corpus=corpus, detector=detector,
                                 params=config.proposer, mu=config.mu,
                                 overlay_dir=args.overlay_dir))

    Path(args.report).write_text(report_to_json(reports))
    print(report_summary_table(reports), end="")
    print(f"report written to {args.report}")

    unexpected = sum(1 for r in reports for rec in r.records
                     if not rec["triage_correct"])
    if unexpected:
        print(f"{unexpected} case(s) landed in an unexpected category",
              file=sys.stderr)
        return 1
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = _load_service_config(args.config)
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=config.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="targetgrasp",
        description="Instruction-driven grasping pipeline on a desk-scale "
                    "simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    oneshot = sub.add_parser("oneshot", help="run one instruction against a "
                                             "scene file")
    oneshot.add_argument("--scene", required=True, help="scene spec JSON file")
    oneshot.add_argument("--instruction", required=True)
    oneshot.add_argument("--detector", choices=["oracle", "remote"])
    oneshot.add_argument("--auto-confirm", action="store_true")
    oneshot.add_argument("--config", help="service config JSON")
    oneshot.add_argument("--overlay", default="overlay.png",
                         help="where to write the annotated raster")
    oneshot.set_defaults(func=cmd_oneshot)

    suite = sub.add_parser("suite", help="run an experiment dimension")
    suite.add_argument("--dimension", choices=list(DIMENSIONS))
    suite.add_argument("--all", action="store_true",
                       help="run all six dimensions")
    suite.add_argument("--corpus-dir", help="directory of <dimension>.json "
                                            "corpora (default: built-in)")
    suite.add_argument("--report", default="suite_report.json")
    suite.add_argument("--overlay-dir", help="write per-case overlay PNGs "
                                             "into this directory")
    suite.add_argument("--config", help="service config JSON")
    suite.set_defaults(func=cmd_suite)

    serve = sub.add_parser("serve", help="run the REST service")
    serve.add_argument("--config", help="service config JSON")
    serve.add_argument("--host", default="127.0.0.1")
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CorpusNotFound) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except TargetGraspError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
