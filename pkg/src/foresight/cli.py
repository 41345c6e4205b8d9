"""Command-line client for the planning engine.

Batch commands (ingest, train-*, eval, sweep) run the pipeline in
process; ``plan`` can also act as a thin HTTP client against a running
service via ``--server``.  ``serve`` starts the FastAPI app.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import RunConfig, load_config
from .errors import ForesightError


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value configuration file")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a configuration key")
    parser.add_argument("--corpus", help="corpus JSON path")
    parser.add_argument("--lexicon", help="VAD lexicon TSV path")
    parser.add_argument("--out", help="artifact output directory")
    parser.add_argument("--seed", type=int, help="run seed")


def _build_config(args: argparse.Namespace) -> RunConfig:
    overrides = list(args.overrides)
    for key in ("corpus", "lexicon", "out", "seed"):
        value = getattr(args, key, None)
        if value is not None:
            overrides.append(f"{key}={value}")
    return load_config(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="foresight",
                                     description="Lookahead support-strategy planning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse corpus, split, and write example files")
    _add_common(p)

    p = sub.add_parser("train-ssg", help="train the strategy-sequence model")
    _add_common(p)

    p = sub.add_parser("train-ufp", help="train the feedback predictor")
    _add_common(p)

    p = sub.add_parser("plan", help="score candidates for the next round")
    _add_common(p)
    p.add_argument("--context", help="JSON context file with a 'turns' list")
    p.add_argument("--server", help="base URL of a running service (thin-client mode)")

    p = sub.add_parser("eval", help="run the test-split evaluation")
    _add_common(p)

    p = sub.add_parser("sweep", help="sweep one planner axis")
    _add_common(p)

    p = sub.add_parser("inspect-lexicon", help="emotion-bin histogram of a text file")
    _add_common(p)
    p.add_argument("--text", required=True, help="text file to histogram")

    p = sub.add_parser("serve", help="start the HTTP service")
    _add_common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _load_turns(path: str | None) -> list[dict]:
    if not path:
        return []
    from .service.schemas import PlanRequest

    with open(path, "r", encoding="utf-8") as f:
        try:
            payload = json.load(f)
        except json.JSONDecodeError as e:
            raise ForesightError(f"context file is not valid JSON: {e}") from e
    try:
        request = PlanRequest.model_validate(payload)
    except Exception as e:
        raise ForesightError(f"context file failed schema validation: {e}") from e
    return [t.model_dump() for t in request.turns]


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _build_config(args)
        if args.command == "ingest":
            from . import pipeline

            report = pipeline.ingest(cfg)
            print(json.dumps(report["strategy_distribution"], indent=2, sort_keys=True))
            print(f"dialogues: {report['n_dialogues']}  splits: {report['split_sizes']}")
            print(f"planning examples: {report['n_planning_examples']}  "
                  f"feedback examples: {report['n_feedback_examples']}")
        elif args.command == "train-ssg":
            from . import pipeline

            info = pipeline.train_ssg(cfg)
            print(f"trained {info['kind']} ssg on {info['n_examples']} examples"
                  f" (checksum {info['checksum']})")
            print(f"final loss: {info['final_loss']}")
        elif args.command == "train-ufp":
            from . import pipeline

            info = pipeline.train_ufp(cfg)
            print(f"trained {info['kind']} ufp on {info['n_examples']} examples"
                  f" (checksum {info['checksum']})")
            print(f"augmented: {info['augmented']}")
            print(f"final loss: {info['final_loss']}")
        elif args.command == "plan":
            if args.server:
                import httpx

                with open(args.context, "r", encoding="utf-8") as f:
                    payload = json.load(f)
                response = httpx.post(f"{args.server.rstrip('/')}/plan", json=payload, timeout=60.0)
                response.raise_for_status()
                print(json.dumps(response.json(), indent=2, sort_keys=True))
            else:
                from . import pipeline

                turns = _load_turns(args.context)
                record = pipeline.plan(cfg, turns)
                print(json.dumps(record, indent=2, sort_keys=True))
        elif args.command == "eval":
            from . import pipeline

            payload = pipeline.evaluate(cfg)
            print(json.dumps(payload, indent=2, sort_keys=True))
        elif args.command == "sweep":
            from . import pipeline

            print(pipeline.run_sweep(cfg), end="")
        elif args.command == "inspect-lexicon":
            from . import pipeline

            for line in pipeline.inspect_lexicon(cfg, args.text):
                print(line)
        elif args.command == "serve":
            import uvicorn

            from .service.app import create_app

            uvicorn.run(create_app(cfg), host=args.host, port=args.port)
    except ForesightError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
