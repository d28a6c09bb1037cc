"""Operations CLI mirroring the service endpoints.

Commands act in-process on the configured platform; ``--token`` resolves the
acting user through the config token table, and every mutating command passes
the same authorize + audit chain as the API.

Usage:
  stardom --config cfg.json --token T ingest --series data.csv
  stardom --config cfg.json --token T train --series-id S1 --model ridge_lags
  stardom --config cfg.json --token T forecast --series-id S1 --model ridge_lags --horizon 7
  stardom --config cfg.json --token T audit verify
  stardom --config cfg.json serve
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import date

from . import scenarios as sim
from .config import load_config
from .errors import StardomError
from .feedback import UserProfile
from .platform import Platform
from .security import authorize


def _print(data, fmt: str):
    if fmt == "json":
        print(json.dumps(data, indent=2, default=str))
        return
    _print_table(data)


def _print_table(data, indent: int = 0):
    pad = " " * indent
    if isinstance(data, dict):
        for key, value in data.items():
            if isinstance(value, (dict, list)):
                print(f"{pad}{key}:")
                _print_table(value, indent + 2)
            else:
                print(f"{pad}{key}: {value}")
    elif isinstance(data, list):
        for entry in data:
            _print_table(entry, indent)
            if isinstance(entry, dict):
                print(f"{pad}-")
    else:
        print(f"{pad}{data}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stardom", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", default=None, help="platform config path")
    parser.add_argument("--token", default="", help="bearer token for the acting user")
    parser.add_argument("--format", choices=("json", "table"), default="json")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("ingest", help="ingest series or graph CSV")
    p.add_argument("--series", help="series CSV path")
    p.add_argument("--graph", help="graph CSV path")
    p.add_argument("--mapping", help="ingestion mapping JSON path (with --graph)")

    p = sub.add_parser("train", help="train a model (runs the job inline)")
    p.add_argument("--series-id", required=True)
    p.add_argument("--model", required=True, dest="model_key")
    p.add_argument("--folds", type=int, default=None)

    p = sub.add_parser("forecast", help="produce a forecast from the latest model")
    p.add_argument("--series-id", required=True)
    p.add_argument("--model", required=True, dest="model_key")
    p.add_argument("--as-of", default=None, help="ISO date; defaults to the series end")
    p.add_argument("--horizon", type=int, default=7)

    p = sub.add_parser("explain", help="explain a forecast for the acting user")
    p.add_argument("--forecast-id", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("backtest", help="rolling-origin backtest")
    p.add_argument("--series-id", required=True)
    p.add_argument("--model", required=True, dest="model_key")
    p.add_argument("--folds", type=int, default=4)

    p = sub.add_parser("al", help="labeling queue operations")
    al_sub = p.add_subparsers(dest="al_command", required=True)
    q = al_sub.add_parser("queue", help="list pending queue items")
    q.add_argument("--series-id", default=None)
    l = al_sub.add_parser("label", help="submit a label")
    l.add_argument("--item-id", required=True)
    l.add_argument("--value", type=float, required=True)

    p = sub.add_parser("simulate", help="generate and assess a scenario")
    p.add_argument("--series-id", required=True)
    p.add_argument("--kind", required=True, choices=sim.PERTURBATION_KINDS)
    p.add_argument("--magnitude", type=float, required=True)
    p.add_argument("--window-start", type=int, required=True)
    p.add_argument("--window-len", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--assess", action="store_true", help="also assess and tag the scenario")

    p = sub.add_parser("recommend", help="rank decision options for a forecast")
    p.add_argument("--request", required=True, help="recommendation request JSON path")

    p = sub.add_parser("audit", help="audit log operations")
    audit_sub = p.add_subparsers(dest="audit_command", required=True)
    audit_sub.add_parser("verify", help="verify the hash chain")

    sub.add_parser("serve", help="run the HTTP API")
    return parser


_COMMAND_ACTIONS = {
    "ingest": "train",
    "train": "train",
    "forecast": "read_forecast",
    "explain": "read_explanation",
    "backtest": "read_summary",
    "al": "label",
    "simulate": "train",
    "recommend": "read_forecast",
    "audit": "admin_config",
}

_MUTATING_COMMANDS = {"ingest", "train", "forecast", "explain", "simulate", "recommend"}


def _require_user(platform: Platform, token: str, action: str, payload: bytes) -> UserProfile:
    user = platform.user_for_token(token) if token else None
    if user is None:
        platform.authorize_or_audit(None, action, payload)
        raise SystemExit("error: missing or unknown --token")
    if not platform.authorize_or_audit(user, action, payload):
        raise SystemExit(f"error: role {user.role} may not {action}")
    return user


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return 1
    try:
        config = load_config(args.config)
        platform = Platform(config)
    except StardomError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.command == "serve":
        from .service import serve

        try:
            serve(platform)
        except (OSError, StardomError) as exc:
            print(f"startup error: {exc}", file=sys.stderr)
            return 1
        return 0

    action = _COMMAND_ACTIONS[args.command]
    payload = json.dumps({k: v for k, v in vars(args).items() if k != "token"},
                         default=str).encode()
    try:
        user = _require_user(platform, args.token, action, payload)
        if args.command in _MUTATING_COMMANDS or (
            args.command == "al" and args.al_command == "label"
        ):
            platform.guarded(user, action, payload)
        result = _dispatch(platform, user, args)
    except SystemExit as exc:
        print(exc, file=sys.stderr)
        return 2
    except StardomError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _print(result, args.format)
    return 0


def _dispatch(platform: Platform, user: UserProfile, args):
    if args.command == "ingest":
        if args.series:
            with open(args.series, "r", encoding="utf-8") as fh:
                return {"series": platform.ingest_series_csv(fh.read(), actor=user.user_id)}
        if args.graph:
            if not args.mapping:
                raise SystemExit("error: --graph needs --mapping")
            with open(args.graph, "r", encoding="utf-8") as fh:
                text = fh.read()
            with open(args.mapping, "r", encoding="utf-8") as fh:
                mapping = json.load(fh)
            return platform.ingest_graph_csv(text, mapping)
        raise SystemExit("error: ingest needs --series or --graph")
    if args.command == "train":
        job = platform.train(args.series_id, args.model_key, args.folds, sync=True)
        return job.to_payload()
    if args.command == "forecast":
        as_of = date.fromisoformat(args.as_of) if args.as_of else platform.effective_series(args.series_id).end
        fc = platform.forecast(args.series_id, args.model_key, as_of, args.horizon)
        return fc.to_payload()
    if args.command == "explain":
        return platform.explain(args.forecast_id, user, seed=args.seed).to_payload()
    if args.command == "backtest":
        return platform.run_backtest(args.series_id, args.model_key, args.folds)
    if args.command == "al":
        if args.al_command == "queue":
            return {"items": platform.queue_payload(args.series_id)}
        item = platform.al_label(args.item_id, args.value, user)
        return {"item_id": item.item_id, "status": item.status, "label": item.label}
    if args.command == "simulate":
        spec = sim.PerturbationSpec(
            kind=args.kind, magnitude=args.magnitude,
            window_start=args.window_start, window_len=args.window_len, seed=args.seed,
        )
        scenario = platform.generate_scenario(args.series_id, spec)
        if args.assess:
            scenario = platform.assess_scenario(scenario.scenario_id)
        return scenario.to_payload()
    if args.command == "recommend":
        with open(args.request, "r", encoding="utf-8") as fh:
            return {"options": platform.recommend_options(json.load(fh))}
    if args.command == "audit":
        return platform.audit_verify()
    raise SystemExit(f"error: unknown command {args.command}")


if __name__ == "__main__":
    raise SystemExit(main())
