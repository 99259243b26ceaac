"""Operator command line: train, serve, simulate, metrics, oracle-check.

Exit codes: 0 success, 1 bad input or missing files, 2 verification failure.
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys
from typing import Optional, Sequence

from .engine import EngineError, read_events_jsonl, write_events_jsonl
from .explainer import (
    Counterfactual,
    brute_force_optimal,
    generate_counterfactual,
    seeded_instances,
)
from .metrics import (
    MetricsError,
    aggregate_reports,
    export_report,
    session_report,
)
from .predictor import (
    PredictorError,
    evaluate,
    load_model,
    oracle_model,
    save_model,
    stats_for_model,
    train,
)
from .simulator import SimulatorError, parse_policy, run_policy
from .world import WorldError, default_world, generate_dataset, load_world


class CliParser(argparse.ArgumentParser):
    """argparse with exit code 1 on usage errors (2 is for failed checks)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _load_world_arg(path: Optional[str]):
    return load_world(path) if path else default_world()


def cmd_train(args) -> int:
    world = _load_world_arg(args.world)
    if args.samples < 5:
        return _fail("--samples must be at least 5")
    full = generate_dataset(world, args.samples, args.seed)
    cut = (len(full) * 4) // 5
    train_set, held_out = full[:cut], full[cut:]
    model = train(
        train_set, world, depth_limit=args.depth, min_leaf=args.min_leaf, seed=args.seed
    )
    save_model(model, args.out)
    report = evaluate(model, held_out)
    summary = {
        "model": args.out,
        "train_samples": len(train_set),
        "held_out_samples": len(held_out),
        "train_accuracy": model.train_meta["train_accuracy"],
        "held_out_accuracy": report["accuracy"],
        "held_out_accuracy_vs_clean": report["accuracy_vs_clean"],
    }
    if args.json:
        print(json.dumps(summary, indent=2))
    else:
        print(
            f"wrote {args.out}; held-out accuracy {report['accuracy']:.4f} "
            f"(vs clean labels {report['accuracy_vs_clean']:.4f})"
        )
    return 0


def cmd_serve(args) -> int:
    from .service import create_app, load_config_file

    cfg = load_config_file(args.config)
    addr = args.addr or os.environ.get("CLXAI_ADDR") or cfg.get("addr") or "127.0.0.1:8000"
    model_path = args.model or os.environ.get("CLXAI_MODEL") or cfg.get("model")
    data_dir = (
        args.data_dir
        or os.environ.get("CLXAI_DATA_DIR")
        or cfg.get("data_dir")
        or "./clxai-data"
    )
    static_dir = args.static_dir or cfg.get("static_dir")
    if not model_path:
        return _fail("no model given (use --model, CLXAI_MODEL, or the config file)")
    model = load_model(model_path)
    if args.world:
        world = load_world(args.world)
        if world != model.world:
            return _fail("--world does not match the world stored in the model")
    host, _, port_text = addr.rpartition(":")
    if not host or not port_text.isdigit():
        return _fail(f"bad --addr {addr!r}, expected HOST:PORT")
    app = create_app(
        model,
        data_dir=data_dir,
        static_dir=static_dir,
        cors_origins=cfg.get("cors_origins", ["*"]),
        questionnaire_items=cfg.get("questionnaire_items"),
        snapshot_every=cfg.get("snapshot_every", 5),
    )
    import uvicorn

    uvicorn.run(app, host=host, port=int(port_text), log_level="info")
    return 0


def cmd_simulate(args) -> int:
    policy = parse_policy(args.policy)
    model = load_model(args.model) if args.model else oracle_model(default_world())
    stats = stats_for_model(model)
    overrides = {}
    if args.rounds is not None:
        overrides["total_rounds"] = args.rounds
    if args.interval is not None:
        overrides["explanation_interval"] = args.interval
    os.makedirs(args.out, exist_ok=True)
    sessions = run_policy(
        policy,
        model,
        args.sessions,
        args.seed,
        stats=stats,
        config_overrides=overrides or None,
    )
    for s in sessions:
        write_events_jsonl(
            os.path.join(args.out, f"{s.config.session_id}.jsonl"), s.events
        )
    finals = [s.state.fitness for s in sessions]
    summary = {
        "policy": args.policy,
        "sessions": len(sessions),
        "out": args.out,
        "mean_final_fitness": sum(finals) / len(finals),
    }
    if args.json:
        print(json.dumps(summary, indent=2))
    else:
        print(
            f"played {len(sessions)} sessions with {args.policy}; "
            f"mean final fitness {summary['mean_final_fitness']:.1f}; "
            f"logs in {args.out}"
        )
    return 0


def cmd_metrics(args) -> int:
    paths = sorted(glob.glob(args.logs))
    if not paths:
        return _fail(f"no logs match {args.logs!r}")
    reports = [session_report(read_events_jsonl(p)) for p in paths]
    export_report(reports, args.out)
    if args.json:
        print(json.dumps(aggregate_reports(reports), indent=2))
    else:
        print(f"wrote {args.out} with {len(reports)} session rows")
    return 0


def cmd_oracle_check(args) -> int:
    model = load_model(args.model) if args.model else oracle_model(default_world())
    instances = seeded_instances(model.world, args.instances, args.seed)
    mismatches = []
    for idx, (original, cons) in enumerate(instances):
        fast = generate_counterfactual(model, original, cons)
        slow = brute_force_optimal(model, original, cons)
        if isinstance(fast, Counterfactual) != isinstance(slow, Counterfactual):
            mismatches.append((idx, "feasibility", fast, slow))
        elif isinstance(fast, Counterfactual):
            if fast.distance != slow.distance or fast.suggested != slow.suggested:
                mismatches.append((idx, "optimum", fast, slow))
        elif fast.guidance != slow.guidance:
            mismatches.append((idx, "guidance", fast, slow))
    if mismatches:
        for idx, kind, fast, slow in mismatches[:10]:
            print(
                f"instance {idx}: {kind} mismatch\n  staged: {fast}\n  brute:  {slow}",
                file=sys.stderr,
            )
        print(
            f"{len(mismatches)}/{len(instances)} instances disagree", file=sys.stderr
        )
        return 2
    print(f"all {len(instances)} instances agree with the exhaustive search")
    return 0


def build_parser() -> CliParser:
    parser = CliParser(prog="clxai", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a tree model and report held-out accuracy")
    p.add_argument("--samples", type=int, default=10_000, help="dataset size (80%% used for training)")
    p.add_argument("--seed", type=int, default=42, help="dataset seed")
    p.add_argument("--depth", type=int, default=8, help="tree depth limit")
    p.add_argument("--min-leaf", type=int, default=5, help="minimum samples per leaf")
    p.add_argument("--world", help="world JSON (defaults to the built-in world)")
    p.add_argument("--out", required=True, help="output model path (.model.json)")
    p.add_argument("--json", action="store_true", help="machine-readable summary")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--addr", help="HOST:PORT (or env CLXAI_ADDR)")
    p.add_argument("--model", help="model JSON path (or env CLXAI_MODEL)")
    p.add_argument("--world", help="optional world JSON to cross-check the model")
    p.add_argument("--data-dir", help="session log directory (or env CLXAI_DATA_DIR)")
    p.add_argument("--static-dir", help="serve the built web client from this directory")
    p.add_argument("--config", help="JSON config file (flags and env win over it)")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("simulate", help="play headless sessions with a synthetic learner")
    p.add_argument(
        "--policy",
        required=True,
        help="random | greedy | ce-follower | noisy:P (P = ignore probability)",
    )
    p.add_argument("--sessions", type=int, default=10)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True, help="directory for session JSONL logs")
    p.add_argument("--model", help="model JSON (defaults to the exact-rule model)")
    p.add_argument("--rounds", type=int, help="rounds per session (default 12)")
    p.add_argument("--interval", type=int, help="explanation interval (default 2)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="fold session logs into a report CSV")
    p.add_argument("--logs", required=True, help="glob of session JSONL files")
    p.add_argument("--out", required=True, help="report CSV path")
    p.add_argument("--json", action="store_true", help="also print cohort aggregates")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser(
        "oracle-check",
        help="verify the staged search against exhaustive enumeration",
    )
    p.add_argument("--instances", type=int, default=500)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--model", help="model JSON (defaults to the exact-rule model)")
    p.set_defaults(func=cmd_oracle_check)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        OSError,
        json.JSONDecodeError,
        WorldError,
        PredictorError,
        MetricsError,
        SimulatorError,
        EngineError,
        ValueError,
    ) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
