"""Operator command line: generate corpora, run policies, evaluate, analyze,
serve the control service, and print corpus statistics."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .episode import EpisodeConfig
from .gateway import HttpGateway, RecordReplayGateway, UsageLedger
from .metrics import detect_cdb_log, metric_report, progress_csv
from .runner import POLICY_NAMES, load_run, run_corpus
from .scenario import GeneratorParams, generate_corpus, load_corpus, load_manifest
from .metrics import dataset_stats


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _apply_config_file(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    """Fill unset flags from --config JSON (flags always win)."""
    if not getattr(args, "config", None):
        return
    try:
        config = json.loads(Path(args.config).read_text())
    except Exception as e:
        parser.error(f"cannot read config file {args.config}: {e}")
    for key, value in config.items():
        attr = key.replace("-", "_")
        if getattr(args, attr, None) is None and hasattr(args, attr):
            setattr(args, attr, value)


def _build_gateway(spec: str | None, ledger: UsageLedger):
    if spec is None or spec == "none":
        return None
    if spec == "live":
        return HttpGateway(ledger=ledger)
    if spec.startswith("replay:"):
        return RecordReplayGateway("strict_replay", spec.split(":", 1)[1], ledger=ledger)
    if spec.startswith("record:"):
        inner = HttpGateway(ledger=ledger)
        return RecordReplayGateway("record", spec.split(":", 1)[1], inner=inner,
                                   ledger=ledger)
    raise ValueError(f"gateway must be live, replay:PATH or record:PATH, got {spec!r}")


def cmd_generate(args) -> int:
    groups = [g.strip() for g in args.groups.split(",") if g.strip()]
    params = GeneratorParams(group=groups[0])
    scenarios = generate_corpus(args.seed, args.count, groups, args.out, params)
    print(f"wrote {len(scenarios)} scenarios to {args.out}")
    return 0


def cmd_run(args) -> int:
    scenarios = load_corpus(args.corpus)
    if args.group:
        wanted = set(args.group.split(","))
        scenarios = [s for s in scenarios if s.meta.get("group") in wanted]
    if args.limit:
        scenarios = scenarios[:args.limit]
    if not scenarios:
        return _fail("no scenarios selected")
    ledger = UsageLedger()
    try:
        gateway = _build_gateway(args.gateway, ledger)
    except Exception as e:
        return _fail(str(e))
    if args.policy in ("lmm", "agent") and gateway is None:
        return _fail(f"policy {args.policy} needs --gateway live|replay:PATH")
    enhancements = tuple(e for e in (args.enhancements or "").split(",") if e)
    cfg = EpisodeConfig(max_steps=args.max_steps, seed=args.seed)
    logs = run_corpus(scenarios, args.policy, args.out, cfg=cfg, jobs=args.jobs,
                      gateway=gateway, enhancements=enhancements, resume=args.resume,
                      config_snapshot={"corpus": str(args.corpus)})
    done = sum(1 for log in logs if log.outcome is not None)
    wins = sum(1 for log in logs if log.succeeded())
    print(f"ran {done} episodes, {wins} successes -> {args.out}")
    return 0


def _gt_lengths_for(logs, corpus_dir) -> list[float]:
    manifest = load_manifest(corpus_dir)
    lengths = {e["id"]: e["gt_length"] for e in manifest["scenarios"]}
    return [lengths[log.scenario_id] for log in logs]


def cmd_eval(args) -> int:
    logs = load_run(args.run)
    if not logs:
        return _fail(f"no episode logs in {args.run}")
    corpus = args.corpus or json.loads(
        (Path(args.run) / "config.json").read_text()).get("corpus")
    if not corpus:
        return _fail("corpus unknown; pass --corpus")
    lengths = _gt_lengths_for(logs, corpus)
    report = metric_report(logs, lengths, mode=args.mode)
    csv_text = report.to_csv()
    out = Path(args.out) if args.out else Path(args.run) / "metrics.csv"
    out.write_text(csv_text)
    print(csv_text, end="")
    print(f"wrote {out}")
    return 0


def cmd_analyze(args) -> int:
    logs = load_run(args.run)
    if not logs:
        return _fail(f"no episode logs in {args.run}")
    run_dir = Path(args.run)
    progress_dir = run_dir / "progress"
    progress_dir.mkdir(exist_ok=True)
    rows = ["scenario_id,outcome,found,step,pre_slope,post_slope"]
    for log in logs:
        result = detect_cdb_log(log, tol=args.tol)
        rows.append(",".join([
            log.scenario_id, str(log.outcome), str(result.found).lower(),
            "" if result.step is None else str(result.step),
            "" if result.pre_slope is None else f"{result.pre_slope:.4f}",
            "" if result.post_slope is None else f"{result.post_slope:.4f}"]))
        try:
            (progress_dir / f"{log.scenario_id}.csv").write_text(progress_csv(log))
        except Exception:
            pass  # degenerate starts have no curve
    (run_dir / "cdb.csv").write_text("\n".join(rows) + "\n")
    print(f"wrote {run_dir / 'cdb.csv'} and {progress_dir}/")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    scenarios = load_corpus(args.corpus)
    app = create_app(scenarios, cfg=EpisodeConfig(max_steps=args.max_steps),
                     log_dir=args.log_dir, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_stats(args) -> int:
    scenarios = load_corpus(args.corpus)
    stats = dataset_stats(scenarios)
    stats.pop("displacements", None) if args.compact else None
    print(json.dumps(stats, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skynav",
                                     description="goal-oriented aerial navigation harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a scenario corpus")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--groups", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_generate,
                   defaults={"seed": 0, "count": 30, "groups": "short,middle,long",
                             "out": "corpus"})

    p = sub.add_parser("run", help="run a policy over a corpus")
    p.add_argument("--corpus", default=None)
    p.add_argument("--policy", choices=POLICY_NAMES, default=None)
    p.add_argument("--enhancements", default=None,
                   help="comma list: grounding,crossview,imagination,sparse_memory")
    p.add_argument("--gateway", default=None, help="live | replay:PATH | record:PATH")
    p.add_argument("--out", default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--group", default=None, help="only run scenarios in these groups")
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--resume", action="store_true")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_run,
                   defaults={"corpus": "corpus", "policy": "oracle", "out": "run",
                             "jobs": 1, "max_steps": 50, "seed": 0})

    p = sub.add_parser("eval", help="compute SR/SPL/DTG for a run")
    p.add_argument("--run", default=None)
    p.add_argument("--mode", choices=["trisect", "paper_fixed"], default=None)
    p.add_argument("--corpus", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_eval, defaults={"run": "run", "mode": "trisect"})

    p = sub.add_parser("analyze", help="CDB detection and progress curves")
    p.add_argument("--run", default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_analyze, defaults={"run": "run", "tol": 0.0})

    p = sub.add_parser("serve", help="start the control service")
    p.add_argument("--corpus", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--log-dir", default=None)
    p.add_argument("--static", default=None, help="directory of built UI assets")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_serve,
                   defaults={"corpus": "corpus", "port": 8000, "host": "127.0.0.1",
                             "max_steps": 50, "log_dir": "human_logs"})

    p = sub.add_parser("stats", help="corpus statistics")
    p.add_argument("--corpus", default=None)
    p.add_argument("--compact", action="store_true")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_stats, defaults={"corpus": "corpus"})

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_config_file(args, parser)
    for key, value in getattr(args, "defaults", {}).items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    try:
        return args.func(args)
    except Exception as e:
        return _fail(str(e))


if __name__ == "__main__":
    sys.exit(main())
