"""Command line entry point: ``awm <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .core import read_experiences, read_workflows, write_workflows
from .errors import AWMError
from .evaluation import cumulative_sr, cumulative_sr_csv, quality_report
from .induction import InductionReport, induce
from .lm import HttpLm, LmConfig
from .memory import WorkflowStore
from .pipeline import RunConfig, eval_steps, run_offline, run_online
from .scripted import scripted_lm
from .simenv import cross_template_subset, generate_suite, load_tasks, save_tasks


def _load_run_config(args) -> RunConfig:
    data = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh).get("run", {})
    cfg = RunConfig.from_dict(data)
    changes = {}
    if getattr(args, "run_dir", None):
        changes["run_dir"] = args.run_dir
    if getattr(args, "no_memory", False):
        changes["use_memory"] = False
    if getattr(args, "memory_mode", None):
        changes["memory_mode"] = args.memory_mode
    if getattr(args, "judge", None):
        changes["judge"] = args.judge
    if getattr(args, "mode", None):
        changes["induction"] = replace(cfg.induction, mode=args.mode)
    if getattr(args, "trace", None):
        changes["agent"] = replace(cfg.agent, trace_path=args.trace)
    if getattr(args, "macros", False):
        changes["agent"] = replace(changes.get("agent", cfg.agent), enable_macro_actions=True)
    return replace(cfg, **changes)


def _make_lm(args, tasks=()):
    if args.lm == "http":
        return HttpLm(LmConfig.load(args.config))
    return scripted_lm(tasks, args.explore)


def cmd_induce(args) -> int:
    cfg = _load_run_config(args)
    experiences = read_experiences(args.input)
    lm = _make_lm(args)
    report = InductionReport()
    groups = {}
    for e in experiences:
        groups.setdefault(e.website, []).append(e)
    workflows = [w for items in groups.values() for w in induce(items, cfg.induction, lm, report)]
    write_workflows(args.output, workflows)
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"{len(workflows)} workflow(s) written to {args.output}")
    return 0


def _tasks_or_experiences(path):
    try:
        return load_tasks(path)
    except (KeyError, AWMError, ValueError):
        return read_experiences(path)


def cmd_run_offline(args) -> int:
    cfg = _load_run_config(args)
    cfg = replace(cfg, memory_mode="offline")
    train = read_experiences(args.train) if args.train else []
    test = _tasks_or_experiences(args.test)
    tasks = [t for t in test if hasattr(t, "oracle")]
    result = run_offline(train, test, cfg, _make_lm(args, tasks))
    print(result.report.summary(), end="")
    return 0


def cmd_run_online(args) -> int:
    cfg = _load_run_config(args)
    tasks = load_tasks(args.tasks)
    store = None
    if args.seed_workflows:
        store = WorkflowStore("offline_plus_online")
        seeds = {}
        for w in read_workflows(args.seed_workflows):
            seeds.setdefault(w.website, []).append(w)
        store.seed_offline(seeds)
        cfg = replace(cfg, memory_mode="offline_plus_online")
    result = run_online(tasks, cfg, _make_lm(args, tasks), store=store)
    print(result.report.summary(), end="")
    return 0


def cmd_eval_steps(args) -> int:
    cfg = _load_run_config(args)
    examples = read_experiences(args.examples)
    store = None
    if args.workflows:
        store = WorkflowStore.load([args.workflows], mode="offline")
    report = eval_steps(examples, store, _make_lm(args), cfg)
    if cfg.run_dir:
        report.write(cfg.run_dir)
    print(report.summary(), end="")
    return 0


def cmd_quality(args) -> int:
    workflows = read_workflows(args.workflows)
    gold = read_experiences(args.gold) if args.gold else []
    predicted = read_experiences(args.predicted) if args.predicted else []
    judge_kinds = json.loads(Path(args.judges).read_text(encoding="utf-8")) if args.judges else None
    sites = sorted({w.website for w in workflows} | {e.website for e in gold + predicted})
    out = {}
    for site in sites:
        q = quality_report(
            [w for w in workflows if w.website == site],
            [e for e in gold if e.website == site],
            [e for e in predicted if e.website == site],
            args.macro,
            judge_kinds,
        )
        out[site] = q.as_dict()
    print(json.dumps(out, indent=2))
    return 0


def cmd_simgen(args) -> int:
    tasks = generate_suite(args.seed, args.k, args.n)
    if args.cross_template:
        tasks = cross_template_subset(tasks, args.seed)
    save_tasks(args.output, tasks)
    print(f"{len(tasks)} task(s) written to {args.output}")
    return 0


def cmd_curve(args) -> int:
    outcomes = [bool(e.success) for e in read_experiences(args.input)]
    text = cumulative_sr_csv(cumulative_sr(outcomes))
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="awm", description="Induce, store and use workflows for web agents.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, lm=True):
        sp.add_argument("--config", help="JSON file with optional 'run' and 'lm' sections")
        if lm:
            sp.add_argument("--lm", choices=["scripted", "http"], default="scripted",
                            help="scripted: offline mock backend; http: chat-completions endpoint")
            sp.add_argument("--explore", type=int, default=0,
                            help="scripted agent: number of tasks it may solve without a workflow")
        return sp

    sp = common(sub.add_parser("induce", help="induce workflows from experiences"))
    sp.add_argument("--mode", choices=["rule", "lm"], default="rule")
    sp.add_argument("--input", required=True, help="experiences (JSON lines)")
    sp.add_argument("--output", required=True, help="workflow text file")
    sp.set_defaults(func=cmd_induce)

    sp = common(sub.add_parser("run-offline", help="induce from training data, evaluate with frozen memory"))
    sp.add_argument("--train", help="training experiences; omit for the no-memory baseline")
    sp.add_argument("--test", required=True, help="simulator tasks or gold experiences (JSON lines)")
    sp.add_argument("--mode", choices=["rule", "lm"])
    sp.add_argument("--judge", choices=["oracle", "lm"])
    sp.add_argument("--run-dir")
    sp.add_argument("--trace")
    sp.add_argument("--macros", action="store_true", help="expose workflows as macro actions")
    sp.set_defaults(func=cmd_run_offline)

    sp = common(sub.add_parser("run-online", help="streaming attempt / judge / induce loop"))
    sp.add_argument("--tasks", required=True)
    sp.add_argument("--seed-workflows", help="warm-start workflows (offline+online mode)")
    sp.add_argument("--mode", choices=["rule", "lm"])
    sp.add_argument("--judge", choices=["oracle", "lm"])
    sp.add_argument("--no-memory", action="store_true", help="baseline: never use or grow memory")
    sp.add_argument("--run-dir")
    sp.add_argument("--trace")
    sp.add_argument("--macros", action="store_true")
    sp.set_defaults(func=cmd_run_online)

    sp = common(sub.add_parser("eval-steps", help="teacher-forced step metrics"))
    sp.add_argument("--examples", required=True)
    sp.add_argument("--workflows")
    sp.add_argument("--run-dir")
    sp.set_defaults(func=cmd_eval_steps)

    sp = common(sub.add_parser("quality", help="workflow quality report"), lm=False)
    sp.add_argument("--workflows", required=True)
    sp.add_argument("--gold")
    sp.add_argument("--predicted")
    sp.add_argument("--judges", help="workflow_judges.json from an online run directory")
    sp.add_argument("--macro", action="append", default=[], help="macro action name counted as workflow use")
    sp.set_defaults(func=cmd_quality)

    sp = sub.add_parser("simgen", help="generate a simulator task suite")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--k", type=int, default=10, help="number of templates")
    sp.add_argument("--n", type=int, default=5, help="tasks per template")
    sp.add_argument("--cross-template", action="store_true", help="keep one task per template")
    sp.add_argument("--output", required=True)
    sp.set_defaults(func=cmd_simgen)

    sp = sub.add_parser("curve", help="cumulative success-rate CSV from judged experiences")
    sp.add_argument("--input", required=True)
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_curve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (AWMError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
