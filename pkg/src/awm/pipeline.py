"""Offline, online and offline+online runs end to end.

Websites are processed independently; within a website the online loop is
strictly sequential, so memory at task t depends only on earlier tasks.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .agent import AgentConfig, predict_trajectory, run_episode
from .core import Experience, write_experiences
from .errors import AWMError
from .evaluation import (
    EpisodeOutcome,
    EvalReport,
    StepwiseOutcome,
    episode_report,
    score_step,
    stepwise_report,
)
from .induction import InductionConfig, InductionReport, induce
from .judge import Judge, LmJudge, OracleJudge
from .lm import LmClient
from .memory import WorkflowStore, normalize_mode
from .simenv import TaskSpec, cross_template_subset, make_env

logger = logging.getLogger(__name__)

JUDGE_KINDS = ("oracle", "lm")
INDUCTION_SCOPES = ("newest", "all")


@dataclass(frozen=True)
class RunConfig:
    induction: InductionConfig = field(default_factory=InductionConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    memory_mode: str = "online"
    judge: str = "oracle"
    # "newest": induce from the latest success only; "all": from every success so far
    online_induction_scope: str = "newest"
    use_memory: bool = True
    workers: int = 1
    run_dir: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "memory_mode", normalize_mode(self.memory_mode))
        if self.judge not in JUDGE_KINDS:
            raise ValueError(f"judge must be one of {JUDGE_KINDS}")
        if self.online_induction_scope not in INDUCTION_SCOPES:
            raise ValueError(f"online_induction_scope must be one of {INDUCTION_SCOPES}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @classmethod
    def from_dict(cls, d: Mapping) -> "RunConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown run config keys: {sorted(unknown)}")
        if "induction" in d:
            d["induction"] = InductionConfig(**d["induction"])
        if "agent" in d:
            d["agent"] = AgentConfig(**d["agent"])
        return cls(**d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def make_judge(kind: str, lm: LmClient | None = None) -> Judge:
    if kind == "oracle":
        return OracleJudge()
    if lm is None:
        raise ValueError("the LM judge needs an lm client")
    return LmJudge(lm)


@dataclass
class RunResult:
    report: EvalReport
    store: WorkflowStore
    experiences: list[Experience] = field(default_factory=list)
    induction_calls: int = 0
    # workflow id -> kind of the judge whose verdict admitted it
    judge_kinds: dict[str, str] = field(default_factory=dict)


def _group_by_website(items: Sequence) -> dict[str, list[tuple[int, object]]]:
    groups: dict[str, list] = {}
    for i, item in enumerate(items):
        groups.setdefault(item.website, []).append((i, item))
    return groups


def _map_websites(fn: Callable, groups: Mapping, workers: int) -> dict:
    if workers == 1 or len(groups) < 2:
        return {site: fn(site, items) for site, items in groups.items()}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {site: pool.submit(fn, site, items) for site, items in groups.items()}
        return {site: f.result() for site, f in futures.items()}


def _episode(task: TaskSpec, store: WorkflowStore | None, lm: LmClient, cfg: RunConfig,
             judge: Judge) -> tuple[Experience, bool, str | None]:
    """One attempt; any LM or environment failure scores as a failure."""
    env = make_env(task)
    env.reset(task)
    try:
        e = run_episode(task.instruction, task.website, env, store, lm, cfg.agent,
                        experience_id=task.id, template_id=task.template_id)
    except AWMError as exc:
        logger.warning("episode %s failed: %s", task.id, exc)
        return Experience(task.id, task.website, task.instruction, (), task.template_id, False), False, str(exc)
    verdict = judge(e, task, env.state)
    return replace(e, success=verdict.success), verdict.success, None


def run_live(tasks: Sequence[TaskSpec], store: WorkflowStore | None, lm: LmClient, cfg: RunConfig,
             judge: Judge | None = None, errors: Mapping[str, str] | None = None) -> RunResult:
    """Evaluate tasks against fixed memory; the store is only read."""
    judge = judge or make_judge(cfg.judge, lm)
    experiences, outcomes = [], []
    for task in tasks:
        e, ok, err = _episode(task, store if cfg.use_memory else None, lm, cfg, judge)
        experiences.append(e)
        outcomes.append(EpisodeOutcome(task.id, task.website, ok, len(e.steps), judge.kind, err))
    return RunResult(episode_report(outcomes, errors), store or WorkflowStore("offline"), experiences)


def eval_steps(examples: Sequence[Experience], store: WorkflowStore | None, lm: LmClient,
               cfg: RunConfig | None = None, errors: Mapping[str, str] | None = None) -> EvalReport:
    """Teacher-forced scoring: predict each gold step given the gold prefix."""
    cfg = cfg or RunConfig()
    scored = []
    for e in examples:
        preds = predict_trajectory(e, store if cfg.use_memory else None, lm, cfg.agent)
        scores = tuple(score_step(p, s) for p, s in zip(preds, e.steps))
        scored.append(StepwiseOutcome(e.id, e.website, scores))
    return stepwise_report(scored, errors)


def run_offline(
    train: Sequence[Experience],
    test: Sequence[TaskSpec] | Sequence[Experience],
    cfg: RunConfig | None = None,
    lm: LmClient | None = None,
    judge: Judge | None = None,
) -> RunResult:
    """Induce per website from ``train``, freeze memory, evaluate ``test``.

    ``test`` holds either simulated tasks (live episodes) or gold
    experiences (teacher-forced scoring). A website whose induction fails
    is reported in ``errors`` and its test items are skipped.
    """
    cfg = cfg or RunConfig(memory_mode="offline")
    checkpoint = Path(cfg.run_dir, "workflows") if cfg.run_dir else None
    store = WorkflowStore("offline", checkpoint)
    errors: dict[str, str] = {}
    seeds = {}
    for site, items in _group_by_website(train).items():
        try:
            seeds[site] = induce([e for _, e in items], cfg.induction, lm, InductionReport())
        except (AWMError, ValueError) as exc:
            logger.warning("induction failed for %s: %s", site, exc)
            errors[site] = f"induction failed: {exc}"
    store.seed_offline(seeds)
    kept = [t for t in test if t.website not in errors]
    if kept and isinstance(kept[0], Experience):
        result = RunResult(eval_steps(kept, store, lm, cfg, errors), store, list(kept))
    else:
        result = run_live(kept, store, lm, cfg, judge, errors)
        result.store = store
    _write(cfg, result)
    return result


def run_online(
    stream: Sequence[TaskSpec],
    cfg: RunConfig | None = None,
    lm: LmClient | None = None,
    judge: Judge | None = None,
    store: WorkflowStore | None = None,
) -> RunResult:
    """Attempt, judge, induce from successes, grow memory, continue.

    Each task gets exactly one attempt. Failed or errored episodes never
    touch memory. Pass an offline-seeded store with mode
    ``offline_plus_online`` for a warm start.
    """
    cfg = cfg or RunConfig()
    judge = judge or make_judge(cfg.judge, lm)
    checkpoint = Path(cfg.run_dir, "workflows") if cfg.run_dir else None
    if store is None:
        store = WorkflowStore(cfg.memory_mode if cfg.memory_mode != "offline" else "online", checkpoint)
    if store.frozen:
        raise ValueError("online runs need a mutable store")

    def one_site(site: str, items: list[tuple[int, TaskSpec]]):
        rows, successes, calls, kinds = [], [], 0, {}
        for idx, task in items:
            e, ok, err = _episode(task, store if cfg.use_memory else None, lm, cfg, judge)
            if ok and cfg.use_memory:
                successes.append(e)
                source = [e] if cfg.online_induction_scope == "newest" else list(successes)
                try:
                    calls += 1
                    added = store.add_workflows(site, induce(source, cfg.induction, lm, InductionReport()))
                    for w in store.workflows(site)[len(store.workflows(site)) - added :]:
                        kinds[w.id] = judge.kind
                except (AWMError, ValueError) as exc:
                    # the episode still counts; memory just does not grow
                    logger.warning("induction after %s failed: %s", task.id, exc)
                    err = f"induction failed: {exc}"
            outcome = EpisodeOutcome(task.id, task.website, ok, len(e.steps), judge.kind, err)
            rows.append((idx, e, outcome))
        return rows, calls, kinds

    per_site = _map_websites(one_site, _group_by_website(stream), cfg.workers)
    rows = sorted((r for site_rows, _, _ in per_site.values() for r in site_rows), key=lambda r: r[0])
    result = RunResult(
        episode_report([r[2] for r in rows]),
        store,
        [r[1] for r in rows],
        sum(calls for _, calls, _ in per_site.values()),
        {k: v for _, _, kinds in per_site.values() for k, v in kinds.items()},
    )
    _write(cfg, result)
    return result


def _write(cfg: RunConfig, result: RunResult) -> None:
    if cfg.run_dir:
        write_run(cfg.run_dir, result)


def write_run(run_dir, result: RunResult) -> None:
    """experiences.jsonl, workflows/<site>.workflows.txt and report files."""
    d = Path(run_dir)
    d.mkdir(parents=True, exist_ok=True)
    write_experiences(d / "experiences.jsonl", result.experiences)
    result.store.write(d / "workflows")
    if result.judge_kinds:
        (d / "workflow_judges.json").write_text(json.dumps(result.judge_kinds, indent=2), encoding="utf-8")
    result.report.write(d)


__all__ = [
    "RunConfig",
    "RunResult",
    "cross_template_subset",
    "eval_steps",
    "make_judge",
    "run_live",
    "run_offline",
    "run_online",
    "write_run",
]
