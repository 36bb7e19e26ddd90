"""Metrics: step-level scores for teacher-forced prediction, episode success
rates, cumulative-SR curves and workflow-quality statistics.

The coverage, overlap and utility definitions below are our formalizations
of prose-only descriptions; see the docstring of :func:`quality_report`.
"""

from __future__ import annotations

import csv
import io
import re
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import fmean as mean
from typing import Iterable, Mapping, Sequence

from .core import PLACEHOLDER_RE, Action, Experience, Step, Workflow

TERMINAL_MARKER = "<terminal>"


def _element_of(action: Action) -> str | None:
    return TERMINAL_MARKER if action.is_terminal else action.element


def gold_elements_of(gold: Action) -> frozenset[str]:
    el = _element_of(gold)
    return frozenset() if el is None else frozenset([el])


def element_accuracy(pred: Action, gold_elements: Iterable[str]) -> int:
    """1 iff the predicted element is one of the acceptable gold elements.

    Terminal actions target the pseudo element ``TERMINAL_MARKER``.
    """
    el = _element_of(pred)
    return int(el is not None and el in {str(g) for g in gold_elements})


def action_tokens(action: Action) -> list[str]:
    """Name plus whitespace tokens of the value arguments, lowercased.

    The element id is left out, so it never counts towards F1.
    """
    values = action.args[1:] if action.element is not None else action.args
    tokens = [action.name.lower()]
    for v in values:
        tokens += v.lower().split()
    return tokens


def action_f1(pred: Action, gold: Action) -> float:
    p, g = Counter(action_tokens(pred)), Counter(action_tokens(gold))
    common = sum((p & g).values())
    if common == 0:
        return 0.0
    precision = common / sum(p.values())
    recall = common / sum(g.values())
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class StepScore:
    element_correct: int
    action_f1: float
    step_success: int

    def __post_init__(self):
        if self.step_success and not self.element_correct:
            raise ValueError("a successful step must have the correct element")


def score_step(pred: Action, gold: Action | Step, gold_elements: Iterable[str] | None = None) -> StepScore:
    gold_action = gold.action if isinstance(gold, Step) else gold
    elements = gold_elements_of(gold_action) if gold_elements is None else gold_elements
    el = element_accuracy(pred, elements)
    f1 = action_f1(pred, gold_action)
    exact = Counter(action_tokens(pred)) == Counter(action_tokens(gold_action))
    return StepScore(el, f1, int(bool(el) and exact))


def step_success(pred: Action, gold: Action | Step, gold_elements: Iterable[str] | None = None) -> int:
    return score_step(pred, gold, gold_elements).step_success


def task_success(step_scores: Iterable[StepScore | int]) -> int:
    return int(all((s.step_success if isinstance(s, StepScore) else s) == 1 for s in step_scores))


def cumulative_sr(outcomes: Iterable[int | bool]) -> list[float]:
    """Running mean: entry k is the success rate of the first k+1 outcomes."""
    series, total = [], 0
    for k, o in enumerate(outcomes):
        total += int(bool(o))
        series.append(total / (k + 1))
    return series


def cumulative_sr_csv(series: Sequence[float]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "cum_sr"])
    for i, v in enumerate(series):
        w.writerow([i, f"{v:.6f}"])
    return buf.getvalue()


# ------------------------------------------------------------------ reports


@dataclass(frozen=True)
class EpisodeOutcome:
    """One scored live episode."""

    task_id: str
    website: str
    success: bool
    n_steps: int
    judge_kind: str = "oracle"
    error: str | None = None


@dataclass(frozen=True)
class StepwiseOutcome:
    """One teacher-forced example with its per-step scores."""

    example_id: str
    website: str
    scores: tuple[StepScore, ...]

    @property
    def success(self) -> int:
        return task_success(self.scores)


@dataclass
class EvalReport:
    """Aggregated scores.

    Step metrics (``element_acc``, ``action_f1``, ``step_sr``) are None for
    live-episode runs, which have no gold steps. Averages over steps are
    micro averages.
    """

    task_sr: float = 0.0
    avg_steps: float = 0.0
    element_acc: float | None = None
    action_f1: float | None = None
    step_sr: float | None = None
    n_tasks: int = 0
    per_website: dict[str, dict] = field(default_factory=dict)
    cumulative_sr: list[float] = field(default_factory=list)
    errors: dict[str, str] = field(default_factory=dict)
    per_example: list[dict] = field(default_factory=list)

    def summary(self) -> str:
        lines = [f"tasks: {self.n_tasks}", f"task_sr: {self.task_sr:.4f}", f"avg_steps: {self.avg_steps:.2f}"]
        for name in ("element_acc", "action_f1", "step_sr"):
            v = getattr(self, name)
            if v is not None:
                lines.append(f"{name}: {v:.4f}")
        for site, stats in sorted(self.per_website.items()):
            parts = ", ".join(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}" for k, v in stats.items())
            lines.append(f"  {site}: {parts}")
        for site, msg in sorted(self.errors.items()):
            lines.append(f"error[{site}]: {msg}")
        return "\n".join(lines) + "\n"

    def per_example_csv(self) -> str:
        buf = io.StringIO()
        if self.per_example:
            w = csv.DictWriter(buf, fieldnames=list(self.per_example[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(self.per_example)
        return buf.getvalue()

    def write(self, directory: str | Path) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        (d / "summary.txt").write_text(self.summary(), encoding="utf-8")
        (d / "per_example.csv").write_text(self.per_example_csv(), encoding="utf-8")
        (d / "cumulative_sr.csv").write_text(cumulative_sr_csv(self.cumulative_sr), encoding="utf-8")


def episode_report(outcomes: Sequence[EpisodeOutcome], errors: Mapping[str, str] | None = None) -> EvalReport:
    """Report over live episodes, in stream order."""
    report = EvalReport(errors=dict(errors or {}), n_tasks=len(outcomes))
    if outcomes:
        report.task_sr = mean(int(o.success) for o in outcomes)
        report.avg_steps = mean(o.n_steps for o in outcomes)
    report.cumulative_sr = cumulative_sr(o.success for o in outcomes)
    for site in dict.fromkeys(o.website for o in outcomes):
        mine = [o for o in outcomes if o.website == site]
        report.per_website[site] = {
            "n": len(mine),
            "task_sr": mean(int(o.success) for o in mine),
            "avg_steps": mean(o.n_steps for o in mine),
        }
    report.per_example = [
        {"index": i, "task_id": o.task_id, "website": o.website, "success": int(o.success),
         "n_steps": o.n_steps, "judge_kind": o.judge_kind, "error": o.error or ""}
        for i, o in enumerate(outcomes)
    ]
    return report


def _step_averages(examples: Sequence[StepwiseOutcome]) -> dict:
    scores = [s for ex in examples for s in ex.scores]
    if not scores:
        return {"element_acc": 0.0, "action_f1": 0.0, "step_sr": 0.0, "task_sr": 0.0}
    return {
        "element_acc": mean(s.element_correct for s in scores),
        "action_f1": mean(s.action_f1 for s in scores),
        "step_sr": mean(s.step_success for s in scores),
        "task_sr": mean(ex.success for ex in examples),
    }


def stepwise_report(examples: Sequence[StepwiseOutcome], errors: Mapping[str, str] | None = None) -> EvalReport:
    """Report over teacher-forced examples."""
    avg = _step_averages(examples)
    report = EvalReport(
        task_sr=avg["task_sr"],
        avg_steps=mean(len(ex.scores) for ex in examples) if examples else 0.0,
        element_acc=avg["element_acc"],
        action_f1=avg["action_f1"],
        step_sr=avg["step_sr"],
        n_tasks=len(examples),
        cumulative_sr=cumulative_sr(ex.success for ex in examples),
        errors=dict(errors or {}),
    )
    for site in dict.fromkeys(ex.website for ex in examples):
        mine = [ex for ex in examples if ex.website == site]
        report.per_website[site] = {"n": len(mine), **_step_averages(mine)}
    for ex in examples:
        for j, s in enumerate(ex.scores):
            report.per_example.append(
                {"example_id": ex.example_id, "website": ex.website, "step": j,
                 "element_correct": s.element_correct, "action_f1": round(s.action_f1, 6),
                 "step_success": s.step_success}
            )
    return report


# ------------------------------------------------------------------ quality


@dataclass(frozen=True)
class QualityReport:
    n_workflows: int = 0
    coverage: float = 0.0
    function_overlap: float = 0.0
    utility_rate: float = 0.0
    # number of workflows admitted under each judge kind, when known
    by_judge_kind: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def _arg_matches(pattern_arg: str, arg: str) -> bool:
    if not PLACEHOLDER_RE.search(pattern_arg):
        return pattern_arg.lower().split() == arg.lower().split()
    parts = PLACEHOLDER_RE.split(pattern_arg)
    # split() alternates literal text and placeholder names
    regex = ".+?".join(re.escape(p) for p in parts[::2])
    return re.fullmatch(regex, arg, flags=re.IGNORECASE | re.DOTALL) is not None


def step_matches(workflow_action: Action, action: Action) -> bool:
    """Same action name, and each workflow argument is a placeholder slot or
    token-equal to the concrete argument."""
    if workflow_action.name != action.name or len(workflow_action.args) != len(action.args):
        return False
    return all(_arg_matches(p, a) for p, a in zip(workflow_action.args, action.args))


def _bigrams(signature: Sequence[str]) -> set[tuple[str, str]]:
    return set(zip(signature, signature[1:]))


def _contains(seq: Sequence[str], sub: Sequence[str]) -> bool:
    n = len(sub)
    return n > 0 and any(tuple(seq[i : i + n]) == tuple(sub) for i in range(len(seq) - n + 1))


def quality_report(
    workflows: Sequence[Workflow],
    gold: Sequence[Experience] = (),
    predicted: Sequence[Experience] = (),
    macro_names: Iterable[str] = (),
    judge_kinds: Mapping[str, str] | None = None,
) -> QualityReport:
    """Workflow-quality statistics for one website.

    - coverage: fraction of gold steps matched (see :func:`step_matches`) by
      some step of some workflow.
    - function_overlap: action-name bigrams occurring in at least two
      workflows, over all distinct bigrams; 0 with fewer than 2 workflows.
    - utility_rate: fraction of predicted experiences whose action-name
      sequence contains some workflow's full signature contiguously, or that
      call one of ``macro_names``.

    ``judge_kinds`` maps workflow ids to the judge kind ("lm" or "oracle")
    whose verdict admitted them; workflows missing from it count as
    "untagged".
    """
    sites = {w.website for w in workflows} | {e.website for e in gold} | {e.website for e in predicted}
    if len(sites) > 1:
        raise ValueError(f"quality_report expects a single website, got {sorted(sites)}")
    if not workflows:
        return QualityReport()
    tags = Counter((judge_kinds or {}).get(w.id, "untagged") for w in workflows) if judge_kinds is not None else {}

    wf_actions = [a for w in workflows for a in w.actions]
    gold_steps = [s.action for e in gold for s in e.steps]
    coverage = (
        sum(any(step_matches(wa, a) for wa in wf_actions) for a in gold_steps) / len(gold_steps)
        if gold_steps else 0.0
    )

    overlap = 0.0
    if len(workflows) >= 2:
        counts = Counter(b for w in workflows for b in _bigrams(w.signature))
        if counts:
            overlap = sum(1 for c in counts.values() if c >= 2) / len(counts)

    macros = set(macro_names)
    used = 0
    for e in predicted:
        sig = [s.action.name for s in e.steps]
        if macros & set(sig) or any(_contains(sig, w.signature) for w in workflows):
            used += 1
    utility = used / len(predicted) if predicted else 0.0
    return QualityReport(len(workflows), coverage, overlap, utility, dict(tags))


__all__ = [
    "TERMINAL_MARKER",
    "EpisodeOutcome",
    "EvalReport",
    "QualityReport",
    "StepScore",
    "StepwiseOutcome",
    "action_f1",
    "action_tokens",
    "cumulative_sr",
    "cumulative_sr_csv",
    "element_accuracy",
    "episode_report",
    "quality_report",
    "score_step",
    "step_matches",
    "step_success",
    "stepwise_report",
    "task_success",
]
