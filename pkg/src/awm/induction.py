"""Workflow induction from experiences.

Two pipelines live here. The rule-based one deduplicates experiences by
action sequence (and task template where available), drops steps whose
element argument is not a string-formatted integer, and keeps the survivors
verbatim. The LM-based one renders experiences into the induction prompt,
asks a model for abstract sub-routines and parses the reply back into
workflows.
"""

from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Callable, Hashable, Iterable, Sequence

from .core import (
    PLACEHOLDER_RE,
    Experience,
    Workflow,
    WorkflowStep,
    parse_workflow,
    render_action,
    split_blocks,
)
from .errors import LmError, OversizeExperience, ParseError, SchemaError
from .lm import LmClient, LmRequest

logger = logging.getLogger(__name__)

INDUCTION_PROMPT_VERSION = "v1"
INDUCTION_PROMPT = (
    resources.files("awm").joinpath(f"assets/induction_prompt_{INDUCTION_PROMPT_VERSION}.txt")
    .read_text(encoding="utf-8")
    .strip()
)

VERBALIZE_PROMPT = (
    "Rewrite the following web action as one short natural-language instruction. "
    "Start with the action verb in capitals (CLICK, TYPE, SELECT, ...), keep any "
    "{placeholder} names, and reply with the sentence only.\n"
)

ENV_REPRS = ("description", "html", "both")
INDUCTION_MODES = ("rule", "lm")


@dataclass(frozen=True)
class InductionConfig:
    mode: str = "lm"
    dedup_n: int = 1
    seed: int | None = None
    env_repr: str = "description"
    max_prompt_chars: int = 60_000

    def __post_init__(self):
        if self.mode not in INDUCTION_MODES:
            raise ValueError(f"mode must be one of {INDUCTION_MODES}")
        if self.dedup_n < 1:
            raise ValueError("dedup_n must be >= 1")
        if self.env_repr not in ENV_REPRS:
            raise ValueError(f"env_repr must be one of {ENV_REPRS}")
        if self.max_prompt_chars <= 0:
            raise ValueError("max_prompt_chars must be positive")


@dataclass
class InductionReport:
    dropped: list[tuple[str, str]] = field(default_factory=list)
    skipped_blocks: list[tuple[int, str]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


# ------------------------------------------------------------ deduplication


def action_signature(e: Experience) -> list[str]:
    return [s.action.name for s in e.steps]


def natural_key(text: str) -> tuple:
    """Sort key treating digit runs numerically (``e2`` < ``e10``)."""
    return tuple(int(t) if t.isdigit() else t for t in re.split(r"(\d+)", text))


def _dedup(
    experiences: Sequence[Experience],
    key: Callable[[Experience], Hashable | None],
    n: int,
    seed: int | None,
) -> list[Experience]:
    if n < 1:
        raise ValueError("n must be >= 1")
    groups: dict[Hashable, list[int]] = {}
    order: list[Hashable] = []
    for i, e in enumerate(experiences):
        k = key(e)
        # unkeyed experiences form singleton groups
        k = ("__single__", i) if k is None else ("key", k)
        if k not in groups:
            groups[k] = []
            order.append(k)
        groups[k].append(i)

    rng = random.Random(seed) if seed is not None else None
    out: list[Experience] = []
    for k in order:
        members = groups[k]
        if len(members) <= n:
            chosen = members
        elif rng is None:
            chosen = sorted(members, key=lambda i: natural_key(experiences[i].id))[:n]
        else:
            chosen = rng.sample(members, n)
        out.extend(experiences[i] for i in sorted(chosen))
    return out


def dedup_by_signature(experiences: Sequence[Experience], n: int = 1, seed: int | None = None) -> list[Experience]:
    """Keep ``n`` representatives per distinct action-name sequence.

    Without a seed the representatives are the lowest ids; with one they are
    drawn uniformly. Groups appear in first-appearance order.
    """
    return _dedup(experiences, lambda e: tuple(action_signature(e)), n, seed)


def dedup_by_template(experiences: Sequence[Experience], n: int = 1, seed: int | None = None) -> list[Experience]:
    """Like :func:`dedup_by_signature` but keyed on ``template_id``;
    experiences without a template pass through."""
    return _dedup(experiences, lambda e: e.template_id, n, seed)


_INT_STR = re.compile(r"[0-9]+")
_ID_CHECKED = frozenset({"click", "type", "fill"})


def is_valid_step_action(action) -> bool:
    if action.name not in _ID_CHECKED:
        return True
    if not action.args or action.quote_of(0) == "":
        return False
    return bool(_INT_STR.fullmatch(action.args[0]))


def filter_invalid_steps(e: Experience) -> Experience:
    """Drop click/type/fill steps whose element argument is not a quoted
    decimal integer."""
    return replace(e, steps=tuple(s for s in e.steps if is_valid_step_action(s.action)))


def experience_to_workflow(e: Experience, id: str, source: str = "rule") -> Workflow:
    steps = tuple(WorkflowStep(action=s.action, state_desc=s.state_desc, reasoning=s.reasoning) for s in e.steps)
    return Workflow(id=id, website=e.website, description=e.instruction, steps=steps, source=source)


def _single_website(experiences: Sequence[Experience]) -> str:
    sites = {e.website for e in experiences}
    if len(sites) > 1:
        raise SchemaError(f"experiences span several websites: {sorted(sites)}")
    return sites.pop()


def induce_rule(
    experiences: Sequence[Experience],
    cfg: InductionConfig | None = None,
    report: InductionReport | None = None,
) -> list[Workflow]:
    cfg = cfg or InductionConfig(mode="rule")
    if not experiences:
        return []
    website = _single_website(experiences)
    kept = dedup_by_signature(experiences, cfg.dedup_n, cfg.seed)
    if any(e.template_id is not None for e in kept):
        kept = dedup_by_template(kept, cfg.dedup_n, cfg.seed)
    workflows = []
    for e in kept:
        cleaned = filter_invalid_steps(e)
        if len(cleaned.steps) < 2:
            msg = f"{len(cleaned.steps)} valid step(s) left after filtering"
            logger.info("rule induction dropped %s: %s", e.id, msg)
            if report is not None:
                report.dropped.append((e.id, msg))
            continue
        workflows.append(experience_to_workflow(cleaned, f"{website}-rule-{len(workflows)}"))
    return workflows


# ------------------------------------------------------------ LM induction


def render_experience_block(e: Experience, index: int, env_repr: str = "description") -> tuple[str, bool]:
    """Render one task for the induction prompt.

    Returns the text and whether any requested environment field was missing.
    """
    lines = [f"Task {index}:", f"Query: {e.instruction}"]
    missing = False
    for k, step in enumerate(e.steps, 1):
        lines.append(f"Step {k}:")
        if env_repr in ("description", "both"):
            if step.state_desc:
                lines.append(f"State: {step.state_desc}")
            else:
                missing = True
        if env_repr in ("html", "both"):
            if step.html:
                lines.append("HTML: " + " ".join(step.html.split()))
            else:
                missing = True
        if step.reasoning:
            lines.append("Reasoning: " + " ".join(step.reasoning.split()))
        lines.append(f"Action: {render_action(step.action)}")
    return "\n".join(lines), missing


def _prompt_head(website: str) -> str:
    return f"{INDUCTION_PROMPT}\n\nWebsite: {website}\n\n"


def build_induction_prompt(
    experiences: Sequence[Experience],
    cfg: InductionConfig | None = None,
    report: InductionReport | None = None,
) -> list[str]:
    """Render experiences into one or more induction prompts.

    Tasks are packed greedily, in order, into prompts no longer than
    ``cfg.max_prompt_chars``.
    """
    cfg = cfg or InductionConfig()
    if not experiences:
        raise ValueError("need at least one experience")
    website = _single_website(experiences)
    head = _prompt_head(website)
    budget = cfg.max_prompt_chars

    prompts: list[str] = []
    batch: list[str] = []
    missing_any = False
    for e in experiences:
        block, missing = render_experience_block(e, len(batch) + 1, cfg.env_repr)
        missing_any |= missing
        if len(head) + len(block) > budget:
            raise OversizeExperience(f"experience {e.id} alone needs {len(head) + len(block)} chars (budget {budget})")
        if batch and len(head + "\n\n".join(batch + [block])) > budget:
            prompts.append(head + "\n\n".join(batch))
            block, _ = render_experience_block(e, 1, cfg.env_repr)
            batch = []
        batch.append(block)
    prompts.append(head + "\n\n".join(batch))

    if missing_any:
        msg = f"env_repr={cfg.env_repr!r}: some steps lack the requested fields; rendered with what is present"
        logger.warning(msg)
        if report is not None:
            report.warnings.append(msg)
    return prompts


_FENCE = re.compile(r"^\s*```")


def _clean_lm_text(text: str) -> str:
    lines = []
    for line in text.splitlines():
        if _FENCE.match(line):
            continue
        stripped = line.strip()
        if len(stripped) > 1 and stripped.startswith("`") and stripped.endswith("`"):
            line = stripped.strip("`")
        lines.append(line)
    return "\n".join(lines)


def parse_workflow_output(
    lm_text: str,
    website: str,
    report: InductionReport | None = None,
    id_prefix: str | None = None,
) -> list[Workflow]:
    """Split model output on blank lines and parse each segment.

    A header-only segment is joined to the segment after it, which tolerates
    a blank line between a title and its steps. Segments that fail to parse
    are logged and skipped.
    """
    segments = split_blocks(_clean_lm_text(lm_text))
    merged: list[str] = []
    for seg in segments:
        if merged and len(merged[-1].splitlines()) == 1 and merged[-1].startswith("## ") and not seg.startswith("## "):
            merged[-1] += "\n" + seg
        else:
            merged.append(seg)

    prefix = id_prefix or f"{website}-lm"
    out: list[Workflow] = []
    for i, seg in enumerate(merged):
        try:
            w = parse_workflow(seg, website, id=f"{prefix}-{len(out)}", source="lm")
        except (ParseError, SchemaError) as exc:
            logger.info("skipping unparseable workflow segment %d: %s", i, exc)
            if report is not None:
                report.skipped_blocks.append((i, str(exc)))
            continue
        out.append(w)
    return out


def _arg_pattern(arg: str) -> str:
    return PLACEHOLDER_RE.sub("{}", arg)


def workflow_key(w: Workflow) -> tuple:
    return (
        w.website,
        w.signature,
        tuple(tuple(_arg_pattern(a) for a in s.action.args) for s in w.steps),
    )


def dedup_workflows(workflows: Iterable[Workflow]) -> list[Workflow]:
    """Keep the earliest workflow per (website, signature, masked-args) key."""
    seen: set[tuple] = set()
    out = []
    for w in workflows:
        k = workflow_key(w)
        if k not in seen:
            seen.add(k)
            out.append(w)
    return out


def induce_lm(
    experiences: Sequence[Experience],
    cfg: InductionConfig | None,
    lm: LmClient,
    report: InductionReport | None = None,
) -> list[Workflow]:
    cfg = cfg or InductionConfig()
    if not experiences:
        raise ValueError("need at least one experience")
    website = _single_website(experiences)
    workflows: list[Workflow] = []
    for b, prompt in enumerate(build_induction_prompt(experiences, cfg, report)):
        try:
            text = lm.complete(LmRequest(prompt=prompt)).text
        except LmError as exc:
            exc.batch_index = b
            raise
        workflows += parse_workflow_output(text, website, report, id_prefix=f"{website}-lm-b{b}")
    return dedup_workflows(workflows)


def induce(
    experiences: Sequence[Experience],
    cfg: InductionConfig,
    lm: LmClient | None = None,
    report: InductionReport | None = None,
) -> list[Workflow]:
    if cfg.mode == "rule":
        return induce_rule(experiences, cfg, report)
    if lm is None:
        raise ValueError("LM-based induction needs an lm client")
    if not experiences:
        return []
    return induce_lm(experiences, cfg, lm, report)


def verbalize_workflows(workflows: Sequence[Workflow], lm: LmClient) -> list[Workflow]:
    """Replace each step's action line with an LM-written sentence, keeping
    state descriptions and reasoning as they are."""
    out = []
    for w in workflows:
        steps = []
        for step in w.steps:
            reply = lm.complete(LmRequest(prompt=VERBALIZE_PROMPT + render_action(step.action))).text
            sentence = next((l.strip() for l in reply.splitlines() if l.strip()), render_action(step.action))
            steps.append(replace(step, action_text=sentence))
        out.append(replace(w, steps=tuple(steps), format="text"))
    return out
