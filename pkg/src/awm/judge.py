"""Binary success judges for finished episodes.

The LM judge is the gate of online induction, so it is deliberately
conservative: only an exact ``Status: SUCCESS`` verdict line counts, and any
error or ambiguity is a failure.

The judge prompt is our own wording. It asks the same question as
screenshot-based evaluators do, but it is not a copy of any published
prompt.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Protocol

from .core import Experience, render_action
from .errors import LmError
from .lm import LmClient, LmRequest
from .simenv.env import EnvState, TaskSpec

logger = logging.getLogger(__name__)

JUDGE_PROMPT = """\
You are evaluating whether a web agent completed a user's task.
Read the task, the agent's actions and its final message, then decide.

Task: {instruction}

Trajectory:
{trajectory}

Final state:
{final}

Answer with a short justification followed by a last line that is exactly
"Status: SUCCESS" or "Status: FAILURE"."""

_VERDICT = re.compile(r"^\W*status\W*:\W*([a-z]+)\W*$", re.IGNORECASE)


@dataclass(frozen=True)
class Judgment:
    success: bool
    rationale: str | None = None
    judge_kind: str = "lm"

    def __post_init__(self):
        if not isinstance(self.success, bool):
            raise ValueError("success must be a bool")
        if self.judge_kind not in ("lm", "oracle"):
            raise ValueError(f"unknown judge kind {self.judge_kind!r}")


def render_trajectory(e: Experience) -> str:
    lines = []
    for i, step in enumerate(e.steps, 1):
        if step.reasoning:
            lines.append(f"{i}. {' '.join(step.reasoning.split())}")
            lines.append(f"   {render_action(step.action)}")
        else:
            lines.append(f"{i}. {render_action(step.action)}")
    return "\n".join(lines) or "(no actions)"


def final_message(e: Experience) -> str | None:
    if e.steps and e.steps[-1].action.is_terminal and e.steps[-1].action.args:
        return e.steps[-1].action.args[0]
    return None


def build_judge_prompt(e: Experience) -> str:
    last_obs = e.steps[-1].observation if e.steps else ""
    msg = final_message(e)
    final = f"Message to user: {msg}" if msg is not None else "No message was sent to the user."
    if last_obs:
        final += "\nLast observation:\n" + last_obs
    return JUDGE_PROMPT.format(instruction=e.instruction, trajectory=render_trajectory(e), final=final)


def parse_verdict(reply: str) -> bool:
    """True only if the reply's verdict lines all read exactly SUCCESS."""
    verdicts = []
    for line in reply.splitlines():
        m = _VERDICT.match(line.strip())
        if m:
            verdicts.append(m.group(1).lower())
    return bool(verdicts) and all(v == "success" for v in verdicts)


def judge_lm(e: Experience, lm: LmClient) -> Judgment:
    try:
        reply = lm.complete(LmRequest(prompt=build_judge_prompt(e))).text
    except LmError as exc:
        logger.warning("judge LM failed on %s: %s", e.id, exc)
        return Judgment(False, "judge error", "lm")
    return Judgment(parse_verdict(reply), reply.strip() or None, "lm")


def judge_oracle(e: Experience, task: TaskSpec, final_state: EnvState) -> Judgment:
    check = task.oracle
    if check.require_terminal and not (e.steps and e.steps[-1].action.is_terminal):
        return Judgment(False, "episode did not terminate", "oracle")
    ok = check.holds(final_state, message=final_message(e))
    return Judgment(ok, "oracle check passed" if ok else "oracle check failed", "oracle")


class Judge(Protocol):
    kind: str

    def __call__(self, e: Experience, task: TaskSpec | None = None,
                 final_state: EnvState | None = None) -> Judgment: ...


class LmJudge:
    kind = "lm"

    def __init__(self, lm: LmClient):
        self.lm = lm

    def __call__(self, e, task=None, final_state=None) -> Judgment:
        return judge_lm(e, self.lm)


class OracleJudge:
    kind = "oracle"

    def __call__(self, e, task=None, final_state=None) -> Judgment:
        if task is None or final_state is None:
            raise ValueError("the oracle judge needs the task and the final environment state")
        return judge_oracle(e, task, final_state)
