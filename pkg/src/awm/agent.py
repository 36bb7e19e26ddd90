"""The observe-act loop, teacher-forced step prediction and workflow macros."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from itertools import count
from pathlib import Path
from typing import Mapping, Sequence

from .core import (
    PLACEHOLDER_RE,
    Action,
    Experience,
    Step,
    Workflow,
    WorkflowStep,
    parse_action,
    render_action,
    snake_case,
)
from .errors import ArityError, NoAction, ParseError, UnboundPlaceholder
from .lm import LmClient, LmRequest
from .memory import BASE_ACTION_DOCS, WorkflowStore, normalize_mode
from .simenv.env import EnvError, Environment

logger = logging.getLogger(__name__)

TASK_MARKER = "TASK:"
HISTORY_MARKER = "PREVIOUS STEPS:"
OBSERVATION_MARKER = "CURRENT OBSERVATION:"
REPLY_INSTRUCTION = (
    "Write one line of reasoning about what to do next, then the action to take "
    "on the final line, e.g. click('12')."
)
RETRY_REMINDER = "\n\nYour previous reply contained no valid action. Emit exactly one action line."


@dataclass(frozen=True)
class AgentConfig:
    max_steps: int = 10
    memory_mode: str = "online"
    enable_macro_actions: bool = False
    action_docs: str = BASE_ACTION_DOCS
    record_html: bool = False
    trace_path: str | None = None

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        object.__setattr__(self, "memory_mode", normalize_mode(self.memory_mode))


# ---------------------------------------------------------------- prompting


def build_agent_prompt(q: str, memory_text: str, o: str, history: Sequence[Step] = ()) -> str:
    parts = [memory_text.rstrip(), "", f"{TASK_MARKER} {q}", ""]
    if history:
        parts.append(HISTORY_MARKER)
        for i, step in enumerate(history, 1):
            if step.reasoning:
                parts.append(f"{i}. Reasoning: {' '.join(step.reasoning.split())}")
            else:
                parts.append(f"{i}.")
            parts.append(f"   Action: {render_action(step.action)}")
        parts.append("")
    parts += [OBSERVATION_MARKER, o.rstrip(), "", REPLY_INSTRUCTION]
    return "\n".join(parts)


_ACTION_PREFIX = re.compile(r"^\s*(?:[-*>]\s*)?(?:action\s*:\s*)?`*", re.IGNORECASE)


def _action_candidate(line: str) -> str:
    return _ACTION_PREFIX.sub("", line).rstrip().rstrip("`").strip()


def parse_agent_reply(text: str, macros: Mapping[str, int] | None = None) -> tuple[str, Action]:
    """Split a reply into (reasoning, action); the last parseable action line
    wins and everything before it is reasoning."""
    lines = text.strip().splitlines()
    for idx in range(len(lines) - 1, -1, -1):
        candidate = _action_candidate(lines[idx])
        try:
            action = parse_action(candidate, macros)
        except ParseError:
            continue
        reasoning = "\n".join(l.rstrip() for l in lines[:idx]).strip()
        reasoning = re.sub(r"^\s*reasoning\s*:\s*", "", reasoning, flags=re.IGNORECASE)
        return reasoning, action
    raise NoAction("reply contains no action line")


# ------------------------------------------------------------------ macros


@dataclass(frozen=True)
class MacroAction:
    name: str
    params: tuple[str, ...]
    body: tuple[WorkflowStep, ...]
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "body", tuple(self.body))
        expected = []
        for step in self.body:
            for arg in step.action.args:
                for name in PLACEHOLDER_RE.findall(arg):
                    if name not in expected:
                        expected.append(name)
        if list(self.params) != expected:
            raise ValueError(f"macro {self.name}: params must be {expected}, got {list(self.params)}")

    @property
    def arity(self) -> int:
        return len(self.params)

    def signature_line(self) -> str:
        params = ", ".join(self.params)
        return f"{self.name}({params}): {self.description}"

    @classmethod
    def from_workflow(cls, w: Workflow, name: str | None = None) -> "MacroAction":
        return cls(name or snake_case(w.description), tuple(w.placeholders()), w.steps, w.description)


def register_macro_actions(store: WorkflowStore, website: str) -> list[MacroAction]:
    """Wrap each of the website's workflows as a callable macro.

    Names are the snake-cased description; repeats get ``_2``, ``_3``...
    """
    macros = []
    used: dict[str, int] = {}
    for w in store.workflows(website):
        base = snake_case(w.description) or "workflow"
        used[base] = used.get(base, 0) + 1
        name = base if used[base] == 1 else f"{base}_{used[base]}"
        macros.append(MacroAction.from_workflow(w, name))
    return macros


def macro_arities(macros: Sequence[MacroAction]) -> dict[str, int]:
    return {m.name: m.arity for m in macros}


def macro_docs(action_docs: str, macros: Sequence[MacroAction]) -> str:
    if not macros:
        return action_docs
    lines = [action_docs, "", "Workflow actions (each runs a whole workflow):"]
    lines += [m.signature_line() for m in macros]
    return "\n".join(lines)


@dataclass
class MacroResult:
    executed: list[Action] = field(default_factory=list)
    error: EnvError | None = None
    failed_step: int | None = None
    observation: str = ""

    @property
    def completed(self) -> bool:
        return self.error is None


def bind_action(action: Action, bindings: Mapping[str, str]) -> Action:
    def sub(m):
        if m.group(1) not in bindings:
            raise UnboundPlaceholder(f"no value for {{{m.group(1)}}} in {render_action(action)}")
        return bindings[m.group(1)]

    return Action(action.name, tuple(PLACEHOLDER_RE.sub(sub, a) for a in action.args), action.quotes)


def expand_macro(m: MacroAction, args: Sequence[str], env: Environment) -> MacroResult:
    """Run the macro body on ``env`` without re-observing between steps.

    Stops at the first environment error; the result lists the actions that
    did execute.
    """
    if len(args) != len(m.params):
        raise ArityError(f"{m.name} takes {len(m.params)} argument(s), got {len(args)}")
    bindings = dict(zip(m.params, args))
    actions = [bind_action(step.action, bindings) for step in m.body]
    result = MacroResult(observation=env.observation())
    for i, action in enumerate(actions):
        obs, err = env.execute(action)
        result.observation = obs
        if err is not None:
            result.error, result.failed_step = err, i
            logger.info("macro %s halted at step %d: %s", m.name, i + 1, err)
            break
        result.executed.append(action)
    return result


# ---------------------------------------------------------------- episodes


def next_observation(obs: str, err: EnvError | None) -> str:
    return obs if err is None else f"Error: {err}\n{obs}"


def _trace(cfg: AgentConfig, text: str) -> None:
    if cfg.trace_path:
        path = Path(cfg.trace_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("a", encoding="utf-8") as fh:
            fh.write(text.rstrip() + "\n\n")


def _query(lm: LmClient, prompt: str, macros: Mapping[str, int], cfg: AgentConfig) -> tuple[str, Action]:
    """One agent decision: a retry with a reminder, then a forced stop()."""
    for attempt in range(2):
        reply = lm.complete(LmRequest(prompt=prompt if attempt == 0 else prompt + RETRY_REMINDER)).text
        _trace(cfg, f"--- prompt ---\n{prompt}\n--- reply ---\n{reply}")
        try:
            return parse_agent_reply(reply, macros)
        except NoAction:
            logger.info("agent reply had no action (attempt %d)", attempt + 1)
    return "No valid action produced; stopping.", Action("stop")


_episode_ids = count()


def run_episode(
    q: str,
    website: str,
    env: Environment,
    store: WorkflowStore | None,
    lm: LmClient,
    cfg: AgentConfig | None = None,
    *,
    experience_id: str | None = None,
    template_id: str | None = None,
) -> Experience:
    """Run the agent until it stops or hits ``cfg.max_steps``.

    ``env`` must already be reset. The store is only read.
    """
    cfg = cfg or AgentConfig()
    macros: list[MacroAction] = []
    docs = cfg.action_docs
    if cfg.enable_macro_actions and store is not None:
        macros = register_macro_actions(store, website)
        docs = macro_docs(docs, macros)
    memory_text = store.render_memory(website, docs) if store is not None else docs
    by_name = {m.name: m for m in macros}
    arities = macro_arities(macros)

    steps: list[Step] = []
    obs = env.observation()
    for _ in range(cfg.max_steps):
        prompt = build_agent_prompt(q, memory_text, obs, steps)
        reasoning, action = _query(lm, prompt, arities, cfg)
        step = Step(
            action=action,
            observation=obs,
            state_desc=obs.splitlines()[0] if obs else None,
            html=env.html() if cfg.record_html else None,
            reasoning=reasoning or None,
        )
        if action.is_terminal:
            env.execute(action)
            steps.append(step)
            break
        if action.name in by_name:
            result = expand_macro(by_name[action.name], action.args, env)
            err = result.error
            new_obs = result.observation
        else:
            new_obs, err = env.execute(action)
        if err is not None:
            _trace(cfg, f"--- env error ---\n{err}")
        steps.append(step)
        if env.done:
            # a macro body ended the episode
            break
        obs = next_observation(new_obs, err)
    return Experience(
        id=experience_id or f"ep{next(_episode_ids)}",
        website=website,
        instruction=q,
        steps=tuple(steps),
        template_id=template_id,
    )


def replay_observations(env: Environment, e: Experience, macros: Sequence[MacroAction] = ()) -> list[str]:
    """Re-execute an experience from a freshly reset ``env`` and return the
    observation seen before each step, built exactly as :func:`run_episode`
    builds them."""
    by_name = {m.name: m for m in macros}
    obs = env.observation()
    seen = []
    for step in e.steps:
        seen.append(obs)
        if step.action.name in by_name:
            result = expand_macro(by_name[step.action.name], step.action.args, env)
            new_obs, err = result.observation, result.error
        else:
            new_obs, err = env.execute(step.action)
        obs = next_observation(new_obs, err)
    return seen


def predict_step(
    q: str,
    gold_history: Sequence[Step],
    observation: str,
    store: WorkflowStore | None,
    lm: LmClient,
    website: str,
    cfg: AgentConfig | None = None,
) -> Action:
    """Predict the next action given the gold prefix (teacher forcing)."""
    cfg = cfg or AgentConfig()
    memory_text = store.render_memory(website, cfg.action_docs) if store is not None else cfg.action_docs
    prompt = build_agent_prompt(q, memory_text, observation, gold_history)
    _, action = _query(lm, prompt, {}, cfg)
    return action


def predict_trajectory(
    e: Experience,
    store: WorkflowStore | None,
    lm: LmClient,
    cfg: AgentConfig | None = None,
) -> list[Action]:
    """Teacher-forced predictions for every step of a gold experience."""
    return [
        predict_step(e.instruction, e.steps[:i], step.observation, store, lm, e.website, cfg)
        for i, step in enumerate(e.steps)
    ]


__all__ = [
    "AgentConfig",
    "MacroAction",
    "MacroResult",
    "bind_action",
    "build_agent_prompt",
    "expand_macro",
    "macro_docs",
    "next_observation",
    "parse_agent_reply",
    "predict_step",
    "predict_trajectory",
    "register_macro_actions",
    "replay_observations",
    "run_episode",
]
