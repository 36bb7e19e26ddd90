"""Scripted stand-ins for the language model, used for offline end-to-end
runs on the simulated sites.

``WorkflowFollowingAgent`` answers agent prompts. When a workflow in the
prompt's memory has a description matching the task, it replays that
workflow with the task's values bound into the placeholders. Otherwise it
may "explore" using the task's reference solution, but only for a limited
number of distinct tasks; beyond that allowance it gives up with ``stop()``.

``AbstractingInducer`` answers induction prompts. It turns each task in the
prompt into one workflow by replacing instruction values with named
placeholders, much as a capable model would.

Both are deterministic functions of their inputs plus the agent's
exploration counter.
"""

from __future__ import annotations

import re
from typing import Iterable, Mapping

from .agent import HISTORY_MARKER, OBSERVATION_MARKER, REPLY_INSTRUCTION, TASK_MARKER
from .core import (
    PLACEHOLDER_RE,
    Action,
    Workflow,
    iter_workflow_blocks,
    parse_action,
    parse_workflow,
    render_action,
    snake_case,
)
from .errors import ParseError, SchemaError
from .lm import LmRequest, MockLm
from .memory import WORKFLOWS_HEADING
from .simenv.env import TaskSpec

_OBS_LINE = re.compile(r"^\[(\d+)\] (\w+) '(.*?)'(?: value='(.*?)')?(?: options=\[.*\])?$")
_LABEL_REF = re.compile(r"the '(.+?)' element")
_ELEMENT_REF = re.compile(r"element \[(\d+)\]")
INDUCTION_MARKER = "extract the common workflows"


def observation_elements(obs: str) -> dict[str, tuple[str, str]]:
    """Map element id -> (role, label) for an observation."""
    out = {}
    for line in obs.splitlines():
        m = _OBS_LINE.match(line.strip())
        if m:
            out[m.group(1)] = (m.group(2), m.group(3))
    return out


def describe_action(action: Action, obs: str) -> str:
    """One line of reasoning that names the element acted on."""
    elements = observation_elements(obs)
    label = elements.get(action.element or "", ("", ""))[1]
    if action.name == "click":
        return f"I will click the '{label}' element."
    if action.name in ("fill", "type"):
        return f"I will fill the '{label}' element with '{action.args[1]}'."
    if action.name == "select_option":
        return f"I will select '{action.args[1]}' in the '{label}' element."
    if action.name == "send_msg_to_user":
        value = action.args[0]
        for eid, (_, lab) in elements.items():
            if value and value in lab:
                return f"The answer '{value}' is shown in element [{eid}]."
        return "I will report the answer to the user."
    if action.name == "stop":
        return "The task is complete."
    return f"I will {action.name} the '{label}' element."


def _section(prompt: str, start: str, end: str | None) -> str:
    i = prompt.rfind(start)
    if i < 0:
        return ""
    i += len(start)
    j = prompt.find(end, i) if end else -1
    return prompt[i:j] if j >= 0 else prompt[i:]


def parse_agent_prompt(prompt: str) -> tuple[str, str, int, str]:
    """Return (memory text, task, number of prior steps, observation)."""
    head = prompt.rfind(f"\n{TASK_MARKER} ")
    memory = prompt[:head] if head >= 0 else ""
    rest = prompt[head + 1 :] if head >= 0 else prompt
    q = rest[len(TASK_MARKER) :].splitlines()[0].strip()
    history = _section(rest, HISTORY_MARKER, OBSERVATION_MARKER)
    n_prev = sum(1 for l in history.splitlines() if l.strip().startswith("Action:"))
    obs = _section(rest, OBSERVATION_MARKER + "\n", "\n\n" + REPLY_INSTRUCTION).strip()
    return memory, q, n_prev, obs


def memory_workflows(memory: str) -> list[Workflow]:
    i = memory.find(f"\n{WORKFLOWS_HEADING}\n")
    if i < 0:
        return []
    out = []
    for k, block in enumerate(iter_workflow_blocks(memory[i + len(WORKFLOWS_HEADING) + 2 :])):
        try:
            out.append(parse_workflow(block, id=f"m{k}"))
        except (ParseError, SchemaError):
            continue
    return out


def description_pattern(description: str) -> re.Pattern:
    """Regex matching instructions that instantiate ``description``."""
    parts = []
    seen = set()
    pos = 0
    for m in PLACEHOLDER_RE.finditer(description):
        parts.append(re.escape(description[pos : m.start()]))
        name = m.group(1)
        parts.append(f"(?P={name})" if name in seen else f"(?P<{name}>.+?)")
        seen.add(name)
        pos = m.end()
    parts.append(re.escape(description[pos:]))
    return re.compile("".join(parts) + r"\Z")


def match_workflow(workflows: Iterable[Workflow], q: str) -> tuple[Workflow, dict[str, str]] | None:
    """First matching workflow, trying those with more literal text first."""
    literal = lambda w: len(PLACEHOLDER_RE.sub("", w.description))
    for w in sorted(workflows, key=literal, reverse=True):
        m = description_pattern(w.description).match(q)
        if m:
            return w, m.groupdict()
    return None


def resolve_step(action: Action, reasoning: str | None, bindings: Mapping[str, str], obs: str) -> Action | None:
    """Bind a workflow step against the current observation; None if a
    placeholder cannot be resolved."""
    elements = observation_elements(obs)
    by_label = {label: eid for eid, (_, label) in elements.items()}

    def value_of(name: str) -> str | None:
        if name in bindings:
            return bindings[name]
        if name.endswith("_id") and name[:-3] in bindings:
            return by_label.get(bindings[name[:-3]])
        ref = _ELEMENT_REF.search(reasoning or "")
        if ref and ref.group(1) in elements:
            label = elements[ref.group(1)][1]
            return label.split(": ", 1)[1] if ": " in label else label
        return None

    args = []
    for arg in action.args:
        missing = False

        def sub(m):
            nonlocal missing
            v = value_of(m.group(1))
            if v is None:
                missing = True
                return m.group(0)
            return v

        args.append(PLACEHOLDER_RE.sub(sub, arg))
        if missing:
            return None
    return Action(action.name, tuple(args))


def _reply(reasoning: str, action: Action) -> str:
    return f"{reasoning}\n{render_action(action)}"


class WorkflowFollowingAgent:
    """Scripted agent policy; pass an instance as ``MockLm(responder=...)``.

    ``plans`` maps task instructions to reference action lines; the agent
    may use them for at most ``exploration_budget`` distinct tasks, and only
    when no workflow in memory matches.
    """

    def __init__(self, plans: Mapping[str, Iterable[str]] = (), exploration_budget: int = 0):
        self.plans = {q: [parse_action(a) for a in actions] for q, actions in dict(plans).items()}
        self.exploration_budget = exploration_budget
        self.explored: list[str] = []

    @classmethod
    def for_tasks(cls, tasks: Iterable[TaskSpec], exploration_budget: int) -> "WorkflowFollowingAgent":
        return cls({t.instruction: t.solution for t in tasks}, exploration_budget)

    def __call__(self, req: LmRequest) -> str:
        memory, q, i, obs = parse_agent_prompt(req.prompt)
        matched = match_workflow(memory_workflows(memory), q)
        if matched is not None:
            w, bindings = matched
            if i >= len(w.steps):
                return _reply("All workflow steps are done.", Action("stop"))
            step = w.steps[i]
            action = resolve_step(step.action, step.reasoning, bindings, obs)
            if action is None:
                return _reply("I cannot bind this workflow step to the page.", Action("stop"))
            return _reply(describe_action(action, obs), action)

        if q in self.plans and (q in self.explored or len(self.explored) < self.exploration_budget):
            if q not in self.explored:
                self.explored.append(q)
            plan = self.plans[q]
            action = plan[i] if i < len(plan) else Action("stop")
            return _reply(describe_action(action, obs), action)
        return _reply("I do not know how to complete this task.", Action("stop"))


class AbstractingInducer:
    """Scripted induction model: one abstracted workflow per prompt task."""

    def __call__(self, req: LmRequest) -> str:
        website = _section(req.prompt, "\nWebsite: ", "\n").strip()
        blocks = re.split(r"\n(?=Task \d+:\n)", req.prompt)
        out = []
        for block in blocks[1:]:
            text = self.abstract(block, website)
            if text:
                out.append(text)
        return "\n\n".join(out)

    @staticmethod
    def _parse_task(block: str) -> tuple[str, list[tuple[str, Action]]]:
        q = ""
        steps: list[tuple[str, Action]] = []
        reasoning = ""
        for line in block.splitlines():
            if line.startswith("Query: "):
                q = line[len("Query: ") :].strip()
            elif line.startswith("Reasoning: "):
                reasoning = line[len("Reasoning: ") :].strip()
            elif line.startswith("Action: "):
                steps.append((reasoning, parse_action(line[len("Action: ") :])))
                reasoning = ""
        return q, steps

    def abstract(self, block: str, website: str) -> str:
        q, steps = self._parse_task(block)
        if not q or len(steps) < 2:
            return ""
        names: dict[str, str] = {}

        def name_for(value: str, hint: str) -> str:
            if value not in names:
                base = snake_case(hint) or "value"
                name, k = base, 2
                while name in names.values():
                    name, k = f"{base}_{k}", k + 1
                names[value] = name
            return names[value]

        lines = []
        for reasoning, action in steps:
            label_ref = _LABEL_REF.search(reasoning)
            label = label_ref.group(1) if label_ref else ""
            args = list(action.args)
            if action.name in ("fill", "type", "select_option") and len(args) == 2 and args[1] and args[1] in q:
                args[1] = "{" + name_for(args[1], label) + "}"
            elif action.name == "click" and label and label in q and not q.startswith(label):
                args[0] = "{" + name_for(label, "item") + "_id}"
            elif action.name == "send_msg_to_user" and args:
                value = args[0]
                args[0] = "{" + (name_for(value, "value") if value in q else name_for(value, "answer")) + "}"
            for value, name in sorted(names.items(), key=lambda kv: -len(kv[0])):
                reasoning = reasoning.replace(f"'{value}'", "{" + name + "}")
            if reasoning:
                lines.append(reasoning)
            lines.append(render_action(Action(action.name, tuple(args))))

        description = q
        for value, name in sorted(names.items(), key=lambda kv: -len(kv[0])):
            if value in q:
                description = description.replace(value, "{" + name + "}")
        return "\n".join([f"## {website}: {description}"] + lines)


def scripted_lm(tasks: Iterable[TaskSpec] = (), exploration_budget: int = 0) -> MockLm:
    """One mock backend routing induction prompts to the abstracting inducer
    and everything else to the workflow-following agent."""
    agent = WorkflowFollowingAgent.for_tasks(tasks, exploration_budget)
    lm = MockLm(routes={INDUCTION_MARKER: AbstractingInducer()}, responder=agent)
    lm.agent = agent  # type: ignore[attr-defined]
    return lm
