"""Value types for actions, trajectories and workflows, plus their text and
JSON encodings.

Everything here is an immutable dataclass; containers are tuples so values
can be hashed, shared between threads and used as dict keys.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping

from .errors import (
    ArityError,
    EmptyBody,
    HeaderError,
    MinSteps,
    ParseError,
    SchemaError,
    UnknownAction,
)

logger = logging.getLogger(__name__)

# name -> allowed argument counts
ARITY: dict[str, tuple[int, ...]] = {
    "click": (1,),
    "hover": (1,),
    "clear": (1,),
    "fill": (2,),
    "type": (2,),
    "press": (2,),
    "select_option": (2,),
    "send_msg_to_user": (1,),
    "stop": (0, 1),
}
ALIASES = {"select": "select_option"}
TERMINAL_ACTIONS = frozenset({"stop", "send_msg_to_user"})
# actions whose first argument is an element id
ELEMENT_ACTIONS = frozenset(
    {"click", "hover", "clear", "fill", "type", "press", "select_option"}
)

PLACEHOLDER_RE = re.compile(r"\{([a-z0-9_]+)\}")
_BRACED = re.compile(r"\{([^{}]*)\}")
_ANGLED = re.compile(r"<([A-Za-z][A-Za-z0-9_\- ]*)>")
_CAPS_TOKEN = re.compile(r"(?<![\w{])[A-Z][A-Z0-9]*(?:_[A-Z0-9]+)+(?![\w}])")
_ID_ARG = re.compile(r"^([A-Za-z][A-Za-z0-9_]*)_id$")
_CALL_HEAD = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*\(")
# an odd run of backslashes before one of these characters is a LaTeX escape;
# even runs are literal (rendered actions always double their backslashes)
_LATEX_ESCAPE = re.compile(r"(?<!\\)((?:\\\\)*)\\([_{}#&])")


def unescape_latex(text: str) -> str:
    return _LATEX_ESCAPE.sub(r"\1\2", text)


def snake_case(text: str) -> str:
    text = re.sub(r"([a-z0-9])([A-Z])", r"\1_\2", text)
    text = re.sub(r"[^A-Za-z0-9]+", "_", text)
    return text.strip("_").lower()


def canonicalize_arg(arg: str) -> str:
    """Rewrite every placeholder spelling in ``arg`` to ``{snake_case}``.

    Recognised spellings: ``{AnyName}``, ``<any_name>``, bare ALL-CAPS tokens
    containing an underscore (``FROM_LOCATION``) and whole arguments of the
    form ``something_id`` with a non-numeric stem.
    """
    match = _ID_ARG.match(arg)
    if match and not match.group(1).isdigit():
        return "{" + snake_case(arg) + "}"
    arg = _BRACED.sub(lambda m: "{" + snake_case(m.group(1)) + "}" if snake_case(m.group(1)) else m.group(0), arg)
    arg = _ANGLED.sub(lambda m: "{" + snake_case(m.group(1)) + "}", arg)
    return _CAPS_TOKEN.sub(lambda m: "{" + m.group(0).lower() + "}", arg)


def placeholders(text: str) -> list[str]:
    """Distinct placeholder names in ``text`` in first-occurrence order."""
    seen: dict[str, None] = {}
    for name in PLACEHOLDER_RE.findall(text):
        seen.setdefault(name, None)
    return list(seen)


@dataclass(frozen=True)
class Action:
    """One call in the agent's action grammar.

    ``quotes`` records how each argument was written (``"'"``, ``'"'`` or
    ``""`` for a bare token). It only affects rendering and the validity
    rule of rule-based induction, so it is excluded from equality.
    """

    name: str
    args: tuple[str, ...] = ()
    quotes: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if self.quotes is not None:
            object.__setattr__(self, "quotes", tuple(self.quotes))
            if len(self.quotes) != len(self.args):
                raise ValueError("quotes must align with args")

    def quote_of(self, index: int) -> str:
        return "'" if self.quotes is None else self.quotes[index]

    @property
    def is_terminal(self) -> bool:
        return self.name in TERMINAL_ACTIONS

    @property
    def element(self) -> str | None:
        if self.name in ELEMENT_ACTIONS and self.args:
            return self.args[0]
        return None

    @property
    def value(self) -> str | None:
        """The non-element payload (typed text, option, key or message)."""
        if self.name in ELEMENT_ACTIONS:
            return self.args[1] if len(self.args) > 1 else None
        return self.args[0] if self.args else None

    def __str__(self) -> str:
        return render_action(self)


def _quote(arg: str, quote: str) -> str:
    if quote == "":
        return arg
    escaped = arg.replace("\\", "\\\\").replace(quote, "\\" + quote)
    return f"{quote}{escaped}{quote}"


def render_action(action: Action, upper: bool = False) -> str:
    name = action.name.upper() if upper else action.name
    args = ", ".join(_quote(a, action.quote_of(i)) for i, a in enumerate(action.args))
    return f"{name}({args})"


def _split_args(body: str) -> tuple[list[str], list[str]]:
    args: list[str] = []
    quotes: list[str] = []
    i, n = 0, len(body)
    while True:
        while i < n and body[i].isspace():
            i += 1
        if i >= n:
            if args:
                raise ParseError("trailing comma in argument list")
            return args, quotes
        ch = body[i]
        if ch in "'\"":
            buf = []
            i += 1
            while i < n and body[i] != ch:
                if body[i] == "\\" and i + 1 < n:
                    i += 1
                buf.append(body[i])
                i += 1
            if i >= n:
                raise ParseError("unbalanced quotes")
            args.append("".join(buf))
            quotes.append(ch)
            i += 1
        else:
            j = i
            while j < n and body[j] != ",":
                if body[j] in "'\"()":
                    raise ParseError(f"unexpected {body[j]!r} in bare argument")
                j += 1
            token = body[i:j].strip()
            if not token:
                raise ParseError("empty argument")
            args.append(token)
            quotes.append("")
            i = j
        while i < n and body[i].isspace():
            i += 1
        if i >= n:
            return args, quotes
        if body[i] != ",":
            raise ParseError(f"expected ',' at column {i}")
        i += 1


def _find_close(text: str, start: int) -> int:
    """Index of the ``)`` closing the call whose ``(`` precedes ``start``."""
    quote = None
    i = start
    while i < len(text):
        ch = text[i]
        if quote:
            if ch == "\\":
                i += 1
            elif ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
        elif ch == ")":
            return i
        i += 1
    if quote:
        raise ParseError("unbalanced quotes")
    raise ParseError("unbalanced parentheses")


def parse_action(text: str, macros: Mapping[str, int] | None = None) -> Action:
    """Parse a single ``name('arg', ...)`` line.

    ``macros`` maps registered macro names to their arity; those names are
    accepted alongside the built-in verbs. A trailing ``# comment`` is
    ignored.
    """
    if "\n" in text.strip():
        raise ParseError("action text must be a single line")
    text = unescape_latex(text)
    head = _CALL_HEAD.match(text)
    if not head:
        raise ParseError(f"not an action call: {text!r}")
    close = _find_close(text, head.end())
    rest = text[close + 1 :].strip()
    if rest and not rest.startswith("#"):
        raise ParseError(f"trailing text after action: {rest!r}")
    raw_args, quotes = _split_args(text[head.end() : close])

    name = head.group(1)
    macros = macros or {}
    if name in macros:
        arity: tuple[int, ...] = (macros[name],)
    else:
        name = name.lower()
        name = ALIASES.get(name, name)
        if name not in ARITY:
            raise UnknownAction(name)
        arity = ARITY[name]
    if len(raw_args) not in arity:
        raise ArityError(f"{name} takes {arity} argument(s), got {len(raw_args)}")
    args = []
    for i, arg in enumerate(raw_args):
        # key names for press are never placeholders
        keep = name == "press" and i == 1
        args.append(arg if keep else canonicalize_arg(arg))
    if all(q == "'" for q in quotes):
        return Action(name, tuple(args))
    return Action(name, tuple(args), tuple(quotes))


def is_action_line(line: str, macros: Mapping[str, int] | None = None) -> bool:
    try:
        parse_action(line, macros)
    except ParseError:
        return False
    return True


@dataclass(frozen=True)
class Step:
    action: Action
    observation: str = ""
    state_desc: str | None = None
    html: str | None = None
    reasoning: str | None = None


@dataclass(frozen=True)
class Experience:
    id: str
    website: str
    instruction: str
    steps: tuple[Step, ...] = ()
    template_id: str | None = None
    success: bool | None = None

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.website:
            raise SchemaError("experience website must be non-empty")
        terminals = [i for i, s in enumerate(self.steps) if s.action.is_terminal]
        if len(terminals) > 1 or (terminals and terminals[0] != len(self.steps) - 1):
            raise SchemaError(f"experience {self.id}: terminal action must be unique and last")

    @property
    def actions(self) -> list[Action]:
        return [s.action for s in self.steps]


@dataclass(frozen=True)
class WorkflowStep:
    action: Action
    state_desc: str | None = None
    reasoning: str | None = None
    # verbalized form of the action for text-format workflows
    action_text: str | None = None


WORKFLOW_SOURCES = ("rule", "lm", "human", "offline", "online")
WORKFLOW_FORMATS = ("code", "text")


@dataclass(frozen=True)
class Workflow:
    id: str
    website: str
    description: str
    steps: tuple[WorkflowStep, ...]
    source: str = "lm"
    format: str = "code"

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if len(self.steps) < 2:
            raise MinSteps(f"workflow {self.id!r} has {len(self.steps)} step(s); at least 2 required")
        if self.source not in WORKFLOW_SOURCES:
            raise SchemaError(f"unknown workflow source {self.source!r}")
        if self.format not in WORKFLOW_FORMATS:
            raise SchemaError(f"unknown workflow format {self.format!r}")
        for step in self.steps:
            for arg in step.action.args:
                for inner in _BRACED.findall(arg):
                    if not PLACEHOLDER_RE.fullmatch("{" + inner + "}"):
                        raise SchemaError(f"non-canonical placeholder {{{inner}}} in workflow {self.id!r}")

    @property
    def actions(self) -> list[Action]:
        return [s.action for s in self.steps]

    @property
    def signature(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.actions)

    def placeholders(self) -> list[str]:
        seen: dict[str, None] = {}
        for action in self.actions:
            for arg in action.args:
                for name in placeholders(arg):
                    seen.setdefault(name, None)
        return list(seen)


@dataclass(frozen=True)
class AgentMemory:
    website: str
    base_docs: str
    workflows: tuple[Workflow, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "workflows", tuple(self.workflows))
        ids = [w.id for w in self.workflows]
        if len(ids) != len(set(ids)):
            raise SchemaError("workflow ids must be unique within a memory")


# ---------------------------------------------------------------- JSON records


def action_to_dict(action: Action) -> dict:
    d = {"name": action.name, "args": list(action.args)}
    if action.quotes is not None:
        d["quotes"] = list(action.quotes)
    return d


def action_from_dict(d: Mapping) -> Action:
    try:
        name = d["name"]
        args = tuple(d.get("args", ()))
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"bad action record: {d!r}") from exc
    quotes = d.get("quotes")
    return Action(name, args, tuple(quotes) if quotes is not None else None)


def _require(d: Mapping, key: str, where: str):
    if key not in d or d[key] is None:
        raise SchemaError(f"{where}: missing required field {key!r}")
    return d[key]


def _put_optional(d: dict, **fields) -> dict:
    for k, v in fields.items():
        if v is not None:
            d[k] = v
    return d


def step_to_dict(step: Step) -> dict:
    d = {"observation": step.observation}
    _put_optional(d, state_desc=step.state_desc, html=step.html, reasoning=step.reasoning)
    d["action"] = action_to_dict(step.action)
    return d


def step_from_dict(d: Mapping) -> Step:
    return Step(
        action=action_from_dict(_require(d, "action", "step")),
        observation=d.get("observation", ""),
        state_desc=d.get("state_desc"),
        html=d.get("html"),
        reasoning=d.get("reasoning"),
    )


def experience_to_dict(e: Experience) -> dict:
    d = {"id": e.id, "website": e.website, "instruction": e.instruction}
    _put_optional(d, template_id=e.template_id)
    d["steps"] = [step_to_dict(s) for s in e.steps]
    return _put_optional(d, success=e.success)


def experience_from_dict(d: Mapping) -> Experience:
    if not isinstance(d, Mapping):
        raise SchemaError("experience record must be an object")
    steps = _require(d, "steps", "experience")
    return Experience(
        id=str(_require(d, "id", "experience")),
        website=_require(d, "website", "experience"),
        instruction=_require(d, "instruction", "experience"),
        steps=tuple(step_from_dict(s) for s in steps),
        template_id=d.get("template_id"),
        success=d.get("success"),
    )


def serialize_experience(e: Experience) -> str:
    """One JSON line (no trailing newline)."""
    return json.dumps(experience_to_dict(e), ensure_ascii=False)


def parse_experience(text: str) -> Experience:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return experience_from_dict(d)


def write_experiences(path, experiences: Iterable[Experience]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in experiences:
            fh.write(serialize_experience(e) + "\n")


def read_experiences(path) -> list[Experience]:
    with open(path, encoding="utf-8") as fh:
        return [parse_experience(line) for line in fh if line.strip()]


def workflow_to_dict(w: Workflow) -> dict:
    steps = []
    for s in w.steps:
        d = _put_optional({}, state_desc=s.state_desc, reasoning=s.reasoning)
        d["action"] = action_to_dict(s.action)
        steps.append(_put_optional(d, action_text=s.action_text))
    return {
        "id": w.id,
        "website": w.website,
        "description": w.description,
        "steps": steps,
        "source": w.source,
        "format": w.format,
    }


def workflow_from_dict(d: Mapping) -> Workflow:
    steps = tuple(
        WorkflowStep(
            action=action_from_dict(_require(s, "action", "workflow step")),
            state_desc=s.get("state_desc"),
            reasoning=s.get("reasoning"),
            action_text=s.get("action_text"),
        )
        for s in _require(d, "steps", "workflow")
    )
    return Workflow(
        id=str(_require(d, "id", "workflow")),
        website=_require(d, "website", "workflow"),
        description=_require(d, "description", "workflow"),
        steps=steps,
        source=d.get("source", "lm"),
        format=d.get("format", "code"),
    )


# ------------------------------------------------------------ workflow text


def render_workflow(w: Workflow) -> str:
    lines = [f"## {w.website}: {w.description}"]
    for step in w.steps:
        if step.state_desc:
            lines.append(step.state_desc)
        if step.reasoning:
            lines.extend(step.reasoning.splitlines())
        if w.format == "text" and step.action_text:
            lines.append(step.action_text)
        else:
            lines.append(render_action(step.action))
    return "\n".join(lines)


_HEADER_RE = re.compile(r"^##\s+(.+?):\s*(.*\S)\s*$")


def parse_workflow(
    text: str,
    website: str | None = None,
    *,
    id: str = "w0",
    source: str = "lm",
    macros: Mapping[str, int] | None = None,
) -> Workflow:
    """Parse one workflow block.

    Non-action lines accumulate and attach to the next action: with a
    single line it is the step's reasoning, otherwise the first line is the
    state description and the remainder the reasoning. ``website`` falls
    back to the header's site name when omitted.
    """
    lines = [unescape_latex(l).strip() for l in text.strip().splitlines()]
    lines = [l for l in lines if l]
    if not lines:
        raise HeaderError("empty workflow block")
    header = _HEADER_RE.match(lines[0])
    if not header:
        raise HeaderError(f"missing '## <website>: <title>' header: {lines[0]!r}")
    site, title = header.group(1).strip(), header.group(2).strip()
    body = lines[1:]
    if not body:
        raise EmptyBody(f"workflow {title!r} has no body")

    steps: list[WorkflowStep] = []
    pending: list[str] = []
    for line in body:
        try:
            action = parse_action(line, macros)
        except ParseError:
            pending.append(line)
            continue
        state_desc = pending[0] if len(pending) > 1 else None
        reasoning = "\n".join(pending[1:] if len(pending) > 1 else pending) or None
        steps.append(WorkflowStep(action=action, state_desc=state_desc, reasoning=reasoning))
        pending = []
    if pending:
        logger.debug("dropping %d trailing text line(s) in workflow %r", len(pending), title)
    if len(steps) < 2:
        raise MinSteps(f"workflow {title!r} has {len(steps)} action line(s)")
    return Workflow(id=id, website=website or site, description=title, steps=tuple(steps), source=source)


def split_blocks(text: str) -> list[str]:
    """Split on blank lines."""
    return [b.strip() for b in re.split(r"\n\s*\n", text) if b.strip()]


def iter_workflow_blocks(text: str) -> Iterator[str]:
    """Yield workflow blocks, each starting at a ``## `` header.

    Unlike :func:`split_blocks` this tolerates blank lines inside a block.
    """
    block: list[str] = []
    for line in text.splitlines():
        if line.startswith("## ") and block:
            yield "\n".join(block).strip()
            block = []
        block.append(line)
    if "\n".join(block).strip():
        yield "\n".join(block).strip()


def write_workflows(path, workflows: Iterable[Workflow]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n\n".join(render_workflow(w) for w in workflows))
        fh.write("\n")


def read_workflows(path, source: str = "human") -> list[Workflow]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    out = []
    for i, block in enumerate(iter_workflow_blocks(text)):
        w = parse_workflow(block, id=f"w{i}", source=source)
        out.append(replace(w, id=f"{w.website}-{i}"))
    return out
