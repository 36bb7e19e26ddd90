"""Deterministic finite-state websites.

A site is a set of pages. Each page lists its elements and the transitions
triggered by actions on them. Transitions run a short list of effects over
the mutable state (variables, form values, append-only lists) and move to a
target page. Labels and titles are ``str.format``-style templates over the
state variables, so one page definition serves every record in a table.

Effects understood by the engine::

    {"set": var, "to": expr}
    {"lookup": table, "key": expr, "as": prefix}     # fails if key missing
    {"filter": table, "contains": expr, "as": var}   # fails on no match
    {"sort": var, "table": table, "by": field|null, "desc": bool}
    {"head": var, "table": table, "as": prefix}
    {"append": list, "value": expr}

``expr`` is a template where ``{@158}`` reads the value of element 158 and
``{name}`` reads a variable.
"""

from __future__ import annotations

import copy
import html as html_lib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from ..core import Action
from ..errors import SchemaError, UnknownTask

ROLES = ("link", "button", "textbox", "option", "text")
NO_SUCH_ELEMENT = "NoSuchElement"
ILLEGAL_ACTION = "IllegalAction"


@dataclass(frozen=True)
class Element:
    id: int
    role: str
    label: str
    value: str | None = None
    options: tuple[str, ...] = ()

    def __post_init__(self):
        if self.role not in ROLES:
            raise SchemaError(f"element {self.id}: unknown role {self.role!r}")
        object.__setattr__(self, "options", tuple(self.options))


@dataclass(frozen=True)
class Transition:
    element: int
    action: str
    target: str | None = None
    effects: tuple[Mapping[str, Any], ...] = ()
    value: str | None = None
    fallback: str | None = None

    def matches(self, element: int, action: str, value: str | None) -> bool:
        if self.element != element or self.action != action:
            return False
        return self.value is None or (value is not None and self.value.lower() == value.lower())


@dataclass(frozen=True)
class Page:
    name: str
    title: str
    elements: tuple[Element, ...]
    transitions: tuple[Transition, ...] = ()

    def element(self, id: int) -> Element | None:
        for e in self.elements:
            if e.id == id:
                return e
        return None


@dataclass(frozen=True)
class Site:
    name: str
    start_page: str
    pages: Mapping[str, Page]
    tables: Mapping[str, Mapping[str, Mapping[str, str]]] = field(default_factory=dict)
    templates: tuple[Mapping[str, Any], ...] = ()

    def __post_init__(self):
        if self.start_page not in self.pages:
            raise SchemaError(f"site {self.name}: unknown start page {self.start_page!r}")
        for page in self.pages.values():
            ids = [e.id for e in page.elements]
            if len(ids) != len(set(ids)):
                raise SchemaError(f"site {self.name}: duplicate element id on page {page.name}")
            for t in page.transitions:
                for dest in (t.target, t.fallback):
                    if dest is not None and dest not in self.pages:
                        raise SchemaError(f"site {self.name}: transition to unknown page {dest!r}")
                if page.element(t.element) is None:
                    raise SchemaError(f"site {self.name}: transition on missing element {t.element}")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Site":
        pages = {}
        for name, p in d["pages"].items():
            elements = tuple(
                Element(e["id"], e["role"], e["label"], e.get("value"), tuple(e.get("options", ())))
                for e in p["elements"]
            )
            transitions = tuple(
                Transition(t["element"], t["action"], t.get("target"), tuple(t.get("effects", ())),
                           t.get("value"), t.get("fallback"))
                for t in p.get("transitions", ())
            )
            pages[name] = Page(name, p.get("title", name), elements, transitions)
        return cls(d["name"], d["start_page"], pages, d.get("tables", {}), tuple(d.get("templates", ())))

    @classmethod
    def load(cls, path: str | Path) -> "Site":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


BUNDLED_SITES = ("map", "shopping", "reddit")
_SITE_CACHE: dict[str, Site] = {}


def load_site(name: str) -> Site:
    """Load one of the bundled site definitions by name."""
    if name not in _SITE_CACHE:
        if name not in BUNDLED_SITES:
            raise UnknownTask(f"no bundled site named {name!r}")
        text = resources.files("awm.simenv").joinpath(f"sites/{name}.json").read_text(encoding="utf-8")
        _SITE_CACHE[name] = Site.from_dict(json.loads(text))
    return _SITE_CACHE[name]


def bundled_sites() -> dict[str, Site]:
    return {name: load_site(name) for name in BUNDLED_SITES}


@dataclass(frozen=True)
class EnvError:
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


@dataclass
class EnvState:
    page: str
    vars: dict[str, Any] = field(default_factory=dict)
    values: dict[int, str] = field(default_factory=dict)
    lists: dict[str, list[str]] = field(default_factory=dict)
    terminal: tuple[str, str | None] | None = None

    def key(self) -> tuple:
        """Hashable snapshot, for search and equality checks."""
        return (
            self.page,
            tuple(sorted((k, tuple(v) if isinstance(v, list) else v) for k, v in self.vars.items())),
            tuple(sorted(self.values.items())),
            tuple(sorted((k, tuple(v)) for k, v in self.lists.items())),
            self.terminal,
        )

    def context(self) -> dict[str, Any]:
        ctx = {k: v for k, v in self.vars.items() if not isinstance(v, list)}
        for name, items in self.lists.items():
            ctx[f"{name}_count"] = str(len(items))
        return ctx

    @property
    def message(self) -> str | None:
        return self.terminal[1] if self.terminal else None


class _Fail(Exception):
    pass


_EXPR = re.compile(r"\{(@?)([A-Za-z0-9_]+)\}")


def _eval(expr: str, state: EnvState) -> str:
    ctx = state.context()

    def sub(m):
        if m.group(1):
            value = state.values.get(int(m.group(2)))
        else:
            value = ctx.get(m.group(2))
        if value is None or value == "":
            raise _Fail(f"unbound {m.group(0)}")
        return str(value)

    return _EXPR.sub(sub, expr)


def render_label(template: str, state: EnvState) -> str:
    ctx = state.context()
    return _EXPR.sub(lambda m: str(ctx.get(m.group(2), "")) if not m.group(1) else state.values.get(int(m.group(2)), ""), template)


def _set_row(state: EnvState, prefix: str, key: str, row: Mapping[str, str]) -> None:
    state.vars[prefix] = key
    for f, v in row.items():
        state.vars[f"{prefix}_{f}"] = v


def apply_effects(site: Site, effects, state: EnvState) -> None:
    """Apply effects in place; raises ``_Fail`` when one cannot apply."""
    for eff in effects:
        if "set" in eff:
            state.vars[eff["set"]] = _eval(eff["to"], state)
        elif "lookup" in eff:
            table = site.tables[eff["lookup"]]
            key = _eval(eff["key"], state)
            if key not in table:
                raise _Fail(f"{key!r} not in {eff['lookup']}")
            _set_row(state, eff["as"], key, table[key])
        elif "filter" in eff:
            needle = _eval(eff["contains"], state).lower()
            hits = [k for k in site.tables[eff["filter"]] if needle in k.lower()]
            if not hits:
                raise _Fail(f"no match for {needle!r}")
            state.vars[eff["as"]] = hits
        elif "sort" in eff:
            table = site.tables[eff["table"]]
            items = list(state.vars.get(eff["sort"], []))
            if eff.get("by"):
                items.sort(key=lambda k: float(table[k][eff["by"]]), reverse=bool(eff.get("desc")))
            else:
                order = {k: i for i, k in enumerate(table)}
                items.sort(key=order.__getitem__)
            state.vars[eff["sort"]] = items
        elif "head" in eff:
            items = state.vars.get(eff["head"]) or []
            if not items:
                raise _Fail(f"{eff['head']} is empty")
            _set_row(state, eff["as"], items[0], site.tables[eff["table"]][items[0]])
        elif "append" in eff:
            state.lists.setdefault(eff["append"], []).append(_eval(eff["value"], state))
        else:
            raise SchemaError(f"unknown effect {eff!r}")


@dataclass(frozen=True)
class OracleCheck:
    """Ground-truth success test for a task.

    Every populated condition must hold. Message conditions read the payload
    of the final ``send_msg_to_user``/``stop`` action.
    """

    message_contains: str | None = None
    message_equals: str | None = None
    page: str | None = None
    vars: Mapping[str, str] = field(default_factory=dict)
    list_contains: Mapping[str, str] = field(default_factory=dict)
    require_terminal: bool = True

    def to_dict(self) -> dict:
        d: dict[str, Any] = {}
        for key in ("message_contains", "message_equals", "page"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        if self.vars:
            d["vars"] = dict(self.vars)
        if self.list_contains:
            d["list_contains"] = dict(self.list_contains)
        if not self.require_terminal:
            d["require_terminal"] = False
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "OracleCheck":
        return cls(
            message_contains=d.get("message_contains"),
            message_equals=d.get("message_equals"),
            page=d.get("page"),
            vars=dict(d.get("vars", {})),
            list_contains=dict(d.get("list_contains", {})),
            require_terminal=d.get("require_terminal", True),
        )

    def holds(self, state: EnvState, message: str | None = None) -> bool:
        if message is None:
            message = state.message
        if self.require_terminal and state.terminal is None:
            return False
        if self.message_contains is not None:
            if message is None or self.message_contains.lower() not in message.lower():
                return False
        if self.message_equals is not None:
            if message is None or message.strip() != self.message_equals.strip():
                return False
        if self.page is not None and state.page != self.page:
            return False
        for k, v in self.vars.items():
            if state.vars.get(k) != v:
                return False
        for k, v in self.list_contains.items():
            if v not in state.lists.get(k, ()):
                return False
        return True


@dataclass(frozen=True)
class TaskSpec:
    id: str
    website: str
    template_id: str
    instruction: str
    initial_page: str
    oracle: OracleCheck
    slots: Mapping[str, str] = field(default_factory=dict)
    solution: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "website": self.website,
            "template_id": self.template_id,
            "instruction": self.instruction,
            "initial_page": self.initial_page,
            "oracle": self.oracle.to_dict(),
            "slots": dict(self.slots),
            "solution": list(self.solution),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "TaskSpec":
        try:
            return cls(
                id=d["id"],
                website=d["website"],
                template_id=d["template_id"],
                instruction=d["instruction"],
                initial_page=d.get("initial_page", "home"),
                oracle=OracleCheck.from_dict(d.get("oracle", {})),
                slots=dict(d.get("slots", {})),
                solution=tuple(d.get("solution", ())),
            )
        except KeyError as exc:
            raise SchemaError(f"task record missing {exc}") from exc


class Environment:
    """One episode's worth of mutable state over an immutable :class:`Site`."""

    def __init__(self, site: Site):
        self.site = site
        self.state = EnvState(page=site.start_page)
        self._enter(site.start_page)

    # -------------------------------------------------------------- basics

    @property
    def page(self) -> Page:
        return self.site.pages[self.state.page]

    @property
    def done(self) -> bool:
        return self.state.terminal is not None

    def snapshot(self) -> EnvState:
        return copy.deepcopy(self.state)

    def restore(self, state: EnvState) -> None:
        self.state = copy.deepcopy(state)

    def _enter(self, page_name: str, state: EnvState | None = None) -> None:
        state = state or self.state
        state.page = page_name
        for e in self.site.pages[page_name].elements:
            state.values.pop(e.id, None)
            if e.value is not None:
                state.values[e.id] = e.value

    def reset(self, task: TaskSpec | None = None) -> str:
        if task is not None and task.website != self.site.name:
            raise UnknownTask(f"task {task.id} targets {task.website!r}, not {self.site.name!r}")
        start = task.initial_page if task is not None else self.site.start_page
        if start not in self.site.pages:
            raise UnknownTask(f"task {task.id}: unknown initial page {start!r}")
        self.state = EnvState(page=start)
        self._enter(start)
        return self.observation()

    # ------------------------------------------------------------ rendering

    def _element_line(self, e: Element) -> str:
        line = f"[{e.id}] {e.role} '{render_label(e.label, self.state)}'"
        value = self.state.values.get(e.id)
        if value is not None and e.role in ("textbox", "option"):
            line += f" value='{value}'"
        if e.options:
            line += " options=[" + ", ".join(f"'{o}'" for o in e.options) + "]"
        return line

    def observation(self) -> str:
        page = self.page
        lines = [f"Page: {render_label(page.title, self.state)}"]
        lines += [self._element_line(e) for e in page.elements]
        return "\n".join(lines)

    def html(self) -> str:
        """Pseudo-HTML of the current page."""
        page = self.page
        esc = html_lib.escape
        parts = [f"<html><head><title>{esc(render_label(page.title, self.state))}</title></head><body>"]
        for e in page.elements:
            label = esc(render_label(e.label, self.state))
            value = esc(self.state.values.get(e.id, ""))
            if e.role == "textbox":
                parts.append(f'<input id="{e.id}" aria-label="{label}" value="{value}"/>')
            elif e.role == "button":
                parts.append(f'<button id="{e.id}">{label}</button>')
            elif e.role == "link":
                parts.append(f'<a id="{e.id}">{label}</a>')
            elif e.role == "option":
                opts = "".join(
                    f'<option{" selected" if o == value else ""}>{esc(o)}</option>' for o in e.options
                )
                parts.append(f'<select id="{e.id}" aria-label="{label}">{opts}</select>')
            else:
                parts.append(f'<p id="{e.id}">{label}</p>')
        parts.append("</body></html>")
        return "".join(parts)

    def element_label(self, id: int) -> str | None:
        e = self.page.element(id)
        return None if e is None else render_label(e.label, self.state)

    # ------------------------------------------------------------ execution

    def _error(self, kind: str, message: str) -> tuple[str, EnvError]:
        return self.observation(), EnvError(kind, message)

    def _fire(self, element: int, action: str, value: str | None) -> EnvError | None:
        for t in self.page.transitions:
            if not t.matches(element, action, value):
                continue
            trial = copy.deepcopy(self.state)
            try:
                apply_effects(self.site, t.effects, trial)
            except _Fail as exc:
                if t.fallback is None:
                    return EnvError(ILLEGAL_ACTION, str(exc))
                self._enter(t.fallback)
                return None
            if t.target is not None:
                self._enter(t.target, trial)
            self.state = trial
            return None
        return None

    def execute(self, action: Action) -> tuple[str, EnvError | None]:
        """Apply one primitive action.

        Failures come back as an :class:`EnvError` alongside the (unchanged)
        observation; they never raise.
        """
        if self.done:
            return self._error(ILLEGAL_ACTION, "the episode has already ended")
        name = action.name
        if name in ("stop", "send_msg_to_user"):
            self.state.terminal = (name, action.args[0] if action.args else None)
            return self.observation(), None
        if name not in ("click", "hover", "clear", "fill", "type", "press", "select_option"):
            return self._error(ILLEGAL_ACTION, f"unsupported action {name!r}")
        if not action.args:
            return self._error(ILLEGAL_ACTION, f"{name} needs an element id")
        try:
            eid = int(action.args[0])
        except ValueError:
            return self._error(NO_SUCH_ELEMENT, f"invalid element id {action.args[0]!r}")
        element = self.page.element(eid)
        if element is None:
            return self._error(NO_SUCH_ELEMENT, f"no element with id {eid} on this page")
        value = action.args[1] if len(action.args) > 1 else None

        if name in ("fill", "type", "clear"):
            if element.role != "textbox":
                return self._error(ILLEGAL_ACTION, f"element {eid} is not a textbox")
            if name == "clear":
                self.state.values.pop(eid, None)
            else:
                self.state.values[eid] = value or ""
            err = None
        elif name == "select_option":
            if element.role != "option" or value not in element.options:
                return self._error(ILLEGAL_ACTION, f"cannot select {value!r} in element {eid}")
            self.state.values[eid] = value
            err = self._fire(eid, name, value)
        elif name == "press":
            err = self._fire(eid, name, value)
        elif name == "click":
            err = self._fire(eid, name, None)
        else:  # hover
            err = None
        if err is not None:
            return self.observation(), err
        return self.observation(), None


def make_env(task_or_site: TaskSpec | Site | str) -> Environment:
    if isinstance(task_or_site, TaskSpec):
        return Environment(load_site(task_or_site.website))
    if isinstance(task_or_site, str):
        return Environment(load_site(task_or_site))
    return Environment(task_or_site)
