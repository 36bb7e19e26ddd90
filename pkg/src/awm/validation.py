"""Input coercion for the estimator API and the CLI."""

from __future__ import annotations

import json
from typing import Iterable, Mapping

from .core import Experience, Workflow, experience_from_dict, workflow_from_dict
from .errors import SchemaError
from .simenv import TaskSpec


def _coerce(item, cls, from_dict, what: str):
    if isinstance(item, cls):
        return item
    if isinstance(item, str):
        try:
            item = json.loads(item)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{what}: not valid JSON: {exc}") from exc
    if isinstance(item, Mapping):
        return from_dict(item)
    raise TypeError(f"expected {cls.__name__}, dict or JSON string for {what}, got {type(item).__name__}")


def check_experiences(X: Iterable, *, allow_empty: bool = True, single_website: bool = False) -> list[Experience]:
    if isinstance(X, (str, bytes, Experience)):
        raise TypeError("expected a sequence of experiences")
    out = [_coerce(x, Experience, experience_from_dict, f"experience {i}") for i, x in enumerate(X)]
    if not out and not allow_empty:
        raise ValueError("no experiences given")
    if single_website and len({e.website for e in out}) > 1:
        raise SchemaError(f"experiences span several websites: {sorted({e.website for e in out})}")
    return out


def check_tasks(X: Iterable) -> list[TaskSpec]:
    if isinstance(X, (str, bytes, TaskSpec)):
        raise TypeError("expected a sequence of tasks")
    return [_coerce(x, TaskSpec, TaskSpec.from_dict, f"task {i}") for i, x in enumerate(X)]


def check_workflows(X: Iterable) -> list[Workflow]:
    if isinstance(X, (str, bytes, Workflow)):
        raise TypeError("expected a sequence of workflows")
    return [_coerce(x, Workflow, workflow_from_dict, f"workflow {i}") for i, x in enumerate(X)]


def is_task_list(X) -> bool:
    """True if X looks like simulator tasks rather than experiences."""
    items = list(X)
    return bool(items) and all(isinstance(x, TaskSpec) or (isinstance(x, Mapping) and "oracle" in x) for x in items)


__all__ = ["check_experiences", "check_tasks", "check_workflows", "is_task_list"]
