"""Per-website workflow store and the augmented agent memory it renders."""

from __future__ import annotations

import os
import threading
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Mapping

from .core import AgentMemory, Workflow, read_workflows, render_workflow, write_workflows
from .errors import ModeError
from .induction import dedup_workflows, workflow_key

MEMORY_MODES = ("offline", "online", "offline_plus_online")

BASE_ACTION_DOCS = """\
Available actions:
click(element_id): click the element with the given id.
hover(element_id): hover over the element.
clear(element_id): clear the content of a text field.
fill(element_id, value): type value into a text field (type(...) is an alias).
press(element_id, key): press a key combination while focused on the element, e.g. press('12', 'Enter').
select_option(element_id, option): choose an option in a select element.
send_msg_to_user(text): send the final answer to the user; ends the task.
stop(): end the task without an answer."""

WORKFLOWS_HEADING = "Workflows:"


def normalize_mode(mode: str) -> str:
    mode = mode.replace("+", "_plus_").replace("-", "_")
    if mode not in MEMORY_MODES:
        raise ValueError(f"memory mode must be one of {MEMORY_MODES}, got {mode!r}")
    return mode


class WorkflowStore:
    """Ordered, per-website workflow collections.

    In ``offline`` mode the store accepts one seeding and is frozen after it.
    If ``checkpoint_dir`` is set, each website's workflows are rewritten to
    ``<checkpoint_dir>/<website>.workflows.txt`` after every change.
    """

    def __init__(self, mode: str = "online", checkpoint_dir: str | os.PathLike | None = None):
        self.mode = normalize_mode(mode)
        self.by_website: dict[str, list[Workflow]] = {}
        self.checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir else None
        self._frozen = False
        self._lock = threading.RLock()

    def __len__(self) -> int:
        return sum(len(v) for v in self.by_website.values())

    def __contains__(self, website: str) -> bool:
        return website in self.by_website

    @property
    def frozen(self) -> bool:
        return self._frozen

    def workflows(self, website: str) -> list[Workflow]:
        return list(self.by_website.get(website, ()))

    def websites(self) -> list[str]:
        return list(self.by_website)

    def _insert(self, website: str, workflows: Iterable[Workflow]) -> int:
        with self._lock:
            current = self.by_website.setdefault(website, [])
            existing_keys = {workflow_key(w) for w in current}
            added = 0
            for w in dedup_workflows(replace(w, website=website) for w in workflows):
                if workflow_key(w) in existing_keys:
                    continue
                # positional ids, so a checkpoint read back keeps them
                w = replace(w, id=f"{website}-{len(current)}")
                current.append(w)
                existing_keys.add(workflow_key(w))
                added += 1
            if added:
                self._checkpoint(website)
            return added

    def add_workflows(self, website: str, workflows: Iterable[Workflow]) -> int:
        """Append workflows not already present (by dedup key); return how
        many were added."""
        if self._frozen:
            raise ModeError("offline store is frozen after seeding")
        return self._insert(website, workflows)

    def seed_offline(self, workflows_by_website: Mapping[str, Iterable[Workflow]]) -> None:
        if self.mode == "online":
            raise ModeError("seed_offline needs mode 'offline' or 'offline_plus_online'")
        if self._frozen:
            # reseeding an offline store with the same content is a no-op
            for website, ws in workflows_by_website.items():
                have = {workflow_key(w) for w in self.by_website.get(website, ())}
                if any(workflow_key(replace(w, website=website)) not in have for w in ws):
                    raise ModeError("offline store is frozen after seeding")
            return
        for website, ws in workflows_by_website.items():
            self._insert(website, ws)
        if self.mode == "offline":
            self._frozen = True

    def memory(self, website: str, base_docs: str = BASE_ACTION_DOCS) -> AgentMemory:
        return AgentMemory(website=website, base_docs=base_docs, workflows=tuple(self.workflows(website)))

    def render_memory(self, website: str, base_docs: str = BASE_ACTION_DOCS) -> str:
        return render_memory(self.memory(website, base_docs))

    def _checkpoint(self, website: str) -> None:
        if self.checkpoint_dir is None:
            return
        self.checkpoint_dir.mkdir(parents=True, exist_ok=True)
        write_workflows(self.checkpoint_path(website), self.by_website[website])

    def checkpoint_path(self, website: str, directory: str | os.PathLike | None = None) -> Path:
        directory = Path(directory) if directory is not None else self.checkpoint_dir
        if directory is None:
            raise ValueError("no checkpoint directory configured")
        safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in website)
        return directory / f"{safe}.workflows.txt"

    def write(self, directory: str | os.PathLike) -> list[Path]:
        """Write every website's workflows under ``directory``."""
        Path(directory).mkdir(parents=True, exist_ok=True)
        paths = []
        for website, ws in self.by_website.items():
            path = self.checkpoint_path(website, directory)
            write_workflows(path, ws)
            paths.append(path)
        return paths

    @classmethod
    def load(cls, paths: Iterable[str | os.PathLike], mode: str = "online") -> "WorkflowStore":
        """Rebuild a store from workflow files (e.g. checkpoints)."""
        store = cls(mode="online")
        for path in paths:
            for w in read_workflows(path):
                store._insert(w.website, [w])
        store.mode = normalize_mode(mode)
        store._frozen = store.mode == "offline"
        return store


def render_memory(memory: AgentMemory) -> str:
    """Base action docs, followed by the workflows under a heading.

    With no workflows the result is exactly ``memory.base_docs``.
    """
    if not memory.workflows:
        return memory.base_docs
    blocks = "\n\n".join(render_workflow(w) for w in memory.workflows)
    return f"{memory.base_docs}\n\n{WORKFLOWS_HEADING}\n\n{blocks}"


def add_workflows(store: WorkflowStore, website: str, workflows: Iterable[Workflow]) -> int:
    return store.add_workflows(website, workflows)


def seed_offline(store: WorkflowStore, workflows_by_website: Mapping[str, Iterable[Workflow]]) -> None:
    store.seed_offline(workflows_by_website)
