"""Task templates -> concrete task suites."""

from __future__ import annotations

import itertools
import json
import random
from typing import Iterable, Mapping, Sequence

from ..core import PLACEHOLDER_RE, Action, parse_action, render_action
from ..errors import SchemaError
from .env import BUNDLED_SITES, EnvState, OracleCheck, Site, TaskSpec, _Fail, apply_effects, load_site


def slot_vars(site: Site, template: Mapping, assignment: Mapping[str, str]) -> dict[str, str]:
    """Variables visible to a template instance: each slot value, its table
    row fields as ``<slot>_<field>``, plus any derived lookups."""
    state = EnvState(page=site.start_page)
    for slot, table_name in template["slots"].items():
        key = assignment[slot]
        state.vars[slot] = key
        for f, v in site.tables[table_name][key].items():
            state.vars[f"{slot}_{f}"] = v
    try:
        apply_effects(site, template.get("derive", ()), state)
    except _Fail as exc:
        raise SchemaError(f"template {template['id']}: derivation failed for {dict(assignment)}: {exc}") from exc
    return {k: v for k, v in state.vars.items() if isinstance(v, str)}


def _fill(text: str, variables: Mapping[str, str]) -> str:
    return PLACEHOLDER_RE.sub(lambda m: variables.get(m.group(1), m.group(0)), text)


def instantiate(site: Site, template: Mapping, assignment: Mapping[str, str], index: int = 0) -> TaskSpec:
    variables = slot_vars(site, template, assignment)
    solution = []
    for line in template["solution"]:
        action = parse_action(line)
        bound = tuple(_fill(a, variables) for a in action.args)
        solution.append(render_action(Action(action.name, bound, action.quotes)))
    oracle = dict(template["oracle"])
    for key in ("message_contains", "message_equals", "page"):
        if key in oracle:
            oracle[key] = _fill(oracle[key], variables)
    for key in ("vars", "list_contains"):
        if key in oracle:
            oracle[key] = {k: _fill(v, variables) for k, v in oracle[key].items()}
    return TaskSpec(
        id=f"{template['id']}#{index}",
        website=site.name,
        template_id=template["id"],
        instruction=_fill(template["instruction"], variables),
        initial_page=template.get("initial_page", site.start_page),
        oracle=OracleCheck.from_dict(oracle),
        slots=dict(variables),
        solution=tuple(solution),
    )


def slot_assignments(site: Site, template: Mapping) -> list[dict[str, str]]:
    """Every slot assignment; slots drawing from the same table get distinct values."""
    slots = list(template["slots"].items())
    pools = [list(site.tables[table]) for _, table in slots]
    out = []
    for combo in itertools.product(*pools):
        by_table: dict[str, set] = {}
        ok = True
        for (slot, table), value in zip(slots, combo):
            seen = by_table.setdefault(table, set())
            if value in seen:
                ok = False
                break
            seen.add(value)
        if ok:
            out.append({slot: value for (slot, _), value in zip(slots, combo)})
    return out


def all_templates(sites: Iterable[Site] | None = None) -> list[tuple[Site, Mapping]]:
    sites = list(sites) if sites is not None else [load_site(n) for n in BUNDLED_SITES]
    return [(site, t) for site in sites for t in site.templates]


def generate_suite(
    seed: int = 0,
    k_templates: int = 10,
    n_per_template: int = 5,
    sites: Iterable[Site] | None = None,
    shuffle: bool = True,
) -> list[TaskSpec]:
    """Instantiate ``n_per_template`` tasks for each of ``k_templates``
    templates chosen under ``seed``; the stream order is a seeded shuffle."""
    pool = all_templates(sites)
    if k_templates > len(pool):
        raise ValueError(f"only {len(pool)} templates available, asked for {k_templates}")
    rng = random.Random(seed)
    chosen = sorted(rng.sample(range(len(pool)), k_templates))
    tasks = []
    for i in chosen:
        site, template = pool[i]
        combos = slot_assignments(site, template)
        if n_per_template <= len(combos):
            picks = rng.sample(combos, n_per_template)
        else:
            picks = [rng.choice(combos) for _ in range(n_per_template)]
        tasks += [instantiate(site, template, a, j) for j, a in enumerate(picks)]
    if shuffle:
        rng.shuffle(tasks)
    return tasks


def cross_template_subset(tasks: Sequence[TaskSpec], seed: int | None = None) -> list[TaskSpec]:
    """One task per template, in first-appearance order of templates.

    Without a seed the first task of each template is taken; with one, a
    seeded uniform choice.
    """
    groups: dict[str, list[TaskSpec]] = {}
    for t in tasks:
        groups.setdefault(t.template_id, []).append(t)
    rng = random.Random(seed) if seed is not None else None
    return [members[0] if rng is None else rng.choice(members) for members in groups.values()]


def save_tasks(path, tasks: Iterable[TaskSpec]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in tasks:
            fh.write(json.dumps(t.to_dict(), ensure_ascii=False) + "\n")


def load_tasks(path) -> list[TaskSpec]:
    with open(path, encoding="utf-8") as fh:
        return [TaskSpec.from_dict(json.loads(line)) for line in fh if line.strip()]
