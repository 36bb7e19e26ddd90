"""Deterministic simulated websites and templated task suites."""

from .env import (
    BUNDLED_SITES,
    Element,
    EnvError,
    EnvState,
    Environment,
    OracleCheck,
    Page,
    Site,
    TaskSpec,
    Transition,
    bundled_sites,
    load_site,
    make_env,
)
from .suite import (
    cross_template_subset,
    generate_suite,
    instantiate,
    load_tasks,
    save_tasks,
    slot_assignments,
)

__all__ = [
    "BUNDLED_SITES",
    "Element",
    "EnvError",
    "EnvState",
    "Environment",
    "OracleCheck",
    "Page",
    "Site",
    "TaskSpec",
    "Transition",
    "bundled_sites",
    "cross_template_subset",
    "generate_suite",
    "instantiate",
    "load_site",
    "load_tasks",
    "make_env",
    "save_tasks",
    "slot_assignments",
]
