"""scikit-learn style wrappers.

``WorkflowInducer`` is a transformer from experiences to workflows.
``AWMAgent`` fits offline memory from training experiences, predicts on
simulator tasks (live episodes) or gold experiences (teacher-forced
actions), and learns online through ``partial_fit``.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .agent import AgentConfig, predict_trajectory
from .core import Workflow
from .induction import InductionConfig, InductionReport, induce
from .memory import WorkflowStore
from .pipeline import RunConfig, eval_steps, run_live, run_online
from .validation import check_experiences, check_tasks, is_task_list


def _by_website(items):
    groups = {}
    for x in items:
        groups.setdefault(x.website, []).append(x)
    return groups


class WorkflowInducer(TransformerMixin, BaseEstimator):
    """Induce workflows per website.

    ``fit`` learns ``workflows_`` (a dict website -> workflows) from the
    training experiences; ``transform`` induces from the given experiences
    and returns a flat list of workflows.
    """

    def __init__(self, mode="rule", lm=None, dedup_n=1, seed=None, env_repr="description",
                 max_prompt_chars=60000):
        self.mode = mode
        self.lm = lm
        self.dedup_n = dedup_n
        self.seed = seed
        self.env_repr = env_repr
        self.max_prompt_chars = max_prompt_chars

    def _config(self) -> InductionConfig:
        return InductionConfig(self.mode, self.dedup_n, self.seed, self.env_repr, self.max_prompt_chars)

    def _induce(self, X) -> dict[str, list[Workflow]]:
        cfg = self._config()
        self.report_ = InductionReport()
        return {
            site: induce(items, cfg, self.lm, self.report_)
            for site, items in _by_website(check_experiences(X)).items()
        }

    def fit(self, X, y=None):
        self.workflows_ = self._induce(X)
        self.n_workflows_ = sum(len(v) for v in self.workflows_.values())
        return self

    def transform(self, X) -> list[Workflow]:
        return [w for ws in self._induce(X).values() for w in ws]

    def fit_transform(self, X, y=None, **fit_params) -> list[Workflow]:
        self.fit(X)
        return [w for ws in self.workflows_.values() for w in ws]


class AWMAgent(BaseEstimator):
    """Memory-augmented web agent.

    ``fit`` seeds memory offline from experiences; with
    ``memory_mode="online"`` it may be skipped and ``partial_fit`` used on a
    task stream instead.
    """

    def __init__(self, lm=None, memory_mode="offline", induction_mode="lm", max_steps=10,
                 judge="oracle", use_memory=True, enable_macro_actions=False, seed=None):
        self.lm = lm
        self.memory_mode = memory_mode
        self.induction_mode = induction_mode
        self.max_steps = max_steps
        self.judge = judge
        self.use_memory = use_memory
        self.enable_macro_actions = enable_macro_actions
        self.seed = seed

    def _run_config(self) -> RunConfig:
        return RunConfig(
            induction=InductionConfig(mode=self.induction_mode, seed=self.seed),
            agent=AgentConfig(max_steps=self.max_steps, memory_mode=self.memory_mode,
                              enable_macro_actions=self.enable_macro_actions),
            memory_mode=self.memory_mode,
            judge=self.judge,
            use_memory=self.use_memory,
        )

    def fit(self, X, y=None):
        cfg = self._run_config()
        self.store_ = WorkflowStore(cfg.memory_mode)
        experiences = check_experiences(X)
        if cfg.memory_mode != "online":
            self.store_.seed_offline(
                {site: induce(items, cfg.induction, self.lm) for site, items in _by_website(experiences).items()}
            )
        return self

    def partial_fit(self, X, y=None):
        """Run one online pass over a task stream, growing memory from
        judged successes. Results of the pass are kept in ``last_run_``."""
        cfg = self._run_config()
        if not hasattr(self, "store_"):
            self.store_ = WorkflowStore("online" if cfg.memory_mode == "offline" else cfg.memory_mode)
        self.last_run_ = run_online(check_tasks(X), cfg, self.lm, store=self.store_)
        return self

    def predict(self, X) -> list:
        """Experiences for simulator tasks, or predicted action lists for
        gold experiences."""
        check_is_fitted(self, "store_")
        cfg = self._run_config()
        store = self.store_ if self.use_memory else None
        if is_task_list(X):
            return run_live(check_tasks(X), store, self.lm, cfg).experiences
        return [predict_trajectory(e, store, self.lm, cfg.agent) for e in check_experiences(X)]

    def score(self, X, y=None) -> float:
        """Task success rate (live for tasks, teacher-forced for experiences)."""
        check_is_fitted(self, "store_")
        cfg = self._run_config()
        if is_task_list(X):
            return run_live(check_tasks(X), self.store_, self.lm, cfg).report.task_sr
        return eval_steps(check_experiences(X), self.store_, self.lm, cfg).task_sr

    @property
    def workflows_(self) -> dict[str, list[Workflow]]:
        check_is_fitted(self, "store_")
        return {site: self.store_.workflows(site) for site in self.store_.websites()}


__all__ = ["AWMAgent", "WorkflowInducer"]
