"""Workflow DAG model: tasks, dependencies, rewards, relative deadlines, ready sets.

Workflows are immutable after construction. All deadline bookkeeping is kept
relative to the workflow arrival; absolute timestamps are derived by adding
the arrival at the scheduling boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import StructureError

DEFAULT_LAMBDA = 0.5


@dataclass
class Task:
    """One unit of work: compute length, memory footprint and environment-load cost.

    Two tasks share a warm environment iff their ``task_type`` matches.
    ``depth`` is the DAG depth (roots 0, else 1 + max parent depth); it is
    filled in by :meth:`Workflow.build`.
    """

    id: str
    task_type: str
    length_mi: float
    mem_req: float
    cold_start_mi: float
    depth: int = 0

    def validate(self, wf_id: str) -> None:
        if self.length_mi <= 0:
            raise StructureError(f"workflow {wf_id}, task {self.id}: length_mi must be > 0")
        if self.mem_req <= 0:
            raise StructureError(f"workflow {wf_id}, task {self.id}: mem_req must be > 0")
        if self.cold_start_mi < 0:
            raise StructureError(f"workflow {wf_id}, task {self.id}: cold_start_mi must be >= 0")


@dataclass
class TaskAnnotations:
    """Per-task derived values for one workflow, keyed by task id.

    ``rel_deadline`` is relative to the workflow arrival. ``task_reward``
    values sum to the workflow reward.
    """

    rel_deadline: dict[str, float] = field(default_factory=dict)
    rel_compute: dict[str, float] = field(default_factory=dict)
    weight: dict[str, float] = field(default_factory=dict)
    task_reward: dict[str, float] = field(default_factory=dict)


class Workflow:
    """A DAG of tasks with an arrival time, deadline and completion reward."""

    def __init__(self, wf_id: str, tasks: dict[str, Task], edges: list[tuple[str, str]],
                 arrival: float, deadline: float, reward: float):
        self.id = wf_id
        self.tasks = tasks
        self.edges = edges
        self.arrival = arrival
        self.deadline = deadline
        self.reward = reward
        self.preds: dict[str, list[str]] = {t: [] for t in tasks}
        self.succs: dict[str, list[str]] = {t: [] for t in tasks}
        for u, v in edges:
            self.preds[v].append(u)
            self.succs[u].append(v)
        for t in tasks:
            self.preds[t].sort()
            self.succs[t].sort()
        self._topo = self._topo_order()
        self.annotations: TaskAnnotations | None = None

    @classmethod
    def build(cls, wf_id: str, tasks: list[Task], edges: list[tuple[str, str]],
              arrival: float, deadline: float, reward: float | None = None) -> "Workflow":
        """Validate the graph, compute depths and the reward, and return the workflow."""
        if deadline <= arrival:
            raise StructureError(f"workflow {wf_id}: deadline must be > arrival")
        task_map: dict[str, Task] = {}
        for t in tasks:
            if t.id in task_map:
                raise StructureError(f"workflow {wf_id}: duplicate task id {t.id}")
            t.validate(wf_id)
            task_map[t.id] = t
        for u, v in edges:
            if u not in task_map:
                raise StructureError(f"workflow {wf_id}: edge references unknown task {u}")
            if v not in task_map:
                raise StructureError(f"workflow {wf_id}: edge references unknown task {v}")
        wf = cls(wf_id, task_map, list(edges), arrival, deadline, reward if reward is not None else 0.0)
        for tid in wf._topo:
            parents = wf.preds[tid]
            task_map[tid].depth = 0 if not parents else 1 + max(task_map[p].depth for p in parents)
        if reward is None:
            wf.reward = workflow_reward(wf)
        if wf.reward <= 0:
            raise StructureError(f"workflow {wf_id}: reward must be > 0")
        return wf

    def _topo_order(self) -> list[str]:
        indeg = {t: len(self.preds[t]) for t in self.tasks}
        order: list[str] = []
        stack = sorted([t for t, d in indeg.items() if d == 0], reverse=True)
        while stack:
            t = stack.pop()
            order.append(t)
            for s in self.succs[t]:
                indeg[s] -= 1
                if indeg[s] == 0:
                    stack.append(s)
            stack.sort(reverse=True)
        if len(order) != len(self.tasks):
            raise StructureError(f"workflow {self.id}: dependency cycle detected")
        return order

    def topo_order(self) -> list[str]:
        return list(self._topo)

    @property
    def d_rel(self) -> float:
        return self.deadline - self.arrival

    def total_length_mi(self) -> float:
        return sum(t.length_mi for t in self.tasks.values())


def critical_path_mi(wf: Workflow) -> float:
    """Length (in MI) of the maximum-length root-to-leaf path of the DAG."""
    best: dict[str, float] = {}
    for tid in wf.topo_order():
        parents = wf.preds[tid]
        base = max((best[p] for p in parents), default=0.0)
        best[tid] = base + wf.tasks[tid].length_mi
    return max(best.values())


def workflow_reward(wf: Workflow) -> float:
    """Completion reward: grows with total size and with parallelism.

    reward = L_tot * (L_tot / L_crit)^2, where L_tot is the summed task
    length and L_crit the critical-path length.
    """
    l_tot = wf.total_length_mi()
    l_crit = critical_path_mi(wf)
    return l_tot * (l_tot / l_crit) ** 2


def assign_relative_deadlines(wf: Workflow) -> dict[str, float]:
    """Distribute the workflow deadline over tasks proportionally to length.

    rd(t) = max over parents of rd + (len(t) / L_crit) * d_rel, with the
    max-term 0 for roots. The terminal critical-path task lands exactly on
    d_rel. All values are relative to the workflow arrival.
    """
    l_crit = critical_path_mi(wf)
    d_rel = wf.d_rel
    rd: dict[str, float] = {}
    for tid in wf.topo_order():
        base = max((rd[p] for p in wf.preds[tid]), default=0.0)
        rd[tid] = base + wf.tasks[tid].length_mi / l_crit * d_rel
    return rd


def task_weights_rewards(wf: Workflow, lam: float) -> tuple[dict[str, float], dict[str, float]]:
    """Importance weights and the reward split they induce.

    weight(t) = len(t) * exp(lam * depth(t)); rewards are the workflow
    reward distributed proportionally to weight.
    """
    weights = {tid: t.length_mi * math.exp(lam * t.depth) for tid, t in wf.tasks.items()}
    total = sum(weights.values())
    rewards = {tid: wf.reward * w / total for tid, w in weights.items()}
    return weights, rewards


def annotate(wf: Workflow, lam: float = DEFAULT_LAMBDA) -> TaskAnnotations:
    """Compute and cache relative deadlines, weights and per-task rewards."""
    weights, rewards = task_weights_rewards(wf, lam)
    ann = TaskAnnotations(rel_deadline=assign_relative_deadlines(wf),
                          weight=weights, task_reward=rewards)
    wf.annotations = ann
    return ann


def ready_tasks(workflows: list[Workflow],
                completed: set[tuple[str, str]],
                exclude: set[tuple[str, str]] = frozenset()) -> list[tuple[Workflow, Task]]:
    """Tasks whose predecessors are all completed, not yet run or running.

    Ordered by descending task reward, then ascending absolute relative
    deadline, then (workflow id, task id) so runs are reproducible.
    """
    out: list[tuple[float, float, str, str, Workflow, Task]] = []
    for wf in workflows:
        ann = wf.annotations if wf.annotations is not None else annotate(wf)
        for tid, task in wf.tasks.items():
            key = (wf.id, tid)
            if key in completed or key in exclude:
                continue
            if all((wf.id, p) in completed for p in wf.preds[tid]):
                out.append((-ann.task_reward[tid], wf.arrival + ann.rel_deadline[tid],
                            wf.id, tid, wf, task))
    out.sort(key=lambda e: e[:4])
    return [(wf, task) for _, _, _, _, wf, task in out]
