"""Shared test utilities: independent oracles and random structure generators.

Oracles here deliberately re-derive results by brute force (path
enumeration, topological recomputation, per-instance billing) so they stay
independent of the library code paths they check.
"""

from __future__ import annotations

import math
import random

from dcdsim.workflow import Task, Workflow


def random_dag(rng: random.Random, max_tasks: int = 50, arrival: float = 0.0,
               d_rel: float | None = None, n_types: int = 5) -> Workflow:
    """A random DAG workflow with edges only from lower to higher index."""
    n = rng.randint(1, max_tasks)
    tasks = [Task(id=f"t{i}", task_type=f"ty{rng.randrange(n_types)}",
                  length_mi=rng.uniform(1.0, 500.0),
                  mem_req=rng.uniform(0.2, 12.0),
                  cold_start_mi=rng.uniform(0.0, 100.0))
             for i in range(n)]
    edges = []
    for j in range(1, n):
        for i in range(j):
            if rng.random() < min(1.0, 2.5 / j):
                edges.append((f"t{i}", f"t{j}"))
    rel = d_rel if d_rel is not None else rng.uniform(50.0, 5000.0)
    return Workflow.build(f"w{rng.randrange(10**9)}", tasks, edges,
                          arrival=arrival, deadline=arrival + rel)


def enumerate_path_lengths(wf: Workflow) -> list[float]:
    """All root-to-leaf path lengths in MI, by exhaustive DFS."""
    roots = [t for t in wf.tasks if not wf.preds[t]]
    out: list[float] = []

    def walk(tid: str, acc: float) -> None:
        acc += wf.tasks[tid].length_mi
        succs = wf.succs[tid]
        if not succs:
            out.append(acc)
            return
        for s in succs:
            walk(s, acc)

    for r in roots:
        walk(r, 0.0)
    return out


def topo_rd_oracle(wf: Workflow) -> dict[str, float]:
    """Relative deadlines recomputed independently in topological order."""
    crit = max(enumerate_path_lengths(wf))
    d_rel = wf.deadline - wf.arrival
    order = []
    seen: set[str] = set()

    def visit(tid: str) -> None:
        if tid in seen:
            return
        for p in wf.preds[tid]:
            visit(p)
        seen.add(tid)
        order.append(tid)

    for tid in sorted(wf.tasks):
        visit(tid)
    rd: dict[str, float] = {}
    for tid in order:
        base = max((rd[p] for p in wf.preds[tid]), default=0.0)
        rd[tid] = base + wf.tasks[tid].length_mi / crit * d_rel
    return rd


def brute_force_ready(workflows, completed, exclude=frozenset()):
    """The ready set {t : preds(t) subset of completed}, unordered."""
    out = set()
    for wf in workflows:
        for tid in wf.tasks:
            key = (wf.id, tid)
            if key in completed or key in exclude:
                continue
            if all((wf.id, p) in completed for p in wf.preds[tid]):
                out.add(key)
    return out


def billed_hours_oracle(rent_start: float, billed_end: float) -> int:
    seconds = billed_end - rent_start
    return max(0, math.ceil(seconds / 3600.0 - 1e-9))
