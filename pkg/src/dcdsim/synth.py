"""Synthetic workload and spot-trace generators for experiments and property tests."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import DcdError
from .pricing import REFERENCE_CP, SpotSample, SpotTrace, VMTypeSpec
from .workflow import Task, Workflow, annotate, critical_path_mi

SHAPES = ("chain", "fork-join", "layered-random", "montage-like", "mixed")


@dataclass
class SyntheticSpec:
    """Knobs of the workload generator; defaults give the standard fixture shape."""

    arrival_window_s: float = 72000.0        # submissions spread over 20 hours
    arrival_bursts: int = 0                  # 0 = uniform arrivals; else clustered
    burst_width_s: float = 900.0
    tasks_min: int = 4
    tasks_max: int = 8
    length_mi_min: float = 6000.0
    length_mi_max: float = 36000.0
    mem_min: float = 0.5
    mem_max: float = 12.0
    cold_frac: float = 0.2                   # cold-start work as a share of length
    n_task_types: int = 10
    type_skew: float = 1.1                   # Zipf-ish exponent for type popularity
    deadline_factor_min: float = 1.8
    deadline_factor_max: float = 6.5
    reference_cp: float = REFERENCE_CP


def _pick_type(rng: random.Random, spec: SyntheticSpec) -> str:
    weights = [1.0 / (i + 1) ** spec.type_skew for i in range(spec.n_task_types)]
    return f"type{rng.choices(range(spec.n_task_types), weights=weights)[0]:02d}"


def _new_task(rng: random.Random, spec: SyntheticSpec, idx: int) -> Task:
    length = rng.uniform(spec.length_mi_min, spec.length_mi_max)
    return Task(id=f"t{idx:03d}", task_type=_pick_type(rng, spec),
                length_mi=length, mem_req=rng.uniform(spec.mem_min, spec.mem_max),
                cold_start_mi=spec.cold_frac * length)


def _edges_for_shape(rng: random.Random, shape: str, n: int) -> list[tuple[int, int]]:
    if shape == "chain":
        return [(i, i + 1) for i in range(n - 1)]
    if shape == "fork-join":
        if n < 3:
            return [(i, i + 1) for i in range(n - 1)]
        return [(0, i) for i in range(1, n - 1)] + [(i, n - 1) for i in range(1, n - 1)]
    if shape == "layered-random":
        layers: list[list[int]] = []
        nxt = 0
        while nxt < n:
            width = min(n - nxt, rng.randint(1, 3))
            layers.append(list(range(nxt, nxt + width)))
            nxt += width
        edges = []
        for prev, cur in zip(layers, layers[1:]):
            for v in cur:
                parents = rng.sample(prev, k=rng.randint(1, len(prev)))
                edges.extend((p, v) for p in sorted(parents))
        return edges
    if shape == "montage-like":
        if n < 4:
            return [(i, i + 1) for i in range(n - 1)]
        width = (n - 2) // 2
        first = list(range(width))
        second = list(range(width, 2 * width))
        merge = 2 * width
        edges = []
        for j, v in enumerate(second):
            edges.append((first[j], v))
            edges.append((first[(j + 1) % width], v))
        edges.extend((v, merge) for v in second)
        edges.extend((merge, k) for k in range(merge + 1, n))
        return sorted(set(edges))
    raise DcdError(f"unknown workflow shape {shape!r}")


def generate_synthetic(n_workflows: int, shape: str = "mixed", seed: int = 0,
                       spec: SyntheticSpec | None = None) -> list[Workflow]:
    """Deterministic random workload: DAGs of the given shape with spread arrivals.

    Deadlines are set a random factor above the critical-path execution
    time on the reference machine, so most are attainable but tight cases
    occur.
    """
    if shape not in SHAPES:
        raise DcdError(f"unknown workflow shape {shape!r}; pick one of {SHAPES}")
    spec = spec or SyntheticSpec()
    rng = random.Random(f"wl-{seed}")
    shapes = [s for s in SHAPES if s != "mixed"]
    out: list[Workflow] = []
    for k in range(n_workflows):
        wf_shape = shapes[rng.randrange(len(shapes))] if shape == "mixed" else shape
        n = rng.randint(spec.tasks_min, spec.tasks_max)
        tasks = [_new_task(rng, spec, i) for i in range(n)]
        edges_i = _edges_for_shape(rng, wf_shape, n)
        edges = [(tasks[u].id, tasks[v].id) for u, v in edges_i]
        if spec.arrival_bursts > 0:
            centre = (rng.randrange(spec.arrival_bursts) + 0.5) \
                * spec.arrival_window_s / spec.arrival_bursts
            arrival = max(0.0, centre + rng.uniform(-0.5, 0.5) * spec.burst_width_s)
        else:
            arrival = rng.uniform(0.0, spec.arrival_window_s)
        wf = Workflow.build(f"wf{k:04d}", tasks, edges, arrival=arrival,
                            deadline=arrival + 1.0)
        crit_time = critical_path_mi(wf) / spec.reference_cp
        factor = rng.uniform(spec.deadline_factor_min, spec.deadline_factor_max)
        wf.deadline = arrival + factor * crit_time
        annotate(wf)
        out.append(wf)
    return out


def generate_spot_trace(catalog: list[VMTypeSpec], horizon_s: float, density: float,
                        seed: int = 0, step_s: float = 300.0,
                        price_lo: float = 0.25, price_hi: float = 0.45,
                        volatility: float = 0.01, spike_prob: float = 0.0,
                        spike_mult: float = 2.0) -> SpotTrace:
    """Random-walk spot prices per type with Bernoulli availability at ``density``.

    Prices stay inside [price_lo, price_hi] x on-demand; optional spikes
    (capped below on-demand) exercise revocation paths.
    """
    if not 0.0 <= density <= 1.0:
        raise DcdError("density must lie in [0, 1]")
    rng = random.Random(f"trace-{seed}")
    samples: dict[str, list[SpotSample]] = {}
    for spec in sorted(catalog, key=lambda t: t.name):
        dp = spec.price_on_demand
        lo, hi = price_lo * dp, price_hi * dp
        price = rng.uniform(lo, hi)
        rows = []
        t = 0.0
        while t <= horizon_s:
            price = min(hi, max(lo, price + rng.gauss(0.0, volatility * dp)))
            posted = price
            if spike_prob > 0 and rng.random() < spike_prob:
                posted = min(price * spike_mult, 0.95 * dp)
            rows.append(SpotSample(time=t, price=posted,
                                   available=rng.random() < density))
            t += step_s
        samples[spec.name] = rows
    return SpotTrace(samples)
