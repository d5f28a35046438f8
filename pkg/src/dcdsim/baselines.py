"""Comparison schedulers sharing the engine, cost model and billing.

Only the selection/renting policy differs from the DCD core: a cold-start
oblivious random placer, a FaasCache-style keep-alive policy, and a
CEWB-style broker that maps task slack to bid classes.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .pricing import PricingKind, SpotMarket, VMInstance, VMTypeSpec, execution_seconds
from .scheduler import (Placement, ReadyTask, SchedulerConfig, TIME_EPS, VMPool,
                        commit_assignment, relative_compute_power)

BASELINE_KINDS = ("random", "faascache", "cewb")


def _mem_feasible_free(pool: VMPool, rt: ReadyTask, now: float) -> list[VMInstance]:
    """Free VMs with enough memory whose remaining rental covers the execution."""
    out = []
    for vm in pool.free_vms():
        if vm.spec.memory + 1e-12 < rt.task.mem_req:
            continue
        cold = vm.warm_type != rt.task.task_type
        exec_s = execution_seconds(rt.remaining_mi, rt.task.cold_start_mi,
                                   vm.spec.compute_power, cold)
        if now + exec_s > vm.rent_end + TIME_EPS:
            continue
        out.append(vm)
    return out


def _rent_on_demand_mem_only(pool: VMPool, rt: ReadyTask, now: float,
                             cfg: SchedulerConfig, catalog: list[VMTypeSpec]) -> VMInstance:
    """Cheapest memory-feasible on-demand type; deadline-unaware baselines rent this way."""
    feasible = [t for t in catalog if t.memory + 1e-12 >= rt.task.mem_req]
    spec = min(feasible, key=lambda t: (t.price_on_demand, t.name))
    cold_exec = execution_seconds(rt.remaining_mi, rt.task.cold_start_mi,
                                  spec.compute_power, cold=True)
    hours = max(cfg.rent_hours, math.ceil(cold_exec / 3600.0 - TIME_EPS))
    return pool.hire(spec, PricingKind.ON_DEMAND, now, hours, rate=spec.price_on_demand)


class RandomPolicy:
    """Cold-start-oblivious baseline: uniform choice among memory-feasible free VMs."""

    def __init__(self, cfg: SchedulerConfig, catalog: list[VMTypeSpec], rng: random.Random):
        self.cfg = cfg
        self.catalog = catalog
        self.rng = rng

    def select(self, pool: VMPool, rt: ReadyTask, now: float) -> VMInstance | None:
        candidates = _mem_feasible_free(pool, rt, now)
        if not candidates:
            return None
        return candidates[self.rng.randrange(len(candidates))]

    def schedule_batch_realtime(self, queue: list[ReadyTask], pool: VMPool, now: float,
                                market: SpotMarket | None) -> list[Placement]:
        placements = []
        for rt in queue:
            vm = self.select(pool, rt, now)
            if vm is None:
                vm = _rent_on_demand_mem_only(pool, rt, now, self.cfg, self.catalog)
            commit_assignment(pool, rt, vm, now)
            placements.append(Placement(rt, vm))
        return placements


def faascache_priority(vm: VMInstance) -> float:
    """Keep-alive eviction priority: an LRU/LFU blend; the lowest gets overwritten."""
    return vm.last_use + vm.last_task_freq * vm.last_task_penalty


class FaasCachePolicy:
    """Keep-alive baseline: reuse warm environments, evict by the LRU/LFU blend."""

    def __init__(self, cfg: SchedulerConfig, catalog: list[VMTypeSpec]):
        self.cfg = cfg
        self.catalog = catalog

    def select(self, pool: VMPool, rt: ReadyTask, now: float) -> VMInstance | None:
        candidates = _mem_feasible_free(pool, rt, now)
        if not candidates:
            return None
        warm = [vm for vm in candidates if vm.warm_type == rt.task.task_type]
        if warm:
            return min(warm, key=lambda v: v.id)
        return min(candidates, key=lambda v: (faascache_priority(v), v.id))

    def schedule_batch_realtime(self, queue: list[ReadyTask], pool: VMPool, now: float,
                                market: SpotMarket | None) -> list[Placement]:
        placements = []
        for rt in queue:
            vm = self.select(pool, rt, now)
            if vm is None:
                vm = _rent_on_demand_mem_only(pool, rt, now, self.cfg, self.catalog)
            commit_assignment(pool, rt, vm, now)
            placements.append(Placement(rt, vm))
        return placements


# Bid classes, most reliable first: on-demand, then spot at descending bid levels.
CEWB_CLASS_ON_DEMAND = 2
CEWB_CLASS_SPOT_HIGH = 1
CEWB_CLASS_SPOT_LOW = 0
CEWB_BID_MULTIPLIERS = {CEWB_CLASS_SPOT_HIGH: 1.25, CEWB_CLASS_SPOT_LOW: 1.05}


@dataclass
class _CewbChoice:
    rt: ReadyTask
    rcp: float
    rank: int


class CewbPolicy:
    """Slack-ordered broker: urgent tasks get reliable machines, slack ones cheap bids.

    Includes the DCD warm-reuse check before class assignment; falls back to
    on-demand whenever the spot market is closed for the wanted type.
    """

    def __init__(self, cfg: SchedulerConfig, catalog: list[VMTypeSpec]):
        self.cfg = cfg
        self.catalog = catalog
        self.class_rank: dict[int, int] = {}

    def _slack(self, rt: ReadyTask, now: float) -> float:
        feasible = [t for t in self.catalog if t.memory + 1e-12 >= rt.task.mem_req]
        spec = min(feasible, key=lambda t: (t.price_on_demand, t.name))
        exec_s = execution_seconds(rt.remaining_mi, rt.task.cold_start_mi,
                                   spec.compute_power, cold=True)
        return rt.rd_abs - now - exec_s

    def _reuse(self, pool: VMPool, rt: ReadyTask, rcp: float, now: float,
               rank: int) -> VMInstance | None:
        window = rt.rd_abs - now
        rcp_warm = rt.remaining_mi / window if window > 0 else math.inf
        warm_pick, warm_key, other_pick, other_key = None, None, None, None
        for vm in _mem_feasible_free(pool, rt, now):
            warm = vm.warm_type == rt.task.task_type
            need = rcp_warm if warm else rcp
            if vm.spec.compute_power + 1e-12 < need:
                continue
            if warm:
                key = (vm.spec.compute_power, vm.spec.memory, vm.id)
                if warm_key is None or key < warm_key:
                    warm_pick, warm_key = vm, key
            elif self.class_rank.get(vm.id, CEWB_CLASS_ON_DEMAND) >= rank:
                key = (self.class_rank.get(vm.id, CEWB_CLASS_ON_DEMAND), vm.id)
                if other_key is None or key < other_key:
                    other_pick, other_key = vm, key
        return warm_pick if warm_pick is not None else other_pick

    def _rent(self, pool: VMPool, rt: ReadyTask, rcp: float, now: float, rank: int,
              market: SpotMarket | None) -> VMInstance:
        feasible = [t for t in self.catalog if t.memory + 1e-12 >= rt.task.mem_req]
        satisfying = [t for t in feasible if t.compute_power + 1e-12 >= rcp]
        pool_types = satisfying or [max(feasible, key=lambda t: (t.compute_power, t.name))]
        cold_exec_hours = lambda spec: max(self.cfg.rent_hours, math.ceil(
            execution_seconds(rt.remaining_mi, rt.task.cold_start_mi, spec.compute_power, True)
            / 3600.0 - TIME_EPS))
        if rank != CEWB_CLASS_ON_DEMAND and market is not None:
            spot_types = [t for t in pool_types if market.available(t.name)]
            if spot_types:
                mult = CEWB_BID_MULTIPLIERS[rank]
                offers = []
                for t in spot_types:
                    sp = market.clipped_price(t)
                    offers.append((min(mult * sp, t.price_on_demand), t.name, t))
                bid, _, spec = min(offers, key=lambda e: (e[0], e[1]))
                vm = pool.hire(spec, PricingKind.SPOT, now, cold_exec_hours(spec),
                               rate=bid, bid=bid)
                self.class_rank[vm.id] = rank
                return vm
        spec = min(pool_types, key=lambda t: (t.price_on_demand, t.name))
        vm = pool.hire(spec, PricingKind.ON_DEMAND, now, cold_exec_hours(spec),
                       rate=spec.price_on_demand)
        self.class_rank[vm.id] = CEWB_CLASS_ON_DEMAND
        return vm

    def schedule_batch_realtime(self, queue: list[ReadyTask], pool: VMPool, now: float,
                                market: SpotMarket | None) -> list[Placement]:
        ordered = sorted(queue, key=lambda rt: (self._slack(rt, now), rt.wf.id, rt.task.id))
        n = len(ordered)
        choices = []
        for i, rt in enumerate(ordered):
            rcp = relative_compute_power(rt.task, rt.rd_abs, now, assume_cold=True,
                                         remaining_mi=rt.remaining_mi)
            if self._slack(rt, now) <= 0 or i < math.ceil(n / 3):
                rank = CEWB_CLASS_ON_DEMAND
            elif i < math.ceil(2 * n / 3):
                rank = CEWB_CLASS_SPOT_HIGH
            else:
                rank = CEWB_CLASS_SPOT_LOW
            choices.append(_CewbChoice(rt, rcp, rank))
        placements = []
        for ch in choices:
            vm = self._reuse(pool, ch.rt, ch.rcp, now, ch.rank)
            if vm is None:
                vm = self._rent(pool, ch.rt, ch.rcp, now, ch.rank, market)
            commit_assignment(pool, ch.rt, vm, now)
            placements.append(Placement(ch.rt, vm, ch.rcp))
        return placements


def random_no_cold_start(pool: VMPool, rt: ReadyTask, rng: random.Random, now: float,
                         cfg: SchedulerConfig, catalog: list[VMTypeSpec]) -> VMInstance:
    """Uniform pick among memory-feasible free VMs; rents on-demand when none fit."""
    policy = RandomPolicy(cfg, catalog, rng)
    vm = policy.select(pool, rt, now)
    if vm is None:
        vm = _rent_on_demand_mem_only(pool, rt, now, cfg, catalog)
    return vm


def faascache_select(pool: VMPool, rt: ReadyTask, now: float,
                     cfg: SchedulerConfig, catalog: list[VMTypeSpec]) -> VMInstance:
    """Warm match if one is free, else overwrite the lowest keep-alive priority."""
    policy = FaasCachePolicy(cfg, catalog)
    vm = policy.select(pool, rt, now)
    if vm is None:
        vm = _rent_on_demand_mem_only(pool, rt, now, cfg, catalog)
    return vm


def cewb_schedule(batch: list[ReadyTask], pool: VMPool, now: float,
                  market: SpotMarket | None, cfg: SchedulerConfig,
                  catalog: list[VMTypeSpec]) -> list[Placement]:
    """Assign one batch with the CEWB slack-to-class rule."""
    return CewbPolicy(cfg, catalog).schedule_batch_realtime(batch, pool, now, market)
