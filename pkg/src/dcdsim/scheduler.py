"""Deadline-, cold-start- and dependency-aware (DCD) scheduling core.

Covers the per-batch ready-task loop, in-stock VM selection with the
priority score, reserved planning from predictions, and real-time
on-demand/spot renting with reward-guided bidding.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .errors import DcdError
from .pricing import (HOUR, PricingKind, SpotMarket, SpotTrace, VMInstance, VMTypeSpec,
                      bid_price, execution_seconds)
from .workflow import Task, Workflow

TIME_EPS = 1e-9


@dataclass
class SchedulerConfig:
    """Tunables of the scheduling policies; every coefficient is config-exposed."""

    psi1: float = 1.0            # priority-score weight on last-use timestamp
    psi2: float = 1.0            # weight on invocation-frequency x cold-start penalty
    psi3: float = 0.1            # weight on memory footprint
    lam: float = 0.5             # depth exponent in task weights
    alpha_bid: float = 0.01      # bid-curve sensitivity to the cumulative score
    reserved_prob: float = 0.7   # probability of reserving on pool exhaustion (no forecast)
    batch_len: float = 300.0     # seconds between scheduling ticks
    rent_hours: int = 1          # rental window length, whole hours
    invert_priority: bool = False  # pick max score instead of min (sensitivity study)

    def validate(self) -> None:
        if min(self.psi1, self.psi2, self.psi3) < 0:
            raise DcdError("priority coefficients must be >= 0")
        if not 0.0 <= self.reserved_prob <= 1.0:
            raise DcdError("reserved_prob must lie in [0, 1]")
        if self.batch_len <= 0 or self.rent_hours < 1:
            raise DcdError("batch_len must be > 0 and rent_hours >= 1")


@dataclass
class PlannedReservation:
    """Output of the predicted phase: rent ``count`` reserved VMs of a type at a time.

    ``hours`` carries the window length so that plans covering tasks longer
    than one rental hour replay with the same coverage.
    """

    vm_type: str
    start_hour: float
    count: int
    hours: int = 1


@dataclass
class ReadyTask:
    """A dependency-free task queued for placement; carries checkpoint remnants."""

    wf: Workflow
    task: Task
    remaining_mi: float
    rd_abs: float
    reward: float

    @property
    def key(self) -> tuple[str, str]:
        return (self.wf.id, self.task.id)


@dataclass
class Placement:
    rt: ReadyTask
    vm: VMInstance | None   # None in predicted mode when the reservation gate declined
    rcp: float = 0.0


class VMPool:
    """Rented instances split into free and busy, plus per-type scheduling state.

    ``cumulative_score`` is the running sum of task rewards scheduled on each
    VM type (drives spot bids up); ``type_freq`` counts invocations per task
    type (the popularity term of the priority score).
    """

    def __init__(self):
        self.free: dict[int, VMInstance] = {}
        self.busy: dict[int, VMInstance] = {}
        self.cumulative_score: dict[str, float] = {}
        self.type_freq: dict[str, int] = {}
        self.all_instances: list[VMInstance] = []
        self._next_id = 1

    def hire(self, spec: VMTypeSpec, kind: PricingKind, now: float, hours: int,
             rate: float, bid: float | None = None) -> VMInstance:
        vm = VMInstance(id=self._next_id, spec=spec, pricing_kind=kind,
                        rent_start=now, rent_end=now + hours * HOUR, rate=rate,
                        last_use=now, bid_price=bid)
        self._next_id += 1
        self.free[vm.id] = vm
        self.all_instances.append(vm)
        return vm

    def free_vms(self) -> list[VMInstance]:
        return [self.free[i] for i in sorted(self.free)]

    def busy_vms(self) -> list[VMInstance]:
        return [self.busy[i] for i in sorted(self.busy)]

    def register_unpooled(self, spec: VMTypeSpec, kind: PricingKind, start: float,
                          hours: int, rate: float) -> VMInstance:
        """Ledger-only hire: billed, but never offered to the scheduler."""
        vm = VMInstance(id=self._next_id, spec=spec, pricing_kind=kind,
                        rent_start=start, rent_end=start + hours * HOUR, rate=rate,
                        last_use=start)
        self._next_id += 1
        self.all_instances.append(vm)
        return vm

    def mark_busy(self, vm: VMInstance) -> None:
        del self.free[vm.id]
        self.busy[vm.id] = vm

    def mark_free(self, vm: VMInstance) -> None:
        del self.busy[vm.id]
        self.free[vm.id] = vm

    def remove(self, vm: VMInstance) -> None:
        self.free.pop(vm.id, None)
        self.busy.pop(vm.id, None)

    def contains(self, vm_id: int) -> bool:
        return vm_id in self.free or vm_id in self.busy

    def spot_instances(self, vm_type: str) -> list[VMInstance]:
        out = [vm for vm in self.free_vms() + self.busy_vms()
               if vm.pricing_kind is PricingKind.SPOT and vm.spec.name == vm_type]
        out.sort(key=lambda v: v.id)
        return out

    def expiring_at(self, now: float) -> list[VMInstance]:
        return [vm for vm in self.free_vms() if abs(vm.rent_end - now) < 1e-6]

    def score(self, vm_type: str) -> float:
        return self.cumulative_score.get(vm_type, 0.0)

    def add_score(self, vm_type: str, reward: float) -> None:
        self.cumulative_score[vm_type] = self.score(vm_type) + reward

    def bump_freq(self, task_type: str) -> int:
        self.type_freq[task_type] = self.type_freq.get(task_type, 0) + 1
        return self.type_freq[task_type]


def priority_score(vm: VMInstance, cfg: SchedulerConfig) -> float:
    """Takeover preference: lower scores mark staler, less valuable environments."""
    return (cfg.psi1 * vm.last_use
            + cfg.psi2 * vm.last_task_freq * vm.last_task_penalty
            + cfg.psi3 * vm.spec.memory)


def relative_compute_power(task: Task, rd_abs: float, now: float, assume_cold: bool,
                           remaining_mi: float | None = None) -> float:
    """Minimum MIPS that finishes the (remaining) task by its relative deadline.

    Returns +inf when the deadline has already passed: the task stays
    schedulable and is pushed onto the fastest affordable option.
    """
    work = remaining_mi if remaining_mi is not None else task.length_mi
    window = rd_abs - now
    if window <= 0:
        return math.inf
    return (work + (task.cold_start_mi if assume_cold else 0.0)) / window


def select_in_stock_vm(pool: VMPool, task: Task, rcp: float, rd_abs: float, now: float,
                       cfg: SchedulerConfig | None = None,
                       remaining_mi: float | None = None) -> VMInstance | None:
    """Pick a free VM for the task, or None when no rented VM suits it.

    Warm candidates are judged against the warm execution time, cold ones
    against ``rcp`` (cold-assumed). A warm match wins and takes the smallest
    (compute power, memory); otherwise the lowest priority score wins.
    """
    cfg = cfg or SchedulerConfig()
    work = remaining_mi if remaining_mi is not None else task.length_mi
    window = rd_abs - now
    rcp_warm = (work / window) if window > 0 else math.inf
    warm_pick = None
    warm_key = None
    cold_pick = None
    cold_key = None
    for vm in pool.free_vms():
        if vm.spec.memory + 1e-12 < task.mem_req:
            continue
        warm = vm.warm_type == task.task_type
        exec_s = execution_seconds(work, task.cold_start_mi, vm.spec.compute_power, cold=not warm)
        if now + exec_s > vm.rent_end + TIME_EPS:
            continue
        need = rcp_warm if warm else rcp
        if vm.spec.compute_power + 1e-12 < need:
            continue
        if warm:
            key = (vm.spec.compute_power, vm.spec.memory, vm.id)
            if warm_key is None or key < warm_key:
                warm_pick, warm_key = vm, key
        else:
            score = priority_score(vm, cfg)
            key = (-score if cfg.invert_priority else score, vm.id)
            if cold_key is None or key < cold_key:
                cold_pick, cold_key = vm, key
    return warm_pick if warm_pick is not None else cold_pick


def choose_catalog_type(catalog: list[VMTypeSpec], rcp: float, mem_req: float,
                        rate_of) -> VMTypeSpec:
    """Cheapest type meeting compute and memory; fastest memory-feasible as fallback."""
    feasible = [t for t in catalog if t.memory + 1e-12 >= mem_req]
    if not feasible:
        raise DcdError(f"no catalog type offers {mem_req} GiB of memory")
    satisfying = [t for t in feasible if t.compute_power + 1e-12 >= rcp]
    if satisfying:
        return min(satisfying, key=lambda t: (rate_of(t), t.name))
    return max(feasible, key=lambda t: (t.compute_power, -t.price_on_demand, t.name))


def _rent_hours_for(cfg: SchedulerConfig, spec: VMTypeSpec, work_mi: float,
                    cold_start_mi: float) -> int:
    cold_exec = execution_seconds(work_mi, cold_start_mi, spec.compute_power, cold=True)
    return max(cfg.rent_hours, math.ceil(cold_exec / HOUR - TIME_EPS))


def rent_realtime(pool: VMPool, task: Task, rcp: float, now: float,
                  market: SpotMarket | None, cfg: SchedulerConfig,
                  catalog: list[VMTypeSpec], use_spot: bool = True,
                  remaining_mi: float | None = None) -> VMInstance:
    """Rent a new VM at on-demand price, or bid on a spot VM when one is posted.

    Renting always succeeds: when no type satisfies the compute requirement
    the fastest memory-feasible type is taken instead.
    """
    work = remaining_mi if remaining_mi is not None else task.length_mi
    feasible = [t for t in catalog if t.memory + 1e-12 >= task.mem_req]
    if not feasible:
        raise DcdError(f"task {task.id}: no catalog type offers {task.mem_req} GiB")
    satisfying = [t for t in feasible if t.compute_power + 1e-12 >= rcp]
    pool_types = satisfying or [max(feasible, key=lambda t: (t.compute_power, -t.price_on_demand, t.name))]

    if use_spot and market is not None:
        spot_types = [t for t in pool_types if market.available(t.name)]
        if spot_types:
            bids = []
            for t in spot_types:
                sp = market.clipped_price(t)
                bids.append((bid_price(t.price_on_demand, sp, pool.score(t.name), cfg.alpha_bid), t.name, t))
            bid, _, spec = min(bids, key=lambda e: (e[0], e[1]))
            hours = _rent_hours_for(cfg, spec, work, task.cold_start_mi)
            return pool.hire(spec, PricingKind.SPOT, now, hours, rate=bid, bid=bid)

    spec = min(pool_types, key=lambda t: (t.price_on_demand, t.name))
    hours = _rent_hours_for(cfg, spec, work, task.cold_start_mi)
    return pool.hire(spec, PricingKind.ON_DEMAND, now, hours, rate=spec.price_on_demand)


def rent_reserved(pool: VMPool, task: Task, rcp: float, now: float,
                  cfg: SchedulerConfig, catalog: list[VMTypeSpec],
                  remaining_mi: float | None = None) -> VMInstance:
    work = remaining_mi if remaining_mi is not None else task.length_mi
    spec = choose_catalog_type(catalog, rcp, task.mem_req, lambda t: t.price_reserved)
    hours = _rent_hours_for(cfg, spec, work, task.cold_start_mi)
    return pool.hire(spec, PricingKind.RESERVED, now, hours, rate=spec.price_reserved)


def commit_assignment(pool: VMPool, rt: ReadyTask, vm: VMInstance, now: float) -> None:
    """Move the VM to busy and update the popularity/score bookkeeping."""
    pool.mark_busy(vm)
    vm.last_task_freq = pool.bump_freq(rt.task.task_type)
    vm.last_task_penalty = rt.task.cold_start_mi
    vm.last_use = now
    pool.add_score(vm.spec.name, rt.reward)


def renew_at_junction(pool: VMPool, needed_counts: dict[str, int], now: float,
                      cfg: SchedulerConfig, market: SpotMarket | None = None,
                      demand_task_types: set[str] = frozenset()
                      ) -> tuple[list[VMInstance], list[VMInstance]]:
    """Renew expiring free instances up to the per-type need, release the rest.

    Renewal keeps the warm environment (cache retention) and the original
    rate. Expiring spot instances renew only while the market is available
    at or below their bid.
    """
    renewed: list[VMInstance] = []
    released: list[VMInstance] = []
    by_type: dict[str, list[VMInstance]] = {}
    for vm in pool.expiring_at(now):
        by_type.setdefault(vm.spec.name, []).append(vm)
    for name in sorted(by_type):
        group = by_type[name]
        group.sort(key=lambda v: (0 if v.warm_type in demand_task_types else 1, -v.last_use, v.id))
        keep = min(len(group), max(0, needed_counts.get(name, 0)))
        for vm in group[:keep]:
            if vm.pricing_kind is PricingKind.SPOT and market is not None:
                avail, price = market.current.get(name, (False, 0.0))
                if not avail or price > vm.bid_price:
                    pool.remove(vm)
                    released.append(vm)
                    continue
            vm.rent_end += cfg.rent_hours * HOUR
            vm.billed_end = vm.rent_end
            renewed.append(vm)
        for vm in group[keep:]:
            pool.remove(vm)
            released.append(vm)
    return renewed, released


class DcdPolicy:
    """Algorithmic core of the DCD framework, driven batch by batch."""

    def __init__(self, cfg: SchedulerConfig, catalog: list[VMTypeSpec],
                 use_spot: bool = True, use_spot_prediction: bool = False):
        self.cfg = cfg
        self.catalog = catalog
        self.use_spot = use_spot
        self.use_spot_prediction = use_spot_prediction
        # Realtime hook: hands a task one of the planned reserved instances.
        self.bank_consume = None
        # Salt for the per-event reservation gate; set per run for seed isolation.
        self.gate_salt = ""

    def preferred_type(self, rt: ReadyTask, now: float, rate_of=None) -> VMTypeSpec:
        rcp = relative_compute_power(rt.task, rt.rd_abs, now, assume_cold=True,
                                     remaining_mi=rt.remaining_mi)
        return choose_catalog_type(self.catalog, rcp, rt.task.mem_req,
                                   rate_of or (lambda t: t.price_on_demand))

    def schedule_batch_realtime(self, queue: list[ReadyTask], pool: VMPool, now: float,
                                market: SpotMarket | None) -> list[Placement]:
        placements = []
        for rt in queue:
            rcp = relative_compute_power(rt.task, rt.rd_abs, now, assume_cold=True,
                                         remaining_mi=rt.remaining_mi)
            vm = select_in_stock_vm(pool, rt.task, rcp, rt.rd_abs, now, self.cfg,
                                    remaining_mi=rt.remaining_mi)
            if vm is None and self.bank_consume is not None:
                vm = self.bank_consume(rt, rcp, now)
            if vm is None:
                vm = rent_realtime(pool, rt.task, rcp, now,
                                   market if self.use_spot else None,
                                   self.cfg, self.catalog, use_spot=self.use_spot,
                                   remaining_mi=rt.remaining_mi)
            commit_assignment(pool, rt, vm, now)
            placements.append(Placement(rt, vm, rcp))
        return placements

    def gate_draw(self, rt: ReadyTask, now: float) -> float:
        """Uniform draw for the reservation gate, keyed by event identity.

        Keying on (salt, workflow, task, time) instead of consuming a shared
        stream keeps draws stable across probability settings, so raising
        reserved_prob only ever adds reservations (paired-comparison noise
        reduction); draws stay independent across events and seeds.
        """
        return random.Random(f"{self.gate_salt}|{rt.wf.id}|{rt.task.id}|{now:.6f}").random()

    def schedule_batch_predicted(self, queue: list[ReadyTask], pool: VMPool, now: float,
                                 rng: random.Random,
                                 spot_forecast: SpotTrace | None,
                                 reservations_out: list[PlannedReservation]) -> list[Placement]:
        """Predicted phase: pool exhaustion may trigger a reserved hire.

        Without a spot forecast the decision is a coin flip at
        ``reserved_prob``; with one, a type is reserved only while forecast
        spot arrivals A do not exceed the instances needed U. Declined tasks
        advance the predicted timeline without occupying pool capacity.
        """
        demand: dict[str, int] = {}
        if self.use_spot_prediction and spot_forecast is not None:
            for rt in queue:
                name = self.preferred_type(rt, now, lambda t: t.price_reserved).name
                demand[name] = demand.get(name, 0) + 1
        placements = []
        for rt in queue:
            rcp = relative_compute_power(rt.task, rt.rd_abs, now, assume_cold=True,
                                         remaining_mi=rt.remaining_mi)
            vm = select_in_stock_vm(pool, rt.task, rcp, rt.rd_abs, now, self.cfg,
                                    remaining_mi=rt.remaining_mi)
            if vm is None:
                reserve = False
                if self.use_spot_prediction and spot_forecast is not None:
                    spec = choose_catalog_type(self.catalog, rcp, rt.task.mem_req,
                                               lambda t: t.price_reserved)
                    arrivals = spot_forecast.available_count(spec.name, now, now + self.cfg.batch_len)
                    reserve = arrivals <= demand.get(spec.name, 0)
                else:
                    reserve = self.gate_draw(rt, now) < self.cfg.reserved_prob
                if reserve:
                    vm = rent_reserved(pool, rt.task, rcp, now, self.cfg, self.catalog,
                                       remaining_mi=rt.remaining_mi)
                    hours = round((vm.rent_end - vm.rent_start) / HOUR)
                    reservations_out.append(PlannedReservation(vm.spec.name, now, 1, hours))
            if vm is not None:
                commit_assignment(pool, rt, vm, now)
            placements.append(Placement(rt, vm, rcp))
        return placements


def dcd_batch_step(pool: VMPool, ready_queue: list[ReadyTask], now: float, mode: str,
                   cfg: SchedulerConfig, catalog: list[VMTypeSpec],
                   market: SpotMarket | None = None, rng: random.Random | None = None,
                   spot_forecast: SpotTrace | None = None,
                   reservations_out: list[PlannedReservation] | None = None,
                   use_spot: bool = True, use_spot_prediction: bool = False) -> list[Placement]:
    """One scheduling round: place every queued task or defer it explicitly.

    ``mode`` is "realtime" (renting always possible, at worst on-demand) or
    "predicted" (reserved hires gated as in the planning phase).
    """
    policy = DcdPolicy(cfg, catalog, use_spot=use_spot, use_spot_prediction=use_spot_prediction)
    if mode == "realtime":
        return policy.schedule_batch_realtime(ready_queue, pool, now, market)
    if mode == "predicted":
        return policy.schedule_batch_predicted(ready_queue, pool, now,
                                               rng or random.Random(0), spot_forecast,
                                               reservations_out if reservations_out is not None else [])
    raise DcdError(f"unknown batch mode {mode!r}")
