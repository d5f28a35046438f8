"""Discrete-event simulation: batches, arrivals, execution, expiry, revocation.

A run has two phases. Phase A replays the predicted workload in
"predicted" mode and emits planned reservations; phase B replays the
actual workload in "realtime" mode with those reservations materialized
at their planned instants. The independent schedule validator re-checks
every run against the placement constraints.
"""

from __future__ import annotations

import copy
import enum
import heapq
import logging
import random
from dataclasses import dataclass, field

from .baselines import CewbPolicy, FaasCachePolicy, RandomPolicy
from .errors import ConfigError, DcdError
from .pricing import (HOUR, REFERENCE_CP, PricingKind, SpotMarket, SpotTrace, VMInstance,
                      VMTypeSpec, accrue_costs, execution_seconds, revocation_check)
from .scheduler import (DcdPolicy, PlannedReservation, ReadyTask, SchedulerConfig,
                        TIME_EPS, VMPool, choose_catalog_type,
                        relative_compute_power, renew_at_junction)
from .workflow import Workflow, annotate, critical_path_mi, ready_tasks

logger = logging.getLogger(__name__)

WORK_EPS = 1e-6


class EventKind(enum.IntEnum):
    """Tie-break order for events sharing a timestamp."""

    SPOT_PRICE_CHANGE = 0
    SPOT_REVOCATION = 1
    TASK_FINISH = 2
    RENTAL_EXPIRY = 3
    WORKFLOW_ARRIVAL = 4
    BATCH_TICK = 5


@dataclass(order=True)
class Event:
    time: float
    kind: EventKind
    seq: int
    payload: tuple = field(compare=False, default=())


@dataclass
class Segment:
    """One contiguous stretch of a task on one VM (resumes create new segments)."""

    workflow_id: str
    task_id: str
    vm_id: int
    vm_type: str
    pricing_kind: str
    start: float
    finish: float
    cold: bool
    bid_price: float | None
    work_mi: float
    cold_mi: float
    truncated: bool = False


@dataclass
class TaskOutcome:
    first_start: float | None = None
    last_finish: float | None = None
    segments: int = 0
    cold_starts: int = 0
    completed: bool = False

    @property
    def resumptions(self) -> int:
        return max(0, self.segments - 1)


@dataclass
class WorkflowOutcome:
    finish: float | None = None
    met_deadline: bool = False


@dataclass
class Violation:
    constraint: int
    message: str


@dataclass
class RunRecord:
    """Everything a finished run produced, plus the profit accounting."""

    policy_label: str
    seed: int
    segments: list[Segment] = field(default_factory=list)
    tasks: dict[tuple[str, str], TaskOutcome] = field(default_factory=dict)
    workflows: dict[str, WorkflowOutcome] = field(default_factory=dict)
    instances: list[VMInstance] = field(default_factory=list)
    planned_reservations: list[PlannedReservation] = field(default_factory=list)
    c_res: float = 0.0
    c_dem: float = 0.0
    c_spot: float = 0.0
    reward_sum: float = 0.0
    profit: float = 0.0
    deadline_hit_rate: float = 0.0
    cold_starts: int = 0
    revocations: int = 0
    horizon_truncated: bool = False

    @property
    def cost_total(self) -> float:
        return self.c_res + self.c_dem + self.c_spot


@dataclass
class Checkpoint:
    """Unfinished work saved when a spot instance is revoked mid-task."""

    workflow_id: str
    task_id: str
    remaining_mi: float
    saved_at: float


@dataclass
class RunConfig:
    """Full per-run configuration: policy selection, pricing modes and tunables."""

    policy: str = "dcd"              # dcd | random | faascache | cewb
    use_reserved: bool = True        # phase A planning + reserved instances
    use_spot: bool = True            # spot renting in the realtime phase
    use_spot_prediction: bool = False
    sched: SchedulerConfig = field(default_factory=SchedulerConfig)
    seed: int = 1
    hard_horizon: float = 0.0        # 0 disables truncation
    pred_mean_pct: float = 0.0       # arrival-error model, fraction of critical-path time
    pred_std_pct: float = 0.0

    def validate(self) -> None:
        if self.policy not in ("dcd", "random", "faascache", "cewb"):
            raise ConfigError(f"unknown policy {self.policy!r}")
        self.sched.validate()

    def label(self) -> str:
        if self.policy != "dcd":
            return self.policy
        if not self.use_reserved and not self.use_spot:
            return "dcd-d"
        if self.use_reserved and not self.use_spot:
            return "dcd-rd"
        if self.use_reserved and self.use_spot and self.use_spot_prediction:
            return "dcd-rdsp"
        if self.use_reserved and self.use_spot:
            return "dcd-rds"
        return "dcd-ds"


@dataclass
class _Running:
    rt: ReadyTask
    vm: VMInstance | None
    start: float
    finish: float
    cold: bool
    work_mi: float
    cold_mi: float
    token: int


@dataclass
class _BankEntry:
    """A paid-for planned reservation waiting to be taken over by a task."""

    spec: VMTypeSpec
    start: float
    hours: int
    idx: int


class _Simulation:
    """Single-phase event loop; one instance per phase, single-threaded."""

    def __init__(self, workflows: list[Workflow], catalog: list[VMTypeSpec],
                 cfg: RunConfig, mode: str, rng: random.Random,
                 spot_trace: SpotTrace | None = None,
                 spot_forecast: SpotTrace | None = None,
                 planned: list[PlannedReservation] | None = None,
                 preseed: list[tuple[str, int]] | None = None):
        self.mode = mode
        self.cfg = cfg
        self.sched = cfg.sched
        self.catalog = catalog
        self.catalog_by_name = {t.name: t for t in catalog}
        self.rng = rng
        self.workflows = {wf.id: wf for wf in workflows}
        for wf in workflows:
            annotate(wf, cfg.sched.lam)
        self.uses_spot = mode == "realtime" and cfg.use_spot and cfg.policy in ("dcd", "cewb")
        self.market = SpotMarket(spot_trace) if self.uses_spot else None
        self.spot_trace = spot_trace if self.uses_spot else None
        self.spot_forecast = spot_forecast
        self.pool = VMPool()
        self.heap: list[Event] = []
        self.seq = 0
        self.now = 0.0
        self.arrived: set[str] = set()
        self.active: dict[str, Workflow] = {}
        self.completed: set[tuple[str, str]] = set()
        self.done_count: dict[str, int] = {wf.id: 0 for wf in workflows}
        self.in_flight: dict[tuple[str, str], _Running] = {}
        self.vm_to_task: dict[int, tuple[str, str]] = {}
        self.checkpoints: dict[tuple[str, str], Checkpoint] = {}
        self.segments: list[Segment] = []
        self.tasks: dict[tuple[str, str], TaskOutcome] = {}
        self.wf_finish: dict[str, float] = {}
        self.cold_starts = 0
        self.revocations = 0
        self.token = 0
        self.reservations_out: list[PlannedReservation] = []
        self.horizon_truncated = False
        self.policy = self._make_policy()
        self.bank: list[_BankEntry] = []
        for res in planned or []:
            spec = self.catalog_by_name.get(res.vm_type)
            if spec is None:
                raise ConfigError(f"planned reservation references unknown type {res.vm_type}")
            for _ in range(res.count):
                self.bank.append(_BankEntry(spec, res.start_hour, res.hours, len(self.bank)))
        if isinstance(self.policy, DcdPolicy):
            self.policy.bank_consume = self._consume_bank
        self._demand_cache: tuple[float, dict[str, int], set[str]] | None = None
        self._ledger_seen = 0
        self._tick_scheduled = -1.0
        for name, hours in preseed or []:
            spec = self.catalog_by_name.get(name)
            if spec is None:
                raise ConfigError(f"preseed references unknown type {name}")
            self.pool.hire(spec, PricingKind.ON_DEMAND, 0.0, hours,
                           rate=spec.price_on_demand)

    def _make_policy(self):
        if self.cfg.policy == "dcd":
            policy = DcdPolicy(self.sched, self.catalog, use_spot=self.cfg.use_spot,
                               use_spot_prediction=self.cfg.use_spot_prediction)
            policy.gate_salt = str(self.cfg.seed)
            return policy
        if self.cfg.policy == "random":
            return RandomPolicy(self.sched, self.catalog, self.rng)
        if self.cfg.policy == "faascache":
            return FaasCachePolicy(self.sched, self.catalog)
        if self.cfg.policy == "cewb":
            return CewbPolicy(self.sched, self.catalog)
        raise ConfigError(f"unknown policy {self.cfg.policy!r}")

    def _push(self, time: float, kind: EventKind, payload: tuple = ()) -> None:
        heapq.heappush(self.heap, Event(time, kind, self.seq, payload))
        self.seq += 1

    # -- event handlers ------------------------------------------------------

    def run(self) -> None:
        for wf in self.workflows.values():
            self._push(wf.arrival, EventKind.WORKFLOW_ARRIVAL, (wf.id,))
        if self.spot_trace is not None:
            for t, name, price, avail in self.spot_trace.events():
                self._push(t, EventKind.SPOT_PRICE_CHANGE, (name, price, avail))
        self._push(0.0, EventKind.BATCH_TICK)
        self._tick_scheduled = 0.0
        while self.heap:
            self._schedule_new_expiries()
            ev = heapq.heappop(self.heap)
            if self.cfg.hard_horizon > 0 and ev.time > self.cfg.hard_horizon:
                self.horizon_truncated = True
                break
            self.now = ev.time
            if ev.kind is EventKind.WORKFLOW_ARRIVAL:
                self._on_arrival(*ev.payload)
            elif ev.kind is EventKind.BATCH_TICK:
                self._on_tick()
            elif ev.kind is EventKind.TASK_FINISH:
                self._on_finish(*ev.payload)
            elif ev.kind is EventKind.RENTAL_EXPIRY:
                self._on_expiry(*ev.payload)
            elif ev.kind is EventKind.SPOT_PRICE_CHANGE:
                self._on_price_change(*ev.payload)
            elif ev.kind is EventKind.SPOT_REVOCATION:
                self._on_revocation(*ev.payload)
            if self._finished():
                break
        self._flush_bank()

    def _schedule_new_expiries(self) -> None:
        """Give every freshly hired instance its rental-expiry event."""
        while self._ledger_seen < len(self.pool.all_instances):
            vm = self.pool.all_instances[self._ledger_seen]
            self._ledger_seen += 1
            self._push(vm.rent_end, EventKind.RENTAL_EXPIRY, (vm.id, vm.rent_end))

    def _finished(self) -> bool:
        if self.in_flight:
            return False
        if any(self.done_count[wf.id] < len(wf.tasks) for wf in self.workflows.values()):
            return False
        return True

    def _on_arrival(self, wf_id: str) -> None:
        self.arrived.add(wf_id)
        wf = self.workflows[wf_id]
        if self.done_count[wf_id] < len(wf.tasks):
            self.active[wf_id] = wf

    def _ready_queue(self) -> list[ReadyTask]:
        out = []
        pairs = ready_tasks(list(self.active.values()), self.completed,
                            exclude=set(self.in_flight))
        for wf, task in pairs:
            ann = wf.annotations
            key = (wf.id, task.id)
            ckpt = self.checkpoints.get(key)
            out.append(ReadyTask(wf=wf, task=task,
                                 remaining_mi=ckpt.remaining_mi if ckpt else task.length_mi,
                                 rd_abs=wf.arrival + ann.rel_deadline[task.id],
                                 reward=ann.task_reward[task.id]))
        return out

    def _consume_bank(self, rt: ReadyTask, rcp: float, now: float) -> VMInstance | None:
        """Take over the cheapest started planned reservation that fits the task.

        The reservation is already paid from its planned start; the task can
        only use it once its window has opened and still covers the run.
        """
        best = None
        best_key = None
        for entry in self.bank:
            if entry.start > now + TIME_EPS:
                continue
            spec = entry.spec
            if spec.memory + 1e-12 < rt.task.mem_req:
                continue
            if spec.compute_power + 1e-12 < rcp:
                continue
            exec_s = execution_seconds(rt.remaining_mi, rt.task.cold_start_mi,
                                       spec.compute_power, cold=True)
            if now + exec_s > entry.start + entry.hours * HOUR + TIME_EPS:
                continue
            key = (spec.price_reserved, spec.name, entry.start, entry.idx)
            if best_key is None or key < best_key:
                best, best_key = entry, key
        if best is None:
            return None
        self.bank.remove(best)
        return self.pool.hire(best.spec, PricingKind.RESERVED, best.start, best.hours,
                              rate=best.spec.price_reserved)

    def _flush_bank(self) -> None:
        """Bill every reservation the run never took over (no cancellation)."""
        for entry in self.bank:
            self.pool.register_unpooled(entry.spec, PricingKind.RESERVED, entry.start,
                                        entry.hours, entry.spec.price_reserved)
        self.bank.clear()

    def _promote_bank(self) -> None:
        """Move planned reservations whose window has opened into the free pool.

        Under prediction error a reservation may open before or after its
        demand; once its start tick has passed unconsumed it serves the pool
        like any other paid reserved instance.
        """
        due = [e for e in self.bank if e.start <= self.now + TIME_EPS]
        for entry in due:
            self.bank.remove(entry)
            if entry.start + entry.hours * HOUR <= self.now + TIME_EPS:
                # Window already elapsed unused; billed but never pooled.
                self.pool.register_unpooled(entry.spec, PricingKind.RESERVED, entry.start,
                                            entry.hours, entry.spec.price_reserved)
            else:
                self.pool.hire(entry.spec, PricingKind.RESERVED, entry.start, entry.hours,
                               rate=entry.spec.price_reserved)

    def _on_tick(self) -> None:
        queue = self._ready_queue()
        if queue:
            if self.mode == "predicted":
                placements = self.policy.schedule_batch_predicted(
                    queue, self.pool, self.now, self.rng, self.spot_forecast,
                    self.reservations_out)
            else:
                placements = self.policy.schedule_batch_realtime(
                    queue, self.pool, self.now, self.market)
            for pl in placements:
                if pl.vm is None:
                    self._start_phantom(pl.rt)
                else:
                    self._start_segment(pl.rt, pl.vm)
        if self.mode == "realtime" and self.bank:
            self._promote_bank()
        if self._work_pending():
            nxt = self.now + self.sched.batch_len
            if nxt > self._tick_scheduled:
                self._push(nxt, EventKind.BATCH_TICK)
                self._tick_scheduled = nxt

    def _work_pending(self) -> bool:
        return any(self.done_count[wf.id] < len(wf.tasks) for wf in self.workflows.values())

    def _start_segment(self, rt: ReadyTask, vm: VMInstance) -> None:
        cold = vm.warm_type != rt.task.task_type
        vm.warm_type = rt.task.task_type
        cold_mi = rt.task.cold_start_mi if cold else 0.0
        exec_s = (rt.remaining_mi + cold_mi) / vm.spec.compute_power
        finish = self.now + exec_s
        if finish > vm.rent_end + 1e-6:
            raise DcdError(f"vm {vm.id}: assignment does not fit the rental window")
        self.token += 1
        run = _Running(rt, vm, self.now, finish, cold, rt.remaining_mi, cold_mi, self.token)
        key = rt.key
        self.in_flight[key] = run
        self.vm_to_task[vm.id] = key
        if cold:
            self.cold_starts += 1
        rec = self.tasks.setdefault(key, TaskOutcome())
        if rec.first_start is None:
            rec.first_start = self.now
        self._push(finish, EventKind.TASK_FINISH, (key, self.token))

    def _start_phantom(self, rt: ReadyTask) -> None:
        """Predicted-mode placeholder run: advances the timeline, uses no pool VM."""
        spec = choose_catalog_type(
            self.catalog,
            relative_compute_power(rt.task, rt.rd_abs, self.now, assume_cold=True,
                                   remaining_mi=rt.remaining_mi),
            rt.task.mem_req, lambda t: t.price_reserved)
        exec_s = execution_seconds(rt.remaining_mi, rt.task.cold_start_mi,
                                   spec.compute_power, cold=True)
        self.token += 1
        key = rt.key
        self.in_flight[key] = _Running(rt, None, self.now, self.now + exec_s, True,
                                       rt.remaining_mi, rt.task.cold_start_mi, self.token)
        self._push(self.now + exec_s, EventKind.TASK_FINISH, (key, self.token))

    def _on_finish(self, key: tuple[str, str], token: int) -> None:
        run = self.in_flight.get(key)
        if run is None or run.token != token:
            return
        del self.in_flight[key]
        self._complete(run, self.now)

    def _complete(self, run: _Running, end: float) -> None:
        key = run.rt.key
        rec = self.tasks.setdefault(key, TaskOutcome())
        if run.vm is not None:
            vm = run.vm
            self.segments.append(Segment(
                workflow_id=key[0], task_id=key[1], vm_id=vm.id, vm_type=vm.spec.name,
                pricing_kind=vm.pricing_kind.value, start=run.start, finish=end,
                cold=run.cold, bid_price=vm.bid_price, work_mi=run.work_mi,
                cold_mi=run.cold_mi))
            rec.segments += 1
            rec.cold_starts += int(run.cold)
            vm.last_use = end
            self.vm_to_task.pop(vm.id, None)
            if self.pool.contains(vm.id):
                self.pool.mark_free(vm)
        rec.last_finish = end
        rec.completed = True
        self.completed.add(key)
        self.checkpoints.pop(key, None)
        wf_id = key[0]
        self.done_count[wf_id] += 1
        wf = self.workflows[wf_id]
        if self.done_count[wf_id] == len(wf.tasks):
            self.wf_finish[wf_id] = end
            self.active.pop(wf_id, None)

    def _pending_demand(self) -> tuple[dict[str, int], set[str]]:
        """Per-VM-type count of upcoming tasks and the task types they carry."""
        if self._demand_cache is not None and self._demand_cache[0] == self.now:
            return self._demand_cache[1], self._demand_cache[2]
        rate = (lambda t: t.price_reserved) if self.mode == "predicted" else \
               (lambda t: t.price_on_demand)
        counts: dict[str, int] = {}
        types: set[str] = set()
        for wf in self.active.values():
            ann = wf.annotations
            for tid, task in wf.tasks.items():
                key = (wf.id, tid)
                if key in self.completed or key in self.in_flight:
                    continue
                types.add(task.task_type)
                ckpt = self.checkpoints.get(key)
                remaining = ckpt.remaining_mi if ckpt else task.length_mi
                rcp = relative_compute_power(task, wf.arrival + ann.rel_deadline[tid],
                                             self.now, assume_cold=True,
                                             remaining_mi=remaining)
                try:
                    spec = choose_catalog_type(self.catalog, rcp, task.mem_req, rate)
                except DcdError:
                    continue
                counts[spec.name] = counts.get(spec.name, 0) + 1
        self._demand_cache = (self.now, counts, types)
        return counts, types

    def _on_expiry(self, vm_id: int, end_snapshot: float) -> None:
        vm = self.pool.free.get(vm_id)
        if vm is None or abs(vm.rent_end - end_snapshot) > 1e-6:
            return
        counts, task_types = self._pending_demand()
        needed: dict[str, int] = {}
        for name, cnt in counts.items():
            other_free = sum(1 for v in self.pool.free_vms()
                             if v.spec.name == name and abs(v.rent_end - self.now) > 1e-6)
            needed[name] = max(0, cnt - other_free)
        renewed, _released = renew_at_junction(self.pool, needed, self.now, self.sched,
                                               self.market, task_types)
        for r in renewed:
            self._push(r.rent_end, EventKind.RENTAL_EXPIRY, (r.id, r.rent_end))

    def _on_price_change(self, vm_type: str, price: float, available: bool) -> None:
        if self.market is None:
            return
        self.market.update(vm_type, price, available)
        for vm in self.pool.spot_instances(vm_type):
            if revocation_check(vm, price):
                self._push(self.now, EventKind.SPOT_REVOCATION, (vm.id, price))

    def _on_revocation(self, vm_id: int, price: float) -> None:
        vm = self.pool.free.get(vm_id) or self.pool.busy.get(vm_id)
        if vm is None or not revocation_check(vm, price):
            return
        self.revocations += 1
        vm.billed_end = max(self.now, vm.rent_start)
        key = self.vm_to_task.pop(vm_id, None)
        self.pool.remove(vm)
        if key is None:
            return
        run = self.in_flight.pop(key)
        elapsed_mi = (self.now - run.start) * vm.spec.compute_power
        cold_spent = min(elapsed_mi, run.cold_mi)
        work_done = max(0.0, elapsed_mi - run.cold_mi)
        remaining = run.work_mi - work_done
        if remaining <= WORK_EPS:
            self._complete(run, self.now)
            return
        self.segments.append(Segment(
            workflow_id=key[0], task_id=key[1], vm_id=vm.id, vm_type=vm.spec.name,
            pricing_kind=vm.pricing_kind.value, start=run.start, finish=self.now,
            cold=run.cold, bid_price=vm.bid_price, work_mi=work_done,
            cold_mi=cold_spent, truncated=True))
        rec = self.tasks.setdefault(key, TaskOutcome())
        rec.segments += 1
        rec.cold_starts += int(run.cold)
        # Cold-start progress is not checkpointable: only task work survives.
        self.checkpoints[key] = Checkpoint(key[0], key[1], remaining, self.now)


def plan_reserved(predicted: list[Workflow], spot_prediction: SpotTrace | None,
                  cfg: RunConfig, rng: random.Random,
                  catalog: list[VMTypeSpec]) -> list[PlannedReservation]:
    """Run the predicted phase and merge its reserved hires into a plan."""
    sim = _Simulation(predicted, catalog, cfg, mode="predicted", rng=rng,
                      spot_forecast=spot_prediction if cfg.use_spot_prediction else None)
    sim.run()
    merged: dict[tuple[float, str, int], int] = {}
    for res in sim.reservations_out:
        key = (res.start_hour, res.vm_type, res.hours)
        merged[key] = merged.get(key, 0) + res.count
    return [PlannedReservation(vm_type=k[1], start_hour=k[0], count=v, hours=k[2])
            for k, v in sorted(merged.items())]


def _clone_workflows(workflows: list[Workflow]) -> list[Workflow]:
    return [copy.deepcopy(wf) for wf in workflows]


def make_predicted_arrivals(actual: list[Workflow], mean_pct: float, std_pct: float,
                            seed: int, reference_cp: float = REFERENCE_CP) -> list[Workflow]:
    """Shift arrivals by a Gaussian error scaled to critical-path execution time.

    The unit-normal draw per workflow is fixed by the seed, so raising the
    std widens every shift monotonically. Deadlines move with their
    arrivals; arrivals clamp at zero.
    """
    rng = random.Random(f"pred-{seed}")
    out = []
    for wf in sorted(actual, key=lambda w: w.id):
        t_ref = critical_path_mi(wf) / reference_cp
        shift = mean_pct * t_ref + std_pct * t_ref * rng.gauss(0.0, 1.0)
        clone = copy.deepcopy(wf)
        new_arrival = max(0.0, wf.arrival + shift)
        clone.deadline = new_arrival + wf.d_rel
        clone.arrival = new_arrival
        out.append(clone)
    return out


def run(workloads_actual: list[Workflow], workloads_predicted: list[Workflow] | None,
        catalog: list[VMTypeSpec], spot_trace: SpotTrace | None,
        spot_prediction: SpotTrace | None, cfg: RunConfig,
        preseed: list[tuple[str, int]] | None = None) -> RunRecord:
    """Execute one full simulation and return its record.

    Phase A (reserved planning) runs only for the DCD policy with reserved
    pricing enabled; when no predicted workload is supplied the actual one
    stands in as a perfect prediction.
    """
    cfg.validate()
    if not catalog:
        raise ConfigError("empty VM catalog")
    for spec in catalog:
        spec.validate()
    if len({wf.id for wf in workloads_actual}) != len(workloads_actual):
        raise ConfigError("duplicate workflow ids in workload")
    wants_spot = cfg.use_spot and cfg.policy in ("dcd", "cewb")
    if wants_spot and spot_trace is not None and workloads_actual:
        span = max(wf.deadline for wf in workloads_actual)
        if spot_trace.max_time() < span:
            raise ConfigError(
                f"spot trace horizon {spot_trace.max_time()} shorter than workload span {span}")

    planned: list[PlannedReservation] = []
    if cfg.policy == "dcd" and cfg.use_reserved:
        predicted = workloads_predicted if workloads_predicted is not None \
            else _clone_workflows(workloads_actual)
        planned = plan_reserved(predicted, spot_prediction, cfg,
                                random.Random(f"{cfg.seed}-predicted"), catalog)

    sim = _Simulation(workloads_actual, catalog, cfg, mode="realtime",
                      rng=random.Random(f"{cfg.seed}-realtime"),
                      spot_trace=spot_trace, planned=planned, preseed=preseed)
    sim.run()

    record = RunRecord(policy_label=cfg.label(), seed=cfg.seed)
    record.segments = sim.segments
    record.tasks = sim.tasks
    record.instances = sim.pool.all_instances
    record.planned_reservations = planned
    record.cold_starts = sim.cold_starts
    record.revocations = sim.revocations
    record.horizon_truncated = sim.horizon_truncated
    for wf in workloads_actual:
        finish = sim.wf_finish.get(wf.id)
        met = finish is not None and finish <= wf.deadline + TIME_EPS
        record.workflows[wf.id] = WorkflowOutcome(finish=finish, met_deadline=met)
        if met:
            record.reward_sum += wf.reward
    costs = accrue_costs(record.instances)
    record.c_res, record.c_dem, record.c_spot = costs.reserved, costs.on_demand, costs.spot
    record.profit = record.reward_sum - costs.total
    n = len(workloads_actual)
    record.deadline_hit_rate = (
        sum(1 for o in record.workflows.values() if o.met_deadline) / n if n else 0.0)
    logger.info("run %s seed=%d profit=%.4f reward=%.4f cost=%.4f hits=%.3f",
                record.policy_label, cfg.seed, record.profit, record.reward_sum,
                costs.total, record.deadline_hit_rate)
    return record


def profit(record: RunRecord) -> float:
    """Total reward of deadline-met workflows minus the full renting cost."""
    costs = accrue_costs(record.instances)
    return record.reward_sum - costs.total


def validate_schedule(record: RunRecord, workloads: list[Workflow],
                      instances: list[VMInstance] | None = None) -> list[Violation]:
    """Independently re-check the placement constraints on a finished run.

    Checks, per task and instance: dependency order, at most one VM per
    task at a time, memory fit, no overlap per VM, segments inside rental
    windows, and a single pricing kind per instance. Violations are data,
    not exceptions.
    """
    eps = 1e-6
    violations: list[Violation] = []
    instances = instances if instances is not None else record.instances
    by_vm_id = {vm.id: vm for vm in instances}
    wf_by_id = {wf.id: wf for wf in workloads}

    segs_by_task: dict[tuple[str, str], list[Segment]] = {}
    segs_by_vm: dict[int, list[Segment]] = {}
    for seg in record.segments:
        segs_by_task.setdefault((seg.workflow_id, seg.task_id), []).append(seg)
        segs_by_vm.setdefault(seg.vm_id, []).append(seg)

    # (7) every predecessor finishes before its successor starts
    for wf in workloads:
        for u, v in wf.edges:
            su, sv = segs_by_task.get((wf.id, u)), segs_by_task.get((wf.id, v))
            if not su or not sv:
                continue
            ft_u = max(s.finish for s in su)
            st_v = min(s.start for s in sv)
            if ft_u > st_v + eps:
                violations.append(Violation(7, f"C7: {wf.id}/{u} finishes {ft_u} after "
                                               f"{wf.id}/{v} starts {st_v}"))

    for key, segs in sorted(segs_by_task.items()):
        ordered = sorted(segs, key=lambda s: s.start)
        # (8) resume segments run one at a time, each on a single VM
        for a, b in zip(ordered, ordered[1:]):
            if a.finish > b.start + eps:
                violations.append(Violation(8, f"C8: task {key} overlaps itself on "
                                               f"vms {a.vm_id},{b.vm_id}"))
        # (9) the hosting VM offers at least the required memory
        wf = wf_by_id.get(key[0])
        task = wf.tasks.get(key[1]) if wf else None
        for seg in ordered:
            vm = by_vm_id.get(seg.vm_id)
            if vm is None:
                violations.append(Violation(11, f"C11: segment of {key} on unknown vm {seg.vm_id}"))
                continue
            if task is not None and vm.spec.memory + eps < task.mem_req:
                violations.append(Violation(9, f"C9: task {key} needs {task.mem_req} GiB, "
                                               f"vm {vm.id} has {vm.spec.memory}"))

    # (10) one task at a time per instance
    for vm_id, segs in sorted(segs_by_vm.items()):
        ordered = sorted(segs, key=lambda s: s.start)
        for a, b in zip(ordered, ordered[1:]):
            if a.finish > b.start + eps:
                violations.append(Violation(10, f"C10: vm {vm_id} runs {a.task_id} and "
                                                f"{b.task_id} concurrently"))
        # (11) segments stay within the rented (and billed) window
        vm = by_vm_id.get(vm_id)
        if vm is None:
            continue
        for seg in ordered:
            if seg.start < vm.rent_start - eps or seg.finish > vm.billed_end + eps:
                violations.append(Violation(11, f"C11: vm {vm_id} segment "
                                                f"[{seg.start},{seg.finish}] outside window "
                                                f"[{vm.rent_start},{vm.billed_end}]"))

    # (12) each instance has exactly one pricing kind, with a sane spot bid
    for vm in instances:
        if not isinstance(vm.pricing_kind, PricingKind):
            violations.append(Violation(12, f"C12: vm {vm.id} has no valid pricing kind"))
            continue
        if vm.pricing_kind is PricingKind.SPOT:
            if vm.bid_price is None or vm.bid_price > vm.spec.price_on_demand + eps:
                violations.append(Violation(12, f"C12: vm {vm.id} spot bid "
                                                f"{vm.bid_price} invalid"))
        elif vm.bid_price is not None:
            violations.append(Violation(12, f"C12: vm {vm.id} carries a bid but is "
                                            f"{vm.pricing_kind.value}"))
    return violations
