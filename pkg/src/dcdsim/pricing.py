"""VM catalog, instance lifecycle, execution-time and cost models, spot market access.

Billing is hourly: partial hours are charged as full hours, and a whole
rented window is charged regardless of utilization. Spot instances are
billed at their bid price up to the revocation instant, rounded up.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass

from .errors import DcdError
from .workflow import Task

HOUR = 3600.0
SPOT_CLIP_EPS = 1e-6

# Mid-tier catalog compute power; converts critical-path MI to a nominal
# execution time wherever a single reference machine is needed.
REFERENCE_CP = 22.4


class PricingKind(enum.Enum):
    RESERVED = "reserved"
    ON_DEMAND = "on_demand"
    SPOT = "spot"


@dataclass(frozen=True)
class VMTypeSpec:
    """One catalog entry: compute power (MIPS), memory (GiB) and hourly prices."""

    name: str
    compute_power: float
    memory: float
    price_on_demand: float
    price_reserved: float

    def validate(self) -> None:
        if self.compute_power <= 0 or self.memory <= 0:
            raise DcdError(f"vm type {self.name}: compute_power and memory must be > 0")
        if not 0 < self.price_reserved < self.price_on_demand:
            raise DcdError(f"vm type {self.name}: need 0 < reserved < on-demand price")

    def rate(self, kind: PricingKind) -> float:
        return self.price_reserved if kind is PricingKind.RESERVED else self.price_on_demand


@dataclass
class VMInstance:
    """A rented instance. Every hire gets a fresh id, even for the same machine type.

    ``warm_type`` is the task type whose environment is currently loaded;
    it survives renewals and is lost when the instance is released or
    revoked. ``billed_end`` is the rental end for billing purposes and is
    pulled back to the revocation instant for revoked spot instances.
    """

    id: int
    spec: VMTypeSpec
    pricing_kind: PricingKind
    rent_start: float
    rent_end: float
    rate: float
    warm_type: str | None = None
    last_use: float = 0.0
    last_task_freq: int = 0
    last_task_penalty: float = 0.0
    bid_price: float | None = None
    billed_end: float | None = None

    def __post_init__(self):
        if self.rent_end <= self.rent_start:
            raise DcdError(f"vm {self.id}: rent_end must be > rent_start")
        if self.pricing_kind is PricingKind.SPOT and self.bid_price is None:
            raise DcdError(f"vm {self.id}: spot instance needs a bid price")
        if self.billed_end is None:
            self.billed_end = self.rent_end

    def billed_hours(self) -> int:
        return max(0, math.ceil((self.billed_end - self.rent_start) / HOUR - 1e-9))


@dataclass
class CostBreakdown:
    reserved: float = 0.0
    on_demand: float = 0.0
    spot: float = 0.0

    @property
    def total(self) -> float:
        return self.reserved + self.on_demand + self.spot


def execution_seconds(work_mi: float, cold_start_mi: float, compute_power: float, cold: bool) -> float:
    """Seconds to run ``work_mi`` of task work, plus the environment load when cold."""
    return (work_mi + (cold_start_mi if cold else 0.0)) / compute_power


def execution_time(task: Task, vm_type: VMTypeSpec, cold: bool) -> float:
    """Total execution time of a task on a VM type; cold adds the environment load."""
    return execution_seconds(task.length_mi, task.cold_start_mi, vm_type.compute_power, cold)


def accrue_costs(instances: list[VMInstance]) -> CostBreakdown:
    """Sum hourly charges per pricing kind over closed/truncated rental windows."""
    out = CostBreakdown()
    for vm in instances:
        charge = vm.rate * vm.billed_hours()
        if vm.pricing_kind is PricingKind.RESERVED:
            out.reserved += charge
        elif vm.pricing_kind is PricingKind.ON_DEMAND:
            out.on_demand += charge
        else:
            out.spot += charge
    return out


def bid_price(dp: float, sp: float, cumulative_score: float, alpha: float) -> float:
    """Reward-guided bid: starts at the spot price and climbs towards on-demand.

    bid = DP - (DP - SP) * exp(-alpha * cumulative_score).
    """
    if sp >= dp:
        raise DcdError(f"spot price {sp} must be below on-demand price {dp}")
    if alpha <= 0:
        raise DcdError("alpha must be > 0")
    if cumulative_score < 0:
        raise DcdError("cumulative score must be >= 0")
    return dp - (dp - sp) * math.exp(-alpha * cumulative_score)


def revocation_check(instance: VMInstance, spot_price_now: float) -> bool:
    """A spot instance is revoked iff the market price strictly exceeds its bid."""
    if instance.pricing_kind is not PricingKind.SPOT:
        return False
    return spot_price_now > instance.bid_price


@dataclass(frozen=True)
class SpotSample:
    time: float
    price: float
    available: bool


class SpotTrace:
    """Per-type step function of posted spot prices with availability gaps."""

    def __init__(self, samples: dict[str, list[SpotSample]]):
        self.samples = samples
        self._times = {name: [s.time for s in rows] for name, rows in samples.items()}
        for name, rows in samples.items():
            for a, b in zip(rows, rows[1:]):
                if b.time <= a.time:
                    raise DcdError(f"spot trace for {name}: timestamps must strictly increase")

    def types(self) -> list[str]:
        return sorted(self.samples)

    def state_at(self, vm_type: str, t: float) -> tuple[bool, float]:
        """Step-function lookup: the last sample at or before t; unavailable before the first."""
        rows = self.samples.get(vm_type)
        if not rows:
            return False, 0.0
        i = bisect.bisect_right(self._times[vm_type], t) - 1
        if i < 0:
            return False, 0.0
        return rows[i].available, rows[i].price

    def max_time(self) -> float:
        return max((rows[-1].time for rows in self.samples.values() if rows), default=0.0)

    def events(self) -> list[tuple[float, str, float, bool]]:
        """All samples as (time, vm_type, price, available), in replay order."""
        out = [(s.time, name, s.price, s.available)
               for name, rows in sorted(self.samples.items()) for s in rows]
        out.sort(key=lambda e: (e[0], e[1]))
        return out

    def available_count(self, vm_type: str, t0: float, t1: float) -> int:
        """Number of available samples for a type in [t0, t1)."""
        rows = self.samples.get(vm_type, [])
        times = self._times.get(vm_type, [])
        lo = bisect.bisect_left(times, t0)
        hi = bisect.bisect_left(times, t1)
        return sum(1 for s in rows[lo:hi] if s.available)


def spot_state_at(trace: SpotTrace, vm_type: str, t: float) -> tuple[bool, float]:
    return trace.state_at(vm_type, t)


class SpotMarket:
    """Mutable view of current spot prices, advanced by the simulation clock."""

    def __init__(self, trace: SpotTrace | None):
        self.trace = trace
        self.current: dict[str, tuple[bool, float]] = {}

    def update(self, vm_type: str, price: float, available: bool) -> None:
        self.current[vm_type] = (available, price)

    def available(self, vm_type: str) -> bool:
        return self.current.get(vm_type, (False, 0.0))[0]

    def price(self, vm_type: str) -> float:
        return self.current.get(vm_type, (False, 0.0))[1]

    def clipped_price(self, spec: VMTypeSpec) -> float:
        """Current spot price, clipped just under the on-demand rate on trace anomalies."""
        sp = self.price(spec.name)
        if sp >= spec.price_on_demand:
            sp = spec.price_on_demand - SPOT_CLIP_EPS
        return sp
