"""Parameter-sweep experiments: workflow scaling, spot density, price ratio,
prediction error and reserved probability, each aggregated over seeds.

Every sweep runs the cross product of values x policies x seeds on a
shared per-seed workload (common random numbers keep policy comparisons
paired) and reports mean and sample standard deviation per cell.
"""

from __future__ import annotations

import csv
import logging
import statistics
from dataclasses import dataclass, replace

from . import engine
from .engine import RunConfig, make_predicted_arrivals
from .errors import ConfigError
from .pricing import SpotTrace, VMTypeSpec
from .scheduler import SchedulerConfig
from .synth import SyntheticSpec, generate_spot_trace, generate_synthetic
from .workflow import Workflow

logger = logging.getLogger(__name__)

EXPERIMENTS = ("scale", "spot_density", "price_ratio", "pred_error", "reserved_prob")

SWEEP_HEADER = ["experiment", "value", "policy", "metric", "mean", "std", "n_seeds"]

POLICY_LABELS = ("dcd-d", "dcd-rd", "dcd-rds", "dcd-rdsp", "random", "faascache", "cewb")

DEFAULT_POLICIES = {
    "scale": ["dcd-d", "faascache", "random"],
    "spot_density": ["dcd-rd", "dcd-rds"],
    "price_ratio": ["dcd-d", "dcd-rd", "dcd-rds"],
    "pred_error": ["dcd-rdsp"],
    "reserved_prob": ["dcd-rds"],
}

DEFAULT_VALUES = {
    "scale": [100.0, 200.0, 400.0],
    "spot_density": [0.10, 0.20, 1.00],
    "price_ratio": [1.2, 1.5, 2.0, 3.0],
    "pred_error": [0.0, 0.2, 0.4],
    "reserved_prob": [0.0, 0.25, 0.5, 0.75, 1.0],
}


@dataclass
class FixtureOptions:
    """Shared experiment fixture: workload shape, trace shape and scheduler tuning."""

    n_workflows: int = 100
    arrival_window_s: float = 10800.0      # 3 hours of submissions
    arrival_bursts: int = 0
    burst_width_s: float = 900.0
    tasks_min: int = 4
    tasks_max: int = 8
    length_mi_min: float = 6000.0
    length_mi_max: float = 36000.0
    deadline_factor_min: float = 1.8
    deadline_factor_max: float = 6.5
    spot_density: float = 0.2
    spot_price_lo: float = 0.25
    spot_price_hi: float = 0.45
    spot_volatility: float = 0.005
    alpha_bid: float = 2e-7                # bids climb over cumulative rewards this size
    reserved_prob: float = 0.7
    pred_std_pct: float = 0.0
    batch_len: float = 300.0

    def trace_horizon_s(self) -> float:
        """Covers the latest possible deadline of any generated workflow."""
        worst_crit = self.tasks_max * self.length_mi_max / 22.4
        return self.arrival_window_s + self.deadline_factor_max * worst_crit + 3600.0


def fixture_workload(opts: FixtureOptions, seed: int, n: int | None = None) -> list[Workflow]:
    spec = SyntheticSpec(arrival_window_s=opts.arrival_window_s,
                         arrival_bursts=opts.arrival_bursts,
                         burst_width_s=opts.burst_width_s,
                         tasks_min=opts.tasks_min, tasks_max=opts.tasks_max,
                         length_mi_min=opts.length_mi_min, length_mi_max=opts.length_mi_max,
                         deadline_factor_min=opts.deadline_factor_min,
                         deadline_factor_max=opts.deadline_factor_max)
    return generate_synthetic(n if n is not None else opts.n_workflows,
                              shape="mixed", seed=seed, spec=spec)


def default_fixture(experiment: str) -> FixtureOptions:
    """Per-experiment fixture tuning.

    The reserved-probability study needs bursty demand with long tasks so
    that arrival-prediction error can strand reservations in quiet hours,
    and a thin spot market so reserved savings dominate the noise.
    """
    if experiment == "reserved_prob":
        return FixtureOptions(n_workflows=120, arrival_window_s=28800.0,
                              arrival_bursts=4, burst_width_s=900.0,
                              length_mi_min=12000.0, length_mi_max=72000.0,
                              spot_density=0.1)
    if experiment == "pred_error":
        return FixtureOptions(n_workflows=100, arrival_window_s=14400.0,
                              arrival_bursts=4, burst_width_s=900.0,
                              length_mi_min=12000.0, length_mi_max=72000.0)
    return FixtureOptions()


def fixture_trace(opts: FixtureOptions, catalog: list[VMTypeSpec], seed: int,
                  density: float | None = None) -> SpotTrace:
    horizon = opts.trace_horizon_s()
    return generate_spot_trace(catalog, horizon_s=horizon,
                               density=density if density is not None else opts.spot_density,
                               seed=seed, price_lo=opts.spot_price_lo,
                               price_hi=opts.spot_price_hi,
                               volatility=opts.spot_volatility)


def config_for(label: str, opts: FixtureOptions, seed: int,
               pred_std_pct: float | None = None) -> RunConfig:
    """Translate a policy label into a run configuration."""
    if label not in POLICY_LABELS:
        raise ConfigError(f"unknown policy label {label!r}")
    sched = SchedulerConfig(alpha_bid=opts.alpha_bid, reserved_prob=opts.reserved_prob,
                            batch_len=opts.batch_len)
    cfg = RunConfig(policy="dcd", sched=sched, seed=seed,
                    pred_std_pct=pred_std_pct if pred_std_pct is not None else opts.pred_std_pct)
    if label == "dcd-d":
        cfg.use_reserved, cfg.use_spot = False, False
    elif label == "dcd-rd":
        cfg.use_reserved, cfg.use_spot = True, False
    elif label == "dcd-rds":
        cfg.use_reserved, cfg.use_spot = True, True
    elif label == "dcd-rdsp":
        cfg.use_reserved, cfg.use_spot, cfg.use_spot_prediction = True, True, True
    else:
        cfg.policy = label
        cfg.use_reserved = False
        cfg.use_spot = label == "cewb"
    return cfg


def run_cell(label: str, opts: FixtureOptions, seed: int, catalog: list[VMTypeSpec],
             workload: list[Workflow], trace: SpotTrace | None,
             pred_std_pct: float | None = None) -> engine.RunRecord:
    cfg = config_for(label, opts, seed, pred_std_pct)
    predicted = None
    std = cfg.pred_std_pct
    if cfg.policy == "dcd" and cfg.use_reserved and (std or cfg.pred_mean_pct):
        predicted = make_predicted_arrivals(workload, cfg.pred_mean_pct, std, seed)
    forecast = trace if cfg.use_spot_prediction else None
    return engine.run(workload, predicted, catalog, trace, forecast, cfg)


def _scaled_catalog(catalog: list[VMTypeSpec], ratio: float) -> list[VMTypeSpec]:
    return [replace(t, price_on_demand=ratio * t.price_reserved) for t in catalog]


def run_sweep(experiment: str, catalog: list[VMTypeSpec],
              opts: FixtureOptions | None = None,
              values: list[float] | None = None,
              policies: list[str] | None = None,
              seeds: list[int] | None = None) -> list[dict]:
    """Run one experiment and aggregate each (value, policy) cell over seeds."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; pick one of {EXPERIMENTS}")
    opts = opts or default_fixture(experiment)
    values = values if values is not None else list(DEFAULT_VALUES[experiment])
    policies = policies if policies is not None else list(DEFAULT_POLICIES[experiment])
    seeds = seeds if seeds is not None else [1, 2, 3, 4, 5]
    metric = "cost" if experiment == "reserved_prob" else "profit"

    results: dict[tuple[float, str], list[float]] = {(v, p): [] for v in values for p in policies}
    for seed in seeds:
        base_workload = None
        if experiment != "scale":
            base_workload = fixture_workload(opts, seed)
        for value in values:
            if experiment == "scale":
                workload = fixture_workload(opts, seed, n=int(value))
                trace = fixture_trace(opts, catalog, seed)
                cell_catalog = catalog
                std = None
            elif experiment == "spot_density":
                workload = base_workload
                trace = fixture_trace(opts, catalog, seed, density=value)
                cell_catalog = catalog
                std = None
            elif experiment == "price_ratio":
                workload = base_workload
                cell_catalog = _scaled_catalog(catalog, value)
                trace = fixture_trace(opts, cell_catalog, seed)
                std = None
            elif experiment == "pred_error":
                workload = base_workload
                trace = fixture_trace(opts, catalog, seed)
                cell_catalog = catalog
                std = value
            else:  # reserved_prob
                workload = base_workload
                trace = fixture_trace(opts, catalog, seed)
                cell_catalog = catalog
                std = opts.pred_std_pct
            for label in policies:
                cell_opts = opts
                if experiment == "reserved_prob":
                    cell_opts = replace(opts, reserved_prob=value)
                record = run_cell(label, cell_opts, seed, cell_catalog, workload, trace,
                                  pred_std_pct=std)
                results[(value, label)].append(
                    record.cost_total if metric == "cost" else record.profit)
                logger.info("sweep %s value=%s policy=%s seed=%d %s=%.3f",
                            experiment, value, label, seed, metric,
                            results[(value, label)][-1])

    rows = []
    for value in values:
        for label in policies:
            xs = results[(value, label)]
            rows.append({
                "experiment": experiment,
                "value": value,
                "policy": label,
                "metric": metric,
                "mean": statistics.mean(xs),
                "std": statistics.stdev(xs) if len(xs) > 1 else 0.0,
                "n_seeds": len(xs),
            })
    rows.sort(key=lambda r: (r["value"], r["policy"]))
    return rows


def write_sweep_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(SWEEP_HEADER)
        for r in rows:
            w.writerow([r["experiment"], repr(float(r["value"])), r["policy"], r["metric"],
                        repr(r["mean"]), repr(r["std"]), r["n_seeds"]])
