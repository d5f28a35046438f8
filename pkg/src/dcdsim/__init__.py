"""dcdsim: deadline-, cold-start- and dependency-aware cloud workflow scheduling.

A discrete-event simulator and embeddable scheduling library for
profit-driven execution of scientific workflows on rented VMs under
reserved, on-demand and spot pricing.
"""

from .engine import (RunConfig, RunRecord, Violation, make_predicted_arrivals,
                     plan_reserved, profit, run, validate_schedule)
from .errors import ConfigError, DcdError, ParseError, StructureError
from .ingest import (default_catalog, parse_catalog, parse_config, parse_spot_trace,
                     parse_workflows, write_run_artifacts, write_workflows)
from .pricing import (PricingKind, SpotTrace, VMInstance, VMTypeSpec, accrue_costs,
                      bid_price, execution_time, revocation_check, spot_state_at)
from .scheduler import (PlannedReservation, SchedulerConfig, VMPool, dcd_batch_step,
                        priority_score, relative_compute_power, rent_realtime,
                        renew_at_junction, select_in_stock_vm)
from .synth import generate_spot_trace, generate_synthetic
from .workflow import (Task, TaskAnnotations, Workflow, annotate,
                       assign_relative_deadlines, critical_path_mi, ready_tasks,
                       task_weights_rewards, workflow_reward)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DcdError", "ParseError", "StructureError",
    "PlannedReservation", "PricingKind", "RunConfig", "RunRecord", "SchedulerConfig",
    "SpotTrace", "Task", "TaskAnnotations", "VMInstance", "VMPool", "VMTypeSpec",
    "Violation", "Workflow", "accrue_costs", "annotate", "assign_relative_deadlines",
    "bid_price", "critical_path_mi", "dcd_batch_step", "default_catalog",
    "execution_time", "generate_spot_trace", "generate_synthetic",
    "make_predicted_arrivals", "parse_catalog", "parse_config", "parse_spot_trace",
    "parse_workflows", "plan_reserved", "priority_score", "profit", "ready_tasks",
    "relative_compute_power", "renew_at_junction", "rent_realtime", "revocation_check",
    "run", "select_in_stock_vm", "spot_state_at", "task_weights_rewards",
    "validate_schedule", "workflow_reward", "write_run_artifacts", "write_workflows",
]
