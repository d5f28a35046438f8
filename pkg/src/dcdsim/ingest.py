"""File formats: workflow documents, VM catalog, spot traces, run configuration,
and the CSV artifacts a finished run writes.

Parse errors never abort the process uncontrolled; every rejection names
the offending workflow/field or file line.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import xml.etree.ElementTree as ET
from dataclasses import dataclass, fields

from .engine import RunConfig, RunRecord, Segment
from .errors import ParseError
from .pricing import SPOT_CLIP_EPS, PricingKind, SpotSample, SpotTrace, VMInstance, VMTypeSpec
from .scheduler import SchedulerConfig
from .workflow import Task, Workflow, annotate, critical_path_mi

logger = logging.getLogger(__name__)

CATALOG_HEADER = ["name", "memory_gib", "compute_power", "price_on_demand", "price_reserved"]
TRACE_HEADER = ["timestamp", "vm_type", "spot_price", "available"]
ASSIGNMENT_HEADER = ["task_id", "workflow_id", "vm_id", "vm_type", "pricing_kind",
                     "start", "finish", "cold_start_flag", "bid_price"]
INSTANCE_HEADER = ["vm_id", "vm_type", "pricing_kind", "rate", "bid_price",
                   "rent_start", "rent_end", "billed_end"]
SUMMARY_HEADER = ["run_id", "profit", "reward_sum", "c_res", "c_dem", "c_spot",
                  "deadline_hit_rate", "cold_starts", "revocations"]

DEFAULT_MI_PER_SECOND = 5.6  # slowest catalog machine; DAX runtimes map to worst-case MI


# -- workflows ---------------------------------------------------------------

def parse_workflows(path: str, mi_per_second: float = DEFAULT_MI_PER_SECOND,
                    lam: float = 0.5) -> list[Workflow]:
    """Load a workflow document (JSON, or Pegasus DAX-style XML) and annotate it."""
    with open(path) as f:
        text = f.read()
    stripped = text.lstrip()
    if stripped.startswith("<"):
        return parse_dax(path, mi_per_second=mi_per_second, lam=lam)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: not valid JSON ({e})") from e
    return workflows_from_obj(doc, source=path, lam=lam)


def workflows_from_obj(doc, source: str = "<memory>", lam: float = 0.5) -> list[Workflow]:
    if not isinstance(doc, list):
        raise ParseError(f"{source}: top level must be a list of workflows")
    out = []
    seen: set[str] = set()
    for i, w in enumerate(doc):
        wf_id = str(w.get("id", f"wf{i}"))
        if wf_id in seen:
            raise ParseError(f"{source}: duplicate workflow id {wf_id}")
        seen.add(wf_id)
        for fld in ("arrival", "deadline", "tasks", "edges"):
            if fld not in w:
                raise ParseError(f"{source}: workflow {wf_id} missing field {fld!r}")
        tasks = []
        for t in w["tasks"]:
            for fld in ("id", "type", "length_mi", "mem", "cold_start_mi"):
                if fld not in t:
                    raise ParseError(f"{source}: workflow {wf_id} task "
                                     f"{t.get('id', '?')} missing field {fld!r}")
            tasks.append(Task(id=str(t["id"]), task_type=str(t["type"]),
                              length_mi=float(t["length_mi"]), mem_req=float(t["mem"]),
                              cold_start_mi=float(t["cold_start_mi"])))
        edges = [(str(u), str(v)) for u, v in w["edges"]]
        try:
            wf = Workflow.build(wf_id, tasks, edges, arrival=float(w["arrival"]),
                                deadline=float(w["deadline"]))
        except Exception as e:
            raise ParseError(f"{source}: workflow {wf_id}: {e}") from e
        annotate(wf, lam)
        out.append(wf)
    return out


def parse_dax(path: str, mi_per_second: float = DEFAULT_MI_PER_SECOND,
              mem_default: float = 1.0, cold_frac: float = 0.2,
              arrival: float = 0.0, deadline_factor: float = 3.0,
              reference_cp: float = 22.4, lam: float = 0.5) -> list[Workflow]:
    """Map a Pegasus DAX file onto the workflow schema.

    Job runtimes convert to MI through ``mi_per_second``; file/uses elements
    are ignored. The document carries no arrival/deadline, so a deadline is
    derived from the critical path at the reference machine.
    """
    try:
        root = ET.parse(path).getroot()
    except ET.ParseError as e:
        raise ParseError(f"{path}: not valid XML ({e})") from e

    def local(tag: str) -> str:
        return tag.rsplit("}", 1)[-1]

    tasks = []
    edges = []
    for el in root.iter():
        if local(el.tag) == "job":
            jid = el.get("id")
            runtime = el.get("runtime")
            if jid is None or runtime is None:
                raise ParseError(f"{path}: job element missing id/runtime")
            length = float(runtime) * mi_per_second
            if length <= 0:
                raise ParseError(f"{path}: job {jid}: runtime must be positive")
            tasks.append(Task(id=jid, task_type=el.get("name", jid),
                              length_mi=length, mem_req=mem_default,
                              cold_start_mi=cold_frac * length))
        elif local(el.tag) == "child":
            child = el.get("ref")
            for p in el:
                if local(p.tag) == "parent":
                    edges.append((p.get("ref"), child))
    wf_id = os.path.splitext(os.path.basename(path))[0]
    try:
        wf = Workflow.build(wf_id, tasks, edges, arrival=arrival, deadline=arrival + 1.0)
    except Exception as e:
        raise ParseError(f"{path}: {e}") from e
    wf.deadline = arrival + deadline_factor * critical_path_mi(wf) / reference_cp
    annotate(wf, lam)
    return [wf]


def write_workflows(workflows: list[Workflow], path: str) -> None:
    doc = []
    for wf in workflows:
        doc.append({
            "id": wf.id,
            "arrival": wf.arrival,
            "deadline": wf.deadline,
            "tasks": [{"id": t.id, "type": t.task_type, "length_mi": t.length_mi,
                       "mem": t.mem_req, "cold_start_mi": t.cold_start_mi}
                      for t in wf.tasks.values()],
            "edges": [[u, v] for u, v in wf.edges],
        })
    with open(path, "w") as f:
        json.dump(doc, f, indent=1, sort_keys=True)
        f.write("\n")


# -- catalog -----------------------------------------------------------------

def parse_catalog(path: str) -> list[VMTypeSpec]:
    out = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != CATALOG_HEADER:
            raise ParseError(f"{path}: expected header {','.join(CATALOG_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                spec = VMTypeSpec(name=row[0], memory=float(row[1]),
                                  compute_power=float(row[2]),
                                  price_on_demand=float(row[3]),
                                  price_reserved=float(row[4]))
                spec.validate()
            except Exception as e:
                raise ParseError(f"{path}:{lineno}: {e}") from e
            out.append(spec)
    if not out:
        raise ParseError(f"{path}: catalog is empty")
    return out


def default_catalog() -> list[VMTypeSpec]:
    """The six-type catalog shipped with the package."""
    here = os.path.dirname(__file__)
    return parse_catalog(os.path.join(here, "data", "catalog_default.csv"))


def write_catalog(catalog: list[VMTypeSpec], path: str) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CATALOG_HEADER)
        for t in catalog:
            w.writerow([t.name, repr(t.memory), repr(t.compute_power),
                        repr(t.price_on_demand), repr(t.price_reserved)])


# -- spot traces ---------------------------------------------------------------

def parse_spot_trace(path: str, catalog: list[VMTypeSpec]) -> SpotTrace:
    """Read a spot trace, clipping any posted price at or above on-demand."""
    by_name = {t.name: t for t in catalog}
    samples: dict[str, list[SpotSample]] = {}
    clipped = 0
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != TRACE_HEADER:
            raise ParseError(f"{path}: expected header {','.join(TRACE_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                t, name, price, avail = float(row[0]), row[1], float(row[2]), row[3]
            except (ValueError, IndexError) as e:
                raise ParseError(f"{path}:{lineno}: malformed row ({e})") from e
            spec = by_name.get(name)
            if spec is None:
                raise ParseError(f"{path}:{lineno}: unknown vm_type {name!r}")
            if price <= 0:
                raise ParseError(f"{path}:{lineno}: spot price must be positive")
            if avail not in ("0", "1"):
                raise ParseError(f"{path}:{lineno}: available must be 0 or 1")
            available = avail == "1"
            if available and price >= spec.price_on_demand:
                price = spec.price_on_demand - SPOT_CLIP_EPS
                clipped += 1
            rows = samples.setdefault(name, [])
            if rows and t <= rows[-1].time:
                raise ParseError(f"{path}:{lineno}: timestamps for {name} must "
                                 f"strictly increase")
            rows.append(SpotSample(time=t, price=price, available=available))
    if clipped:
        logger.warning("%s: clipped %d spot prices to below on-demand", path, clipped)
    return SpotTrace(samples)


def write_spot_trace(trace: SpotTrace, path: str) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(TRACE_HEADER)
        for t, name, price, avail in trace.events():
            w.writerow([repr(t), name, repr(price), "1" if avail else "0"])


# -- run configuration ---------------------------------------------------------

@dataclass
class RunFiles:
    """Input/output paths named by a run configuration file."""

    workflows: str = ""
    predicted_workflows: str = ""
    catalog: str = ""
    spot_trace: str = ""
    spot_prediction: str = ""
    out_dir: str = "out"
    mi_per_second: float = DEFAULT_MI_PER_SECOND


_SCHED_FIELDS = {f.name: f.type for f in fields(SchedulerConfig)}
_BOOL_KEYS = {"use_reserved", "use_spot", "use_spot_prediction", "invert_priority"}
_RUN_FLOAT_KEYS = {"hard_horizon", "pred_mean_pct", "pred_std_pct"}
_FILE_KEYS = {f.name for f in fields(RunFiles)}


def _parse_bool(value: str, where: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ParseError(f"{where}: expected a boolean, got {value!r}")


def parse_config(path: str) -> tuple[RunConfig, RunFiles]:
    """Read the key=value run configuration; unknown keys are rejected."""
    cfg = RunConfig()
    files = RunFiles()
    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            where = f"{path}:{lineno}"
            try:
                apply_config_value(cfg, files, key, value, where)
            except ParseError:
                raise
            except ValueError as e:
                raise ParseError(f"{where}: bad value for {key}: {e}") from e
    return cfg, files


def apply_config_value(cfg: RunConfig, files: RunFiles, key: str, value: str,
                       where: str = "<override>") -> None:
    if key == "policy":
        cfg.policy = value
    elif key == "seed":
        cfg.seed = int(value)
    elif key in _BOOL_KEYS:
        if key == "invert_priority":
            cfg.sched.invert_priority = _parse_bool(value, where)
        else:
            setattr(cfg, key, _parse_bool(value, where))
    elif key in _RUN_FLOAT_KEYS:
        setattr(cfg, key, float(value))
    elif key == "lambda":
        cfg.sched.lam = float(value)
    elif key == "rent_hours":
        cfg.sched.rent_hours = int(value)
    elif key in _SCHED_FIELDS:
        setattr(cfg.sched, key, float(value))
    elif key == "mi_per_second":
        files.mi_per_second = float(value)
    elif key in _FILE_KEYS:
        setattr(files, key, value)
    else:
        raise ParseError(f"{where}: unknown configuration key {key!r}")


def config_hash(cfg: RunConfig, files: RunFiles) -> str:
    """Digest of the semantic run parameters and inputs (not the output path)."""
    payload = repr((cfg.policy, cfg.use_reserved, cfg.use_spot, cfg.use_spot_prediction,
                    cfg.seed, cfg.hard_horizon, cfg.pred_mean_pct, cfg.pred_std_pct,
                    cfg.sched, files.workflows, files.predicted_workflows, files.catalog,
                    files.spot_trace, files.spot_prediction, files.mi_per_second))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


# -- run artifacts ---------------------------------------------------------------

def _fmt(x) -> str:
    return "" if x is None else repr(x)


def write_run_artifacts(record: RunRecord, out_dir: str, cfg: RunConfig,
                        files: RunFiles | None = None) -> None:
    """Write assignments.csv, instances.csv, summary.csv and manifest.txt."""
    os.makedirs(out_dir, exist_ok=True)
    files = files or RunFiles()
    with open(os.path.join(out_dir, "assignments.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(ASSIGNMENT_HEADER)
        for seg in record.segments:
            w.writerow([seg.task_id, seg.workflow_id, seg.vm_id, seg.vm_type,
                        seg.pricing_kind, repr(seg.start), repr(seg.finish),
                        int(seg.cold), _fmt(seg.bid_price)])
    with open(os.path.join(out_dir, "instances.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(INSTANCE_HEADER)
        for vm in record.instances:
            w.writerow([vm.id, vm.spec.name, vm.pricing_kind.value, repr(vm.rate),
                        _fmt(vm.bid_price), repr(vm.rent_start), repr(vm.rent_end),
                        repr(vm.billed_end)])
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(SUMMARY_HEADER)
        w.writerow([f"{record.policy_label}-seed{record.seed}", repr(record.profit),
                    repr(record.reward_sum), repr(record.c_res), repr(record.c_dem),
                    repr(record.c_spot), repr(record.deadline_hit_rate),
                    record.cold_starts, record.revocations])
    with open(os.path.join(out_dir, "manifest.txt"), "w") as f:
        f.write(f"seed = {record.seed}\n")
        f.write(f"policy = {record.policy_label}\n")
        f.write(f"config_hash = {config_hash(cfg, files)}\n")
        f.write(f"workflows = {files.workflows}\n")
        f.write(f"catalog = {files.catalog}\n")
        f.write(f"spot_trace = {files.spot_trace}\n")


def read_manifest(run_dir: str) -> dict[str, str]:
    path = os.path.join(run_dir, "manifest.txt")
    if not os.path.exists(path):
        raise ParseError(f"{path}: missing manifest")
    out = {}
    with open(path) as f:
        for line in f:
            if "=" in line:
                k, v = line.split("=", 1)
                out[k.strip()] = v.strip()
    return out


def load_run_artifacts(run_dir: str, catalog: list[VMTypeSpec]) -> RunRecord:
    """Rebuild enough of a RunRecord from stored CSVs to re-run the validator."""
    by_name = {t.name: t for t in catalog}
    apath = os.path.join(run_dir, "assignments.csv")
    ipath = os.path.join(run_dir, "instances.csv")
    for p in (apath, ipath):
        if not os.path.exists(p):
            raise ParseError(f"{p}: missing run artifact")
    record = RunRecord(policy_label="loaded", seed=0)
    with open(apath, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != ASSIGNMENT_HEADER:
            raise ParseError(f"{apath}: unexpected header")
        for row in reader:
            record.segments.append(Segment(
                workflow_id=row["workflow_id"], task_id=row["task_id"],
                vm_id=int(row["vm_id"]), vm_type=row["vm_type"],
                pricing_kind=row["pricing_kind"], start=float(row["start"]),
                finish=float(row["finish"]), cold=row["cold_start_flag"] == "1",
                bid_price=float(row["bid_price"]) if row["bid_price"] else None,
                work_mi=0.0, cold_mi=0.0))
    with open(ipath, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != INSTANCE_HEADER:
            raise ParseError(f"{ipath}: unexpected header")
        for row in reader:
            spec = by_name.get(row["vm_type"])
            if spec is None:
                raise ParseError(f"{ipath}: unknown vm_type {row['vm_type']!r}")
            record.instances.append(VMInstance(
                id=int(row["vm_id"]), spec=spec,
                pricing_kind=PricingKind(row["pricing_kind"]), rate=float(row["rate"]),
                bid_price=float(row["bid_price"]) if row["bid_price"] else None,
                rent_start=float(row["rent_start"]), rent_end=float(row["rent_end"]),
                billed_end=float(row["billed_end"])))
    return record
