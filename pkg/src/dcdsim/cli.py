"""Command-line harness: single runs, experiment sweeps, validation, generation."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import engine, experiments, ingest
from .errors import DcdError
from .synth import SHAPES, generate_synthetic

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_BAD_CONFIG = 1
EXIT_VIOLATIONS = 2


def _load_inputs(cfg: engine.RunConfig, files: ingest.RunFiles):
    if not files.workflows:
        raise DcdError("configuration names no workflows file")
    workloads = ingest.parse_workflows(files.workflows, files.mi_per_second,
                                       lam=cfg.sched.lam)
    catalog = ingest.parse_catalog(files.catalog) if files.catalog else ingest.default_catalog()
    trace = ingest.parse_spot_trace(files.spot_trace, catalog) if files.spot_trace else None
    forecast = (ingest.parse_spot_trace(files.spot_prediction, catalog)
                if files.spot_prediction else None)
    if cfg.use_spot_prediction and forecast is None:
        forecast = trace
    predicted = None
    if files.predicted_workflows:
        predicted = ingest.parse_workflows(files.predicted_workflows, files.mi_per_second,
                                           lam=cfg.sched.lam)
    elif cfg.pred_mean_pct or cfg.pred_std_pct:
        predicted = engine.make_predicted_arrivals(workloads, cfg.pred_mean_pct,
                                                   cfg.pred_std_pct, cfg.seed)
    return workloads, predicted, catalog, trace, forecast


def _inject_overlap(record: engine.RunRecord) -> None:
    """Debug hook: pull one segment onto another VM slot to trip the validator."""
    by_vm: dict[int, list[engine.Segment]] = {}
    for seg in record.segments:
        by_vm.setdefault(seg.vm_id, []).append(seg)
    for segs in by_vm.values():
        if len(segs) >= 2:
            segs.sort(key=lambda s: s.start)
            segs[1].start = segs[0].start
            return
    if len(record.segments) >= 2:
        a, b = record.segments[0], record.segments[1]
        b.vm_id, b.start, b.finish = a.vm_id, a.start, a.finish


def cmd_run(args) -> int:
    try:
        cfg, files = ingest.parse_config(args.config)
        for key, value in args.set or []:
            ingest.apply_config_value(cfg, files, key, value)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.policy is not None:
            cfg.policy = args.policy
        if args.out is not None:
            files.out_dir = args.out
        cfg.validate()
        workloads, predicted, catalog, trace, forecast = _load_inputs(cfg, files)
        record = engine.run(workloads, predicted, catalog, trace, forecast, cfg)
    except DcdError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    if args.inject_violation:
        _inject_overlap(record)
    violations = engine.validate_schedule(record, workloads)
    ingest.write_run_artifacts(record, files.out_dir, cfg, files)
    print(f"run {record.policy_label} seed={record.seed} profit={record.profit:.4f} "
          f"cost={record.cost_total:.4f} hit_rate={record.deadline_hit_rate:.3f} "
          f"violations={len(violations)}")
    for v in violations[:20]:
        print(v.message, file=sys.stderr)
    return EXIT_VIOLATIONS if violations else EXIT_OK


def cmd_sweep(args) -> int:
    opts = experiments.FixtureOptions()
    if args.workflows is not None:
        opts.n_workflows = args.workflows
    try:
        if args.experiment not in experiments.EXPERIMENTS:
            raise DcdError(f"unknown experiment {args.experiment!r}")
        catalog = ingest.parse_catalog(args.catalog) if args.catalog else ingest.default_catalog()
        values = [float(v) for v in args.values.split(",")] if args.values else None
        policies = args.policies.split(",") if args.policies else None
        seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else None
        rows = experiments.run_sweep(args.experiment, catalog, opts, values=values,
                                     policies=policies, seeds=seeds)
    except DcdError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    out = args.out or f"sweep_{args.experiment}.csv"
    experiments.write_sweep_csv(rows, out)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        manifest = ingest.read_manifest(args.run_dir)
        catalog = (ingest.parse_catalog(manifest["catalog"]) if manifest.get("catalog")
                   else ingest.default_catalog())
        record = ingest.load_run_artifacts(args.run_dir, catalog)
        if not manifest.get("workflows"):
            raise DcdError("manifest names no workflows file; cannot check dependencies")
        workloads = ingest.parse_workflows(manifest["workflows"])
    except (DcdError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    violations = engine.validate_schedule(record, workloads)
    counts = {c: 0 for c in range(7, 13)}
    for v in violations:
        counts[v.constraint] = counts.get(v.constraint, 0) + 1
    for c in sorted(counts):
        print(f"constraint {c}: {counts[c]} violations")
    print(f"{len(violations)} violations")
    return EXIT_VIOLATIONS if violations else EXIT_OK


def cmd_gen(args) -> int:
    try:
        workflows = generate_synthetic(args.workflows, shape=args.shape, seed=args.seed)
        ingest.write_workflows(workflows, args.out)
    except DcdError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    print(f"wrote {len(workflows)} workflows to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dcdsim",
                                description="Profit-driven workflow scheduling simulator")
    p.add_argument("-v", "--verbose", action="store_true", help="enable info logging")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="execute one simulation from a config file")
    pr.add_argument("--config", required=True)
    pr.add_argument("--seed", type=int)
    pr.add_argument("--policy", choices=["dcd", "random", "faascache", "cewb"])
    pr.add_argument("--out", help="output directory (overrides out_dir)")
    pr.add_argument("--set", nargs=2, action="append", metavar=("KEY", "VALUE"),
                    help="override any config key")
    pr.add_argument("--inject-violation", action="store_true",
                    help="corrupt the record before validation (mutation harness)")
    pr.set_defaults(fn=cmd_run)

    ps = sub.add_parser("sweep", help="run one of the five experiments")
    ps.add_argument("--experiment", required=True)
    ps.add_argument("--values", help="comma-separated sweep values")
    ps.add_argument("--policies", help="comma-separated policy labels")
    ps.add_argument("--seeds", help="comma-separated seeds (default 1..5)")
    ps.add_argument("--workflows", type=int, help="fixture workload size")
    ps.add_argument("--catalog", help="catalog CSV (default: shipped catalog)")
    ps.add_argument("--out", help="output CSV path")
    ps.set_defaults(fn=cmd_sweep)

    pv = sub.add_parser("validate", help="re-check a stored run against the constraints")
    pv.add_argument("run_dir")
    pv.set_defaults(fn=cmd_validate)

    pg = sub.add_parser("gen", help="write a synthetic workload file")
    pg.add_argument("--workflows", type=int, required=True)
    pg.add_argument("--out", required=True)
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("--shape", choices=SHAPES, default="mixed")
    pg.set_defaults(fn=cmd_gen)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
