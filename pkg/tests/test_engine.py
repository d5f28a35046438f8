import copy
import math
import random
import statistics

import pytest

from dcdsim import engine
from dcdsim.engine import (EventKind, RunConfig, make_predicted_arrivals, profit, run,
                           validate_schedule)
from dcdsim.errors import ConfigError
from dcdsim.ingest import default_catalog
from dcdsim.pricing import HOUR, PricingKind, SpotSample, SpotTrace, accrue_costs
from dcdsim.scheduler import SchedulerConfig
from dcdsim.synth import generate_spot_trace, generate_synthetic
from dcdsim.workflow import Task, Workflow, annotate

CATALOG = default_catalog()


def wf_single(wf_id="w0", length=56.0, cold=11.2, mem=1.0, ttype="hot",
              arrival=0.0, d_rel=600.0):
    t = Task(id="t0", task_type=ttype, length_mi=length, mem_req=mem, cold_start_mi=cold)
    wf = Workflow.build(wf_id, [t], [], arrival=arrival, deadline=arrival + d_rel)
    annotate(wf)
    return wf


def flat_trace(price_frac=0.4, horizon=90000.0, step=300.0, available=True):
    samples = {}
    for spec in CATALOG:
        samples[spec.name] = [SpotSample(i * step, price_frac * spec.price_on_demand,
                                         available)
                              for i in range(int(horizon / step) + 1)]
    return SpotTrace(samples)


class TestRunBasics:
    def test_zero_workflows_zero_profit(self):
        cfg = RunConfig(policy="dcd", use_reserved=False, use_spot=False)
        rec = run([], None, CATALOG, None, None, cfg)
        assert rec.profit == 0.0 and not rec.instances and not rec.segments

    def test_single_workflow_reserved_profit(self):
        # One 56-MI task; phase A books one c3.large hour at 0.073.
        wf = wf_single()
        cfg = RunConfig(policy="dcd", use_reserved=True, use_spot=False,
                        sched=SchedulerConfig(reserved_prob=1.0))
        rec = run([wf], None, CATALOG, None, None, cfg)
        assert rec.deadline_hit_rate == 1.0
        assert rec.c_res == pytest.approx(0.073)
        assert rec.c_dem == 0.0
        assert rec.profit == pytest.approx(56.0 - 0.073, rel=1e-12)
        assert rec.cold_starts == 1

    def test_profit_mixed_deadline_outcomes(self):
        ok = wf_single("w0", d_rel=600.0)
        # infeasible deadline: forced onto the fastest memory-feasible type
        late = wf_single("w1", length=100.0, cold=20.0, d_rel=0.5)
        cfg = RunConfig(policy="dcd", use_reserved=False, use_spot=False)
        rec = run([ok, late], None, CATALOG, None, None, cfg)
        assert rec.workflows["w0"].met_deadline is True
        assert rec.workflows["w1"].met_deadline is False
        fast = [vm for vm in rec.instances if vm.spec.name == "c3.8xlarge"]
        assert len(fast) == 1
        assert rec.profit == pytest.approx(56.0 - (0.105 + 1.680), rel=1e-12)

    def test_deterministic_replay(self):
        wls = generate_synthetic(12, seed=5)
        trace = generate_spot_trace(CATALOG, 2 * 10 ** 5, density=0.5, seed=5,
                                    spike_prob=0.05)
        cfg = RunConfig(policy="dcd", seed=9)
        a = run(copy.deepcopy(wls), None, CATALOG, trace, None, cfg)
        b = run(copy.deepcopy(wls), None, CATALOG, trace, None, cfg)
        assert [(s.task_id, s.vm_id, s.start, s.finish) for s in a.segments] == \
               [(s.task_id, s.vm_id, s.start, s.finish) for s in b.segments]
        assert a.profit == b.profit

    def test_profit_op_matches_cost_recomputation(self):
        wls = generate_synthetic(10, seed=3)
        cfg = RunConfig(policy="dcd", use_reserved=True, use_spot=False, seed=3)
        rec = run(wls, None, CATALOG, None, None, cfg)
        assert profit(rec) == pytest.approx(rec.profit, rel=1e-12)
        assert rec.cost_total == pytest.approx(accrue_costs(rec.instances).total, rel=1e-12)

    def test_trace_horizon_too_short_rejected(self):
        wf = wf_single(d_rel=10 * HOUR)
        cfg = RunConfig(policy="dcd", use_reserved=False, use_spot=True)
        short = flat_trace(horizon=600.0)
        with pytest.raises(ConfigError, match="horizon"):
            run([wf], None, CATALOG, short, None, cfg)

    def test_hard_horizon_truncates(self):
        wf = wf_single(d_rel=4000.0)
        cfg = RunConfig(policy="dcd", use_reserved=False, use_spot=False,
                        hard_horizon=5.0)
        rec = run([wf], None, CATALOG, None, None, cfg)
        assert rec.horizon_truncated is True
        assert rec.workflows["w0"].met_deadline is False

    def test_event_kind_tiebreak_order(self):
        order = [EventKind.SPOT_PRICE_CHANGE, EventKind.SPOT_REVOCATION,
                 EventKind.TASK_FINISH, EventKind.RENTAL_EXPIRY,
                 EventKind.WORKFLOW_ARRIVAL, EventKind.BATCH_TICK]
        assert [int(k) for k in order] == sorted(int(k) for k in order)


class TestSpotRevocation:
    def one_task_spot_cfg(self):
        return RunConfig(policy="dcd", use_reserved=False, use_spot=True,
                         sched=SchedulerConfig(batch_len=300.0))

    def test_price_spike_revokes_and_resumes(self):
        # 3100-s task on c3.2xlarge spot; price spikes above the bid mid-run.
        wf = wf_single(length=3100 * 22.4, cold=0.0, mem=10.0, d_rel=4 * HOUR)
        spikes = {spec.name: [SpotSample(0.0, 0.3 * spec.price_on_demand, True),
                              SpotSample(600.0, 0.9 * spec.price_on_demand, True),
                              SpotSample(900.0, 0.3 * spec.price_on_demand, True),
                              SpotSample(8 * HOUR, 0.3 * spec.price_on_demand, True)]
                  for spec in CATALOG}
        rec = run([wf], None, CATALOG, SpotTrace(spikes), None, self.one_task_spot_cfg())
        assert rec.revocations >= 1
        segs = [s for s in rec.segments if s.task_id == "t0"]
        assert len(segs) >= 2
        assert segs[0].truncated is True
        assert rec.tasks[("w0", "t0")].completed
        # executed task work adds up to the task length across segments
        assert sum(s.work_mi for s in segs) == pytest.approx(wf.tasks["t0"].length_mi,
                                                             rel=1e-9)
        assert not validate_schedule(rec, [wf])

    def test_price_drop_revokes_nothing(self):
        wf = wf_single(length=3100 * 22.4, cold=0.0, mem=10.0, d_rel=4 * HOUR)
        falling = {spec.name: [SpotSample(0.0, 0.5 * spec.price_on_demand, True),
                               SpotSample(600.0, 0.2 * spec.price_on_demand, True),
                               SpotSample(8 * HOUR, 0.2 * spec.price_on_demand, True)]
                   for spec in CATALOG}
        rec = run([wf], None, CATALOG, SpotTrace(falling), None, self.one_task_spot_cfg())
        assert rec.revocations == 0
        assert len([s for s in rec.segments if s.task_id == "t0"]) == 1

    def test_resume_on_warm_same_type_vm_skips_cold_start(self):
        # wf0 keeps an on-demand VM busy and warm past wf1's batch, forcing
        # wf1 onto spot; after revocation wf1 resumes on the warm machine
        # without a second cold start.
        wf0 = wf_single("w0", length=2800.0, cold=11.2, d_rel=1200.0)
        wf1 = wf_single("w1", length=1000 * 5.6, cold=56.0, arrival=300.0, d_rel=2 * HOUR)
        trace = {spec.name: [SpotSample(0.0, 0.3 * spec.price_on_demand, False),
                             SpotSample(250.0, 0.3 * spec.price_on_demand, True),
                             SpotSample(400.0, 0.95 * spec.price_on_demand, True),
                             SpotSample(500.0, 0.3 * spec.price_on_demand, True),
                             SpotSample(8 * HOUR, 0.3 * spec.price_on_demand, True)]
                  for spec in CATALOG}
        rec = run([wf0, wf1], None, CATALOG, SpotTrace(trace), None,
                  self.one_task_spot_cfg())
        segs1 = [s for s in rec.segments if s.workflow_id == "w1"]
        assert len(segs1) == 2
        assert segs1[0].cold is True and segs1[0].truncated is True
        assert segs1[1].cold is False            # warm takeover on wf0's machine
        seg0 = next(s for s in rec.segments if s.workflow_id == "w0")
        assert segs1[1].vm_id == seg0.vm_id
        assert rec.tasks[("w1", "t0")].resumptions == 1
        assert not validate_schedule(rec, [wf0, wf1])

    def test_resume_on_other_vm_pays_cold_start_again(self):
        wf1 = wf_single("w1", length=1000 * 5.6, cold=56.0, d_rel=2 * HOUR)
        trace = {spec.name: [SpotSample(0.0, 0.3 * spec.price_on_demand, True),
                             SpotSample(400.0, 0.95 * spec.price_on_demand, False),
                             SpotSample(8 * HOUR, 0.95 * spec.price_on_demand, False)]
                  for spec in CATALOG}
        rec = run([wf1], None, CATALOG, SpotTrace(trace), None, self.one_task_spot_cfg())
        segs = [s for s in rec.segments if s.workflow_id == "w1"]
        assert len(segs) == 2
        assert segs[0].cold is True and segs[1].cold is True
        assert segs[0].vm_id != segs[1].vm_id
        # full cold-start work was spent twice
        total = sum((s.finish - s.start) for s in segs)
        work_seconds = wf1.tasks["t0"].length_mi / 5.6
        assert total > work_seconds


class TestValidator:
    def clean_record(self):
        wls = generate_synthetic(8, seed=21)
        cfg = RunConfig(policy="dcd", seed=21)
        trace = generate_spot_trace(CATALOG, 3 * 10 ** 5, density=0.4, seed=21)
        rec = run(wls, None, CATALOG, trace, None, cfg)
        return rec, wls

    def test_engine_runs_are_clean(self):
        rec, wls = self.clean_record()
        assert validate_schedule(rec, wls) == []

    def test_injected_overlap_trips_constraint_10(self):
        rec, wls = self.clean_record()
        by_vm = {}
        for seg in rec.segments:
            by_vm.setdefault(seg.vm_id, []).append(seg)
        segs = next(s for s in by_vm.values() if len(s) >= 2)
        segs.sort(key=lambda s: s.start)
        segs[1].start = segs[0].start  # same VM now runs two tasks at once
        violations = validate_schedule(rec, wls)
        assert any(v.constraint == 10 for v in violations)

    def test_predecessor_swap_trips_constraint_7(self):
        rec, wls = self.clean_record()
        wf = next(w for w in wls if w.edges)
        u, v = wf.edges[0]
        seg_u = [s for s in rec.segments if (s.workflow_id, s.task_id) == (wf.id, u)]
        seg_v = [s for s in rec.segments if (s.workflow_id, s.task_id) == (wf.id, v)]
        for s in seg_v:
            s.start = seg_u[-1].finish - 1.0
        violations = validate_schedule(rec, wls)
        assert any(v.constraint == 7 for v in violations)

    def test_memory_violation_detected(self):
        rec, wls = self.clean_record()
        seg = rec.segments[0]
        wf = next(w for w in wls if w.id == seg.workflow_id)
        wf.tasks[seg.task_id].mem_req = 10 ** 6
        violations = validate_schedule(rec, wls)
        assert any(v.constraint == 9 for v in violations)

    def test_segment_outside_window_detected(self):
        rec, wls = self.clean_record()
        vm = next(v for v in rec.instances
                  if any(s.vm_id == v.id for s in rec.segments))
        vm.rent_start = vm.billed_end  # squeeze the window shut
        vm.rent_end = vm.billed_end + 1.0
        vm.billed_end = vm.rent_end
        violations = validate_schedule(rec, wls)
        assert any(v.constraint == 11 for v in violations)

    def test_spurious_bid_trips_constraint_12(self):
        rec, wls = self.clean_record()
        vm = next(v for v in rec.instances if v.pricing_kind is PricingKind.ON_DEMAND)
        vm.bid_price = 0.5
        violations = validate_schedule(rec, wls)
        assert any(v.constraint == 12 for v in violations)


class TestConservationOfWork:
    def test_segment_accounting_on_random_runs(self):
        rng = random.Random(55)
        for i in range(10):
            wls = generate_synthetic(rng.randint(2, 6), seed=100 + i)
            trace = generate_spot_trace(CATALOG, 3 * 10 ** 5, density=0.6,
                                        seed=100 + i, volatility=0.05, spike_prob=0.1)
            cfg = RunConfig(policy="dcd", seed=100 + i)
            rec = run(wls, None, CATALOG, trace, None, cfg)
            by_task = {}
            for seg in rec.segments:
                by_task.setdefault((seg.workflow_id, seg.task_id), []).append(seg)
            for wf in wls:
                for tid, task in wf.tasks.items():
                    segs = by_task[(wf.id, tid)]
                    assert sum(s.work_mi for s in segs) == pytest.approx(
                        task.length_mi, rel=1e-9)
                    for s in segs:
                        vm = next(v for v in rec.instances if v.id == s.vm_id)
                        executed = (s.finish - s.start) * vm.spec.compute_power
                        assert executed == pytest.approx(s.work_mi + s.cold_mi, rel=1e-9,
                                                         abs=1e-6)


class TestBatchClock:
    def test_segments_start_on_the_batch_grid(self):
        wls = generate_synthetic(10, seed=41)
        trace = generate_spot_trace(CATALOG, 3 * 10 ** 5, density=0.5, seed=41,
                                    spike_prob=0.1)
        cfg = RunConfig(policy="dcd", seed=41, sched=SchedulerConfig(batch_len=300.0))
        rec = run(wls, None, CATALOG, trace, None, cfg)
        for seg in rec.segments:
            offset = seg.start % 300.0
            assert min(offset, 300.0 - offset) < 1e-6, seg


class TestPredictedArrivals:
    def test_zero_error_is_identity(self):
        wls = generate_synthetic(10, seed=2)
        pred = make_predicted_arrivals(wls, 0.0, 0.0, seed=4)
        for a, b in zip(sorted(wls, key=lambda w: w.id), pred):
            assert b.arrival == a.arrival and b.deadline == a.deadline

    def test_forty_percent_mean_shift(self):
        # critical path 2240 MI at reference 22.4 MIPS -> t = 100 s
        t = Task(id="t0", task_type="a", length_mi=2240.0, mem_req=1.0, cold_start_mi=0.0)
        wf = Workflow.build("w0", [t], [], arrival=1000.0, deadline=2000.0)
        pred = make_predicted_arrivals([wf], 0.4, 0.0, seed=1)
        assert pred[0].arrival == pytest.approx(1040.0)
        assert pred[0].deadline - pred[0].arrival == pytest.approx(wf.d_rel)

    def test_shift_standard_deviation(self):
        t_ref = 2240.0 / 22.4
        wfs = []
        for i in range(4000):
            t = Task(id="t0", task_type="a", length_mi=2240.0, mem_req=1.0,
                     cold_start_mi=0.0)
            wfs.append(Workflow.build(f"w{i:05d}", [t], [], arrival=10_000.0,
                                      deadline=20_000.0))
        pred = make_predicted_arrivals(wfs, 0.0, 0.3, seed=3)
        shifts = [p.arrival - 10_000.0 for p in pred]
        sd = statistics.pstdev(shifts)
        expect = 0.3 * t_ref
        # sample sd of n draws concentrates within ~3 sigma/sqrt(2n)
        assert abs(sd - expect) <= 3 * expect / math.sqrt(2 * len(shifts))

    def test_arrivals_clamped_at_zero(self):
        wls = generate_synthetic(50, seed=9)
        for wf in wls:
            wf.deadline = wf.deadline - wf.arrival
            wf.arrival = 0.0
        pred = make_predicted_arrivals(wls, -5.0, 0.0, seed=1)
        assert all(p.arrival >= 0.0 for p in pred)

    def test_wider_sigma_widens_every_shift(self):
        wls = generate_synthetic(30, seed=12)
        lo = make_predicted_arrivals(wls, 0.0, 0.1, seed=6)
        hi = make_predicted_arrivals(wls, 0.0, 0.4, seed=6)
        for a, l, h in zip(sorted(wls, key=lambda w: w.id), lo, hi):
            assert abs(h.arrival - a.arrival) >= abs(l.arrival - a.arrival) - 1e-9


class TestValidatorCleanAcrossPolicies:
    @pytest.mark.parametrize("policy", ["dcd", "random", "faascache", "cewb"])
    def test_policies_produce_clean_schedules(self, policy):
        wls = generate_synthetic(10, seed=31)
        trace = generate_spot_trace(CATALOG, 3 * 10 ** 5, density=0.5, seed=31,
                                    spike_prob=0.05)
        cfg = RunConfig(policy=policy, seed=31,
                        use_reserved=policy == "dcd", use_spot=policy in ("dcd", "cewb"))
        rec = run(wls, None, CATALOG, trace, None, cfg)
        assert validate_schedule(rec, wls) == []
        assert all(o.completed for o in rec.tasks.values())
