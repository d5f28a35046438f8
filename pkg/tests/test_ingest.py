import json
import os

import pytest

from dcdsim import ingest
from dcdsim.engine import RunConfig, run
from dcdsim.errors import ParseError
from dcdsim.synth import generate_spot_trace, generate_synthetic
from dcdsim.workflow import critical_path_mi

MINIMAL = [{
    "id": "wf0", "arrival": 0.0, "deadline": 100.0,
    "tasks": [{"id": "a", "type": "x", "length_mi": 10.0, "mem": 1.0,
               "cold_start_mi": 2.0}],
    "edges": [],
}]

DIAMOND = [{
    "id": "wf0", "arrival": 5.0, "deadline": 105.0,
    "tasks": [
        {"id": "a", "type": "x", "length_mi": 100.0, "mem": 1.0, "cold_start_mi": 0.0},
        {"id": "b", "type": "x", "length_mi": 200.0, "mem": 1.0, "cold_start_mi": 0.0},
        {"id": "c", "type": "y", "length_mi": 50.0, "mem": 1.0, "cold_start_mi": 0.0},
        {"id": "d", "type": "y", "length_mi": 100.0, "mem": 1.0, "cold_start_mi": 0.0},
    ],
    "edges": [["a", "b"], ["a", "c"], ["b", "d"], ["c", "d"]],
}]

DAX = """<?xml version="1.0" encoding="UTF-8"?>
<adag xmlns="http://pegasus.isi.edu/schema/DAX" version="2.1" count="1" index="0">
  <job id="ID00000" name="mProject" runtime="10.0"/>
  <job id="ID00001" name="mDiff" runtime="5.0"/>
  <job id="ID00002" name="mAdd" runtime="2.5"/>
  <child ref="ID00001"><parent ref="ID00000"/></child>
  <child ref="ID00002"><parent ref="ID00001"/></child>
</adag>
"""


def write(tmp_path, name, obj):
    path = os.path.join(tmp_path, name)
    with open(path, "w") as f:
        if isinstance(obj, str):
            f.write(obj)
        else:
            json.dump(obj, f)
    return path


class TestParseWorkflows:
    def test_minimal_document(self, tmp_path):
        wls = ingest.parse_workflows(write(tmp_path, "w.json", MINIMAL))
        assert len(wls) == 1 and wls[0].id == "wf0"
        assert wls[0].annotations is not None
        assert wls[0].reward == pytest.approx(10.0)

    def test_diamond_depths(self, tmp_path):
        wf = ingest.parse_workflows(write(tmp_path, "w.json", DIAMOND))[0]
        assert [wf.tasks[t].depth for t in ("a", "b", "c", "d")] == [0, 1, 1, 2]

    def test_edge_to_missing_task_named(self, tmp_path):
        doc = json.loads(json.dumps(MINIMAL))
        doc[0]["edges"] = [["a", "ghost"]]
        with pytest.raises(ParseError, match="ghost"):
            ingest.parse_workflows(write(tmp_path, "w.json", doc))

    def test_cycle_named(self, tmp_path):
        doc = json.loads(json.dumps(DIAMOND))
        doc[0]["edges"].append(["d", "a"])
        with pytest.raises(ParseError, match="cycle"):
            ingest.parse_workflows(write(tmp_path, "w.json", doc))

    def test_nonpositive_length_rejected(self, tmp_path):
        doc = json.loads(json.dumps(MINIMAL))
        doc[0]["tasks"][0]["length_mi"] = -1.0
        with pytest.raises(ParseError, match="length_mi"):
            ingest.parse_workflows(write(tmp_path, "w.json", doc))

    def test_deadline_before_arrival_rejected(self, tmp_path):
        doc = json.loads(json.dumps(MINIMAL))
        doc[0]["deadline"] = -2.0
        with pytest.raises(ParseError, match="wf0"):
            ingest.parse_workflows(write(tmp_path, "w.json", doc))

    def test_missing_field_rejected(self, tmp_path):
        doc = json.loads(json.dumps(MINIMAL))
        del doc[0]["tasks"][0]["mem"]
        with pytest.raises(ParseError, match="mem"):
            ingest.parse_workflows(write(tmp_path, "w.json", doc))

    def test_round_trip(self, tmp_path):
        wls = ingest.parse_workflows(write(tmp_path, "w.json", DIAMOND))
        out = os.path.join(tmp_path, "back.json")
        ingest.write_workflows(wls, out)
        again = ingest.parse_workflows(out)
        assert len(again) == len(wls)
        a, b = wls[0], again[0]
        assert a.arrival == b.arrival and a.deadline == b.deadline
        assert sorted(a.edges) == sorted(b.edges)
        assert {t.id: t.length_mi for t in a.tasks.values()} == \
               {t.id: t.length_mi for t in b.tasks.values()}
        assert a.reward == pytest.approx(b.reward)


class TestParseDax:
    def test_dax_maps_runtimes_to_mi(self, tmp_path):
        path = write(tmp_path, "montage.dax", DAX)
        wls = ingest.parse_workflows(path, mi_per_second=5.6)
        wf = wls[0]
        assert len(wf.tasks) == 3
        assert wf.tasks["ID00000"].length_mi == pytest.approx(56.0)
        assert wf.tasks["ID00000"].task_type == "mProject"
        assert sorted(wf.edges) == [("ID00000", "ID00001"), ("ID00001", "ID00002")]
        assert critical_path_mi(wf) == pytest.approx((10 + 5 + 2.5) * 5.6)


class TestCatalog:
    def test_default_catalog_contents(self):
        cat = ingest.default_catalog()
        assert len(cat) == 6
        big = next(t for t in cat if t.name == "c3.8xlarge")
        assert big.price_on_demand == pytest.approx(1.680)
        assert big.price_reserved == pytest.approx(1.168)
        assert big.compute_power == pytest.approx(89.6)

    def test_round_trip(self, tmp_path):
        cat = ingest.default_catalog()
        path = os.path.join(tmp_path, "cat.csv")
        ingest.write_catalog(cat, path)
        assert ingest.parse_catalog(path) == cat

    def test_bad_header_rejected(self, tmp_path):
        path = write(tmp_path, "cat.csv", "nope,header\n")
        with pytest.raises(ParseError, match="header"):
            ingest.parse_catalog(path)


class TestSpotTraceIO:
    def test_round_trip(self, tmp_path):
        cat = ingest.default_catalog()
        trace = generate_spot_trace(cat, 3600.0, density=0.5, seed=3)
        path = os.path.join(tmp_path, "trace.csv")
        ingest.write_spot_trace(trace, path)
        again = ingest.parse_spot_trace(path, cat)
        assert again.samples == trace.samples

    def test_decreasing_timestamp_rejected_with_line(self, tmp_path):
        body = ("timestamp,vm_type,spot_price,available\n"
                "100.0,c3.large,0.05,1\n"
                "50.0,c3.large,0.05,1\n")
        path = write(tmp_path, "trace.csv", body)
        with pytest.raises(ParseError, match=":3"):
            ingest.parse_spot_trace(path, ingest.default_catalog())

    def test_unknown_type_named(self, tmp_path):
        body = "timestamp,vm_type,spot_price,available\n0.0,z9.mega,0.05,1\n"
        path = write(tmp_path, "trace.csv", body)
        with pytest.raises(ParseError, match="z9.mega"):
            ingest.parse_spot_trace(path, ingest.default_catalog())

    def test_price_at_or_above_on_demand_clipped(self, tmp_path):
        body = "timestamp,vm_type,spot_price,available\n0.0,c3.large,0.2,1\n"
        path = write(tmp_path, "trace.csv", body)
        trace = ingest.parse_spot_trace(path, ingest.default_catalog())
        assert trace.samples["c3.large"][0].price < 0.105


class TestSynthetic:
    def test_zero_workflows(self):
        assert generate_synthetic(0, seed=1) == []

    def test_chain_structure(self):
        wls = generate_synthetic(5, shape="chain", seed=2)
        for wf in wls:
            n = len(wf.tasks)
            assert len(wf.edges) == n - 1
            assert max(t.depth for t in wf.tasks.values()) == n - 1

    def test_seeded_generation_byte_identical(self, tmp_path):
        p1 = os.path.join(tmp_path, "a.json")
        p2 = os.path.join(tmp_path, "b.json")
        ingest.write_workflows(generate_synthetic(20, seed=9), p1)
        ingest.write_workflows(generate_synthetic(20, seed=9), p2)
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_cold_start_share(self):
        for wf in generate_synthetic(10, seed=4):
            for t in wf.tasks.values():
                assert t.cold_start_mi == pytest.approx(0.2 * t.length_mi)


class TestRunConfigFile:
    def test_parse_and_apply(self, tmp_path):
        body = (
            "# run configuration\n"
            "policy = dcd\n"
            "seed = 11\n"
            "use_spot = false\n"
            "reserved_prob = 0.4\n"
            "lambda = 0.3\n"
            "batch_len = 120\n"
            "rent_hours = 2\n"
            "workflows = wl.json\n"
            "out_dir = outdir\n"
        )
        path = write(tmp_path, "run.conf", body)
        cfg, files = ingest.parse_config(path)
        assert cfg.policy == "dcd" and cfg.seed == 11 and cfg.use_spot is False
        assert cfg.sched.reserved_prob == pytest.approx(0.4)
        assert cfg.sched.lam == pytest.approx(0.3)
        assert cfg.sched.batch_len == pytest.approx(120.0)
        assert cfg.sched.rent_hours == 2
        assert files.workflows == "wl.json" and files.out_dir == "outdir"

    def test_unknown_key_rejected_with_line(self, tmp_path):
        path = write(tmp_path, "run.conf", "nonsense_key = 3\n")
        with pytest.raises(ParseError, match=":1"):
            ingest.parse_config(path)

    def test_bad_boolean_rejected(self, tmp_path):
        path = write(tmp_path, "run.conf", "use_spot = maybe\n")
        with pytest.raises(ParseError, match="boolean"):
            ingest.parse_config(path)


class TestRunArtifacts:
    def test_write_and_reload_for_validation(self, tmp_path):
        wls = generate_synthetic(6, seed=13)
        cat = ingest.default_catalog()
        cfg = RunConfig(policy="dcd", seed=13, use_spot=False)
        rec = run(wls, None, cat, None, None, cfg)
        out = os.path.join(tmp_path, "run")
        ingest.write_run_artifacts(rec, out, cfg)
        for name in ("assignments.csv", "instances.csv", "summary.csv", "manifest.txt"):
            assert os.path.exists(os.path.join(out, name))
        loaded = ingest.load_run_artifacts(out, cat)
        assert len(loaded.segments) == len(rec.segments)
        assert len(loaded.instances) == len(rec.instances)
        from dcdsim.engine import validate_schedule
        assert validate_schedule(loaded, wls) == []
