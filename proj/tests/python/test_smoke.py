import json
import os
import random
import subprocess
from pathlib import Path

import pytest

import geoidx

ROOT = Path(os.environ.get("GEOIDX_SOURCE_DIR", Path(__file__).resolve().parents[2]))
SCENARIOS = ROOT / "scenarios"

STUDENTS = [
    {"name": "GPA", "type": "numeric", "min": 0, "max": 4},
    {"name": "Major", "type": "text", "min": "A", "max": "z"},
]


def test_metrics_header():
    assert geoidx.METRICS_HEADER.split(",")[:3] == ["tick", "query_id", "level"]


def test_cluster_routes_like_the_oracle():
    c = geoidx.Cluster(STUDENTS, dcs=3, topology="fig2", partitions=2,
                       net={"seed": 5, "dup_prob": 0.2, "reorder_jitter": 10})
    rng = random.Random(1)
    majors = ["Computer Science", "Math", "Physics"]
    for i in range(200):
        c.put(rng.randint(1, 3), f"s{i % 60}",
              {"GPA": round(rng.uniform(0, 4), 1), "Major": rng.choice(majors)})
    c.run()
    assert c.converged()
    for dc in ("DC1", "DC2", "DC3"):
        text = '(GPA > 2.0 AND GPA < 3.0) AND Major = "Computer Science" FRESHNESS strong'
        r = c.route(text, dc)
        assert r["error"] is None
        assert r["keys"] == c.scan(text, dc)
        assert "freshness-dispatch" in r["trace"]


def test_scrub_matches_rebuild_after_conflict():
    schema = [{"name": "Attr", "type": "text", "min": "A", "max": "Z"}]
    c = geoidx.Cluster(schema, dcs=2)
    c.put("DC1", "Obj", {"Attr": "A"})
    c.put("DC2", "Obj", {"Attr": "B"})
    c.run()
    assert c.route('Attr = "A" FRESHNESS strong')["keys"] == []
    assert c.scrub() == 2
    assert c.leaf_indexes() == c.rebuilt_indexes()


def test_split_and_merge_keep_answers():
    c = geoidx.Cluster(STUDENTS, dcs=1)
    for i in range(100):
        c.put(1, f"k{i}", {"GPA": (i % 40) / 10, "Major": "Math"})
    c.run()
    before = c.route("GPA >= 1.5 FRESHNESS strong")["keys"]
    a, b = c.split("leaf@DC1")
    assert c.route("GPA >= 1.5 FRESHNESS strong")["keys"] == before
    c.merge(a, b)
    assert c.route("GPA >= 1.5 FRESHNESS strong")["keys"] == before


def test_errors_are_typed():
    c = geoidx.Cluster(STUDENTS)
    with pytest.raises(geoidx.QueryError):
        c.route("GPA >> 1")
    with pytest.raises(geoidx.GeoidxError):
        c.put("DC9", "k", {"GPA": 1.0, "Major": "Math"})
    with pytest.raises(geoidx.ValidationError) as e:
        geoidx.Cluster(STUDENTS, net={"max_delay": "soon"})
    assert "max_delay" in str(e.value)


def test_normalize_query():
    assert geoidx.normalize_query("GPA > 2.0", STUDENTS) == \
        "GPA > 2 FRESHNESS any"


def test_fig3_scenario_passes_and_is_deterministic(tmp_path):
    a = geoidx.run_scenario(str(SCENARIOS / "fig3.scenario"), trace=True, out_dir=str(tmp_path))
    b = geoidx.run_scenario(str(SCENARIOS / "fig3.scenario"), trace=True)
    assert a["passed"] and a["checks"] > 0
    for field in ("metrics_csv", "routing_trace", "event_trace_csv", "verify_report", "final_state"):
        assert a[field] == b[field]
    assert (tmp_path / "metrics.csv").read_text().startswith(geoidx.METRICS_HEADER + "\n")
    assert a["event_trace_csv"].startswith("tick,src,dst,kind,detail\n")


def test_gen_workload_is_seeded():
    params = str(SCENARIOS / "churn.params.json")
    one = geoidx.gen_workload(params, seed=4)
    assert one == geoidx.gen_workload(params, seed=4)
    assert one != geoidx.gen_workload(params, seed=5)
    assert len(json.loads(one)["actions"]) == 2300


def test_validation_error_names_line():
    with pytest.raises(geoidx.ValidationError) as e:
        geoidx.run_scenario(str(ROOT / "tests" / "data" / "gap.scenario"))
    assert "gap.scenario:7:" in str(e.value)
    assert "x=5" in str(e.value)


CLI = os.environ.get("GEOIDX_CLI")


@pytest.mark.skipif(not CLI, reason="CLI path not provided")
def test_cli_exit_codes(tmp_path):
    ok = subprocess.run([CLI, "verify", str(SCENARIOS / "fig3.scenario"), "--out-dir", str(tmp_path)],
                        capture_output=True, text=True)
    assert ok.returncode == 0, ok.stderr
    assert "PASS" in ok.stdout
    bad = subprocess.run([CLI, "run", str(ROOT / "tests" / "data" / "gap.scenario")], capture_output=True, text=True)
    assert bad.returncode == 2
    assert "gap.scenario:7:" in bad.stderr
    q = subprocess.run([CLI, "query", str(tmp_path), "GPA >= 0 FRESHNESS strong", "--oracle"],
                       capture_output=True, text=True)
    assert q.returncode == 0, q.stderr
    assert "match" in q.stdout
