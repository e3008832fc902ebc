import json

import numpy as np
import pytest

from conewave import ConfigurationError, DataError
from conewave.cli import main
from conewave.scenario import load_scenario, parse_scenario, run_scenario


def circle(r, m=64, center=(0.0, 0.0)):
    th = np.arange(m) * 2 * np.pi / m
    return [[center[0] + r * float(np.cos(a)),
             center[1] + r * float(np.sin(a))] for a in th]


def disk_scenario():
    return {
        "name": "disk",
        "metric": {"family": "minkowski", "params": {"c": 1.0}},
        "initial_set": circle(1.0),
        "t_grid": [0.25, 0.5, 0.75, 1.0],
        "outputs": ["fronts_csv", "seeds_csv", "traces_csv", "report_json",
                    "svg"],
    }


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


# ---------------------------------------------------------------- validation

def pointer_of(exc):
    return str(exc).split(":", 1)[0]


def test_validation_pointers():
    bad_lambda = {"name": "x",
                  "metric": {"family": "quartic", "params": {"lambda": 0.2}},
                  "initial_set": circle(1.0), "t_grid": [0.5]}
    with pytest.raises(ConfigurationError) as ei:
        parse_scenario(bad_lambda)
    assert pointer_of(ei.value) == "/metric/params/lambda"

    with pytest.raises(ConfigurationError) as ei:
        parse_scenario(dict(disk_scenario(), t_grid=[0.5, 0.25]))
    assert pointer_of(ei.value) == "/t_grid"

    with pytest.raises(ConfigurationError) as ei:
        parse_scenario(dict(disk_scenario(), outputs=["fronts_csv", "nope"]))
    assert pointer_of(ei.value) == "/outputs/1"

    extra = dict(disk_scenario())
    extra["mystery"] = 1
    with pytest.raises(ConfigurationError) as ei:
        parse_scenario(extra)
    assert pointer_of(ei.value) == "/mystery"

    with pytest.raises(ConfigurationError) as ei:
        parse_scenario(dict(disk_scenario(),
                            initial_set=[circle(1.0), circle(0.3)]))
    assert pointer_of(ei.value).startswith("/initial_set")


def test_load_rejects_bad_json(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{nope")
    with pytest.raises(DataError):
        load_scenario(str(p))


# ------------------------------------------------------------------ running

def test_disk_scenario_runs_clean(tmp_path):
    s = parse_scenario(disk_scenario())
    code, report = run_scenario(s, str(tmp_path / "out"))
    assert code == 0
    assert [su["name"] for su in report["suites"]] == [
        "metric_conditions", "lift_residuals", "conservation", "trim",
        "front_simplicity"]
    assert all(su["pass"] for su in report["suites"])
    assert report["first_cut_time"] is None
    for name in ("fronts.csv", "seeds.csv", "traces.csv", "report.json",
                 "scene.svg"):
        assert (tmp_path / "out" / name).exists()
    header = (tmp_path / "out" / "fronts.csv").read_text().splitlines()[0]
    assert header == "slice_index,tau,seed_index,loop,active,x1,x2"


def test_reruns_are_byte_identical(tmp_path):
    s = parse_scenario(disk_scenario())
    run_scenario(s, str(tmp_path / "a"))
    run_scenario(s, str(tmp_path / "b"))
    for name in ("fronts.csv", "seeds.csv", "traces.csv", "report.json",
                 "scene.svg"):
        assert ((tmp_path / "a" / name).read_bytes()
                == (tmp_path / "b" / name).read_bytes()), name


def test_merge_scenario_with_oracle(tmp_path):
    merge = {
        "name": "merge",
        "metric": {"family": "minkowski", "params": {}},
        "initial_set": [circle(0.5, 64, (-1.0, 0.0)),
                        circle(0.5, 64, (1.0, 0.0))],
        "t_grid": [round(v, 10) for v in np.linspace(0.05, 1.0, 20)],
        "oracle": {"dx": 0.04, "dt_layer": 0.04,
                   "extents": [[-2.2, 2.2], [-2.2, 2.2]]},
        "outputs": ["report_json"],
    }
    s = parse_scenario(merge)
    code, report = run_scenario(s, str(tmp_path / "out"), use_oracle=True)
    assert code == 0
    suites = {su["name"]: su for su in report["suites"]}
    assert abs(report["first_cut_time"] - 0.5) <= 0.05 + 1e-12
    assert suites["achronality"]["details"]["violations"] == 0
    assert suites["oracle_comparison"]["pass"]
    assert (tmp_path / "out" / "arrival.csv").exists()


def test_unreachable_refinement_gap_fails_the_run(tmp_path):
    s = parse_scenario(dict(disk_scenario(), outputs=["report_json"],
                            refinement={"max_gap": 0.002}))
    code, report = run_scenario(s, str(tmp_path / "out"), use_refine=True)
    assert code == 1
    suites = {su["name"]: su for su in report["suites"]}
    assert not suites["refinement"]["pass"]


def test_refinement_measures_gaps_within_loops_only(tmp_path):
    # After a merge the jump from one loop's seeds to the next loop's is a
    # trim junction, not a sampling gap, and no amount of seeding shrinks
    # it; the suite must roll chords within each loop separately.
    merged = {
        "name": "merged-refine",
        "metric": {"family": "minkowski", "params": {}},
        "initial_set": [circle(0.5, 48, (-1.0, 0.0)),
                        circle(0.5, 48, (1.0, 0.0))],
        "t_grid": [0.25, 0.5, 0.75, 1.0],
        "refinement": {"max_gap": 0.1},
        "outputs": ["report_json"],
    }
    s = parse_scenario(merged)
    code, report = run_scenario(s, str(tmp_path / "out"), use_refine=True)
    assert code == 0
    assert report["first_cut_time"] is not None
    ref = {su["name"]: su for su in report["suites"]}["refinement"]
    assert ref["pass"]
    assert ref["details"]["worst_gap_after"] <= 0.1 * 1.05
    assert ref["details"]["seeds_after"] > ref["details"]["seeds_before"]


def test_oracle_flag_without_block_is_a_module_error(tmp_path):
    s = parse_scenario(disk_scenario())
    code, report = run_scenario(s, str(tmp_path / "out"), use_oracle=True)
    assert code == 2
    assert report["error"]["type"] == "ConfigurationError"


# --------------------------------------------------------------------- CLI

def test_cli_run_and_check(tmp_path, capsys):
    p = write(tmp_path, "disk.json", disk_scenario())
    assert main(["check", "--scenario", p]) == 0
    assert main(["run", "--scenario", p,
                 "--out", str(tmp_path / "out")]) == 0
    out = capsys.readouterr().out
    assert "PASS front_simplicity" in out


def test_cli_missing_file_exits_66(tmp_path):
    assert main(["check", "--scenario", str(tmp_path / "absent.json")]) == 66


def test_cli_invalid_content_exits_65(tmp_path):
    p = write(tmp_path, "bad.json", dict(disk_scenario(), t_grid=[1.0, 0.5]))
    assert main(["check", "--scenario", p]) == 65
    q = tmp_path / "broken.json"
    q.write_text("{nope")
    assert main(["check", "--scenario", str(q)]) == 65


def test_cli_usage_errors_exit_64(tmp_path):
    with pytest.raises(SystemExit) as ei:
        main(["run", "--scenario", "x", "--out", "y", "--frobnicate"])
    assert ei.value.code == 64
    with pytest.raises(SystemExit) as ei:
        main(["nosuchcommand"])
    assert ei.value.code == 64
    with pytest.raises(SystemExit) as ei:
        main([])
    assert ei.value.code == 64


def test_cli_families(capsys):
    assert main(["families"]) == 0
    out = capsys.readouterr().out
    for fam in ("minkowski", "zermelo", "quartic"):
        assert fam in out
