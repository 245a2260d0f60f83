import json
from pathlib import Path

import pytest

from artic import io
from artic.cli import main


def tree_bytes(root):
    root = Path(root)
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def suite(tmp_path_factory):
    out = tmp_path_factory.mktemp("suite")
    assert main(["gen", "--template", "door,drawer", "--points", "256", "--seed", "4",
                 "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def fast_config(tmp_path_factory):
    p = tmp_path_factory.mktemp("cfg") / "opt.json"
    p.write_text(json.dumps({"restarts": 2, "max_iters": 25}))
    return p


def test_gen_layout_and_determinism(suite, tmp_path):
    assert sorted(p.name for p in suite.iterdir()) == ["door-004", "drawer-004", "suite.json"]
    seq, gt, mags, meta = io.load_sequence(suite / "door-004")
    assert len(seq.frames) == 10 and meta["template"] == "door"
    assert gt.kind.value == "revolute"
    main(["gen", "--template", "door,drawer", "--points", "256", "--seed", "4",
          "--out", str(tmp_path)])
    assert tree_bytes(tmp_path) == tree_bytes(suite)


def test_gen_noise_flags(tmp_path):
    assert main(["gen", "--template", "lid", "--points", "256", "--jitter", "0.01",
                 "--dropout", "0.5", "--outliers", "0.05", "--frames", "4",
                 "--ascii", "--out", str(tmp_path)]) == 0
    seq, *_ = io.load_sequence(tmp_path / "lid-000")
    assert len(seq.frames) == 4
    assert len(seq.frames[0]) == 256 - 128 + 13


def test_estimate_both(suite, fast_config, tmp_path):
    args = ["estimate", str(suite / "door-004"), "--method", "both", "--config",
            str(fast_config), "--overlay", str(tmp_path / "o.ply"),
            "--trace", str(tmp_path / "t.csv")]
    assert main(args + ["--out", str(tmp_path / "r1.json")]) == 0
    assert main(["--threads", "2"] + args + ["--out", str(tmp_path / "r2.json")]) == 0
    r1 = (tmp_path / "r1.json").read_bytes()
    assert r1 == (tmp_path / "r2.json").read_bytes()
    rep = json.loads(r1)
    assert rep["format_version"] == io.REPORT_VERSION
    assert set(rep["methods"]) == {"algo", "direct"}
    assert len(rep["methods"]["algo"]["ranked"]) == 84
    assert rep["config"]["optimizer"]["restarts"] == 2
    assert rep["conventions"]["mae"].startswith("arccos")
    assert "iterations" in rep["methods"]["direct"]["trace"]
    assert (tmp_path / "t.csv").read_text().startswith("iteration,loss\n")


def test_estimate_fixed_kind_stdout(suite, capsys):
    assert main(["estimate", str(suite / "drawer-004"), "--kind", "prismatic"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert len(rep["methods"]["algo"]["ranked"]) == 42
    assert rep["methods"]["algo"]["best"]["axis"]["kind"] == "prismatic"


def test_eval_outputs(suite, fast_config, tmp_path):
    for run in ("a", "b"):
        assert main(["eval", "--suite", str(suite), "--methods", "algo", "--config",
                     str(fast_config), "--csv", str(tmp_path / f"{run}.csv"),
                     "--json", str(tmp_path / f"{run}.json")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    rows = io.parse_metrics_record(io.load_json(tmp_path / "a.json"))
    assert [(r.object_id, r.method) for r in rows] == [("door-004", "algo"),
                                                       ("drawer-004", "algo")]
    assert all(r.mae_deg < 0.5 for r in rows)
    assert (tmp_path / "a.csv").read_text().splitlines()[0].startswith("object_id,method")


def test_ablate_small(fast_config, tmp_path):
    args = ["ablate", "--noise-grid", "0.01", "--seeds", "2", "--points", "256",
            "--templates", "door,lid", "--config", str(fast_config)]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(["--threads", "2"] + args + ["--out", str(tmp_path / "b")]) == 0
    assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")
    summary = io.load_json(tmp_path / "a" / "summary.json")
    assert set(summary["ordering"]) == {"mae_algo_lt_direct", "mpe_algo_le_direct"}
    assert summary["levels"][0]["means"]["algo"]["n"] == 2
    assert (tmp_path / "a" / "table.md").read_text().startswith("| jitter")


@pytest.mark.parametrize("argv", [
    ["gen"],
    ["gen", "--template", "fridge", "--out", "x"],
    ["estimate", "m.json", "--method", "magic"],
    ["ablate", "--noise-grid", "a,b", "--out", "x"],
    ["frobnicate"],
])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as err:
        main(argv)
    assert err.value.code == 64


def test_flag_combination_errors(suite, tmp_path):
    assert main(["estimate", str(suite / "door-004"), "--seed-from-algo"]) == 64
    assert main(["estimate", str(suite / "door-004"), "--trace", "t.csv"]) == 64
    assert main(["gen", "--dropout", "1.5", "--out", str(tmp_path)]) == 64
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"restarts": 0}))
    assert main(["estimate", str(suite / "door-004"), "--method", "direct",
                 "--config", str(bad)]) == 64


def test_io_errors(tmp_path, capsys):
    assert main(["estimate", str(tmp_path / "missing")]) == 66
    assert "missing" in capsys.readouterr().err
    assert main(["eval", "--suite", str(tmp_path / "none")]) == 66
    broken = tmp_path / "obj"
    broken.mkdir()
    (broken / "manifest.json").write_text("{")
    assert main(["estimate", str(broken)]) == 66


def test_numerical_failure_exit_code(tmp_path):
    import numpy as np
    from artic.geometry import ObservedSequence, PointCloud

    rest = PointCloud(np.r_[np.eye(3), -np.eye(3)] * 1e200, [0, 0, 0, 1, 1, 1])
    # extent overflows to inf, so no diagonal goes into the manifest
    io.save_sequence(tmp_path, ObservedSequence(rest, [rest.dynamic]), metadata={"diagonal": None})
    assert main(["estimate", str(tmp_path), "--method", "direct",
                 "--kind", "prismatic"]) == 2
