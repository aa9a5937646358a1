import csv
import json

import numpy as np
import pytest

from twoweight import io
from twoweight.cli import main
from twoweight.measures import Measure1D, Measure2D


def test_measure_json_and_csv_round_trip(tmp_path):
    s = Measure1D([0.1, 0.25, 0.7], [1.0, 0.5, 2.0])
    t = Measure2D([(0.3, 0.2), (0.9, 0.05)], [1.5, 0.25])
    for m, name in ((s, "s"), (t, "t")):
        pj = tmp_path / f"{name}.json"
        pj.write_text(json.dumps(io.measure_to_dict(m)))
        assert io.load_measure(pj) == m
        pc = tmp_path / f"{name}.csv"
        pc.write_text(io.measure_csv(m))
        assert io.load_measure(pc) == m


def test_measure_file_layouts():
    one = io.measure_from_dict({"domain": "line", "atoms": [[0.2, 1.0], [0.6, 3.0]]})
    assert one == Measure1D([0.2, 0.6], [1.0, 3.0])
    assert io.measure_from_dict({"domain": "line", "atoms": [[[0.2], 1.0]]}) == Measure1D([0.2], [1.0])
    two = io.measure_from_dict({"domain": "half-plane", "atoms": [[0.3, 0.2, 1.5]]})
    assert two == Measure2D([(0.3, 0.2)], [1.5])
    assert io.measure_from_dict({"domain": "disk", "atoms": []}) == Measure2D.zero("disk")
    assert io.measure_from_dict({"positions": [0.1], "masses": [2.0]}) == Measure1D([0.1], [2.0])
    with pytest.raises(ValueError):
        io.measure_from_dict({"atoms": [[0.1, 1.0], [0.2, 0.3, 1.0]]})


def test_report_cleaning_handles_numpy_and_nonfinite(tmp_path):
    data = {"a": np.float64(1.5), "b": np.array([1, 2]), "c": float("inf"), "d": np.bool_(True),
            "e": {"f": float("nan")}}
    p = io.write_report(tmp_path, "r", data)
    back = json.loads(p.read_text())
    assert back == {"a": 1.5, "b": [1, 2], "c": "inf", "d": True, "e": {"f": "nan"}}
    pc = io.write_report(tmp_path, "r", data, "csv")
    rows = list(csv.reader(pc.open()))
    assert rows[0] == ["key", "value"] and ["e.f", "nan"] in rows
    with pytest.raises(ValueError):
        io.write_report(tmp_path, "r", data, "xml")


def test_cli_constants_from_files(tmp_path):
    (tmp_path / "s.json").write_text(json.dumps(io.measure_to_dict(Measure1D([0.5], [1.0]))))
    (tmp_path / "t.json").write_text(json.dumps(io.measure_to_dict(Measure2D([(0.5, 0.5)], [1.0]))))
    out = tmp_path / "out"
    assert main(["constants", "--sigma", str(tmp_path / "s.json"), "--tau", str(tmp_path / "t.json"),
                 "--out", str(out), "--kmin", "-8"]) == 0
    d = json.loads((out / "constants.json").read_text())
    assert d["n_direct"] == pytest.approx(2.0) and d["t_forward"] <= d["n_direct"] + 1e-9


def test_cli_random_instance_csv(tmp_path):
    assert main(["constants", "--atoms", "12", "--out", str(tmp_path), "--format", "csv", "--kmin", "-10"]) == 0
    rows = dict(csv.reader((tmp_path / "constants.csv").open()))
    assert float(rows["t_forward"]) <= float(rows["n_direct"]) + 1e-9


def test_cli_norm_energy_corona_grid(tmp_path):
    assert main(["norm", "--atoms", "10", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "norm.json").read_text())["norm"] > 0
    assert main(["energy", "--atoms", "16", "--which", "II", "--out", str(tmp_path)]) == 0
    assert "ratio" in json.loads((tmp_path / "energy_II.json").read_text())
    assert main(["corona", "--atoms", "24", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "corona.json").read_text())["summary"]["carleson_ratio"] <= 0.5
    assert main(["corona", "--atoms", "24", "--out", str(tmp_path), "--format", "csv", "--side", "f"]) == 0
    assert main(["grid-stats", "--trials", "500", "--r", "4", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "grid_stats.json").read_text())["trials"] == 500


def test_cli_clark_and_disk(tmp_path):
    assert main(["clark", "--zeros", "0,0", "--out", str(tmp_path)]) == 0
    d = json.loads((tmp_path / "clark.json").read_text())
    assert d["total_mass"] == pytest.approx(1.0) and d["residual"] < 1e-8
    assert main(["clark", "--zeros", "0,0", "--out", str(tmp_path), "--clark-tol", "0"]) == 1
    assert main(["disk", "--degree", "2", "--atoms", "6", "--profile", "--out", str(tmp_path)]) == 0
    d = json.loads((tmp_path / "disk.json").read_text())
    assert d["constants"]["t_forward"] <= d["constants"]["n_direct"] + 1e-9
    assert "profile" in d


def test_cli_suite_exit_codes(tmp_path):
    cfg = tmp_path / "small.json"
    cfg.write_text(json.dumps({"n_instances": 3, "haar_instances": 2, "hardy_instances": 3}))
    out = tmp_path / "ok"
    assert main(["suite", "--config", str(cfg), "--only", "1", "8", "--out", str(out)]) == 0
    d = json.loads((out / "suite.json").read_text())
    assert d["passed"] and [c["criterion"] for c in d["criteria"]] == [1, 8]
    assert (out / "instances.csv").exists() and (out / "timings.json").exists()
    bad = tmp_path / "bad"
    assert main(["suite", "--config", str(cfg), "--only", "4", "--tol", "0", "--out", str(bad),
                 "--format", "csv"]) == 1
    rows = list(csv.reader((bad / "suite.csv").open()))
    assert rows[1][2] == "fail"


def test_cli_figures_optional(tmp_path):
    pytest.importorskip("matplotlib")
    assert main(["clark", "--zeros", "0.5,0.2+0.3j", "--out", str(tmp_path), "--figures"]) == 0
    assert (tmp_path / "clark.png").exists()
