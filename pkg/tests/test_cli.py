from __future__ import annotations

import csv
import json

import pytest

from surfadapt.cli import WORKERS_ENV, default_workers, main
from surfadapt.lattice import build_lattice, inject_defects, parse_device, serialize_device


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def clean21(tmp_path):
    lat = build_lattice(21)
    path = tmp_path / "clean21.json"
    path.write_text(serialize_device(lat, inject_defects(lat, 0, 0, 0)))
    return str(path)


def test_distance_on_clean_device(capsys, clean21):
    code, out, _ = run(capsys, "distance", clean21)
    assert code == 0
    assert out.splitlines()[0] == "dX=21 dZ=21"


def test_distance_json_and_counts(capsys):
    code, out, _ = run(capsys, "distance", "example:diagonal-ab", "--method", "traditional", "--format", "json")
    data = json.loads(out)
    assert code == 0 and (data["d_x"], data["d_z"]) == (5, 5)
    assert set(data["min_weight_counts"]) == {"X", "Z"}


def test_gen_round_trips_and_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert main(["gen", "--L", "9", "--rate", "0.02", "--seed", "4", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lat, dm = parse_device(a.read_text())
    assert lat.size == 9
    assert serialize_device(lat, dm) == a.read_text()


def test_gen_many(tmp_path):
    assert main(["gen", "--L", "5", "--rate", "0.01", "--n", "3", "--seed", "10", "--out", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == [f"device_L5_s{s}.json" for s in (10, 11, 12)]


def test_gen_example(capsys):
    code, out, _ = run(capsys, "gen", "--example", "avalanche")
    assert code == 0
    lat, _ = parse_device(out)
    assert lat.size == 7


def test_adapt_reports(capsys):
    code, out, _ = run(capsys, "adapt", "example:avalanche", "--method", "traditional", "--no-events")
    rep = json.loads(out)
    assert code == 0 and rep["commutation_ok"]
    assert "events" not in rep
    assert rep["counts"]["disabled_total"] == len(rep["disabled"])
    code, text, _ = run(capsys, "adapt", "example:avalanche", "--format", "text")
    assert code == 0 and "commutation: ok" in text


def test_stats_both_methods(capsys):
    code, out, _ = run(capsys, "stats", "example:diagonal-abc")
    lines = out.splitlines()
    assert code == 0
    assert lines[0].startswith("bandage: dX=4 dZ=6")
    assert lines[1].startswith("traditional: dX=4 dZ=4")


def test_circuit_then_verify(capsys, tmp_path):
    circ = tmp_path / "c.stim"
    assert main(["circuit", "example:diagonal-ab", "--shell", "LOCALAVG:0.5", "--state", "plus", "--p", "0.001", "--out", str(circ)]) == 0
    text = circ.read_text()
    assert "DETECTOR" in text and "OBSERVABLE_INCLUDE(0)" in text
    code, out, _ = run(capsys, "verify", str(circ), "--shots", "50", "--bits", "b8", "--sample-dir", str(tmp_path))
    assert code == 0 and out.startswith("ok ")
    assert (tmp_path / "c.dets.b8").exists() and (tmp_path / "c.obs.b8").exists()


def test_verify_fails_on_nondeterministic_file(capsys, tmp_path):
    bad = tmp_path / "bad.stim"
    bad.write_text("H 0\nM 0\nDETECTOR rec[-1]\n")
    code, out, _ = run(capsys, "verify", str(bad))
    assert code == 1 and out.startswith("FAIL")


def test_sweep_writes_manifest(tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", "example:diagonal-a", "--shells", "GLOBAL:1", "GLOBAL:2", "--p", "0.001", "0.002", "--state", "zero", "--cycles", "3", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["circuits"]) == 4


def test_ensemble_outputs(tmp_path):
    out = tmp_path / "ens"
    args = ["ensemble", "--L", "9", "--rate", "0.01", "0.02", "--n", "5", "--out", str(out)]
    assert main(args) == 0
    names = sorted(p.name for p in out.iterdir())
    assert "compare_L9_q0.02_c0.02.json" in names
    assert "distance_L9.svg" in names
    first = {n: (out / n).read_bytes() for n in names}
    assert main(args) == 0
    assert {n: (out / n).read_bytes() for n in names} == first
    body = [l for l in (out / "summary_L9_q0.01_c0.01.csv").read_text().splitlines() if not l.startswith("#")]
    assert [r["method"] for r in csv.DictReader(body)] == ["bandage", "traditional"]


def test_render(capsys):
    code, out, _ = run(capsys, "render", "example:weight-one")
    assert code == 0 and out.startswith("<svg")


@pytest.mark.parametrize(
    "argv",
    [
        ["distance", "/nonexistent/device.json"],
        ["distance", "example:no-such-example"],
        ["circuit", "example:diagonal-a", "--shell", "GLOBAL:9"],
        ["ensemble", "--L", "5"],
    ],
)
def test_pipeline_errors_exit_one(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert err.startswith(f"surfadapt {argv[0]}:")


def test_malformed_device_file(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"L": 4}')
    code, _, err = run(capsys, "adapt", str(bad))
    assert code == 1 and "DeviceFormatError" in err


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["distance"], ["circuit", "x", "--state", "minus"]])
def test_usage_errors_exit_two(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2
    assert "usage:" in capsys.readouterr().err


def test_workers_env(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    assert default_workers() == 1
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert default_workers() == 3
    monkeypatch.setenv(WORKERS_ENV, "many")
    with pytest.raises(ValueError):
        default_workers()
