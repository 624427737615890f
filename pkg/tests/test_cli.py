import json

import pytest

from percforks import cli
from percforks.lattice import import_bitmap


def run(tmp_path, *argv):
    return cli.main([*argv, "--out", str(tmp_path)])


def manifest(tmp_path):
    return json.loads((tmp_path / "manifest.json").read_text())


def test_ust_dimensions_and_manifest(tmp_path):
    assert run(tmp_path, "ust", "--size", "32", "--seed", "1") == 0
    pic = import_bitmap((tmp_path / "picture.pbm").read_text())
    assert pic.values.shape == (63, 63)
    man = manifest(tmp_path)
    assert man["seed"] == 1 and man["subcommand"] == "ust"
    assert set(man["outputs"]) == {"picture.pbm", "clusters.csv"}


def test_same_seed_same_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        d.mkdir()
        assert run(d, "forks", "--l0", "2", "--d0", "2", "--factors", "2,4", "--seed", "5") == 0
    assert (a / "rf.pbm").read_bytes() == (b / "rf.pbm").read_bytes()
    assert (a / "windows.csv").read_bytes() == (b / "windows.csv").read_bytes()


def test_missing_seed_is_recorded(tmp_path):
    assert run(tmp_path, "ust", "--size", "4") == 0
    assert isinstance(manifest(tmp_path)["seed"], int)


def test_crossing_output(tmp_path, capsys):
    assert run(tmp_path, "crossing", "--dims", "3x2", "--p", "0.5", "--exact") == 0
    rows = capsys.readouterr().out.splitlines()
    assert rows[0] == "width,height,direction,p,exact"
    assert float(rows[1].split(",")[-1]) == pytest.approx(0.5)
    assert (tmp_path / "crossing.csv").exists()


@pytest.mark.parametrize("argv", [
    ["forks", "--l0", "2", "--d0", "2", "--factors", "2,1"],
    ["crossing", "--dims", "3by2", "--p", "0.5"],
    ["crossing", "--dims", "3x2", "--p", "1.5"],
    ["experiment", "coexistence", "--params", "{bad"],
    ["ust"],
])
def test_usage_errors(tmp_path, argv):
    assert run(tmp_path, *argv) == 2


def test_site_cap(tmp_path):
    assert run(tmp_path, "forks", "--l0", "2", "--d0", "2", "--factors", "2,4",
               "--max-sites", "10", "--seed", "1") == 2


def test_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["ust", "--size", "3", "--seed", "1", "--out", str(blocker / "sub")]) == 3


def test_replay_is_byte_identical(tmp_path, capsys):
    first = tmp_path / "first"
    first.mkdir()
    assert run(first, "experiment", "coexistence", "--params",
               json.dumps({"l0": 2, "d0": 2, "factors": [2, 4], "eps": 0.02}),
               "--trials", "5", "--seed", "3") == 0
    again = tmp_path / "again"
    again.mkdir()
    assert cli.main(["replay", str(first / "manifest.json"), "--out", str(again)]) == 0
    assert "byte-identically" in capsys.readouterr().out


def test_replay_detects_tampering(tmp_path):
    first = tmp_path / "first"
    first.mkdir()
    assert run(first, "ust", "--size", "5", "--seed", "2") == 0
    man = manifest(first)
    man["outputs"]["picture.pbm"]["sha256"] = "0" * 64
    (first / "manifest.json").write_text(json.dumps(man))
    again = tmp_path / "again"
    again.mkdir()
    assert cli.main(["replay", str(first / "manifest.json"), "--out", str(again)]) == 1


def test_outdir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("PERCFORKS_OUTDIR", str(tmp_path))
    assert cli.main(["ust", "--size", "3", "--seed", "1"]) == 0
    assert (tmp_path / "picture.pbm").exists()


def test_verify_suite(tmp_path):
    assert run(tmp_path, "verify", "--suite", "membership") == 0
    data = json.loads((tmp_path / "verify_membership.json").read_text())
    assert data


def test_verify_unknown_suite(tmp_path):
    assert run(tmp_path, "verify", "--suite", "nope") == 2
