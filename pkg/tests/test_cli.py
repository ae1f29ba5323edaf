import csv
import json

import pytest

from trapres.cli import EXIT_COUNT, EXIT_ERROR, main


def test_identities_and_manifest(tmp_path):
    assert main(["identities", "--out", str(tmp_path)]) == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["schema"] == 1 and man["outputs"] == ["identities.json"]
    assert len(man["input_hash"]) == 64 and "channel.h" in man["derived"]
    assert json.loads((tmp_path / "identities.json").read_text())["all_passed"]


def test_poles_rows(tmp_path):
    assert main(["poles", "--eps", "0.005", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "poles.csv")))
    assert [r["source"] for r in rows] == ["asymptotic"] * 2 + ["oracle"] * 2
    assert all(float(r["im"]) < 0 for r in rows)


def test_poles_count_mismatch_exit(tmp_path):
    assert main(["poles", "--eps", "0.02", "--out", str(tmp_path)]) == EXIT_COUNT
    assert (tmp_path / "poles.csv").exists()


def test_bad_config(tmp_path):
    cfg = tmp_path / "x.ini"
    cfg.write_text("[trap]\nwidth = 2\n")
    assert main(["junction", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_ERROR


def test_field_dump_format(tmp_path):
    cfg = tmp_path / "f.ini"
    cfg.write_text("[field]\nnx = 5\nny = 7\nx1_min = -0.1\nx1_max = 0.1\n")
    assert main(["field", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "field.txt").read_text().splitlines()
    assert lines[0] == "# x1 x2 re im region flag"
    body = [ln.split() for ln in lines[1:]]
    assert all(len(r) == 6 for r in body)
    assert any(r[5] == "overlap" for r in body)


def test_peaks_and_junction(tmp_path):
    assert main(["peaks", "--out", str(tmp_path)]) == 0
    assert len((tmp_path / "peaks.csv").read_text().splitlines()) == 1 + 2 * 17
    assert main(["junction", "--out", str(tmp_path)]) == 0
    j = json.loads((tmp_path / "junction.json").read_text())
    assert abs(j["tail_fit"]["q_omega"] - j["closed_form"]["q_omega"]) < 1e-5


def test_unknown_command():
    with pytest.raises(SystemExit):
        main(["bogus"])
