import csv
import json
import math

import numpy as np
import pytest

from twave.cli import main
from twave.quadrature1d import gp_oracle


def _read_csv(path):
    lines = path.read_text().splitlines()
    header = {}
    while lines and lines[0].startswith("# "):
        key, _, value = lines.pop(0)[2:].partition(": ")
        header[key] = value
    rows = list(csv.DictReader(lines))
    return header, rows


def _toml(path, text):
    path.write_text(text)
    return str(path)


def test_check_gp(tmp_path):
    assert main(["check", "--model", "gp", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "assumptions.json").read_text())
    assert rep["passed"]


def test_check_example55_file(tmp_path):
    path = _toml(tmp_path / "example55.toml", '[model]\nkind = "example55"\n')
    assert main(["check", "--model", path, "--out", str(tmp_path)]) == 0
    checks = {c["id"]: c["status"] for c in json.loads((tmp_path / "assumptions.json").read_text())["checks"]}
    assert checks["A1"] == "pass" and checks["B1"] == "pass"


def test_malformed_toml_is_config_error(tmp_path, capsys):
    path = _toml(tmp_path / "bad.toml", "[model\nkind = gp\n")
    assert main(["check", "--model", path, "--out", str(tmp_path)]) == 2
    assert "TOML parse error" in capsys.readouterr().err


def test_unknown_kind_is_config_error(tmp_path):
    path = _toml(tmp_path / "m.toml", '[model]\nkind = "quintic"\n')
    assert main(["check", "--model", path, "--out", str(tmp_path)]) == 2


def test_profile_gp(tmp_path):
    assert main(["profile", "--model", "gp", "--c", "1.0", "--out", str(tmp_path)]) == 0
    inv = json.loads((tmp_path / "invariants.json").read_text())
    assert inv["energy"] == pytest.approx(2 / 3, abs=1e-6)
    header, rows = _read_csv(tmp_path / "profile.csv")
    x = np.array([float(r["x"]) for r in rows])
    rho = np.array([float(r["rho"]) for r in rows])
    assert np.max(np.abs(rho - gp_oracle(1.0).rho(x))) < 1e-6


def test_profile_supersonic(tmp_path, capsys):
    assert main(["profile", "--model", "gp", "--c", "1.5", "--out", str(tmp_path)]) == 3
    assert "supersonic speed" in capsys.readouterr().err


def test_profile_degenerate_turning_point(tmp_path, capsys):
    path = _toml(tmp_path / "example43.toml", '[model]\nkind = "example43"\nc0 = 1.2\n')
    assert main(["profile", "--model", path, "--c", "1.2", "--out", str(tmp_path)]) == 4
    assert "degenerate turning point" in capsys.readouterr().err


def test_dispersion_gp_oracle_flag(tmp_path):
    args = ["dispersion", "--model", "gp", "--c-min", "0.05", "--c-max", "1.35", "--n", "25"]
    assert main(args + ["--out", str(tmp_path)]) == 0
    diag = json.loads((tmp_path / "diagnostics.json").read_text())
    assert diag["oracle_check"]["passed"]
    _, rows = _read_csv(tmp_path / "curve.csv")
    assert len(rows) == 25


def test_emin1_below_sonic_line(tmp_path):
    assert main(["emin1", "--model", "gp", "--p-grid", "64", "--out", str(tmp_path)]) == 0
    _, rows = _read_csv(tmp_path / "envelope.csv")
    assert len(rows) == 64
    flagged = [("below-sonic-line" in r["flags"]) for r in rows if float(r["p"]) >= 0.05]
    assert flagged and all(flagged)
    assert json.loads((tmp_path / "envelope.json").read_text())["below_sonic_line_for_p_ge_0.05"]


@pytest.fixture(scope="module")
def scan_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("scan2d")
    code = main(["scan2d", "--model", "gp", "--p", "1.0", "--lambda", "0.05:4:geometric:12",
                 "--out", str(out)])
    return out, code


def test_scan2d_monotone_energies(scan_dir):
    out, code = scan_dir
    assert code == 0
    _, rows = _read_csv(out / "scan.csv")
    lam = [float(r["lambda"]) for r in rows]
    e = [float(r["energy"]) for r in rows]
    assert lam == sorted(lam) and len(lam) >= 12
    assert all(a <= b + 1e-8 for a, b in zip(e, e[1:]))
    summary = json.loads((out / "scan.json").read_text())
    assert summary["lambda_s_bracket"] is not None


def test_headers_on_every_file(tmp_path):
    main(["profile", "--model", "gp", "--c", "1.0", "--out", str(tmp_path)])
    header, _ = _read_csv(tmp_path / "profile.csv")
    js = json.loads((tmp_path / "invariants.json").read_text())["header"]
    for h in (header, js):
        assert h["tool"] == "twave" and h["version"] and len(h["model_hash"]) > 0
        assert len(h["config_hash"]) == 16
    assert header == {k: str(v) for k, v in js.items()}


def test_config_hash_tracks_parameters(tmp_path):
    main(["profile", "--model", "gp", "--c", "1.0", "--out", str(tmp_path / "a")])
    main(["profile", "--model", "gp", "--c", "0.9", "--out", str(tmp_path / "b")])
    ha, _ = _read_csv(tmp_path / "a" / "profile.csv")
    hb, _ = _read_csv(tmp_path / "b" / "profile.csv")
    assert ha["model_hash"] == hb["model_hash"]
    assert ha["config_hash"] != hb["config_hash"]


def test_small_scan_is_bit_identical(tmp_path, monkeypatch):
    args = ["scan2d", "--model", "gp", "--p", "1.0", "--lambda", "0.5:2:geometric:3",
            "--nx", "128", "--ny", "8", "--max-iter", "1500", "--seed", "3"]
    main(args + ["--out", str(tmp_path / "a")])
    monkeypatch.setenv("TWAVE_JOBS", "2")
    main(args + ["--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "scan.csv").read_bytes() == (tmp_path / "b" / "scan.csv").read_bytes()


def test_config_run_table(tmp_path):
    cfg = _toml(tmp_path / "run.toml", '[model]\nkind = "gp"\n\n[run]\nc = 0.5\nn_points = 2001\n')
    assert main(["profile", "--config", cfg, "--out", str(tmp_path)]) == 0
    inv = json.loads((tmp_path / "invariants.json").read_text())
    assert inv["energy"] == pytest.approx(gp_oracle(0.5).energy, rel=1e-8)
    _, rows = _read_csv(tmp_path / "profile.csv")
    assert len(rows) == 2001


def test_config_errors(tmp_path, monkeypatch):
    cfg = _toml(tmp_path / "run.toml", '[model]\nkind = "gp"\n\n[run]\nwarp = 9\n')
    assert main(["profile", "--config", cfg, "--c", "1", "--out", str(tmp_path)]) == 2
    assert main(["profile", "--model", "gp", "--out", str(tmp_path)]) == 2
    assert main(["scan2d", "--model", "gp", "--p", "1", "--lambda", "1:0.1", "--out", str(tmp_path)]) == 2
    monkeypatch.setenv("TWAVE_JOBS", "many")
    assert main(["check", "--model", "gp", "--out", str(tmp_path)]) == 2


def test_full_precision_numbers(tmp_path):
    main(["profile", "--model", "gp", "--c", "1.0", "--out", str(tmp_path)])
    _, rows = _read_csv(tmp_path / "profile.csv")
    # repr round-trips doubles exactly
    v = rows[len(rows) // 3]["rho"]
    assert repr(float(v)) == v
    assert math.isfinite(float(v))
