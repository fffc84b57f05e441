import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dirac2d.cli import EXIT_ERROR, EXIT_OK, main
from dirac2d.config import OUTPUT_ROOT_ENV, build_config, load_config, parse_text
from dirac2d.counting import CountingSeries, counting_series, finite_volume_ssf, gap_grid
from dirac2d.errors import SchemaError
from dirac2d.io import CSV_COLUMNS, export_series, load_series
from dirac2d.lattice import Potential, build_lattice


def _meta():
    return {"operator": "Hplus", "L": 16, "m": 1.0, "gamma": 4.0, "Gamma2": 1.0, "Gamma3": 0.5}


def test_empty_series_header_only(tmp_path):
    p = export_series(CountingSeries([], [], _meta()), tmp_path / "e.csv")
    lines = p.read_text().splitlines()
    assert lines[0].startswith("# ") and lines[1] == ",".join(CSV_COLUMNS) and len(lines) == 2
    back = load_series(p)
    assert len(back.lambda_grid) == 0 and back.meta == _meta()


@settings(max_examples=30, deadline=None)
@given(lams=st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=30, unique=True),
       seed=st.integers(0, 2**31))
def test_csv_json_round_trip_bit_exact(tmp_path_factory, lams, seed):
    tmp = tmp_path_factory.mktemp("rt")
    lam = np.sort(np.array(lams))[::-1]
    counts = np.sort(np.random.default_rng(seed).integers(0, 1000, len(lam)))
    s = CountingSeries(lam, counts, _meta())
    for fmt in ("csv", "json"):
        back = load_series(export_series(s, tmp / f"s.{fmt}", fmt))
        assert np.array_equal(back.lambda_grid, s.lambda_grid)
        assert np.array_equal(back.counts, s.counts) and back.counts.dtype.kind == "i"
        assert back.meta == s.meta


def test_float_counts_round_trip(tmp_path):
    s = CountingSeries([0.3, 0.2, 0.1], [0.1, 1 / 3, 2.5], _meta())
    back = load_series(export_series(s, tmp_path / "f.csv"))
    assert np.array_equal(back.counts, s.counts)


def test_series_rows_carry_model_fields(tmp_path):
    box = build_lattice(8, "open")
    s = counting_series(box, 1.0, Potential.vertex_impulse(1.0), 1, gap_grid(1.0, 0.5, 1e-3))
    s.meta.update({"gamma": 4.0, "Gamma2": 1.0, "Gamma3": 0.5})
    rows = list(csv.DictReader(export_series(s, tmp_path / "c.csv").read_text().splitlines()[1:]))
    assert rows[0]["operator"] == "Hplus" and rows[0]["L"] == "8" and rows[0]["Gamma3"] == "0.5"
    eta = finite_volume_ssf(box, 1.0, Potential.vertex_impulse(1.0), 1, [0.0, 1.0])
    rows = list(csv.DictReader(export_series(eta, tmp_path / "s.csv").read_text().splitlines()[1:]))
    assert {r["operator"] for r in rows} == {"ssf"}


def test_bands_command(tmp_path):
    assert main(["bands", "--m", "1", "--grid_N", "64", "--out", str(tmp_path)]) == EXIT_OK
    rows = list(csv.reader((tmp_path / "bands.csv").open()))
    assert len(rows) == 64 * 64 + 1
    assert all(float(r[3]) == -1.0 for r in rows[1:])
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == "ok" and manifest["outputs"] == ["bands.csv"]


def test_thresholds_command(tmp_path):
    assert main(["thresholds", "--m", "1", "--out", str(tmp_path)]) == EXIT_OK
    out = json.loads((tmp_path / "thresholds.json").read_text())
    vals = [t["value"] for t in out["thresholds"]]
    assert np.allclose(vals, [-3, -math.sqrt(5), -1, 1, math.sqrt(5), 3])


def test_fit_recovers_planted_series(tmp_path):
    lam = -1 + np.geomspace(1e-6, 1e-1, 25)[::-1]
    planted = CountingSeries(lam, 3.0 * np.abs(lam + 1) ** -0.5, _meta())
    src = export_series(planted, tmp_path / "planted.csv")
    out = tmp_path / "fit"
    code = main(["fit", "--m", "1", "--gamma", "4", "--series", str(src), "--out", str(out)])
    assert code == EXIT_OK
    fit = json.loads((out / "fit.json").read_text())["fits"][0]
    assert abs(fit["exponent"] - 0.5) <= 1e-12 and abs(fit["constant"] - 3.0) <= 1e-12


def test_count_and_flatband_commands(tmp_path):
    assert main(["count", "--L", "8", "--set", "numerics.lambda_floor=1e-3", "--formats", "csv",
                 "--out", str(tmp_path)]) == EXIT_OK
    s = load_series(tmp_path / "count_L8.csv")
    assert s.operator == "Hplus" and np.all(np.diff(s.counts) >= 0)
    assert main(["flatband", "--L", "8", "--boundary", "open", "--out", str(tmp_path)]) == EXIT_OK
    rows = json.loads((tmp_path / "flatband.json").read_text())["rows"]
    assert rows == [{"L": 8, "boundary": "open", "multiplicity": 49}]


def test_schema_rejects_small_gamma(tmp_path, capsys):
    with pytest.raises(SchemaError) as info:
        build_config({"command": "fit", "model.gamma": "2"})
    assert info.value.path == "model.gamma"
    code = main(["fit", "--gamma", "2", "--out", str(tmp_path)])
    assert code == EXIT_ERROR
    assert "model.gamma" in capsys.readouterr().err
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == "error" and "model.gamma" in manifest["error"]


def test_schema_errors_report_path():
    with pytest.raises(SchemaError) as info:
        build_config({"command": "count", "numerics.boundary": "twisted"})
    assert info.value.path == "numerics.boundary"
    with pytest.raises(SchemaError) as info:
        build_config({"command": "count", "numerics.bogus": "1"})
    assert info.value.path == "numerics.bogus"
    with pytest.raises(SchemaError) as info:
        build_config({})
    assert info.value.path == "command"
    with pytest.raises(SchemaError):
        parse_text("command fit\n")


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# thresholds at m = 2\ncommand = thresholds\nmodel.m = 2\noutput.dir = %s\n" % (tmp_path / "a"))
    assert load_config(cfg).values["model.m"] == 2.0
    assert main(["thresholds", "--config", str(cfg), "--m", "0.5"]) == EXIT_OK
    assert json.loads((tmp_path / "a" / "thresholds.json").read_text())["m"] == 0.5
    assert main(["thresholds", "--config", str(cfg), "--set", "model.m=3"]) == EXIT_OK
    assert json.loads((tmp_path / "a" / "thresholds.json").read_text())["m"] == 3.0


def test_output_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path))
    assert main(["thresholds", "--out", "rel"]) == EXIT_OK
    assert (tmp_path / "rel" / "thresholds.json").exists()


def test_manifest_on_runtime_failure(tmp_path):
    code = main(["toroidal", "--M", "8", "--grid_N", "32", "--out", str(tmp_path)])
    assert code == EXIT_ERROR
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == "error" and "grid_N" in manifest["error"]
    assert manifest["config"]["numerics.M"] == [8]


def test_reruns_byte_identical(tmp_path):
    args = ["ssf", "--L", "6", "--set", "numerics.lambda_grid=-2,-1.5,0,1.5,2", "--m", "1"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    for name in ("ssf_L6.csv", "ssf_L6.json", "manifest.json"):
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        assert a == b.replace(b"/b", b"/a")


def test_validate_and_constant_commands(tmp_path):
    assert main(["validate", "--set", "numerics.samples=5", "--out", str(tmp_path)]) == EXIT_OK
    checks = json.loads((tmp_path / "validate.json").read_text())["checks"]
    assert all(c["ok"] for c in checks)
    assert main(["constant", "--gamma", "4", "--Gamma2", "1", "--Gamma3", "1", "--out", str(tmp_path)]) == EXIT_OK
    val = json.loads((tmp_path / "constant.json").read_text())["C"]
    assert abs(val - math.pi) <= 1e-8
