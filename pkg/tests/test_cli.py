import csv
import json
from fractions import Fraction as F

import numpy as np
import pytest

from opmeans.cli import main
from opmeans.field import GridField, PolyField, read_field, read_grdf, write_field
from opmeans.errors import SeriesConvergenceWarning
from opmeans.meanops import KernelSpec, MeanSpec, mean

from conftest import trig_field


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


@pytest.fixture
def grid_file(tmp_path):
    path = tmp_path / "f.grdf"
    write_field(path, trig_field(1, 64, seed=1)[0])
    return path


def test_mean_polynomial(tmp_path, capsys):
    src, dst = tmp_path / "p.json", tmp_path / "q.json"
    write_field(src, PolyField.norm_squared(3))
    code, out, _ = run(capsys, "mean", "--kernel", "sphere", "--radius", "1/2", "--mode", "series", "-i", src, "-o", dst)
    assert code == 0
    assert read_field(dst) == PolyField.norm_squared(3) + PolyField.constant(F(1, 4), 3)
    record = json.loads(out)
    assert record["provenance"]["command"] == "mean" and "versions" in record["provenance"]


def test_mean_half_twice_equals_full(tmp_path, capsys, grid_file):
    half1, half2, full = tmp_path / "h1.grdf", tmp_path / "h2.grdf", tmp_path / "full.grdf"
    assert run(capsys, "mean", "--radius", "0.5", "--power", "0.5", "-i", grid_file, "-o", half1)[0] == 0
    assert run(capsys, "mean", "--radius", "0.5", "--power", "0.5", "-i", half1, "-o", half2)[0] == 0
    assert run(capsys, "mean", "--radius", "0.5", "-i", grid_file, "-o", full)[0] == 0
    a, b = read_grdf(half2).data, read_grdf(full).data
    assert np.max(np.abs(a - b)) < 1e-10 * np.max(np.abs(b))


def test_mean_constant(tmp_path, capsys):
    src, dst = tmp_path / "c.grdf", tmp_path / "d.grdf"
    write_field(src, GridField.on_box(lambda x, y: np.full_like(x, 1.25), 16, dim=2))
    assert run(capsys, "mean", "--kernel", "bell", "--alpha", "0.5", "--radius", "0.3", "-i", src, "-o", dst)[0] == 0
    assert np.allclose(read_grdf(dst).data, 1.25, atol=1e-14, rtol=0)


def test_mean_output_roundtrips(tmp_path, capsys, grid_file):
    dst = tmp_path / "o.grdf"
    run(capsys, "mean", "--kernel", "tri", "--alpha", "1", "--radius", "0.2", "-i", grid_file, "-o", dst)
    expected = mean(read_grdf(grid_file), MeanSpec(0.2), KernelSpec.triangular(1.0))
    assert np.array_equal(read_grdf(dst).data, expected.data)


def test_usage_errors(tmp_path, capsys, grid_file):
    code, _, err = run(capsys, "mean", "--radius", "0.5")
    assert code == 2 and json.loads(err)["error"] == "UsageError"
    code, _, err = run(capsys, "mean", "--radius", "0.5", "-i", tmp_path / "missing.grdf", "-o", tmp_path / "x")
    assert code == 2 and "error" in json.loads(err)
    src = tmp_path / "p.json"
    write_field(src, PolyField.norm_squared(2))
    code, _, err = run(capsys, "mean", "--radius", "0.5", "--mode", "spectral", "-i", src, "-o", tmp_path / "y")
    assert code == 2 and json.loads(err)["error"] == "NonGridSpectral"


def test_singular_reports_rk(tmp_path, capsys):
    src = tmp_path / "c.grdf"
    write_field(src, GridField.on_box(lambda x, y, z: np.cos(x), 8, dim=3))
    code, _, err = run(capsys, "mean", "--radius", str(np.pi), "--power", "-1", "-i", src, "-o", tmp_path / "o")
    assert code == 2
    assert json.loads(err)["rk"] == pytest.approx(np.pi)


def test_compare_oracle_smooth_1d(tmp_path, capsys):
    out = tmp_path / "cmp.csv"
    code, stdout, _ = run(capsys, "compare-oracle", "--dim", "1", "--grid", "64", "--radii", "0.1,0.3,0.5,0.9", "-o", out)
    assert code == 0
    header, data = read_csv(out)
    assert header == ["r", "operator_value", "oracle_value", "abs_diff"]
    assert data[:, 3].max() < 1e-8
    assert json.loads(stdout)["provenance"]["seed"] == 0


def test_compare_oracle_zero(tmp_path, capsys):
    out = tmp_path / "z.csv"
    assert run(capsys, "compare-oracle", "--field", "zero", "--dim", "2", "--kernel", "ball", "-o", out)[0] == 0
    assert np.all(read_csv(out)[1][:, 1:] == 0)


def test_compare_oracle_series_breach(tmp_path, capsys):
    out = tmp_path / "s.csv"
    with pytest.warns(SeriesConvergenceWarning):
        code, stdout, _ = run(capsys, "compare-oracle", "--dim", "1", "--grid", "64", "--mode", "series",
                              "--order", "2", "--radii", "1.5", "-o", out)
    assert code == 1
    assert out.exists() and json.loads(stdout)["summary"]["pass"] is False


def test_pde_plane_wave(capsys):
    code, out, _ = run(capsys, "pde", "--field", "plane", "--dim", "3", "--radius", "1/2", "--step", "1/50")
    assert code == 0
    summary = json.loads(out)["summary"]
    assert all(3.5 <= r <= 4.5 for r in summary["ratios"])
    assert summary["reports"][0]["equation"] == "EPD"


def test_xray_zero_phantom(tmp_path, capsys):
    rec, rep = tmp_path / "r.grdf", tmp_path / "rep.json"
    code, out, _ = run(capsys, "xray", "--phantom", "zero", "--grid", "32", "--directions", "8", "-o", rec, "--report", rep)
    assert code == 0
    report = json.loads(rep.read_text())
    assert report["relL2Error"] == 0 and report["maxAbsError"] == 0
    assert read_grdf(rec).max_abs() == 0


def test_xray_outputs(tmp_path, capsys):
    rec, ph, sino = tmp_path / "r.grdf", tmp_path / "p.grdf", tmp_path / "s.csv"
    code, out, _ = run(capsys, "xray", "--grid", "64", "--directions", "45", "-o", rec, "--phantom-out", ph,
                       "--sinogram", sino, "--sinogram-directions", "3", "--sinogram-offsets", "5")
    assert code == 0
    header, data = read_csv(sino)
    assert header == ["theta", "offset", "value"] and data.shape == (15, 3)
    assert read_grdf(ph).shape == (64, 64)
    assert json.loads(out)["summary"]["numDirections"] == 45


def test_fractional_figure(tmp_path, capsys):
    out = tmp_path / "fig.csv"
    assert run(capsys, "fractional-figure", "--grid", "128", "-o", out)[0] == 0
    header, data = read_csv(out)
    assert header == ["x", "f", "mean_half", "mean_third", "mean_two_thirds", "mean_full"]
    # feed mean_half back in as a field and apply the half power again
    half = GridField((128,), (2 * np.pi / 128,), data[:, 2])
    again = mean(half, MeanSpec(0.4, F(1, 2)))
    assert np.max(np.abs(again.data - data[:, 5])) < 1e-8


def test_determinism(tmp_path, capsys, grid_file):
    outputs = []
    for tag in ("a", "b"):
        d = tmp_path / tag
        d.mkdir()
        run(capsys, "mean", "--radius", "0.3", "--power", "1/3", "-i", grid_file, "-o", d / "m.grdf")
        run(capsys, "compare-oracle", "--dim", "2", "--grid", "16", "--seed", "4", "-o", d / "c.csv", "--threads", "2")
        run(capsys, "fractional-figure", "--grid", "64", "-o", d / "f.csv")
        run(capsys, "xray", "--grid", "48", "--directions", "30", "-o", d / "x.grdf")
        outputs.append([(d / name).read_bytes() for name in ("m.grdf", "c.csv", "f.csv", "x.grdf")])
    assert outputs[0] == outputs[1]


def test_provenance_file(tmp_path, capsys, grid_file):
    prov = tmp_path / "prov.json"
    code, out, _ = run(capsys, "mean", "--radius", "0.3", "-i", grid_file, "-o", tmp_path / "m.grdf", "--provenance", prov)
    assert code == 0
    assert json.loads(prov.read_text()) == json.loads(out)
    assert json.loads(out)["provenance"]["params"]["radius"] == "3/10"


def test_threads_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("OPMEANS_THREADS", "3")
    out = tmp_path / "c.csv"
    assert run(capsys, "compare-oracle", "--dim", "1", "--grid", "32", "-o", out)[0] == 0
