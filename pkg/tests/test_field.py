import warnings
from fractions import Fraction as F

import numpy as np
import pytest

from conftest import trig_field
from opmeans.errors import MultiplierSingular, OutOfDomain, SeriesConvergenceWarning
from opmeans.field import (
    GridField,
    PlaneWaveField,
    PolyField,
    SpectralMultiplier,
    apply_multiplier,
    apply_series,
    decode_grdf,
    derivative,
    encode_grdf,
    evaluate,
    laplacian,
    read_field,
    write_field,
)
from opmeans.hyperseries import TruncatedSeries, coeffs_pFq, HypergeometricSpec

COS64 = GridField.on_box(np.cos, 64)


def test_poly_laplacian_norm_squared():
    assert laplacian(PolyField.norm_squared(3)) == PolyField.constant(6, 3)


def test_plane_wave_laplacian():
    assert laplacian(PlaneWaveField((2.0, 0.0))).amplitude == -4.0


def test_grid_laplacian_cos():
    assert np.max(np.abs(laplacian(COS64).data + np.cos(COS64.coordinates()[0]))) < 1e-12


def test_grid_laplacian_2d_against_analytic():
    f = GridField.on_box(lambda x, y: np.sin(2 * x) * np.cos(3 * y), 32, 2 * np.pi, 2)
    x, y = f.coordinates()
    assert np.max(np.abs(laplacian(f).data + 13 * np.sin(2 * x) * np.cos(3 * y))) < 1e-11


def test_identity_multiplier(smooth2d):
    out = apply_multiplier(smooth2d, SpectralMultiplier(np.ones_like))
    assert np.max(np.abs(out.data - smooth2d.data)) < 1e-13


def test_lambda_multiplier_is_laplacian():
    out = apply_multiplier(COS64, SpectralMultiplier(lambda lam: lam))
    assert np.max(np.abs(out.data - laplacian(COS64).data)) < 1e-12


def test_cos_multiplier_is_two_point_average():
    r = 0.37
    f, func = trig_field(1, 64, kmax=5, seed=3)
    out = apply_multiplier(f, SpectralMultiplier(lambda lam: np.cos(r * np.sqrt(-lam))))
    x = f.coordinates()[0]
    assert np.max(np.abs(out.data - (func(x + r) + func(x - r)) / 2)) < 1e-10


def test_singular_multiplier_reports_wavenumber():
    with pytest.raises(MultiplierSingular) as info, np.errstate(divide="ignore"):
        apply_multiplier(COS64, SpectralMultiplier(lambda lam: 1 / (lam + 1)))
    assert info.value.k == pytest.approx(1.0)


def test_singular_dc_allowed():
    f = GridField.on_box(lambda x: 3 + np.cos(x), 32)
    with np.errstate(divide="ignore"):
        out = apply_multiplier(f, SpectralMultiplier(lambda lam: 1 / np.sqrt(-lam), allow_singular_dc=True))
    assert np.allclose(out.data, np.cos(f.coordinates()[0]), atol=1e-13)


def test_apply_series_sphere_on_poly():
    r = F(3, 7)
    out = apply_series(PolyField.norm_squared(3), TruncatedSeries((F(1), F(1, 6), F(1, 120))), r * r)
    assert out == PolyField.norm_squared(3) + PolyField.constant(r * r, 3)


def test_apply_series_identity(smooth2d):
    out = apply_series(smooth2d, TruncatedSeries((F(1),)), 0.3)
    assert np.max(np.abs(out.data - smooth2d.data)) < 1e-13
    p = PolyField(2, {(3, 1): 2, (0, 0): -1})
    assert apply_series(p, TruncatedSeries((F(1),)), F(1, 2)) == p


def test_apply_series_n2_first_order():
    # (1/2 pi) int (x + r cos t)^2 dt = x^2 + r^2/2
    r = F(2, 5)
    out = apply_series(PolyField(2, {(2, 0): 1}), TruncatedSeries((F(1), F(1, 4))), r * r)
    assert out == PolyField(2, {(2, 0): 1, (0, 0): r * r / 2})


def test_series_on_plane_wave_is_partial_sum():
    pw = PlaneWaveField((0.7, -1.1, 0.4), 0.2, 1.5)
    s = coeffs_pFq(HypergeometricSpec((), (F(3, 2),), F(1, 4)), 8)
    r2 = 0.36
    expected = 1.5 * sum(float(c) * (-r2 * pw.k_squared) ** j for j, c in enumerate(s))
    assert apply_series(pw, s, r2).amplitude == pytest.approx(expected, rel=1e-14)


def test_series_warns_when_not_small(smooth1d):
    s = coeffs_pFq(HypergeometricSpec((), (F(1, 2),), F(1, 4)), 2)
    with pytest.warns(SeriesConvergenceWarning):
        apply_series(smooth1d, s, 100.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        apply_series(smooth1d, s, 0.01)


def test_evaluate_examples():
    assert evaluate(PolyField(2, {(2, 0): 1, (0, 1): 1}), (2, 1)) == 5
    assert evaluate(PlaneWaveField((1.0, 0.0)), (np.pi, 0.0)) == pytest.approx(-1.0, abs=1e-15)
    assert abs(evaluate(COS64, [0.3]) - np.cos(0.3)) < 1e-12


def test_evaluate_interpolates_band_limited(smooth3d):
    f, func = trig_field(3, 16, seed=2)
    pts = np.random.default_rng(0).uniform(0, 2 * np.pi, size=(50, 3))
    assert np.max(np.abs(evaluate(f, pts) - func(*pts.T))) < 1e-12


def test_evaluate_nyquist_even_grid():
    # cos(4x) on 8 points sits exactly on the Nyquist mode
    f = GridField.on_box(lambda x: np.cos(4 * x), 8)
    assert evaluate(f, [0.3]) == pytest.approx(np.cos(1.2), abs=1e-13)


def test_evaluate_out_of_domain():
    with pytest.raises(OutOfDomain):
        evaluate(COS64, [7.0])


def test_laplacian_commutes_with_multiplier():
    for seed in range(3):
        f = trig_field(2, 24, seed=seed)[0]
        psi = SpectralMultiplier(lambda lam: np.exp(0.1 * lam) * np.cos(np.sqrt(-lam)))
        a = laplacian(apply_multiplier(f, psi))
        b = apply_multiplier(laplacian(f), psi)
        assert np.max(np.abs(a.data - b.data)) < 1e-11


def test_parseval_roundtrip():
    data = np.random.default_rng(5).normal(size=(20, 18))
    f = GridField((20, 18), (0.1, 0.2), data)
    out = apply_multiplier(f, SpectralMultiplier(np.ones_like))
    assert np.mean(out.data**2) == pytest.approx(np.mean(data**2), rel=1e-13)


def test_spectral_derivative():
    f = GridField.on_box(lambda x: np.exp(np.sin(x)), 64)
    x = f.coordinates()[0]
    d1 = derivative(f, 0, 1).data
    assert np.max(np.abs(d1 - np.cos(x) * np.exp(np.sin(x)))) < 1e-12


def test_grdf_roundtrip(tmp_path, smooth3d):
    buf = encode_grdf(smooth3d)
    assert buf[:4] == b"GRDF" and buf[4] == 1 and buf[5] == 3
    back = decode_grdf(buf)
    assert back.shape == smooth3d.shape and back.spacing == smooth3d.spacing
    assert np.array_equal(back.data, smooth3d.data)
    path = tmp_path / "f.grdf"
    write_field(path, smooth3d)
    assert np.array_equal(read_field(path).data, smooth3d.data)


def test_grdf_layout():
    f = GridField((2, 3), (0.5, 0.25), np.arange(6.0))
    buf = encode_grdf(f)
    assert len(buf) == 6 + 2 * 12 + 6 * 8
    assert buf[6:10] == (2).to_bytes(4, "little")
    assert np.frombuffer(buf[-48:], "<f8").tolist() == list(range(6))


def test_grdf_rejects_bad_magic():
    with pytest.raises(ValueError):
        decode_grdf(b"NOPE" + bytes(10))


def test_poly_json_roundtrip(tmp_path):
    p = PolyField(3, {(2, 0, 0): 1, (0, 1, 1): -2.5, (0, 0, 0): 3})
    path = tmp_path / "p.json"
    write_field(path, p)
    assert read_field(path) == p
    assert PolyField.from_json('{"dim": 1, "terms": [{"exp": [2], "coef": "1/3"}]}').terms == {(2,): F(1, 3)}


def test_grid_validation():
    with pytest.raises(ValueError):
        GridField((4,), (0.1,), np.arange(5.0))
    with pytest.raises(ValueError):
        GridField((2, 2, 2, 2), (1, 1, 1, 1), np.zeros(16))
    with pytest.raises(ValueError):
        GridField((2,), (0.1,), [1.0, np.nan])
