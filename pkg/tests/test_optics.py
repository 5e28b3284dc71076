import math
import warnings

import numpy as np
import pytest
from scipy import integrate

from tpeifp.errors import ConfigError, FormatError, OutOfRangeError
from tpeifp.optics import (
    OpticalConfig,
    OpticalModel,
    UndersampledWarning,
    add_gaussian_noise,
    build_otf,
    chat,
    frequency_radius,
    generate_scan_grid,
    generate_speckle,
    incoherent_image,
    simulate_acquisition,
    speckle_canvas_shape,
    speckle_window,
)


def pupil_overlap_otf(nu):
    """Overlap area of two unit discs with centres 2*nu apart, over pi, by quadrature."""
    d = 2 * nu
    if d >= 2:
        return 0.0
    half = math.sqrt(1 - d * d / 4)
    area, _ = integrate.quad(lambda y: 2 * math.sqrt(1 - y * y) - d, -half, half,
                             epsabs=1e-13, epsrel=1e-13)
    return area / math.pi


def test_cutoff_frequency(ref_optics):
    fc = 10.0 / (632e-6 * 300.0)
    assert ref_optics.cutoff_frequency == pytest.approx(fc, rel=1e-12)
    assert ref_optics.cutoff_frequency == pytest.approx(52.74, abs=0.01)


def test_otf_dc_and_band_limit(ref_optics):
    model = build_otf(ref_optics, 96, 80)
    assert model.otf[0, 0] == 1.0
    assert model.otf.min() >= 0 and model.otf.max() <= 1
    fr = frequency_radius(96, 80, 3.45)
    assert np.all(model.otf[fr > model.cutoff_frequency] == 0)
    assert np.any(model.otf[fr < model.cutoff_frequency] > 0)


@pytest.mark.parametrize("nu", [0.1, 0.25, 0.5, 0.75, 0.9])
def test_chat_matches_pupil_overlap(nu):
    assert chat(nu) == pytest.approx(pupil_overlap_otf(nu), abs=1e-10)


def test_half_cutoff_value():
    assert chat(0.5) == pytest.approx(0.391, abs=5e-4)


def test_sampled_otf_matches_quadrature(ref_optics):
    model = build_otf(ref_optics, 64, 64)
    fr = frequency_radius(64, 64, 3.45) / model.cutoff_frequency
    for iy, ix in [(0, 3), (2, 5), (7, 1), (4, 4)]:
        assert model.otf[iy, ix] == pytest.approx(pupil_overlap_otf(fr[iy, ix]), abs=1e-9)


def test_otf_symmetry_and_monotone(ref_optics):
    otf = build_otf(ref_optics, 64, 50).otf
    flipped = np.roll(otf[::-1, ::-1], (1, 1), axis=(0, 1))
    np.testing.assert_array_equal(otf, flipped)
    fr = frequency_radius(64, 50, 3.45).ravel()
    order = np.argsort(fr, kind="stable")
    assert np.all(np.diff(otf.ravel()[order]) <= 1e-15)


def test_undersampling_warns():
    cfg = OpticalConfig(aperture_diameter=100.0)
    assert not cfg.oversampled
    with pytest.warns(UndersampledWarning):
        build_otf(cfg, 8, 8)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        build_otf(OpticalConfig(), 8, 8)


@pytest.mark.parametrize("field", ["aperture_diameter", "focal_length", "wavelength",
                                   "pixel_pitch"])
def test_config_rejects_non_positive(field):
    with pytest.raises(ConfigError):
        OpticalConfig(**{field: -1.0})


def test_speckle_determinism_and_range():
    a = generate_speckle(7, 50, 40)
    b = generate_speckle(7, 50, 40)
    assert a.tobytes() == b.tobytes()
    assert a.shape == (40, 50)
    assert a.min() > 0 and a.max() <= 1
    c = generate_speckle(7, 50, 40, 2.0)
    assert c.min() > 0 and c.max() <= 1


def test_iid_speckle_statistics():
    s = generate_speckle(11, 256, 256, 0)
    assert 0.48 <= s.mean() <= 0.52
    z = s - s.mean()
    lag1 = np.mean(z[:, 1:] * z[:, :-1]) / z.var()
    assert abs(lag1) < 0.05


def test_correlated_speckle_is_smooth():
    s = generate_speckle(11, 128, 128, 2.0)
    z = s - s.mean()
    lag1 = np.mean(z[:, 1:] * z[:, :-1]) / z.var()
    assert lag1 > 0.8


def test_incoherent_image_identities(ref_optics):
    model = build_otf(ref_optics, 32, 32)
    np.testing.assert_allclose(incoherent_image(np.full((32, 32), 3.0), model), 3.0,
                               rtol=1e-12)
    ones = OpticalModel(otf=np.ones((32, 32)), cutoff_frequency=1.0)
    x = np.random.default_rng(0).random((32, 32))
    np.testing.assert_allclose(incoherent_image(x, ones), x, atol=1e-14)


def test_incoherent_image_conserves_flux_and_band(ref_optics):
    model = build_otf(ref_optics, 64, 64)
    x = np.random.default_rng(1).random((64, 64))
    y = incoherent_image(x, model)
    assert y.sum() == pytest.approx(x.sum(), rel=1e-6)
    power = np.abs(np.fft.fft2(y)) ** 2
    assert power[model.otf == 0].sum() <= 1e-6 * power.sum()


def test_two_points_below_rayleigh_merge(ref_optics):
    model = build_otf(ref_optics, 128, 128)
    rayleigh_px = 1.22 / (model.cutoff_frequency * 3.45e-3)
    sep = int(rayleigh_px / 2)
    x = np.zeros((128, 128))
    x[64, 64 - sep // 2] = 1
    x[64, 64 - sep // 2 + sep] = 1
    row = incoherent_image(x, model)[64]
    centre = row[64 - sep // 2: 64 - sep // 2 + sep + 1]
    dip = (centre.max() - centre[sep // 2]) / centre.max()
    assert dip < 0.01


def test_incoherent_image_rejects_bad_input(ref_optics):
    model = build_otf(ref_optics, 16, 16)
    with pytest.raises(FormatError):
        incoherent_image(np.ones((8, 8)), model)
    with pytest.raises(FormatError):
        incoherent_image(-np.ones((16, 16)), model)


def test_noise_zero_ratio_is_identity():
    x = np.random.default_rng(2).random((16, 16))
    np.testing.assert_array_equal(add_gaussian_noise(x, 0.0, 1), x)


def test_noise_variance_matches_target():
    x = 5.0 + np.random.default_rng(3).random((256, 256))
    y = add_gaussian_noise(x, 0.001, 4)
    target = 0.001 * x.var()
    assert abs((y - x).var() / target - 1) < 0.1
    assert y.min() >= 0
    np.testing.assert_array_equal(y, add_gaussian_noise(x, 0.001, 4))


def test_noise_clamps_negatives():
    x = np.zeros((64, 64))
    x[::2] = 1.0
    assert add_gaussian_noise(x, 5.0, 0).min() >= 0


def test_scan_grid():
    g = generate_scan_grid(9, 10)
    assert len(g) == 81
    assert sorted({s.dx for s in g}) == list(range(-40, 41, 10))
    assert sorted({s.dy for s in g}) == list(range(-40, 41, 10))
    assert g[0] == (-40, -40) and g[1] == (-30, -40)
    assert generate_scan_grid(1, 10) == [(0, 0)]
    assert len(generate_scan_grid(8, 10)) == 64


def test_uniform_speckle_gives_diffraction_limited_frames(ref_optics):
    obj = np.random.default_rng(4).random((32, 32))
    model = build_otf(ref_optics, 32, 32)
    shifts = generate_scan_grid(3, 2)
    acq = simulate_acquisition(obj, np.ones((36, 36)), shifts, model, 0.0, 0)
    dl = incoherent_image(obj, model)
    assert len(acq.frames) == 9
    for f in acq.frames:
        np.testing.assert_array_equal(f, dl)


def test_simulation_cardinality_and_determinism(small_scene, ref_optics):
    s = small_scene
    a = simulate_acquisition(s["obj"], s["master"], s["shifts"], s["model"], 0.01, 9)
    b = simulate_acquisition(s["obj"], s["master"], s["shifts"], s["model"], 0.01, 9)
    assert len(a.frames) == len(s["shifts"]) == len(a.true_shifts)
    assert all(x.tobytes() == y.tobytes() for x, y in zip(a.frames, b.frames))


def test_simulation_frames_see_translated_speckle(ref_optics):
    master = np.random.default_rng(5).random((20, 20)) + 0.1
    ones = OpticalModel(otf=np.ones((10, 10)), cutoff_frequency=1.0)
    acq = simulate_acquisition(np.ones((10, 10)), master, [(0, 0), (2, 1)], ones)
    f0, f1 = acq.frames
    np.testing.assert_allclose(f1[1:, 2:], f0[:-1, :-2], atol=1e-12)
    np.testing.assert_allclose(f0, speckle_window(master, (0, 0), 10, 10), atol=1e-12)


def test_simulation_rejects_small_canvas(ref_optics):
    model = build_otf(ref_optics, 16, 16)
    with pytest.raises(OutOfRangeError, match="frame 1"):
        simulate_acquisition(np.ones((16, 16)), np.ones((20, 20)), [(0, 0), (5, 0)], model)


def test_canvas_shape():
    assert speckle_canvas_shape(generate_scan_grid(9, 10), 256, 256) == (336, 336)
