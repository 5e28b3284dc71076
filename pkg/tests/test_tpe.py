import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import brute_correlation
from tpeifp.errors import DegenerateInputError, FormatError
from tpeifp.metrics import normalized_correlation
from tpeifp.optics import (
    build_otf,
    generate_scan_grid,
    generate_speckle,
    incoherent_image,
    simulate_acquisition,
    speckle_canvas_shape,
    speckle_window,
)
from tpeifp.tpe import cross_correlate, extract_positions, isolate_speckle, mean_image


def test_mean_of_copies_and_arithmetic():
    f = np.random.default_rng(0).random((5, 5))
    np.testing.assert_allclose(mean_image([f, f, f]), f)
    np.testing.assert_array_equal(
        mean_image([np.array([[0, 2], [4, 6.0]]), np.array([[2, 0], [6, 4.0]])]),
        [[1, 1], [5, 5]])


def test_mean_rejects_bad_stacks():
    with pytest.raises(FormatError):
        mean_image([])
    with pytest.raises(FormatError):
        mean_image([np.ones((2, 2)), np.ones((2, 3))])


def test_mean_image_converges_to_object_times_mean_speckle(ref_optics):
    obj = np.random.default_rng(1).random((128, 128)) + 0.5
    model = build_otf(ref_optics, 128, 128)
    dl = incoherent_image(obj, model)
    devs = []
    for n in (3, 5, 9):
        shifts = generate_scan_grid(n, 10)
        h, w = speckle_canvas_shape(shifts, 128, 128)
        master = generate_speckle(2, w, h, 2.0)
        acq = simulate_acquisition(obj, master, shifts, model)
        m = mean_image(acq.frames)
        ref = dl * master.mean()
        devs.append(np.linalg.norm(m - ref) / np.linalg.norm(ref))
    assert devs[0] > devs[1] > devs[2]


def test_isolate_speckle_examples():
    m = np.random.default_rng(2).random((4, 4)) + 0.1
    np.testing.assert_allclose(isolate_speckle(m, m), 1.0)
    m[1, 2] = 0.0
    f = np.full((4, 4), 0.5)
    out = isolate_speckle(f, m, floor=1e-3)
    assert np.all(np.isfinite(out))
    assert out[1, 2] == pytest.approx(0.5 / (1e-3 * m.max()))


def test_isolated_speckle_tracks_true_window(full_scene):
    s = full_scene
    acq = simulate_acquisition(s["obj"], s["master"], s["shifts"], s["model"], 0.0, 0)
    mean = mean_image(acq.frames)
    region = mean > 0.1 * mean.max()
    for n in (0, 40, 80):
        iso = isolate_speckle(acq.frames[n], mean)
        true = speckle_window(s["master"], s["shifts"][n], 256, 256)
        assert normalized_correlation(iso[region], true[region]) > 0.9


def test_autocorrelation_peaks_at_zero():
    a = np.random.default_rng(3).random((16, 20))
    surf = cross_correlate(a, a)
    assert surf.peak == (0, 0)
    assert surf.secondary_peak_value <= surf.peak_value
    assert surf.confidence >= 1


def test_fft_correlation_matches_direct_sum():
    rng = np.random.default_rng(4)
    a = rng.random((32, 32))
    b = np.roll(a, (-3, 5), axis=(0, 1)) + 0.1 * rng.random((32, 32))
    surf = cross_correlate(a, b)
    direct = brute_correlation(a, b)
    scale = np.abs(direct).max()
    assert np.abs(surf.values - direct).max() <= 1e-8 * scale
    assert surf.peak == (5, -3)


def test_impulse_correlation_sign_convention():
    a = np.zeros((16, 16))
    b = np.zeros((16, 16))
    a[0, 0] = 1
    b[1, 2] = 1
    assert cross_correlate(a, b).peak == (2, 1)
    assert cross_correlate(b, a).peak == (-2, -1)


def test_constant_input_is_degenerate():
    with pytest.raises(DegenerateInputError):
        cross_correlate(np.ones((8, 8)), np.random.default_rng(0).random((8, 8)))


def test_padded_correlation_recovers_shift():
    a = np.random.default_rng(5).random((24, 24))
    b = np.roll(a, (2, -4), axis=(0, 1))
    surf = cross_correlate(a, b, padded=True)
    assert surf.values.shape == (48, 48)
    assert surf.peak == (-4, 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(-7, 7), st.integers(-7, 7))
def test_shift_identity_and_symmetry(seed, dx, dy):
    g = np.random.default_rng(seed).random((32, 30))
    moved = np.roll(g, (dy, dx), axis=(0, 1))
    assert cross_correlate(g, moved).peak == (dx, dy)
    assert cross_correlate(moved, g).peak == (-dx, -dy)


def test_tie_break_prefers_smallest_dy_dx():
    # period-4 pattern: maxima at every multiple of 4 along x
    a = np.tile([1.0, 0.0, 0.0, 0.0], (4, 4))
    b = np.roll(a, 1, axis=1)
    surf = cross_correlate(a, b)
    # all equal maxima share the largest value; the chosen one is lexicographically first
    h, w = surf.values.shape
    best = surf.values.max()
    cand = [((r if r <= h // 2 else r - h), (c if c <= w // 2 else c - w))
            for r, c in zip(*np.nonzero(surf.values == best))]
    assert (surf.peak.dy, surf.peak.dx) == min(cand)


def test_extract_reference_is_zero(small_scene):
    res = extract_positions(small_scene["acq"].frames, reference_index=3)
    assert res.shifts[3] == (0, 0)
    assert len(res.confidence) == len(res.shifts)
    assert all(c >= 1 for c in res.confidence)


def test_extract_rejects_bad_arguments(small_scene):
    frames = small_scene["acq"].frames
    with pytest.raises(FormatError):
        extract_positions(frames[:1])
    with pytest.raises(FormatError):
        extract_positions(frames, reference_index=len(frames))


def test_extract_tags_degenerate_frame():
    frames = [np.random.default_rng(i).random((16, 16)) + 0.5 for i in range(3)]
    frames[2] = np.zeros((16, 16))
    with pytest.raises(DegenerateInputError, match="frame 2"):
        extract_positions(frames)


def test_reference_choice_only_offsets(full_scene):
    frames = full_scene["acq"].frames
    a = np.array(extract_positions(frames, 0).shifts)
    b = np.array(extract_positions(frames, 40).shifts)
    d = a - b
    assert np.all(d == d[0])


def test_scale_invariance(small_scene):
    frames = small_scene["acq"].frames
    a = extract_positions(frames).shifts
    b = extract_positions([3.7 * f for f in frames]).shifts
    assert a == b


def test_noiseless_full_grid_is_recovered(full_scene):
    s = full_scene
    acq = simulate_acquisition(s["obj"], s["master"], s["shifts"], s["model"], 0.0, 0)
    est = np.array(extract_positions(acq.frames).shifts)
    truth = np.array(s["shifts"])
    exact = np.all(est == truth - truth[0], axis=1)
    assert exact.mean() >= 0.95
