import numpy as np
import pytest

from tpeifp.optics import (
    OpticalConfig,
    build_otf,
    generate_scan_grid,
    generate_speckle,
    resolution_target,
    simulate_acquisition,
    speckle_canvas_shape,
)


def brute_dft(x):
    """Direct O(N^4) 2D DFT."""
    h, w = x.shape
    out = np.zeros((h, w), dtype=complex)
    for ky in range(h):
        for kx in range(w):
            s = 0j
            for y in range(h):
                for xx in range(w):
                    s += x[y, xx] * np.exp(-2j * np.pi * (ky * y / h + kx * xx / w))
            out[ky, kx] = s
    return out


def brute_correlation(a, b):
    """C[dy, dx] = sum_x a0(x) b0(x + d), circular, DFT index layout."""
    a0 = a - a.mean()
    b0 = b - b.mean()
    h, w = a.shape
    out = np.zeros((h, w))
    for dy in range(h):
        for dx in range(w):
            out[dy, dx] = np.sum(a0 * np.roll(b0, (-dy, -dx), axis=(0, 1)))
    return out


@pytest.fixture(scope="session")
def ref_optics():
    return OpticalConfig(10.0, 300.0, 632.0, 3.45)


@pytest.fixture(scope="session")
def small_scene(ref_optics):
    """64x64 chart, 5x5 scan at 4 px, correlated speckle, noiseless."""
    obj = resolution_target(64, 64)
    model = build_otf(ref_optics, 64, 64)
    shifts = generate_scan_grid(5, 4)
    h, w = speckle_canvas_shape(shifts, 64, 64)
    master = generate_speckle(3, w, h, 2.5)
    acq = simulate_acquisition(obj, master, shifts, model, 0.0, 3)
    return dict(obj=obj, model=model, shifts=shifts, master=master, acq=acq)


@pytest.fixture(scope="session")
def full_scene(ref_optics):
    """256x256 chart, 9x9 scan at 10 px, 0.1% noise, seed 0."""
    obj = resolution_target(256, 256)
    model = build_otf(ref_optics, 256, 256)
    shifts = generate_scan_grid(9, 10)
    h, w = speckle_canvas_shape(shifts, 256, 256)
    master = generate_speckle(0, w, h, 2.5)
    acq = simulate_acquisition(obj, master, shifts, model, 0.001, 0)
    return dict(obj=obj, model=model, shifts=shifts, master=master, acq=acq)
