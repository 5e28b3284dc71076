"""Compare the numba and pure-numpy kernels.

    python3 benchmarks/bench_kernels.py            # kernel micro-benchmarks
    python3 benchmarks/bench_kernels.py --full     # plus a full reconstruction per backend

The full run starts a subprocess per backend, toggling TPEIFP_DISABLE_NUMBA,
so the module-level kernel binding is exercised exactly as users see it.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from tpeifp import kernels
from tpeifp._accel import DISABLE_ENV, HAVE_NUMBA

FULL_RUN = """
import time
from tpeifp import kernels
from tpeifp.metrics import Scenario
from tpeifp.optics import (build_otf, generate_scan_grid, generate_speckle,
                           simulate_acquisition, speckle_canvas_shape)
from tpeifp.recon import ReconOptions, run_ifp
from tpeifp.tpe import extract_positions

sc = Scenario()
model = build_otf(sc.optical, 256, 256)
shifts = generate_scan_grid(9, 10)
h, w = speckle_canvas_shape(shifts, 256, 256)
acq = simulate_acquisition(sc.obj, generate_speckle(0, w, h, 2.5), shifts, model, 1e-3, 0)
run_ifp(acq.frames[:2], shifts[:2], model, ReconOptions(max_iterations=1))  # warm-up
t0 = time.perf_counter()
est = extract_positions(acq.frames).shifts
t1 = time.perf_counter()
run_ifp(acq.frames, est, model, ReconOptions(max_iterations={iters}, convergence_tolerance=0))
t2 = time.perf_counter()
print(kernels.BACKEND, t1 - t0, t2 - t1)
"""


def inputs(size, rng):
    h = w = size
    obj = rng.random((h, w))
    canvas = rng.random((h + 80, w + 80))
    target = rng.random((h, w))
    updated = target + 0.01 * rng.standard_normal((h, w))
    half = w // 2 + 1
    spec = rng.standard_normal((h, half)) + 1j * rng.standard_normal((h, half))
    measured = rng.standard_normal((h, half)) + 1j * rng.standard_normal((h, half))
    gain = rng.random((h, half))
    surface = rng.standard_normal((h, w))
    return obj, canvas, target, updated, spec, gain, measured, surface


def bench_kernels(size, repeat):
    obj, canvas, target, updated, spec, gain, measured, surface = inputs(
        size, np.random.default_rng(0))
    cases = {
        "frame_update": lambda k: k["frame_update"](obj.copy(), canvas.copy(), 40, 40,
                                                      updated, target, True),
        "spectrum_combine": lambda k: k["spectrum_combine"](spec, gain, measured),
        "peak_search": lambda k: k["peak_search"](surface),
    }
    backends = {"numpy": kernels.NUMPY_KERNELS}
    if HAVE_NUMBA:
        backends["numba"] = kernels.NUMBA_KERNELS
    print(f"kernel micro-benchmarks, {size}x{size}, best of {repeat} (ms per call)")
    print(f"{'kernel':<18}" + "".join(f"{b:>10}" for b in backends) + "   speedup")
    for name, call in cases.items():
        best = {}
        for b, table in backends.items():
            call(table)  # compile / warm up
            n = 20
            best[b] = min(timeit.repeat(lambda: call(table), number=n, repeat=repeat)) / n * 1e3
        speed = best["numpy"] / best["numba"] if "numba" in best else float("nan")
        print(f"{name:<18}" + "".join(f"{best[b]:>10.3f}" for b in backends) + f"{speed:>9.2f}x")


def bench_full(iters):
    print(f"\nfull pipeline, 256x256, 81 frames, {iters} iterations (s)")
    for disable in ("1", "0") if HAVE_NUMBA else ("1",):
        env = dict(os.environ, **{DISABLE_ENV: disable})
        out = subprocess.run([sys.executable, "-c", FULL_RUN.format(iters=iters)], env=env,
                             capture_output=True, text=True, check=True).stdout.split()
        print(f"{out[0]:<8} extract {float(out[1]):7.2f}   reconstruct {float(out[2]):7.2f}")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--full", action="store_true", help="also time a full reconstruction")
    p.add_argument("--iterations", type=int, default=10)
    args = p.parse_args(argv)
    bench_kernels(args.size, args.repeat)
    if args.full:
        bench_full(args.iterations)


if __name__ == "__main__":
    main()
