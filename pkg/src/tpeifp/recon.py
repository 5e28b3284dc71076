"""Incoherent Fourier ptychography reconstruction.

Each frame's target image is the current object times that frame's window
of the pattern canvas. The target is corrected in the Fourier domain
against the captured frame inside the OTF passband, and the correction is
split back into an object update and a pattern update. One iteration visits
every frame once.

The single-step functions (``target_image`` ... ``pattern_update``) are
straight transcriptions of the update rules and are what the tests check
against; ``run_ifp`` uses the fused kernels in :mod:`tpeifp.kernels` and
half-spectrum transforms for speed.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft

from . import kernels
from .errors import ConfigError, DegenerateInputError, FormatError, OutOfRangeError
from .grid import (
    ShiftVector,
    as_grid,
    as_shift,
    canvas_geometry,
    fft_forward,
    fft_inverse,
    pattern_origin,
    window_crop,
)
from .tpe import mean_image

log = logging.getLogger(__name__)

FRAME_ORDERS = ("sequential", "seeded-random")


@dataclass(frozen=True)
class ReconOptions:
    max_iterations: int = 50
    convergence_tolerance: float = 1e-4
    frame_order: str = "sequential"
    clamp_nonnegative: bool = True
    seed: int = 0

    def __post_init__(self):
        if int(self.max_iterations) < 1:
            raise ConfigError("max_iterations must be >= 1")
        if self.convergence_tolerance < 0:
            raise ConfigError("convergence_tolerance must be >= 0")
        if self.frame_order not in FRAME_ORDERS:
            raise ConfigError(f"frame_order must be one of {FRAME_ORDERS}")


@dataclass
class ReconState:
    """Object estimate, pattern canvas and bookkeeping.

    ``anchor`` maps shifts to canvas windows (see :func:`pattern_origin`);
    ``coverage`` counts how many frame windows touch each canvas pixel, so
    zeros mark pattern pixels no measurement constrains.
    """

    object: np.ndarray
    pattern_master: np.ndarray
    anchor: ShiftVector
    coverage: np.ndarray
    iteration: int = 0
    residual_history: list = field(default_factory=list)
    converged: bool = False

    @property
    def unconstrained(self):
        return self.coverage == 0

    def copy(self):
        return replace(
            self,
            object=self.object.copy(),
            pattern_master=self.pattern_master.copy(),
            coverage=self.coverage.copy(),
            residual_history=list(self.residual_history),
        )

    def window_origin(self, shift):
        return pattern_origin(self.anchor, shift)

    def pattern_window(self, shift):
        h, w = self.object.shape
        return window_crop(self.pattern_master, self.window_origin(shift), w, h)


def _check_inputs(frames, shifts):
    if len(frames) == 0:
        raise FormatError("no frames")
    if len(frames) != len(shifts):
        raise FormatError(f"{len(shifts)} shifts for {len(frames)} frames")
    for s in shifts:
        if any(float(c) != int(c) for c in s):
            raise FormatError(f"shift {tuple(s)} is not integer-valued")


def init_state(frames, shifts):
    """Object = mean of the frames, pattern = ones on a canvas holding every window."""
    _check_inputs(frames, shifts)
    obj = mean_image(frames)
    h, w = obj.shape
    shape, anchor = canvas_geometry(shifts, w, h)
    coverage = np.zeros(shape, dtype=np.int64)
    for s in shifts:
        o = pattern_origin(anchor, s)
        coverage[o.dy:o.dy + h, o.dx:o.dx + w] += 1
    return ReconState(object=obj, pattern_master=np.ones(shape), anchor=anchor,
                      coverage=coverage)


def target_image(state, shift):
    """Object times the pattern window seen at ``shift``."""
    return state.object * state.pattern_window(as_shift(shift))


def fourier_update(target, captured, model):
    """Replace the target's passband content with the captured frame's.

    ``F^-1( F(t) + OTF * (F(c) - OTF * F(t)) )``
    """
    t = as_grid(target, "target")
    c = as_grid(captured, "captured")
    if t.shape != c.shape or t.shape != model.otf.shape:
        raise FormatError(
            f"shape mismatch: target {t.shape}, captured {c.shape}, otf {model.otf.shape}"
        )
    otf = model.otf
    ft = fft_forward(t)
    return fft_inverse(ft + otf * (fft_forward(c) - otf * ft))


def _check_same(*arrays):
    shape = arrays[0].shape
    if any(a.shape != shape for a in arrays):
        raise FormatError(f"shape mismatch: {[a.shape for a in arrays]}")


def object_update(obj, pattern_window, target, updated_target, clamp=False):
    o, p = as_grid(obj, "object"), as_grid(pattern_window, "pattern_window")
    t, u = as_grid(target, "target"), as_grid(updated_target, "updated_target")
    _check_same(o, p, t, u)
    pmax = p.max()
    if pmax == 0:
        raise DegenerateInputError("pattern window is identically zero")
    out = o + p / pmax**2 * (u - t)
    return np.maximum(out, 0.0) if clamp else out


def pattern_update(pattern_window, updated_object, target, updated_target, clamp=False):
    p, o = as_grid(pattern_window, "pattern_window"), as_grid(updated_object, "updated_object")
    t, u = as_grid(target, "target"), as_grid(updated_target, "updated_target")
    _check_same(p, o, t, u)
    omax = o.max()
    if omax == 0:
        raise DegenerateInputError("updated object is identically zero")
    out = p + o / omax**2 * (u - t)
    return np.maximum(out, 0.0) if clamp else out


def run_ifp(frames, shifts, model, opts=None, state=None):
    """Iterate the frame-by-frame object/pattern updates until converged.

    Stops after ``opts.max_iterations`` iterations or when the relative L2
    change of the object over one iteration falls below
    ``opts.convergence_tolerance``. ``state`` defaults to
    :func:`init_state`; it is copied, never modified.
    """
    opts = opts or ReconOptions()
    _check_inputs(frames, shifts)
    stack = [as_grid(f, f"frame {n}") for n, f in enumerate(frames)]
    h, w = stack[0].shape
    if model.otf.shape != (h, w):
        raise FormatError(f"OTF shape {model.otf.shape} does not match frames {(h, w)}")
    state = init_state(stack, shifts) if state is None else state.copy()
    if state.object.shape != (h, w):
        raise FormatError("state object does not match frame size")

    half = w // 2 + 1
    otf = model.otf[:, :half]
    gain = 1.0 - otf * otf
    measured = [otf * scipy.fft.rfft2(f) for f in stack]
    origins = []
    for n, s in enumerate(shifts):
        o = state.window_origin(as_shift(s))
        if (o.dx < 0 or o.dy < 0 or o.dx + w > state.pattern_master.shape[1]
                or o.dy + h > state.pattern_master.shape[0]):
            raise OutOfRangeError(f"frame {n}: window for shift {tuple(s)} leaves the canvas")
        origins.append((int(o.dy), int(o.dx)))

    obj, canvas = state.object, state.pattern_master
    rng = np.random.default_rng(opts.seed)
    for it in range(int(opts.max_iterations)):
        order = (rng.permutation(len(stack)) if opts.frame_order == "seeded-random"
                 else range(len(stack)))
        previous = obj.copy()
        total = 0.0
        for n in order:
            top, left = origins[n]
            target = obj * canvas[top:top + h, left:left + w]
            spec = kernels.spectrum_combine(scipy.fft.rfft2(target), gain, measured[n])
            updated = scipy.fft.irfft2(spec, s=(h, w))
            status, residual = kernels.frame_update(
                obj, canvas, top, left, updated, target, opts.clamp_nonnegative)
            if status == kernels.ZERO_PATTERN:
                raise DegenerateInputError(
                    f"iteration {it + 1}, frame {n}: pattern window is identically zero")
            if status == kernels.ZERO_OBJECT:
                raise DegenerateInputError(
                    f"iteration {it + 1}, frame {n}: updated object is identically zero")
            total += residual
        state.iteration += 1
        state.residual_history.append(total)
        norm = np.linalg.norm(previous)
        change = np.linalg.norm(obj - previous) / norm if norm > 0 else 0.0
        log.debug("iteration %d residual %.6g change %.3g", state.iteration, total, change)
        if change < opts.convergence_tolerance:
            state.converged = True
            break
    return state
