"""2D grid primitives: validation, DFTs and canvas windows.

Images are plain 2D ``float64`` arrays indexed ``[row, col]`` = ``[y, x]``.
Spectra are complex arrays in the unshifted DFT layout, zero frequency at
``[0, 0]``. Nothing here mutates its inputs.
"""
from typing import NamedTuple

import numpy as np
import scipy.fft

from .errors import FormatError, OutOfRangeError


class ShiftVector(NamedTuple):
    """Translation in pixels; ``dx`` along columns, ``dy`` along rows."""

    dx: float
    dy: float

    def __add__(self, other):
        return ShiftVector(self.dx + other[0], self.dy + other[1])

    def __sub__(self, other):
        return ShiftVector(self.dx - other[0], self.dy - other[1])

    def __neg__(self):
        return ShiftVector(-self.dx, -self.dy)


ORIGIN = ShiftVector(0, 0)


def as_shift(v):
    return v if isinstance(v, ShiftVector) else ShiftVector(*v)


def as_grid(x, name="image", nonnegative=False):
    """Return ``x`` as a finite 2D float64 array or raise :class:`FormatError`."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise FormatError(f"{name} must be a non-empty 2D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise FormatError(f"{name} contains non-finite samples")
    if nonnegative and a.min() < 0:
        raise FormatError(f"{name} must be non-negative")
    return a


def fft_forward(img):
    """Unnormalized forward 2D DFT."""
    a = as_grid(img)
    return scipy.fft.fft2(a)


def fft_inverse(spec):
    """Normalized inverse 2D DFT; the imaginary part is discarded."""
    s = np.asarray(spec, dtype=np.complex128)
    if s.ndim != 2:
        raise FormatError(f"spectrum must be 2D, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise FormatError("spectrum contains non-finite samples")
    return scipy.fft.ifft2(s).real


def _window_bounds(master_shape, top_left, width, height):
    x0, y0 = int(top_left[0]), int(top_left[1])
    mh, mw = master_shape
    if x0 < 0 or y0 < 0 or x0 + width > mw or y0 + height > mh:
        raise OutOfRangeError(
            f"window {width}x{height} at top-left (x={x0}, y={y0}) "
            f"exceeds canvas {mw}x{mh}"
        )
    return y0, x0


def window_crop(master, offset, width, height, anchor=ORIGIN):
    """Copy of the ``width`` x ``height`` window of ``master`` whose top-left
    corner sits at ``anchor + offset`` (x = column, y = row)."""
    m = np.asarray(master)
    y0, x0 = _window_bounds(m.shape, as_shift(anchor) + as_shift(offset), width, height)
    return m[y0:y0 + height, x0:x0 + width].copy()


def window_accumulate(master, offset, delta, anchor=ORIGIN):
    """New canvas equal to ``master`` with ``delta`` added inside the window."""
    m = np.asarray(master, dtype=np.float64)
    d = np.asarray(delta, dtype=np.float64)
    if d.ndim != 2:
        raise FormatError(f"delta must be 2D, got shape {d.shape}")
    h, w = d.shape
    y0, x0 = _window_bounds(m.shape, as_shift(anchor) + as_shift(offset), w, h)
    out = m.copy()
    out[y0:y0 + h, x0:x0 + w] += d
    return out


def pattern_origin(anchor, shift):
    """Top-left corner of the pattern window seen by a frame translated by ``shift``.

    A frame translated by (dx, dy) sees pattern content moved by +dx columns
    and +dy rows, so its window starts at ``anchor - shift``.
    """
    return as_shift(anchor) - as_shift(shift)


def canvas_geometry(shifts, width, height):
    """Canvas shape and anchor that hold every window for ``shifts``.

    The canvas is the frame grown by the shift extent on each axis; the
    anchor is the per-axis maximum shift so that ``pattern_origin`` is
    never negative.
    """
    s = np.asarray([tuple(v) for v in shifts], dtype=np.int64).reshape(-1, 2)
    lo, hi = s.min(axis=0), s.max(axis=0)
    shape = (int(height + hi[1] - lo[1]), int(width + hi[0] - lo[0]))
    return shape, ShiftVector(int(hi[0]), int(hi[1]))
