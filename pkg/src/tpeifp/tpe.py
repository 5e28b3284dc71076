"""Translation position extraction from raw speckle-modulated frames.

The speckle part of each frame is isolated by dividing the frame by the
pixel-wise mean of the whole stack; each isolated speckle is then
cross-correlated against a reference frame's speckle and the integer lag
of the correlation maximum is taken as that frame's translation.
"""
from dataclasses import dataclass

import numpy as np
import scipy.fft

from . import kernels
from .errors import DegenerateInputError, FormatError
from .grid import ShiftVector, as_grid

DEFAULT_FLOOR = 1e-3


@dataclass(frozen=True)
class CorrelationSurface:
    """Circular cross-correlation over integer lags, DFT layout.

    ``values[iy, ix]`` holds the correlation at lag (dy, dx) where
    ``dy = iy`` for ``iy <= H // 2`` and ``iy - H`` otherwise (same for x).
    """

    values: np.ndarray
    peak: ShiftVector
    peak_value: float
    secondary_peak_value: float

    @property
    def confidence(self):
        if self.secondary_peak_value <= 0:
            return float("inf")
        return max(1.0, self.peak_value / self.secondary_peak_value)


@dataclass(frozen=True)
class ExtractionResult:
    shifts: list
    reference_index: int
    confidence: list


def mean_image(frames):
    """Pixel-wise arithmetic mean of a non-empty stack of equal-sized frames."""
    if len(frames) == 0:
        raise FormatError("mean_image needs at least one frame")
    first = as_grid(frames[0], "frame 0")
    acc = first.copy()
    for n, f in enumerate(frames[1:], start=1):
        a = as_grid(f, f"frame {n}")
        if a.shape != first.shape:
            raise FormatError(f"frame {n} has shape {a.shape}, expected {first.shape}")
        acc += a
    return acc / len(frames)


def isolate_speckle(frame, mean, floor=DEFAULT_FLOOR):
    """Ratio image ``frame / max(mean, floor * max(mean))``."""
    if floor <= 0:
        raise FormatError("floor must be > 0")
    f = as_grid(frame, "frame")
    m = as_grid(mean, "mean")
    if f.shape != m.shape:
        raise FormatError(f"frame shape {f.shape} does not match mean {m.shape}")
    mmax = m.max()
    if mmax <= 0:
        raise DegenerateInputError("mean image is not positive anywhere")
    return f / np.maximum(m, floor * mmax)


def _is_constant(a):
    return bool(np.all(a == a.flat[0]))


def cross_correlate(a, b, padded=False):
    """Correlation ``C(l) = sum_x a0(x) b0(x + l)`` of the zero-mean inputs.

    A peak at lag ``l`` means ``b`` is ``a`` translated by ``l``. With
    ``padded`` the inputs are zero-padded to twice their size first, which
    removes wraparound at the cost of a larger transform.
    """
    a = as_grid(a, "a")
    b = as_grid(b, "b")
    if a.shape != b.shape:
        raise FormatError(f"shape mismatch {a.shape} vs {b.shape}")
    if _is_constant(a) or _is_constant(b):
        raise DegenerateInputError("constant input has no correlation peak")
    a0 = a - a.mean()
    b0 = b - b.mean()
    h, w = a.shape
    shape = (2 * h, 2 * w) if padded else (h, w)
    fa = scipy.fft.rfft2(a0, s=shape)
    fb = scipy.fft.rfft2(b0, s=shape)
    values = scipy.fft.irfft2(np.conj(fa) * fb, s=shape)
    r, c, peak, secondary = kernels.peak_search(values)
    H, W = shape
    lag = ShiftVector(dx=c if c <= W // 2 else c - W, dy=r if r <= H // 2 else r - H)
    if not peak > 0:
        raise DegenerateInputError("correlation surface has no positive peak")
    return CorrelationSurface(values=values, peak=lag, peak_value=peak,
                              secondary_peak_value=min(secondary, peak))


def extract_positions(frames, reference_index=0, floor=DEFAULT_FLOOR, padded=False):
    """Estimate every frame's speckle translation relative to the reference frame."""
    n = len(frames)
    if n < 2:
        raise FormatError("extract_positions needs at least two frames")
    if not 0 <= reference_index < n:
        raise FormatError(f"reference_index {reference_index} out of range for {n} frames")
    mean = mean_image(frames)
    ref = isolate_speckle(frames[reference_index], mean, floor)
    shifts, confidence = [], []
    for k, f in enumerate(frames):
        try:
            surf = cross_correlate(ref, isolate_speckle(f, mean, floor), padded=padded)
        except DegenerateInputError as exc:
            raise DegenerateInputError(f"frame {k}: {exc}") from None
        shifts.append(ShiftVector(0, 0) if k == reference_index else surf.peak)
        confidence.append(surf.confidence)
    return ExtractionResult(shifts=shifts, reference_index=reference_index,
                            confidence=confidence)
