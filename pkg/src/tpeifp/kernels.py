"""Hot inner loops, each in a numba flavour and a pure-numpy flavour.

The public names (``frame_update``, ``spectrum_combine``, ``peak_search``)
are bound to the numba versions when :data:`tpeifp._accel.USE_NUMBA` is
true and to the numpy versions otherwise. Both flavours are kept importable
so tests and ``benchmarks/bench_kernels.py`` can compare them directly.

Status codes returned by ``frame_update``: 0 ok, 1 pattern window
maximum is zero, 2 updated object maximum is zero.
"""
import numpy as np

from ._accel import HAVE_NUMBA, USE_NUMBA, njit

OK = 0
ZERO_PATTERN = 1
ZERO_OBJECT = 2


# ---------------------------------------------------------------------------
# pure numpy
# ---------------------------------------------------------------------------

def frame_update_numpy(obj, canvas, top, left, updated, target, clamp):
    """Apply the object then pattern update for one frame, in place.

    ``obj`` is overwritten with the renewed object and the window of
    ``canvas`` at (``top``, ``left``) with the renewed pattern. Returns
    ``(status, sum of squared residual)``.
    """
    h, w = obj.shape
    win = canvas[top:top + h, left:left + w]
    diff = updated - target
    residual = float(np.sum(diff * diff))
    pmax = win.max()
    if pmax == 0.0:
        return ZERO_PATTERN, residual
    obj += win * (1.0 / (pmax * pmax)) * diff
    if clamp:
        np.maximum(obj, 0.0, out=obj)
    omax = obj.max()
    if omax == 0.0:
        return ZERO_OBJECT, residual
    win += obj * (1.0 / (omax * omax)) * diff
    if clamp:
        np.maximum(win, 0.0, out=win)
    return OK, residual


def spectrum_combine_numpy(spec, gain, measured):
    """``spec <- spec * gain + measured`` in place."""
    spec *= gain
    spec += measured
    return spec


def _centered(i, n):
    return i if i <= n // 2 else i - n


def peak_search_numpy(surface):
    """Locate the correlation maximum and the best competing local maximum.

    Returns ``(row, col, peak_value, secondary_value)`` where row/col are
    array indices. Ties on the maximum go to the smallest centered
    ``(dy, dx)``. The secondary value is the largest 8-neighbour local
    maximum other than the peak itself, or the surface minimum when no
    other local maximum exists.
    """
    h, w = surface.shape
    peak = surface.max()
    rows, cols = np.nonzero(surface == peak)
    dy = np.where(rows <= h // 2, rows, rows - h)
    dx = np.where(cols <= w // 2, cols, cols - w)
    k = np.lexsort((dx, dy))[0]
    r, c = int(rows[k]), int(cols[k])

    is_max = np.ones(surface.shape, dtype=bool)
    for sy in (-1, 0, 1):
        for sx in (-1, 0, 1):
            if sy or sx:
                is_max &= surface >= np.roll(surface, (sy, sx), axis=(0, 1))
    is_max[r, c] = False
    secondary = surface[is_max].max() if is_max.any() else surface.min()
    return r, c, float(peak), float(secondary)


# ---------------------------------------------------------------------------
# numba
# ---------------------------------------------------------------------------

@njit
def _frame_update_nb(obj, canvas, top, left, updated, target, clamp):
    h, w = obj.shape
    residual = 0.0
    pmax = -np.inf
    for i in range(h):
        for j in range(w):
            d = updated[i, j] - target[i, j]
            residual += d * d
            p = canvas[top + i, left + j]
            if p > pmax:
                pmax = p
    if pmax == 0.0:
        return ZERO_PATTERN, residual
    ps = 1.0 / (pmax * pmax)
    omax = -np.inf
    for i in range(h):
        for j in range(w):
            v = obj[i, j] + canvas[top + i, left + j] * ps * (updated[i, j] - target[i, j])
            if clamp and v < 0.0:
                v = 0.0
            obj[i, j] = v
            if v > omax:
                omax = v
    if omax == 0.0:
        return ZERO_OBJECT, residual
    os_ = 1.0 / (omax * omax)
    for i in range(h):
        for j in range(w):
            v = canvas[top + i, left + j] + obj[i, j] * os_ * (updated[i, j] - target[i, j])
            if clamp and v < 0.0:
                v = 0.0
            canvas[top + i, left + j] = v
    return OK, residual


@njit
def _spectrum_combine_nb(spec, gain, measured):
    h, w = spec.shape
    for i in range(h):
        for j in range(w):
            spec[i, j] = spec[i, j] * gain[i, j] + measured[i, j]
    return spec


@njit
def _peak_search_nb(surface):
    h, w = surface.shape
    best = -np.inf
    br = 0
    bc = 0
    bdy = 0
    bdx = 0
    for i in range(h):
        dy = i if i <= h // 2 else i - h
        for j in range(w):
            dx = j if j <= w // 2 else j - w
            v = surface[i, j]
            if v > best or (v == best and (dy < bdy or (dy == bdy and dx < bdx))):
                best = v
                br = i
                bc = j
                bdy = dy
                bdx = dx
    secondary = -np.inf
    lowest = np.inf
    for i in range(h):
        up = i - 1 if i > 0 else h - 1
        down = i + 1 if i < h - 1 else 0
        for j in range(w):
            v = surface[i, j]
            if v < lowest:
                lowest = v
            # a value that cannot raise the secondary needs no neighbour test
            if v <= secondary or (i == br and j == bc):
                continue
            left = j - 1 if j > 0 else w - 1
            right = j + 1 if j < w - 1 else 0
            if (surface[up, left] <= v and surface[up, j] <= v and surface[up, right] <= v
                    and surface[i, left] <= v and surface[i, right] <= v
                    and surface[down, left] <= v and surface[down, j] <= v
                    and surface[down, right] <= v):
                secondary = v
    if secondary == -np.inf:
        secondary = lowest
    return br, bc, best, secondary


def frame_update_numba(obj, canvas, top, left, updated, target, clamp):
    status, residual = _frame_update_nb(obj, canvas, top, left, updated, target, bool(clamp))
    return int(status), float(residual)


def spectrum_combine_numba(spec, gain, measured):
    return _spectrum_combine_nb(spec, gain, measured)


def peak_search_numba(surface):
    r, c, peak, secondary = _peak_search_nb(np.ascontiguousarray(surface, dtype=np.float64))
    return int(r), int(c), float(peak), float(secondary)


NUMPY_KERNELS = {
    "frame_update": frame_update_numpy,
    "spectrum_combine": spectrum_combine_numpy,
    "peak_search": peak_search_numpy,
}

NUMBA_KERNELS = {
    "frame_update": frame_update_numba,
    "spectrum_combine": spectrum_combine_numba,
    "peak_search": peak_search_numba,
} if HAVE_NUMBA else {}

_active = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS
frame_update = _active["frame_update"]
spectrum_combine = _active["spectrum_combine"]
peak_search = _active["peak_search"]
BACKEND = "numba" if USE_NUMBA else "numpy"
