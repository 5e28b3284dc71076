"""Position-error statistics, image quality scores and the noise sweep."""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, FormatError, TpeIfpError
from .grid import ShiftVector, as_grid
from .optics import (
    OpticalConfig,
    build_otf,
    generate_scan_grid,
    generate_speckle,
    resolution_target,
    simulate_acquisition,
    speckle_canvas_shape,
    speckle_window,
)
from .tpe import DEFAULT_FLOOR, extract_positions


@dataclass(frozen=True)
class PositionErrorReport:
    per_frame_error: list
    mean_abs_x: float
    mean_abs_y: float
    max_abs: float


@dataclass(frozen=True)
class QualityReport:
    rmse: float
    psnr: float
    beyond_cutoff_energy_ratio: float


def position_errors(estimated, truth, reference_index=0):
    """Estimated minus true shifts after aligning the reference frame.

    Estimates are relative to a reference frame, so the constant offset that
    maps ``estimated[reference_index]`` onto ``truth[reference_index]`` is
    removed first.
    """
    if len(estimated) != len(truth):
        raise FormatError(f"{len(estimated)} estimates for {len(truth)} true shifts")
    if len(truth) == 0:
        raise FormatError("no shifts to compare")
    est = np.asarray([tuple(s) for s in estimated], dtype=np.float64)
    tru = np.asarray([tuple(s) for s in truth], dtype=np.float64)
    err = est + (tru[reference_index] - est[reference_index]) - tru
    a = np.abs(err)
    return PositionErrorReport(
        per_frame_error=[ShiftVector(float(x), float(y)) for x, y in err],
        mean_abs_x=float(a[:, 0].mean()),
        mean_abs_y=float(a[:, 1].mean()),
        max_abs=float(a.max()),
    )


def beyond_cutoff_energy_ratio(img, model):
    """Share of spectral energy (DC included) outside the OTF support."""
    power = np.abs(np.fft.fft2(as_grid(img))) ** 2
    total = power.sum()
    if total == 0:
        return 0.0
    return float(power[~model.support].sum() / total)


def _unit_mean(a, name):
    m = a.mean()
    if m == 0:
        raise DegenerateInputError(f"{name} has zero mean and cannot be normalized")
    return a / m


def image_quality(recon, truth, model):
    r = as_grid(recon, "recon")
    t = as_grid(truth, "truth")
    if r.shape != t.shape:
        raise FormatError(f"shape mismatch {r.shape} vs {t.shape}")
    if np.all(t == t.flat[0]):
        raise DegenerateInputError("truth image has zero variance")
    rn, tn = _unit_mean(r, "recon"), _unit_mean(t, "truth")
    rmse = float(np.sqrt(np.mean((rn - tn) ** 2)))
    psnr = math.inf if rmse == 0 else float(20 * np.log10(tn.max() / rmse))
    return QualityReport(rmse=rmse, psnr=psnr,
                         beyond_cutoff_energy_ratio=beyond_cutoff_energy_ratio(r, model))


def normalized_correlation(a, b):
    """Pearson correlation of two equally sized arrays."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    a = a - a.mean()
    b = b - b.mean()
    den = math.sqrt(float(a @ a) * float(b @ b))
    if den == 0:
        raise DegenerateInputError("correlation of a constant array")
    return float(a @ b) / den


def pattern_correlation(state, estimated_shifts, master_speckle, true_shifts):
    """Score a recovered pattern against the true speckle on visited windows.

    For each frame, the window the reconstruction used (at its estimated
    shift) is paired with the speckle the frame really saw (at its true
    shift); the Pearson correlation is taken over all pairs pooled.
    """
    h, w = state.object.shape
    rec = [state.pattern_window(s) for s in estimated_shifts]
    tru = [speckle_window(master_speckle, s, w, h) for s in true_shifts]
    return normalized_correlation(np.stack(rec), np.stack(tru))


@dataclass(frozen=True)
class Scenario:
    """Everything needed to simulate and localize one acquisition."""

    obj: np.ndarray = field(default_factory=lambda: resolution_target(256, 256))
    optical: OpticalConfig = field(default_factory=OpticalConfig)
    n_per_side: int = 9
    step: int = 10
    correlation_length: float = 2.5
    reference_index: int = 0
    floor: float = DEFAULT_FLOOR
    seed: int = 0


def trial_seed(base_seed, level, trial):
    """Seed keyed by the noise level value itself, so level order is irrelevant."""
    key = int(round(float(level) * 1e12))
    return int(np.random.SeedSequence([int(base_seed), int(trial), key]).generate_state(1)[0])


def localization_trial(scenario, variance_ratio, seed, model=None):
    """Simulate one acquisition with fresh speckle and noise, then localize it."""
    h, w = scenario.obj.shape
    model = model or build_otf(scenario.optical, w, h)
    shifts = generate_scan_grid(scenario.n_per_side, scenario.step)
    ch, cw = speckle_canvas_shape(shifts, w, h)
    master = generate_speckle(seed, cw, ch, scenario.correlation_length)
    acq = simulate_acquisition(scenario.obj, master, shifts, model, variance_ratio, seed)
    result = extract_positions(acq.frames, scenario.reference_index, scenario.floor)
    return position_errors(result.shifts, acq.true_shifts, scenario.reference_index)


def noise_sweep(scenario, levels, trials=1):
    """Mean absolute localization error per axis against noise level.

    Returns rows ``(level, mean_abs_x, mean_abs_y)`` averaged over
    ``trials`` seeded runs per level, in the order of ``levels``.
    """
    if len(levels) == 0:
        raise FormatError("noise_sweep needs at least one level")
    if trials < 1:
        raise FormatError("trials must be >= 1")
    h, w = scenario.obj.shape
    model = build_otf(scenario.optical, w, h)
    rows = []
    for level in levels:
        if level < 0:
            raise FormatError(f"noise level {level} is negative")
        ex, ey = [], []
        for t in range(trials):
            try:
                rep = localization_trial(scenario, level, trial_seed(scenario.seed, level, t),
                                         model)
            except TpeIfpError as exc:
                raise type(exc)(f"noise level {level}: {exc}") from None
            ex.append(rep.mean_abs_x)
            ey.append(rep.mean_abs_y)
        rows.append((float(level), float(np.mean(ex)), float(np.mean(ey))))
    return rows
