"""Speckle-translation extraction and incoherent Fourier ptychography.

Simulate speckle-modulated acquisitions, recover the per-frame speckle
translations from the raw frames alone, and reconstruct super-resolved
object and pattern estimates.
"""
from .errors import (
    ConfigError,
    DegenerateInputError,
    FormatError,
    OutOfRangeError,
    TpeIfpError,
)
from .grid import ShiftVector, fft_forward, fft_inverse, window_accumulate, window_crop
from .kernels import BACKEND
from .optics import (
    AcquisitionSet,
    OpticalConfig,
    OpticalModel,
    add_gaussian_noise,
    build_otf,
    generate_scan_grid,
    generate_speckle,
    incoherent_image,
    resolution_target,
    simulate_acquisition,
)
from .recon import ReconOptions, ReconState, init_state, run_ifp
from .tpe import (
    CorrelationSurface,
    ExtractionResult,
    cross_correlate,
    extract_positions,
    isolate_speckle,
    mean_image,
)

__version__ = "0.1.0"
