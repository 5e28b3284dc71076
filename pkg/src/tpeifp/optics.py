"""Incoherent forward model and translated-speckle acquisition simulator."""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
from scipy import ndimage

from .errors import ConfigError, FormatError, OutOfRangeError
from .grid import ShiftVector, as_grid, pattern_origin, window_crop

SPECKLE_FLOOR = 1.0 / 65536.0


class UndersampledWarning(UserWarning):
    """Detector sampling is below twice the incoherent cutoff."""


@dataclass(frozen=True)
class OpticalConfig:
    """Imaging system constants. Lengths in the units named by each field."""

    aperture_diameter: float = 10.0  # mm
    focal_length: float = 300.0  # mm
    wavelength: float = 632.0  # nm
    pixel_pitch: float = 3.45  # um

    def __post_init__(self):
        for name in ("aperture_diameter", "focal_length", "wavelength", "pixel_pitch"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"optical.{name} must be a positive number, got {v!r}")

    @property
    def cutoff_frequency(self):
        """Incoherent cutoff D / (lambda f) in cycles/mm."""
        return self.aperture_diameter / (self.wavelength * 1e-6 * self.focal_length)

    @property
    def sampling_frequency(self):
        """Detector sampling frequency in samples/mm."""
        return 1.0 / (self.pixel_pitch * 1e-3)

    @property
    def oversampled(self):
        return self.sampling_frequency >= 2.0 * self.cutoff_frequency


@dataclass(frozen=True)
class OpticalModel:
    otf: np.ndarray
    cutoff_frequency: float

    @property
    def support(self):
        return self.otf > 0


@dataclass
class AcquisitionSet:
    frames: list
    true_shifts: list = None
    config: OpticalConfig = field(default_factory=OpticalConfig)
    seed: int = 0

    def __post_init__(self):
        if not self.frames:
            raise FormatError("acquisition has no frames")
        shape = np.shape(self.frames[0])
        if any(np.shape(f) != shape for f in self.frames):
            raise FormatError("frames do not share dimensions")
        if self.true_shifts is not None and len(self.true_shifts) != len(self.frames):
            raise FormatError(
                f"{len(self.true_shifts)} shifts for {len(self.frames)} frames"
            )


def chat(r):
    """Circular-pupil autocorrelation, ``(2/pi)(acos r - r sqrt(1 - r^2))`` for r < 1."""
    r = np.asarray(r, dtype=np.float64)
    inside = r < 1.0
    rc = np.where(inside, r, 0.0)
    out = (2.0 / np.pi) * (np.arccos(rc) - rc * np.sqrt(1.0 - rc * rc))
    return np.where(inside, out, 0.0)


def frequency_radius(width, height, pixel_pitch):
    """Radial spatial frequency (cycles/mm) on the DFT grid; pitch in um."""
    d = pixel_pitch * 1e-3
    fx = np.fft.fftfreq(width, d=d)
    fy = np.fft.fftfreq(height, d=d)
    return np.hypot(fy[:, None], fx[None, :])


def build_otf(config, width, height):
    """Diffraction-limited incoherent OTF for a clear circular pupil."""
    if width < 2 or height < 2:
        raise ConfigError(f"OTF grid must be at least 2x2, got {width}x{height}")
    if not config.oversampled:
        warnings.warn(
            f"sampling {config.sampling_frequency:.1f}/mm is below twice the "
            f"cutoff {config.cutoff_frequency:.1f} cycles/mm",
            UndersampledWarning,
            stacklevel=2,
        )
    fc = config.cutoff_frequency
    otf = chat(frequency_radius(width, height, config.pixel_pitch) / fc)
    otf[0, 0] = 1.0
    return OpticalModel(otf=otf, cutoff_frequency=fc)


def generate_speckle(seed, width, height, correlation_length=0.0):
    """Random illumination pattern with samples in (0, 1].

    With ``correlation_length`` 0 the samples are i.i.d. uniform. Otherwise
    the field is Gaussian low-passed (sigma = ``correlation_length`` pixels,
    periodic boundary) and min-max rescaled back to [1/65536, 1].
    """
    if correlation_length < 0:
        raise ConfigError("correlation_length must be >= 0")
    rng = np.random.default_rng(seed)
    u = 1.0 - rng.random((height, width))
    if correlation_length > 0:
        u = ndimage.gaussian_filter(u, correlation_length, mode="wrap")
        lo, hi = u.min(), u.max()
        if hi > lo:
            u = (u - lo) / (hi - lo)
        else:
            u = np.ones_like(u)
    return np.maximum(u, SPECKLE_FLOOR)


def incoherent_image(intensity, model):
    """Image ``intensity`` through the OTF; negative ringing is clamped to 0."""
    a = as_grid(intensity, "intensity", nonnegative=True)
    if a.shape != model.otf.shape:
        raise FormatError(f"intensity shape {a.shape} does not match OTF {model.otf.shape}")
    out = scipy.fft.ifft2(model.otf * scipy.fft.fft2(a)).real
    return np.maximum(out, 0.0)


def add_gaussian_noise(img, variance_ratio, seed):
    """Add N(0, variance_ratio * var(img)) noise and clamp at zero.

    ``seed`` may be an int or a sequence of ints (e.g. ``(seed, frame)``).
    """
    if variance_ratio < 0:
        raise ConfigError("variance_ratio must be >= 0")
    a = as_grid(img)
    if variance_ratio == 0:
        return a.copy()
    rng = np.random.default_rng(seed)
    sigma = math.sqrt(variance_ratio * float(np.var(a)))
    return np.maximum(a + rng.normal(0.0, sigma, a.shape), 0.0)


def generate_scan_grid(n_per_side, step):
    """Centered square lattice of integer shifts, row-major (y outer, x inner)."""
    if n_per_side < 1 or step < 1:
        raise ConfigError("scan grid needs n_per_side >= 1 and step >= 1")
    # offset rounds down when step * (n - 1) is odd
    coords = [int(step * i - (step * (n_per_side - 1)) // 2) for i in range(n_per_side)]
    return [ShiftVector(x, y) for y in coords for x in coords]


def speckle_canvas_shape(shifts, width, height):
    """Canvas padded on every side by the largest absolute shift per axis."""
    s = np.abs(np.asarray([tuple(v) for v in shifts], dtype=np.int64).reshape(-1, 2))
    px, py = (int(v) for v in s.max(axis=0))
    return height + 2 * py, width + 2 * px


def centered_anchor(master_shape, width, height):
    mh, mw = master_shape
    return ShiftVector((mw - width) // 2, (mh - height) // 2)


def speckle_window(master, shift, width, height):
    """The pattern seen by a frame translated by ``shift`` on a centered canvas."""
    anchor = centered_anchor(np.shape(master), width, height)
    return window_crop(master, pattern_origin(anchor, shift), width, height)


def simulate_acquisition(obj, master_speckle, shifts, model, variance_ratio=0.0, seed=0,
                         config=None):
    """Render one noisy, diffraction-limited frame per speckle translation.

    The master speckle is treated as centered on the object: frame ``n``
    sees ``master`` content translated by ``shifts[n]``. Frame noise is
    drawn from a stream seeded by ``(seed, n)``.
    """
    o = as_grid(obj, "object", nonnegative=True)
    master = as_grid(master_speckle, "master_speckle", nonnegative=True)
    h, w = o.shape
    frames = []
    for n, s in enumerate(shifts):
        try:
            win = speckle_window(master, s, w, h)
        except OutOfRangeError as exc:
            raise OutOfRangeError(f"frame {n} (shift {tuple(s)}): {exc}") from None
        img = incoherent_image(o * win, model)
        frames.append(add_gaussian_noise(img, variance_ratio, (seed, n)))
    return AcquisitionSet(
        frames=frames,
        true_shifts=[ShiftVector(int(s[0]), int(s[1])) for s in shifts],
        config=config if config is not None else OpticalConfig(),
        seed=seed,
    )


def resolution_target(width=256, height=256, background=0.2):
    """Procedural bar chart with periods from 3 to 16 pixels.

    Groups of bars alternate between vertical and horizontal orientation on
    a grid of square cells over a uniform ``background``.
    """
    img = np.full((height, width), background, dtype=np.float64)
    cell = 64 if min(width, height) >= 128 else max(8, min(width, height) // 2)
    periods = [3, 3, 4, 4, 5, 5, 6, 6, 7, 7, 8, 8, 10, 10, 12, 12, 16, 16]
    k = 0
    for cy in range(0, height - cell + 1, cell):
        for cx in range(0, width - cell + 1, cell):
            p = periods[k % len(periods)]
            vertical = (k + cy // cell) % 2 == 0
            k += 1
            span = min(4 * p, cell - 8)
            n_bars = max(1, span // p)
            length = cell - 16
            a0 = (cell - n_bars * p) // 2
            for b in range(n_bars):
                s0 = a0 + b * p
                s1 = s0 + max(1, p // 2)
                if vertical:
                    img[cy + 8:cy + 8 + length, cx + s0:cx + s1] = 1.0
                else:
                    img[cy + s0:cy + s1, cx + 8:cx + 8 + length] = 1.0
    return img
