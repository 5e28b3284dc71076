"""JSON pipeline configuration.

Every key is optional; omitted keys take the defaults below, which are the
simulation constants of the reference setup (10 mm aperture, 300 mm focal
length, 632 nm, 3.45 um pixels, 9x9 scan at 10 px, noise ratio 0.001).
Unknown keys are rejected so that typos do not silently fall back to
defaults.

    {
      "seed": 0,
      "optical": {"aperture_diameter": 10.0, "focal_length": 300.0,
                  "wavelength": 632.0, "pixel_pitch": 3.45},
      "object": {"width": 256, "height": 256, "path": null},
      "scan": {"n_per_side": 9, "step": 10},
      "speckle": {"seed": null, "correlation_length": 2.5},
      "noise": {"variance_ratio": 0.001},
      "tpe": {"reference_index": 0, "floor": 0.001, "padded": false},
      "recon": {"max_iterations": 50, "convergence_tolerance": 0.0001,
                "frame_order": "sequential", "clamp_nonnegative": true, "seed": 0},
      "sweep": {"levels": [0.0, 0.005, ...], "trials": 3},
      "paths": {"out_dir": "out", "frames_dir": null, "positions": null}
    }

Units: aperture and focal length in mm, wavelength in nm, pixel pitch in
um, correlation length and shifts in pixels.
"""
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .optics import OpticalConfig
from .recon import ReconOptions

NUMBER = (int, float)

SCHEMA = {
    "seed": int,
    "optical": {"aperture_diameter": NUMBER, "focal_length": NUMBER,
                "wavelength": NUMBER, "pixel_pitch": NUMBER},
    "object": {"width": int, "height": int, "path": (str, type(None))},
    "scan": {"n_per_side": int, "step": int},
    "speckle": {"seed": (int, type(None)), "correlation_length": NUMBER},
    "noise": {"variance_ratio": NUMBER},
    "tpe": {"reference_index": int, "floor": NUMBER, "padded": bool},
    "recon": {"max_iterations": int, "convergence_tolerance": NUMBER,
              "frame_order": str, "clamp_nonnegative": bool, "seed": int},
    "sweep": {"levels": list, "trials": int},
    "paths": {"out_dir": str, "frames_dir": (str, type(None)),
              "positions": (str, type(None))},
}

DEFAULT_SWEEP_LEVELS = (0.0, 0.005, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2)


@dataclass(frozen=True)
class ScanConfig:
    n_per_side: int = 9
    step: int = 10


@dataclass(frozen=True)
class ObjectConfig:
    width: int = 256
    height: int = 256
    path: str = None


@dataclass(frozen=True)
class SpeckleConfig:
    seed: int = None
    correlation_length: float = 2.5


@dataclass(frozen=True)
class TpeConfig:
    reference_index: int = 0
    floor: float = 1e-3
    padded: bool = False


@dataclass(frozen=True)
class SweepConfig:
    levels: tuple = DEFAULT_SWEEP_LEVELS
    trials: int = 3


@dataclass(frozen=True)
class PathsConfig:
    out_dir: str = "out"
    frames_dir: str = None
    positions: str = None


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    optical: OpticalConfig = field(default_factory=OpticalConfig)
    object: ObjectConfig = field(default_factory=ObjectConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    speckle: SpeckleConfig = field(default_factory=SpeckleConfig)
    variance_ratio: float = 1e-3
    tpe: TpeConfig = field(default_factory=TpeConfig)
    recon: ReconOptions = field(default_factory=ReconOptions)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    @property
    def speckle_seed(self):
        return self.seed if self.speckle.seed is None else self.speckle.seed


def _line_of(text, key):
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _fail(text, key, message):
    line = _line_of(text, key) if text is not None else None
    where = f"line {line}: " if line else ""
    raise ConfigError(f"{where}{message}")


def _check_type(text, dotted, value, expected):
    # bool is an int subclass; keep them apart
    ok = isinstance(value, expected) and not (
        isinstance(value, bool) and expected is not bool
        and not (isinstance(expected, tuple) and bool in expected)
    )
    if not ok:
        _fail(text, dotted.rsplit(".", 1)[-1], f"{dotted} has invalid type {type(value).__name__}")


def _validate(data, text):
    if not isinstance(data, dict):
        raise ConfigError("line 1: top level must be a JSON object")
    for key, value in data.items():
        if key not in SCHEMA:
            _fail(text, key, f"unknown key {key!r}")
        spec = SCHEMA[key]
        if isinstance(spec, dict):
            if not isinstance(value, dict):
                _fail(text, key, f"{key} must be an object")
            for sub, v in value.items():
                if sub not in spec:
                    _fail(text, sub, f"unknown key {key}.{sub!r}")
                _check_type(text, f"{key}.{sub}", v, spec[sub])
        else:
            _check_type(text, key, value, spec)


def from_dict(data, text=None):
    """Build a :class:`PipelineConfig` from parsed JSON, applying defaults."""
    _validate(data, text)
    sec = {k: data.get(k, {}) for k in SCHEMA if isinstance(SCHEMA[k], dict)}
    try:
        optical = OpticalConfig(**{k: float(v) for k, v in sec["optical"].items()})
        scan = ScanConfig(**sec["scan"])
        if scan.n_per_side < 1 or scan.step < 1:
            _fail(text, "scan", "scan.n_per_side and scan.step must be >= 1")
        obj = ObjectConfig(**sec["object"])
        if obj.width < 2 or obj.height < 2:
            _fail(text, "object", "object.width and object.height must be >= 2")
        speckle = SpeckleConfig(**sec["speckle"])
        if speckle.correlation_length < 0:
            _fail(text, "correlation_length", "speckle.correlation_length must be >= 0")
        ratio = float(sec["noise"].get("variance_ratio", 1e-3))
        if ratio < 0:
            _fail(text, "variance_ratio", "noise.variance_ratio must be >= 0")
        tpe = TpeConfig(**sec["tpe"])
        if tpe.floor <= 0:
            _fail(text, "floor", "tpe.floor must be > 0")
        if tpe.reference_index < 0:
            _fail(text, "reference_index", "tpe.reference_index must be >= 0")
        recon = ReconOptions(**sec["recon"])
        sweep_d = dict(sec["sweep"])
        if "levels" in sweep_d:
            levels = sweep_d["levels"]
            if not levels or not all(isinstance(v, NUMBER) and not isinstance(v, bool)
                                     and v >= 0 for v in levels):
                _fail(text, "levels", "sweep.levels must be a non-empty list of numbers >= 0")
            sweep_d["levels"] = tuple(float(v) for v in levels)
        sweep = SweepConfig(**sweep_d)
        if sweep.trials < 1:
            _fail(text, "trials", "sweep.trials must be >= 1")
        paths = PathsConfig(**sec["paths"])
    except ConfigError as exc:
        if str(exc).startswith("line "):
            raise
        key = re.match(r"\w+\.(\w+)", str(exc))
        _fail(text, key.group(1) if key else "", str(exc))
    return PipelineConfig(seed=data.get("seed", 0), optical=optical, object=obj, scan=scan,
                          speckle=speckle, variance_ratio=ratio, tpe=tpe, recon=recon,
                          sweep=sweep, paths=paths)


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}: {exc.msg}") from None
    return from_dict(data, text)


def bundled_config(name="paper_sim.json"):
    """Path of a configuration file shipped with the package."""
    return resources.files("tpeifp") / "configs" / name
