import json

import pytest

from tpeifp.config import PipelineConfig, bundled_config, from_dict, load_config
from tpeifp.errors import ConfigError


def test_bundled_config_defaults():
    cfg = load_config(bundled_config())
    o = cfg.optical
    assert (o.aperture_diameter, o.focal_length, o.wavelength, o.pixel_pitch) == (
        10.0, 300.0, 632.0, 3.45)
    assert (cfg.scan.n_per_side, cfg.scan.step) == (9, 10)
    assert cfg.variance_ratio == 0.001
    assert cfg.recon.max_iterations == 50
    assert cfg.recon.convergence_tolerance == 1e-4


def test_empty_object_gives_defaults(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{}")
    assert load_config(p) == PipelineConfig()
    assert load_config(p) == load_config(bundled_config())


def test_negative_wavelength_rejected(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{\n  "optical": {\n    "wavelength": -632\n  }\n}\n')
    with pytest.raises(ConfigError, match="line 3: optical.wavelength"):
        load_config(p)


def test_unknown_key_rejected_with_line(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{\n  "scan": {"n_per_side": 9},\n  "noise": {"varaince_ratio": 0.1}\n}')
    with pytest.raises(ConfigError, match="line 3: unknown key noise.'varaince_ratio'"):
        load_config(p)


def test_parse_error_has_line(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{\n  "seed": 1,\n  oops\n}')
    with pytest.raises(ConfigError, match="line 3"):
        load_config(p)


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json")


@pytest.mark.parametrize("data", [
    {"seed": "zero"},
    {"scan": {"n_per_side": 0}},
    {"scan": {"step": True}},
    {"noise": {"variance_ratio": -0.1}},
    {"tpe": {"floor": 0}},
    {"recon": {"frame_order": "shuffled"}},
    {"recon": {"max_iterations": 0}},
    {"sweep": {"levels": []}},
    {"sweep": {"levels": [0.1, "x"]}},
    {"speckle": {"correlation_length": -1}},
    {"optical": 3},
    [],
])
def test_invariant_violations(data):
    with pytest.raises(ConfigError):
        from_dict(data, json.dumps(data, indent=2))


def test_speckle_seed_falls_back_to_seed():
    assert from_dict({"seed": 4}).speckle_seed == 4
    assert from_dict({"seed": 4, "speckle": {"seed": 9}}).speckle_seed == 9
