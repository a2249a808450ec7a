import json

import pytest

import config


def _params(**overrides):
    params = config.get_default_params()
    params.update(overrides)
    return params


def test_defaults_are_valid():
    assert config.validate_params(config.get_default_params())


def test_load_config_overlays_defaults(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"alpha": 0.5, "N_GRID": [1024, 2048]}))
    params = config.load_config(str(path))
    assert params["ALPHA"] == 0.5
    assert params["N_GRID"] == [1024, 2048]
    assert params["D"] == config.DEFAULT_D


def test_load_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"epsilon": 1.0}))
    with pytest.raises(ValueError):
        config.load_config(str(path))


def test_smoothness_of():
    assert config.smoothness_of(_params(D=2, BETA=1.0), "BETA") == (1.0, 1.0)
    assert config.smoothness_of(_params(D=2, BETA=[1.0, 2.0]), "BETA") == (1.0, 2.0)
    with pytest.raises(ValueError):
        config.smoothness_of(_params(D=2, BETA=[1.0, 2.0, 3.0]), "BETA")


@pytest.mark.parametrize("overrides", [
    {"RADIUS": 1.0},
    {"ALPHA": 0.0},
    {"ALPHA": 2.0},
    {"MECHANISM": "laplace"},
    {"SELECTOR": "adaptive", "MECHANISM": "global"},
    {"SELECTOR": "adaptive", "A": 0.5, "ALPHA": 0.5},
    {"TRUTH": {"kind": "spline"}},
    {"BETA": 1.5},
    {"REPLICATIONS": 0},
    {"N_GRID": [1]},
    {"WORKERS": 0},
])
def test_invalid_parameters(overrides):
    with pytest.raises(ValueError):
        config.validate_params(_params(**overrides))


def test_non_integer_beta_is_fine_for_coefficient_truths():
    config.validate_params(_params(BETA=1.5, TRUTH={"kind": "coefficients"}))


def test_truth_table_must_cover_the_largest_J():
    with pytest.raises(ValueError, match="below the largest fixed J"):
        config.validate_params(_params(TRUTH_J_MAX=3))


def test_truth_table_tail_must_be_small():
    with pytest.raises(ValueError, match="leaves a tail"):
        config.validate_params(_params(TRUTH_J_MAX=15))


def test_adaptive_selector_needs_isotropic_delta():
    params = _params(SELECTOR="adaptive", D=2, BETA=[1.0, 2.0], DELTA=[0.5, 1.0], RADIUS=2.0,
                     TRUTH={"kind": "coefficients"})
    with pytest.raises(ValueError, match="isotropic"):
        config.validate_params(params)
