import json
from pathlib import Path

import pytest

from efklab.config import ConfigError, config_hash, from_dict, history_vector, load

CONFIGS = sorted((Path(__file__).resolve().parents[1] / "configs").glob("*.json"))

BASE = {"gamma": 1.0, "omega": 1.0, "delays": [0.01], "betas": [10.0], "nonlinearity": "tanh_scaled(10, 1)",
        "forcing": [{"c": 1.0, "fn": "cos", "m": 1, "j": 1}]}


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.stem)
def test_shipped_configs_load(path):
    cfg = load(path)
    assert cfg.sha256 == config_hash(json.loads(path.read_text()))


def test_defaults():
    cfg = from_dict(BASE)
    assert cfg.problem.discretization.N == 64 and cfg.problem.discretization.M == 128
    assert cfg.seed == 0 and not cfg.certificate and cfg.history == {"type": "zero"}
    assert cfg.problem.nonlinearity.lipschitz_betas == (10.0,)
    assert cfg.meta("check") == {"command": "check", "config_sha256": cfg.sha256, "seed": 0}


def test_hash_ignores_key_order():
    a = dict(BASE)
    b = dict(reversed(list(BASE.items())))
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash({**a, "seed": 1})


@pytest.mark.parametrize("patch,where", [
    ({"gamma": -1}, "gamma"),
    ({"delays": []}, "delays"),
    ({"bogus": 1}, "<root>"),
    ({"forcing": [{"c": 1.0}]}, "forcing/0"),
    ({"discretization": {"N": 0}}, "discretization/N"),
    ({"experiment": {"history": {"type": "modes", "coeffs": {"x": 1}}}}, "experiment/history/coeffs"),
])
def test_schema_errors_name_the_field(patch, where):
    with pytest.raises(ConfigError) as err:
        from_dict({**BASE, **patch})
    assert where in str(err.value)


@pytest.mark.parametrize("patch", [
    {"nonlinearity": "tanh_scaled(10, 2)"},
    {"betas": [1.0, 2.0]},
    {"forcing": [{"c": 1.0, "m": 1, "j": 1}], "omega": None},
    {"discretization": {"N": 8, "M": 4}},
    {"experiment": {"history": {"type": "modes", "coeffs": {"99": 1.0}}}},
    {"experiment": {"fit_window": [0.2, 0.1]}},
])
def test_semantic_errors(patch):
    with pytest.raises(ConfigError):
        from_dict({**BASE, **patch})


def test_json_syntax_error_has_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "gamma": 1.0,\n  "delays": [0.01,]\n}\n')
    with pytest.raises(ConfigError) as err:
        load(path)
    assert "line 3" in str(err.value)


def test_history_vectors():
    cfg = from_dict({**BASE, "discretization": {"N": 4},
                     "experiment": {"history": {"type": "periodic_plus", "perturbation": {"2": 0.5}}}})
    assert list(history_vector(cfg, "perturbation")) == [0.0, 0.5, 0.0, 0.0]
    assert list(history_vector(cfg, "coeffs")) == [0.0] * 4
