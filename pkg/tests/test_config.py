from pathlib import Path

import pytest

from qiterative import config
from qiterative.errors import ConfigError


def test_parse_overrides_defaults():
    cfg = config.parse_config_text(
        """
        # shock run
        mu = 0.05
        N = 64   # grid
        scheme = gauss-seidel
        plots = yes
        system = data/A.mtx
        """
    )
    assert cfg.mu == 0.05
    assert cfg.N == 64
    assert cfg.scheme == "gauss-seidel"
    assert cfg.plots is True
    assert cfg.system == Path("data/A.mtx")
    assert cfg.K == 30


def test_parse_rejects_unknown_key_and_bad_values():
    with pytest.raises(ConfigError, match="unknown key"):
        config.parse_config_text("colour = red")
    with pytest.raises(ConfigError, match="Invalid value for k"):
        config.parse_config_text("k = ten")
    with pytest.raises(ConfigError, match="expected 'key = value'"):
        config.parse_config_text("just words")
    with pytest.raises(ConfigError):
        config.parse_config_text("force = maybe")


def test_validate_rejects_out_of_range():
    with pytest.raises(ConfigError):
        config.ExperimentConfig(scheme="sor").validate()
    with pytest.raises(ConfigError):
        config.ExperimentConfig(backend="analog").validate()
    with pytest.raises(ConfigError):
        config.ExperimentConfig(k=-1).validate()
    with pytest.raises(ConfigError):
        config.ExperimentConfig(threshold=2.0).validate()
    with pytest.raises(ConfigError):
        config.ExperimentConfig(L_values="5,x").validate()
    with pytest.raises(ConfigError, match="kappa_min"):
        config.ExperimentConfig(kappa_min=0.5).validate()
    with pytest.raises(ConfigError):
        config.ExperimentConfig(kappa_min=10.0, kappa_max=5.0).validate()
    with pytest.raises(ConfigError, match="kappa_target"):
        config.ExperimentConfig(kappa_target=1.0).validate()
    config.ExperimentConfig(kappa_min=1.0).validate()


def test_l_values():
    assert config.ExperimentConfig(L_values="5, 10,15").l_values() == [5, 10, 15]


def test_load_config_layers_on_base(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("k = 4\n", encoding="utf-8")
    base = config.ExperimentConfig(L=2)
    cfg = config.load_config(path, base)
    assert cfg.k == 4
    assert cfg.L == 2
    with pytest.raises(ConfigError):
        config.load_config(tmp_path / "missing.cfg")


def test_checked_in_configs_are_valid():
    paths = sorted(config.DEFAULT_CONFIG_DIR.glob("*.cfg"))
    assert paths
    for path in paths:
        config.load_config(path).validate()
