"""Config validation, presets, and the flat file format."""

import numpy as np
import pytest

from vrin.config import (ConfigError, TrainConfig, classification_preset,
                         config_to_text, imputation_preset, parse_config_file,
                         read_config_values)


class TestValidation:
    def test_defaults_are_valid(self):
        TrainConfig().validate()

    def test_paper_regime_values(self):
        cfg = TrainConfig()
        assert cfg.epochs == 100
        assert cfg.batch_size == 64
        assert cfg.l1_weight == 1e-5
        assert cfg.weight_decay == 1e-5
        assert cfg.xi == 0.1

    @pytest.mark.parametrize("field,value", [
        ("alpha", 0.05), ("alpha", 1.5), ("beta", 0.0), ("xi", -1.0),
        ("learning_rate", 0.0), ("epochs", 0), ("batch_size", 0),
        ("dropout_rate", 1.0), ("direction", "both"), ("variant", "gru"),
        ("precision", "float16"), ("batch_norm", True), ("window_hours", 0.0),
    ])
    def test_bad_values_rejected(self, field, value):
        cfg = TrainConfig(**{field: value})
        with pytest.raises(ConfigError, match=field):
            cfg.validate()

    def test_dtype_mapping(self):
        assert TrainConfig().dtype is np.float64
        assert TrainConfig(precision="float32").dtype is np.float32


class TestPresets:
    def test_classification_regime(self):
        cfg = classification_preset()
        assert cfg.learning_rate == 0.005
        assert cfg.dropout_rate == 0.1

    def test_imputation_regime(self):
        cfg = imputation_preset()
        assert cfg.learning_rate == 0.0005
        assert cfg.dropout_rate == 0.3

    def test_overrides(self):
        cfg = imputation_preset(n_features=8, direction="bi")
        assert cfg.n_features == 8 and cfg.direction == "bi"


class TestConfigFile:
    def test_round_trip(self, tmp_path):
        cfg = TrainConfig(alpha=0.75, beta=0.25, encoder_sizes=(16, 8),
                          direction="bi", likelihood_observed_only=False)
        path = tmp_path / "run.cfg"
        path.write_text(config_to_text(cfg), encoding="utf-8")
        assert parse_config_file(path) == cfg

    def test_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment\n\nalpha = 0.5\n", encoding="utf-8")
        assert read_config_values(path) == {"alpha": 0.5}

    def test_unknown_keys_listed(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("alpha = 0.5\nbogus = 1\nzz = 2\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="bogus, zz"):
            read_config_values(path)

    def test_bad_value_reports_line(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("epochs = ten\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="line 1"):
            read_config_values(path)

    def test_invalid_resulting_config_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("alpha = 7.0\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="alpha"):
            parse_config_file(path)

    def test_encoder_sizes_syntax(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("encoder_sizes = 32,16\n", encoding="utf-8")
        assert parse_config_file(path).encoder_sizes == (32, 16)


class TestDictRoundTrip:
    def test_to_from_dict(self):
        cfg = TrainConfig(direction="bi", encoder_sizes=(12, 6), seed=9)
        assert TrainConfig.from_dict(cfg.to_dict()) == cfg

    def test_unknown_dict_keys_rejected(self):
        with pytest.raises(ConfigError, match="mystery"):
            TrainConfig.from_dict({"mystery": 1})
