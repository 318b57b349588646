import os

import pytest

from conftest import fixture_path
from tagmt.config import load_experiment_config
from tagmt.errors import ConfigError


def test_load_toy_config():
    config = load_experiment_config(fixture_path("toy.cfg"))
    assert config.seed == 13
    assert config.task_label == "toy-disambiguation"
    assert config.tagging_backend == "file"
    assert config.top_k == 10
    assert config.translator.model_dim == 32
    assert config.translator.seed == 13
    assert config.synthesizer.seed == 13
    assert config.decode_method == "greedy"
    for key, path in config.paths.items():
        assert os.path.isabs(path), key
    config.validate()


def test_seed_override_propagates():
    config = load_experiment_config(fixture_path("toy.cfg"))
    config.with_seed(99)
    assert config.seed == 99
    assert config.translator.seed == 99
    assert config.synthesizer.seed == 99


def write_cfg(tmp_path, body):
    path = tmp_path / "exp.cfg"
    path.write_text(body, encoding="utf-8")
    return path


def test_unknown_section_rejected(tmp_path):
    path = write_cfg(tmp_path, "[mystery]\nx = 1\n")
    with pytest.raises(ConfigError):
        load_experiment_config(path)


def test_unknown_key_rejected(tmp_path):
    path = write_cfg(tmp_path, "[tagging]\nbackends = stub\n")
    with pytest.raises(ConfigError):
        load_experiment_config(path)


def test_model_section_seed_rejected(tmp_path):
    path = write_cfg(tmp_path, "[translator]\nseed = 5\n")
    with pytest.raises(ConfigError):
        load_experiment_config(path)


def test_bad_value_type_rejected(tmp_path):
    path = write_cfg(tmp_path, "[translator]\nlayers = two\n")
    with pytest.raises(ConfigError):
        load_experiment_config(path)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_experiment_config("/nonexistent/exp.cfg")


def test_validate_checks_paths(tmp_path):
    path = write_cfg(tmp_path, "[paths]\ntrain_corpus = missing.tsv\n")
    config = load_experiment_config(path)
    with pytest.raises(ConfigError):
        config.validate()


def test_file_backend_needs_detections(tmp_path):
    path = write_cfg(tmp_path, "[tagging]\nbackend = file\n")
    config = load_experiment_config(path)
    with pytest.raises(ConfigError):
        config.validate()


def test_relative_paths_resolve_against_config_dir(tmp_path):
    (tmp_path / "data").mkdir()
    (tmp_path / "data" / "x.tsv").write_text("", encoding="utf-8")
    path = write_cfg(tmp_path, "[paths]\ntrain_corpus = data/x.tsv\n")
    config = load_experiment_config(path)
    assert config.paths["train_corpus"] == str(tmp_path / "data" / "x.tsv")
