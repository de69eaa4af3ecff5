"""
Tests for environment based configuration
"""

import sys
from pathlib import Path

import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from config import Config  # noqa: E402


@pytest.fixture
def config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv('HYPX_BASE_DATA_PATH', str(tmp_path / 'data'))
    for key in ('HYPX_ENUM_CAP', 'HYPX_JOBS', 'HYPX_OMP_TOL', 'LOG_FORMAT', 'HYPX_OUTPUT_PATH',
                'HYPX_RECORD_WALL_TIME', 'HYPX_MAUREY_TRIALS'):
        monkeypatch.delenv(key, raising=False)
    return Config()


def test_defaults(config, tmp_path):
    assert config.ENUM_CAP == 5_000_000
    assert config.JOBS == 1
    assert config.OMP_TOL == 1e-10
    assert config.MAUREY_TRIALS == 10
    assert config.RECORD_WALL_TIME is False
    assert config.OUTPUT_PATH == str(tmp_path / 'data' / 'results')


def test_environment_overrides(config, monkeypatch):
    monkeypatch.setenv('HYPX_ENUM_CAP', '1000')
    monkeypatch.setenv('HYPX_JOBS', '0')
    monkeypatch.setenv('HYPX_RECORD_WALL_TIME', 'yes')
    assert config.ENUM_CAP == 1000
    assert config.JOBS == 1
    assert config.RECORD_WALL_TIME is True


def test_exported_variables_win_over_env_file(tmp_path, monkeypatch):
    env_file = tmp_path / 'settings.env'
    env_file.write_text("HYPX_MAUREY_TRIALS=7\n")
    monkeypatch.setenv('HYPX_MAUREY_TRIALS', '3')
    assert Config(str(env_file)).MAUREY_TRIALS == 3


def test_validate_config_accepts_defaults(config, tmp_path):
    assert config.validate_config()
    assert (tmp_path / 'data' / 'results').is_dir()


@pytest.mark.parametrize("key,value", [
    ('HYPX_ENUM_CAP', '0'),
    ('HYPX_OMP_TOL', '-1'),
    ('HYPX_MAUREY_TRIALS', 'many'),
    ('LOG_FORMAT', 'xml'),
])
def test_validate_config_rejects_bad_values(config, monkeypatch, key, value):
    monkeypatch.setenv(key, value)
    assert not config.validate_config()


def test_config_summary(config):
    summary = config.get_config_summary()
    assert summary['enum_cap'] == 5_000_000
    assert summary['log_format'] == 'console'
    assert set(summary) >= {'omp_tol', 'lasso_iters', 'output_path', 'record_wall_time'}
