"""
Tests for the command line interface
"""

import json
import os
import sys
from pathlib import Path

import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

import main as main_module  # noqa: E402
from main import expand_sidecar, main, parse_m_list  # noqa: E402
from src.services.result_writer import read_metadata, write_metadata  # noqa: E402
from src.services.trig_poly import read_coefficients  # noqa: E402
from src.utils.errors import ParameterError  # noqa: E402


@pytest.fixture(autouse=True)
def isolated_workspace(tmp_path, monkeypatch):
    """Run every command from an empty directory with its own data path and environment"""
    monkeypatch.setattr(os, 'environ', os.environ.copy())
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv('HYPX_BASE_DATA_PATH', str(tmp_path / 'data'))
    monkeypatch.setenv('LOG_LEVEL', 'WARNING')
    return tmp_path


def test_layers_prints_indices_and_count(capsys):
    assert main(['layers', '--d', '2', '--n', '3']) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 33
    assert lines[-1] == 'count = 32'
    assert all(len(line.split()) == 2 for line in lines[:-1])


def test_norm_of_constant_is_one(capsys):
    assert main(['norm', '--space', 'wiener', '--r', '1', '--theta', '1']) == 0
    out = capsys.readouterr().out
    assert 'norm = 1\n' in out
    assert 'support = 1\n' in out


def test_mterm_writes_approximant_and_sidecar(isolated_workspace, capsys):
    path = isolated_workspace / 'approx.txt'
    code = main(['mterm', '--family', 'fooling-wiener', '--n', '3', '--m', '64', '--out', str(path)])
    assert code == 0
    assert 'error = 0\n' in capsys.readouterr().out
    assert read_coefficients(path).support_size == 32
    metadata = read_metadata(isolated_workspace / 'approx.meta.ini')
    assert metadata['run']['command'] == 'mterm'
    assert metadata['params']['family'] == 'fooling-wiener'


def test_rates_csv_and_sidecar_replay(isolated_workspace):
    first = isolated_workspace / 'rates.csv'
    args = ['rates', '--task', 'sigma-lower', '--m', '2..16', '--out', str(first)]
    assert main(args) == 0
    lines = first.read_text().splitlines()
    assert lines[0].startswith('m,error,seed')
    assert len(lines) == 5

    sidecar = isolated_workspace / 'rates.meta.ini'
    metadata = read_metadata(sidecar)
    assert metadata['run']['seed'] == '0'
    assert metadata['params']['task'] == 'sigma-lower'
    assert 'a' in metadata['predicted'] and 'a' in metadata['fit']

    replay = isolated_workspace / 'replay.csv'
    assert main(['rates', '--config', str(sidecar), '--out', str(replay)]) == 0
    assert replay.read_text() == first.read_text()


def test_parameter_error_is_reported_as_json(capsys):
    assert main(['layers', '--d', '2']) == 2
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record['error'] == 'parameter'
    assert record['inequality'] == 'n given'


def test_missing_sidecar_is_an_io_error(capsys):
    assert main(['rates', '--config', 'missing.meta.ini']) == 2
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record['error'] == 'io'


def test_parse_m_list():
    assert parse_m_list('64..1000') == [64, 128, 256, 512]
    assert parse_m_list('3, 5,9') == [3, 5, 9]
    with pytest.raises(ParameterError):
        parse_m_list('5..4')
    with pytest.raises(ParameterError):
        parse_m_list('5..7')


def test_explicit_flags_win_over_sidecar(isolated_workspace):
    path = write_metadata(isolated_workspace / 'run.meta.ini',
                          {'run': {'command': 'rates'}, 'params': {'m': '4', 'jobs': 8, 'lam': 0.5}})
    argv, settings = expand_sidecar(['--config', str(path), '--m', '8'])
    assert settings == {}
    assert argv[0] == 'rates'
    assert '--jobs' not in argv
    assert argv[argv.index('--lambda') + 1] == '0.5'
    assert argv[-2:] == ['--m', '8']


def test_replay_restores_recorded_settings(isolated_workspace, monkeypatch):
    first = isolated_workspace / 'rates.csv'
    monkeypatch.setenv('HYPX_ENUM_CAP', '123456')
    assert main(['rates', '--task', 'sigma-lower', '--m', '2..16', '--out', str(first)]) == 0
    sidecar = isolated_workspace / 'rates.meta.ini'
    assert read_metadata(sidecar)['config']['enum_cap'] == '123456'

    monkeypatch.setenv('HYPX_ENUM_CAP', '999')
    argv, settings = expand_sidecar(['--config', str(sidecar)])
    assert argv[0] == 'rates'
    assert settings['HYPX_ENUM_CAP'] == '123456'
    assert settings['HYPX_OMP_TOL'] == read_metadata(sidecar)['config']['omp_tol']

    replay = isolated_workspace / 'replay.csv'
    assert main(['rates', '--config', str(sidecar), '--out', str(replay)]) == 0
    assert os.environ['HYPX_ENUM_CAP'] == '123456'
    assert replay.read_text() == first.read_text()


def test_unexpected_failure_is_reported_as_json(monkeypatch, capsys):
    def broken(config, args):
        raise RuntimeError("boom")

    monkeypatch.setitem(main_module.COMMANDS, 'layers', broken)
    assert main(['layers', '--d', '2', '--n', '3']) == 1
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record == {'error': 'internal', 'type': 'RuntimeError', 'message': 'boom'}
