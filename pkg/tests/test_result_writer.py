"""
Tests for CSV tables, metadata sidecars and text records
"""

import math
import sys
from pathlib import Path

import pandas as pd

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.services.result_writer import (format_record, format_value,  # noqa: E402
                                        frame_to_csv_text, read_metadata, sidecar_path,
                                        write_frame, write_metadata)


def test_format_value():
    assert format_value(0.1) == '0.10000000000000001'
    assert format_value(2.0) == '2'
    assert format_value(math.inf) == 'inf'
    assert format_value(-math.inf) == '-inf'
    assert format_value(math.nan) == 'nan'
    assert format_value([1, 0.5]) == '1,0.5'
    assert format_value('omp') == 'omp'


def test_format_record():
    assert format_record({'norm': 1.0, 'support': 3}) == "norm = 1\nsupport = 3\n"


def test_csv_keeps_seventeen_digits(tmp_path):
    frame = pd.DataFrame({'m': [2, 4], 'error': [1.0 / 3.0, 0.25], 'seed': [0, 0]})
    text = frame_to_csv_text(frame)
    assert text.splitlines() == ['m,error,seed', '2,0.33333333333333331,0', '4,0.25,0']
    path = write_frame(frame, tmp_path / 'nested' / 'table.csv')
    assert path.read_text() == text
    assert pd.read_csv(path, float_precision='round_trip')['error'][0] == 1.0 / 3.0


def test_sidecar_path():
    assert sidecar_path('out/rates.csv') == Path('out/rates.meta.ini')


def test_metadata_preserves_key_case_and_drops_none(tmp_path):
    path = write_metadata(tmp_path / 'run.meta.ini',
                          {'run': {'command': 'recover'}, 'params': {'M': 8, 'lam': None, 'q': math.inf}})
    metadata = read_metadata(path)
    assert metadata == {'run': {'command': 'recover'}, 'params': {'M': '8', 'q': 'inf'}}
