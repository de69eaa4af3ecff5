"""
Result persistence for the hypcross toolkit
CSV rate tables (pandas, 17 significant digits), key = value metadata
sidecars with [sections], and structured text records
"""

import configparser
import io
import math
from pathlib import Path
from typing import Any, Dict, Mapping

import pandas as pd

from src.utils.logger import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = '%.17g'


def format_value(value: Any) -> str:
    if isinstance(value, float):
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        if math.isnan(value):
            return 'nan'
        return format(value, '.17g')
    if isinstance(value, (list, tuple)):
        return ','.join(format_value(v) for v in value)
    return str(value)


def format_record(record: Mapping[str, Any]) -> str:
    """Structured text record: one `key = value` line per field"""
    return ''.join(f"{key} = {format_value(value)}\n" for key, value in record.items())


def write_frame(frame: pd.DataFrame, path) -> Path:
    """Write a DataFrame as CSV with round-trip float precision"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.info("table_written", path=str(path), rows=len(frame))
    return path


def frame_to_csv_text(frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return buffer.getvalue()


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + '.meta.ini')


def write_metadata(path, sections: Mapping[str, Mapping[str, Any]]) -> Path:
    """
    Write a metadata sidecar.

    Args:
        path: Destination file
        sections: section name -> {key: value}

    Returns:
        The written path
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for section, values in sections.items():
        parser[section] = {key: format_value(value) for key, value in values.items()
                           if value is not None}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        parser.write(handle)
    logger.debug("metadata_written", path=str(path))
    return path


def read_metadata(path) -> Dict[str, Dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    with open(path, 'r', encoding='utf-8') as handle:
        parser.read_file(handle)
    return {section: dict(parser[section]) for section in parser.sections()}
