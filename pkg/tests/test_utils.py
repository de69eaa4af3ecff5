"""
Tests for the error records, the logging setup and the worker pool helpers
"""

import logging
import sys
from pathlib import Path

import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.utils.errors import CapExceededError, ParameterError, SolverError, require  # noqa: E402
from src.utils.logger import setup_logging  # noqa: E402
from src.utils.parallel import derive_seed, run_parallel  # noqa: E402


def _square(x):
    return x * x


def test_require_names_the_inequality():
    require(True, "never raised")
    with pytest.raises(ParameterError) as info:
        require(False, "0 < theta", theta=-1.0)
    assert info.value.to_record() == {'error': 'parameter',
                                      'message': 'parameter precondition violated: 0 < theta',
                                      'inequality': '0 < theta', 'theta': -1.0}


def test_error_records_skip_missing_details():
    record = SolverError("diverged", objective_gap=0.5).to_record()
    assert record == {'error': 'solver', 'message': 'diverged', 'objective_gap': 0.5}
    cap = CapExceededError("too many", predicted=11264, cap=100)
    assert cap.to_record()['predicted'] == 11264


def test_run_parallel_preserves_order():
    tasks = list(range(10))
    assert run_parallel(_square, tasks, jobs=1) == [t * t for t in tasks]
    assert run_parallel(_square, tasks, jobs=2) == [t * t for t in tasks]
    assert run_parallel(_square, [], jobs=4) == []


def test_derive_seed():
    assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2)
    assert derive_seed(0, 1, 2) != derive_seed(0, 2, 1)
    assert 0 <= derive_seed(5) < 2 ** 32


def test_setup_logging_reconfigures_on_every_call():
    setup_logging(level='debug')
    assert logging.getLogger().level == logging.DEBUG
    setup_logging(level='ERROR')
    assert logging.getLogger().level == logging.ERROR
    setup_logging()
    assert logging.getLogger().level == logging.WARNING
