"""
Tests for function space parameters and norms
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.services.function_spaces import (Besov, Lebesgue, SobolevW, WienerPlain,  # noqa: E402
                                          WienerWeighted, block_lp_norms, norm, space_from_name,
                                          square_function)
from src.services.trig_poly import (GridSpec, SparseTrigPoly, default_grid, lebesgue_norm,  # noqa: E402
                                    random_sparse_poly)
from src.utils.errors import GridError, ParameterError  # noqa: E402

ONE = SparseTrigPoly.constant(2)


@pytest.mark.parametrize("space", [
    WienerWeighted(1.0, 1.0),
    WienerWeighted(0.5, 2.0),
    WienerPlain(1.5),
    Besov(1.0, 2.0, 1.0),
    Besov(0.5, 4.0, 2.0),
    SobolevW(1.0, 2.0),
    SobolevW(0.0, 3.0),
    Lebesgue(2.0),
    Lebesgue(math.inf),
])
def test_constant_function_has_unit_norm(space):
    assert norm(ONE, space) == pytest.approx(1.0)


def test_empty_polynomial_has_zero_norm():
    empty = SparseTrigPoly(2)
    for space in (WienerWeighted(1.0, 1.0), Besov(1.0, 2.0, 1.0), SobolevW(1.0, 2.0), Lebesgue(3.0)):
        assert norm(empty, space) == 0.0


def test_weighted_wiener_norm():
    f = SparseTrigPoly.from_dict(2, {(1, 1): 2.0, (0, 3): 1.0})
    # both frequencies have weight 4
    assert norm(f, WienerWeighted(1.0, 1.0)) == pytest.approx(12.0)
    assert norm(f, WienerWeighted(0.0, 2.0)) == pytest.approx(math.sqrt(5.0))
    assert norm(f, WienerPlain(2.0)) == pytest.approx(math.sqrt(5.0))


def test_besov_norm_single_block():
    f = SparseTrigPoly.from_dict(2, {(1, 1): 3.0, (-1, 1): 4.0})
    assert norm(f, Besov(1.0, 2.0, 1.0)) == pytest.approx(20.0)
    assert norm(f, Besov(1.0, 2.0, 0.5)) == pytest.approx(20.0)


def test_besov_monomial_for_any_p():
    f = SparseTrigPoly.monomial((5, -2))
    # block (3, 2), every L_p norm of a monomial is 1
    for p in (1.5, 2.0, 4.0):
        assert norm(f, Besov(1.0, p, 2.0)) == pytest.approx(2.0 ** 5)


def test_besov_norm_uses_an_explicit_grid():
    f = SparseTrigPoly.from_dict(1, {(-1,): 1.0, (1,): 1.0})
    space = Besov(1.0, 2.0, 1.0)
    assert norm(f, space) == pytest.approx(2.0 * math.sqrt(2.0))
    assert norm(f, space, grid=GridSpec((8,))) == pytest.approx(2.0 * math.sqrt(2.0))
    with pytest.raises(GridError):
        norm(f, space, grid=GridSpec((2,)))


def test_block_lp_norms_groups_blocks():
    f = SparseTrigPoly.from_dict(1, {(1,): 1.0, (-1,): 1.0, (2,): 2.0, (7,): 1.0})
    labels, norms = block_lp_norms(f, 2.0)
    assert labels.ravel().tolist() == [1, 2, 3]
    assert norms.tolist() == pytest.approx([math.sqrt(2.0), 2.0, 1.0])


def test_sobolev_two_equals_besov_two_two():
    rng = np.random.default_rng(0)
    f = random_sparse_poly(2, 20, 9, rng)
    assert norm(f, SobolevW(1.0, 2.0)) == pytest.approx(norm(f, Besov(1.0, 2.0, 2.0)), rel=1e-10)


def test_sobolev_zero_smoothness_is_lebesgue():
    rng = np.random.default_rng(1)
    f = random_sparse_poly(2, 10, 6, rng)
    assert norm(f, SobolevW(0.0, 3.0)) == pytest.approx(lebesgue_norm(f, 3.0))


def test_square_function_of_monomial():
    f = SparseTrigPoly.monomial((3, 0), 2.0)
    grid = default_grid(f, 2.0)
    values = square_function(f, 1.0, grid)
    assert np.allclose(values, 2.0 * 4.0)


def test_space_from_name():
    assert space_from_name('wiener', r=1.0, theta=2.0) == WienerWeighted(1.0, 2.0)
    assert space_from_name('besov', r=0.5, p=3.0, theta=1.0) == Besov(0.5, 3.0, 1.0)
    assert space_from_name('lebesgue', q=4.0) == Lebesgue(4.0)
    with pytest.raises(ParameterError):
        space_from_name('hardy')


def test_parameter_ranges_rejected():
    with pytest.raises(ParameterError):
        WienerWeighted(-1.0, 1.0)
    with pytest.raises(ParameterError):
        Besov(1.0, math.inf, 1.0)
    with pytest.raises(ParameterError):
        Besov(1.0, 1.0, 1.0)
    with pytest.raises(ParameterError):
        SobolevW(1.0, 1.0)
    with pytest.raises(ParameterError):
        Lebesgue(0.5)


def test_describe():
    assert WienerWeighted(1.0, 1.0).describe() == "WienerWeighted(r=1, theta=1)"
    assert Besov(0.5, 2.0, math.inf).describe() == "Besov(r=0.5, p=2, theta=inf)"
