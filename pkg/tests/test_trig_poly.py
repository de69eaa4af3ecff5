"""
Tests for sparse trigonometric polynomials, grids and the de la Vallee Poussin operator
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.services.trig_poly import (GridSpec, SparseTrigPoly, best_trig_error_surrogate,  # noqa: E402
                                    check_grid, default_grid, evaluate, evaluate_grid,
                                    grid_lq_norm, lebesgue_norm, lp_norm, next_power_of_two,
                                    parse_coefficients, random_sparse_poly, read_coefficients,
                                    vallee_poussin, vallee_poussin_multiplier, vallee_poussin_sign_poly,
                                    write_coefficients)
from src.utils.errors import GridError, ParameterError  # noqa: E402


def test_canonical_form_merges_duplicates_and_drops_zeros():
    f = SparseTrigPoly(2, [[1, 0], [0, 0], [1, 0], [2, 2]], [1.0, 2.0, -1.0, 3j])
    assert f.support_size == 2
    assert f.frequencies.tolist() == [[0, 0], [2, 2]]
    assert f.coefficient((2, 2)) == 3j
    assert f.coefficient((1, 0)) == 0j


def test_instances_are_immutable():
    f = SparseTrigPoly.monomial((1, -1), 2.0)
    with pytest.raises(ValueError):
        f.coefficients[0] = 5.0


def test_arithmetic():
    f = SparseTrigPoly.from_dict(2, {(0, 0): 1.0, (1, 2): 2.0})
    g = SparseTrigPoly.from_dict(2, {(1, 2): 2.0, (-3, 0): 1j})
    assert (f - g).as_dict() == {(-3, 0): -1j, (0, 0): 1 + 0j}
    assert (f + g).coefficient((1, 2)) == 4.0
    assert f.scale(0.5).coefficient((1, 2)) == 1.0
    assert (f - f).support_size == 0
    with pytest.raises(ParameterError):
        f + SparseTrigPoly.constant(3)


def test_truncate_and_max_frequency():
    f = SparseTrigPoly.from_dict(2, {(0, 5): 1.0, (2, -1): 1.0, (-7, 0): 1.0})
    assert f.max_frequency().tolist() == [7, 5]
    assert f.truncate_to_cube(2).as_dict() == {(2, -1): 1 + 0j}
    assert SparseTrigPoly(3).max_frequency().tolist() == [0, 0, 0]


def test_lp_norm():
    x = np.array([3.0, -4.0])
    assert lp_norm(x, 2) == pytest.approx(5.0)
    assert lp_norm(x, 1) == pytest.approx(7.0)
    assert lp_norm(x, math.inf) == 4.0
    assert lp_norm(np.array([1.0, 1.0]), 0.5) == pytest.approx(4.0)
    assert lp_norm(np.zeros(0), 2) == 0.0


def test_evaluate_single_point_and_batch():
    f = SparseTrigPoly.from_dict(2, {(1, 0): 1.0, (0, -2): 2.0})
    x = np.array([0.25, 0.125])
    expected = np.exp(2j * np.pi * 0.25) + 2.0 * np.exp(-4j * np.pi * 0.125)
    assert evaluate(f, x) == pytest.approx(expected)
    batch = evaluate(f, np.array([x, [0.0, 0.0]]))
    assert batch[1] == pytest.approx(3.0)


def test_evaluate_scalar_point_in_one_dimension():
    f = SparseTrigPoly.from_dict(1, {(1,): 1.0, (-1,): 1.0})
    value = evaluate(f, 0.25)
    assert isinstance(value, complex)
    assert value == pytest.approx(0.0, abs=1e-12)
    assert evaluate(f, [0.0]) == pytest.approx(2.0)
    batch = evaluate(f, [0.0, 0.5])
    assert batch.shape == (2,)
    assert batch[1] == pytest.approx(-2.0)


def test_grid_evaluation_matches_direct_evaluation():
    rng = np.random.default_rng(1)
    f = random_sparse_poly(2, 15, 6, rng)
    grid = default_grid(f, q=4.0)
    on_grid = evaluate_grid(f, grid).ravel()
    direct = evaluate(f, grid.points())
    assert np.allclose(on_grid, direct, atol=1e-10)


def test_default_grid_sizes():
    assert next_power_of_two(13) == 16
    assert next_power_of_two(1) == 1
    grid = default_grid([3, 0], q=2.0)
    assert grid.sizes == (8, 1)
    assert default_grid([3, 0], q=math.inf, oversampling=8.0).sizes == (64, 8)


def test_grid_cap_and_size_checks():
    with pytest.raises(GridError):
        default_grid([1000, 1000], q=math.inf, oversampling=8.0, point_cap=10 ** 6)
    f = SparseTrigPoly.monomial((5,))
    with pytest.raises(GridError):
        check_grid(f, GridSpec((8,)))


def test_l2_norm_is_coefficient_norm():
    rng = np.random.default_rng(2)
    f = random_sparse_poly(2, 10, 5, rng)
    exact = lebesgue_norm(f, 2.0)
    assert exact == pytest.approx(f.coefficient_norm(2.0))
    quadrature = lebesgue_norm(f, 2.0, exact_l2=False)
    assert quadrature == pytest.approx(exact, rel=1e-10)


def test_lebesgue_norms_of_monomial_are_one():
    f = SparseTrigPoly.monomial((3, -2), 1.0)
    for q in (1.0, 3.0, math.inf):
        assert lebesgue_norm(f, q) == pytest.approx(1.0)


def test_linf_norm_of_constant_and_grid_quadrature():
    f = SparseTrigPoly.from_dict(1, {(0,): 1.0, (1,): 1.0})
    # |1 + e(x)| peaks at 2 for x = 0, which lies on every grid
    assert lebesgue_norm(f, math.inf) == pytest.approx(2.0)
    assert grid_lq_norm(np.array([1.0, 1.0]), 3.0) == pytest.approx(1.0)


def test_vallee_poussin_multiplier_profile():
    freqs = np.array([[0], [2], [3], [5], [7], [9]])
    # d = 1, M = 2: flat to 2, linear to 0 at 6
    assert vallee_poussin_multiplier(freqs, 2).tolist() == pytest.approx([1, 1, 0.75, 0.25, 0, 0])


def test_vallee_poussin_reproduces_cube_polynomials():
    rng = np.random.default_rng(3)
    for _ in range(20):
        f = random_sparse_poly(2, 12, 4, rng)
        g = vallee_poussin(f, 4)
        assert np.allclose(g.coefficients, f.coefficients, atol=1e-12)
    wide = random_sparse_poly(2, 40, 30, rng)
    assert np.all(np.abs(vallee_poussin(wide, 4).frequencies) <= 5 * 4)


def test_vallee_poussin_linf_bound_on_random_polynomials():
    rng = np.random.default_rng(4)
    for _ in range(20):
        f = random_sparse_poly(2, 25, 20, rng)
        grid = default_grid(f, math.inf)
        ratio = (grid_lq_norm(evaluate_grid(vallee_poussin(f, 4), grid), math.inf)
                 / grid_lq_norm(evaluate_grid(f, grid), math.inf))
        assert ratio <= math.e


@pytest.mark.parametrize("d, M", [(1, 2), (2, 2)])
def test_vallee_poussin_sign_poly_stresses_linf_bound(d, M):
    f = vallee_poussin_sign_poly(d, M)
    assert np.all(np.abs(f.frequencies) <= (2 * d + 1) * M)
    smoothed = vallee_poussin(f, M)
    # V_M f(0) is the discrete L_1 norm of the kernel, never below its mean 1
    assert evaluate(smoothed, np.zeros(d)).real >= 1.0 - 1e-9
    grid = default_grid(f, math.inf)
    ratio = (grid_lq_norm(evaluate_grid(smoothed, grid), math.inf)
             / grid_lq_norm(evaluate_grid(f, grid), math.inf))
    assert ratio <= math.e


def test_best_trig_error_surrogate():
    f = SparseTrigPoly.from_dict(2, {(0, 0): 1.0, (3, 0): -2.0, (0, 5): 1j})
    assert best_trig_error_surrogate(f, 2) == pytest.approx(3.0)
    assert best_trig_error_surrogate(f, 5) == 0.0


def test_coefficient_file_round_trip(tmp_path):
    f = SparseTrigPoly.from_dict(2, {(0, 0): 0.1 + 0.2j, (-3, 4): 1.0 / 3.0})
    path = write_coefficients(f, tmp_path / "f.txt")
    assert path.read_text().splitlines()[0] == "d=2"
    assert read_coefficients(path) == f


def test_coefficient_file_errors():
    with pytest.raises(ParameterError):
        parse_coefficients("0 0 1 0\n")
    with pytest.raises(ParameterError):
        parse_coefficients("d=2\n0 1 0\n")
