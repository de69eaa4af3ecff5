"""
Tests for greedy, empirical-mean and layered m-term approximation and the fooling functions
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.services.function_spaces import (Besov, Lebesgue, WienerPlain,  # noqa: E402
                                          WienerWeighted, norm)
from src.services.mterm_approximation import (a2a_lower_bound, approximation_error,  # noqa: E402
                                              fooling_a2a, fooling_besov, fooling_layer_for,
                                              fooling_wiener, greedy_mterm, layer_budget,
                                              layer_cutoff, layered_mterm, layered_witness,
                                              maurey_mterm, multiplicativity_chain,
                                              sequence_tail, smoothness_margin_ok, stechkin_bound)
from src.services.trig_poly import SparseTrigPoly, random_sparse_poly  # noqa: E402
from src.utils.errors import ParameterError  # noqa: E402


def test_sequence_tail_and_stechkin():
    x = np.array([3.0, -4.0, 1.0])
    assert sequence_tail(x, 0, 2) == pytest.approx(math.sqrt(26.0))
    assert sequence_tail(x, 1, 2) == pytest.approx(math.sqrt(10.0))
    assert sequence_tail(x, 3, 2) == 0.0
    assert sequence_tail(x, 1, math.inf) == 3.0
    for m in range(4):
        assert sequence_tail(x, m, 2) <= stechkin_bound(x, 1.0, 2.0, m) + 1e-12
    with pytest.raises(ParameterError):
        stechkin_bound(x, 2.0, 1.0, 1)


def test_greedy_keeps_largest_with_lexicographic_ties():
    f = SparseTrigPoly.from_dict(2, {(1, 0): 1.0, (-1, 0): 1.0, (0, 1): 1.0, (5, 5): 0.1})
    result = greedy_mterm(f, 1, Lebesgue(2.0))
    assert result.approximant.as_dict() == {(-1, 0): 1 + 0j}
    assert result.error == pytest.approx(math.sqrt(2.01))
    assert result.term_count == 1


def test_greedy_weighted_target_ranks_by_weight():
    f = SparseTrigPoly.from_dict(1, {(0,): 1.0, (9,): 0.5})
    # weighted magnitudes 1 and 5
    result = greedy_mterm(f, 1, WienerWeighted(1.0, 1.0))
    assert result.approximant.as_dict() == {(9,): 0.5 + 0j}
    assert result.error == pytest.approx(1.0)


def test_greedy_budget_larger_than_support_is_exact():
    f = random_sparse_poly(2, 10, 3, np.random.default_rng(0))
    result = greedy_mterm(f, 50, WienerPlain(1.0))
    assert result.approximant == f
    assert result.error == 0.0


def test_greedy_rejects_function_norm_targets():
    f = SparseTrigPoly.constant(2)
    with pytest.raises(ParameterError):
        greedy_mterm(f, 1, Besov(1.0, 2.0, 1.0))


def test_maurey_is_reproducible_and_best_of_trials():
    f = random_sparse_poly(2, 200, 10, np.random.default_rng(1))
    first = maurey_mterm(f, 32, q=2.0, trials=5, seed=7)
    second = maurey_mterm(f, 32, q=2.0, trials=5, seed=7)
    single = maurey_mterm(f, 32, q=2.0, trials=1, seed=7)
    assert first.approximant == second.approximant
    assert first.error == second.error
    assert first.error <= single.error
    assert first.term_count <= 32
    assert first.error == pytest.approx(approximation_error(f, first.approximant, 2.0))


def test_maurey_error_scales_like_inverse_root_m():
    f = random_sparse_poly(2, 1024, 32, np.random.default_rng(2))
    f = f.scale(1.0 / f.coefficient_norm(1.0))
    for m in (16, 64, 256):
        errors = [maurey_mterm(f, m, trials=1, seed=s).error for s in range(15)]
        assert np.median(errors) <= 2.0 / math.sqrt(m)


def test_maurey_empty_polynomial():
    result = maurey_mterm(SparseTrigPoly(2), 4, trials=2, seed=0)
    assert result.error == 0.0
    assert result.term_count == 0


def test_layer_budget_values():
    budget = layer_budget(6, 2, 1.0, 1.0)
    assert budget.L == 4
    assert budget.K == 7
    assert budget.layer_terms == {5: 64, 6: 16, 7: 8}
    assert budget.kept_terms == 1 + 4 + 12 + 32 + 80
    assert budget.total_terms == 129 + 88
    assert budget.constant == pytest.approx(217 / 64)


def test_layer_cutoff_requires_positive_L():
    with pytest.raises(ParameterError):
        layer_cutoff(1, 2)
    assert layer_cutoff(1, 1) == 1


def test_smoothness_margin():
    assert smoothness_margin_ok(0.1, 1.0)
    assert not smoothness_margin_ok(0.0, 1.0)
    assert not smoothness_margin_ok(0.5, 2.0)
    assert smoothness_margin_ok(0.6, 2.0)


def test_layered_mterm_keeps_low_layers_exactly():
    f = fooling_wiener(3, 2, 1.0, 1.0)
    result = layered_mterm(f, 64, q=2.0, r=1.0, theta=1.0, seed=0, trials=2)
    assert result.error == 0.0
    assert result.details['L'] == 4


def test_layered_mterm_on_witness():
    witness = layered_witness(6, 2, 1.0, 1.0)
    assert norm(witness, WienerWeighted(1.0, 1.0)) == pytest.approx(1.0)
    result = layered_mterm(witness, 64, q=2.0, r=1.0, theta=1.0, seed=3, trials=2)
    again = layered_mterm(witness, 64, q=2.0, r=1.0, theta=1.0, seed=3, trials=2)
    assert result.approximant == again.approximant
    assert result.term_count <= result.details['budget_total']
    assert result.details['approximated_layers'] == 1
    assert result.error == pytest.approx(approximation_error(witness, result.approximant, 2.0))


def test_layered_mterm_small_theta_takes_greedy_head():
    f = random_sparse_poly(2, 300, 12, np.random.default_rng(4))
    result = layered_mterm(f, 64, q=2.0, r=1.0, theta=0.5, seed=0, trials=1)
    assert result.details['greedy_head_terms'] == 64
    assert math.isfinite(result.error)


def test_layered_mterm_rejects_small_smoothness():
    f = fooling_wiener(3, 2, 0.5, 2.0)
    with pytest.raises(ParameterError):
        layered_mterm(f, 64, r=0.5, theta=2.0)


def test_fooling_functions_are_normalized():
    assert norm(fooling_wiener(4, 2, 1.0, 1.0), WienerWeighted(1.0, 1.0)) == pytest.approx(1.0)
    assert norm(fooling_wiener(4, 3, 0.5, 2.0), WienerWeighted(0.5, 2.0)) == pytest.approx(1.0)
    assert norm(fooling_besov(4, 2, 1.0, 1.5, 1.0), Besov(1.0, 1.5, 1.0)) == pytest.approx(1.0)
    a2a = fooling_a2a(32, 2, 1.0, 1.0)
    assert a2a.support_size == 64
    assert norm(a2a, WienerWeighted(1.0, 1.0)) == pytest.approx(1.0, abs=1e-12)


def test_a2a_tail_dominates_lower_bound():
    for m in (8, 32, 128):
        t = fooling_a2a(m, 2, 1.0, 1.0)
        tail = greedy_mterm(t, m, WienerPlain(2.0)).error
        assert tail >= a2a_lower_bound(m, 2, 1.0, 1.0, 2.0) * (1 - 1e-12)


def test_fooling_layer_for():
    assert fooling_layer_for(16, 2) == 3
    assert fooling_layer_for(1, 1) == 1


def test_multiplicativity_chain_ordering():
    rng = np.random.default_rng(5)
    for _ in range(10):
        f = random_sparse_poly(2, 80, 8, rng)
        chain = multiplicativity_chain(f, 10, 15, 1.0, 2.0)
        assert chain['direct'] <= chain['composed'] * (1 + 1e-12)
        assert chain['composed'] <= chain['bound'] * (1 + 1e-12)
