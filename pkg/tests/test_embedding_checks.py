"""
Tests for the embedding ratio checks and the auxiliary lemma suites
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.services.embedding_checks import (DEFAULT_EMBEDDING_PARAMS, EMBEDDING_TAGS,  # noqa: E402
                                           EmbeddingReport, check_cardinality, check_counting_holder,
                                           check_geo_sum, check_multiplicativity,
                                           check_order_weights, check_partition,
                                           check_sorted_weight_growth, check_stechkin,
                                           check_weight_sandwich, embedding_check, embedding_pair,
                                           geo_sum_ratio, random_layered_poly,
                                           verify_auxiliary_lemmas)
from src.services.function_spaces import Besov, SobolevW, WienerWeighted, norm  # noqa: E402
from src.services.hyperbolic_index import block_labels  # noqa: E402
from src.services.trig_poly import SparseTrigPoly  # noqa: E402
from src.utils.errors import ParameterError  # noqa: E402


def test_norm_one_embedding_has_no_violations():
    report = embedding_check('B-to-A-norm1', trials=20, scales=[1, 2, 3], r=1.0, p=2.0, theta=1.0)
    assert report.violations == 0
    assert report.constant_ratio == pytest.approx(1.0)
    assert all(report.max_ratio[s] <= 1.0 + 1e-9 for s in report.scales)
    assert report.passed


def test_embedding_check_is_reproducible():
    first = embedding_check('A-to-W', trials=5, scales=[2, 1], r=1.0, p=3.0, theta=3.0, seed=4)
    second = embedding_check('A-to-W', trials=5, scales=[1, 2], r=1.0, p=3.0, theta=3.0, seed=4)
    assert first.scales == [1, 2]
    assert first.max_ratio == second.max_ratio
    assert first.slope == second.slope


def test_embedding_pairs_for_default_params():
    for tag in EMBEDDING_TAGS:
        p, theta = DEFAULT_EMBEDDING_PARAMS[tag]
        pair = embedding_pair(tag, 1.0, p, theta)
        assert pair.tag == tag
        assert pair.norm_one == (tag == 'B-to-A-norm1')
    pair = embedding_pair('W-to-A', 1.0, 1.5, 1.5)
    assert pair.source == SobolevW(1.0 + 2 / 1.5 - 1, 1.5)
    assert pair.target == WienerWeighted(1.0, 1.5)


def test_embedding_parameter_ranges():
    with pytest.raises(ParameterError):
        embedding_pair('B-to-A-norm1', 1.0, 1.5, 1.0)
    with pytest.raises(ParameterError):
        embedding_pair('A-to-B', 1.0, 2.0, 1.0)
    with pytest.raises(ParameterError):
        embedding_pair('W-to-A', 1.0, 3.0, 1.0)
    with pytest.raises(ParameterError):
        embedding_pair('A-to-H', 1.0, 2.0, 2.0)
    with pytest.raises(ParameterError):
        embedding_check('A-to-W', trials=0, scales=[1], p=3.0, theta=3.0)


def test_wiener_to_besov_ratio_of_a_monomial():
    pair = embedding_pair('A-to-B', 1.0, 2.0, 2.0)
    f = SparseTrigPoly.monomial((5, -2))
    # block (3, 2), weight 6 * 3
    assert norm(f, pair.target) / norm(f, pair.source) == pytest.approx(2.0 ** 5 / 18.0)
    assert pair.target == Besov(1.0, 2.0, 2.0)


def test_random_layered_poly_stays_below_top_layer():
    a = random_layered_poly(3, 4, np.random.default_rng(0))
    b = random_layered_poly(3, 4, np.random.default_rng(0))
    assert a == b
    assert 1 <= a.support_size <= 24
    assert np.all(block_labels(a.frequencies).sum(axis=1) <= 4)


def test_report_pass_rules():
    common = dict(source='s', target='t', trials=1, scales=[1, 2], max_ratio={1: 1.0, 2: 1.0},
                  median_ratio={1: 1.0, 2: 1.0}, violations=0, constant_ratio=1.0)
    assert EmbeddingReport(tag='A-to-W', slope=0.01, norm_one=False, **common).passed
    assert not EmbeddingReport(tag='A-to-W', slope=0.2, norm_one=False, **common).passed
    violated = dict(common, violations=1)
    assert not EmbeddingReport(tag='B-to-A-norm1', slope=0.0, norm_one=True, **violated).passed
    record = EmbeddingReport(tag='A-to-W', slope=0.01, norm_one=False, **common).to_record()
    assert record['max_ratio'] == [1.0, 1.0]


def test_index_suites():
    partition = check_partition({1: 5, 2: 4, 3: 2})
    assert partition.passed
    assert partition.instances == 6 + 5 + 3
    assert check_cardinality({1: 6, 2: 6, 3: 5}).passed
    assert check_weight_sandwich({1: 6, 2: 6, 3: 5}).passed
    assert check_order_weights({2: 8, 3: 8}).passed
    growth = check_sorted_weight_growth({2: 10})
    assert growth.passed
    assert growth.instances == 9


def test_geo_sum():
    assert geo_sum_ratio(10, 0.0, 0.0, 2.0) == pytest.approx(1.0 / 3.0)
    result = check_geo_sum()
    assert result.passed
    assert result.details['worst_spread'] >= 1.0


def test_randomized_sequence_suites():
    assert check_counting_holder(300, seed=0).passed
    assert check_stechkin(300, seed=1).passed
    assert check_multiplicativity(10, seed=2).passed


def test_verify_auxiliary_lemmas_report():
    limits = {'partition': {1: 4, 2: 3}, 'layers': {1: 6, 2: 6}, 'growth': {2: 10}}
    report = verify_auxiliary_lemmas(limits, random_instances=100, seed=0)
    assert report.passed
    names = [record['lemma'] for record in report.to_records()]
    assert names == ['partition', 'layer_cardinality', 'weight_sandwich', 'order_weights',
                     'sorted_weight_growth', 'geo_sum', 'counting_holder', 'stechkin',
                     'multiplicativity']
    assert math.isfinite(report.results['stechkin'].worst_margin)
