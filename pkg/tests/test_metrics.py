import numpy as np
import pytest

from evaluation.metrics import average_precision, count_same_group
from evaluation.report import EvalReport
from retrieval.index import RankedList
from tests import oracles
from utils.errors import NoPositivesError, OverlapError


def test_perfect_ranking():
    assert average_precision(['a', 'b', 'c', 'd'], {'a', 'b'}) == 1.0


def test_single_positive_second():
    assert average_precision(['b', 'a'], {'a'}) == 0.5


def test_junk_removed_before_scoring():
    assert average_precision(['b', 'a'], {'a'}, {'b'}) == 1.0


def test_missing_positive_contributes_zero():
    assert average_precision(['a', 'x'], {'a', 'z'}) == 0.5


def test_accepts_ranked_list():
    ranked = RankedList(['b', 'a'], [0.1, 0.2])
    assert average_precision(ranked, {'a'}) == 0.5


def test_no_positives():
    with pytest.raises(NoPositivesError):
        average_precision(['a'], set())


def test_positive_also_junk():
    with pytest.raises(OverlapError):
        average_precision(['a'], {'a'}, {'a'})


def _random_instance(rng):
    n = int(rng.integers(1, 51))
    ids = ['i%02d' % i for i in rng.permutation(n)]
    labels = rng.integers(3, size=n)
    positives = {x for x, label in zip(ids, labels) if label == 0}
    junk = {x for x, label in zip(ids, labels) if label == 1}
    if not positives:
        positives = {'missing'}
    # Rank a random prefix only so some positives go unreturned.
    ranked = ids[:int(rng.integers(0, n + 1))]
    return ranked, positives, junk


def test_matches_definition_oracle():
    rng = np.random.default_rng(41)
    for _ in range(1000):
        ranked, positives, junk = _random_instance(rng)
        assert abs(
            average_precision(ranked, positives, junk) -
            oracles.average_precision(ranked, positives, junk)) <= 1e-12


def test_trapezoidal_matches_oxford_oracle():
    rng = np.random.default_rng(42)
    for _ in range(500):
        ranked, positives, junk = _random_instance(rng)
        assert abs(
            average_precision(ranked, positives, junk, 'trapezoidal') -
            oracles.trapezoidal_average_precision(ranked, positives,
                                                  junk)) <= 1e-12


def test_trapezoidal_single_positive_second():
    # Recall step 0 -> 1 at rank 2: (1 + 0.5) / 2 averaged with precision
    # 0 at rank 1 -> (0 + 0.5) / 2.
    assert average_precision(['b', 'a'], {'a'},
                             variant='trapezoidal') == 0.25


def test_ap_bounds():
    rng = np.random.default_rng(43)
    for _ in range(200):
        ranked, positives, junk = _random_instance(rng)
        assert 0 <= average_precision(ranked, positives, junk) <= 1


def test_count_same_group():
    ranked = RankedList(['a', 'x', 'b', 'c', 'd'], [0, 1, 2, 3, 4])
    assert count_same_group(ranked, {'a', 'b', 'c', 'd'}) == 3
    assert count_same_group(['x', 'y'], {'a'}) == 0


class TestEvalReport:
    def test_tsv(self):
        report = EvalReport('holidays', [('q1', 1.0), ('q2', 0.5)])
        assert report.aggregate == 0.75
        assert report.to_tsv() == ('query\tq1\t1\nquery\tq2\t0.5\n'
                                   'aggregate\tholidays\t0.75\n')

    def test_text_mentions_metric(self):
        report = EvalReport('ukb', [('q1', 4.0)], config={'database_size': 4})
        text = report.format('text')
        assert 'ukb ukb_score: 4.0000' in text
        assert 'database_size: 4' in text

    def test_summary_row(self):
        report = EvalReport('oxford', [('q1', 0.25)])
        assert report.summary_row('D=16') == 'D=16\toxford\t0.250000'

    def test_empty_aggregate_is_nan(self):
        assert np.isnan(EvalReport('oxford', []).aggregate)
