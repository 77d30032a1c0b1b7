import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sps

from chainbreak.errors import ParameterError
from chainbreak.stats import Sample, ecdf, ks_distance, ks_two_sample, position_chisq, seed_stream, standard_error


def test_ks_examples():
    assert ks_distance([0.5], lambda x: np.full_like(x, 0.3)) == pytest.approx(0.7)
    assert ks_distance([1.0], lambda x: np.full_like(x, 0.5)) == 0.5
    n = 40
    q = sps.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    assert ks_distance(q, sps.norm.cdf) == pytest.approx(1 / (2 * n), abs=1e-12)
    with pytest.raises(ParameterError):
        ks_distance([], sps.norm.cdf)


def test_ks_matches_scipy():
    x = np.random.default_rng(3).normal(size=500)
    assert ks_distance(x, sps.norm.cdf) == pytest.approx(sps.kstest(x, "norm").statistic, abs=1e-14)
    y = np.random.default_rng(4).normal(0.1, 1, size=300)
    assert ks_two_sample(x, y) == pytest.approx(sps.ks_2samp(x, y).statistic, abs=1e-14)


def test_ks_allows_minus_inf():
    x = np.array([-np.inf, 0.0])
    assert ks_distance(x, sps.norm.cdf) == pytest.approx(0.5)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=50))
def test_ks_invariant_under_monotone_transform(vals):
    x = np.array(vals)
    d1 = ks_distance(x, sps.norm.cdf)
    d2 = ks_distance(np.exp(x), lambda y: sps.norm.cdf(np.log(y)))
    assert d1 == pytest.approx(d2, abs=1e-12)
    assert 0 <= d1 <= 1


def test_sample_sorted():
    s = Sample.of([3.0, 1.0, 2.0])
    assert s.sorted and list(s.values) == [1, 2, 3] and len(s) == 3
    assert list(ecdf(s, [0.5, 1.0, 2.5, 9.0])) == [0, 1 / 3, 2 / 3, 1]


def test_chisq_examples():
    p = [0.25, 0.5, 0.25]
    assert position_chisq([25, 50, 25], p) == 0.0
    assert position_chisq([30, 50, 20], p) == pytest.approx(2.0)
    assert position_chisq([100, 0, 0], p) == pytest.approx(300.0)
    with pytest.raises(ParameterError):
        position_chisq([1, 2], [0.5, 0.5, 0.0])
    with pytest.raises(ParameterError):
        position_chisq([1, 2, 3], [1.0, 0.0, 0.0])
    with pytest.raises(ParameterError):
        position_chisq([0, 0], [0.5, 0.5])
    assert position_chisq([30, 50, 20], p) == pytest.approx(sps.chisquare([30, 50, 20], [25, 50, 25]).statistic)


@given(st.lists(st.integers(1, 50), min_size=2, max_size=8), st.integers(1, 20))
def test_chisq_zero_iff_proportional(weights, k):
    w = np.array(weights, float)
    probs = w / w.sum()
    assert position_chisq(w * k, probs) == pytest.approx(0.0, abs=1e-9)
    bumped = w * k
    bumped[0] += 1
    assert position_chisq(bumped, probs) > 0


def test_standard_error():
    assert standard_error([1.0, 2.0, 3.0, 4.0]) == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)


def test_seed_stream():
    a = seed_stream(42, 0).standard_normal(1000)
    b = seed_stream(42, 0).standard_normal(1000)
    c = seed_stream(42, 1).standard_normal(1000)
    assert np.array_equal(a, b)
    assert np.sum(a != c) > 990
    assert not np.array_equal(seed_stream(43, 0).standard_normal(10), a[:10])
    # negative and huge inputs are folded into 64 bits
    assert np.array_equal(seed_stream(-1, 0).random(3), seed_stream(2 ** 64 - 1, 0).random(3))
