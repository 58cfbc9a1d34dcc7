import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from fpplab.errors import DataError, ParameterError
from fpplab.genmodels import first_lerw_length, sample_ust_colored
from fpplab.randsrc import RngStream
from fpplab.urn import (
    UrnState,
    increment_boundedness_check,
    read_ratios_csv,
    urn_exact_distribution,
    urn_run,
    urn_run_many,
    urn_step,
    write_increments_csv,
    write_ratios_csv,
)


def _seed_with_first_uniform(below: bool) -> int:
    for s in range(100):
        u = RngStream(s).gen.random()
        if (u < 0.5) == below:
            return s
    raise AssertionError("no seed found")


def test_state_validation():
    with pytest.raises(ParameterError):
        UrnState(5, 0)
    with pytest.raises(ParameterError):
        UrnState(1.5, 2)
    with pytest.raises(ParameterError):
        urn_step(UrnState(1, 1), 0, RngStream(0))
    with pytest.raises(ParameterError):
        urn_run((1, 1), [], RngStream(0))
    with pytest.raises(ParameterError):
        urn_run((1, 1), [1, -2], RngStream(0))


def test_step_branches():
    red = urn_step(UrnState(1, 1), 1, RngStream(_seed_with_first_uniform(True)))
    assert (red.red, red.blue) == (2, 1)
    assert red.history == ((1, "R"),)
    blue = urn_step(UrnState(1, 1), 3, RngStream(_seed_with_first_uniform(False)))
    assert (blue.red, blue.blue) == (1, 4)


def test_single_symmetric_step():
    d = 7
    vals = np.array([urn_run((1, 1), [d], RngStream(3, i)) for i in range(4000)])
    hi, lo = (1 + d) / (2 + d), 1 / (2 + d)
    assert np.all((vals == hi) | (vals == lo))
    assert stats.binomtest(int((vals == hi).sum()), len(vals), 0.5).pvalue > 1e-3


@given(st.integers(1, 5), st.integers(1, 5), st.lists(st.integers(1, 6), min_size=1, max_size=8), st.integers(0, 10**6))
def test_run_conservation_and_history(r, b, inc, seed):
    s = urn_run((r, b), inc, RngStream(4, seed), return_state=True)
    assert s.red + s.blue == r + b + sum(inc)
    assert [x for x, _ in s.history] == inc
    assert s.red == r + sum(x for x, c in s.history if c == "R")
    assert urn_run((r, b), inc, RngStream(4, seed)) == s.ratio


@given(st.integers(1, 4), st.integers(1, 4), st.lists(st.integers(1, 5), min_size=1, max_size=7))
def test_exact_distribution_is_martingale(r, b, inc):
    dist = urn_exact_distribution((r, b), inc)
    total = r + b + sum(inc)
    assert sum(dist.values()) == 1
    assert sum(p * Fraction(k, total) for k, p in dist.items()) == Fraction(r, r + b)


def test_classic_urn_is_uniform():
    n = 30
    dist = urn_exact_distribution((1, 1), [1] * n)
    assert dist == {k: Fraction(1, n + 1) for k in range(1, n + 2)}
    red = urn_run_many((1, 1), [1] * n, 20000, RngStream(5))
    counts = np.bincount(red - 1, minlength=n + 1)
    assert stats.chisquare(counts).pvalue > 1e-3


def test_run_many_matches_exact_law():
    inc = [3, 1, 4, 1, 5]
    dist = urn_exact_distribution((2, 1), inc)
    red = urn_run_many((2, 1), inc, 40000, RngStream(6))
    keys = list(dist)
    obs = np.array([(red == k).sum() for k in keys])
    exp = np.array([float(dist[k]) for k in keys]) * len(red)
    assert obs.sum() == len(red)
    assert stats.chisquare(obs, exp).pvalue > 1e-3


def test_boundedness_check():
    runs = [sample_ust_colored(200, RngStream(7, i)) for i in range(50)]
    st_ = increment_boundedness_check(runs, 200)
    assert st_.values.shape == (50,) and np.all(st_.values > 0)
    assert math.isfinite(st_.percentile(90))
    with pytest.raises(ParameterError):
        increment_boundedness_check(runs, 300)
    with pytest.raises(ParameterError):
        increment_boundedness_check([], 200)


def test_boundedness_percentile_stable_across_n():
    p90 = []
    for n in (500, 2000, 8000):
        runs = [sample_ust_colored(n, RngStream(8, i)) for i in range(300)]
        p90.append(increment_boundedness_check(runs, n).percentile(90))
    ref = p90[1]
    assert all(abs(v / ref - 1) <= 0.3 for v in p90)


def test_first_path_rayleigh_mean():
    n = 10**4
    lengths = np.array([first_lerw_length(n, RngStream(9, i)) for i in range(2000)])
    assert abs(lengths.mean() / math.sqrt(n) / math.sqrt(math.pi / 2) - 1) < 0.1


def test_csv_round_trip(tmp_path):
    ratios = np.array([0.25, 1 / 3, 0.9])
    p = tmp_path / "r.csv"
    write_ratios_csv(ratios, p)
    assert np.array_equal(read_ratios_csv(p), ratios)
    p.write_text("ratio\n0.5\nabc\n")
    with pytest.raises(DataError, match=":3:"):
        read_ratios_csv(p)
    p.write_text("x\n0.5\n")
    with pytest.raises(DataError):
        read_ratios_csv(p)
    q = tmp_path / "inc.csv"
    write_increments_csv([[1, 2], [3]], q)
    assert q.read_text() == "0,1,2\n1,3\n"
