import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epiqueue.analytic import PMF, geometric_pmf
from epiqueue.rng import make_rng
from epiqueue.stats import (MIN_EXPECTED, EmpiricalDistribution, InsufficientData, chi2_sf,
                            chi_square_gof, geometric_mle, total_variation,
                            two_sample_chi_square)

from oracles import chi2_sf_quadrature


def geometric_sample(p, n, seed):
    return EmpiricalDistribution.from_samples(make_rng(seed).geometric(p, n), 1)


def test_empirical_distribution_basics():
    emp = EmpiricalDistribution.from_samples([1, 2, 2, 5], 1)
    assert emp.total == 4
    assert emp.count(2) == 2 and emp.count(3) == 0
    assert emp.max_value == 5
    assert emp.mean() == 2.5
    with pytest.raises(ValueError):
        EmpiricalDistribution(1, {0: 3})


def test_geometric_mle_examples():
    assert geometric_mle(EmpiricalDistribution.from_samples([1] * 10, 1)) == 1.0
    assert geometric_mle(EmpiricalDistribution.from_samples([1, 2, 3, 2], 1)) == 0.5
    assert abs(geometric_mle(geometric_sample(0.280776, 10**5, 1)) - 0.280776) <= 0.006
    with pytest.raises(InsufficientData):
        geometric_mle(EmpiricalDistribution(1, {}))


@pytest.mark.parametrize("df", range(1, 31))
def test_chi2_sf_matches_density_quadrature(df):
    for x in (0.5, 1.0, 5.0, 10.0, 30.0):
        assert abs(chi2_sf(x, df) - chi2_sf_quadrature(x, df)) <= 1e-8


def test_chi2_sf_known_values():
    assert chi2_sf(0.0, 3) == 1.0
    assert chi2_sf(2.0, 2) == pytest.approx(math.exp(-1.0), abs=1e-14)


def test_gof_self_consistency():
    rep = chi_square_gof(geometric_sample(0.280776, 10**5, 12), geometric_pmf(0.280776))
    assert rep.p_value > 0.001


def test_gof_power():
    rep = chi_square_gof(geometric_sample(0.5, 10**5, 13), geometric_pmf(0.25))
    assert rep.p_value < 1e-6


def test_gof_exact_match_gives_zero_statistic():
    pmf = PMF(1, np.array([0.5, 0.5]), 0.0)
    rep = chi_square_gof(EmpiricalDistribution(1, {1: 50, 2: 50}), pmf)
    assert rep.statistic == 0.0
    assert rep.p_value == 1.0
    assert rep.degrees_of_freedom >= 1


def test_gof_requires_enough_data():
    with pytest.raises(InsufficientData):
        chi_square_gof(EmpiricalDistribution(1, {1: 49}), geometric_pmf(0.5))
    # 60 samples of a near point mass: one bin left after merging
    with pytest.raises(InsufficientData):
        chi_square_gof(EmpiricalDistribution(1, {1: 60}), geometric_pmf(0.999))


def test_gof_bins_have_expected_at_least_five_and_cover_all_samples():
    emp = geometric_sample(0.1, 5000, 3)
    rep = chi_square_gof(emp, geometric_pmf(0.1))
    assert all(b.expected >= MIN_EXPECTED for b in rep.bins)
    assert sum(b.observed for b in rep.bins) == emp.total
    assert sum(b.expected for b in rep.bins) == pytest.approx(emp.total, rel=1e-9)
    assert rep.bins[-1].high is None
    assert rep.degrees_of_freedom == len(rep.bins) - 1
    lows = [b.low for b in rep.bins]
    assert lows == sorted(lows) and lows[0] == 1


def test_gof_binning_is_deterministic():
    emp = geometric_sample(0.3, 2000, 4)
    a = chi_square_gof(emp, geometric_pmf(0.3)).to_dict()
    b = chi_square_gof(emp, geometric_pmf(0.3)).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


@settings(max_examples=60, deadline=None)
@given(p=st.floats(0.02, 0.95), n=st.integers(50, 3000), seed=st.integers(0, 2**32))
def test_gof_invariants_hold_for_arbitrary_samples(p, n, seed):
    emp = geometric_sample(p, n, seed)
    try:
        rep = chi_square_gof(emp, geometric_pmf(p))
    except InsufficientData:
        return
    assert rep.statistic >= 0
    assert 0 <= rep.p_value <= 1
    assert rep.degrees_of_freedom >= 1
    assert all(b.expected >= MIN_EXPECTED for b in rep.bins)


@settings(max_examples=60, deadline=None)
@given(df=st.integers(1, 60), x1=st.floats(0, 500), x2=st.floats(0, 500))
def test_p_value_monotone_in_statistic(df, x1, x2):
    lo, hi = sorted((x1, x2))
    assert chi2_sf(hi, df) <= chi2_sf(lo, df)


def test_two_sample_identical_counts():
    a = geometric_sample(0.3, 1000, 5)
    rep = two_sample_chi_square(a, a)
    assert rep.statistic == 0.0 and rep.p_value == 1.0


def test_two_sample_same_law_accepts():
    rep = two_sample_chi_square(geometric_sample(0.28, 10**5, 6), geometric_sample(0.28, 10**5, 7))
    assert rep.p_value > 0.001


def test_two_sample_power():
    rep = two_sample_chi_square(geometric_sample(0.28, 10**5, 8), geometric_sample(0.5, 10**5, 9))
    assert rep.p_value < 1e-6


def test_two_sample_bins_and_errors():
    a, b = geometric_sample(0.2, 3000, 10), geometric_sample(0.2, 500, 11)
    rep = two_sample_chi_square(a, b)
    assert all(min(e) >= MIN_EXPECTED for e in (b_.expected for b_ in rep.bins))
    assert sum(o[0] for o in (b_.observed for b_ in rep.bins)) == a.total
    assert sum(o[1] for o in (b_.observed for b_ in rep.bins)) == b.total
    json.dumps(rep.to_dict())
    with pytest.raises(InsufficientData):
        two_sample_chi_square(a, EmpiricalDistribution(1, {1: 10}))


def test_total_variation_examples():
    pmf = geometric_pmf(0.5)
    assert total_variation(EmpiricalDistribution(1, {1: 100}), pmf) == pytest.approx(0.5, abs=1e-12)
    # counts proportional to the materialised pmf
    small = PMF(1, np.array([0.5, 0.25, 0.125]), 0.125)
    emp = EmpiricalDistribution(1, {1: 4, 2: 2, 3: 1})
    assert total_variation(emp, small) <= 0.125 + 1e-12
    exact = PMF(1, np.array([0.5, 0.25, 0.25]), 0.0)
    assert total_variation(EmpiricalDistribution(1, {1: 2, 2: 1, 3: 1}), exact) == 0.0


@settings(max_examples=40, deadline=None)
@given(p=st.floats(0.05, 0.95), n=st.integers(1, 500), seed=st.integers(0, 2**32))
def test_total_variation_in_unit_interval(p, n, seed):
    tv = total_variation(geometric_sample(p, n, seed), geometric_pmf(p))
    assert 0 <= tv <= 1


def test_report_serialises_with_bins():
    rep = chi_square_gof(geometric_sample(0.4, 500, 14), geometric_pmf(0.4))
    d = json.loads(json.dumps(rep.to_dict()))
    assert d["kind"] == "gof" and len(d["bins"]) == d["degrees_of_freedom"] + 1
