import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epiqueue import analytic as an
from epiqueue.analytic import ModelParams
from epiqueue.branching import sample_birth_death
from epiqueue.lifetimes import Deterministic, Exponential, Gamma, LogNormal, Uniform
from epiqueue.rng import make_rng
from epiqueue.stats import EmpiricalDistribution, total_variation

from oracles import (fixed_point, geometric_mixture_of_birth_death, markov_p_literal,
                     markov_pi_literal)

GRID = (0.25, 0.5, 1.0, 2.0, 4.0)

# q0 of birth-death(0.5, 1) at tau = 2, from exp(-1)
Q0_HALF_ONE_TWO = (math.exp(-1) - 1) / (0.5 * math.exp(-1) - 1)


def test_solve_pi_exponential_example():
    sol = an.solve_pi(ModelParams(2.0, 0.5, Exponential(1.0)))
    assert sol.pi == pytest.approx(markov_pi_literal(2.0, 0.5, 1.0), abs=1e-10)
    assert sol.pi == pytest.approx(0.3596118, abs=5e-8)
    assert sol.residual <= 1e-10
    assert sol.p == 0.5 / (0.5 + (1 - sol.pi) * 2.0)


def test_solve_pi_deterministic_example():
    # pi = exp(pi - 2) for lambda = delta = c = 1
    ref = fixed_point(lambda x: math.exp(x - 2.0))
    assert ref == pytest.approx(0.158594, abs=1e-6)
    sol = an.solve_pi(ModelParams(1.0, 1.0, Deterministic(1.0)))
    assert sol.pi == pytest.approx(ref, abs=1e-10)
    assert sol.p == pytest.approx(1 / (2 - ref), abs=1e-10)
    assert sol.p == pytest.approx(0.543064, abs=1e-6)


def test_solve_pi_two_minus_root_two():
    sol = an.solve_pi(ModelParams(0.5, 0.5, Exponential(1.0)))
    assert sol.pi == pytest.approx(2 - math.sqrt(2), abs=1e-10)


def test_detection_size_param_examples():
    assert an.detection_size_param(ModelParams(2.0, 0.5, Exponential(1.0))) == pytest.approx(
        markov_p_literal(2.0, 0.5, 1.0), abs=1e-10)
    assert an.detection_size_param(ModelParams(2.0, 0.5, Exponential(1.0))) == pytest.approx(0.280776, abs=1e-6)
    big = 1e9
    assert an.detection_size_param(ModelParams(1.0, big, Exponential(1.0))) >= big / (big + 1.0)
    assert an.detection_size_param(ModelParams(1.0, big, Exponential(1.0))) >= 1 - 1e-9


def test_lambda_zero_degenerate_case():
    sol = an.solve_pi(ModelParams(0.0, 1.0, Deterministic(1.0)))
    assert sol.pi == pytest.approx(math.exp(-1.0))
    assert sol.p == 1.0


@pytest.mark.parametrize("lam, delta, mu", list(itertools.product(GRID, GRID, GRID)))
def test_fixed_point_matches_markov_closed_form(lam, delta, mu):
    sol = an.solve_pi(ModelParams(lam, delta, Exponential(mu)))
    assert abs(sol.pi - an.markov_pi(lam, delta, mu)) <= 1e-10
    assert abs(sol.p - an.markov_p(lam, delta, mu)) <= 1e-10
    assert abs(an.markov_pi(lam, delta, mu) - markov_pi_literal(lam, delta, mu)) <= 1e-12
    assert abs(an.markov_p(lam, delta, mu) - markov_p_literal(lam, delta, mu)) <= 1e-12


@pytest.mark.parametrize("life", [Exponential(1.0), Deterministic(1.0), Gamma(2.0, 0.5),
                                  Uniform(0.0, 2.0), LogNormal(0.0, 1.0)], ids=repr)
def test_bracket_signs(life):
    for lam, delta in itertools.product(GRID, GRID):
        g0 = life.mgf(delta + lam) - 0.0
        g1 = life.mgf(delta) - 1.0
        assert g0 > 0 > g1


def test_monotonicity_of_p_on_grid():
    for mu in GRID:
        for lam in GRID:
            ps = [an.solve_pi(ModelParams(lam, d, Exponential(mu))).p for d in GRID]
            assert all(a < b for a, b in zip(ps, ps[1:]))
        for delta in GRID:
            ps = [an.solve_pi(ModelParams(lam, delta, Exponential(mu))).p for lam in GRID]
            assert all(a > b for a, b in zip(ps, ps[1:]))


def test_markov_examples():
    assert an.markov_pi(2.0, 0.5, 1.0) == pytest.approx(0.3596118, abs=5e-8)
    assert an.markov_p(2.0, 0.5, 1.0) == pytest.approx(0.2807764, abs=5e-8)
    assert an.markov_p(0.5, 0.5, 1.0) == pytest.approx(math.sqrt(2) / 2, abs=1e-12)
    # vanishing detection: classical extinction probability mu / lambda
    assert an.markov_pi(3.0, 1e-12, 1.0) == pytest.approx(1 / 3, abs=1e-9)


def test_bisection_fallback_reaches_tolerance():
    params = ModelParams(2.0, 0.5, Gamma(2.0, 0.5))
    sol = an.solve_pi(params, max_iter=2)
    assert sol.method == "bisection"
    assert sol.residual <= 1e-10
    assert sol.pi == pytest.approx(an.solve_pi(params).pi, abs=1e-10)


def test_lognormal_fixed_point():
    sol = an.solve_pi(ModelParams(2.0, 0.5, LogNormal(0.0, 1.0)))
    assert sol.residual <= 1e-10
    assert 0 <= sol.pi < 1


def test_total_infected_param():
    assert an.total_infected_param(2.0, 0.5) == pytest.approx(0.2)
    assert an.total_infected_param(1.3, 1.3) == 0.5
    assert an.total_infected_param(0.0, 1.0) == 1.0


def test_geometric_pmf_examples():
    one = an.geometric_pmf(1.0, 1)
    assert one.prob(1) == 1.0 and one.prob(2) == 0.0
    half = an.geometric_pmf(0.5, 1)
    assert [half.prob(k) for k in (1, 2, 3)] == [0.5, 0.25, 0.125]
    p = 0.280776
    assert an.geometric_pmf(p, 1).mean() == pytest.approx(1 / p, rel=1e-9)
    zero = an.geometric_pmf(0.25, 0)
    assert zero.prob(0) == 0.25 and zero.prob(1) == pytest.approx(0.1875)


@settings(max_examples=80, deadline=None)
@given(p=st.floats(1e-3, 1.0), start=st.sampled_from([0, 1]))
def test_geometric_pmf_sums_to_one(p, start):
    pmf = an.geometric_pmf(p, start)
    assert abs(pmf.probs.sum() - 1.0) <= 1e-9
    assert pmf.tail_mass < 1e-12
    assert np.all((pmf.probs >= 0) & (pmf.probs <= 1))


def test_birth_death_examples():
    b0 = an.birth_death_pmf(2.0, 1.0, 0.0)
    assert b0.prob(0) == 0.0 and b0.prob(1) == 1.0
    assert an.extinction_at(2.0, 1.0, 1.0) == pytest.approx((math.e - 1) / (2 * math.e - 1), abs=1e-12)
    assert an.extinction_at(2.0, 1.0, 1.0) == pytest.approx(0.387300, abs=1e-6)
    assert an.extinction_at(0.5, 1.0, 2.0) == pytest.approx(Q0_HALF_ONE_TWO, abs=1e-12)
    assert an.extinction_at(0.5, 1.0, 2.0) == pytest.approx(0.774601, abs=1e-6)


@pytest.mark.parametrize("tau", [0.5, 1.0, 2.0])
def test_birth_death_critical_limit(tau):
    crit = an.extinction_at(1.0, 1.0, tau)
    assert crit == tau / (1 + tau)
    for lam2 in (1 - 1e-6, 1 + 1e-6):
        assert abs(crit - an.extinction_at(lam2, 1.0, tau)) <= 1e-4
    pmf = an.birth_death_pmf(1.0, 1.0, tau)
    assert abs(pmf.probs.sum() - 1) <= 1e-9


@settings(max_examples=80, deadline=None)
@given(lam2=st.floats(0.05, 5.0), mu=st.floats(0.05, 5.0), tau=st.floats(0.0, 5.0))
def test_birth_death_pmf_sums_to_one(lam2, mu, tau):
    pmf = an.birth_death_pmf(lam2, mu, tau)
    assert np.all(pmf.probs >= 0)
    # the term cap can stop materialisation early; the remainder is reported, not lost
    assert abs(pmf.probs.sum() + pmf.tail_mass - 1.0) <= 1e-9
    if pmf.tail_mass < 1e-12:
        assert abs(pmf.probs.sum() - 1.0) <= 1e-9
    else:
        assert len(pmf.probs) >= an.PMF.MAX_TERMS


def test_birth_death_pmf_against_monte_carlo():
    rng = make_rng(77)
    sims = sample_birth_death(2.0, 1.0, 1.0, np.ones(100_000, dtype=np.int64), rng)
    emp = EmpiricalDistribution.from_samples(sims, 0)
    assert abs(emp.count(0) / emp.total - 0.387300) <= 4 * math.sqrt(0.3873 * 0.6127 / 1e5)
    assert total_variation(emp, an.birth_death_pmf(2.0, 1.0, 1.0)) < 0.01


def test_post_detection_examples():
    pmf0 = an.post_detection_pmf(0.3, 0.5, 1.0, 0.0)
    assert pmf0.prob(0) == 0.0
    for i in range(1, 6):
        assert pmf0.prob(i) == pytest.approx(0.3 * 0.7 ** (i - 1), rel=1e-12)
    q0 = Q0_HALF_ONE_TWO
    expected_zero = q0 * 0.3 / (1 - 0.7 * q0)
    pmf = an.post_detection_pmf(0.3, 0.5, 1.0, 2.0)
    assert pmf.prob(0) == pytest.approx(expected_zero, abs=1e-12)
    assert pmf.prob(0) == pytest.approx(0.507624, abs=1e-6)


@pytest.mark.parametrize("lam2, mu, tau", [(0.5, 1.0, 2.0), (2.0, 1.0, 1.0), (1.0, 1.0, 0.7)])
def test_post_detection_single_ancestor_is_birth_death(lam2, mu, tau):
    a = an.post_detection_pmf(1.0, lam2, mu, tau)
    b = an.birth_death_pmf(lam2, mu, tau)
    n = min(len(a), len(b))
    np.testing.assert_allclose(a.probs[:n], b.probs[:n], atol=1e-14)


@pytest.mark.parametrize("p1, lam2, mu, tau", [(0.3, 0.5, 1.0, 2.0), (0.6, 2.0, 1.0, 0.5),
                                               (0.2, 1.0, 1.0, 1.0)])
def test_post_detection_matches_brute_force_convolution(p1, lam2, mu, tau):
    bd = an.birth_death_pmf(lam2, mu, tau)
    ref = geometric_mixture_of_birth_death(p1, bd.probs)
    got = an.post_detection_pmf(p1, lam2, mu, tau)
    n = min(60, len(got))
    np.testing.assert_allclose(got.probs[:n], ref[:n], atol=1e-11)
    assert abs(got.probs.sum() - 1) <= 1e-9


def test_pmf_helpers():
    pmf = an.geometric_pmf(0.5, 1)
    assert pmf.sf(1) == pytest.approx(1.0)
    assert pmf.sf(3) == pytest.approx(0.25)
    assert pmf.total() == pytest.approx(1.0, abs=1e-12)


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        ModelParams(-1.0, 1.0, Exponential(1.0))
    with pytest.raises(ValueError):
        ModelParams(1.0, 0.0, Exponential(1.0))
    with pytest.raises(ValueError):
        ModelParams(1.0, 1.0, Deterministic(0.0))
    with pytest.raises(ValueError):
        an.geometric_pmf(0.0)
    with pytest.raises(ValueError):
        an.markov_pi(0.0, 1.0, 1.0)
