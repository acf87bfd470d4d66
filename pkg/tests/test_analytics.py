import math
from fractions import Fraction
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from committee_elections.analytics import (
    BoundInapplicableError,
    BudgetExceededError,
    ToleranceSpec,
    asymptotic_lower_bound,
    lifetime_fork_bound,
    lottery_failure,
    lottery_failure_hoeffding,
    lottery_success,
    min_committee_size,
    success_bruteforce,
    success_threshold_exact,
    two_voter_cardinal_dishonest,
)
from committee_elections.distributions import pbd_pmf
from committee_elections.signal_model import SignalParams
from committee_elections.simulator import ElectionConfig, estimate_success
from committee_elections.strategies import Strategy, threshold_vote_probs

TOL = ToleranceSpec("1/3")


def exact_from_probs(m, k, p, ph, pm, **kw):
    return success_threshold_exact(m, k, TOL, p, pbd_pmf(ph), pbd_pmf(pm), **kw).value


def test_tolerance_spec():
    assert ToleranceSpec("1/2").rho == Fraction(1, 2)
    assert ToleranceSpec(0.25).rho == Fraction(1, 4)
    assert TOL.honest_needed(3) == 2
    assert TOL.honest_needed(21) == 14
    assert TOL.max_dishonest(21) == 7
    for bad in (0, 1, "3/2"):
        with pytest.raises(ValueError):
            ToleranceSpec(bad)


def test_prior_edges():
    ph, pm = [0.7, 0.6], [0.3, 0.4]
    assert exact_from_probs(5, 3, 0.0, ph, pm) == 0.0
    assert exact_from_probs(5, 3, 1.0, ph, pm) == 1.0


def test_no_voters_means_all_ties():
    # zero votes everywhere: any dishonest candidate takes a seat first
    m, k, p = 4, 2, 0.6
    got = exact_from_probs(m, k, p, [], [])
    # honest iff every candidate is honest (k - H + 1 = 1 dishonest candidate is enough)
    assert got == pytest.approx(p**m, rel=1e-12)


GRID = [
    (m, n, k)
    for m in range(1, 5)
    for n in range(0, 3)
    for k in range(1, m + 1)
    if (n + 1) ** m * 2**m <= 5000
]


@pytest.mark.parametrize("m,n,k", GRID)
def test_exact_matches_enumeration(m, n, k):
    rng = np.random.default_rng(100 * m + 10 * n + k)
    ph = rng.uniform(0.3, 0.95, n)
    pm = rng.uniform(0.05, 0.7, n)
    p = float(rng.uniform(0.2, 0.9))
    brute = success_bruteforce(m, n, k, TOL, p, ph, pm)
    assert exact_from_probs(m, k, p, ph, pm) == pytest.approx(brute, abs=1e-12)


def test_literal_rank_disagrees_with_enumeration():
    # rho k integer: seating ceil(rho k) = 1 dishonest out of k=3 is still honest
    m, n, k, p = 4, 2, 3, 0.6
    ph, pm = [0.8, 0.7], [0.3, 0.2]
    brute = success_bruteforce(m, n, k, TOL, p, ph, pm)
    literal = exact_from_probs(m, k, p, ph, pm, dishonest_rank=TOL.dishonest_cap(k))
    assert exact_from_probs(m, k, p, ph, pm) == pytest.approx(brute, abs=1e-12)
    assert abs(literal - brute) > 1e-3


def test_bruteforce_budget():
    with pytest.raises(BudgetExceededError):
        success_bruteforce(12, 5, 3, TOL, 0.5, [0.5] * 5, [0.5] * 5)


def test_conditional_success():
    ph, pm = [0.9] * 3, [0.1] * 3
    m, k, p = 6, 3, 0.7
    full = exact_from_probs(m, k, p, ph, pm)
    cond = exact_from_probs(m, k, p, ph, pm, conditional=True)
    mass = stats.binom.sf(TOL.honest_needed(k) - 1, m, p)
    assert cond == pytest.approx(full / mass, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(p1=st.floats(0.05, 0.95), p2=st.floats(0.05, 0.95), z=st.floats(0.05, 0.95))
def test_success_monotone_in_prior(p1, p2, z):
    lo, hi = sorted((p1, p2))
    prm = SignalParams(0.5, 0.75, 0.5, 0.1)
    v = threshold_vote_probs(z, prm)
    # fixed vote laws isolate the prior's effect on the types
    a = exact_from_probs(8, 4, lo, [v.p_h_vote] * 3, [v.p_m_vote] * 3)
    b = exact_from_probs(8, 4, hi, [v.p_h_vote] * 3, [v.p_m_vote] * 3)
    assert a <= b + 1e-12


def test_exact_matches_simulation():
    cfg = ElectionConfig.uniform(6, 3, 3, 6, 0.7, 0.75, 0.5, 0.1, Strategy.threshold(0.6), seed=3)
    v = threshold_vote_probs(0.6, cfg.params_per_voter[0])
    exact = exact_from_probs(6, 3, 0.7, [v.p_h_vote] * 3, [v.p_m_vote] * 3)
    est = estimate_success(cfg, 40_000, engine="signals")
    assert est.ci_low <= exact <= est.ci_high


def test_asymptotic_bound():
    assert asymptotic_lower_bound(10, 0, 0.5) == 0.0
    assert asymptotic_lower_bound(10, 10_000, 0.5) == pytest.approx(1.0)
    b = asymptotic_lower_bound(10, 200, 0.5)
    assert b == pytest.approx(1 - 200 * math.exp(-25), rel=1e-12)
    with pytest.raises(ValueError):
        asymptotic_lower_bound(10, 10, 0.0)


def test_lottery_exact_vs_scipy():
    for k, p in ((10, 0.8), (100, 0.7), (1500, 0.8), (21, 0.5)):
        H = TOL.honest_needed(k)
        assert lottery_failure(k, p, TOL) == pytest.approx(stats.binom.cdf(H - 1, k, p), rel=1e-9)
        assert lottery_success(k, p, TOL) == pytest.approx(stats.binom.sf(H - 1, k, p), rel=1e-12)


def test_lottery_failure_deep_tail():
    # scipy's log-cdf is a loose but independent check far below double epsilon
    val = lottery_failure(1500, 0.8, TOL)
    assert 0 < val < 1e-20
    assert math.log(val) == pytest.approx(stats.binom.logcdf(999, 1500, 0.8), rel=1e-6)


def test_chernoff_is_a_lower_bound():
    for k in (10, 50, 300, 1500):
        for p in (0.7, 0.8, 0.95):
            assert lottery_success(k, p, TOL, "chernoff") <= lottery_success(k, p, TOL) + 1e-15
            assert lottery_failure_hoeffding(k, p, TOL) >= lottery_failure(k, p, TOL)


def test_bounds_inapplicable_below_threshold():
    with pytest.raises(BoundInapplicableError, match="bound-inapplicable"):
        lottery_success(100, 0.6, TOL, "chernoff")
    with pytest.raises(BoundInapplicableError):
        lottery_failure_hoeffding(100, 2 / 3, TOL)
    assert lottery_success(10, 1.0, TOL, "chernoff") == 1.0


def test_lifetime_bound():
    assert lifetime_fork_bound(1e-12, 2 * 10**8) == pytest.approx(2e-4)
    assert lifetime_fork_bound(0.1, 100) == 1.0


def two_voter_mc(z0, z1, m, t_byz, q, N, seed):
    rng = np.random.default_rng(seed)
    fails = 0
    for _ in range(N):
        dishonest = rng.random(m) < q
        chosen = set(rng.choice(m, z0, replace=False)) | set(rng.choice(m, z1, replace=False))
        fails += sum(dishonest[i] for i in chosen) > t_byz
    return fails / N


def test_two_voter_cardinal_against_simulation():
    val = two_voter_cardinal_dishonest(3, 4, 10, 3, 2, 0.3)
    est = two_voter_mc(3, 4, 10, 2, 0.3, 40_000, 1)
    assert abs(est - val) < 4 * math.sqrt(val * (1 - val) / 40_000)


def test_two_voter_cardinal_identical_ballots():
    # z0 = z1 = m: both voters approve everyone
    got = two_voter_cardinal_dishonest(5, 5, 5, 3, 1, Fraction(1, 2), exact=True)
    assert got == sum(Fraction(math.comb(5, j), 32) for j in range(2, 6))
    with pytest.raises(ValueError):
        two_voter_cardinal_dishonest(1, 1, 5, 3, 1, 0.5)


def lottery_scan(target, p, k_max):
    # plain scipy scan, independent of the package's log-space tail
    for k in range(1, k_max + 1):
        if stats.binom.cdf(TOL.honest_needed(k) - 1, k, p) <= target:
            return k


@pytest.mark.parametrize("target,p", [(1e-2, 0.8), (1e-3, 0.8), (1e-6, 0.9), (1e-2, 0.7)])
def test_min_lottery_size(target, p):
    k = min_committee_size(target, "lottery", (p, "1/3"))
    assert k == lottery_scan(target, p, 5000)
    assert lottery_failure(k, p, TOL) <= target


def test_min_lottery_size_budget():
    with pytest.raises(BudgetExceededError):
        min_committee_size(1e-9, "lottery", (0.7, "1/3"), k_max=50)


def test_min_voting_size_scan():
    cfg = ElectionConfig.uniform(10, 5, 1, 10, 0.8, 0.75, 0.5, 0.1, Strategy.threshold(0.6), seed=4)
    k = min_committee_size(0.05, "voting", cfg, trials=2000)
    for smaller in range(1, k):
        est = estimate_success(cfg.with_k(smaller), 2000)
        assert 1 - est.ci_low > 0.05
    assert 1 - estimate_success(cfg.with_k(k), 2000).ci_low <= 0.05
