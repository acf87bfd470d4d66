import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from committee_elections.signal_model import (
    HONEST,
    MALICIOUS,
    POSTERIOR_EPS,
    SignalParams,
    UninformativeSignalsError,
    posterior,
    posterior_conditional_distribution,
    posterior_inverse,
    pooled_posterior,
    sample_signal,
)

STD = SignalParams(0.75, 0.75, 0.5, 0.1)


def bayes(s, prm):
    # direct Bayes rule with Gaussian densities, no log-odds algebra
    fh = stats.norm.pdf(s, prm.base_honest, prm.noise_sd)
    fm = stats.norm.pdf(s, prm.base_malicious, prm.noise_sd)
    return prm.prior_honest * fh / (prm.prior_honest * fh + (1 - prm.prior_honest) * fm)


def test_posterior_frozen_value():
    assert posterior(0.7, STD) == pytest.approx(0.951367680309595, abs=1e-12)
    assert posterior(0.7, STD) == pytest.approx(bayes(0.7, STD), rel=1e-12)


def test_posterior_monte_carlo_bayes():
    # fraction honest among producers whose signal lands near 0.7
    rng = np.random.default_rng(11)
    N = 4_000_000
    honest = rng.random(N) < 0.75
    s = np.where(honest, 0.75, 0.5) + 0.1 * rng.standard_normal(N)
    near = np.abs(s - 0.7) < 0.005
    est = honest[near].mean()
    se = math.sqrt(est * (1 - est) / near.sum())
    assert abs(est - posterior(0.7, STD)) < 4 * se + 2e-3


def test_uninformative_gives_prior():
    prm = SignalParams(0.3, 0.6, 0.6, 0.2)
    assert posterior([-5.0, 0.6, 9.0], prm) == pytest.approx([0.3, 0.3, 0.3])
    with pytest.raises(UninformativeSignalsError, match="uninformative-signals"):
        posterior_inverse(0.5, prm)


def test_extreme_signals_stay_finite_and_clamped():
    vals = posterior(np.array([-1e6, 1e6]), STD)
    assert vals[0] == POSTERIOR_EPS
    assert vals[1] == 1 - POSTERIOR_EPS


@pytest.mark.parametrize("bad", [dict(prior_honest=0.0), dict(prior_honest=1.0), dict(noise_sd=0.0)])
def test_params_validation(bad):
    kw = dict(prior_honest=0.5, base_honest=0.7, base_malicious=0.3, noise_sd=0.1)
    kw.update(bad)
    with pytest.raises(ValueError):
        SignalParams(**kw)


@settings(max_examples=200, deadline=None)
@given(
    q=st.floats(1e-6, 1 - 1e-6),
    p=st.floats(0.05, 0.95),
    gap=st.floats(0.01, 1.0),
    sd=st.floats(0.02, 1.0),
)
def test_inverse_roundtrip(q, p, gap, sd):
    prm = SignalParams(p, 0.5 + gap, 0.5, sd)
    s = posterior_inverse(q, prm)
    assert posterior(s, prm) == pytest.approx(q, rel=1e-8, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(a=st.floats(-2, 3), b=st.floats(-2, 3))
def test_posterior_monotone(a, b):
    lo, hi = sorted((a, b))
    assert posterior(lo, STD) <= posterior(hi, STD)


@pytest.mark.parametrize("ptype", [HONEST, MALICIOUS])
@pytest.mark.parametrize("prm", [STD, SignalParams(0.5, 0.7, 0.3, 0.15), SignalParams(0.2, 0.55, 0.5, 0.05)])
def test_posterior_density_integrates_to_one(ptype, prm):
    law = posterior_conditional_distribution(ptype, prm)
    # integrate in logit space, where the density is smooth and light-tailed
    def g(u):
        x = 1 / (1 + math.exp(-u))
        return law.pdf(x) * x * (1 - x)

    val, _ = integrate.quad(g, -35, 35, limit=400)
    assert val == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("ptype", [HONEST, MALICIOUS])
def test_posterior_cdf_matches_simulation(ptype):
    rng = np.random.default_rng(5)
    s = sample_signal(np.full(500_000, int(ptype)), STD, rng)
    post = posterior(s, STD)
    law = posterior_conditional_distribution(ptype, STD)
    for x in (0.2, 0.5, 0.8, 0.95):
        assert np.mean(post <= x) == pytest.approx(law.cdf(x), abs=4e-3)


def test_cdf_derivative_is_pdf():
    law = posterior_conditional_distribution(HONEST, STD)
    x, h = 0.6, 1e-6
    assert (law.cdf(x + h) - law.cdf(x - h)) / (2 * h) == pytest.approx(law.pdf(x), rel=1e-5)


def test_conditional_law_domain():
    law = posterior_conditional_distribution(HONEST, STD)
    with pytest.raises(ValueError):
        law.pdf(1.0)
    with pytest.raises(UninformativeSignalsError):
        posterior_conditional_distribution(HONEST, SignalParams(0.5, 0.5, 0.5, 0.1))


def test_pooled_single_voter_matches_posterior():
    assert pooled_posterior([0.7], [0.1], STD) == pytest.approx(posterior(0.7, STD), rel=1e-14)


def test_pooled_weights_precise_voters_more():
    # direct product of likelihoods as the oracle
    raw, sds = [0.72, 0.55, 0.61], [0.05, 0.3, 0.1]
    lh = np.prod([stats.norm.pdf(r, 0.75, s) for r, s in zip(raw, sds)])
    lm = np.prod([stats.norm.pdf(r, 0.5, s) for r, s in zip(raw, sds)])
    expect = 0.75 * lh / (0.75 * lh + 0.25 * lm)
    assert pooled_posterior(raw, sds, STD) == pytest.approx(expect, rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-1, 2), st.floats(0.01, 1)), min_size=1, max_size=12), st.randoms())
def test_pooled_permutation_invariant(pairs, rnd):
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    a = pooled_posterior([r for r, _ in pairs], [s for _, s in pairs], STD)
    b = pooled_posterior([r for r, _ in shuffled], [s for _, s in shuffled], STD)
    assert a == b


def test_sample_signal_moments():
    rng = np.random.default_rng(0)
    s = sample_signal(HONEST, STD, rng, size=200_000)
    assert s.mean() == pytest.approx(0.75, abs=1e-3)
    assert s.std() == pytest.approx(0.1, rel=1e-2)
