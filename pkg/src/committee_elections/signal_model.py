"""Noisy private signals about producer honesty and their Bayesian posteriors.

A voter observing producer ``j`` receives a raw signal ``s* = base + eps`` with
``eps ~ N(0, sigma^2)``, where ``base`` is ``base_honest`` for an honest producer
and ``base_malicious`` otherwise.  The posterior probability of honesty given
``s*`` is a logistic function of a log-likelihood ratio; every function here
works on that log-odds to stay finite for extreme signals.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special, stats

# posteriors are kept inside [EPS, 1 - EPS] so that logit() never diverges
POSTERIOR_EPS = 1e-15


class ProducerType(enum.IntEnum):
    MALICIOUS = 0
    HONEST = 1


HONEST = ProducerType.HONEST
MALICIOUS = ProducerType.MALICIOUS


class UninformativeSignalsError(ValueError):
    """Raised when an operation needs ``base_honest > base_malicious``."""

    def __init__(self, msg: str = "uninformative-signals"):
        super().__init__(msg)


@dataclass(frozen=True)
class SignalParams:
    """Prior and signal-noise parameters seen by one voter.

    ``base_honest == base_malicious`` is allowed and describes voters whose
    signals carry no information; posteriors then equal the prior.
    """

    prior_honest: float
    base_honest: float
    base_malicious: float
    noise_sd: float

    def __post_init__(self):
        if not 0.0 < self.prior_honest < 1.0:
            raise ValueError(f"prior_honest must lie in (0, 1), got {self.prior_honest}")
        if not self.noise_sd > 0.0:
            raise ValueError(f"noise_sd must be positive, got {self.noise_sd}")
        if self.base_honest < self.base_malicious:
            raise ValueError("base_honest must be >= base_malicious")

    @property
    def informative(self) -> bool:
        return self.base_honest > self.base_malicious

    @property
    def gap(self) -> float:
        return self.base_honest - self.base_malicious

    def base(self, producer_type: ProducerType) -> float:
        return self.base_honest if producer_type == HONEST else self.base_malicious

    def with_noise(self, noise_sd: float) -> "SignalParams":
        return SignalParams(self.prior_honest, self.base_honest, self.base_malicious, noise_sd)

    def _require_informative(self):
        if not self.informative:
            raise UninformativeSignalsError()


def sample_signal(producer_type, params: SignalParams, rng: np.random.Generator, size=None):
    """Draw raw signal(s) ``base + N(0, noise_sd^2)`` for the given producer type(s).

    ``producer_type`` may be a single type or an array of 0/1 flags, in which
    case one signal is drawn per entry (``size`` then defaults to its shape).
    """
    if np.ndim(producer_type) == 0:
        base = params.base(ProducerType(int(producer_type)))
    else:
        flags = np.asarray(producer_type, dtype=bool)
        base = np.where(flags, params.base_honest, params.base_malicious)
        if size is None:
            size = flags.shape
    noise = rng.standard_normal(size)
    out = base + params.noise_sd * noise
    return float(out) if np.ndim(out) == 0 else out


def _clamp(s):
    return np.clip(s, POSTERIOR_EPS, 1.0 - POSTERIOR_EPS)


def log_likelihood_ratio(s_star, base_honest, base_malicious, noise_sd):
    """log f(s*|M) - log f(s*|H) for Gaussian noise.

    Written as ``(p_m - p_h)(2 s* - p_h - p_m) / (2 sigma^2)`` which is the
    expanded difference of squares without the cancellation.
    """
    s_star = np.asarray(s_star, dtype=float)
    return (base_malicious - base_honest) * (2.0 * s_star - base_honest - base_malicious) / (
        2.0 * np.square(noise_sd)
    )


def _posterior_from_exponent(exponent, prior_honest):
    # 1 / (1 + (1-p)/p * e^L) == expit(-(L + log((1-p)/p))); expit is sign-stable
    log_odds = exponent + np.log1p(-prior_honest) - np.log(prior_honest)
    out = _clamp(special.expit(-log_odds))
    return float(out) if np.ndim(out) == 0 else out


def posterior(s_star, params: SignalParams):
    """Posterior probability that a producer is honest given raw signal(s) ``s_star``."""
    exponent = log_likelihood_ratio(s_star, params.base_honest, params.base_malicious, params.noise_sd)
    return _posterior_from_exponent(exponent, params.prior_honest)


def posterior_inverse(q, params: SignalParams):
    """Raw signal whose posterior equals ``q`` (the inverse of :func:`posterior`)."""
    params._require_informative()
    q = np.asarray(q, dtype=float)
    if np.any((q <= 0.0) | (q >= 1.0)):
        raise ValueError("q must lie strictly inside (0, 1)")
    p = params.prior_honest
    ph, pm, sd = params.base_honest, params.base_malicious, params.noise_sd
    log_term = np.log(p) + np.log1p(-q) - np.log1p(-p) - np.log(q)
    out = (ph * ph - pm * pm - 2.0 * sd * sd * log_term) / (2.0 * (ph - pm))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class PosteriorLaw:
    """Distribution of the posterior ``s`` conditioned on the producer's type."""

    producer_type: ProducerType
    params: SignalParams

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if np.any((x <= 0.0) | (x >= 1.0)):
            raise ValueError("posterior values must lie strictly inside (0, 1)")
        return x

    def cdf(self, x):
        x = self._check(x)
        base = self.params.base(self.producer_type)
        out = stats.norm.cdf((posterior_inverse(x, self.params) - base) / self.params.noise_sd)
        return float(out) if np.ndim(out) == 0 else out

    def pdf(self, x):
        x = self._check(x)
        prm = self.params
        p, sd, gap = prm.prior_honest, prm.noise_sd, prm.gap
        log_term = np.log(p) + np.log1p(-x) - np.log1p(-p) - np.log(x)
        sign = 1.0 if self.producer_type == HONEST else -1.0
        arg = (gap * gap + sign * 2.0 * sd * sd * log_term) / (2.0 * np.sqrt(2.0) * sd * gap)
        out = sd / (np.sqrt(2.0 * np.pi) * x * (1.0 - x) * gap) * np.exp(-arg * arg)
        return float(out) if np.ndim(out) == 0 else out


def posterior_conditional_distribution(producer_type, params: SignalParams) -> PosteriorLaw:
    """pdf/cdf of the posterior for an honest or a malicious producer."""
    params._require_informative()
    return PosteriorLaw(ProducerType(int(producer_type)), params)


def pooled_posterior(raw_signals: Sequence[float], noise_sds: Sequence[float], params: SignalParams):
    """Posterior of honesty given every voter's signal about the same producer.

    Each voter's noise level enters its own log-likelihood term, so a precise
    voter's signal weighs more than a noisy one.  ``params.noise_sd`` is unused.
    """
    raw = np.asarray(raw_signals, dtype=float)
    sds = np.asarray(noise_sds, dtype=float)
    if raw.size == 0:
        raise ValueError("pooled_posterior needs at least one signal")
    if raw.shape != sds.shape:
        raise ValueError("raw_signals and noise_sds must have the same length")
    if np.any(sds <= 0):
        raise ValueError("noise_sds must be positive")
    # fsum is correctly rounded, which makes the result independent of signal order
    terms = log_likelihood_ratio(raw, params.base_honest, params.base_malicious, sds)
    exponent = math.fsum(np.ravel(terms).tolist())
    return _posterior_from_exponent(exponent, params.prior_honest)


def raw_cdf(producer_type, params: SignalParams) -> Callable:
    """CDF of the raw signal for a type, as a function of ``s*``."""
    base = params.base(ProducerType(int(producer_type)))
    return lambda u: stats.norm.cdf((np.asarray(u, dtype=float) - base) / params.noise_sd)
