"""Voting strategies and the per-voter probabilities of voting for a candidate.

Three strategy kinds are supported: ``threshold`` votes for every candidate
whose posterior exceeds ``z``; ``cardinal`` votes for the ``z`` candidates with
the highest posteriors; ``abstain`` casts no vote.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, stats

from .distributions import log_binom, two_population_order_cdf
from .signal_model import HONEST, MALICIOUS, SignalParams, posterior_inverse

THRESHOLD = "threshold"
CARDINAL = "cardinal"
ABSTAIN = "abstain"
KINDS = (THRESHOLD, CARDINAL, ABSTAIN)

QUAD_EPSABS = 1e-8
# raw-signal integration window, in noise standard deviations around the means
QUAD_SPAN = 12.0


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested accuracy."""

    def __init__(self, what: str, abserr: float, detail: str = ""):
        self.what = what
        self.abserr = abserr
        msg = f"quadrature for {what} did not converge (abserr={abserr:.3g})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


@dataclass(frozen=True)
class Strategy:
    kind: str
    z: float | int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == THRESHOLD:
            if self.z is None or not 0.0 <= float(self.z) <= 1.0:
                raise ValueError(f"threshold z must lie in [0, 1], got {self.z}")
            object.__setattr__(self, "z", float(self.z))
        elif self.kind == CARDINAL:
            if self.z is None or int(self.z) != self.z or int(self.z) < 1:
                raise ValueError(f"cardinal z must be a positive integer, got {self.z}")
            object.__setattr__(self, "z", int(self.z))
        else:
            object.__setattr__(self, "z", None)

    @classmethod
    def threshold(cls, z: float) -> "Strategy":
        return cls(THRESHOLD, z)

    @classmethod
    def cardinal(cls, z: int) -> "Strategy":
        return cls(CARDINAL, z)

    @classmethod
    def abstain(cls) -> "Strategy":
        return cls(ABSTAIN)

    def check_cap(self, m: int, cap: int):
        if self.kind == CARDINAL:
            if self.z > m:
                raise ValueError(f"cardinal z={self.z} exceeds the number of candidates m={m}")
            if self.z > cap:
                raise ValueError(f"cardinal z={self.z} exceeds the vote cap t={cap}")

    def __str__(self):
        return self.kind if self.z is None else f"{self.kind}({self.z:g})"


SINGLE_CHOICE = Strategy.cardinal(1)


def _top_indices(values: np.ndarray, count: int) -> np.ndarray:
    # stable sort on the negated values: equal posteriors keep the lower index first
    order = np.argsort(-values, kind="stable")
    return order[:count]


def apply_strategy(posteriors, strategy: Strategy, cap: int) -> frozenset:
    """Candidate indices a voter approves of, given one posterior per candidate."""
    s = np.asarray(posteriors, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("posteriors must be a non-empty 1-d sequence")
    m = s.size
    if cap < 0:
        raise ValueError("cap must be non-negative")
    strategy.check_cap(m, cap)
    if strategy.kind == ABSTAIN:
        return frozenset()
    if strategy.kind == CARDINAL:
        return frozenset(int(i) for i in _top_indices(s, strategy.z))
    above = np.flatnonzero(s > strategy.z)
    if above.size > cap:
        above = _top_indices(np.where(s > strategy.z, s, -np.inf), cap)
    return frozenset(int(i) for i in above)


def vote_matrix(posteriors: np.ndarray, strategy: Strategy, cap: int) -> np.ndarray:
    """Boolean approvals for a batch: ``posteriors[..., j]`` -> ``votes[..., j]``.

    Equivalent to calling :func:`apply_strategy` on every row, including the
    lowest-index tie rule and the truncation of threshold ballots to ``cap``.
    """
    s = np.asarray(posteriors, dtype=float)
    m = s.shape[-1]
    strategy.check_cap(m, cap)
    if strategy.kind == ABSTAIN:
        return np.zeros(s.shape, dtype=bool)
    if strategy.kind == THRESHOLD:
        votes = s > strategy.z
        if cap >= m:
            return votes
        over = votes.sum(axis=-1) > cap
        if not np.any(over):
            return votes
        z = strategy.z
        count = cap
    else:
        votes = None
        over = None
        z = None
        count = strategy.z
    ranks = np.argsort(-s, axis=-1, kind="stable")
    top = np.zeros(s.shape, dtype=bool)
    np.put_along_axis(top, ranks[..., :count], True, axis=-1)
    if votes is None:
        return top
    top &= s > z
    return np.where(over[..., None], top, votes)


class VoteProbs(NamedTuple):
    p_h_vote: float
    p_m_vote: float


def threshold_vote_probs(z: float, params: SignalParams) -> VoteProbs:
    """Probabilities that a threshold-``z`` voter approves an honest / malicious candidate."""
    if not 0.0 <= z <= 1.0:
        raise ValueError(f"threshold z must lie in [0, 1], got {z}")
    if z == 0.0:
        return VoteProbs(1.0, 1.0)
    if z == 1.0:
        return VoteProbs(0.0, 0.0)
    if not params.informative:
        # every posterior equals the prior
        v = 1.0 if params.prior_honest > z else 0.0
        return VoteProbs(v, v)
    cut = posterior_inverse(z, params)
    sd = params.noise_sd
    return VoteProbs(
        float(stats.norm.sf((cut - params.base_honest) / sd)),
        float(stats.norm.sf((cut - params.base_malicious) / sd)),
    )


def _window(params: SignalParams):
    sd = params.noise_sd
    return params.base_malicious - QUAD_SPAN * sd, params.base_honest + QUAD_SPAN * sd


def _integrate(fn, params: SignalParams, what: str) -> float:
    lo, hi = _window(params)
    pts = [params.base_malicious, params.base_honest]
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(fn, lo, hi, points=pts, epsabs=QUAD_EPSABS * 0.01, epsrel=1e-10, limit=200)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(what, float("nan"), str(exc)) from None
    if not err <= QUAD_EPSABS:
        raise QuadratureError(what, err, f"window=({lo:.4g}, {hi:.4g})")
    return val


def _prior_weights(count: int, p: float) -> np.ndarray:
    j = np.arange(count + 1)
    return np.exp(log_binom(count, j) + j * math.log(p) + (count - j) * math.log1p(-p))


def cardinal_vote_probs(z: int, params: SignalParams, m: int) -> VoteProbs:
    """Probabilities that a cardinal-``z`` voter approves an honest / malicious candidate.

    The other ``m - 1`` candidates are honest independently with the prior
    probability.  Conditioning on ``a`` of them being honest, the target is in
    the voter's top ``z`` when the ``(m - z)``-th smallest competing signal lies
    below the target's signal, whose law is the two-population order
    statistic.  Ranking posteriors and ranking raw signals agree because the
    posterior is increasing in the raw signal, so the integral runs over raw
    signals.
    """
    params._require_informative()
    if not 1 <= z <= m:
        raise ValueError(f"cardinal z={z} outside 1..{m}")
    if z == m:
        return VoteProbs(1.0, 1.0)
    others = m - 1
    rank = m - z
    weights = _prior_weights(others, params.prior_honest)
    sd = params.noise_sd
    ph, pm = params.base_honest, params.base_malicious

    def F_h(x):
        return stats.norm.cdf((x - ph) / sd)

    def F_m(x):
        return stats.norm.cdf((x - pm) / sd)

    def beats(x):
        return math.fsum(
            w * two_population_order_cdf(F_h, F_m, a, others - a, rank, x)
            for a, w in enumerate(weights)
            if w > 0.0
        )

    out = []
    for base, label in ((ph, "honest"), (pm, "malicious")):
        dens = stats.norm(base, sd).pdf
        val = _integrate(lambda x: beats(x) * dens(x), params, f"cardinal z={z} {label}")
        out.append(min(1.0, max(0.0, val)))
    return VoteProbs(*out)


def single_choice_vote_probs(params: SignalParams, m: int) -> VoteProbs:
    """Vote probabilities for a voter who approves only their top candidate.

    Computed from the probability that the target's signal exceeds the best
    honest and the best malicious competitor, which is an independent route
    to ``cardinal_vote_probs(1, params, m)``.
    """
    params._require_informative()
    if m < 1:
        raise ValueError("m must be positive")
    if m == 1:
        return VoteProbs(1.0, 1.0)
    p = params.prior_honest
    sd = params.noise_sd
    ph, pm = params.base_honest, params.base_malicious
    n_h = stats.norm(ph, sd)
    n_m = stats.norm(pm, sd)

    def honest_integrand(x):
        Fh, Fm, fh = n_h.cdf(x), n_m.cdf(x), n_h.pdf(x)
        # a honest candidates in total, the target among them
        return math.fsum(
            math.comb(m - 1, a - 1) * p ** (a - 1) * (1 - p) ** (m - a) * Fm ** (m - a) * Fh ** (a - 1) * fh
            for a in range(1, m + 1)
        )

    def malicious_integrand(x):
        Fh, Fm, fm = n_h.cdf(x), n_m.cdf(x), n_m.pdf(x)
        return math.fsum(
            math.comb(m - 1, b - 1) * (1 - p) ** (b - 1) * p ** (m - b) * Fh ** (m - b) * Fm ** (b - 1) * fm
            for b in range(1, m + 1)
        )

    h = _integrate(honest_integrand, params, "single choice honest")
    d = _integrate(malicious_integrand, params, "single choice malicious")
    return VoteProbs(min(1.0, max(0.0, h)), min(1.0, max(0.0, d)))


def vote_probs(strategy: Strategy, params: SignalParams, m: int) -> VoteProbs:
    """Dispatch to the closed form for ``strategy``."""
    if strategy.kind == ABSTAIN:
        return VoteProbs(0.0, 0.0)
    if strategy.kind == THRESHOLD:
        return threshold_vote_probs(strategy.z, params)
    return cardinal_vote_probs(strategy.z, params, m)


__all__ = [
    "ABSTAIN",
    "CARDINAL",
    "QuadratureError",
    "SINGLE_CHOICE",
    "Strategy",
    "THRESHOLD",
    "VoteProbs",
    "apply_strategy",
    "cardinal_vote_probs",
    "single_choice_vote_probs",
    "threshold_vote_probs",
    "vote_matrix",
    "vote_probs",
]
