"""Exact and bound-based probabilities that an elected committee is honest."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import stats

from .distributions import (
    log_binom,
    log_binomial_tail,
    order_stat_discrete,
)

BRUTEFORCE_BUDGET = 10**7
DEFAULT_K_MAX = 10**5
# per-election failure bound quoted for k = 1500 and 20% malicious stake
QUOTED_LOTTERY_FAILURE = 1e-12
QUOTED_ELECTIONS = 2 * 10**8


class BoundInapplicableError(ValueError):
    def __init__(self, msg: str = "bound-inapplicable"):
        super().__init__(msg)


class BudgetExceededError(RuntimeError):
    """The requested enumeration or search exceeds its configured budget."""


def as_fraction(rho) -> Fraction:
    """Parse ``"1/3"``, a :class:`Fraction` or a float into a fraction."""
    if isinstance(rho, Fraction):
        return rho
    if isinstance(rho, str):
        return Fraction(rho.strip())
    if isinstance(rho, int):
        return Fraction(rho)
    return Fraction(float(rho)).limit_denominator(10**6)


@dataclass(frozen=True)
class ToleranceSpec:
    """Byzantine tolerance ``rho``: a committee of ``k`` is honest when at least
    ``ceil((1 - rho) k)`` of its members are honest."""

    rho: Fraction = Fraction(1, 3)

    def __post_init__(self):
        r = as_fraction(self.rho)
        if not 0 < r < 1:
            raise ValueError(f"rho must lie in (0, 1), got {r}")
        object.__setattr__(self, "rho", r)

    def honest_needed(self, k: int) -> int:
        return math.ceil((1 - self.rho) * k)

    def dishonest_cap(self, k: int) -> int:
        return math.ceil(self.rho * k)

    def max_dishonest(self, k: int) -> int:
        """Largest number of dishonest members an honest committee can contain."""
        return k - self.honest_needed(k)


@dataclass(frozen=True)
class SuccessEstimate:
    value: float
    ci_low: float
    ci_high: float
    method: str
    trials: int | None = None
    successes: int | None = None

    def __post_init__(self):
        if self.method not in ("exact", "mc", "bound"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.ci_low <= self.value <= self.ci_high:
            raise ValueError("need ci_low <= value <= ci_high")

    @classmethod
    def exact(cls, value: float) -> "SuccessEstimate":
        value = min(1.0, max(0.0, value))
        return cls(value, value, value, "exact")

    @classmethod
    def bound(cls, value: float) -> "SuccessEstimate":
        return cls(value, value, value, "bound")


def _prior_log_weights(m: int, p: float) -> np.ndarray:
    a = np.arange(m + 1, dtype=float)
    lp = math.log(p) if p > 0 else -np.inf
    lq = math.log1p(-p) if p < 1 else -np.inf
    # 0 * log(0) is 0 here: the a = 0 and a = m terms must survive p in {0, 1}
    with np.errstate(invalid="ignore"):
        return log_binom(m, a) + np.where(a > 0, a * lp, 0.0) + np.where(a < m, (m - a) * lq, 0.0)


def success_threshold_exact(
    m: int,
    k: int,
    tol: ToleranceSpec,
    p: float,
    pmf_h,
    pmf_m,
    dishonest_rank: int | None = None,
    conditional: bool = False,
) -> SuccessEstimate:
    """Exact probability that the adversarially resolved committee is honest.

    Candidate vote counts must be independent, with law ``pmf_h`` for honest
    and ``pmf_m`` for malicious candidates (true for threshold voting).  Write
    ``H = ceil((1 - rho) k)``.  The committee is honest iff the ``H``-th highest
    honest score strictly beats the ``D``-th highest dishonest score, where
    ``D = k - H + 1`` and a missing score counts as minus infinity.  Ties go
    to the dishonest candidate, hence the strict inequality.

    ``dishonest_rank`` overrides ``D``; passing ``tol.dishonest_cap(k)`` gives
    the literal ``ceil(rho k)`` indexing, which differs from ``k - H + 1``
    whenever ``rho k`` is an integer.  With ``conditional=True`` the result is
    conditioned on at least ``H`` candidates being honest.
    """
    if k < 1 or m < k:
        raise ValueError(f"need 1 <= k <= m, got k={k}, m={m}")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    fh = np.asarray(pmf_h, dtype=float)
    fm = np.asarray(pmf_m, dtype=float)
    if fh.shape != fm.shape or fh.ndim != 1:
        raise ValueError("pmf_h and pmf_m must share the support 0..n")
    H = tol.honest_needed(k)
    D = k - H + 1 if dishonest_rank is None else int(dishonest_rank)
    if D < 1:
        raise ValueError("dishonest_rank must be positive")
    Fh, Fm = np.cumsum(fh), np.cumsum(fm)
    xs = np.arange(fh.size)
    log_w = _prior_log_weights(m, p)

    terms = []
    for a in range(H, m + 1):
        if not np.isfinite(log_w[a]):
            continue
        b = m - a
        if b < D:
            terms.append(math.exp(log_w[a]))
            continue
        # H-th largest of a honest scores is the (a - H + 1)-th smallest
        X = order_stat_discrete(fh, Fh, a - H + 1, a)
        Y = order_stat_discrete(fm, Fm, b - D + 1, b)
        px = X.pmf_at(xs)
        below = Y.cdf_at(xs - 1)
        inner = math.fsum((px * below).tolist())
        terms.append(math.exp(log_w[a]) * inner)
    value = math.fsum(terms)
    if conditional:
        mass = math.fsum(np.exp(log_w[H:]).tolist())
        value = value / mass if mass > 0 else 0.0
    return SuccessEstimate.exact(value)


def _enumerated_pbd(probs) -> np.ndarray:
    """Poisson binomial pmf by summing over all subsets of trials."""
    probs = list(probs)
    n = len(probs)
    masses = [[] for _ in range(n + 1)]
    for hits in itertools.product((0, 1), repeat=n):
        w = 1.0
        for h, q in zip(hits, probs):
            w *= q if h else 1.0 - q
        masses[sum(hits)].append(w)
    return np.array([math.fsum(c) for c in masses])


def success_bruteforce(m: int, n: int, k: int, tol: ToleranceSpec, p: float, p_h_votes, p_m_votes) -> float:
    """Success probability by enumerating every type vector and score vector.

    Scores of distinct candidates are independent given the types; each
    configuration is resolved with the simulator's adversarial rule.
    """
    from .simulator import resolve_adversarial_batch

    if len(p_h_votes) != n or len(p_m_votes) != n:
        raise ValueError("need one honest and one malicious vote probability per voter")
    if k < 1 or m < k:
        raise ValueError(f"need 1 <= k <= m, got k={k}, m={m}")
    size = (n + 1) ** m * 2**m
    if size > BRUTEFORCE_BUDGET:
        raise BudgetExceededError(f"(n+1)^m * 2^m = {size} exceeds the budget {BRUTEFORCE_BUDGET}")
    fh = _enumerated_pbd(p_h_votes)
    fm = _enumerated_pbd(p_m_votes)
    scores = np.array(list(itertools.product(range(n + 1), repeat=m)), dtype=np.int64)
    total = []
    for types in itertools.product((0, 1), repeat=m):
        t = np.array(types, dtype=bool)
        a = int(t.sum())
        prior = p**a * (1.0 - p) ** (m - a)
        if prior == 0.0:
            continue
        pmf = np.where(t[None, :], fh[scores], fm[scores]).prod(axis=1)
        honest = resolve_adversarial_batch(scores, np.broadcast_to(t, scores.shape), k, tol)
        total.append(prior * math.fsum(pmf[honest].tolist()))
    return math.fsum(total)


def asymptotic_lower_bound(m: int, n: int, delta: float) -> float:
    """``max(0, 1 - 2 m^2 exp(-delta^2 n / 2))`` for a vote-probability gap ``delta``."""
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    return max(0.0, 1.0 - 2.0 * m * m * math.exp(-delta * delta * n / 2.0))


def _check_lottery_args(k: int, p: float):
    if k < 1:
        raise ValueError("committee size must be positive")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")


def lottery_failure(k: int, p: float, tol: ToleranceSpec) -> float:
    """Exact ``Pr[Bin(k, p) < ceil((1 - rho) k)]``, accurate far below 1e-16."""
    _check_lottery_args(k, p)
    H = tol.honest_needed(k)
    if H == 0:
        return 0.0
    return math.exp(log_binomial_tail(k, p, H - 1, "at_most"))


def lottery_success(k: int, p: float, tol: ToleranceSpec, mode: str = "exact") -> float:
    """Probability that a committee of ``k`` seats drawn by stake lottery is honest.

    ``mode="chernoff"`` returns the multiplicative Chernoff lower bound
    ``1 - exp(-(1 - (1 - rho)/p)^2 p k / 2)``, valid only for ``p > 1 - rho``.
    """
    _check_lottery_args(k, p)
    if mode == "exact":
        return math.exp(log_binomial_tail(k, p, tol.honest_needed(k), "at_least"))
    if mode != "chernoff":
        raise ValueError(f"unknown mode {mode!r}")
    keep = 1 - tol.rho
    if not p > keep:
        raise BoundInapplicableError()
    if p == 1.0:
        # every seat is honest; the bound is not needed
        return 1.0
    eps = 1.0 - float(keep) / p
    return -math.expm1(-eps * eps * p * k / 2.0)


def lottery_failure_hoeffding(k: int, p: float, tol: ToleranceSpec) -> float:
    """Additive Chernoff-Hoeffding bound ``exp(-2 (p - (1 - rho))^2 k)`` on lottery failure."""
    _check_lottery_args(k, p)
    gap = p - float(1 - tol.rho)
    if not gap > 0:
        raise BoundInapplicableError()
    return math.exp(-2.0 * gap * gap * k)


def lifetime_fork_bound(per_election_failure: float, num_elections: int) -> float:
    """Union bound on ever electing a dishonest committee."""
    if per_election_failure < 0 or num_elections < 0:
        raise ValueError("inputs must be non-negative")
    return min(1.0, num_elections * per_election_failure)


def two_voter_cardinal_dishonest(
    z0: int, z1: int, m: int, k: int, t_byz: int, q_dishonest, exact: bool = False
):
    """Dishonest-committee probability when two cardinal voters pick uniformly.

    Voter 0 approves ``z0`` candidates and voter 1 approves ``z1``, both
    uniformly at random among ``m``; the overlap is hypergeometric and each
    distinct approved candidate is dishonest independently with
    ``q_dishonest``.  The committee fails when more than ``t_byz`` of them
    are dishonest.  Evaluated in rational arithmetic; ``exact=True`` returns
    the :class:`Fraction`.
    """
    if max(z0, z1) < k:
        raise ValueError("requires max(z0, z1) >= k")
    if not (0 <= z0 <= m and 0 <= z1 <= m):
        raise ValueError("need 0 <= z0, z1 <= m")
    q = Fraction(q_dishonest)
    if not 0 <= q <= 1:
        raise ValueError("q_dishonest must lie in [0, 1]")
    total = Fraction(0)
    denom = math.comb(m, z1)
    for a in range(max(0, z0 + z1 - m), min(z0, z1) + 1):
        hyper = Fraction(math.comb(z0, a) * math.comb(m - z0, z1 - a), denom)
        size = z0 + z1 - a
        tail = sum(
            (math.comb(size, j) * q**j * (1 - q) ** (size - j) for j in range(t_byz + 1, size + 1)),
            Fraction(0),
        )
        total += hyper * tail
    return total if exact else float(total)


def min_committee_size(
    target_failure: float,
    method: str,
    ctx,
    k_max: int = DEFAULT_K_MAX,
    trials: int = 100_000,
    k_min: int = 1,
    **estimate_kwargs,
) -> int:
    """Smallest committee size whose failure probability meets ``target_failure``.

    ``method="lottery"``: ``ctx`` is ``(p, rho)`` and the exact binomial failure
    is used.  ``method="voting"``: ``ctx`` is an ``ElectionConfig`` whose ``k``
    is varied; a size qualifies when the upper end of the 99% Wilson interval
    on the simulated failure rate is at most the target.

    Failure is not monotone in ``k`` (it jumps whenever ``ceil((1 - rho) k)``
    steps up) so sizes are scanned in increasing order.
    """
    if not 0.0 < target_failure <= 1.0:
        raise ValueError("target_failure must lie in (0, 1]")
    if method == "lottery":
        p, rho = ctx
        tol = rho if isinstance(rho, ToleranceSpec) else ToleranceSpec(rho)
        return _min_lottery_size(target_failure, p, tol, k_min, k_max)
    if method == "voting":
        return _min_voting_size(target_failure, ctx, k_min, k_max, trials, **estimate_kwargs)
    raise ValueError(f"unknown method {method!r}")


def _min_lottery_size(target: float, p: float, tol: ToleranceSpec, k_min: int, k_max: int) -> int:
    log_target = math.log(target)
    chunk = 4096
    for start in range(k_min, k_max + 1, chunk):
        ks = np.arange(start, min(k_max, start + chunk - 1) + 1)
        H = np.array([tol.honest_needed(int(k)) for k in ks])
        # screen with the incomplete-beta cdf, then confirm on the log-space path
        screen = stats.binom.logcdf(H - 1, ks, p)
        for k in ks[screen <= log_target + 1e-6]:
            k = int(k)
            if lottery_failure(k, p, tol) <= target:
                return k
    raise BudgetExceededError(f"no lottery committee size <= {k_max} reaches failure {target:g}")


def _min_voting_size(target: float, cfg, k_min: int, k_max: int, trials: int, **kwargs) -> int:
    from .simulator import estimate_success

    upper = min(k_max, cfg.m)
    for k in range(k_min, upper + 1):
        est = estimate_success(cfg.with_k(k), trials, **kwargs)
        if 1.0 - est.ci_low <= target:
            return k
    raise BudgetExceededError(f"no voting committee size <= {upper} reaches failure {target:g}")
