"""Monte Carlo elections with worst-case (adversarial) committee resolution.

Randomness for trial ``i`` of a run seeded with ``seed`` comes from Philox
generators keyed by ``(seed, i)``; the stream role (candidate types or signal
noise) sits in the high word of the counter.  A trial therefore draws the
same numbers whichever block or worker executes it.
"""

from __future__ import annotations

import functools
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy import stats

from .analytics import SuccessEstimate, ToleranceSpec
from .distributions import pbd_pmf
from .signal_model import SignalParams, _posterior_from_exponent, log_likelihood_ratio, posterior
from .strategies import ABSTAIN, THRESHOLD, Strategy, threshold_vote_probs, vote_matrix

TYPES_STREAM = 0
NOISE_STREAM = 1
BLOCK_TRIALS = 512
# cap on floats materialized per block by the signal engine
BLOCK_CELLS = 4_000_000
CONFIDENCE = 0.99
_U64 = (1 << 64) - 1


def trial_generator(seed: int, trial_index: int, role: int) -> np.random.Generator:
    """A fresh generator for one stream of one trial."""
    return TrialStreams().get(seed, trial_index, role)


class TrialStreams:
    """Re-keys a single Philox generator per trial.

    Constructing a Philox object costs far more than resetting its state, so
    block workers keep one of these and call :meth:`get` for every trial.
    Not thread-safe; use one instance per worker.
    """

    def __init__(self):
        self._bits = np.random.Philox(0)
        self._gen = np.random.Generator(self._bits)

    def get(self, seed: int, trial_index: int, role: int) -> np.random.Generator:
        self._bits.state = {
            "bit_generator": "Philox",
            "state": {
                "counter": np.array([0, 0, 0, role], dtype=np.uint64),
                "key": np.array([seed & _U64, trial_index & _U64], dtype=np.uint64),
            },
            "buffer": np.zeros(4, dtype=np.uint64),
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }
        return self._gen


@dataclass(frozen=True)
class ElectionConfig:
    """One election setting.  Voters share the prior and signal means and
    may differ in noise level and strategy."""

    m: int
    n: int
    k: int
    t: int
    tol: ToleranceSpec
    params_per_voter: tuple
    strategies: tuple
    seed: int = 0
    prior: float | None = None
    shared_signals: bool = False

    def __post_init__(self):
        object.__setattr__(self, "params_per_voter", tuple(self.params_per_voter))
        object.__setattr__(self, "strategies", tuple(self.strategies))
        if not self.m >= self.k >= 1:
            raise ValueError("m >= k >= 1 violated")
        if not 1 <= self.t <= self.m:
            raise ValueError("1 <= t <= m violated")
        if self.n < 0:
            raise ValueError("n >= 0 violated")
        if len(self.params_per_voter) != self.n or len(self.strategies) != self.n:
            raise ValueError("params_per_voter and strategies need one entry per voter")
        if not 0 <= self.seed <= _U64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        shared = {(q.prior_honest, q.base_honest, q.base_malicious) for q in self.params_per_voter}
        if len(shared) > 1:
            raise ValueError("voters must share the prior and the signal means")
        if self.prior is None:
            if self.n == 0:
                raise ValueError("prior is required when there are no voters")
            object.__setattr__(self, "prior", self.params_per_voter[0].prior_honest)
        elif self.n and abs(self.prior - self.params_per_voter[0].prior_honest) > 1e-9:
            raise ValueError("prior disagrees with the voters' signal parameters")
        if not 0.0 <= self.prior <= 1.0:
            raise ValueError("prior must lie in [0, 1]")
        for s in self.strategies:
            s.check_cap(self.m, self.t)

    @classmethod
    def uniform(
        cls,
        m: int,
        n: int,
        k: int,
        t: int,
        p: float,
        p_h: float,
        p_m: float,
        sigma,
        strategy: Strategy,
        rho="1/3",
        seed: int = 0,
        **kw,
    ) -> "ElectionConfig":
        """Every voter uses ``strategy``; ``sigma`` is a scalar or one value per voter."""
        sigmas = [float(sigma)] * n if np.ndim(sigma) == 0 else [float(s) for s in sigma]
        if len(sigmas) != n:
            raise ValueError("sigma list must have one entry per voter")
        # the prior must be interior for posteriors; 0 and 1 are legal for the world itself
        q = min(max(p, 1e-12), 1 - 1e-12)
        params = tuple(SignalParams(q, p_h, p_m, s) for s in sigmas)
        tol = rho if isinstance(rho, ToleranceSpec) else ToleranceSpec(rho)
        cfg = cls(m, n, k, t, tol, params, (strategy,) * n, seed, prior=q if n else p, **kw)
        return replace(cfg, prior=p) if p != q else cfg

    def with_k(self, k: int) -> "ElectionConfig":
        return replace(self, k=k)

    @property
    def honest_needed(self) -> int:
        return self.tol.honest_needed(self.k)


class ElectionOutcome(NamedTuple):
    scores: tuple
    committee: frozenset
    honest_count: int
    is_honest: bool


def resolve_adversarial(scores, types, k: int, tol: ToleranceSpec):
    """Seat the top ``k`` scores, breaking every tie (including the zero-vote
    fill) in favour of dishonest candidates, then lowest index.

    Returns ``(committee, is_honest)``.
    """
    s = np.asarray(scores)
    h = np.asarray(types, dtype=bool)
    if s.shape != h.shape or s.ndim != 1:
        raise ValueError("scores and types must be 1-d of equal length")
    if not 1 <= k <= s.size:
        raise ValueError("need 1 <= k <= m")
    order = np.lexsort((np.arange(s.size), h, -s))
    committee = frozenset(int(i) for i in order[:k])
    honest = int(h[order[:k]].sum())
    return committee, honest >= tol.honest_needed(k)


def _honest_in_top(keys: np.ndarray, k: int) -> np.ndarray:
    top = -np.partition(-keys, k - 1, axis=-1)[..., :k]
    return (top % 2 == 0).sum(axis=-1)


def resolve_adversarial_batch(scores, types, k: int, tol: ToleranceSpec) -> np.ndarray:
    """Row-wise ``is_honest`` of :func:`resolve_adversarial` for 2-d inputs."""
    s = np.asarray(scores, dtype=np.int64)
    h = np.asarray(types, dtype=bool)
    # dishonest gets the odd key, so it wins ties on score; equal keys share a type
    keys = 2 * s + (~h).astype(np.int64)
    return _honest_in_top(keys, k) >= tol.honest_needed(k)


def _sigmas(cfg: ElectionConfig) -> np.ndarray:
    return np.array([q.noise_sd for q in cfg.params_per_voter], dtype=float)


def _draw_world(cfg: ElectionConfig, trial_index: int, streams: TrialStreams | None = None):
    streams = streams or TrialStreams()
    types = streams.get(cfg.seed, trial_index, TYPES_STREAM).random(cfg.m) < cfg.prior
    noise = streams.get(cfg.seed, trial_index, NOISE_STREAM).standard_normal((cfg.n, cfg.m))
    return types, noise


def _posteriors(cfg: ElectionConfig, types: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Posterior of each voter about each candidate: shape ``(..., n, m)``."""
    if cfg.n == 0:
        return np.zeros(noise.shape)
    q = cfg.params_per_voter[0]
    sd = _sigmas(cfg)[:, None]
    raw = np.where(types[..., None, :], q.base_honest, q.base_malicious) + sd * noise
    if not cfg.shared_signals:
        return posterior(raw, q)
    # every voter sees the pooled evidence of all voters
    llr = log_likelihood_ratio(raw, q.base_honest, q.base_malicious, sd).sum(axis=-2)
    pooled = np.asarray(_posterior_from_exponent(llr, q.prior_honest))
    return np.broadcast_to(pooled[..., None, :], raw.shape)


def _tally(cfg: ElectionConfig, post: np.ndarray):
    """Scores ``(..., m)`` and whether any threshold ballot hit the cap."""
    scores = np.zeros(post.shape[:-2] + (cfg.m,), dtype=np.int64)
    truncated = False
    groups: dict = {}
    for i, s in enumerate(cfg.strategies):
        groups.setdefault(s, []).append(i)
    for strat, idx in groups.items():
        if strat.kind == ABSTAIN:
            continue
        sub = post[..., idx, :]
        if strat.kind == THRESHOLD and cfg.t < cfg.m:
            truncated |= bool(((sub > strat.z).sum(axis=-1) > cfg.t).any())
        scores += vote_matrix(sub, strat, cfg.t).sum(axis=-2)
    return scores, truncated


def run_election(cfg: ElectionConfig, trial_index: int) -> ElectionOutcome:
    """Simulate a single election; deterministic in ``(cfg.seed, trial_index)``."""
    types, noise = _draw_world(cfg, trial_index)
    scores, _ = _tally(cfg, _posteriors(cfg, types, noise))
    committee, ok = resolve_adversarial(scores, types, cfg.k, cfg.tol)
    honest = int(types[list(committee)].sum())
    return ElectionOutcome(tuple(int(x) for x in scores), committee, honest, bool(ok))


def _signal_block(cfg: ElectionConfig, start: int, stop: int):
    streams = TrialStreams()
    worlds = [_draw_world(cfg, i, streams) for i in range(start, stop)]
    types = np.stack([w[0] for w in worlds])
    noise = np.stack([w[1] for w in worlds])
    scores, truncated = _tally(cfg, _posteriors(cfg, types, noise))
    ok = resolve_adversarial_batch(scores, types, cfg.k, cfg.tol)
    return int(ok.sum()), truncated


def aggregate_eligible(cfg: ElectionConfig) -> bool:
    """True when candidate scores are independent given the types, i.e. every
    voter uses a threshold (or abstains), signals are private and the vote
    cap can never bind."""
    return (
        not cfg.shared_signals
        and cfg.t >= cfg.m
        and all(s.kind in (THRESHOLD, ABSTAIN) for s in cfg.strategies)
    )


def score_pmfs(cfg: ElectionConfig):
    """Vote-count laws of an honest and of a malicious candidate under ``cfg``."""
    return _score_pmfs(cfg.params_per_voter, cfg.strategies)


@functools.lru_cache(maxsize=64)
def _score_pmfs(params_per_voter: tuple, strategies: tuple):
    probs = {}
    ph, pm = [], []
    for q, s in zip(params_per_voter, strategies):
        if s.kind == ABSTAIN:
            continue
        if (q, s) not in probs:
            probs[q, s] = threshold_vote_probs(s.z, q)
        v = probs[q, s]
        ph.append(v.p_h_vote)
        pm.append(v.p_m_vote)
    return pbd_pmf(ph), pbd_pmf(pm)


def _top_order_scores(cdf: np.ndarray, count: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Largest ``r`` of ``count`` iid draws from a discrete law, by inversion.

    ``v`` has shape ``(B, r)`` of uniforms in (0, 1]; the ``i``-th largest
    uniform of ``N`` has log ``sum_{l <= i} log(v_l) / (N - l + 1)``.  Slots
    beyond ``count`` are returned as -1.
    """
    r = v.shape[1]
    l = np.arange(1, r + 1)
    denom = count[:, None] - l[None, :] + 1
    valid = denom > 0
    log_u = np.cumsum(np.log(v) / np.where(valid, denom, 1), axis=1)
    u = np.exp(log_u)
    out = np.searchsorted(cdf, u, side="left")
    out = np.minimum(out, cdf.size - 1)
    return np.where(valid, out, -1)


def _aggregate_block(cfg: ElectionConfig, cdfs, start: int, stop: int):
    cdf_h, cdf_m = cdfs
    r = cfg.k
    streams = TrialStreams()
    types_count, vh, vm = [], [], []
    for i in range(start, stop):
        # only the number of honest candidates matters once scores are exchangeable
        types_count.append(int(streams.get(cfg.seed, i, TYPES_STREAM).binomial(cfg.m, cfg.prior)))
        g = streams.get(cfg.seed, i, NOISE_STREAM)
        # 1 - U lies in (0, 1], so its log is finite
        vh.append(1.0 - g.random(r))
        vm.append(1.0 - g.random(r))
    a = np.array(types_count)
    top_h = _top_order_scores(cdf_h, a, np.array(vh))
    top_m = _top_order_scores(cdf_m, cfg.m - a, np.array(vm))
    keys = np.concatenate([2 * top_h, 2 * top_m + 1], axis=1)
    # missing candidates get a key below every real one
    keys = np.where(np.concatenate([top_h, top_m], axis=1) < 0, -2, keys)
    ok = _honest_in_top(keys, cfg.k) >= cfg.honest_needed
    return int(ok.sum()), False


def wilson_interval(successes: int, trials: int, confidence: float = CONFIDENCE):
    ci = stats.binomtest(successes, trials).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


def estimate_success(
    cfg: ElectionConfig,
    trials: int,
    engine: str = "auto",
    workers: int | None = None,
    first_trial: int = 0,
) -> SuccessEstimate:
    """Fraction of honest committees over ``trials`` simulated elections, with a
    99% Wilson interval.

    ``engine="signals"`` simulates every voter's signals and ballots.
    ``engine="aggregate"`` samples only the top ``k`` scores of each candidate
    type from their exact vote-count laws, which has the same distribution
    when :func:`aggregate_eligible` holds and costs O(k) per trial instead of
    O(n m).  ``"auto"`` picks the aggregate engine for eligible configs with
    more than 10^5 voter-candidate pairs.  Results do not depend on
    ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if engine == "auto":
        engine = "aggregate" if aggregate_eligible(cfg) and cfg.n * cfg.m > 100_000 else "signals"
    if engine == "aggregate":
        if not aggregate_eligible(cfg):
            raise ValueError("aggregate engine needs private threshold/abstain voters and t >= m")
        fh, fm = score_pmfs(cfg)
        cdfs = (fh.cdf(), fm.cdf())
        block = BLOCK_TRIALS

        def work(lo, hi):
            return _aggregate_block(cfg, cdfs, lo, hi)

    elif engine == "signals":
        block = max(1, min(BLOCK_TRIALS, BLOCK_CELLS // max(1, cfg.n * cfg.m)))

        def work(lo, hi):
            return _signal_block(cfg, lo, hi)

    else:
        raise ValueError(f"unknown engine {engine!r}")

    stop = first_trial + trials
    bounds = [(lo, min(lo + block, stop)) for lo in range(first_trial, stop, block)]
    if workers is None or workers <= 1 or len(bounds) == 1:
        results = [work(lo, hi) for lo, hi in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda b: work(*b), bounds))
    successes = sum(r[0] for r in results)
    if any(r[1] for r in results):
        warnings.warn(
            f"threshold ballots exceeded the vote cap t={cfg.t} and were truncated; "
            "closed-form threshold results ignore the cap",
            RuntimeWarning,
            stacklevel=2,
        )
    lo, hi = wilson_interval(successes, trials)
    value = successes / trials
    return SuccessEstimate(value, min(lo, value), max(hi, value), "mc", trials, successes)
