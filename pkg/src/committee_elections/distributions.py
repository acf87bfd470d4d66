"""Finite discrete distributions used by the election analysis.

Poisson binomial pmf/cdf (convolution and DFT), Chernoff-Hoeffding tails,
order statistics of iid discrete samples, the single-rank order statistic of
a two-population sample, hypergeometric masses, log-space binomial tails and
first-order stochastic dominance.

Order statistics are indexed as the ``k``-th *smallest* of ``n`` draws
everywhere in this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import special

NEG_TOL = 1e-15
FLUSH_BELOW = 1e-300
DFT_IMAG_TOL = 1e-8


class NumericInstabilityError(ArithmeticError):
    """A numerical path lost too much precision to be trusted."""


@dataclass(frozen=True)
class Pmf:
    """Probability masses on the integers ``0..n``."""

    masses: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float).copy()
        if m.ndim != 1 or m.size == 0:
            raise ValueError("masses must be a non-empty 1-d array")
        if np.any(m < -NEG_TOL):
            raise ValueError("negative probability mass")
        m[m < 0] = 0.0
        total = m.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"masses sum to {total!r}, not 1")
        m[m < FLUSH_BELOW] = 0.0
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)

    def __len__(self):
        return self.masses.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.masses, dtype=dtype)

    @property
    def n(self) -> int:
        return self.masses.size - 1

    def cdf(self) -> np.ndarray:
        return np.minimum(np.cumsum(self.masses), 1.0)

    def mean(self) -> float:
        return float(np.dot(np.arange(self.masses.size), self.masses))


def _as_probs(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=float).ravel()
    if np.any((p < 0.0) | (p > 1.0)) or np.any(np.isnan(p)):
        raise ValueError("Poisson binomial parameters must lie in [0, 1]")
    # canonical order: the rounding, and hence the result, ignores input order
    return np.sort(p)


def _pbd_convolution(p: np.ndarray) -> np.ndarray:
    # coefficients of prod_i (1 - p_i + p_i x), one trial at a time
    out = np.zeros(p.size + 1)
    out[0] = 1.0
    for i, pi in enumerate(p):
        out[1 : i + 2] = out[1 : i + 2] * (1.0 - pi) + out[: i + 1] * pi
        out[0] *= 1.0 - pi
    return out


def _pbd_characteristic(p: np.ndarray) -> np.ndarray:
    """prod_k (p_k w^j + 1 - p_k) at the (n+1)-th roots of unity w^j."""
    n = p.size
    omega = np.exp(2j * np.pi * np.arange(n + 1) / (n + 1))
    return np.prod(p[None, :] * omega[:, None] + (1.0 - p[None, :]), axis=1)


def _pbd_dft(p: np.ndarray) -> np.ndarray:
    n = p.size
    phi = _pbd_characteristic(p)
    t = np.arange(n + 1)
    kernel = np.exp(-2j * np.pi * np.outer(t, t) / (n + 1))
    vals = kernel @ phi / (n + 1)
    if np.max(np.abs(vals.imag), initial=0.0) > DFT_IMAG_TOL:
        raise NumericInstabilityError("DFT pmf has a non-negligible imaginary residue")
    out = vals.real
    if np.any(out < -1e-9):
        raise NumericInstabilityError("DFT pmf produced negative masses")
    return np.clip(out, 0.0, None)


def pbd_pmf(probs: Sequence[float], method: str = "convolution") -> Pmf:
    """Pmf of a sum of independent Bernoulli(p_i) trials.

    ``method="convolution"`` is the O(n^2) dynamic program and the default;
    ``method="dft"`` evaluates the discrete Fourier inversion formula and is
    meant as a cross-check for small ``n``.
    """
    p = _as_probs(probs)
    if method == "convolution":
        masses = _pbd_convolution(p)
    elif method == "dft":
        masses = _pbd_dft(p)
    else:
        raise ValueError(f"unknown method {method!r}")
    return Pmf(masses)


def pbd_cdf(probs: Sequence[float], t: int) -> float:
    """``Pr[X <= t]`` for the Poisson binomial ``X``."""
    p = _as_probs(probs)
    if not 0 <= t <= p.size:
        raise ValueError(f"t={t} outside 0..{p.size}")
    return float(min(1.0, math.fsum(_pbd_convolution(p)[: t + 1].tolist())))


def pbd_cdf_dft(probs: Sequence[float], t: int) -> float:
    """``Pr[X <= t]`` from the closed-form DFT sum; validation path only."""
    p = _as_probs(probs)
    n = p.size
    if not 0 <= t <= n:
        raise ValueError(f"t={t} outside 0..{n}")
    phi = _pbd_characteristic(p)
    j = np.arange(n + 1)
    ks = np.arange(t + 1)
    partial = np.exp(-2j * np.pi * np.outer(j, ks) / (n + 1)).sum(axis=1)
    val = np.sum(partial * phi) / (n + 1)
    if abs(val.imag) > DFT_IMAG_TOL:
        raise NumericInstabilityError("DFT cdf has a non-negligible imaginary residue")
    return float(min(1.0, max(0.0, val.real)))


class TailBounds(NamedTuple):
    upper_tail: float
    lower_tail: float


def chernoff_bounds(probs: Sequence[float], t: float) -> TailBounds:
    """Hoeffding bounds on ``Pr[X > n pbar + t]`` and ``Pr[X < n pbar - t]``."""
    p = _as_probs(probs)
    if p.size == 0:
        raise ValueError("Chernoff-Hoeffding bound needs n >= 1")
    if t < 0:
        raise ValueError("t must be non-negative")
    b = math.exp(-2.0 * t * t / p.size)
    return TailBounds(b, b)


def log_binom(n, k):
    """log C(n, k) via log-gamma; -inf outside ``0 <= k <= n``."""
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    valid = (k >= 0) & (k <= n)
    with np.errstate(invalid="ignore"):
        out = special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)
    return np.where(valid, out, -np.inf)


def _binomial_sum_terms(n: int, j_max: int, u, v):
    """log of C(n,j) u^j v^(n-j) for j = 0..j_max, broadcast over u, v."""
    j = np.arange(j_max + 1, dtype=float).reshape((-1,) + (1,) * np.ndim(u))
    return log_binom(n, j) + special.xlogy(j, u) + special.xlogy(n - j, v)


def _log_binomial_sum(n: int, j_max: int, u, v):
    if j_max < 0:
        return np.full(np.shape(u), -np.inf)
    return special.logsumexp(_binomial_sum_terms(n, j_max, u, v), axis=0)


class OrderStatistic:
    """pmf and cdf of the ``k``-th smallest of ``n`` iid draws from a discrete law."""

    def __init__(self, pdf, cdf, k: int, n: int):
        f = np.asarray(pdf, dtype=float)
        F = np.asarray(cdf, dtype=float)
        if f.shape != F.shape or f.ndim != 1:
            raise ValueError("pdf and cdf must be 1-d arrays of equal length")
        if not 1 <= k <= n:
            raise ValueError(f"order statistic rank k={k} outside 1..{n}")
        prev = np.concatenate(([0.0], F[:-1]))
        if np.max(np.abs(F - prev - f)) > 1e-9:
            raise ValueError("pdf and cdf are inconsistent")
        self.f = f
        self.F = np.clip(F, 0.0, 1.0)
        self.k = k
        self.n = n

    def _values(self, x):
        x = np.asarray(x)
        idx = np.clip(x, 0, self.f.size - 1).astype(int)
        below = x < 0
        above = x >= self.f.size
        f = np.where(below | above, 0.0, self.f[idx])
        F = np.where(below, 0.0, np.where(above, 1.0, self.F[idx]))
        return f, F

    def cdf_at(self, x):
        _, F = self._values(x)
        out = np.exp(_log_binomial_sum(self.n, self.n - self.k, 1.0 - F, F))
        out = np.clip(out, 0.0, 1.0)
        return float(out) if np.ndim(out) == 0 else out

    def pmf_at(self, x):
        f, F = self._values(x)
        lower = np.clip(F - f, 0.0, 1.0)
        upper = np.exp(_log_binomial_sum(self.n, self.n - self.k, 1.0 - F, F))
        lo = np.exp(_log_binomial_sum(self.n, self.n - self.k, 1.0 - lower, lower))
        out = np.clip(upper - lo, 0.0, 1.0)
        return float(out) if np.ndim(out) == 0 else out


def order_stat_discrete(pdf, cdf, k: int, n: int) -> OrderStatistic:
    """Distribution of the ``k``-th smallest of ``n`` iid draws on ``0..len(pdf)-1``."""
    return OrderStatistic(pdf, cdf, k, n)


def two_population_order_cdf(
    cdf_pop1: Callable, cdf_pop2: Callable, n1: int, n2: int, rank: int, x
):
    """``Pr[Y_(rank) <= x]`` for ``n1`` iid draws with cdf ``cdf_pop1`` pooled
    with ``n2`` iid draws with cdf ``cdf_pop2``.

    Single-rank case of the Bapat-Beg permanent expansion: the outer index
    ``i`` counts draws at or below ``x`` (``i >= rank``) and ``l1 + l2 = i``
    splits them between the two populations.
    """
    total = n1 + n2
    if not 1 <= rank <= total:
        raise ValueError(f"rank={rank} outside 1..{total}")
    x = np.asarray(x, dtype=float)
    F = np.clip(np.asarray(cdf_pop1(x), dtype=float), 0.0, 1.0)
    G = np.clip(np.asarray(cdf_pop2(x), dtype=float), 0.0, 1.0)
    l1 = np.arange(n1 + 1, dtype=float)
    l2 = np.arange(n2 + 1, dtype=float)
    L1, L2 = np.meshgrid(l1, l2, indexing="ij")
    keep = (L1 + L2) >= rank
    L1, L2 = L1[keep], L2[keep]
    shape = (-1,) + (1,) * F.ndim
    L1, L2 = L1.reshape(shape), L2.reshape(shape)
    log_terms = (
        log_binom(n1, L1)
        + log_binom(n2, L2)
        + special.xlogy(L1, F)
        + special.xlogy(n1 - L1, 1.0 - F)
        + special.xlogy(L2, G)
        + special.xlogy(n2 - L2, 1.0 - G)
    )
    out = np.clip(np.exp(special.logsumexp(log_terms, axis=0)), 0.0, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def hypergeometric_pmf(m: int, z0: int, z1: int, a: int) -> float:
    """Probability that ``z1`` draws without replacement from ``m`` items hit
    exactly ``a`` of ``z0`` marked ones."""
    if not (0 <= z0 <= m and 0 <= z1 <= m):
        raise ValueError("need 0 <= z0, z1 <= m")
    if a < max(0, z0 + z1 - m) or a > min(z0, z1):
        return 0.0
    return float(np.exp(log_binom(z0, a) + log_binom(m - z0, z1 - a) - log_binom(m, z1)))


def stochastic_dominance(pmf_x, pmf_y, tol: float = 1e-12) -> bool:
    """True iff ``Y`` first-order dominates ``X``: ``F_Y(x) <= F_X(x)`` everywhere."""
    fx = np.asarray(pmf_x, dtype=float)
    fy = np.asarray(pmf_y, dtype=float)
    size = max(fx.size, fy.size)
    fx = np.pad(fx, (0, size - fx.size))
    fy = np.pad(fy, (0, size - fy.size))
    return bool(np.all(np.cumsum(fy) <= np.cumsum(fx) + tol))


_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_S0, _S1, _S2, _S3, _S4 = 1 / 12, 1 / 360, 1 / 1260, 1 / 1680, 1 / 1188


def _stirlerr(n):
    """log(n!) - log(sqrt(2 pi n) (n/e)^n), the Stirling remainder."""
    n = np.asarray(n, dtype=float)
    small = n <= 15.0
    ns = np.where(small, n, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = special.gammaln(ns + 1.0) - (ns + 0.5) * np.log(ns) + ns - _LOG_SQRT_2PI
        nl = np.where(small, 16.0, n)
        nn = nl * nl
        series = (_S0 - (_S1 - (_S2 - (_S3 - _S4 / nn) / nn) / nn) / nn) / nl
    return np.where(small, direct, series)


def _bd0(x, mu):
    """x log(x/mu) + mu - x without cancellation when x is close to mu."""
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    x, mu = np.broadcast_arrays(x, mu)
    out = np.empty(x.shape)
    near = np.abs(x - mu) < 0.1 * (x + mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[~near] = special.xlogy(x[~near], x[~near] / mu[~near]) + mu[~near] - x[~near]
    if np.any(near):
        xn, mn = x[near], mu[near]
        v = (xn - mn) / (xn + mn)
        acc = (xn - mn) * v
        ej = 2.0 * xn * v
        v2 = v * v
        for j in range(1, 1000):
            ej = ej * v2
            nxt = acc + ej / (2 * j + 1)
            if np.all(nxt == acc):
                break
            acc = nxt
        out[near] = acc
    return out


def log_binom_pmf(j, k: int, p: float):
    """log Pr[Bin(k, p) = j] by Loader's saddle-point decomposition.

    The result is a sum of O(1) quantities, so its absolute error stays near
    machine epsilon even when log C(k, j) is in the thousands.
    """
    j = np.asarray(j, dtype=float)
    q = 1.0 - p
    out = np.full(j.shape, -np.inf)
    valid = (j >= 0) & (j <= k)
    if p == 0.0 or q == 0.0:
        hit = k if p == 1.0 else 0
        return np.where(j == hit, 0.0, -np.inf)
    edge0 = valid & (j == 0)
    edgek = valid & (j == k)
    out = np.where(edge0, k * math.log1p(-p), out)
    out = np.where(edgek, k * math.log(p), out)
    mid = valid & (j > 0) & (j < k)
    if np.any(mid):
        jm = j[mid]
        lc = (
            _stirlerr(k) - _stirlerr(jm) - _stirlerr(k - jm)
            - _bd0(jm, k * p) - _bd0(k - jm, k * q)
        )
        out[mid] = lc + 0.5 * np.log(k / (2.0 * math.pi * jm * (k - jm)))
    return out


def log_binomial_tail(k: int, p: float, threshold: int, direction: str) -> float:
    """log Pr[Bin(k, p) >= threshold] (``"at_least"``) or ``<= threshold`` (``"at_most"``).

    Terms come from :func:`log_binom_pmf` and are summed with a max-shifted
    log-sum-exp.  When the requested tail holds most of the mass it is
    computed as ``log1p(-complement)`` so values near 1 keep full precision.
    """
    if not 0 <= threshold <= k:
        raise ValueError(f"threshold={threshold} outside 0..{k}")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if direction == "at_least":
        want = np.arange(threshold, k + 1)
        other = np.arange(0, threshold)
    elif direction == "at_most":
        want = np.arange(0, threshold + 1)
        other = np.arange(threshold + 1, k + 1)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    log_want = float(special.logsumexp(log_binom_pmf(want, k, p))) if want.size else -np.inf
    if other.size == 0:
        return 0.0
    log_other = float(special.logsumexp(log_binom_pmf(other, k, p)))
    if log_other < log_want and log_other < math.log(0.5):
        return math.log1p(-math.exp(log_other))
    return min(0.0, log_want)
