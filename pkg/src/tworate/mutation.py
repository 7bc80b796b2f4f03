"""Standard bit mutation kernels and the exact fitness-distance transition law.

Two sampling layers are provided. The bit-level kernels (`mutate`) operate on
whole search points. The delta kernel (`sample_delta`) draws only the pair
(one-bits flipped, zero-bits flipped), which fully determines the OneMax
fitness change; it is the fast path used by the engine and the Monte Carlo
verifiers. The exact layer (`exact_point_prob`, `distance_distribution`)
computes the transition probabilities of a single mutation in log-space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from .core import ConfigError, SearchPoint, _bits_from_mask, _mask_from_bits

# Terms smaller than the running maximum by this log-factor are truncated;
# the truncated mass is tracked on the resulting distribution.
_LOG_TRUNC = 300.0 * math.log(10.0)

# Above this window-size product the direct outer accumulation is replaced by
# FFT convolution (absolute error ~1e-13 instead of ~1e-15).
_DIRECT_LIMIT = 1 << 24


@dataclass(frozen=True)
class MutationDelta:
    """Counts of one-bits and zero-bits flipped by one mutation."""

    ones_flipped: int
    zeros_flipped: int

    def child_distance(self, parent_distance: int) -> int:
        return parent_distance - self.ones_flipped + self.zeros_flipped


def _check_probability(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"mutation probability must be in [0, 1], got {p}")


def mutate(x: SearchPoint, p: float, rng: np.random.Generator, kernel: str = "two-stage") -> SearchPoint:
    """Flip each bit of a copy of ``x`` independently with probability ``p``.

    ``kernel`` selects the per-bit Bernoulli reference implementation or the
    two-stage sampler (draw the flip count, then flip positions chosen without
    replacement); the two produce identical distributions.
    """
    _check_probability(p)
    if kernel == "per-bit":
        flips = rng.random(x.n) < p
        return SearchPoint(n=x.n, mask=x.mask ^ _mask_from_bits(flips.astype(np.uint8)))
    if kernel == "two-stage":
        count = int(rng.binomial(x.n, p))
        if count == 0:
            return x
        positions = rng.choice(x.n, size=count, replace=False)
        flip_mask = 0
        for pos in positions:
            flip_mask |= 1 << int(pos)
        return SearchPoint(n=x.n, mask=x.mask ^ flip_mask)
    raise ConfigError(f"unknown mutation kernel {kernel!r}")


def sample_delta(k: int, n: int, p: float, rng: np.random.Generator) -> MutationDelta:
    """Draw the flip counts of one mutation of a parent with ``k`` one-bits.

    The counts are independent Bin(k, p) and Bin(n-k, p) draws, matching the
    delta of a full `mutate` call in distribution.
    """
    if not 0 <= k <= n:
        raise ConfigError(f"parent distance must satisfy 0 <= k <= n, got k={k}, n={n}")
    _check_probability(p)
    return MutationDelta(int(rng.binomial(k, p)), int(rng.binomial(n - k, p)))


def sample_delta_batch(
    k: int, n: int, p: float, size: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized `sample_delta`: arrays of one-flips and zero-flips."""
    if not 0 <= k <= n:
        raise ConfigError(f"parent distance must satisfy 0 <= k <= n, got k={k}, n={n}")
    _check_probability(p)
    return rng.binomial(k, p, size=size), rng.binomial(n - k, p, size=size)


def log_binom(n, k):
    """log of the binomial coefficient via log-gamma; vectorized."""
    n = np.asarray(n, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def _validate_rate(n: int, k: int, r: float) -> None:
    if not 0 <= k <= n:
        raise ConfigError(f"distance must satisfy 0 <= k <= n, got k={k}, n={n}")
    if not 0.0 < r <= n:
        raise ConfigError(f"rate must satisfy 0 < r <= n, got r={r}, n={n}")


def exact_point_prob(n: int, k: int, i: int, r: float) -> float:
    """Probability that one mutation at probability r/n moves the fitness
    distance from ``k`` to exactly ``k - i``.

    Sums C(k, i+j) C(n-k, j) (r/n)^(i+2j) (1-r/n)^(n-i-2j) over the feasible
    flip splits j, in log-space with compensated summation. Out-of-range ``i``
    (a transition to a distance outside [0, n]) returns 0.
    """
    _validate_rate(n, k, r)
    if i > k or k - i > n:
        return 0.0
    p = r / n
    if p == 1.0:
        return 1.0 if k - i == n - k else 0.0
    j_lo = max(0, -i)
    j_hi = min(k - i, n - k)
    if j_hi < j_lo:
        return 0.0
    js = np.arange(j_lo, j_hi + 1)
    logs = (
        log_binom(k, i + js)
        + log_binom(n - k, js)
        + (i + 2 * js) * math.log(p)
        + (n - i - 2 * js) * math.log1p(-p)
    )
    top = float(logs.max())
    if top == -math.inf:
        return 0.0
    keep = logs >= top - _LOG_TRUNC
    scaled = math.fsum(np.exp(logs[keep] - top).tolist())
    return math.exp(top) * scaled


@dataclass(frozen=True)
class ExactDistribution:
    """Law of the offspring fitness distance after one mutation.

    ``point_probs[d]`` is the probability of final distance ``d`` for
    ``d in [0, n]``. ``truncated_mass`` bounds the total probability dropped
    by log-space truncation (zero at small scale).
    """

    n: int
    k: int
    rate: float
    point_probs: np.ndarray
    truncated_mass: float = 0.0

    @cached_property
    def cdf(self) -> np.ndarray:
        return np.cumsum(self.point_probs)

    def prob_of_distance(self, d: int) -> float:
        if not 0 <= d <= self.n:
            return 0.0
        return float(self.point_probs[d])

    def tail_improvement(self, i: int) -> float:
        """P(final distance <= k - i), the chance of improving by at least i."""
        d = self.k - i
        if d < 0:
            return 0.0
        if d >= self.n:
            return 1.0
        return float(self.cdf[d])

    def mean_gain(self) -> float:
        """Expected decrease of the fitness distance (may be negative)."""
        support = np.arange(self.n + 1)
        return float(self.k - np.dot(support, self.point_probs))


def _binom_log_pmf(count: int, p: float) -> np.ndarray:
    xs = np.arange(count + 1)
    if count == 0:
        return np.zeros(1)
    return log_binom(count, xs) + xs * math.log(p) + (count - xs) * math.log1p(-p)


def _window(logs: np.ndarray) -> tuple[int, int]:
    top = logs.max()
    idx = np.flatnonzero(logs >= top - _LOG_TRUNC)
    return int(idx[0]), int(idx[-1])


def distance_distribution(n: int, k: int, r: float) -> ExactDistribution:
    """Full transition law of the fitness distance under one mutation at r/n.

    Computed as the law of k - X+ + X- with X+ ~ Bin(k, r/n) and
    X- ~ Bin(n-k, r/n) independent; marginal terms below 1e-300 of their
    maximum are truncated and the dropped mass is reported.
    """
    _validate_rate(n, k, r)
    p = r / n
    probs = np.zeros(n + 1)
    if p == 1.0:
        probs[n - k] = 1.0
        return ExactDistribution(n=n, k=k, rate=r, point_probs=probs)

    la = _binom_log_pmf(k, p)
    lb = _binom_log_pmf(n - k, p)
    a_lo, a_hi = _window(la)
    b_lo, b_hi = _window(lb)
    wa = np.exp(la[a_lo : a_hi + 1])
    wb = np.exp(lb[b_lo : b_hi + 1])
    # Mass actually dropped by the marginal windows (bounds the joint drop).
    truncated = float(
        np.exp(la[:a_lo]).sum()
        + np.exp(la[a_hi + 1 :]).sum()
        + np.exp(lb[:b_lo]).sum()
        + np.exp(lb[b_hi + 1 :]).sum()
    )

    if (a_hi - a_lo + 1) * (b_hi - b_lo + 1) <= _DIRECT_LIMIT:
        if wa.size <= wb.size:
            for off, pa in enumerate(wa):
                base = k - (a_lo + off) + b_lo
                probs[base : base + wb.size] += pa * wb
        else:
            for off, pb in enumerate(wb):
                base = k - a_hi + (b_lo + off)
                probs[base : base + wa.size] += pb * wa[::-1]
    else:
        from scipy.signal import fftconvolve

        conv = np.clip(fftconvolve(wa[::-1], wb), 0.0, None)
        base = k - a_hi + b_lo
        probs[base : base + conv.size] += conv

    return ExactDistribution(n=n, k=k, rate=r, point_probs=probs, truncated_mass=truncated)


def exact_tail_prob(n: int, k: int, i: int, r: float) -> float:
    """Probability that one mutation at r/n improves the distance by >= i,
    i.e. P(final distance <= k - i). Monotone non-increasing in i."""
    _validate_rate(n, k, r)
    return distance_distribution(n, k, r).tail_improvement(i)
