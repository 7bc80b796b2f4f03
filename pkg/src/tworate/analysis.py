"""Exact drift oracle, Monte Carlo verifiers, and descriptive statistics.

The verifiers reproduce, at desk scale, quantitative one-generation claims
about the two-rate scheme: which subpopulation wins in the far region, how
likely all offspring are worse at very high rates, and how strongly the rate
drifts down near the optimum. Each verifier reports whether the claim's
stated preconditions hold rather than enforcing them, because some thresholds
(e.g. lambda >= e^16 in the near region) are far beyond desk scale; results
outside the preconditions are qualitative sanity checks, not claim
reproductions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .core import ConfigError
from .controllers import ControllerState, GenerationOutcome, two_rate_state, update_rate
from .mutation import ExactDistribution, distance_distribution


@dataclass(frozen=True)
class RegionBounds:
    """Multipliers on ln(lambda) bracketing the productive rate range."""

    n: int
    k: int
    c1: float
    c2: float


def region_bounds(n: int, k: int) -> RegionBounds:
    """c1 = 1/(2 ln(en/k)) and c2 = 4 n^2/(n-2k)^2, defined for 0 < k < n/2."""
    if not 0 < k < n / 2.0:
        raise ConfigError(f"region bounds need 0 < k < n/2, got k={k}, n={n}")
    c1 = 1.0 / (2.0 * math.log(math.e * n / k))
    c2 = 4.0 * n * n / float(n - 2 * k) ** 2
    return RegionBounds(n=n, k=k, c1=c1, c2=c2)


@dataclass(frozen=True)
class DriftEstimate:
    """Exact expected fitness gain with its truncation-error bound."""

    value: float
    truncation_bound: float
    truncation_ok: bool

    def __float__(self) -> float:
        return self.value


def exact_drift(n: int, k: int, r: float, lam: int) -> DriftEstimate:
    """Expected one-generation fitness gain of the two-rate scheme at rate r.

    Computes sum over improvements i >= 1 of the probability that the best of
    lambda/2 offspring at rate r/2 and lambda/2 at rate 2r improves by at
    least i, using the exact transition law. ``truncation_ok`` is false when
    the truncated probability mass could shift the result by more than 1e-9
    relative.
    """
    if lam < 2 or lam % 2 != 0:
        raise ConfigError(f"lambda must be even and >= 2, got {lam}")
    if not 0 <= k <= n:
        raise ConfigError(f"distance must satisfy 0 <= k <= n, got k={k}, n={n}")
    if k == 0:
        return DriftEstimate(0.0, 0.0, True)
    if not 0.0 < r <= n / 4.0:
        raise ConfigError(f"rate must satisfy 0 < r <= n/4, got r={r}, n={n}")

    low = distance_distribution(n, k, r / 2.0)
    high = distance_distribution(n, k, 2.0 * r)
    # Q(i) = P(final distance <= k - i) for i = 1..k, i.e. cdf at k-1 down to 0;
    # clip float noise so 1 + 1e-16 does not poison log1p.
    q_low = np.minimum(low.cdf[:k][::-1], 1.0)
    q_high = np.minimum(high.cdf[:k][::-1], 1.0)
    half = lam // 2
    with np.errstate(divide="ignore"):
        log_survive = half * (np.log1p(-q_low) + np.log1p(-q_high))
    value = float(np.sum(-np.expm1(log_survive)))

    bound = (low.truncated_mass + high.truncated_mass) * half * k
    ok = bound <= 1e-9 * max(value, np.finfo(float).tiny)
    return DriftEstimate(value=value, truncation_bound=bound, truncation_ok=ok)


def exact_next_distance_law(n: int, k: int, arms: list[tuple[int, float]]) -> np.ndarray:
    """Law of the next parent distance under elitist selection.

    ``arms`` lists (offspring count, rate) per subpopulation. Entry d of the
    result is P(next parent distance = d); the next distance is the minimum of
    k and the best offspring distance.
    """
    if not 0 < k <= n:
        raise ConfigError(f"distance must satisfy 0 < k <= n, got k={k}, n={n}")
    if not arms or any(m < 1 for m, _ in arms):
        raise ConfigError("arms must be non-empty with positive offspring counts")
    log_survive = np.zeros(n + 1)
    for count, rate in arms:
        dist = distance_distribution(n, k, rate)
        with np.errstate(divide="ignore"):
            log_survive += count * np.log1p(-np.minimum(dist.cdf, 1.0))
    survive = np.exp(log_survive)  # survive[d] = P(all offspring distances > d)
    law = np.zeros(n + 1)
    law[0] = 1.0 - survive[0]
    for d in range(1, k):
        law[d] = survive[d - 1] - survive[d]
    law[k] = survive[k - 1]
    return np.maximum(law, 0.0)


def wilson_interval(successes: int, trials: int, level: float = 0.99) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion; behaves near 0 and 1."""
    if trials < 1:
        raise ConfigError("wilson interval needs at least one trial")
    if not 0.0 < level < 1.0:
        raise ConfigError(f"confidence level must be in (0, 1), got {level}")
    z = float(norm.ppf(0.5 + level / 2.0))
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class MonteCarloEstimate:
    point_estimate: float
    confidence_interval: tuple[float, float]
    samples: int
    level: float = 0.99


def _proportion(successes: int, trials: int, level: float) -> MonteCarloEstimate:
    return MonteCarloEstimate(
        point_estimate=successes / trials,
        confidence_interval=wilson_interval(successes, trials, level),
        samples=trials,
        level=level,
    )


def _sample_rng(seed: int, index: int) -> np.random.Generator:
    # Per-sample streams keyed by (seed, sample index): results do not depend
    # on batching or scheduling.
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _two_rate_arms(n: int, r: float, lam: int) -> tuple[tuple[int, float], tuple[int, float]]:
    if lam < 2 or lam % 2 != 0:
        raise ConfigError(f"lambda must be even and >= 2, got {lam}")
    if not 0.0 < r <= n / 2.0:
        raise ConfigError(f"rate must satisfy 0 < r <= n/2, got r={r}, n={n}")
    return (lam // 2, r / (2.0 * n)), (lam // 2, 2.0 * r / n)


def _generation_minima(
    rng: np.random.Generator, n: int, k: int, arms
) -> tuple[int, list[int], list[tuple[np.ndarray, np.ndarray]]]:
    """Simulate one generation in delta space; returns the overall best
    distance, per-arm counts of offspring attaining it, and the raw draws."""
    draws = []
    mins = []
    for count, p in arms:
        xs = rng.binomial(k, p, size=count)
        zs = rng.binomial(n - k, p, size=count)
        d = zs - xs + k
        draws.append((xs, zs))
        mins.append((int(d.min()), d))
    best = min(m for m, _ in mins)
    counts = [int((d == best).sum()) if m == best else 0 for m, d in mins]
    return best, counts, draws


@dataclass(frozen=True)
class WinnerOriginResult:
    """Per-subpopulation win statistics of one two-rate generation.

    Index 0 is the r/2 subpopulation, index 1 the 2r subpopulation.
    ``winner`` is the tie-broken winner's origin, ``any_best`` the event that
    the subpopulation contains a best offspring, ``all_best`` that every best
    offspring came from it.
    """

    n: int
    k: int
    r: float
    lam: int
    winner: tuple[MonteCarloEstimate, MonteCarloEstimate]
    any_best: tuple[MonteCarloEstimate, MonteCarloEstimate]
    all_best: tuple[MonteCarloEstimate, MonteCarloEstimate]
    preconditions: dict[str, bool]


def _far_region_preconditions(n: int, k: int, r: float, lam: int) -> dict[str, bool]:
    flags = {
        "increase_k_in_far_region": k * math.log(lam) >= n,
        "decrease_lambda_at_least_100": lam >= 100,
        "decrease_rate_at_most_quarter_n": r <= n / 4.0,
    }
    if 0 < k < n / 2.0:
        rb = region_bounds(n, k)
        flags["increase_rate_below_c1_log_lambda"] = r <= rb.c1 * math.log(lam)
        flags["decrease_rate_above_c2_log_lambda"] = r >= rb.c2 * math.log(lam)
    else:
        flags["increase_rate_below_c1_log_lambda"] = False
        flags["decrease_rate_above_c2_log_lambda"] = False
    return flags


def mc_winner_origin(
    n: int, k: int, r: float, lam: int, samples: int = 10_000, seed: int = 0, level: float = 0.99
) -> WinnerOriginResult:
    """Estimate which subpopulation produces the winning offspring.

    Each sample simulates one generation in delta space and resolves ties
    uniformly among all best offspring with a single uniform draw.
    """
    if samples < 1:
        raise ConfigError("samples must be >= 1")
    if not 0 < k <= n:
        raise ConfigError(f"distance must satisfy 0 < k <= n, got k={k}, n={n}")
    arms = _two_rate_arms(n, r, lam)
    winner = [0, 0]
    any_best = [0, 0]
    all_best = [0, 0]
    for idx in range(samples):
        rng = _sample_rng(seed, idx)
        _, counts, _ = _generation_minima(rng, n, k, arms)
        total = counts[0] + counts[1]
        winner[0 if int(rng.integers(total)) < counts[0] else 1] += 1
        for s in (0, 1):
            if counts[s] > 0:
                any_best[s] += 1
                if counts[1 - s] == 0:
                    all_best[s] += 1
    return WinnerOriginResult(
        n=n,
        k=k,
        r=r,
        lam=lam,
        winner=tuple(_proportion(w, samples, level) for w in winner),
        any_best=tuple(_proportion(a, samples, level) for a in any_best),
        all_best=tuple(_proportion(a, samples, level) for a in all_best),
        preconditions=_far_region_preconditions(n, k, r, lam),
    )


@dataclass(frozen=True)
class AllWorseResult:
    n: int
    k: int
    r: float
    lam: int
    gamma: float
    estimate: MonteCarloEstimate
    threshold: float
    preconditions: dict[str, bool]


def mc_all_worse(
    n: int,
    k: int,
    r: float,
    lam: int,
    gamma: float = 1.0,
    samples: int = 10_000,
    seed: int = 0,
    level: float = 0.99,
) -> AllWorseResult:
    """Estimate P(every offspring is strictly worse than the parent).

    The claimed lower bound 1 - lambda^(-gamma) applies when
    r >= 2 (1+gamma) c2(k) ln(lambda); the flag reports whether it holds.
    """
    if samples < 1:
        raise ConfigError("samples must be >= 1")
    if not 0 < k <= n:
        raise ConfigError(f"distance must satisfy 0 < k <= n, got k={k}, n={n}")
    arms = _two_rate_arms(n, r, lam)
    if 0 < k < n / 2.0:
        rate_ok = r >= 2.0 * (1.0 + gamma) * region_bounds(n, k).c2 * math.log(lam)
        domain_ok = True
    else:
        rate_ok = False
        domain_ok = False
    hits = 0
    for idx in range(samples):
        rng = _sample_rng(seed, idx)
        best, _, _ = _generation_minima(rng, n, k, arms)
        if best > k:
            hits += 1
    return AllWorseResult(
        n=n,
        k=k,
        r=r,
        lam=lam,
        gamma=gamma,
        estimate=_proportion(hits, samples, level),
        threshold=1.0 - lam ** (-gamma),
        preconditions={"rate_at_least_threshold": rate_ok, "k_below_half_n": domain_ok},
    )


@dataclass(frozen=True)
class RateHalvingResult:
    n: int
    k: int
    r: float
    lam: int
    estimate: MonteCarloEstimate
    halved_rate: float
    preconditions: dict[str, bool]


def mc_rate_halving(
    n: int,
    k: int,
    r: float,
    lam: int,
    samples: int = 10_000,
    seed: int = 0,
    level: float = 0.99,
    update_factor: float = 2.0,
) -> RateHalvingResult:
    """Estimate P(next rate = r/F) including the full update coin logic.

    Simulates one generation, resolves the winner, and applies the actual
    controller update. The counted event is landing on the clamped value of
    r/F, which for a rate at the lower clamp means staying there.
    """
    if samples < 1:
        raise ConfigError("samples must be >= 1")
    if not 0 < k <= n:
        raise ConfigError(f"distance must satisfy 0 < k <= n, got k={k}, n={n}")
    state = two_rate_state(n, initial_rate=r, update_factor=update_factor)
    arms = _two_rate_arms(n, r, lam)
    target = min(max(state.lower_clamp, r / update_factor), state.upper_clamp)
    hits = 0
    for idx in range(samples):
        rng = _sample_rng(seed, idx)
        best, counts, _ = _generation_minima(rng, n, k, arms)
        total = counts[0] + counts[1]
        winner = 0 if int(rng.integers(total)) < counts[0] else 1
        outcome = GenerationOutcome(
            winner_subpopulation=winner, best_fitness_distance=best, improved=best < k
        )
        if update_rate(state, outcome, rng).rate == target:
            hits += 1
    log_lam = math.log(lam)
    return RateHalvingResult(
        n=n,
        k=k,
        r=r,
        lam=lam,
        estimate=_proportion(hits, samples, level),
        halved_rate=target,
        preconditions={
            "k_at_most_n_over_lambda": k * lam <= n,
            "lambda_at_least_45": lam >= 45,
            "rate_at_least_4": r >= 4.0,
            "rate_at_most_quarter_log_lambda": r <= log_lam / 4.0,
        },
    )


def mc_fitness_gain(
    n: int, k: int, r: float, lam: int, samples: int = 10_000, seed: int = 0, level: float = 0.99
) -> MonteCarloEstimate:
    """Monte Carlo estimate of the one-generation fitness gain, with a normal
    confidence interval on the mean; cross-checks `exact_drift`."""
    if samples < 2:
        raise ConfigError("samples must be >= 2")
    if not 0 < k <= n:
        raise ConfigError(f"distance must satisfy 0 < k <= n, got k={k}, n={n}")
    arms = _two_rate_arms(n, r, lam)
    gains = np.empty(samples)
    for idx in range(samples):
        rng = _sample_rng(seed, idx)
        best, _, _ = _generation_minima(rng, n, k, arms)
        gains[idx] = max(0, k - best)
    mean = float(gains.mean())
    half = float(norm.ppf(0.5 + level / 2.0)) * float(gains.std(ddof=1)) / math.sqrt(samples)
    return MonteCarloEstimate(
        point_estimate=mean,
        confidence_interval=(mean - half, mean + half),
        samples=samples,
        level=level,
    )


@dataclass(frozen=True)
class SummaryStats:
    count: int
    mean: float
    q1: float
    median: float
    q3: float
    stddev: float


def summarize(samples) -> SummaryStats:
    """Mean, quartiles, and population standard deviation of a sample set.

    Quartiles use linear interpolation between closest ranks (quantile q of m
    sorted points interpolates at position q*(m-1)); the mean uses compensated
    summation.
    """
    xs = np.asarray(list(samples), dtype=np.float64)
    if xs.size == 0:
        raise ConfigError("summarize requires a non-empty sample set")
    mean = math.fsum(xs.tolist()) / xs.size
    q1, median, q3 = (float(q) for q in np.quantile(xs, [0.25, 0.5, 0.75], method="linear"))
    stddev = math.sqrt(math.fsum(((x - mean) ** 2 for x in xs.tolist())) / xs.size)
    return SummaryStats(count=int(xs.size), mean=mean, q1=q1, median=median, q3=q3, stddev=stddev)
