import itertools
import math

import numpy as np
import pytest

from helpers import enumerate_distance_law
from tworate.analysis import (
    exact_drift,
    exact_next_distance_law,
    mc_all_worse,
    mc_fitness_gain,
    mc_rate_halving,
    mc_winner_origin,
    region_bounds,
    summarize,
    wilson_interval,
)
from tworate.core import ConfigError


def test_region_bounds_reference_points():
    rb = region_bounds(1000, 400)  # k = 2n/5
    assert rb.c2 == pytest.approx(100.0)
    rb = region_bounds(10_000, 1000)
    assert rb.c2 == pytest.approx(6.25)
    assert rb.c1 == pytest.approx(1.0 / (2.0 * math.log(math.e * 10)))
    n = 100
    rb = region_bounds(n, n // 2 - 1)
    assert rb.c2 == pytest.approx(float(n * n))


def test_region_bounds_domain():
    with pytest.raises(ConfigError):
        region_bounds(100, 50)
    with pytest.raises(ConfigError):
        region_bounds(100, 0)


def test_exact_drift_zero_at_optimum():
    assert exact_drift(10, 0, 2.0, 4).value == 0.0


def test_exact_drift_validation():
    with pytest.raises(ConfigError):
        exact_drift(10, 3, 2.0, 3)  # odd lambda
    with pytest.raises(ConfigError):
        exact_drift(10, 3, 3.0, 4)  # r > n/4
    with pytest.raises(ConfigError):
        exact_drift(10, 11, 2.0, 4)


def test_exact_drift_against_mask_enumeration():
    # independent route: exhaustive per-offspring law from flip-mask
    # enumeration, then P(improve by >= i) for the best of one draw per arm
    n, k, r, lam = 10, 3, 2.0, 2
    law_low = enumerate_distance_law(n, k, r / 2.0)
    law_high = enumerate_distance_law(n, k, 2.0 * r)

    def q(law, i):
        return law[: k - i + 1].sum()

    expected = sum(
        1.0 - (1.0 - q(law_low, i)) * (1.0 - q(law_high, i)) for i in range(1, k + 1)
    )
    assert exact_drift(n, k, r, lam).value == pytest.approx(expected, abs=1e-12)


def test_exact_drift_matches_monte_carlo():
    n, k, r, lam = 10, 3, 2.0, 2
    est = mc_fitness_gain(n, k, r, lam, samples=200_000, seed=31)
    lo, hi = est.confidence_interval
    assert lo <= exact_drift(n, k, r, lam).value <= hi


def test_exact_drift_bounded_by_distance():
    rng = np.random.default_rng(8)
    for _ in range(25):
        n = int(rng.integers(4, 100))
        k = int(rng.integers(1, n + 1))
        r = float(rng.uniform(0.2, n / 4.0))
        lam = 2 * int(rng.integers(1, 9))
        d = exact_drift(n, k, r, lam)
        assert 0.0 <= d.value <= k + 1e-12
        assert d.truncation_ok


def test_exact_drift_monte_carlo_grid():
    # 99.9% intervals: twenty simultaneous 99% checks would flake by design
    rng = np.random.default_rng(12345)
    for _ in range(20):
        n = int(rng.integers(8, 101))
        k = int(rng.integers(1, n + 1))
        r = float(rng.uniform(0.5, n / 4.0))
        lam = 2 * int(rng.integers(1, 9))
        exact = exact_drift(n, k, r, lam).value
        est = mc_fitness_gain(n, k, r, lam, samples=20_000, seed=int(rng.integers(1 << 30)), level=0.999)
        lo, hi = est.confidence_interval
        assert lo - 1e-12 <= exact <= hi + 1e-12, (n, k, r, lam, exact, est)


def test_next_distance_law_matches_outcome_vector_enumeration():
    n, k = 6, 3
    arms = [(2, 1.0), (2, 4.0)]
    law = exact_next_distance_law(n, k, arms)
    assert law.sum() == pytest.approx(1.0, abs=1e-12)

    per_arm = [enumerate_distance_law(n, k, rate) for _, rate in arms]
    expected = np.zeros(n + 1)
    support = range(n + 1)
    for d1, d2, d3, d4 in itertools.product(support, repeat=4):
        weight = per_arm[0][d1] * per_arm[0][d2] * per_arm[1][d3] * per_arm[1][d4]
        expected[min(k, d1, d2, d3, d4)] += weight
    assert np.abs(law - expected).max() < 1e-12


def test_wilson_interval_basic_properties():
    lo, hi = wilson_interval(30, 100)
    assert 0.0 <= lo <= 0.3 <= hi <= 1.0
    assert wilson_interval(0, 50)[0] == 0.0
    assert wilson_interval(50, 50)[1] == 1.0
    with pytest.raises(ConfigError):
        wilson_interval(0, 0)


def test_wilson_interval_coverage_on_synthetic_bernoulli():
    p, reps, trials = 0.3, 1000, 300
    rng = np.random.default_rng(77)
    successes = rng.binomial(trials, p, size=reps)
    covered = sum(lo <= p <= hi for lo, hi in (wilson_interval(int(s), trials) for s in successes))
    assert covered >= 0.98 * reps


def test_mc_winner_origin_pure_tie_is_fair_coin():
    res = mc_winner_origin(n=1_000_000, k=1000, r=1e-5, lam=2, samples=20_000, seed=3)
    assert abs(res.winner[0].point_estimate - 0.5) < 0.01
    assert res.any_best[0].point_estimate > 0.999
    assert res.any_best[1].point_estimate > 0.999
    assert res.all_best[0].point_estimate < 0.001


def test_mc_winner_origin_counts_are_consistent():
    res = mc_winner_origin(n=500, k=200, r=4.0, lam=8, samples=4000, seed=5)
    # exactly one of "all best from low" / "some best from high"
    assert res.all_best[0].point_estimate + res.any_best[1].point_estimate == pytest.approx(1.0)
    assert res.winner[0].point_estimate + res.winner[1].point_estimate == pytest.approx(1.0)


def test_mc_winner_origin_precondition_flags():
    res = mc_winner_origin(n=10_000, k=1000, r=64.0, lam=100, samples=10, seed=1)
    flags = res.preconditions
    assert flags["decrease_lambda_at_least_100"]
    assert flags["decrease_rate_above_c2_log_lambda"]
    assert flags["decrease_rate_at_most_quarter_n"]
    assert not flags["increase_rate_below_c1_log_lambda"]


def test_mc_all_worse_high_rate_destroys_fitness():
    n, k, r, lam = 200, 50, 50.0, 10
    res = mc_all_worse(n, k, r, lam, gamma=1.0, samples=5000, seed=9)
    # exact survival product as the oracle
    law_low = enumerate_distance_law_or_exact(n, k, r / 2.0)
    law_high = enumerate_distance_law_or_exact(n, k, 2.0 * r)
    exact = (1.0 - law_low[: k + 1].sum()) ** (lam // 2) * (1.0 - law_high[: k + 1].sum()) ** (lam // 2)
    lo, hi = res.estimate.confidence_interval
    assert lo <= exact <= hi
    assert res.estimate.point_estimate > 0.9


def enumerate_distance_law_or_exact(n, k, r):
    from tworate.mutation import distance_distribution

    if n <= 14:
        return enumerate_distance_law(n, k, r)
    return distance_distribution(n, k, r).point_probs


def test_mc_all_worse_reports_domain_violation():
    res = mc_all_worse(n=100, k=60, r=10.0, lam=4, samples=50, seed=2)
    assert not res.preconditions["k_below_half_n"]
    assert not res.preconditions["rate_at_least_threshold"]


def test_mc_rate_halving_tie_only_floor():
    # rate so small that every offspring is a parent copy: the halving
    # probability is the random-step floor plus half the tie-break mass
    res = mc_rate_halving(n=100_000, k=100, r=2.0, lam=2, samples=5000, seed=11)
    assert res.halved_rate == 2.0
    assert res.estimate.point_estimate >= 0.2
    assert res.preconditions["k_at_most_n_over_lambda"]
    assert not res.preconditions["rate_at_least_4"]
    assert not res.preconditions["rate_at_most_quarter_log_lambda"]


def test_mc_rate_halving_near_region_small_scale():
    res = mc_rate_halving(n=10_000, k=1, r=4.0, lam=100, samples=3000, seed=13)
    assert res.halved_rate == 2.0
    assert res.estimate.confidence_interval[0] > 0.5
    assert res.preconditions["k_at_most_n_over_lambda"]
    assert res.preconditions["rate_at_least_4"]
    assert not res.preconditions["rate_at_most_quarter_log_lambda"]


def test_summarize_reference_values():
    s = summarize([1, 2, 3, 4, 5])
    assert (s.mean, s.q1, s.median, s.q3) == (3.0, 2.0, 3.0, 4.0)
    assert s.count == 5

    single = summarize([7])
    assert (single.mean, single.q1, single.median, single.q3, single.stddev) == (7.0, 7.0, 7.0, 7.0, 0.0)

    two = summarize([10, 20])
    assert (two.mean, two.q1, two.median, two.q3) == (15.0, 12.5, 15.0, 17.5)


def test_summarize_permutation_invariant():
    rng = np.random.default_rng(21)
    xs = rng.normal(size=101)
    assert summarize(xs) == summarize(xs[rng.permutation(xs.size)])


def test_summarize_rejects_empty():
    with pytest.raises(ConfigError):
        summarize([])
