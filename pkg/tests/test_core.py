import dataclasses

import numpy as np
import pytest
from scipy.stats import binom

from helpers import gof_pvalue
from tworate.core import (
    ConfigError,
    EAConfig,
    SearchPoint,
    onemax,
    onemax_reference,
    random_search_point,
)


def test_onemax_all_zeros_is_optimum():
    assert onemax(SearchPoint(n=8, mask=0)) == 0


def test_onemax_all_ones_is_antipode():
    assert onemax(SearchPoint.from_bits([1] * 8)) == 8


def test_onemax_matches_per_bit_oracle_on_random_points():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        n = int(rng.integers(1, 80))
        x = random_search_point(n, rng)
        assert onemax(x) == onemax_reference(x)


def test_complement_identity():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(1, 70))
        x = random_search_point(n, rng)
        assert onemax(x) + onemax(x.complement()) == n


def test_search_point_round_trip_and_immutability():
    x = SearchPoint.from_bits([1, 0, 1, 1, 0])
    assert x.n == 5
    assert list(x.bits) == [1, 0, 1, 1, 0]
    with pytest.raises(dataclasses.FrozenInstanceError):
        x.mask = 0
    arr = x.bits
    arr[0] = 0
    assert list(x.bits) == [1, 0, 1, 1, 0]


def test_search_point_rejects_bad_mask_and_size():
    with pytest.raises(ConfigError):
        SearchPoint(n=0, mask=0)
    with pytest.raises(ConfigError):
        SearchPoint(n=3, mask=8)


def test_random_search_point_single_bit_frequency():
    rng = np.random.default_rng(123)
    draws = 100_000
    ones = sum(onemax(random_search_point(1, rng)) for _ in range(draws))
    assert 0.495 <= ones / draws <= 0.505


def test_random_search_point_mean_distance():
    rng = np.random.default_rng(5)
    draws = 10_000
    mean = sum(onemax(random_search_point(100, rng)) for _ in range(draws)) / draws
    assert abs(mean - 50.0) <= 0.5


def test_random_search_point_rejects_degenerate_size():
    with pytest.raises(ConfigError):
        random_search_point(0, np.random.default_rng(0))


def test_random_search_point_distance_gof():
    # fitness distances of uniform points follow Bin(n, 1/2)
    n, draws = 20, 100_000
    rng = np.random.default_rng(2024)
    counts = np.zeros(n + 1)
    for _ in range(draws):
        counts[onemax(random_search_point(n, rng))] += 1
    probs = binom.pmf(np.arange(n + 1), n, 0.5)
    assert gof_pvalue(counts, probs) > 0.001


def test_config_validation():
    cfg = EAConfig(n=100, lam=10)
    assert cfg.effective_budget() > 0
    assert EAConfig(n=100, lam=10, budget=77).effective_budget() == 77
    with pytest.raises(ConfigError):
        EAConfig(n=0, lam=10)
    with pytest.raises(ConfigError):
        EAConfig(n=10, lam=1)
    with pytest.raises(ConfigError):
        EAConfig(n=10, lam=4, budget=0)
    with pytest.raises(ConfigError):
        EAConfig(n=10, lam=4, initial_rate=0.0)
