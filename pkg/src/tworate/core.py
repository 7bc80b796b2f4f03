"""Bit-string genotypes, OneMax evaluation, and shared configuration types."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ConfigError(ValueError):
    """Invalid configuration or violated operation precondition."""


def _mask_from_bits(bits: np.ndarray) -> int:
    packed = np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def _bits_from_mask(mask: int, n: int) -> np.ndarray:
    nbytes = (n + 7) // 8
    raw = np.frombuffer(mask.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, count=n, bitorder="little")


@dataclass(frozen=True)
class SearchPoint:
    """Immutable bit string of length ``n``, packed into an arbitrary-precision int.

    Bit ``i`` of ``mask`` is the value at position ``i``. Packing makes fitness
    evaluation a popcount over machine words instead of a per-bit loop.
    """

    n: int
    mask: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigError(f"search point length must be >= 1, got {self.n}")
        if not 0 <= self.mask < (1 << self.n):
            raise ConfigError("mask has bits outside positions [0, n)")

    @classmethod
    def from_bits(cls, bits) -> "SearchPoint":
        arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits, dtype=np.uint8)
        if arr.ndim != 1:
            raise ConfigError("bits must be one-dimensional")
        return cls(n=int(arr.size), mask=_mask_from_bits(arr))

    @property
    def bits(self) -> np.ndarray:
        """The n bit values as a fresh uint8 array (mutating it has no effect)."""
        return _bits_from_mask(self.mask, self.n)

    def complement(self) -> "SearchPoint":
        return SearchPoint(n=self.n, mask=self.mask ^ ((1 << self.n) - 1))


def onemax(x: SearchPoint) -> int:
    """Number of one-bits of ``x``; 0 is the optimum under minimization."""
    return x.mask.bit_count()


def onemax_reference(x: SearchPoint) -> int:
    """Per-bit counting oracle for tests; intentionally naive."""
    return sum(1 for b in x.bits if b)


def random_search_point(n: int, rng: np.random.Generator) -> SearchPoint:
    """Uniformly random point of ``{0,1}^n`` (each bit one with probability 1/2)."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    bits = rng.integers(0, 2, size=n, dtype=np.uint8)
    return SearchPoint(n=n, mask=_mask_from_bits(bits))


@dataclass(frozen=True)
class EAConfig:
    """Problem size, offspring count, and run limits shared by all controllers.

    ``budget`` is a generation cap; ``None`` selects the default
    ``100 * (n ln n / lam + n)``, an order of magnitude above the expected
    runtime so that exhaustion signals a bug rather than bad luck.
    ``initial_rate`` of ``None`` selects the controller's lower clamp.
    """

    n: int
    lam: int
    budget: int | None = None
    initial_rate: float | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigError(f"problem size must be >= 1, got {self.n}")
        if self.lam < 2:
            raise ConfigError(f"offspring count must be >= 2, got {self.lam}")
        if self.budget is not None and self.budget < 1:
            raise ConfigError(f"budget must be >= 1 or None, got {self.budget}")
        if self.initial_rate is not None and not self.initial_rate > 0:
            raise ConfigError(f"initial rate must be positive, got {self.initial_rate}")

    def effective_budget(self) -> int:
        if self.budget is not None:
            return self.budget
        return math.ceil(100.0 * (self.n * math.log(max(self.n, 2)) / self.lam + self.n))
