"""Mutation-rate controllers behind one interface: propose, observe, update.

The self-adjusting family creates subpopulations at rates r/2 and 2r (plus r
itself in the three-subpopulation variant) and moves the rate by the update
factor F toward the subpopulation that produced the winning offspring, with a
50% chance of a random step instead. Static and fitness-dependent policies
serve as comparison baselines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import ConfigError, EAConfig


@dataclass(frozen=True)
class ControllerState:
    """Current rate plus the knobs of the self-adjusting update rule.

    The rate is clamped to [lower_clamp, upper_clamp] after every update, so
    between consecutive generations it changes by a factor of exactly F, 1/F,
    or 1 (the last only through clamping, or through a winning middle
    subpopulation when three are used).
    """

    rate: float
    upper_clamp: float
    update_factor: float = 2.0
    lower_clamp: float = 2.0
    random_steps: bool = True
    subpopulations: int = 2

    def __post_init__(self) -> None:
        if self.update_factor <= 1.0:
            raise ConfigError(f"update factor must be > 1, got {self.update_factor}")
        if self.subpopulations not in (2, 3):
            raise ConfigError(f"subpopulations must be 2 or 3, got {self.subpopulations}")
        if not 0.0 < self.lower_clamp <= self.upper_clamp:
            raise ConfigError(
                f"clamp interval [{self.lower_clamp}, {self.upper_clamp}] is empty or invalid"
            )
        if not self.lower_clamp <= self.rate <= self.upper_clamp:
            raise ConfigError(
                f"rate {self.rate} outside clamp interval [{self.lower_clamp}, {self.upper_clamp}]"
            )


@dataclass(frozen=True)
class GenerationOutcome:
    """What the selection step reports back to the controller."""

    winner_subpopulation: int
    best_fitness_distance: int
    improved: bool


def two_rate_state(
    n: int,
    initial_rate: float | None = None,
    update_factor: float = 2.0,
    random_steps: bool = True,
    subpopulations: int = 2,
) -> ControllerState:
    """Build a controller state with the generalized clamp [F, n/(2F)].

    For F=2 this is the classic interval [2, n/4]. The default initial rate is
    the lower clamp, i.e. the rate the algorithm starts from.
    """
    lower = update_factor
    upper = n / (2.0 * update_factor)
    if upper < lower:
        raise ConfigError(
            f"problem size {n} too small for update factor {update_factor} (need n >= 2*F^2)"
        )
    rate = lower if initial_rate is None else float(initial_rate)
    return ControllerState(
        rate=rate,
        upper_clamp=upper,
        update_factor=update_factor,
        lower_clamp=lower,
        random_steps=random_steps,
        subpopulations=subpopulations,
    )


def propose_rates(state: ControllerState, config: EAConfig) -> list[tuple[int, float]]:
    """Subpopulation sizes and mutation probabilities for one generation.

    Two subpopulations use probabilities r/(2n) and 2r/n; three add r/n in the
    middle. Requires lambda divisible by the subpopulation count.
    """
    if config.lam % state.subpopulations != 0:
        raise ConfigError(
            f"lambda={config.lam} not divisible by {state.subpopulations} subpopulations"
        )
    n = config.n
    r = state.rate
    m = config.lam // state.subpopulations
    if state.subpopulations == 2:
        plan = [(m, r / (2.0 * n)), (m, 2.0 * r / n)]
    else:
        plan = [(m, r / (2.0 * n)), (m, r / n), (m, 2.0 * r / n)]
    for _, p in plan:
        if not 0.0 < p <= 1.0:
            raise ConfigError(f"subpopulation probability {p} outside (0, 1]")
    return plan


def _clamp(state: ControllerState, rate: float) -> float:
    return min(max(state.lower_clamp, rate), state.upper_clamp)


def _exploit_rate(state: ControllerState, winner: int) -> float:
    if not 0 <= winner < state.subpopulations:
        raise ConfigError(f"winner index {winner} invalid for {state.subpopulations} subpopulations")
    f = state.update_factor
    if state.subpopulations == 2:
        return state.rate / f if winner == 0 else state.rate * f
    return (state.rate / f, state.rate, state.rate * f)[winner]


def update_rate(
    state: ControllerState, outcome: GenerationOutcome, rng: np.random.Generator
) -> ControllerState:
    """One rate adjustment, then clamping.

    Coin order is fixed for reproducibility: the adjustment-type coin is drawn
    first (heads = adopt the winner's rate), and the direction coin is drawn
    lazily, only when the random step is taken (heads = divide by F). With
    ``random_steps`` off the winner's rate is always adopted and no coin is
    drawn, making the update a pure function of (state, outcome).
    """
    if state.random_steps and rng.random() >= 0.5:
        if rng.random() < 0.5:
            new_rate = state.rate / state.update_factor
        else:
            new_rate = state.rate * state.update_factor
    else:
        new_rate = _exploit_rate(state, outcome.winner_subpopulation)
    return replace(state, rate=_clamp(state, new_rate))


def enumerate_update_outcomes(
    state: ControllerState, outcome: GenerationOutcome
) -> list[tuple[float, float]]:
    """All (probability, new rate) branches of `update_rate` for a fixed outcome.

    Enumerates the adjustment-type and direction coins, applies clamping, and
    merges branches landing on the same rate. Used to verify floor properties
    such as P(rate divided by F) >= 1/4 independent of the outcome.
    """
    if state.random_steps:
        branches = [
            (0.5, _exploit_rate(state, outcome.winner_subpopulation)),
            (0.25, state.rate / state.update_factor),
            (0.25, state.rate * state.update_factor),
        ]
    else:
        branches = [(1.0, _exploit_rate(state, outcome.winner_subpopulation))]
    merged: dict[float, float] = {}
    for prob, rate in branches:
        clamped = _clamp(state, rate)
        merged[clamped] = merged.get(clamped, 0.0) + prob
    return sorted(merged.items(), key=lambda item: item[0])


def fitness_dependent_rate(d: int, n: int, lam: int) -> float:
    """Mutation probability max{ln(lam) / (n ln(en/d)), 1/n} for parent distance d."""
    if d < 1 or d > n:
        raise ConfigError(f"fitness distance must satisfy 1 <= d <= n, got {d}")
    if lam < 2:
        raise ConfigError(f"lambda must be >= 2, got {lam}")
    return max(math.log(lam) / (n * math.log(math.e * n / d)), 1.0 / n)


class SelfAdjustingController:
    """Two- or three-subpopulation controller wrapping a `ControllerState`."""

    def __init__(self, state: ControllerState):
        self.state = state

    @property
    def subpopulations(self) -> int:
        return self.state.subpopulations

    def current_rate(self, parent_distance: int) -> float:
        return self.state.rate

    def propose(self, config: EAConfig, parent_distance: int) -> list[tuple[int, float]]:
        return propose_rates(self.state, config)

    def update(self, outcome: GenerationOutcome, rng: np.random.Generator) -> "SelfAdjustingController":
        return SelfAdjustingController(update_rate(self.state, outcome, rng))


class StaticController:
    """Fixed rate r, probability r/n, one subpopulation; updates are identity."""

    subpopulations = 1

    def __init__(self, rate: float, n: int):
        if not 0.0 < rate <= n / 2.0:
            raise ConfigError(f"static rate must satisfy 0 < r <= n/2, got r={rate}, n={n}")
        self.rate = rate
        self.n = n

    def current_rate(self, parent_distance: int) -> float:
        return self.rate

    def propose(self, config: EAConfig, parent_distance: int) -> list[tuple[int, float]]:
        return [(config.lam, self.rate / config.n)]

    def update(self, outcome: GenerationOutcome, rng: np.random.Generator) -> "StaticController":
        return self


def static_rate(r: float, n: int) -> StaticController:
    """Baseline controller with fixed mutation probability r/n."""
    return StaticController(r, n)


class FitnessDependentController:
    """Rate follows the parent's fitness distance; one subpopulation."""

    subpopulations = 1

    def __init__(self, n: int, lam: int):
        self.n = n
        self.lam = lam

    def current_rate(self, parent_distance: int) -> float:
        if parent_distance < 1:
            return 1.0
        return self.n * fitness_dependent_rate(parent_distance, self.n, self.lam)

    def propose(self, config: EAConfig, parent_distance: int) -> list[tuple[int, float]]:
        return [(config.lam, fitness_dependent_rate(parent_distance, config.n, config.lam))]

    def update(self, outcome: GenerationOutcome, rng: np.random.Generator) -> "FitnessDependentController":
        return self


KINDS = ("two-rate", "three-rate", "static", "static-log", "fitness-dependent")


@dataclass(frozen=True)
class ControllerSpec:
    """Declarative controller selection used by configs, sweeps, and the CLI.

    ``rate`` applies to kind "static" only (default 1, i.e. probability 1/n);
    "static-log" resolves to ln(lambda)/2 per cell. ``factor`` and
    ``random_steps`` apply to the self-adjusting kinds.
    """

    kind: str
    factor: float = 2.0
    random_steps: bool = True
    rate: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown controller kind {self.kind!r}; expected one of {KINDS}")
        if self.rate is not None and self.kind != "static":
            raise ConfigError(f"fixed rate only applies to kind 'static', got kind {self.kind!r}")

    @property
    def subpopulations(self) -> int:
        if self.kind == "two-rate":
            return 2
        if self.kind == "three-rate":
            return 3
        return 1

    def label(self) -> str:
        if self.kind in ("two-rate", "three-rate"):
            suffix = "" if self.random_steps else ",no-random"
            return f"{self.kind}(F={self.factor:g}{suffix})"
        if self.kind == "static":
            return f"static(r={(1.0 if self.rate is None else self.rate):g})"
        return self.kind


def make_controller(spec: ControllerSpec, config: EAConfig):
    """Instantiate the controller for one run, validating against the config."""
    if config.lam % spec.subpopulations != 0:
        raise ConfigError(
            f"lambda={config.lam} not divisible by {spec.subpopulations} "
            f"subpopulations of controller {spec.label()!r}"
        )
    if spec.kind in ("two-rate", "three-rate"):
        state = two_rate_state(
            n=config.n,
            initial_rate=config.initial_rate,
            update_factor=spec.factor,
            random_steps=spec.random_steps,
            subpopulations=spec.subpopulations,
        )
        return SelfAdjustingController(state)
    if spec.kind == "static":
        return static_rate(1.0 if spec.rate is None else spec.rate, config.n)
    if spec.kind == "static-log":
        return static_rate(math.log(config.lam) / 2.0, config.n)
    return FitnessDependentController(config.n, config.lam)
