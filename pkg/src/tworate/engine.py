"""The (1+lambda) generation loop: offspring, elitist selection, rate update.

Two interchangeable kernels drive a generation. The delta kernel never
materializes offspring: it draws per-offspring flip counts (which determine
OneMax fitness exactly) and reconstructs the winning offspring's bit flips
only when the parent is replaced, by choosing flip positions uniformly among
the parent's one- and zero-bits. The bitwise kernel creates every offspring
explicitly and is kept as the testing oracle.

Random draws per generation happen in a fixed, documented order so runs are
bit-for-bit reproducible from a seed: per subpopulation the one-flip vector
then the zero-flip vector, one uniform integer for tie-breaking, the
reconstruction position draws if the parent is replaced with actual flips,
and finally the controller's update coins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigError, EAConfig, SearchPoint, _bits_from_mask, _mask_from_bits, onemax, random_search_point
from .controllers import ControllerSpec, GenerationOutcome, make_controller
from .mutation import mutate


@dataclass(frozen=True)
class EAState:
    """Parent, its fitness distance, the controller, and progress counters."""

    parent: SearchPoint
    parent_distance: int
    controller: object
    generation: int = 0
    evaluations: int = 0


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one run; ``trajectory`` rows are (generation, distance, rate)."""

    seed: int
    generations: int
    evaluations: int
    hit_optimum: bool
    trajectory: tuple[tuple[int, int, float], ...] | None = None


def _select_winner(
    rng: np.random.Generator, per_subpop: list[tuple[np.ndarray, np.ndarray, np.ndarray]]
) -> tuple[int, int, int, int]:
    """Uniform tie-break over all offspring attaining the minimum distance.

    Returns (best distance, winner subpopulation, winner one-flips, winner
    zero-flips). One uniform draw selects among the tied offspring, which is
    distributionally identical to reservoir sampling in creation order.
    """
    best = min(int(d.min()) for _, _, d in per_subpop)
    tie_indices = [np.flatnonzero(d == best) for _, _, d in per_subpop]
    counts = [idx.size for idx in tie_indices]
    pick = int(rng.integers(sum(counts)))
    for subpop, (xs, zs, _) in enumerate(per_subpop):
        if pick < counts[subpop]:
            offspring = int(tie_indices[subpop][pick])
            return best, subpop, int(xs[offspring]), int(zs[offspring])
        pick -= counts[subpop]
    raise AssertionError("tie-break index out of range")


def _reconstruct_child(
    parent: SearchPoint, ones_flipped: int, zeros_flipped: int, rng: np.random.Generator
) -> SearchPoint:
    """Sample a concrete child conditional on the drawn flip counts.

    Uniform position choices make the delta kernel's search-point law identical
    to full standard bit mutation conditioned on the flip counts.
    """
    if ones_flipped == 0 and zeros_flipped == 0:
        return parent
    original = _bits_from_mask(parent.mask, parent.n)
    bits = original.copy()
    if ones_flipped:
        ones_idx = np.flatnonzero(original)
        bits[rng.choice(ones_idx, size=ones_flipped, replace=False)] ^= 1
    if zeros_flipped:
        zeros_idx = np.flatnonzero(original == 0)
        bits[rng.choice(zeros_idx, size=zeros_flipped, replace=False)] ^= 1
    return SearchPoint(n=parent.n, mask=_mask_from_bits(bits))


def run_generation(
    config: EAConfig, state: EAState, rng: np.random.Generator, bitwise: bool = False
) -> tuple[EAState, GenerationOutcome]:
    """One generation: create lambda offspring, select elitist, update the rate.

    The best offspring is chosen uniformly at random among all attaining the
    minimum fitness distance; it replaces the parent iff it is at least as
    good. The controller is updated every generation, also when all offspring
    are worse than the parent.
    """
    if state.parent_distance < 1:
        raise ConfigError("run_generation requires parent_distance > 0")
    if bitwise:
        return _run_generation_bitwise(config, state, rng)

    n, k = config.n, state.parent_distance
    plan = state.controller.propose(config, k)
    per_subpop = []
    for size, p in plan:
        xs = rng.binomial(k, p, size=size)
        zs = rng.binomial(n - k, p, size=size)
        per_subpop.append((xs, zs, zs - xs + k))

    best, winner_subpop, w_ones, w_zeros = _select_winner(rng, per_subpop)
    outcome = GenerationOutcome(
        winner_subpopulation=winner_subpop,
        best_fitness_distance=best,
        improved=best < k,
    )

    parent, distance = state.parent, k
    if best <= k:
        parent = _reconstruct_child(state.parent, w_ones, w_zeros, rng)
        distance = best

    controller = state.controller.update(outcome, rng)
    next_state = EAState(
        parent=parent,
        parent_distance=distance,
        controller=controller,
        generation=state.generation + 1,
        evaluations=state.evaluations + config.lam,
    )
    return next_state, outcome


def _run_generation_bitwise(
    config: EAConfig, state: EAState, rng: np.random.Generator
) -> tuple[EAState, GenerationOutcome]:
    """Reference generation creating every offspring with per-bit mutation."""
    k = state.parent_distance
    plan = state.controller.propose(config, k)
    children: list[SearchPoint] = []
    subpop_of: list[int] = []
    for subpop, (size, p) in enumerate(plan):
        for _ in range(size):
            children.append(mutate(state.parent, p, rng, kernel="per-bit"))
            subpop_of.append(subpop)
    distances = np.array([onemax(child) for child in children])
    best = int(distances.min())
    ties = np.flatnonzero(distances == best)
    winner = int(ties[int(rng.integers(ties.size))])

    outcome = GenerationOutcome(
        winner_subpopulation=subpop_of[winner],
        best_fitness_distance=best,
        improved=best < k,
    )
    parent, distance = state.parent, k
    if best <= k:
        parent, distance = children[winner], best
    controller = state.controller.update(outcome, rng)
    next_state = EAState(
        parent=parent,
        parent_distance=distance,
        controller=controller,
        generation=state.generation + 1,
        evaluations=state.evaluations + config.lam,
    )
    return next_state, outcome


def run_ea(
    config: EAConfig,
    controller_spec: ControllerSpec,
    seed: int,
    trajectory: bool = False,
    bitwise: bool = False,
) -> RunRecord:
    """Run until the optimum is hit or the generation budget is exhausted.

    Deterministic given (config, controller_spec, seed). The trajectory, when
    requested, records (t, fitness distance, rate) after every generation plus
    the initial state at t=0; the rate column is the rate in force for the
    next generation.
    """
    controller = make_controller(controller_spec, config)
    budget = config.effective_budget()
    rng = np.random.default_rng(seed)

    parent = random_search_point(config.n, rng)
    state = EAState(parent=parent, parent_distance=onemax(parent), controller=controller)
    traj: list[tuple[int, int, float]] | None = None
    if trajectory:
        traj = [(0, state.parent_distance, controller.current_rate(state.parent_distance))]

    while state.parent_distance > 0 and state.generation < budget:
        state, _ = run_generation(config, state, rng, bitwise=bitwise)
        if traj is not None:
            traj.append(
                (
                    state.generation,
                    state.parent_distance,
                    state.controller.current_rate(state.parent_distance),
                )
            )

    return RunRecord(
        seed=seed,
        generations=state.generation,
        evaluations=state.evaluations,
        hit_optimum=state.parent_distance == 0,
        trajectory=None if traj is None else tuple(traj),
    )


def write_trajectory_csv(record: RunRecord, destination) -> None:
    """Emit the trajectory as CSV rows ``t,k,r`` with a header line."""
    if record.trajectory is None:
        raise ConfigError("run record carries no trajectory")
    lines = ["t,k,r"]
    lines.extend(f"{t},{k},{r!r}" for t, k, r in record.trajectory)
    with open(destination, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
