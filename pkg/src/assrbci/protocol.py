"""
This module encodes the listening protocol: which direction carries which
modulation frequency, the block structure of target directions, the
random presentation order inside each trial and the resulting stimulus
timeline.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from assrbci.stimgen import Direction, StimulusKind

logger = logging.getLogger(__name__)

DEFAULT_DIRECTION_FREQUENCIES = {
    Direction.left: 25.0,
    Direction.center: 40.0,
    Direction.right: 60.0,
}
DEFAULT_BLOCKS = (Direction.left, Direction.center, Direction.right)
DEFAULT_LENGTHS = (0.5, 1.0, 3.0)
DEFAULT_KINDS = tuple(StimulusKind)


@dataclass(frozen=True)
class ProtocolConfig:
    """
    The experimental protocol.

    :param direction_frequencies: the modulation frequency presented from
      each direction. Must map the three directions onto three distinct
      frequencies.

    :param trials_per_block: number of consecutive trials sharing a target
      direction.

    :param blocks: the target direction of each block, in order. Every
      direction is the target of exactly one block.

    :param inter_stimulus_gap: seconds between the offset of one stimulus
      and the onset of the next.

    :param block_break: seconds of rest between blocks.

    :param stimulus_lengths: stimulus durations, in seconds, to evaluate.

    :param stimulus_kinds: stimulus types to evaluate.

    :param rng_seed: base seed used when no explicit seed is given.
    """

    direction_frequencies: Dict[Direction, float] = field(
        default_factory=lambda: dict(DEFAULT_DIRECTION_FREQUENCIES)
    )
    trials_per_block: int = 10
    blocks: Tuple[Direction, ...] = DEFAULT_BLOCKS
    inter_stimulus_gap: float = 0.375
    block_break: float = 10.0
    stimulus_lengths: Tuple[float, ...] = DEFAULT_LENGTHS
    stimulus_kinds: Tuple[StimulusKind, ...] = DEFAULT_KINDS
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if set(self.direction_frequencies) != set(Direction):
            raise ValueError("direction_frequencies must name every direction once")
        frequencies = list(self.direction_frequencies.values())
        if len(set(frequencies)) != len(frequencies):
            raise ValueError("direction_frequencies must be distinct")
        if any(not f > 0 for f in frequencies):
            raise ValueError("direction_frequencies must be positive")
        if sorted(d.code for d in self.blocks) != sorted(d.code for d in Direction):
            raise ValueError("blocks must list every direction exactly once")
        if self.trials_per_block < 2:
            raise ValueError(
                f"trials_per_block must be >= 2, got {self.trials_per_block}"
            )
        if self.inter_stimulus_gap < 0:
            raise ValueError("inter_stimulus_gap must not be negative")
        if self.block_break < 0:
            raise ValueError("block_break must not be negative")
        if not self.stimulus_lengths or any(
            not length > 0 for length in self.stimulus_lengths
        ):
            raise ValueError("stimulus_lengths must be positive and non-empty")
        if len(set(self.stimulus_lengths)) != len(self.stimulus_lengths):
            raise ValueError("stimulus_lengths must be distinct")
        if not self.stimulus_kinds:
            raise ValueError("stimulus_kinds must not be empty")
        if len(set(self.stimulus_kinds)) != len(self.stimulus_kinds):
            raise ValueError("stimulus_kinds must be distinct")

    @property
    def n_trials(self) -> int:
        return self.trials_per_block * len(self.blocks)

    @property
    def conditions(self) -> List[Tuple[StimulusKind, float]]:
        """Every (kind, length) pair, kinds outermost"""
        return [
            (kind, float(length))
            for kind in self.stimulus_kinds
            for length in self.stimulus_lengths
        ]

    def frequency(self, direction: Direction) -> float:
        return float(self.direction_frequencies[direction])

    def target_of(self, trial: int) -> Direction:
        """Target direction of a 1-based trial number"""
        if not 1 <= trial <= self.n_trials:
            raise ValueError(f"Trial {trial} is outside 1..{self.n_trials}")
        return self.blocks[(trial - 1) // self.trials_per_block]


@dataclass(frozen=True)
class Trial:
    index: int  # 1-based
    target: Direction
    order: Tuple[Direction, ...]


@dataclass(frozen=True)
class TimelineEntry:
    trial: int
    position: int
    direction: Direction
    onset: float


def schedule_trials(cfg: ProtocolConfig, seed: int) -> List[Trial]:
    """Plan every trial of a session.

    Each trial presents the three directions once in a seeded random order.
    Targets follow the block structure, so with the default protocol trials
    1-10 attend left, 11-20 center and 21-30 right.
    """
    rng = np.random.default_rng(seed)
    directions = list(Direction)
    plan = []
    for index in range(1, cfg.n_trials + 1):
        order = tuple(directions[i] for i in rng.permutation(len(directions)))
        plan.append(Trial(index=index, target=cfg.target_of(index), order=order))
    logger.debug(f"scheduled {len(plan)} trials with seed {seed}")
    return plan


def stimulus_timeline(
    cfg: ProtocolConfig, plan: Sequence[Trial], length: float
) -> List[TimelineEntry]:
    """Onset time of every stimulus in a plan, in seconds from session start.

    Stimuli follow each other after ``inter_stimulus_gap``; a block break
    replaces the gap when the target direction changes.
    """
    entries = []
    t = 0.0
    previous = None
    for trial in plan:
        if previous is not None and trial.target is not previous.target:
            t += cfg.block_break - cfg.inter_stimulus_gap
        for position, direction in enumerate(trial.order):
            entries.append(TimelineEntry(trial.index, position, direction, t))
            t += length + cfg.inter_stimulus_gap
        previous = trial
    return entries


def condition_seed(seed: int, kind: StimulusKind, length: float) -> int:
    """Derive the seed of one (kind, length) condition from a session seed.

    Conditions of the same session get unrelated random streams.
    """
    kinds = list(StimulusKind)
    sequence = np.random.SeedSequence(
        [int(seed), kinds.index(kind), int(round(length * 1000))]
    )
    return int(sequence.generate_state(1)[0])


def epoch_seed(cond_seed: int, trial: int, direction: Direction, salt: int = 0) -> int:
    """Derive the seed of one epoch inside a condition"""
    sequence = np.random.SeedSequence(
        [int(cond_seed), int(trial), direction.code, int(salt)]
    )
    return int(sequence.generate_state(1)[0])
