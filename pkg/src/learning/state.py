"""Learner bookkeeping shared by every online algorithm.

Counts, empirical rows, surviving prototypes and the elimination test of the
adaptive ambiguity set all live here; the step functions in
``src.learning.learners`` only orchestrate them.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from src.environments.family import PrototypeFamily
from src.mdp.model import LayeredMdp, Policy, TransitionKernel

logger = logging.getLogger(__name__)


class Algorithm(str, Enum):
    RPO_AAS = "rpo-aas"
    NRPO_NPC = "nrpo-npc"
    NRPO_NPC2 = "nrpo-npc2"
    UCBVI = "ucbvi"
    ORACLE = "oracle"

    @classmethod
    def parse(cls, tag: str) -> "Algorithm":
        try:
            return cls(tag.strip().lower())
        except ValueError:
            known = ", ".join(a.value for a in cls)
            raise ValueError(
                f"unknown algorithm {tag!r} (expected one of {known})"
            ) from None

    @property
    def uses_prototypes(self) -> bool:
        return self is not Algorithm.UCBVI


@dataclass(frozen=True)
class ExperimentConfig:
    episodes: int
    algorithm: Algorithm = Algorithm.RPO_AAS
    delta: float = 0.05
    seed: int = 0
    early_stop: bool = False
    ucbvi_bonus_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.episodes < 0:
            raise ValueError(f"episodes must be >= 0, got {self.episodes}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.ucbvi_bonus_scale <= 0.0:
            raise ValueError("ucbvi_bonus_scale must be positive")
        if not isinstance(self.algorithm, Algorithm):
            object.__setattr__(
                self, "algorithm", Algorithm.parse(self.algorithm)
            )

    @property
    def horizon_episodes(self) -> int:
        """T inside confidence radii; a zero-episode run still logs with 1."""
        return max(self.episodes, 1)


@dataclass
class LearnerState:
    counts: np.ndarray
    transition_counts: np.ndarray
    surviving: list
    current_policy: Optional[Policy] = None
    episode: int = 0
    frozen: bool = False
    robust_solution: Optional[object] = None
    chosen: Optional[tuple] = None
    planner_kernel: Optional[TransitionKernel] = None
    optimistic_values: Optional[np.ndarray] = None
    coverage_loss_events: int = 0
    coverage_loss_this_episode: bool = False
    eliminated: int = 0
    eliminated_this_episode: int = 0

    @classmethod
    def initial(
        cls, mdp: LayeredMdp, family: Optional[PrototypeFamily] = None
    ) -> "LearnerState":
        n_states, n_actions = mdp.n_states, mdp.n_actions
        if family is None:
            surviving = []
        else:
            surviving = [
                tuple(range(family.n_prototypes(layer)))
                for layer in range(family.num_layers)
            ]
        return cls(
            counts=np.zeros((n_states, n_actions), dtype=np.int64),
            transition_counts=np.zeros(
                (n_states, n_actions, n_states), dtype=np.int64
            ),
            surviving=surviving,
        )

    def empirical(self) -> TransitionKernel:
        """P_hat(s,a) = N(s,a,.) / N(s,a); rows with N(s,a) = 0 undefined."""
        visited = self.counts > 0
        rows = np.full(self.transition_counts.shape, np.nan)
        rows[visited] = (
            self.transition_counts[visited] / self.counts[visited][:, None]
        )
        return TransitionKernel(rows, visited)

    def empirical_row(self, state: int, action: int) -> Optional[np.ndarray]:
        n = self.counts[state, action]
        if n == 0:
            return None
        return self.transition_counts[state, action] / n

    def record_trajectory(self, trajectory) -> None:
        for state, action, next_state in trajectory:
            self.counts[state, action] += 1
            self.transition_counts[state, action, next_state] += 1
        self.episode += 1

    def begin_episode(self) -> None:
        self.coverage_loss_this_episode = False
        self.eliminated_this_episode = 0

    def check_invariants(self, mdp: LayeredMdp) -> None:
        """Raise RuntimeError when the bookkeeping became inconsistent."""
        if not np.array_equal(
            self.transition_counts.sum(axis=2), self.counts
        ):
            raise RuntimeError("transition counts disagree with pair counts")
        for index, states in enumerate(mdp.layer_arrays[:-1]):
            visits = int(self.counts[states].sum())
            if visits != self.episode:
                raise RuntimeError(
                    f"layer {index} has {visits} visits after "
                    f"{self.episode} episodes"
                )
        if any(not layer for layer in self.surviving):
            raise RuntimeError("a candidate set became empty")


def hoeffding_radius(
    succ_layer_size: int,
    num_layers: int,
    episodes: int,
    delta: float,
    n: int,
) -> float:
    """sqrt(4 |S_{l+1}| ln(3 L T / delta) / n); infinite before any visit."""
    if n <= 0:
        return math.inf
    log_term = math.log(3.0 * num_layers * episodes / delta)
    return math.sqrt(4.0 * succ_layer_size * log_term / n)


def select_anchor_pair(
    state: LearnerState,
    mdp: LayeredMdp,
    layer: int,
    informative: Optional[np.ndarray] = None,
) -> tuple[int, int]:
    """Most visited (s, a) of the layer, first in (state, action) order.

    With an ``informative`` mask the search is limited to the pairs where
    prototypes disagree, unless the layer has none.
    """
    states = np.sort(mdp.layer_arrays[layer])
    counts = state.counts[states].astype(float)
    if informative is not None:
        mask = informative[states]
        if mask.any():
            counts = np.where(mask, counts, -1.0)
    flat = int(np.argmax(counts))
    row, action = divmod(flat, mdp.n_actions)
    return int(states[row]), int(action)


def eliminate_prototypes(
    state: LearnerState,
    mdp: LayeredMdp,
    family: PrototypeFamily,
    layer: int,
    config: ExperimentConfig,
) -> tuple:
    """Drop the prototypes whose anchor row leaves the Hoeffding ball."""
    candidates = state.surviving[layer]
    if len(candidates) == 1:
        return candidates
    anchor = select_anchor_pair(
        state, mdp, layer, family.informative_mask
    )
    n = int(state.counts[anchor])
    radius = hoeffding_radius(
        len(mdp.layers[layer + 1]),
        mdp.num_layers,
        config.horizon_episodes,
        config.delta,
        n,
    )
    if math.isinf(radius):
        return candidates

    empirical = state.empirical_row(*anchor)
    rows = family.fragments[layer][list(candidates), anchor[0], anchor[1]]
    distances = np.abs(rows - empirical).sum(axis=1)
    kept = tuple(k for k, d in zip(candidates, distances) if d <= radius)
    if not kept:
        nearest = candidates[int(np.argmin(distances))]
        kept = (nearest,)
        state.coverage_loss_events += 1
        state.coverage_loss_this_episode = True
        logger.warning(
            "Every prototype of layer %d left the confidence ball at "
            "episode %d; keeping the nearest one (%d).",
            layer,
            state.episode + 1,
            nearest,
        )
    removed = len(candidates) - len(kept)
    if removed:
        state.eliminated += removed
        state.eliminated_this_episode += removed
        logger.debug(
            "Episode %d, layer %d: anchor %s (n=%d, radius %.4f) keeps %s.",
            state.episode + 1,
            layer,
            anchor,
            n,
            radius,
            kept,
        )
    state.surviving[layer] = kept
    return kept


def early_stop_check(state: LearnerState, family: PrototypeFamily) -> bool:
    """True once the survivors of every layer share one transition fragment.

    A singleton set is resolved trivially.
    """
    return all(
        family.resolved(layer, indices)
        for layer, indices in enumerate(state.surviving)
    )
