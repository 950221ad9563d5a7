"""GridWorld as a loop-free layered MDP.

The learner starts at (0, 0) and moves up (action 0) or right (action 1)
towards (width - 1, height - 1). Cell (x1, x2) lies in layer x1 + x2. At an
interior cell the chosen direction succeeds with probability z and the other
direction is taken otherwise; on the right edge both actions move up, on the
top edge both actions move right.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from src.environments.family import assemble_kernel
from src.mdp.model import LayeredMdp, frozen_array

UP = 0
RIGHT = 1
N_ACTIONS = 2

DEFAULT_WIDTH = 5
DEFAULT_HEIGHT = 4
DEFAULT_REWARD_CELLS = (((2, 2), 3.0), ((1, 1), 5.0), ((1, 2), 1.0))

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridWorldSpec:
    """Grid geometry, reward placement and prototype success probabilities.

    ``success_probs`` has shape ``(num_layers - 1, K, 2)``: the success
    probability of each prototype for each action, per decision layer.
    """

    success_probs: np.ndarray
    true_index: tuple
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    reward_cells: tuple = DEFAULT_REWARD_CELLS
    mode: str = "fixed-gap"

    def __post_init__(self) -> None:
        probs = frozen_array(self.success_probs)
        expected_layers = self.width + self.height - 2
        if probs.ndim != 3 or probs.shape[0] != expected_layers:
            raise ValueError(
                f"success_probs must have shape ({expected_layers}, K, 2), "
                f"got {probs.shape}"
            )
        if probs.shape[2] != N_ACTIONS:
            raise ValueError("GridWorld prototypes need one z per action")
        if np.any((probs < 0.0) | (probs > 1.0)):
            raise ValueError("success probabilities must lie in [0, 1]")
        object.__setattr__(self, "success_probs", probs)
        object.__setattr__(
            self, "true_index", tuple(int(k) for k in self.true_index)
        )
        object.__setattr__(
            self,
            "reward_cells",
            tuple(
                ((int(x1), int(x2)), float(value))
                for (x1, x2), value in self.reward_cells
            ),
        )

    @property
    def n_prototypes(self) -> int:
        return self.success_probs.shape[1]

    @property
    def num_layers(self) -> int:
        return self.width + self.height - 1


@lru_cache(maxsize=16)
def grid_layout(width: int, height: int) -> tuple[tuple, tuple]:
    """Cells in global state order and the layer partition of state ids.

    Within a layer cells are ordered by ascending x1.
    """
    cells = []
    layers = []
    for layer in range(width + height - 1):
        members = []
        for x1 in range(width):
            x2 = layer - x1
            if 0 <= x2 < height:
                members.append(len(cells))
                cells.append((x1, x2))
        layers.append(tuple(members))
    return tuple(cells), tuple(layers)


def _moves(cell: tuple, action: int, z: float, width: int, height: int):
    x1, x2 = cell
    up = (x1, x2 + 1)
    right = (x1 + 1, x2)
    if x1 == width - 1:
        return ((up, 1.0),)
    if x2 == height - 1:
        return ((right, 1.0),)
    if action == UP:
        return ((up, z), (right, 1.0 - z))
    return ((right, z), (up, 1.0 - z))


def prototype_fragments(
    success_probs: np.ndarray, width: int, height: int
) -> tuple:
    """Kernel fragments ``(K, S, 2, S)`` per decision layer."""
    cells, layers = grid_layout(width, height)
    index = {cell: state for state, cell in enumerate(cells)}
    n_states = len(cells)
    fragments = []
    for layer, states in enumerate(layers[:-1]):
        layer_probs = success_probs[layer]
        fragment = np.zeros(
            (layer_probs.shape[0], n_states, N_ACTIONS, n_states)
        )
        for k in range(layer_probs.shape[0]):
            for state in states:
                for action in range(N_ACTIONS):
                    for target, p in _moves(
                        cells[state],
                        action,
                        float(layer_probs[k, action]),
                        width,
                        height,
                    ):
                        fragment[k, state, action, index[target]] += p
        fragments.append(frozen_array(fragment))
    return tuple(fragments)


def reward_table(spec: GridWorldSpec) -> np.ndarray:
    cells, _ = grid_layout(spec.width, spec.height)
    index = {cell: state for state, cell in enumerate(cells)}
    goal = (spec.width - 1, spec.height - 1)
    reward = np.zeros((len(cells), N_ACTIONS))
    for cell, value in spec.reward_cells:
        if cell not in index:
            raise ValueError(
                f"reward cell {cell} lies outside the "
                f"{spec.width}x{spec.height} grid"
            )
        if cell == goal:
            raise ValueError(f"reward cell {cell} is the terminal goal")
        if value < 0.0:
            raise ValueError(f"reward at {cell} must be nonnegative")
        reward[index[cell], :] = value
    return reward


def build_gridworld(spec: GridWorldSpec) -> LayeredMdp:
    """Layered MDP whose true kernel uses the true prototype of each layer."""
    cells, layers = grid_layout(spec.width, spec.height)
    if len(spec.true_index) != len(layers) - 1:
        raise ValueError(
            f"need one true index per decision layer "
            f"({len(layers) - 1}), got {len(spec.true_index)}"
        )
    fragments = prototype_fragments(
        spec.success_probs, spec.width, spec.height
    )
    kernel = assemble_kernel(fragments, spec.true_index)
    logger.debug(
        "Built %dx%d GridWorld with %d states and true prototypes %s.",
        spec.width,
        spec.height,
        len(cells),
        spec.true_index,
    )
    return LayeredMdp(
        layers=layers,
        n_actions=N_ACTIONS,
        reward=reward_table(spec),
        true_kernel=kernel,
        state_labels=cells,
    )
