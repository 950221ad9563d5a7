"""Random layered instances with a known true prototype per layer."""

import logging
from typing import Sequence

import numpy as np

from src.environments.family import PrototypeFamily
from src.mdp.model import LayeredMdp

logger = logging.getLogger(__name__)


def generate_random_instance(
    layer_sizes: Sequence[int],
    n_actions: int,
    n_prototypes,
    rng: np.random.Generator,
) -> tuple[LayeredMdp, PrototypeFamily]:
    """Draw an MDP and a prototype family that contains its true kernel.

    ``n_prototypes`` is either one count for every decision layer or one
    count per decision layer. Prototype rows are Dirichlet(1) draws over the
    next layer, rewards are U[0, 1] (zero at the terminal state) and the true
    index of every layer is uniform.
    """
    sizes = [int(n) for n in layer_sizes]
    if len(sizes) < 2 or sizes[0] != 1 or sizes[-1] != 1:
        raise ValueError(
            f"layer sizes must start and end with a singleton, got {sizes}"
        )
    if min(sizes) < 1 or n_actions < 1:
        raise ValueError("layer sizes and the action count must be positive")
    if np.isscalar(n_prototypes):
        counts = [int(n_prototypes)] * (len(sizes) - 1)
    else:
        counts = [int(k) for k in n_prototypes]
    if len(counts) != len(sizes) - 1 or min(counts) < 1:
        raise ValueError(f"invalid prototype counts {counts}")

    offsets = np.concatenate([[0], np.cumsum(sizes)])
    n_states = int(offsets[-1])
    layers = tuple(
        tuple(range(offsets[i], offsets[i + 1])) for i in range(len(sizes))
    )

    fragments = []
    true_index = []
    for layer, n_k in enumerate(counts):
        fragment = np.zeros((n_k, n_states, n_actions, n_states))
        states = slice(offsets[layer], offsets[layer + 1])
        targets = slice(offsets[layer + 1], offsets[layer + 2])
        fragment[:, states, :, targets] = rng.dirichlet(
            np.ones(sizes[layer + 1]),
            size=(n_k, sizes[layer], n_actions),
        )
        fragments.append(fragment)
        true_index.append(int(rng.integers(n_k)))

    family = PrototypeFamily(tuple(fragments), tuple(true_index))
    reward = rng.uniform(0.0, 1.0, size=(n_states, n_actions))
    reward[layers[-1][0]] = 0.0
    mdp = LayeredMdp(
        layers=layers,
        n_actions=n_actions,
        reward=reward,
        true_kernel=family.true_kernel(),
    )
    logger.debug(
        "Random instance with layer sizes %s and prototypes %s.",
        sizes,
        counts,
    )
    return mdp, family
