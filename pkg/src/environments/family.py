"""Transition prototypes of a layered MDP."""

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from src.mdp.model import ROW_TOLERANCE, TransitionKernel, frozen_array


def assemble_kernel(
    fragments: Sequence[np.ndarray], choice
) -> TransitionKernel:
    """Stack the chosen prototype fragment of every layer into one kernel."""
    rows = np.zeros(fragments[0].shape[1:])
    for fragment, k in zip(fragments, choice):
        rows = rows + fragment[k]
    return TransitionKernel(rows)


@dataclass(frozen=True)
class PrototypeFamily:
    """Candidate kernels per decision layer.

    ``fragments[l]`` has shape ``(K_l, S, A, S)`` and populates only the rows
    of states in layer ``l``. ``true_index[l]`` names the prototype the true
    kernel uses in layer ``l`` (``None`` when unknown). ``success_probs``
    carries the GridWorld parameters the fragments were built from, if any.
    """

    fragments: tuple
    true_index: tuple
    success_probs: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        fragments = tuple(frozen_array(f) for f in self.fragments)
        if not fragments:
            raise ValueError("a prototype family needs at least one layer")
        shape = fragments[0].shape[1:]
        for layer, fragment in enumerate(fragments):
            if fragment.ndim != 4 or fragment.shape[1:] != shape:
                raise ValueError(
                    f"layer {layer} fragment has shape {fragment.shape}"
                )
            if fragment.shape[0] < 1:
                raise ValueError(f"layer {layer} has no prototypes")
            if np.any(fragment < -ROW_TOLERANCE):
                raise ValueError(f"layer {layer} has negative probabilities")
            totals = fragment.sum(axis=3)
            stochastic = np.abs(totals - 1.0) <= ROW_TOLERANCE
            empty = totals == 0.0
            if not np.all(stochastic | empty):
                raise ValueError(f"layer {layer} has non-stochastic rows")
        if len(self.true_index) != len(fragments):
            raise ValueError(
                f"{len(self.true_index)} true indices for "
                f"{len(fragments)} layers"
            )
        true_index = tuple(
            None if k is None else int(k) for k in self.true_index
        )
        for layer, k in enumerate(true_index):
            if k is not None and not 0 <= k < fragments[layer].shape[0]:
                raise ValueError(f"true index {k} out of range at {layer}")
        object.__setattr__(self, "fragments", fragments)
        object.__setattr__(self, "true_index", true_index)
        if self.success_probs is not None:
            object.__setattr__(
                self, "success_probs", frozen_array(self.success_probs)
            )

    @property
    def num_layers(self) -> int:
        return len(self.fragments)

    @property
    def sizes(self) -> tuple:
        return tuple(f.shape[0] for f in self.fragments)

    @property
    def truth_known(self) -> bool:
        return all(k is not None for k in self.true_index)

    def n_prototypes(self, layer: int) -> int:
        return self.fragments[layer].shape[0]

    @cached_property
    def informative_mask(self) -> np.ndarray:
        """Pairs (s, a) where not every prototype of the layer agrees."""
        mask = np.zeros(self.fragments[0].shape[1:3], dtype=bool)
        for fragment in self.fragments:
            differs = np.any(fragment != fragment[:1], axis=(0, 3))
            mask |= differs
        mask.flags.writeable = False
        return mask

    def resolved(self, layer: int, indices: Sequence[int]) -> bool:
        """True when the given prototypes share one fragment on the layer."""
        fragment = self.fragments[layer]
        first = fragment[indices[0]]
        return all(np.array_equal(fragment[k], first) for k in indices[1:])

    def kernel_for(self, choice: Sequence[int]) -> TransitionKernel:
        if len(choice) != self.num_layers:
            raise ValueError(
                f"need one prototype per layer ({self.num_layers}), "
                f"got {len(choice)}"
            )
        return assemble_kernel(self.fragments, choice)

    def true_kernel(self) -> TransitionKernel:
        if not self.truth_known:
            raise ValueError("the true prototype is unknown for some layer")
        return self.kernel_for(self.true_index)
