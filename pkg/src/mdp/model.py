"""Core types for layered (loop-free) episodic MDPs.

States are identified by global integer ids. Every state belongs to exactly
one layer and transitions only lead from layer ``l`` to layer ``l + 1``.
Kernels are stored densely as ``(n_states, n_actions, n_states)`` arrays;
rows of terminal states are all zero.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

# Tolerance for constructed probability rows.
ROW_TOLERANCE = 1e-12
# Tolerance for quantities derived from several exact computations.
DERIVED_TOLERANCE = 1e-9

logger = logging.getLogger(__name__)


def frozen_array(values, dtype=float) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class TransitionKernel:
    """Transition rows P(.|s,a).

    ``defined`` marks rows that carry a probability vector. Rows induced from
    an occupancy measure with zero mass are left undefined (NaN) instead of
    being made up.
    """

    rows: np.ndarray
    defined: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        rows = frozen_array(self.rows)
        if rows.ndim != 3 or rows.shape[0] != rows.shape[2]:
            raise ValueError(
                f"kernel rows must have shape (S, A, S), got {rows.shape}"
            )
        object.__setattr__(self, "rows", rows)
        if self.defined is None:
            defined = ~np.isnan(rows).any(axis=2)
        else:
            defined = np.asarray(self.defined, dtype=bool)
        object.__setattr__(self, "defined", frozen_array(defined, bool))

    @property
    def n_states(self) -> int:
        return self.rows.shape[0]

    @property
    def n_actions(self) -> int:
        return self.rows.shape[1]

    def row(self, state: int, action: int) -> Optional[np.ndarray]:
        if not self.defined[state, action]:
            return None
        return self.rows[state, action]


@dataclass(frozen=True)
class Policy:
    """Action probabilities per state.

    Deterministic policies are the canonical form and have a single 1.0 per
    non-terminal row. Rows of terminal states are zero; rows induced from a
    zero-mass state are NaN and flagged undefined.
    """

    probabilities: np.ndarray
    defined: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        probabilities = frozen_array(self.probabilities)
        if probabilities.ndim != 2:
            raise ValueError(
                "policy probabilities must have shape (S, A), "
                f"got {probabilities.shape}"
            )
        object.__setattr__(self, "probabilities", probabilities)
        if self.defined is None:
            defined = ~np.isnan(probabilities).any(axis=1)
        else:
            defined = np.asarray(self.defined, dtype=bool)
        object.__setattr__(self, "defined", frozen_array(defined, bool))

    @classmethod
    def deterministic(cls, actions: Sequence[int], n_actions: int) -> "Policy":
        """Build a policy from one action per state; ``-1`` marks terminal."""
        actions = np.asarray(actions, dtype=int)
        probabilities = np.zeros((actions.shape[0], n_actions))
        playable = actions >= 0
        probabilities[np.flatnonzero(playable), actions[playable]] = 1.0
        return cls(probabilities)

    @cached_property
    def is_deterministic(self) -> bool:
        rows = np.nan_to_num(self.probabilities)
        return bool(np.all((rows == 0.0) | (rows == 1.0)))

    @cached_property
    def actions(self) -> np.ndarray:
        """Greedy action per state, ``-1`` where the row carries no mass."""
        rows = np.nan_to_num(self.probabilities)
        chosen = np.argmax(rows, axis=1)
        chosen[rows.sum(axis=1) == 0.0] = -1
        chosen.flags.writeable = False
        return chosen

    @cached_property
    def key(self) -> bytes:
        """Hashable fingerprint, used to memoise policy evaluations."""
        return np.nan_to_num(self.probabilities, nan=-1.0).tobytes()


@dataclass(frozen=True)
class LayeredMdp:
    """Loop-free MDP with deterministic rewards.

    ``layers`` lists the global state ids of S_0 .. S_{L-1}; ``num_layers``
    is the number of layer sets, and an episode takes ``num_layers - 1``
    transitions.
    """

    layers: tuple
    n_actions: int
    reward: np.ndarray
    true_kernel: TransitionKernel
    state_labels: tuple = field(default=())

    def __post_init__(self) -> None:
        layers = tuple(tuple(int(s) for s in layer) for layer in self.layers)
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "reward", frozen_array(self.reward))

    @property
    def n_states(self) -> int:
        return self.reward.shape[0]

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def horizon(self) -> int:
        return self.num_layers - 1

    @property
    def initial_state(self) -> int:
        return self.layers[0][0]

    @property
    def terminal_state(self) -> int:
        return self.layers[-1][0]

    @cached_property
    def layer_of(self) -> np.ndarray:
        """Layer index per state, ``-1`` for states listed in no layer."""
        layer_of = np.full(self.n_states, -1, dtype=int)
        for index, layer in enumerate(self.layers):
            for state in layer:
                if 0 <= state < self.n_states:
                    layer_of[state] = index
        layer_of.flags.writeable = False
        return layer_of

    @cached_property
    def layer_arrays(self) -> tuple:
        return tuple(np.asarray(layer, dtype=int) for layer in self.layers)

    @cached_property
    def r_max(self) -> float:
        """Largest reward; 1.0 when every reward is zero."""
        largest = float(self.reward.max()) if self.reward.size else 0.0
        return largest if largest > 0.0 else 1.0

    def label(self, state: int) -> str:
        if self.state_labels:
            return str(self.state_labels[state])
        return str(state)


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_layered_mdp(mdp: LayeredMdp) -> ValidationReport:
    """Check the structural invariants of a layered MDP.

    Never raises; every failed check is listed in the returned report.
    """
    violations = []
    n_states = mdp.n_states
    rows = mdp.true_kernel.rows

    if mdp.reward.shape != (n_states, mdp.n_actions):
        violations.append(
            f"reward shape {mdp.reward.shape} != "
            f"({n_states}, {mdp.n_actions})"
        )
    elif np.any(mdp.reward < 0.0):
        violations.append("reward table has negative entries")
    if rows.shape != (n_states, mdp.n_actions, n_states):
        violations.append(
            f"kernel shape {rows.shape} != "
            f"({n_states}, {mdp.n_actions}, {n_states})"
        )
        return ValidationReport(tuple(violations))

    if mdp.num_layers < 2:
        violations.append("an MDP needs at least two layers")
        return ValidationReport(tuple(violations))
    if len(mdp.layers[0]) != 1:
        violations.append(
            f"first layer is not a singleton ({len(mdp.layers[0])} states)"
        )
    if len(mdp.layers[-1]) != 1:
        violations.append(
            f"last layer is not a singleton ({len(mdp.layers[-1])} states)"
        )

    seen = {}
    for index, layer in enumerate(mdp.layers):
        for state in layer:
            if not 0 <= state < n_states:
                violations.append(
                    f"layer {index} lists unknown state {state}"
                )
            elif state in seen:
                violations.append(
                    f"state {state} appears in layers {seen[state]} "
                    f"and {index}"
                )
            else:
                seen[state] = index
    missing = sorted(set(range(n_states)) - set(seen))
    if missing:
        violations.append(f"states {missing} belong to no layer")

    for index, layer in enumerate(mdp.layers[:-1]):
        successors = np.zeros(n_states, dtype=bool)
        successors[[s for s in mdp.layers[index + 1] if 0 <= s < n_states]] = (
            True
        )
        for state in layer:
            if not 0 <= state < n_states:
                continue
            for action in range(mdp.n_actions):
                row = rows[state, action]
                label = f"row (s={mdp.label(state)}, a={action})"
                if np.any(np.isnan(row)):
                    violations.append(f"{label} is undefined")
                    continue
                if np.any(row < -ROW_TOLERANCE):
                    violations.append(f"{label} has negative entries")
                total = float(row.sum())
                if abs(total - 1.0) > ROW_TOLERANCE:
                    violations.append(f"{label} sums to {total:.12g}")
                leaked = np.flatnonzero((row != 0.0) & ~successors)
                if leaked.size:
                    targets = ", ".join(mdp.label(s) for s in leaked)
                    violations.append(
                        f"{label} leaks outside layer {index + 1} "
                        f"to {targets}"
                    )

    if violations:
        logger.debug("MDP validation found %d issue(s).", len(violations))
    return ValidationReport(tuple(violations))
