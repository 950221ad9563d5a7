"""Optimal and robust backward induction over layered MDPs.

The robust planner works on (s,a)-rectangular ambiguity sets built from the
surviving prototypes of each layer: the adversary picks a prototype row
independently at every state-action pair, so the inner minimum can be taken
pair by pair. One backward sweep costs
O(#pairs x prototypes per layer x successor-layer size).
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.mdp.evaluation import value_function
from src.mdp.model import LayeredMdp, Policy, TransitionKernel, frozen_array

BRUTE_FORCE_LIMIT = 10**6
TIE_TOLERANCE = 1e-12

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CandidateSets:
    """Surviving prototype indices per decision layer.

    ``fragments[l]`` has shape ``(K_l, S, A, S)``; only rows of states in
    layer ``l`` are populated.
    """

    indices: tuple
    fragments: tuple

    def __post_init__(self) -> None:
        indices = tuple(
            tuple(sorted(int(k) for k in layer)) for layer in self.indices
        )
        if len(indices) != len(self.fragments):
            raise ValueError(
                f"{len(indices)} candidate sets for "
                f"{len(self.fragments)} prototype layers"
            )
        for layer, (chosen, fragment) in enumerate(
            zip(indices, self.fragments)
        ):
            if not chosen:
                raise ValueError(f"candidate set of layer {layer} is empty")
            if chosen[0] < 0 or chosen[-1] >= fragment.shape[0]:
                raise ValueError(
                    f"layer {layer} lists unknown prototype(s) {chosen}"
                )
        object.__setattr__(self, "indices", indices)

    @classmethod
    def from_family(cls, family, indices=None) -> "CandidateSets":
        if indices is None:
            indices = [range(f.shape[0]) for f in family.fragments]
        return cls(tuple(tuple(layer) for layer in indices), family.fragments)

    def sizes(self) -> tuple:
        return tuple(len(layer) for layer in self.indices)


@dataclass(frozen=True)
class RobustSolution:
    policy: Policy
    worst_case_values: np.ndarray
    robust_q: np.ndarray
    per_pair_minimizers: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "worst_case_values", frozen_array(self.worst_case_values)
        )
        object.__setattr__(self, "robust_q", frozen_array(self.robust_q))
        object.__setattr__(
            self,
            "per_pair_minimizers",
            frozen_array(self.per_pair_minimizers, int),
        )

    def lower_bound(self, mdp: LayeredMdp) -> float:
        return float(self.worst_case_values[mdp.initial_state])


def optimal_policy_dp(
    kernel: TransitionKernel, mdp: LayeredMdp
) -> tuple[Policy, np.ndarray]:
    """Standard backward induction; ties go to the smallest action index."""
    values = np.zeros(mdp.n_states)
    actions = np.full(mdp.n_states, -1, dtype=int)
    rows = np.nan_to_num(kernel.rows)
    for states in reversed(mdp.layer_arrays[:-1]):
        backups = mdp.reward[states] + rows[states] @ values
        best = np.argmax(backups, axis=1)
        actions[states] = best
        values[states] = backups[np.arange(states.size), best]
    return Policy.deterministic(actions, mdp.n_actions), values


def robust_policy_dp(sets: CandidateSets, mdp: LayeredMdp) -> RobustSolution:
    """Max-min backward induction over the rectangular ambiguity set.

    Q(s,a) = min_k [r(s,a) + sum_s' P^k(s'|s,a) V(s')] over the surviving
    prototypes of the layer of s. Inner ties go to the smallest prototype
    index, outer ties to the smallest action index.
    """
    if len(sets.indices) != mdp.num_layers - 1:
        raise ValueError(
            f"{len(sets.indices)} candidate sets for "
            f"{mdp.num_layers - 1} decision layers"
        )
    n_states, n_actions = mdp.n_states, mdp.n_actions
    values = np.zeros(n_states)
    robust_q = np.zeros((n_states, n_actions))
    minimizers = np.full((n_states, n_actions), -1, dtype=int)
    actions = np.full(n_states, -1, dtype=int)

    for layer in reversed(range(mdp.num_layers - 1)):
        states = mdp.layer_arrays[layer]
        candidates = np.asarray(sets.indices[layer], dtype=int)
        rows = sets.fragments[layer][candidates][:, states]
        backups = mdp.reward[states][None, :, :] + rows @ values
        inner = np.argmin(backups, axis=0)
        q_values = np.take_along_axis(backups, inner[None], axis=0)[0]
        best = np.argmax(q_values, axis=1)
        robust_q[states] = q_values
        minimizers[states] = candidates[inner]
        actions[states] = best
        values[states] = q_values[np.arange(states.size), best]

    return RobustSolution(
        policy=Policy.deterministic(actions, n_actions),
        worst_case_values=values,
        robust_q=robust_q,
        per_pair_minimizers=minimizers,
    )


def brute_force_robust_oracle(
    sets: CandidateSets,
    mdp: LayeredMdp,
    limit: int = BRUTE_FORCE_LIMIT,
) -> tuple[Policy, float]:
    """Exhaustive max-min search used to verify ``robust_policy_dp``.

    Every deterministic policy is evaluated against every prototype
    assignment of the pairs it plays; pairs the policy never plays do not
    change R(pi, P), so leaving them out keeps the minimum unchanged.
    Policies are enumerated in lexicographic order over ascending state ids
    and the first maximiser wins.
    """
    decision_states = [s for layer in mdp.layers[:-1] for s in layer]
    layer_of = mdp.layer_of
    size = n_actions_power = mdp.n_actions ** len(decision_states)
    for state in decision_states:
        size *= len(sets.indices[layer_of[state]]) ** mdp.n_actions
    if size > limit:
        raise ValueError(
            f"instance too large for brute force: {size} > {limit} "
            f"({n_actions_power} policies)"
        )

    best_policy = None
    best_value = -math.inf
    for choice in itertools.product(
        range(mdp.n_actions), repeat=len(decision_states)
    ):
        actions = np.full(mdp.n_states, -1, dtype=int)
        actions[decision_states] = choice
        policy = Policy.deterministic(actions, mdp.n_actions)
        value = _worst_case_value(sets, mdp, policy, decision_states)
        if value > best_value + TIE_TOLERANCE:
            best_policy, best_value = policy, value
    return best_policy, best_value


def _worst_case_value(
    sets: CandidateSets,
    mdp: LayeredMdp,
    policy: Policy,
    decision_states: Sequence[int],
) -> float:
    layer_of = mdp.layer_of
    options = [sets.indices[layer_of[s]] for s in decision_states]
    worst = math.inf
    for assignment in itertools.product(*options):
        rows = np.zeros((mdp.n_states, mdp.n_actions, mdp.n_states))
        for state, prototype in zip(decision_states, assignment):
            action = policy.actions[state]
            rows[state, action] = sets.fragments[layer_of[state]][
                prototype, state, action
            ]
        kernel = TransitionKernel(rows)
        value = value_function(policy, kernel, mdp)[mdp.initial_state]
        worst = min(worst, float(value))
    return worst
