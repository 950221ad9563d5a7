"""One-episode steps of the online learners.

Every step plans a policy from the current ``LearnerState``, plays it for
one episode under the true kernel and folds the trajectory back into the
counts. The state is updated in place and returned for convenience.
"""

import logging
import math

import numpy as np

from src.environments.family import PrototypeFamily
from src.learning.state import (
    ExperimentConfig,
    LearnerState,
    early_stop_check,
    eliminate_prototypes,
    select_anchor_pair,
)
from src.mdp.evaluation import sample_trajectory
from src.mdp.model import LayeredMdp, Policy, TransitionKernel
from src.planning.dynamic_programming import (
    CandidateSets,
    optimal_policy_dp,
    robust_policy_dp,
)

logger = logging.getLogger(__name__)


def _execute_episode(
    state: LearnerState,
    mdp: LayeredMdp,
    policy: Policy,
    rng: np.random.Generator,
) -> list:
    trajectory = sample_trajectory(mdp.true_kernel, policy, mdp, rng)
    state.record_trajectory(trajectory)
    return trajectory


def _minimizer_kernel(
    minimizers: np.ndarray, family: PrototypeFamily, mdp: LayeredMdp
) -> TransitionKernel:
    """Kernel that uses, at every pair, the prototype the adversary picked."""
    rows = np.zeros((mdp.n_states, mdp.n_actions, mdp.n_states))
    for layer, states in enumerate(mdp.layer_arrays[:-1]):
        fragment = family.fragments[layer]
        picked = minimizers[states]
        for action in range(mdp.n_actions):
            rows[states, action] = fragment[picked[:, action], states, action]
    return TransitionKernel(rows)


def rpo_aas_step(
    state: LearnerState,
    mdp: LayeredMdp,
    family: PrototypeFamily,
    config: ExperimentConfig,
    rng: np.random.Generator,
) -> tuple[Policy, LearnerState]:
    """Eliminate, plan robustly over the survivors, then play one episode.

    A frozen learner replays its policy and touches neither the candidate
    sets nor the planner.
    """
    state.begin_episode()
    if not state.frozen:
        for layer in range(mdp.num_layers - 1):
            eliminate_prototypes(state, mdp, family, layer, config)
        sets = CandidateSets(tuple(state.surviving), family.fragments)
        solution = robust_policy_dp(sets, mdp)
        state.robust_solution = solution
        state.current_policy = solution.policy
        state.planner_kernel = _minimizer_kernel(
            solution.per_pair_minimizers, family, mdp
        )
        if config.early_stop and early_stop_check(state, family):
            state.frozen = True
            logger.info(
                "Candidate sets resolved at episode %d; policy frozen.",
                state.episode + 1,
            )
    policy = state.current_policy
    _execute_episode(state, mdp, policy, rng)
    return policy, state


def _nearest_at_anchor(
    state: LearnerState,
    mdp: LayeredMdp,
    family: PrototypeFamily,
    layer: int,
) -> int:
    anchor = select_anchor_pair(state, mdp, layer, family.informative_mask)
    empirical = state.empirical_row(*anchor)
    if empirical is None:
        return 0
    rows = family.fragments[layer][:, anchor[0], anchor[1]]
    return int(np.argmin(np.abs(rows - empirical).sum(axis=1)))


def _nearest_over_layer(
    state: LearnerState,
    mdp: LayeredMdp,
    family: PrototypeFamily,
    layer: int,
) -> int:
    states = mdp.layer_arrays[layer]
    counts = state.counts[states]
    visited = counts > 0
    if not visited.any():
        return 0
    empirical = state.transition_counts[states][visited] / counts[visited][
        :, None
    ]
    rows = family.fragments[layer][:, states][:, visited]
    totals = np.abs(rows - empirical).sum(axis=(1, 2))
    return int(np.argmin(totals))


def _plan_with_choice(
    state: LearnerState,
    mdp: LayeredMdp,
    family: PrototypeFamily,
    chosen: tuple,
) -> Policy:
    if chosen != state.chosen:
        kernel = family.kernel_for(chosen)
        state.current_policy, _ = optimal_policy_dp(kernel, mdp)
        state.planner_kernel = kernel
        state.chosen = chosen
    return state.current_policy


def nrpo_npc_step(
    state: LearnerState,
    mdp: LayeredMdp,
    family: PrototypeFamily,
    config: ExperimentConfig,
    rng: np.random.Generator,
) -> tuple[Policy, LearnerState]:
    """Plan on the prototype nearest to the empirical anchor row per layer."""
    state.begin_episode()
    chosen = tuple(
        _nearest_at_anchor(state, mdp, family, layer)
        for layer in range(family.num_layers)
    )
    policy = _plan_with_choice(state, mdp, family, chosen)
    _execute_episode(state, mdp, policy, rng)
    return policy, state


def nrpo_npc2_step(
    state: LearnerState,
    mdp: LayeredMdp,
    family: PrototypeFamily,
    config: ExperimentConfig,
    rng: np.random.Generator,
) -> tuple[Policy, LearnerState]:
    """Plan on the prototype with the smallest summed l1 gap per layer.

    Unvisited pairs contribute nothing to the sum.
    """
    state.begin_episode()
    chosen = tuple(
        _nearest_over_layer(state, mdp, family, layer)
        for layer in range(family.num_layers)
    )
    policy = _plan_with_choice(state, mdp, family, chosen)
    _execute_episode(state, mdp, policy, rng)
    return policy, state


def optimistic_kernel(state: LearnerState, mdp: LayeredMdp) -> np.ndarray:
    """Empirical rows, uniform over the next layer where unvisited."""
    rows = np.zeros((mdp.n_states, mdp.n_actions, mdp.n_states))
    counts = state.counts
    for layer, states in enumerate(mdp.layer_arrays[:-1]):
        successors = mdp.layer_arrays[layer + 1]
        uniform = np.zeros(mdp.n_states)
        uniform[successors] = 1.0 / successors.size
        visited = counts[states] > 0
        block = np.where(
            visited[:, :, None],
            state.transition_counts[states]
            / np.maximum(counts[states], 1)[:, :, None],
            uniform,
        )
        rows[states] = block
    return rows


def ucbvi_step(
    state: LearnerState,
    mdp: LayeredMdp,
    config: ExperimentConfig,
    rng: np.random.Generator,
) -> tuple[Policy, LearnerState]:
    """Optimistic backward induction on the empirical model.

    b(s,a) = c (L - l(s)) sqrt(ln(3 |S| |A| T / delta) / max(N(s,a), 1)),
    with Q and V clipped to [0, r_max L].
    """
    state.begin_episode()
    rows = optimistic_kernel(state, mdp)
    log_term = math.log(
        3.0
        * mdp.n_states
        * mdp.n_actions
        * config.horizon_episodes
        / config.delta
    )
    ceiling = mdp.r_max * mdp.num_layers
    values = np.zeros(mdp.n_states)
    actions = np.full(mdp.n_states, -1, dtype=int)
    for layer in reversed(range(mdp.num_layers - 1)):
        states = mdp.layer_arrays[layer]
        counts = np.maximum(state.counts[states], 1)
        bonus = (
            config.ucbvi_bonus_scale
            * (mdp.num_layers - layer)
            * np.sqrt(log_term / counts)
        )
        q_values = np.clip(
            mdp.reward[states] + bonus + rows[states] @ values, 0.0, ceiling
        )
        best = np.argmax(q_values, axis=1)
        actions[states] = best
        values[states] = q_values[np.arange(states.size), best]

    policy = Policy.deterministic(actions, mdp.n_actions)
    state.current_policy = policy
    state.optimistic_values = values
    state.planner_kernel = TransitionKernel(rows)
    _execute_episode(state, mdp, policy, rng)
    return policy, state


def oracle_step(
    state: LearnerState,
    mdp: LayeredMdp,
    config: ExperimentConfig,
    rng: np.random.Generator,
) -> tuple[Policy, LearnerState]:
    """Play the optimal policy of the true kernel."""
    state.begin_episode()
    if state.current_policy is None:
        state.current_policy, _ = optimal_policy_dp(mdp.true_kernel, mdp)
        state.planner_kernel = mdp.true_kernel
    policy = state.current_policy
    _execute_episode(state, mdp, policy, rng)
    return policy, state
