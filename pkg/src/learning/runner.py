"""Episode loop shared by all learners and the per-episode records."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.environments.family import PrototypeFamily
from src.learning.learners import (
    nrpo_npc2_step,
    nrpo_npc_step,
    oracle_step,
    rpo_aas_step,
    ucbvi_step,
)
from src.learning.state import Algorithm, ExperimentConfig, LearnerState
from src.mdp.evaluation import value_function
from src.mdp.model import DERIVED_TOLERANCE, LayeredMdp, Policy
from src.mdp.occupancy import expected_reward, occupancy_from
from src.planning.dynamic_programming import optimal_policy_dp

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentRecord:
    """Metrics of one episode; ``episode`` counts from 1."""

    episode: int
    expected_reward: float
    regret: float
    candidate_sizes: tuple
    surviving: tuple
    frozen: bool = False
    robust_lower_bound: Optional[float] = None
    middle_term: Optional[float] = None
    coverage: Optional[bool] = None
    identified: Optional[bool] = None
    planner_gap: Optional[float] = None
    coverage_loss: bool = False
    eliminated: int = 0


class _RewardCache:
    """Exact expected rewards under the true kernel, keyed by policy."""

    def __init__(self, mdp: LayeredMdp):
        self.mdp = mdp
        self._values = {}

    def __call__(self, policy: Policy) -> float:
        value = self._values.get(policy.key)
        if value is None:
            occupancy = occupancy_from(self.mdp.true_kernel, policy, self.mdp)
            value = expected_reward(occupancy, self.mdp.reward)
            self._values[policy.key] = value
        return value


def _planner_gap(state: LearnerState, mdp: LayeredMdp) -> Optional[float]:
    if state.planner_kernel is None:
        return None
    decision = np.concatenate(mdp.layer_arrays[:-1])
    gaps = np.abs(
        state.planner_kernel.rows[decision] - mdp.true_kernel.rows[decision]
    ).sum(axis=2)
    return float(gaps.max())


def _truth_covered(
    surviving: list, family: Optional[PrototypeFamily]
) -> Optional[bool]:
    if family is None or not family.truth_known:
        return None
    return all(
        truth in indices
        for truth, indices in zip(family.true_index, surviving)
    )


def _matches_truth(
    chosen: tuple, family: Optional[PrototypeFamily]
) -> Optional[bool]:
    if family is None or not family.truth_known or chosen is None:
        return None
    return all(
        np.array_equal(fragment[k], fragment[truth])
        for fragment, k, truth in zip(
            family.fragments, chosen, family.true_index
        )
    )


def run_learner(
    algorithm,
    mdp: LayeredMdp,
    family: Optional[PrototypeFamily],
    config: ExperimentConfig,
    rng: Optional[np.random.Generator] = None,
) -> list[ExperimentRecord]:
    """Run ``config.episodes`` episodes and record the exact metrics of each.

    Expected rewards and regret terms are exact (occupancy measure under the
    true kernel); only the trajectories that feed the counts are sampled.
    """
    algorithm = (
        algorithm
        if isinstance(algorithm, Algorithm)
        else Algorithm.parse(algorithm)
    )
    if algorithm.uses_prototypes and family is None:
        raise ValueError(f"{algorithm.value} needs a prototype family")
    if rng is None:
        rng = np.random.default_rng(config.seed)

    state = LearnerState.initial(mdp, family)
    if algorithm is Algorithm.ORACLE and family is not None:
        if family.truth_known:
            state.surviving = [(k,) for k in family.true_index]
    reward_of = _RewardCache(mdp)
    optimal_policy, _ = optimal_policy_dp(mdp.true_kernel, mdp)
    optimal_value = reward_of(optimal_policy)
    s0 = mdp.initial_state

    records = []
    for episode in range(1, config.episodes + 1):
        previous = list(state.surviving)
        if algorithm is Algorithm.RPO_AAS:
            policy, _ = rpo_aas_step(state, mdp, family, config, rng)
        elif algorithm is Algorithm.NRPO_NPC:
            policy, _ = nrpo_npc_step(state, mdp, family, config, rng)
        elif algorithm is Algorithm.NRPO_NPC2:
            policy, _ = nrpo_npc2_step(state, mdp, family, config, rng)
        elif algorithm is Algorithm.UCBVI:
            policy, _ = ucbvi_step(state, mdp, config, rng)
        else:
            policy, _ = oracle_step(state, mdp, config, rng)

        for layer, (old, new) in enumerate(zip(previous, state.surviving)):
            if not set(new) <= set(old):
                raise RuntimeError(
                    f"candidate set of layer {layer} grew at episode "
                    f"{episode}"
                )
        state.check_invariants(mdp)

        value = reward_of(policy)
        regret = optimal_value - value
        lower_bound = middle_term = None
        coverage = identified = None
        if algorithm.uses_prototypes:
            coverage = _truth_covered(state.surviving, family)
        if algorithm is Algorithm.RPO_AAS:
            lower_bound = state.robust_solution.lower_bound(mdp)
            if coverage is not None:
                resolved = all(
                    family.resolved(layer, indices)
                    for layer, indices in enumerate(state.surviving)
                )
                identified = resolved and coverage
        elif algorithm in (Algorithm.NRPO_NPC, Algorithm.NRPO_NPC2):
            kernel = state.planner_kernel
            middle_term = float(
                value_function(optimal_policy, kernel, mdp)[s0]
                - value_function(policy, kernel, mdp)[s0]
            )
            identified = _matches_truth(state.chosen, family)
        else:
            identified = regret <= DERIVED_TOLERANCE

        records.append(
            ExperimentRecord(
                episode=episode,
                expected_reward=value,
                regret=regret,
                candidate_sizes=tuple(len(s) for s in state.surviving),
                surviving=tuple(state.surviving),
                frozen=state.frozen,
                robust_lower_bound=lower_bound,
                middle_term=middle_term,
                coverage=coverage,
                identified=identified,
                planner_gap=_planner_gap(state, mdp),
                coverage_loss=state.coverage_loss_this_episode,
                eliminated=state.eliminated_this_episode,
            )
        )

    logger.debug(
        "%s finished %d episodes: %d eliminations, %d coverage-loss "
        "events, frozen=%s.",
        algorithm.value,
        config.episodes,
        state.eliminated,
        state.coverage_loss_events,
        state.frozen,
    )
    return records
