"""Per-run checks of the guarantees the learners are expected to meet."""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.analysis.bounds import (
    convergence_threshold,
    finite_sample_threshold,
    theoretical_regret_bound,
)
from src.environments.family import PrototypeFamily
from src.environments.prototypes import compute_gamma, compute_h
from src.learning.runner import ExperimentRecord
from src.learning.state import Algorithm, ExperimentConfig
from src.mdp.model import DERIVED_TOLERANCE, LayeredMdp

# Target accuracy of the finite-sample threshold, relative to V*(s_0).
EPSILON_FRACTION = 0.01

logger = logging.getLogger(__name__)


def cumulative_regret(records: Sequence[ExperimentRecord]) -> np.ndarray:
    """Prefix sums of the exact per-episode regret terms."""
    terms = np.array([r.regret for r in records], dtype=float)
    if terms.size and terms.min() < -DERIVED_TOLERANCE:
        logger.warning(
            "Negative regret term %.3g; the optimal policy is not optimal.",
            terms.min(),
        )
    return np.cumsum(terms)


@dataclass(frozen=True)
class RadiusReport:
    violations: int
    checked_episodes: int
    planner_gaps: np.ndarray


def radius_consistency_check(
    records: Sequence[ExperimentRecord],
    family: PrototypeFamily,
    mdp: LayeredMdp,
    config: ExperimentConfig,
    gamma: Optional[float] = None,
) -> RadiusReport:
    """Check how far surviving prototypes may sit from the truth.

    For every covered episode t and every surviving prototype k of layer l:
    ||P_0(s,a) - P^k(s,a)||_1 <= gamma sqrt(4 |S_{l+1}| |S_l| |A|
    ln(3 L T / delta) / t). Skipped when gamma is infinite.
    """
    gaps = np.array(
        [np.nan if r.planner_gap is None else r.planner_gap for r in records]
    )
    if gamma is None:
        gamma = compute_gamma(family, mdp)
    if math.isinf(gamma) or not family.truth_known:
        return RadiusReport(0, 0, gaps)

    # Largest gap to the truth per layer and prototype.
    worst = []
    for layer, fragment in enumerate(family.fragments):
        states = mdp.layer_arrays[layer]
        truth = fragment[family.true_index[layer]][states]
        worst.append(
            np.abs(fragment[:, states] - truth).sum(axis=3).max(axis=(1, 2))
        )

    log_term = math.log(
        3.0 * mdp.num_layers * config.horizon_episodes / config.delta
    )
    violations = checked = 0
    for record in records:
        if not record.coverage:
            continue
        checked += 1
        for layer, indices in enumerate(record.surviving):
            width = (
                len(mdp.layers[layer + 1])
                * len(mdp.layers[layer])
                * mdp.n_actions
            )
            bound = gamma * math.sqrt(
                4.0 * width * log_term / record.episode
            )
            if worst[layer][list(indices)].max() > bound + DERIVED_TOLERANCE:
                violations += 1
                logger.warning(
                    "Episode %d: a survivor of layer %d lies beyond %.4f.",
                    record.episode,
                    layer,
                    bound,
                )
    return RadiusReport(violations, checked, gaps)


def decomposition_diagnostic(
    records: Sequence[ExperimentRecord], algorithm
) -> int:
    """Count episodes whose decomposition term has the wrong sign.

    Robust runs: covered episodes whose robust lower bound exceeds the exact
    reward. Nearest-prototype runs: episodes where pi* beats pi_t on the
    planner's own kernel.
    """
    algorithm = Algorithm.parse(getattr(algorithm, "value", algorithm))
    if algorithm is Algorithm.RPO_AAS:
        return sum(
            1
            for r in records
            if r.coverage
            and r.robust_lower_bound is not None
            and r.robust_lower_bound > r.expected_reward + DERIVED_TOLERANCE
        )
    if algorithm in (Algorithm.NRPO_NPC, Algorithm.NRPO_NPC2):
        return sum(
            1
            for r in records
            if r.middle_term is not None
            and r.middle_term > DERIVED_TOLERANCE
        )
    return 0


def convergence_episode(
    records: Sequence[ExperimentRecord],
) -> Optional[int]:
    """First episode from which the identification flag stays true."""
    episode = None
    for record in records:
        if record.identified:
            if episode is None:
                episode = record.episode
        else:
            episode = None
    return episode


@dataclass(frozen=True)
class AnalysisReport:
    algorithm: str
    gamma: float
    h: float
    r_max: float
    cumulative_regret: np.ndarray
    regret_bound: Optional[np.ndarray]
    finite_sample_threshold: Optional[int]
    convergence_threshold: Optional[int]
    convergence_episode: Optional[int]
    coverage_rate: Optional[float]
    coverage_all_t: Optional[bool]
    coverage_loss_events: int
    bound_violations: Optional[int]
    radius_violations: int
    decomposition_violations: int

    @property
    def final_regret(self) -> float:
        if not self.cumulative_regret.size:
            return 0.0
        return float(self.cumulative_regret[-1])

    @property
    def regret_bound_at_end(self) -> Optional[float]:
        if self.regret_bound is None or not self.regret_bound.size:
            return None
        return float(self.regret_bound[-1])


def analyze_run(
    records: Sequence[ExperimentRecord],
    algorithm,
    mdp: LayeredMdp,
    family: Optional[PrototypeFamily],
    config: ExperimentConfig,
    optimal_value: Optional[float] = None,
    gamma: Optional[float] = None,
    h: Optional[float] = None,
) -> AnalysisReport:
    """Collect bounds, thresholds and violation counts for one run."""
    algorithm = Algorithm.parse(getattr(algorithm, "value", algorithm))
    if family is not None:
        gamma = compute_gamma(family, mdp) if gamma is None else gamma
        h = compute_h(family, mdp) if h is None else h
    else:
        gamma = math.inf if gamma is None else gamma
        h = math.inf if h is None else h
    regret = cumulative_regret(records)
    n_states, n_actions = mdp.n_states, mdp.n_actions
    bound = theoretical_regret_bound(
        mdp.num_layers,
        gamma,
        n_states,
        n_actions,
        config.episodes,
        config.delta,
        mdp.r_max,
    )

    threshold = None
    if optimal_value is not None and optimal_value > 0.0:
        threshold = finite_sample_threshold(
            mdp.num_layers,
            gamma,
            n_states,
            n_actions,
            config.episodes,
            config.delta,
            EPSILON_FRACTION * optimal_value,
            mdp.r_max,
        )

    flags = [r.coverage for r in records if r.coverage is not None]
    coverage_rate = coverage_all = None
    if flags:
        coverage_rate = float(np.mean(flags))
        coverage_all = all(flags)

    bound_violations = None
    if algorithm is Algorithm.RPO_AAS and bound is not None:
        bound_violations = sum(
            1
            for r in records
            if r.coverage
            and regret[r.episode - 1]
            > bound[r.episode - 1] + DERIVED_TOLERANCE
        )

    radius_violations = 0
    if algorithm is Algorithm.RPO_AAS and family is not None:
        radius_violations = radius_consistency_check(
            records, family, mdp, config, gamma
        ).violations

    return AnalysisReport(
        algorithm=algorithm.value,
        gamma=gamma,
        h=h,
        r_max=mdp.r_max,
        cumulative_regret=regret,
        regret_bound=bound,
        finite_sample_threshold=threshold,
        convergence_threshold=convergence_threshold(
            n_states,
            n_actions,
            mdp.num_layers,
            config.episodes,
            config.delta,
            h,
        ),
        convergence_episode=convergence_episode(records),
        coverage_rate=coverage_rate,
        coverage_all_t=coverage_all,
        coverage_loss_events=sum(1 for r in records if r.coverage_loss),
        bound_violations=bound_violations,
        radius_violations=radius_violations,
        decomposition_violations=decomposition_diagnostic(
            records, algorithm
        ),
    )
