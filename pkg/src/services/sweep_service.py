import logging
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from src.analysis.diagnostics import AnalysisReport, analyze_run
from src.config import SweepConfig, resolve_worker_count
from src.environments.prototypes import (
    compute_gamma,
    compute_h,
    describe_environment,
    gridworld_instance,
)
from src.learning.runner import run_learner
from src.learning.state import ExperimentConfig
from src.metrics import (
    COVERAGE_LOSS_TOTAL,
    EARLY_STOP_TOTAL,
    EPISODES_TOTAL,
    PROTOTYPE_ELIMINATIONS_TOTAL,
    SIMULATIONS_TOTAL,
    SWEEP_DURATION_SECONDS,
)
from src.planning.dynamic_programming import optimal_policy_dp

logger = logging.getLogger(__name__)

CURVE_COLUMNS = [
    "algorithm",
    "episode",
    "mean_expected_reward",
    "std_expected_reward",
    "mean_cum_regret",
]
RUN_COLUMNS = [
    "algorithm",
    "sim",
    "seed",
    "convergence_episode",
    "coverage_all_t",
    "final_reward",
]
ANALYSIS_COLUMNS = [
    "algorithm",
    "sim",
    "optimal_value",
    "gamma",
    "h",
    "r_max",
    "final_regret",
    "regret_bound",
    "finite_sample_threshold",
    "convergence_threshold",
    "coverage_rate",
    "coverage_loss_events",
    "eliminations",
    "early_stopped",
    "bound_violations",
    "radius_violations",
    "decomposition_violations",
]


@dataclass(frozen=True)
class RunOutcome:
    """What a worker sends back for one (simulation, algorithm) pair."""

    algorithm: str
    sim: int
    seed: int
    optimal_value: float
    expected_rewards: np.ndarray
    regrets: np.ndarray
    analysis: AnalysisReport
    eliminations: int
    early_stopped: bool


@dataclass(frozen=True)
class SweepResult:
    config_echo: str
    curves: pd.DataFrame
    runs: pd.DataFrame
    analysis: pd.DataFrame
    environment: Optional[str] = None

    @property
    def algorithms(self) -> list:
        return list(dict.fromkeys(self.runs["algorithm"]))


def _simulate(config: SweepConfig, sim: int) -> tuple[list, Optional[str]]:
    seed = config.seed + sim
    family_seq, sampling_seq = np.random.SeedSequence(seed).spawn(2)
    spec, mdp, family = gridworld_instance(
        config.mode,
        config.prototypes,
        np.random.default_rng(family_seq),
        gap=config.gap,
        shared=config.shared_prototypes,
    )
    gamma = compute_gamma(family, mdp)
    h = compute_h(family, mdp)
    _, optimal_values = optimal_policy_dp(mdp.true_kernel, mdp)
    optimal_value = float(optimal_values[mdp.initial_state])

    outcomes = []
    for algorithm in config.algorithms:
        experiment = ExperimentConfig(
            episodes=config.episodes,
            algorithm=algorithm,
            delta=config.delta,
            seed=seed,
            early_stop=config.early_stop,
            ucbvi_bonus_scale=config.ucbvi_bonus_scale,
        )
        # Same sampling stream for every algorithm of this simulation.
        rng = np.random.default_rng(sampling_seq)
        records = run_learner(algorithm, mdp, family, experiment, rng)
        report = analyze_run(
            records,
            algorithm,
            mdp,
            family,
            experiment,
            optimal_value=optimal_value,
            gamma=gamma,
            h=h,
        )
        outcomes.append(
            RunOutcome(
                algorithm=algorithm.value,
                sim=sim,
                seed=seed,
                optimal_value=optimal_value,
                expected_rewards=np.array(
                    [r.expected_reward for r in records]
                ),
                regrets=np.array([r.regret for r in records]),
                analysis=report,
                eliminations=sum(r.eliminated for r in records),
                early_stopped=bool(records) and records[-1].frozen,
            )
        )
    environment = describe_environment(spec, seed) if sim == 0 else None
    return outcomes, environment


def _curves(config: SweepConfig, outcomes: list) -> pd.DataFrame:
    frames = []
    for algorithm in config.algorithms:
        runs = [o for o in outcomes if o.algorithm == algorithm.value]
        if config.episodes == 0 or not runs:
            continue
        rewards = np.vstack([o.expected_rewards for o in runs])
        cum_regret = np.cumsum(np.vstack([o.regrets for o in runs]), axis=1)
        frames.append(
            pd.DataFrame(
                {
                    "algorithm": algorithm.value,
                    "episode": np.arange(1, config.episodes + 1),
                    "mean_expected_reward": rewards.mean(axis=0),
                    "std_expected_reward": rewards.std(axis=0),
                    "mean_cum_regret": cum_regret.mean(axis=0),
                }
            )
        )
    if not frames:
        return pd.DataFrame(columns=CURVE_COLUMNS)
    return pd.concat(frames, ignore_index=True)[CURVE_COLUMNS]


def _runs(outcomes: list) -> pd.DataFrame:
    rows = [
        {
            "algorithm": o.algorithm,
            "sim": o.sim,
            "seed": o.seed,
            "convergence_episode": o.analysis.convergence_episode,
            "coverage_all_t": o.analysis.coverage_all_t,
            "final_reward": (
                float(o.expected_rewards[-1])
                if o.expected_rewards.size
                else np.nan
            ),
        }
        for o in outcomes
    ]
    frame = pd.DataFrame(rows, columns=RUN_COLUMNS)
    return frame.astype(
        {"convergence_episode": "Int64", "coverage_all_t": "boolean"}
    )


def _analysis(outcomes: list) -> pd.DataFrame:
    rows = []
    for o in outcomes:
        report = o.analysis
        rows.append(
            {
                "algorithm": o.algorithm,
                "sim": o.sim,
                "optimal_value": o.optimal_value,
                "gamma": report.gamma,
                "h": report.h,
                "r_max": report.r_max,
                "final_regret": report.final_regret,
                "regret_bound": report.regret_bound_at_end,
                "finite_sample_threshold": report.finite_sample_threshold,
                "convergence_threshold": report.convergence_threshold,
                "coverage_rate": report.coverage_rate,
                "coverage_loss_events": report.coverage_loss_events,
                "eliminations": o.eliminations,
                "early_stopped": o.early_stopped,
                "bound_violations": report.bound_violations,
                "radius_violations": report.radius_violations,
                "decomposition_violations": report.decomposition_violations,
            }
        )
    frame = pd.DataFrame(rows, columns=ANALYSIS_COLUMNS)
    return frame.astype(
        {
            "finite_sample_threshold": "Int64",
            "convergence_threshold": "Int64",
            "bound_violations": "Int64",
        }
    )


def _record_metrics(outcomes: list, episodes: int) -> None:
    for o in outcomes:
        SIMULATIONS_TOTAL.labels(algorithm=o.algorithm).inc()
        EPISODES_TOTAL.labels(algorithm=o.algorithm).inc(episodes)
        PROTOTYPE_ELIMINATIONS_TOTAL.labels(algorithm=o.algorithm).inc(
            o.eliminations
        )
        COVERAGE_LOSS_TOTAL.labels(algorithm=o.algorithm).inc(
            o.analysis.coverage_loss_events
        )
        if o.early_stopped:
            EARLY_STOP_TOTAL.labels(algorithm=o.algorithm).inc()


def run_sweep(
    config: SweepConfig, n_jobs: Optional[int] = None
) -> SweepResult:
    """Run every algorithm on ``config.sims`` paired GridWorld draws.

    Simulation i uses seed ``config.seed + i``; results are gathered in
    simulation order, so the output does not depend on the pool size.
    """
    workers = resolve_worker_count(config.sims) if n_jobs is None else n_jobs
    logger.info(
        "Starting sweep: %s, %d simulations x %d episodes on %d worker(s).",
        ",".join(a.value for a in config.algorithms),
        config.sims,
        config.episodes,
        workers,
    )
    started = time.perf_counter()
    results = Parallel(n_jobs=workers)(
        delayed(_simulate)(config, sim) for sim in range(config.sims)
    )
    outcomes = [o for sim_outcomes, _ in results for o in sim_outcomes]
    order = {a.value: i for i, a in enumerate(config.algorithms)}
    outcomes.sort(key=lambda o: (order[o.algorithm], o.sim))
    _record_metrics(outcomes, config.episodes)

    for algorithm in config.algorithms:
        finals = [
            o.expected_rewards[-1]
            for o in outcomes
            if o.algorithm == algorithm.value and o.expected_rewards.size
        ]
        logger.info(
            "%s done: mean final expected reward %s.",
            algorithm.value,
            f"{np.mean(finals):.4f}" if finals else "n/a",
        )
    duration = time.perf_counter() - started
    SWEEP_DURATION_SECONDS.set(duration)
    logger.info("Sweep finished in %.1fs.", duration)

    return SweepResult(
        config_echo=config.echo(),
        curves=_curves(config, outcomes),
        runs=_runs(outcomes),
        analysis=_analysis(outcomes),
        environment=results[0][1] if results else None,
    )
