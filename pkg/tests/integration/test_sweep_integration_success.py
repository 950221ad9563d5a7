"""Integration tests for full sweeps - success cases."""
import dataclasses
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.app import main
from src.environments.gridworld import build_gridworld
from src.environments.prototypes import parse_environment
from src.planning.dynamic_programming import optimal_policy_dp
from src.services.artifact_service import (
    ANALYSIS_FILE,
    CURVES_FILE,
    ENVIRONMENT_FILE,
    RUNS_FILE,
    write_csv,
)
from src.services.sweep_service import run_sweep


@pytest.mark.integration
def test_sweep_tables_have_expected_shape(small_config):
    """Test every algorithm yields one curve per episode and one run per
    simulation."""
    result = run_sweep(small_config, n_jobs=1)

    assert ",".join(result.curves.columns) == (
        "algorithm,episode,mean_expected_reward,std_expected_reward,"
        "mean_cum_regret"
    )
    assert ",".join(result.runs.columns) == (
        "algorithm,sim,seed,convergence_episode,coverage_all_t,final_reward"
    )
    assert list(result.analysis.columns)[:3] == [
        "algorithm",
        "sim",
        "optimal_value",
    ]
    assert result.algorithms == [a.value for a in small_config.algorithms]
    assert len(result.curves) == 5 * small_config.episodes
    assert len(result.runs) == 5 * small_config.sims
    assert result.runs["sim"].tolist() == [0, 1, 2] * 5


@pytest.mark.integration
def test_oracle_curve_is_flat_at_optimal_value(small_config):
    """Test the oracle earns the mean optimal value in every episode."""
    result = run_sweep(small_config, n_jobs=1)

    oracle = result.curves[result.curves["algorithm"] == "oracle"]
    optimal = result.analysis[result.analysis["algorithm"] == "oracle"]
    np.testing.assert_allclose(
        oracle["mean_expected_reward"],
        optimal["optimal_value"].mean(),
        atol=1e-9,
    )
    np.testing.assert_allclose(oracle["mean_cum_regret"], 0.0, atol=1e-9)


@pytest.mark.integration
def test_algorithms_share_each_simulation_instance(small_config):
    """Test paired simulations: every algorithm sees the same optimum."""
    result = run_sweep(small_config, n_jobs=1)

    per_sim = result.analysis.groupby("sim")["optimal_value"].nunique()
    assert per_sim.tolist() == [1] * small_config.sims


@pytest.mark.integration
def test_pool_size_does_not_change_results(small_config, tmp_path):
    """Test sequential and parallel sweeps write identical tables."""
    sequential = tmp_path / "one"
    parallel = tmp_path / "two"
    write_csv(run_sweep(small_config, n_jobs=1), sequential)
    write_csv(run_sweep(small_config, n_jobs=2), parallel)

    for name in (CURVES_FILE, RUNS_FILE, ANALYSIS_FILE):
        assert (sequential / name).read_bytes() == (
            parallel / name
        ).read_bytes()


@pytest.mark.integration
def test_output_directory_does_not_change_tables(small_config, tmp_path):
    """Test two runs of one configuration agree apart from the echo."""
    first = tmp_path / "first"
    second = tmp_path / "second"
    write_csv(run_sweep(small_config, n_jobs=1), first)
    other = dataclasses.replace(small_config, out=str(second))
    write_csv(run_sweep(other, n_jobs=1), second)

    for name in (CURVES_FILE, RUNS_FILE, ANALYSIS_FILE):
        assert (first / name).read_bytes() == (second / name).read_bytes()


@pytest.mark.integration
def test_environment_description_rebuilds_first_instance(small_config):
    """Test environment.txt reproduces the optimum of simulation 0."""
    write_csv(run_sweep(small_config, n_jobs=1), small_config.out)
    out = Path(small_config.out)
    text = (out / ENVIRONMENT_FILE).read_text()
    spec, seed = parse_environment(text)
    assert seed == small_config.seed

    mdp = build_gridworld(spec)
    _, values = optimal_policy_dp(mdp.true_kernel, mdp)
    analysis = pd.read_csv(out / ANALYSIS_FILE)
    recorded = analysis.loc[analysis["sim"] == 0, "optimal_value"].iloc[0]
    assert values[mdp.initial_state] == pytest.approx(recorded, abs=1e-9)


@pytest.mark.integration
def test_cli_run_then_summarize(out_dir, capsys):
    """Test the command line writes artifacts and reprints the summary."""
    code = main(
        [
            "run",
            "--algo",
            "rpo-aas",
            "--algo",
            "oracle",
            "--episodes",
            "20",
            "--sims",
            "2",
            "--out",
            str(out_dir),
        ]
    )
    assert code == 0
    printed = capsys.readouterr().out

    assert main(["summarize", "--in", str(out_dir)]) == 0
    assert capsys.readouterr().out == printed
    assert (out_dir / "config.echo").read_text().startswith(
        "algorithms = rpo-aas,oracle\n"
    )
