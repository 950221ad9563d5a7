import hashlib
import tempfile
import unittest
from pathlib import Path
from unittest.mock import Mock, patch

from src.config import SweepConfig
from src.learning.state import Algorithm
from src.services.artifact_service import (
    ANALYSIS_FILE,
    CURVES_FILE,
    ECHO_FILE,
    ENVIRONMENT_FILE,
    RUNS_FILE,
    SUMMARY_FILE,
    load_result,
    mirror_artifacts,
    summarize,
    write_csv,
)
from src.services.sweep_service import run_sweep

GOLDEN = Path(__file__).parent / "golden"
CURVES_HEADER = (
    "algorithm,episode,mean_expected_reward,std_expected_reward,"
    "mean_cum_regret"
)
RUNS_HEADER = (
    "algorithm,sim,seed,convergence_episode,coverage_all_t,final_reward"
)
ANALYSIS_HEADER = (
    "algorithm,sim,optimal_value,gamma,h,r_max,final_regret,regret_bound,"
    "finite_sample_threshold,convergence_threshold,coverage_rate,"
    "coverage_loss_events,eliminations,early_stopped,bound_violations,"
    "radius_violations,decomposition_violations"
)


def small_sweep(episodes=2, sims=2, out="unused"):
    config = SweepConfig(
        algorithms=(Algorithm.ORACLE, Algorithm.RPO_AAS),
        out=out,
        episodes=episodes,
        sims=sims,
        seed=3,
    )
    return run_sweep(config, n_jobs=1)


def section_values(summary, algorithm):
    lines = summary.splitlines()
    values = {}
    for line in lines[lines.index(f"[{algorithm}]") + 1:]:
        if line.startswith("["):
            break
        key, _, value = line.partition(" = ")
        values[key] = value
    return values

class TestWriteCsv(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.directory = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def test_writes_every_artifact(self):
        written = write_csv(small_sweep(), self.directory / "out")
        names = sorted(path.name for path in written)
        self.assertEqual(
            names,
            sorted(
                [
                    CURVES_FILE,
                    RUNS_FILE,
                    ANALYSIS_FILE,
                    ECHO_FILE,
                    SUMMARY_FILE,
                    ENVIRONMENT_FILE,
                ]
            ),
        )

    def test_headers_and_row_counts(self):
        out = self.directory / "out"
        write_csv(small_sweep(episodes=2, sims=2), out)
        curves = (out / CURVES_FILE).read_text().splitlines()
        runs = (out / RUNS_FILE).read_text().splitlines()
        analysis = (out / ANALYSIS_FILE).read_text().splitlines()
        self.assertEqual(curves[0], CURVES_HEADER)
        self.assertEqual(runs[0], RUNS_HEADER)
        self.assertEqual(analysis[0], ANALYSIS_HEADER)
        self.assertEqual(len(curves), 1 + 2 * 2)
        self.assertEqual(len(runs), 1 + 2 * 2)
        self.assertEqual(len(analysis), 1 + 2 * 2)

    def test_zero_episode_sweep_matches_golden_files(self):
        out = self.directory / "out"
        write_csv(small_sweep(episodes=0, sims=2, out="golden-sweep"), out)
        for name, golden in (
            (CURVES_FILE, "empty_curves.csv"),
            (RUNS_FILE, "empty_runs.csv"),
            (ECHO_FILE, "empty_config.echo"),
        ):
            with self.subTest(name=name):
                self.assertEqual(
                    (out / name).read_bytes(), (GOLDEN / golden).read_bytes()
                )

    def test_unwritable_directory_raises(self):
        blocker = self.directory / "file"
        blocker.write_text("x")
        with self.assertRaises(OSError):
            write_csv(small_sweep(), blocker / "out")

    def test_reloaded_result_writes_identical_tables(self):
        first, second = self.directory / "a", self.directory / "b"
        write_csv(small_sweep(episodes=3), first)
        write_csv(load_result(first), second)
        for name in (CURVES_FILE, RUNS_FILE, ANALYSIS_FILE, SUMMARY_FILE):
            with self.subTest(name=name):
                self.assertEqual(
                    (first / name).read_bytes(), (second / name).read_bytes()
                )

    def test_load_missing_directory_raises(self):
        with self.assertRaises(OSError):
            load_result(self.directory / "missing")


class TestSummarize(unittest.TestCase):
    def test_sections_per_algorithm(self):
        text = summarize(small_sweep(episodes=3, sims=2))
        lines = text.splitlines()
        self.assertEqual(lines[0], "# sweep summary")
        self.assertIn("[oracle]", lines)
        self.assertIn("[rpo-aas]", lines)
        self.assertLess(lines.index("[oracle]"), lines.index("[rpo-aas]"))
        self.assertIn("simulations = 2", lines)
        self.assertIn("converged_runs = 2", lines)
        self.assertIn("decomposition_violations = 0", lines)

    def test_oracle_reward_matches_optimal_value(self):
        values = section_values(
            summarize(small_sweep(episodes=3, sims=2)), "oracle"
        )
        self.assertEqual(values["final_mean_reward"], values["optimal_value"])
        self.assertEqual(values["coverage_rate"], "1.0000")

    def test_early_reward_spread_over_first_window(self):
        result = small_sweep(episodes=3, sims=2)
        values = section_values(summarize(result), "rpo-aas")
        curve = result.curves[result.curves["algorithm"] == "rpo-aas"]
        expected = curve["std_expected_reward"].mean()
        self.assertEqual(values["early_reward_std"], f"{expected:.4f}")

    def test_early_reward_spread_is_zero_for_one_simulation(self):
        values = section_values(
            summarize(small_sweep(episodes=3, sims=1)), "oracle"
        )
        self.assertEqual(values["early_reward_std"], "0.0000")


class TestMirrorArtifacts(unittest.TestCase):
    def test_uploads_under_echo_digest(self):
        service = Mock()
        service.upload_directory.return_value = 5
        uploaded = mirror_artifacts("out", "seed = 1\n", service)
        digest = hashlib.sha256(b"seed = 1\n").hexdigest()
        service.upload_directory.assert_called_once_with(
            Path("out"), f"sweeps/{digest}/"
        )
        self.assertEqual(uploaded, 5)

    def test_skipped_without_storage(self):
        with patch(
            "src.services.artifact_service.MinioService.from_env",
            return_value=None,
        ):
            self.assertEqual(mirror_artifacts("out", "seed = 1\n"), 0)


if __name__ == "__main__":
    unittest.main()
