import os
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from src.config import (
    ConfigError,
    MinioConfig,
    _get_bool_env,
    load_metrics_file,
    load_minio_config,
    load_sweep_config,
    parse_config,
    resolve_worker_count,
)
from src.learning.state import Algorithm

BASE = "algorithms = rpo-aas, ucbvi\nout = results\n"


class TestConfig(unittest.TestCase):
    """Test cases for config helpers."""

    def test_get_bool_env_default_false_when_missing(self):
        with patch.dict(os.environ, {}, clear=True):
            self.assertFalse(_get_bool_env("MISSING_FLAG"))

    def test_get_bool_env_default_true_when_missing(self):
        with patch.dict(os.environ, {}, clear=True):
            self.assertTrue(_get_bool_env("MISSING_FLAG", default=True))

    def test_get_bool_env_truthy_values(self):
        truthy_values = ["1", "true", "yes", "y", "on", " TRUE "]
        for value in truthy_values:
            with self.subTest(value=value):
                with patch.dict(os.environ, {"FLAG": value}, clear=True):
                    self.assertTrue(_get_bool_env("FLAG"))

    def test_get_bool_env_falsy_values(self):
        falsy_values = ["0", "false", "no", "n", "off", "", "  "]
        for value in falsy_values:
            with self.subTest(value=value):
                with patch.dict(os.environ, {"FLAG": value}, clear=True):
                    self.assertFalse(_get_bool_env("FLAG"))

    def test_load_minio_config_missing_required_returns_none(self):
        with patch.dict(os.environ, {}, clear=True):
            self.assertIsNone(load_minio_config())

    def test_load_minio_config_defaults(self):
        env = {
            "MINIO_ENDPOINT": "minio:9000",
            "MINIO_ACCESS_KEY": "access",
            "MINIO_SECRET_KEY": "secret",
            "MINIO_BUCKET": "sweeps",
        }
        with patch.dict(os.environ, env, clear=True):
            config = load_minio_config()

        self.assertIsInstance(config, MinioConfig)
        self.assertTrue(config.secure)
        self.assertIsNone(config.region)
        self.assertFalse(config.create_bucket)
        self.assertEqual(config.timeout, 5.0)

    def test_load_minio_config_overrides(self):
        env = {
            "MINIO_ENDPOINT": "minio:9000",
            "MINIO_ACCESS_KEY": "access",
            "MINIO_SECRET_KEY": "secret",
            "MINIO_BUCKET": "sweeps",
            "MINIO_SECURE": "false",
            "MINIO_REGION": "us-east-1",
            "MINIO_CREATE_BUCKET": "yes",
            "MINIO_TIMEOUT": "7.5",
        }
        with patch.dict(os.environ, env, clear=True):
            config = load_minio_config()

        self.assertIsInstance(config, MinioConfig)
        self.assertFalse(config.secure)
        self.assertEqual(config.region, "us-east-1")
        self.assertTrue(config.create_bucket)
        self.assertEqual(config.timeout, 7.5)

    def test_metrics_file_from_env(self):
        with patch.dict(os.environ, {}, clear=True):
            self.assertIsNone(load_metrics_file())
        env = {"PROTO_RMDP_METRICS_FILE": " /tmp/sweep.prom "}
        with patch.dict(os.environ, env, clear=True):
            self.assertEqual(load_metrics_file(), "/tmp/sweep.prom")

    def test_worker_count(self):
        with patch.dict(os.environ, {"PROTO_RMDP_THREADS": "3"}, clear=True):
            self.assertEqual(resolve_worker_count(100), 3)
            self.assertEqual(resolve_worker_count(2), 2)
        with patch.dict(os.environ, {"PROTO_RMDP_THREADS": "0"}, clear=True):
            with self.assertRaises(ConfigError):
                resolve_worker_count(10)
        with patch.dict(os.environ, {}, clear=True):
            self.assertGreaterEqual(resolve_worker_count(4), 1)


class TestParseConfig(unittest.TestCase):
    def test_defaults(self):
        config = parse_config(BASE)
        self.assertEqual(
            config.algorithms, (Algorithm.RPO_AAS, Algorithm.UCBVI)
        )
        self.assertEqual(config.out, "results")
        self.assertEqual(config.episodes, 3000)
        self.assertEqual(config.sims, 100)
        self.assertEqual(config.delta, 0.05)
        self.assertEqual(config.prototypes, 4)
        self.assertEqual(config.mode, "fixed-gap")
        self.assertFalse(config.early_stop)
        self.assertTrue(config.shared_prototypes)

    def test_comments_and_blank_lines(self):
        text = "# sweep\n\n" + BASE + "episodes = 50  # short run\n"
        self.assertEqual(parse_config(text).episodes, 50)

    def test_overrides_win_over_file(self):
        overrides = {"episodes": 10, "early_stop": True, "seed": None}
        config = parse_config(BASE + "episodes = 500\nseed = 4\n", overrides)
        self.assertEqual(config.episodes, 10)
        self.assertTrue(config.early_stop)
        self.assertEqual(config.seed, 4)

    def test_flags_alone_are_enough(self):
        config = parse_config(
            "", {"algorithms": "oracle", "out": "o", "sims": "2"}
        )
        self.assertEqual(config.algorithms, (Algorithm.ORACLE,))
        self.assertEqual(config.sims, 2)

    def test_invalid_inputs_name_the_key(self):
        cases = [
            (BASE + "delta = 1.5\n", "delta"),
            (BASE + "delta = abc\n", "delta"),
            (BASE + "episodes = -3\n", "episodes"),
            (BASE + "sims = 0\n", "sims"),
            (BASE + "mode = banded\n", "mode"),
            (BASE + "early_stop = maybe\n", "early_stop"),
            (BASE + "colour = blue\n", "colour"),
            (BASE + "out = other\n", "out"),
            (BASE + "prototypes = 7\ngap = 0.2\n", "gap"),
            ("algorithms = rpo-aas, bogus\nout = o\n", "algorithms"),
            ("algorithms = ucbvi, UCBVI\nout = o\n", "algorithms"),
            ("algorithms = ucbvi\n", "out"),
            ("out = o\n", "algorithms"),
        ]
        for text, key in cases:
            with self.subTest(key=key, text=text):
                with self.assertRaises(ConfigError) as ctx:
                    parse_config(text)
                self.assertTrue(str(ctx.exception).startswith(key))

    def test_malformed_line_reports_line_number(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config(BASE + "episodes 50\n")
        self.assertIn("line 3", str(ctx.exception))

    def test_random_mode_skips_gap_fit(self):
        config = parse_config(BASE + "mode = random\nprototypes = 7\n")
        self.assertEqual(config.prototypes, 7)

    def test_echo_is_stable(self):
        echo = parse_config(BASE + "delta = 0.1\n").echo()
        self.assertIn("algorithms = rpo-aas,ucbvi\n", echo)
        self.assertIn("delta = 0.1\n", echo)
        self.assertIn("early_stop = false\n", echo)
        self.assertTrue(echo.endswith("pairing = paired\n"))
        self.assertEqual(echo, parse_config(BASE + "delta = 0.1").echo())


class TestLoadSweepConfig(unittest.TestCase):
    def test_reads_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "sweep.cfg"
            path.write_text(BASE + "sims = 3\n", encoding="utf-8")
            config = load_sweep_config(str(path), {"seed": 9})
        self.assertEqual(config.sims, 3)
        self.assertEqual(config.seed, 9)

    def test_missing_file_is_a_config_error(self):
        with self.assertRaises(ConfigError):
            load_sweep_config("/nonexistent/sweep.cfg")

    def test_no_file_uses_overrides(self):
        config = load_sweep_config(None, {"algorithms": "ucbvi", "out": "o"})
        self.assertEqual(config.algorithms, (Algorithm.UCBVI,))


if __name__ == "__main__":
    unittest.main()
