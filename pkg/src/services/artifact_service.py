"""Sweep artifacts on disk: CSV tables, config echo and the text summary."""

import hashlib
import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from src.metrics import ARTIFACT_WRITE_OPERATIONS_TOTAL
from src.services.minio_service import MinioService
from src.services.sweep_service import (
    ANALYSIS_COLUMNS,
    CURVE_COLUMNS,
    RUN_COLUMNS,
    SweepResult,
)

CURVES_FILE = "curves.csv"
RUNS_FILE = "runs.csv"
ANALYSIS_FILE = "analysis.csv"
ECHO_FILE = "config.echo"
SUMMARY_FILE = "summary.txt"
ENVIRONMENT_FILE = "environment.txt"

EARLY_WINDOW = 200
FINAL_WINDOW = 500
VARIANCE_WINDOW = 400

logger = logging.getLogger(__name__)


def _write_text(path: Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    except OSError as exc:
        ARTIFACT_WRITE_OPERATIONS_TOTAL.labels(
            type="local", status="failed"
        ).inc()
        raise OSError(f"cannot write {path}: {exc}") from exc
    ARTIFACT_WRITE_OPERATIONS_TOTAL.labels(
        type="local", status="success"
    ).inc()


def _frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(
        index=False, float_format="%.12g", lineterminator="\n"
    )


def write_csv(result: SweepResult, directory) -> list[Path]:
    """Write every artifact of ``result`` into ``directory``."""
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc}") from exc

    files = {
        CURVES_FILE: _frame_to_csv(result.curves[CURVE_COLUMNS]),
        RUNS_FILE: _frame_to_csv(result.runs[RUN_COLUMNS]),
        ANALYSIS_FILE: _frame_to_csv(result.analysis[ANALYSIS_COLUMNS]),
        ECHO_FILE: result.config_echo,
        SUMMARY_FILE: summarize(result),
    }
    if result.environment is not None:
        files[ENVIRONMENT_FILE] = result.environment

    written = []
    for name, text in files.items():
        path = out / name
        _write_text(path, text)
        written.append(path)
    logger.info("Wrote %d artifact(s) to %s.", len(written), out)
    return written


def load_result(directory) -> SweepResult:
    """Read a sweep back from the files ``write_csv`` produced."""
    source = Path(directory)
    try:
        curves = pd.read_csv(source / CURVES_FILE)
        runs = pd.read_csv(
            source / RUNS_FILE,
            dtype={
                "convergence_episode": "Int64",
                "coverage_all_t": "boolean",
            },
        )
        analysis = pd.read_csv(
            source / ANALYSIS_FILE,
            dtype={
                "finite_sample_threshold": "Int64",
                "convergence_threshold": "Int64",
                "bound_violations": "Int64",
            },
        )
        echo = (source / ECHO_FILE).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read sweep in {source}: {exc}") from exc
    environment_path = source / ENVIRONMENT_FILE
    environment = None
    if environment_path.exists():
        environment = environment_path.read_text(encoding="utf-8")
    return SweepResult(
        config_echo=echo,
        curves=curves,
        runs=runs,
        analysis=analysis,
        environment=environment,
    )


def _format(value, digits: int = 4) -> str:
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return "n/a"
    return f"{value:.{digits}f}"


def _window_mean(rewards: pd.Series) -> Optional[float]:
    return float(rewards.mean()) if len(rewards) else None


def summarize(result: SweepResult) -> str:
    """Per-algorithm reward windows, convergence quartiles and checks."""
    lines = ["# sweep summary"]
    for algorithm in result.algorithms:
        curve = result.curves[result.curves["algorithm"] == algorithm]
        runs = result.runs[result.runs["algorithm"] == algorithm]
        analysis = result.analysis[result.analysis["algorithm"] == algorithm]
        curve = curve.sort_values("episode")
        rewards = curve["mean_expected_reward"]
        spread = curve["std_expected_reward"].head(VARIANCE_WINDOW)

        converged = runs["convergence_episode"].dropna().astype(float)
        if len(converged):
            q1, q2, q3 = np.percentile(converged, [25, 50, 75])
            quartiles = f"{q1:g} / {q2:g} / {q3:g}"
        else:
            quartiles = "n/a"
        coverage = runs["coverage_all_t"].dropna()
        coverage_rate = float(coverage.mean()) if len(coverage) else None

        lines.extend(
            [
                f"[{algorithm}]",
                f"simulations = {len(runs)}",
                f"optimal_value = "
                f"{_format(_window_mean(analysis['optimal_value']))}",
                f"final_mean_reward = "
                f"{_format(_window_mean(rewards.tail(FINAL_WINDOW)))}",
                f"early_mean_reward = "
                f"{_format(_window_mean(rewards.head(EARLY_WINDOW)))}",
                f"early_reward_std = {_format(_window_mean(spread))}",
                f"convergence_quartiles = {quartiles}",
                f"converged_runs = {len(converged)}",
                f"coverage_rate = {_format(coverage_rate)}",
                f"coverage_loss_events = "
                f"{int(analysis['coverage_loss_events'].sum())}",
                f"bound_violations = "
                f"{int(analysis['bound_violations'].fillna(0).sum())}",
                f"radius_violations = "
                f"{int(analysis['radius_violations'].sum())}",
                f"decomposition_violations = "
                f"{int(analysis['decomposition_violations'].sum())}",
            ]
        )
    return "\n".join(lines) + "\n"


def mirror_artifacts(
    directory, config_echo: str, service: Optional[MinioService] = None
) -> int:
    """Upload the sweep directory to object storage when configured.

    Objects land under ``sweeps/<sha256 of config.echo>/``. Returns the
    number of uploaded files; failures are logged, never raised.
    """
    if service is None:
        service = MinioService.from_env()
    if service is None:
        return 0
    digest = hashlib.sha256(config_echo.encode("utf-8")).hexdigest()
    return service.upload_directory(Path(directory), f"sweeps/{digest}/")
