"""Prometheus counters for sweep runs.

All metrics live in the default prometheus_client registry and can be
written to a text file for node-exporter style collection.
"""

import logging

from prometheus_client import REGISTRY, Counter, Gauge, write_to_textfile

logger = logging.getLogger(__name__)

# Sweep progress
SIMULATIONS_TOTAL = Counter(
    "proto_rmdp_simulations_total",
    "Total simulations completed",
    ["algorithm"],
)

EPISODES_TOTAL = Counter(
    "proto_rmdp_episodes_total",
    "Total learner episodes played",
    ["algorithm"],
)

# Learner events
PROTOTYPE_ELIMINATIONS_TOTAL = Counter(
    "proto_rmdp_prototype_eliminations_total",
    "Total prototypes removed from candidate sets",
    ["algorithm"],
)

COVERAGE_LOSS_TOTAL = Counter(
    "proto_rmdp_coverage_loss_total",
    "Total episodes in which every prototype of a layer was rejected",
    ["algorithm"],
)

EARLY_STOP_TOTAL = Counter(
    "proto_rmdp_early_stop_total",
    "Total runs that froze their policy before the last episode",
    ["algorithm"],
)

# Artifact storage
ARTIFACT_WRITE_OPERATIONS_TOTAL = Counter(
    "proto_rmdp_artifact_write_operations_total",
    "Total artifact write operations",
    ["type", "status"],
)

SWEEP_DURATION_SECONDS = Gauge(
    "proto_rmdp_sweep_duration_seconds",
    "Wall-clock duration of the most recent sweep",
)


def export_metrics(path: str) -> None:
    """Write the registry in the Prometheus text format; never raises."""
    try:
        write_to_textfile(path, REGISTRY)
        logger.info("Metrics written to %s.", path)
    except OSError as exc:
        logger.warning("Failed to write metrics to %s: %s", path, exc)
