import pytest

from src.config import SweepConfig
from src.learning.state import Algorithm


@pytest.fixture()
def out_dir(tmp_path):
    return tmp_path / "sweep"


@pytest.fixture()
def small_config(out_dir):
    return SweepConfig(
        algorithms=tuple(Algorithm),
        out=str(out_dir),
        episodes=30,
        sims=3,
        seed=11,
        prototypes=4,
        gap=0.2,
    )


@pytest.fixture(autouse=True)
def no_object_storage(monkeypatch):
    for name in ("MINIO_ENDPOINT", "PROTO_RMDP_METRICS_FILE"):
        monkeypatch.delenv(name, raising=False)
