import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

from src.environments.prototypes import MODES
from src.learning.state import Algorithm


class ConfigError(ValueError):
    """Invalid sweep configuration; the message names the key."""


@dataclass(frozen=True)
class MinioConfig:
    endpoint: str
    access_key: str
    secret_key: str
    bucket: str
    secure: bool = True
    region: Optional[str] = None
    create_bucket: bool = False
    timeout: float = 5.0


@dataclass(frozen=True)
class SweepConfig:
    algorithms: tuple
    out: str
    episodes: int = 3000
    sims: int = 100
    seed: int = 0
    delta: float = 0.05
    prototypes: int = 4
    mode: str = "fixed-gap"
    gap: float = 0.2
    early_stop: bool = False
    ucbvi_bonus_scale: float = 1.0
    shared_prototypes: bool = True

    def echo(self) -> str:
        """Resolved configuration, one ``key = value`` line per setting."""
        values = {
            "algorithms": ",".join(a.value for a in self.algorithms),
            "episodes": self.episodes,
            "sims": self.sims,
            "seed": self.seed,
            "delta": repr(self.delta),
            "prototypes": self.prototypes,
            "mode": self.mode,
            "gap": repr(self.gap),
            "early_stop": str(self.early_stop).lower(),
            "ucbvi_bonus_scale": repr(self.ucbvi_bonus_scale),
            "shared_prototypes": str(self.shared_prototypes).lower(),
            "out": self.out,
            "pairing": "paired",
        }
        return "".join(f"{key} = {value}\n" for key, value in values.items())


def _get_bool_env(name: str, default: bool = False) -> bool:
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() in {"1", "true", "yes", "y", "on"}


def _parse_bool(key: str, raw: str) -> bool:
    value = raw.strip().lower()
    if value in {"1", "true", "yes", "y", "on"}:
        return True
    if value in {"0", "false", "no", "n", "off"}:
        return False
    raise ConfigError(f"{key}: expected true or false, got {raw!r}")


def _parse_int(key: str, raw: str, minimum: int) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if value < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}, got {value}")
    return value


def _parse_float(key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite, got {raw!r}")
    return value


def _parse_algorithms(raw: str) -> tuple:
    tags = [tag.strip() for tag in raw.split(",") if tag.strip()]
    if not tags:
        raise ConfigError("algorithms: at least one algorithm is required")
    algorithms = []
    for tag in tags:
        try:
            algorithm = Algorithm.parse(tag)
        except ValueError as exc:
            raise ConfigError(f"algorithms: {exc}") from None
        if algorithm in algorithms:
            raise ConfigError(f"algorithms: {tag!r} listed twice")
        algorithms.append(algorithm)
    return tuple(algorithms)


def _parse_value(key: str, raw: str):
    if key == "algorithms":
        return _parse_algorithms(raw)
    if key == "episodes":
        return _parse_int(key, raw, 0)
    if key == "sims":
        return _parse_int(key, raw, 1)
    if key == "seed":
        return _parse_int(key, raw, 0)
    if key == "prototypes":
        return _parse_int(key, raw, 1)
    if key == "delta":
        value = _parse_float(key, raw)
        if not 0.0 < value < 1.0:
            raise ConfigError(f"delta: must lie in (0, 1), got {value}")
        return value
    if key == "gap":
        value = _parse_float(key, raw)
        if value < 0.0:
            raise ConfigError(f"gap: must be >= 0, got {value}")
        return value
    if key == "ucbvi_bonus_scale":
        value = _parse_float(key, raw)
        if value <= 0.0:
            raise ConfigError(f"ucbvi_bonus_scale: must be > 0, got {value}")
        return value
    if key == "mode":
        value = raw.strip().lower()
        if value not in MODES:
            raise ConfigError(
                f"mode: expected one of {', '.join(MODES)}, got {raw!r}"
            )
        return value
    if key in {"early_stop", "shared_prototypes"}:
        return _parse_bool(key, raw)
    if key == "out":
        value = raw.strip()
        if not value:
            raise ConfigError("out: output directory must not be empty")
        return value
    raise ConfigError(f"{key}: unknown configuration key")


KNOWN_KEYS = (
    "algorithms",
    "episodes",
    "sims",
    "seed",
    "delta",
    "prototypes",
    "mode",
    "gap",
    "early_stop",
    "out",
    "ucbvi_bonus_scale",
    "shared_prototypes",
)
REQUIRED_KEYS = ("algorithms", "out")


def _read_entries(text: str) -> dict:
    entries = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {number}: expected 'key = value'")
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{key}: unknown configuration key")
        if key in entries:
            raise ConfigError(f"{key}: duplicate key on line {number}")
        entries[key] = value.strip()
    return entries


def parse_config(
    text: str = "", overrides: Optional[Mapping[str, str]] = None
) -> SweepConfig:
    """Parse a ``key = value`` file; ``overrides`` win over file values."""
    entries = _read_entries(text)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{key}: unknown configuration key")
        entries[key] = str(value)
    missing = [key for key in REQUIRED_KEYS if key not in entries]
    if missing:
        raise ConfigError(f"{missing[0]}: required key is missing")

    values = {key: _parse_value(key, raw) for key, raw in entries.items()}
    if values.get("mode", "fixed-gap") == "fixed-gap":
        gap = values.get("gap", SweepConfig.gap)
        prototypes = values.get("prototypes", SweepConfig.prototypes)
        if (prototypes - 1) * gap > 1.0:
            raise ConfigError(
                f"gap: {prototypes} prototypes with gap {gap} do not fit "
                "in [0, 1]"
            )
    return SweepConfig(**values)


def load_sweep_config(
    path: Optional[str], overrides: Optional[Mapping[str, str]] = None
) -> SweepConfig:
    text = ""
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    return parse_config(text, overrides)


def resolve_worker_count(sims: int) -> int:
    """Worker-pool size, capped by ``PROTO_RMDP_THREADS`` and ``sims``."""
    raw = os.getenv("PROTO_RMDP_THREADS")
    if raw is None or not raw.strip():
        workers = os.cpu_count() or 1
    else:
        workers = _parse_int("PROTO_RMDP_THREADS", raw.strip(), 1)
    return max(1, min(workers, sims))


def load_metrics_file() -> Optional[str]:
    path = os.getenv("PROTO_RMDP_METRICS_FILE")
    return path.strip() if path and path.strip() else None


def load_minio_config() -> Optional[MinioConfig]:
    endpoint = os.getenv("MINIO_ENDPOINT")
    access_key = os.getenv("MINIO_ACCESS_KEY")
    secret_key = os.getenv("MINIO_SECRET_KEY")
    bucket = os.getenv("MINIO_BUCKET")

    if not all([endpoint, access_key, secret_key, bucket]):
        return None

    secure = _get_bool_env("MINIO_SECURE", True)
    region = os.getenv("MINIO_REGION")
    create_bucket = _get_bool_env("MINIO_CREATE_BUCKET", False)
    timeout = float(os.getenv("MINIO_TIMEOUT", "5.0"))

    return MinioConfig(
        endpoint=endpoint,
        access_key=access_key,
        secret_key=secret_key,
        bucket=bucket,
        secure=secure,
        region=region,
        create_bucket=create_bucket,
        timeout=timeout,
    )
