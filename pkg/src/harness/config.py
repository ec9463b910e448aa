# src/harness/config.py

import logging
from dataclasses import dataclass, field

from src.utils.config import validate_config, SCHEMA_VERSION
from src.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

RUN_KEYS = ("schema_version", "seed", "replicas", "workers", "batch_size", "z", "out", "format",
            "fixtures_dir", "metrics_path", "log_level")


@dataclass(frozen=True)
class ExperimentConfig:
    """Run settings plus the experiment's own parameters (every other flat key)."""
    name: str
    seed: int
    replicas: int
    workers: int = 1
    batch_size: int = 256
    z: float = 3.0
    out: str = None
    format: str = "csv"
    fixtures_dir: str = "fixtures"
    metrics_path: str = None
    params: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, mapping, name):
        mapping = dict(mapping)
        mapping.setdefault("schema_version", SCHEMA_VERSION)
        validate_config(mapping)
        fmt = mapping.get("format", "csv")
        if fmt not in ("csv", "json"):
            raise ConfigurationError(f"format must be csv or json, got {fmt!r}")
        params = {k: v for k, v in mapping.items() if k not in RUN_KEYS}
        return cls(
            name=name,
            seed=int(mapping["seed"]),
            replicas=int(mapping["replicas"]),
            workers=int(mapping.get("workers", 1)),
            batch_size=int(mapping.get("batch_size", 256)),
            z=float(mapping.get("z", 3.0)),
            out=mapping.get("out"),
            format=fmt,
            fixtures_dir=mapping.get("fixtures_dir", "fixtures"),
            metrics_path=mapping.get("metrics_path"),
            params=params,
        )

    def get(self, key, default=None):
        return self.params.get(key, default)

    def tolerance(self, key, default):
        """Override with a `tol_<key>` entry."""
        return float(self.params.get(f"tol_{key}", default))
