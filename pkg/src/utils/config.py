# src/utils/config.py

import os
import logging
import yaml
from dotenv import load_dotenv

from src.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
DEFAULT_CONFIG_PATH = os.path.join(REPO_ROOT, 'config.yaml')
SCHEMA_VERSION = "parapde-config/1"

REQUIRED_KEYS = ("schema_version", "seed", "replicas")

# key -> caster for PARAPDE_<KEY> environment overrides
ENV_OVERRIDES = {
    "seed": int,
    "replicas": int,
    "workers": int,
    "log_level": str,
    "out": str,
    "format": str,
    "fixtures_dir": str,
    "metrics_path": str,
}


def load_config(path=None):
    """
    Load the flat YAML configuration and apply environment overrides.

    Args:
        path (str, optional): Config file. Defaults to config.yaml at the repo root.

    Returns:
        dict: Merged configuration mapping
    """
    load_dotenv()
    config_path = path or os.getenv("PARAPDE_CONFIG", DEFAULT_CONFIG_PATH)
    try:
        with open(config_path, 'r') as file:
            config = yaml.safe_load(file) or {}
    except FileNotFoundError as e:
        raise ConfigurationError(f"Config file not found: {config_path}") from e
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Config file {config_path} is not valid YAML: {e}") from e

    if not isinstance(config, dict):
        raise ConfigurationError(f"Config file {config_path} must hold a flat mapping")

    for key, cast in ENV_OVERRIDES.items():
        raw = os.getenv(f"PARAPDE_{key.upper()}", config.get(key))
        if raw is None:
            continue
        try:
            config[key] = cast(raw)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"Bad value for {key}: {raw!r}") from e

    validate_config(config)
    logger.debug(f"Loaded configuration from {config_path}")
    return config


def validate_config(config):
    missing = [key for key in REQUIRED_KEYS if key not in config]
    if missing:
        raise ConfigurationError(f"Missing required config keys: {', '.join(missing)}")
    if config["schema_version"] != SCHEMA_VERSION:
        raise ConfigurationError(
            f"Unsupported schema_version {config['schema_version']!r}, expected {SCHEMA_VERSION!r}"
        )
    if int(config["replicas"]) < 1:
        raise ConfigurationError("replicas must be at least 1")
    return config


def resolve_path(path):
    """Resolve a config-relative path against the repository root."""
    if path is None or os.path.isabs(path):
        return path
    return os.path.join(REPO_ROOT, path)
