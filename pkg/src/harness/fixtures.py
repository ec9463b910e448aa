# src/harness/fixtures.py

import os
import json
import logging

from src.renormalization.constants import constants_table
from src.harness.report import format_params, Check
from src.wick.trees import tree_table, MAX_TREE_DEGREE
from src.utils.config import resolve_path
from src.utils.errors import FixtureMismatch, ConfigurationError

logger = logging.getLogger(__name__)

CONSTANTS_FILE = "renorm_constants.json"
TREES_FILE = "tree_table.json"
FIXTURE_SCHEMA = "parapde-fixtures/1"
CONSTANT_RTOL = 1e-12


def computed_constants():
    return [{"name": name, "params": format_params(params), "value": result.value, "tail_bound": result.tail_bound}
            for name, params, result in constants_table()]


def _write(path, entries):
    with open(path, "w") as fh:
        json.dump({"schema": FIXTURE_SCHEMA, "entries": entries}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read(path):
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except FileNotFoundError as e:
        raise ConfigurationError(f"Fixture {path} is missing; run `parapde oracle regen`") from e
    if payload.get("schema") != FIXTURE_SCHEMA:
        raise ConfigurationError(f"Fixture {path} has schema {payload.get('schema')!r}, expected {FIXTURE_SCHEMA!r}")
    return payload["entries"]


def regen_fixtures(fixtures_dir):
    """Recompute and overwrite both fixture files; returns their paths."""
    fixtures_dir = resolve_path(fixtures_dir)
    os.makedirs(fixtures_dir, exist_ok=True)
    constants_path = os.path.join(fixtures_dir, CONSTANTS_FILE)
    trees_path = os.path.join(fixtures_dir, TREES_FILE)
    _write(constants_path, computed_constants())
    _write(trees_path, tree_table(MAX_TREE_DEGREE))
    logger.info(f"Regenerated fixtures in {fixtures_dir}")
    return constants_path, trees_path


def ensure_fixtures(fixtures_dir):
    """Generate the fixture files when either is absent; True when they were written."""
    root = resolve_path(fixtures_dir)
    if all(os.path.exists(os.path.join(root, f)) for f in (CONSTANTS_FILE, TREES_FILE)):
        return False
    logger.warning(f"Fixtures missing under {root}; generating them with `oracle regen` semantics")
    regen_fixtures(fixtures_dir)
    return True


def check_fixtures(fixtures_dir, rtol=CONSTANT_RTOL):
    """
    Compare recomputed constants and the tree table against the committed files.

    Returns:
        list[Check]: one record per fixture entry
    """
    fixtures_dir = resolve_path(fixtures_dir)
    checks = []
    pinned = {(e["name"], e["params"]): e for e in _read(os.path.join(fixtures_dir, CONSTANTS_FILE))}
    for entry in computed_constants():
        key = (entry["name"], entry["params"])
        if key not in pinned:
            checks.append(Check(f"{entry['name']}[{entry['params']}]", False, "missing from fixture"))
            continue
        expected = pinned[key]["value"]
        ok = abs(entry["value"] - expected) <= rtol * max(1.0, abs(expected))
        checks.append(Check(f"{entry['name']}[{entry['params']}]", ok,
                            f"computed {entry['value']!r}, fixture {expected!r}"))

    trees = _read(os.path.join(fixtures_dir, TREES_FILE))
    ok = trees == tree_table(MAX_TREE_DEGREE)
    checks.append(Check("tree_table", ok, f"{len(trees)} pinned trees"))
    return checks


def assert_fixtures(fixtures_dir, rtol=CONSTANT_RTOL):
    checks = check_fixtures(fixtures_dir, rtol)
    failed = [c for c in checks if not c.passed]
    if failed:
        raise FixtureMismatch(f"{len(failed)} fixture entries drifted", failures=failed)
    return checks
