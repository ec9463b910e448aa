import json
import yaml
import pytest

from src.main import main, build_parser, merged_config, experiments_for, EXIT_PASS, EXIT_USAGE, EXIT_TOLERANCE
from src.harness.report import BUILD_ID
from src.harness.fixtures import CONSTANTS_FILE, TREES_FILE
from src.utils.config import load_config, DEFAULT_CONFIG_PATH
from src.utils.errors import ConfigurationError, UsageError


@pytest.fixture
def config_file(tmp_path, base_config):
    config = dict(base_config, wick_tables=1, wick_max_degree=4, tree_max_degree=6)
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(config))
    return str(path)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for key in ("CONFIG", "SEED", "REPLICAS", "WORKERS", "LOG_LEVEL", "OUT", "FORMAT", "FIXTURES_DIR",
                "METRICS_PATH"):
        monkeypatch.delenv(f"PARAPDE_{key}", raising=False)


def test_wick_subcommand_passes(config_file, tmp_path):
    out = tmp_path / "wick.csv"
    assert main(["--config", config_file, "--out", str(out), "wick"]) == EXIT_PASS
    lines = out.read_text().splitlines()
    assert lines[0] == "experiment,params,statistic,value,stderr,n"
    assert all(line.startswith("wick,") for line in lines[1:])


def test_json_report(config_file, tmp_path):
    out = tmp_path / "wick.json"
    assert main(["--config", config_file, "--format", "json", "--out", str(out), "wick"]) == EXIT_PASS
    payload = json.loads(out.read_text())
    assert payload["metadata"]["seed"] == 7
    assert payload["metadata"]["build"] == BUILD_ID
    assert "wick" in payload["metadata"]["experiments"]
    assert all(c["passed"] for c in payload["metadata"]["checks"])


def test_report_is_reproducible(config_file, tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["--config", config_file, "--out", str(first), "wick"])
    main(["--config", config_file, "--out", str(second), "wick"])
    assert first.read_bytes() == second.read_bytes()


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["pam", "--gamma", "high"], ["pam", "--n-levels", "4,x"],
                                  ["--format", "xml", "wick"]])
def test_bad_usage_exits_one(config_file, argv):
    assert main(["--config", config_file] + argv) == EXIT_USAGE


def test_missing_config_exits_one(tmp_path):
    assert main(["--config", str(tmp_path / "absent.yaml"), "wick"]) == EXIT_USAGE


def test_oracle_regen_then_check(config_file, tmp_path):
    assert main(["--config", config_file, "oracle", "check"]) == EXIT_USAGE
    assert main(["--config", config_file, "oracle", "regen"]) == EXIT_PASS
    assert main(["--config", config_file, "oracle", "check"]) == EXIT_PASS


def test_oracle_drift_exits_two(config_file, tmp_path, monkeypatch):
    fixtures = tmp_path / "pinned"
    monkeypatch.setenv("PARAPDE_FIXTURES_DIR", str(fixtures))
    assert main(["--config", config_file, "oracle", "regen"]) == EXIT_PASS
    trees = fixtures / "tree_table.json"
    payload = json.loads(trees.read_text())
    payload["entries"][0]["count"] = 2
    trees.write_text(json.dumps(payload))
    assert main(["--config", config_file, "oracle", "check"]) == EXIT_TOLERANCE


def test_flags_override_config(config_file):
    args = build_parser().parse_args(["--config", config_file, "--seed", "11", "pam", "--n-levels", "4,8",
                                      "--renormalize", "off", "--F", "sine:0.5"])
    config = merged_config(args)
    assert config["seed"] == 11
    assert config["pam_levels"] == [4, 8]
    assert config["pam_renormalize"] is False
    assert config["pam_F"] == "sine:0.5"
    assert experiments_for(args) == ("pam",)


def test_method_switches_to_trajectories(config_file):
    parser = build_parser()
    assert experiments_for(parser.parse_args(["pam", "--method", "direct"])) == ("pam-trajectory",)
    assert experiments_for(parser.parse_args(["sbe", "--method", "tree:2"])) == ("sbe-trajectory",)
    assert experiments_for(parser.parse_args(["ou"])) == ("ou-moments", "hermite-decay")


def test_parser_raises_usage_error():
    with pytest.raises(UsageError):
        build_parser().parse_args(["oracle", "rebuild"])


def test_environment_overrides(config_file, monkeypatch):
    monkeypatch.setenv("PARAPDE_SEED", "99")
    monkeypatch.setenv("PARAPDE_WORKERS", "3")
    config = load_config(config_file)
    assert config["seed"] == 99
    assert config["workers"] == 3
    monkeypatch.setenv("PARAPDE_REPLICAS", "many")
    with pytest.raises(ConfigurationError):
        load_config(config_file)


def test_config_must_be_a_mapping(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigurationError):
        load_config(str(path))


def test_renorm_runs_on_a_fresh_checkout(base_config, tmp_path):
    fixtures = tmp_path / "fixtures"
    config = dict(base_config, renorm_modes=16, renorm_n=2, renorm_cutoff=8, homog_modes=16,
                  homog_eps=[0.25, 0.125], replicas=8, fixtures_dir=str(fixtures))
    path = tmp_path / "renorm.yaml"
    path.write_text(yaml.safe_dump(config))
    out = tmp_path / "renorm.json"
    assert not fixtures.exists()
    code = main(["--config", str(path), "--format", "json", "--out", str(out), "renorm"])
    assert code in (EXIT_PASS, EXIT_TOLERANCE)
    assert (fixtures / CONSTANTS_FILE).exists() and (fixtures / TREES_FILE).exists()
    checks = json.loads(out.read_text())["metadata"]["checks"]
    pinned = [c for c in checks if c["name"].startswith("fixture:")]
    assert pinned and all(c["passed"] for c in pinned)
    assert main(["--config", str(path), "oracle", "check"]) == EXIT_PASS


def test_default_config_covers_the_sweeps():
    config = load_config(DEFAULT_CONFIG_PATH)
    assert config["drift_kmin"] == 1 and config["drift_kmax"] == 8
    assert config["pam_levels"] == [4, 8, 16]
    assert config["pam_deltas"] == [0.01, 0.001, 0.0001]
    assert config["homog_eps"] == [0.25, 0.125, 0.0625]
    assert config["heat_trace_deltas"] == [2.0 ** -e for e in range(4, 11)]
