import pytest

from hodge_convolution.config import DEFAULT_DENOMINATORS, load_config, selfcheck_settings

SETTINGS = """\
app:
  name: hodge-convolution
  env: test
output:
  format: json
logging:
  level: debug
selfcheck:
  cases: 5
  seed: 3
  denominators: [5, 3, 3]
"""


def write(tmp_path, text=SETTINGS):
    path = tmp_path / "settings.yaml"
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for key in ("APP_ENV", "HODGE_FORMAT", "HODGE_LOG_LEVEL"):
        monkeypatch.delenv(key, raising=False)


def test_load_config_reads_yaml(tmp_path):
    cfg = load_config(write(tmp_path))
    assert cfg.env == "test"
    assert cfg.output_format == "json"
    assert cfg.log_level == "DEBUG"
    assert cfg.selfcheck.cases == 5
    assert cfg.selfcheck.seed == 3
    assert cfg.selfcheck.denominators == (3, 5)


def test_env_overrides(tmp_path, monkeypatch):
    monkeypatch.setenv("HODGE_FORMAT", "table")
    monkeypatch.setenv("HODGE_LOG_LEVEL", "warning")
    cfg = load_config(write(tmp_path))
    assert cfg.output_format == "table"
    assert cfg.log_level == "WARNING"


def test_bad_format(tmp_path, monkeypatch):
    monkeypatch.setenv("HODGE_FORMAT", "xml")
    with pytest.raises(ValueError, match="output.format"):
        load_config(write(tmp_path))


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "nope.yaml")


def test_selfcheck_defaults():
    s = selfcheck_settings({})
    assert (s.cases, s.seed, s.max_points, s.max_rank) == (50, 7, 3, 2)
    assert s.denominators == DEFAULT_DENOMINATORS


@pytest.mark.parametrize(
    "raw",
    [{"cases": 0}, {"cases": "many"}, {"denominators": []}, {"denominators": [1, 2]}, {"seed": 1.5}],
)
def test_selfcheck_rejects(raw):
    with pytest.raises(ValueError):
        selfcheck_settings(raw)


def test_repo_settings_load():
    cfg = load_config()
    assert cfg.output_format in ("table", "json")
    assert cfg.selfcheck.cases == 50
    assert cfg.selfcheck.seed == 7
