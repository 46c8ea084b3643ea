from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import yaml
from dotenv import load_dotenv

OUTPUT_FORMATS = ("table", "json")
DEFAULT_DENOMINATORS = (2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 15)


def repo_root() -> Path:
    return Path(__file__).resolve().parents[2]


def load_yaml(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise FileNotFoundError(f"Missing config file: {path}")
    with path.open("r", encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


@dataclass(frozen=True)
class SelfcheckSettings:
    cases: int = 50
    seed: int = 7
    denominators: Tuple[int, ...] = DEFAULT_DENOMINATORS
    max_points: int = 3
    max_rank: int = 2


@dataclass(frozen=True)
class AppConfig:
    env: str
    output_format: str
    log_level: str
    selfcheck: SelfcheckSettings
    settings: Dict[str, Any]


def _positive_int(section: Dict[str, Any], key: str, default: int) -> int:
    value = section.get(key, default)
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ValueError(f"configs/settings.yaml: selfcheck.{key} must be a positive integer, got {value!r}")
    return value


def selfcheck_settings(raw: Dict[str, Any]) -> SelfcheckSettings:
    dens = raw.get("denominators", list(DEFAULT_DENOMINATORS))
    if not isinstance(dens, list) or not dens:
        raise ValueError("configs/settings.yaml: selfcheck.denominators must be a non-empty list")
    if not all(isinstance(d, int) and not isinstance(d, bool) and d >= 2 for d in dens):
        raise ValueError(f"configs/settings.yaml: selfcheck.denominators must be integers >= 2, got {dens!r}")
    seed = raw.get("seed", 7)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ValueError(f"configs/settings.yaml: selfcheck.seed must be an integer, got {seed!r}")
    return SelfcheckSettings(
        cases=_positive_int(raw, "cases", 50),
        seed=seed,
        denominators=tuple(sorted(set(dens))),
        max_points=_positive_int(raw, "max_points", 3),
        max_rank=_positive_int(raw, "max_rank", 2),
    )


def load_config(settings_path: Optional[Path] = None) -> AppConfig:
    # repo-root .env wins over the shell for local runs
    load_dotenv(repo_root() / ".env", override=True)

    settings_path = settings_path or (repo_root() / "configs" / "settings.yaml")
    settings = load_yaml(settings_path)

    env = os.getenv("APP_ENV", settings.get("app", {}).get("env", "local"))

    output_format = os.getenv("HODGE_FORMAT", settings.get("output", {}).get("format", "table"))
    if output_format not in OUTPUT_FORMATS:
        raise ValueError(f"output.format must be one of {OUTPUT_FORMATS}, got {output_format!r}")

    log_level = os.getenv("HODGE_LOG_LEVEL", settings.get("logging", {}).get("level", "INFO"))

    return AppConfig(
        env=str(env),
        output_format=output_format,
        log_level=str(log_level).upper(),
        selfcheck=selfcheck_settings(settings.get("selfcheck", {}) or {}),
        settings=settings,
    )
