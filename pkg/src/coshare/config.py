"""Pipeline configuration: flat key=value file, COSHARE_* env overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from datetime import datetime, timezone
from pathlib import Path

ENV_PREFIX = "COSHARE_"


class ConfigError(ValueError):
    """Invalid or missing configuration; carries the offending field name."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"config field '{field_name}': {message}")
        self.field_name = field_name


@dataclass
class PipelineConfig:
    corpus_path: Path
    origin_timestamp: int
    n_windows: int
    output_dir: Path
    facts_path: Path | None = None
    overrides_path: Path | None = None
    stopwords_path: Path | None = None
    matrix_dir: Path | None = None
    window_len_seconds: int = 604800  # 7 days
    min_text_chars: int = 180
    jaccard_threshold: float = 0.7
    tfidf_threshold: float = 0.4
    backbone_pvalue: float = 0.1
    salience_rule: str = "both"
    weight_mode: str = "distinct"
    top_k: int = 10
    louvain_seed: int = 42

    def window_dir(self, index: int) -> Path:
        return self.output_dir / f"window_{index}"


_REQUIRED = ("corpus_path", "origin_timestamp", "n_windows", "output_dir")
_PATH_FIELDS = ("corpus_path", "output_dir", "facts_path", "overrides_path", "stopwords_path", "matrix_dir")
_INT_FIELDS = ("n_windows", "window_len_seconds", "min_text_chars", "top_k", "louvain_seed")
_FLOAT_FIELDS = ("jaccard_threshold", "tfidf_threshold", "backbone_pvalue")


def parse_config_text(text: str) -> dict[str, str]:
    """Parse `key = value` lines; '#' starts a comment, blank lines ignored."""
    values: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError("<file>", f"line {line_no} is not 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _parse_timestamp(value: str) -> int:
    try:
        return int(value)
    except ValueError:
        pass
    try:
        dt = datetime.fromisoformat(value)
    except ValueError as exc:
        raise ConfigError("origin_timestamp", f"not an integer or ISO-8601 datetime: {value}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def load_config(path: Path | str, env: dict[str, str] | None = None) -> PipelineConfig:
    """Read a config file, apply COSHARE_* environment overrides, validate.

    Relative paths resolve against the config file's directory.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError("<file>", f"config file not found: {path}")
    values = parse_config_text(path.read_text(encoding="utf-8"))

    env = os.environ if env is None else env
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown config key")
    for key in known:
        env_key = ENV_PREFIX + key.upper()
        if env_key in env:
            values[key] = env[env_key]

    for key in _REQUIRED:
        if key not in values or values[key] == "":
            raise ConfigError(key, "required")

    base = path.parent
    kwargs: dict = {}
    for key, raw in values.items():
        if key in _PATH_FIELDS:
            p = Path(raw)
            kwargs[key] = p if p.is_absolute() else base / p
        elif key == "origin_timestamp":
            kwargs[key] = _parse_timestamp(raw)
        elif key in _INT_FIELDS:
            try:
                kwargs[key] = int(raw)
            except ValueError:
                raise ConfigError(key, f"not an integer: {raw}")
        elif key in _FLOAT_FIELDS:
            try:
                kwargs[key] = float(raw)
            except ValueError:
                raise ConfigError(key, f"not a number: {raw}")
        else:
            kwargs[key] = raw

    config = PipelineConfig(**kwargs)
    validate_config(config)
    return config


def validate_config(config: PipelineConfig) -> None:
    if config.n_windows < 1:
        raise ConfigError("n_windows", "must be >= 1")
    if config.window_len_seconds <= 0:
        raise ConfigError("window_len_seconds", "must be > 0")
    if config.origin_timestamp < 0:
        raise ConfigError("origin_timestamp", "must be >= 0")
    if config.min_text_chars < 0:
        raise ConfigError("min_text_chars", "must be >= 0")
    if not 0.0 <= config.jaccard_threshold <= 1.0:
        raise ConfigError("jaccard_threshold", "must be in [0, 1]")
    if not 0.0 <= config.tfidf_threshold <= 1.0:
        raise ConfigError("tfidf_threshold", "must be in [0, 1]")
    if not 0.0 < config.backbone_pvalue < 1.0:
        raise ConfigError("backbone_pvalue", "must be in (0, 1)")
    if config.salience_rule not in ("both", "either"):
        raise ConfigError("salience_rule", "must be 'both' or 'either'")
    if config.weight_mode not in ("distinct", "min_count"):
        raise ConfigError("weight_mode", "must be 'distinct' or 'min_count'")
    if config.top_k < 1:
        raise ConfigError("top_k", "must be >= 1")
