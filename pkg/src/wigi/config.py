"""Pipeline configuration: config file, environment overrides, defaults."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

ENV_PREFIX = "WIGI_"

_BOOL_FIELDS = {"strict", "offline", "use_citizenship", "figures"}
_INT_FIELDS = {
    "min_count", "top_n_languages", "top_n_sizes", "grid_start", "grid_end",
    "grid_step", "celebrity_start", "celebrity_end", "fit_start", "fit_end",
    "window", "threads", "wigi_start_decade",
}
_FLOAT_FIELDS = {"parity_target"}
_PATH_FIELDS = {
    "dump", "records", "entity_atlas", "language_atlas", "population",
    "sizes", "lexicon", "corpus_dir", "property_config", "out_dir",
}


class ConfigError(ValueError):
    pass


def packaged_data(name: str) -> Path:
    """Path of a data file shipped with the package."""
    return Path(resources.files("wigi.data") / name)


@dataclass
class PipelineConfig:
    # input/output paths; atlas and lexicon default to the shipped files
    dump: str = ""
    records: str = "records.csv"
    entity_atlas: str = ""
    language_atlas: str = ""
    population: str = ""
    sizes: str = ""
    lexicon: str = ""
    corpus_dir: str = ""
    property_config: str = ""
    out_dir: str = "out"
    # external national indices, name -> CSV path
    external_indices: dict[str, str] = field(default_factory=dict)
    # thresholds
    min_count: int = 10
    top_n_languages: int = 50
    top_n_sizes: int = 25
    grid_start: int = 1800
    grid_end: int = 1990
    grid_step: int = 10
    celebrity_start: int = 1930
    celebrity_end: int = 1989
    fit_start: int = 1800
    fit_end: int = 1989
    wigi_start_decade: int = 1900
    window: int = 200
    parity_target: float = 0.5
    preferred_wiki: str = "enwiki"
    baseline_wiki: str = "dewiki"
    user_agent: str = ""
    # flags
    strict: bool = False
    offline: bool = True
    use_citizenship: bool = False
    figures: bool = True
    threads: int = 1

    def resolved_entity_atlas(self) -> Path:
        return Path(self.entity_atlas) if self.entity_atlas else packaged_data("entity_clusters.tsv")

    def resolved_language_atlas(self) -> Path:
        return Path(self.language_atlas) if self.language_atlas else packaged_data("language_clusters.tsv")

    def resolved_lexicon(self) -> Path:
        return Path(self.lexicon) if self.lexicon else packaged_data("celebrity_terms.txt")

    def calibration_grid(self) -> range:
        return range(self.grid_start, self.grid_end + 1, self.grid_step)


def _coerce(key: str, value: str):
    if key in _BOOL_FIELDS:
        lowered = value.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    if key in _INT_FIELDS:
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {value!r}") from None
    if key in _FLOAT_FIELDS:
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    return value


def _apply(config: PipelineConfig, key: str, value: str) -> None:
    if key.startswith("external_index."):
        config.external_indices[key[len("external_index."):]] = value
        return
    known = {f.name for f in fields(PipelineConfig)} - {"external_indices"}
    if key not in known:
        raise ConfigError(f"unknown config key: {key!r}")
    setattr(config, key, _coerce(key, value))


def load_config(path: str | Path | None = None,
                environ: dict[str, str] | None = None) -> PipelineConfig:
    """Build a config from an optional ``key = value`` file, then apply
    ``WIGI_<KEY>`` environment overrides on top."""
    config = PipelineConfig()
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}, line {number}: expected key = value")
            key, _, value = line.partition("=")
            _apply(config, key.strip(), value.strip())
    environ = os.environ if environ is None else environ
    for name, value in sorted(environ.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        key = name[len(ENV_PREFIX):].lower()
        if key.startswith("external_index_"):
            key = "external_index." + key[len("external_index_"):].upper()
        _apply(config, key, value)
    return config
