"""Configuration management for Biblio Connectivity."""

import hashlib
import json
import logging
import os
from enum import StrEnum
from pathlib import Path
from typing import Any, List, Literal, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from biblio_connectivity.errors import ConfigurationError

logger = logging.getLogger(__name__)

# Fallback configuration file location
USER_CONFIG_PATH = Path.home() / ".config" / "biblio-connectivity" / "config.json"


class NetworkKind(StrEnum):
    """The three coupling networks built per specialism and period."""

    ARTICLE_COSINE = "article-cosine"
    AUTHOR_COSINE = "author-cosine"
    TEXT_BM25 = "text-bm25"


class PeriodSpec(BaseModel):
    """An inclusive range of publication years."""

    label: str = Field(..., min_length=1, description="Period label used in file names and tables")
    start: int = Field(..., description="First year, inclusive")
    end: int = Field(..., description="Last year, inclusive")

    @model_validator(mode="after")
    def validate_range(self) -> "PeriodSpec":
        if self.start > self.end:
            raise ValueError(f"period {self.label}: start {self.start} is after end {self.end}")
        return self

    def contains(self, year: int) -> bool:
        return self.start <= year <= self.end


def check_disjoint(periods: List[PeriodSpec]) -> None:
    """Raise ConfigurationError if two periods overlap or share a label."""
    ordered = sorted(periods, key=lambda p: (p.start, p.end))
    for earlier, later in zip(ordered, ordered[1:]):
        if later.start <= earlier.end:
            raise ConfigurationError(f"periods {earlier.label} and {later.label} overlap")
    labels = [p.label for p in periods]
    if len(set(labels)) != len(labels):
        raise ConfigurationError("period labels must be unique")


def _validate_disjoint(periods: List[PeriodSpec]) -> None:
    try:
        check_disjoint(periods)
    except ConfigurationError as e:
        raise ValueError(e.message) from e


class PeriodSet(BaseModel):
    """A named collection of pairwise disjoint periods."""

    name: str = Field(..., description="Set name, e.g. 'citation' or 'text'")
    periods: List[PeriodSpec] = Field(..., min_length=1)

    @field_validator("periods")
    @classmethod
    def validate_disjoint(cls, v: List[PeriodSpec]) -> List[PeriodSpec]:
        _validate_disjoint(v)
        return v


class MatchRuleConfig(BaseModel):
    """Thresholds for reference and author disambiguation."""

    author_jw_min: float = Field(0.9, ge=0, le=1, description="Reference author fields, >=")
    title_jw_min_with_year: float = Field(
        0.85, ge=0, le=1, description="Reference titles when years are equal, >="
    )
    title_jw_min_alone: float = Field(
        0.95, ge=0, le=1, description="Reference titles regardless of year, >="
    )
    prefix_chars: int = Field(3, ge=0, description="Exact lower-case prefix length")
    author_surname_min: float = Field(0.95, ge=0, le=1, description="Author surnames, strict >")
    author_given_min: float = Field(0.9, ge=0, le=1, description="Author given names, strict >")


class Bm25Config(BaseModel):
    """BM25 free parameters."""

    k1: float = Field(2.0, ge=0, description="Term-frequency saturation")
    b: float = Field(0.75, ge=0, le=1, description="Length normalization")


class SynthConfig(BaseModel):
    """Parameters of a synthetic corpus with controllable reference sharing."""

    seed: int = Field(0, description="Random seed")
    periods: List[PeriodSpec] = Field(..., min_length=1)
    specialisms: List[str] = Field(default_factory=lambda: ["synthetic"], min_length=1)
    articles_per_period: int = Field(..., ge=0)
    refs_per_article: List[int] = Field(..., description="Reference list length per period")
    shared_pool_size: List[int] = Field(..., description="Shared pool size per period")
    shared_draw_fraction: List[float] = Field(..., description="Share drawn from the pool")
    coauthor_probability: float = Field(0.1, ge=0, le=1)
    author_pool_size: int = Field(200, ge=1, description="Distinct authors per specialism")
    vocabulary_size: int = Field(2000, ge=2)
    abstract_length: int = Field(80, ge=1, description="Tokens per abstract")

    @field_validator("refs_per_article", "shared_pool_size")
    @classmethod
    def validate_counts(cls, v: List[int]) -> List[int]:
        if any(n < 0 for n in v):
            raise ValueError("counts must be non-negative")
        return v

    @field_validator("shared_draw_fraction")
    @classmethod
    def validate_fractions(cls, v: List[float]) -> List[float]:
        if any(not 0 <= f <= 1 for f in v):
            raise ValueError("shared_draw_fraction entries must be in [0, 1]")
        return v

    @model_validator(mode="after")
    def validate_alignment(self) -> "SynthConfig":
        n = len(self.periods)
        for name in ("refs_per_article", "shared_pool_size", "shared_draw_fraction"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} must have one entry per period ({n})")
        _validate_disjoint(self.periods)
        return self


class PipelineConfig(BaseSettings):
    """Main configuration model for a pipeline run.

    Every field can also come from a ``BIBCONN_``-prefixed environment variable.
    """

    model_config = SettingsConfigDict(env_prefix="BIBCONN_", env_nested_delimiter="__")

    inputs: List[Path] = Field(default_factory=list, description="Publication record files")
    input_format: Literal["jsonl", "tabular"] = Field("jsonl", description="Input file format")
    periods: str = Field("citation", description="Period set name or file for coupling networks")
    text_periods: str = Field("text", description="Period set name or file for text networks")
    match: MatchRuleConfig = Field(default_factory=MatchRuleConfig)
    author_scope: Literal["specialism", "global"] = Field(
        "specialism", description="Scope within which author names are disambiguated"
    )
    networks: List[NetworkKind] = Field(default_factory=lambda: list(NetworkKind))
    grid_file: Optional[Path] = Field(None, description="Threshold grid override, one per line")
    out_dir: Path = Field(Path("bundle"), description="Report bundle directory")
    threads: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)
    bm25: Bm25Config = Field(default_factory=Bm25Config)
    text_journals: List[str] = Field(
        default_factory=list, description="Journals used for text networks (empty: all)"
    )
    keep_abstractless_isolates: bool = Field(False)
    price_window: int = Field(10, ge=0, description="Price index window in years")
    year_min: int = Field(1400, description="Lowest accepted publication year")
    year_max: int = Field(2100, description="Highest accepted publication year")
    aggregate_exclude: List[str] = Field(
        default_factory=list, description="Specialisms left out of the secondary aggregate curves"
    )

    @model_validator(mode="after")
    def validate_years(self) -> "PipelineConfig":
        if self.year_min > self.year_max:
            raise ValueError("year_min must not exceed year_max")
        return self

    @property
    def year_range(self) -> tuple[int, int]:
        return self.year_min, self.year_max

    def config_hash(self) -> str:
        """
        Hash of everything that can change the bundle contents.

        Input, period and grid files enter by content, so the hash does not
        depend on where they live. A file that cannot be read enters by name.
        """
        payload = self.model_dump(mode="json", exclude={"threads", "out_dir"})
        payload["inputs"] = [_file_digest(path) for path in self.inputs]
        for key in ("periods", "text_periods", "grid_file"):
            value = payload[key]
            if value is not None and Path(value).is_file():
                payload[key] = _file_digest(Path(value))
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _file_digest(path: Path) -> str:
    try:
        return hashlib.sha256(path.read_bytes()).hexdigest()
    except OSError:
        return path.name


class ConfigManager:
    """Loads pipeline configuration from a JSON file."""

    def __init__(self, config_path: Optional[Path] = None):
        """Initialize config manager with optional custom path."""
        self.explicit = config_path is not None
        self.config_path = config_path or USER_CONFIG_PATH

    def load(self, overrides: Optional[dict[str, Any]] = None) -> PipelineConfig:
        """Load configuration from file, then apply overrides (CLI flags)."""
        data: dict[str, Any] = {}
        if self.config_path.exists():
            try:
                with open(self.config_path, "r", encoding="utf-8") as f:
                    data = json.load(f)
                logger.info(f"Loaded configuration from {self.config_path}")
            except (json.JSONDecodeError, OSError) as e:
                raise ConfigurationError(f"cannot read config {self.config_path}: {e}") from e
        elif self.explicit:
            raise ConfigurationError(f"config file not found: {self.config_path}")
        else:
            logger.info(f"Config file not found at {self.config_path}, using defaults")

        if not isinstance(data, dict):
            raise ConfigurationError(f"config {self.config_path} is not a JSON object")
        data.update({k: v for k, v in (overrides or {}).items() if v is not None})
        try:
            return PipelineConfig(**data)
        except ValidationError as e:
            raise ConfigurationError(f"invalid configuration: {e}") from e
