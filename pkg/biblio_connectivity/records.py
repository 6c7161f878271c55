"""Publication record models shared by every pipeline stage."""

import re
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator

DEFAULT_YEAR_RANGE = (1400, 2100)

_PUNCTUATION = re.compile(r"[^\w\s]|_")
_WHITESPACE = re.compile(r"\s+")
_ANONYMOUS_BRACKETS = re.compile(r"[\[\]\(\)\{\}<>]")


def normalize_text(value: str) -> str:
    """Lower-case, turn punctuation into spaces and collapse whitespace.

    Diacritics are kept as they are.
    """
    lowered = _PUNCTUATION.sub(" ", value.lower())
    return _WHITESPACE.sub(" ", lowered).strip()


def is_anonymous(author_field: str) -> bool:
    """True for an empty author field or an ``[Anonymous]``-style marker."""
    stripped = _ANONYMOUS_BRACKETS.sub("", author_field).strip().lower()
    return stripped in ("", "anonymous", "anon")


def _check_year(year: int, info: ValidationInfo) -> int:
    low, high = (info.context or {}).get("year_range", DEFAULT_YEAR_RANGE)
    if not low <= year <= high:
        raise ValueError(f"year {year} is not in valid range ({low}-{high})")
    return year


class AuthorName(BaseModel):
    """An author as written on a citing article."""

    model_config = ConfigDict(frozen=True)

    surname: str = Field(..., description="Family name")
    given: str = Field("", description="Given name(s) or initials, possibly empty")

    @field_validator("surname")
    @classmethod
    def validate_surname(cls, v: str) -> str:
        """Surnames must survive trimming."""
        v = v.strip()
        if not v:
            raise ValueError("author surname is empty")
        return v

    @field_validator("given")
    @classmethod
    def strip_given(cls, v: str) -> str:
        return v.strip()

    @property
    def key(self) -> tuple[str, str]:
        """Lower-cased, punctuation-stripped (surname, given) used for matching."""
        return normalize_text(self.surname), normalize_text(self.given)


class PublicationRecord(BaseModel):
    """One citing article."""

    model_config = ConfigDict(frozen=True)

    record_id: str = Field(..., min_length=1, description="Unique record identifier")
    journal: str = Field("", description="Journal title")
    specialism: str = Field("", description="Research field label")
    year: int = Field(..., description="Publication year")
    title: str = Field("", description="Article title")
    abstract: Optional[str] = Field(None, description="Abstract text, if available")
    authors: tuple[AuthorName, ...] = Field(..., min_length=1, description="Article authors")
    raw_references: tuple[str, ...] = Field(
        default_factory=tuple, description="Cited references, one free-text string each"
    )

    @field_validator("year")
    @classmethod
    def validate_year(cls, v: int, info: ValidationInfo) -> int:
        return _check_year(v, info)

    @property
    def has_abstract(self) -> bool:
        return bool(self.abstract and self.abstract.strip())


class RawReference(BaseModel):
    """A cited reference split into author, year and title remainder."""

    model_config = ConfigDict(frozen=True)

    source_record_id: str = Field("", description="Citing record")
    author_field: str = Field(..., description="Author part of the reference")
    year: int = Field(..., description="Publication year of the cited work")
    title_field: str = Field("", description="Remainder after the year, trimmed")

    @field_validator("author_field")
    @classmethod
    def validate_author(cls, v: str) -> str:
        if is_anonymous(v):
            raise ValueError("anonymous or empty author field")
        return v.strip()

    @field_validator("year")
    @classmethod
    def validate_year(cls, v: int, info: ValidationInfo) -> int:
        return _check_year(v, info)

    @property
    def norm_author(self) -> str:
        return normalize_text(self.author_field)

    @property
    def norm_title(self) -> str:
        return normalize_text(self.title_field)

    @property
    def key(self) -> str:
        """Normalized identity of the reference string, independent of the citing record."""
        return f"{self.norm_author}|{self.year}|{self.norm_title}"
