"""Publication record ingestion and cited-reference parsing."""

import json
import logging
import re
from enum import StrEnum
from typing import BinaryIO, Iterable, List, Literal, Optional

from pydantic import BaseModel, Field, ValidationError

from biblio_connectivity.errors import IngestError
from biblio_connectivity.records import (
    DEFAULT_YEAR_RANGE,
    PublicationRecord,
    RawReference,
    is_anonymous,
)

logger = logging.getLogger(__name__)

RecordFormat = Literal["jsonl", "tabular"]

TABULAR_COLUMNS = ("id", "journal", "specialism", "year", "title", "abstract", "authors", "refs")
REQUIRED_FIELDS = ("id", "year", "authors")

_YEAR_SEGMENT = re.compile(r"^(\d{4})(?:\s*[-/]\s*(\d{2,4}))?$")
# Volume, page, number and issue tokens, bare digit runs and DOIs.
_LOCATOR_SEGMENT = re.compile(r"^(?:(?:v|p|n|iss)\s*\d+[\w\-]*|\d+|doi\b.*)$", re.IGNORECASE)


class RowError(BaseModel):
    """A malformed input row."""

    line: int = Field(..., description="1-based line number in the input")
    reason: str


class ReferenceOutcome(StrEnum):
    PARSED = "parsed"
    ANONYMOUS = "anonymous"
    YEARLESS = "yearless"
    MALFORMED = "malformed"


class ReferenceParse(BaseModel):
    """Result of classifying one raw reference string."""

    outcome: ReferenceOutcome
    reference: Optional[RawReference] = None
    multi_year: bool = False


class ReferenceStats(BaseModel):
    """Reference discard accounting; the four outcome counts sum to ``total``."""

    total: int = 0
    parsed: int = 0
    anonymous: int = 0
    yearless: int = 0
    malformed: int = 0
    multi_year: int = Field(0, description="Parsed references that named a year range")

    def add(self, parse: ReferenceParse) -> None:
        self.total += 1
        setattr(self, parse.outcome.value, getattr(self, parse.outcome.value) + 1)
        if parse.multi_year:
            self.multi_year += 1

    @property
    def discarded(self) -> int:
        return self.anonymous + self.yearless + self.malformed


class IngestResult(BaseModel):
    """Records parsed from one input plus everything that could not be parsed."""

    rows_read: int = 0
    records: List[PublicationRecord] = Field(default_factory=list)
    errors: List[RowError] = Field(default_factory=list)


class InputReport(BaseModel):
    """Accounting for one input file."""

    name: str
    sha256: str
    rows_read: int = 0
    records: int = 0
    errors: List[RowError] = Field(default_factory=list)


class IngestReport(BaseModel):
    """Accounting for a whole ingest run."""

    inputs: List[InputReport] = Field(default_factory=list)
    records: int = 0
    references: ReferenceStats = Field(default_factory=ReferenceStats)


def classify_reference(
    raw: str, source_record_id: str = "", year_range: tuple[int, int] = DEFAULT_YEAR_RANGE
) -> ReferenceParse:
    """
    Split a reference string into author, year and title remainder.

    Segments are comma-separated: everything before the first year segment is
    the author field, everything after it the title, minus volume, page,
    number, issue and DOI segments. For year ranges ("1990-1992") the first
    year is used and the parse is flagged.

    Args:
        raw: Reference as exported by the citation index.
        source_record_id: Citing record, carried onto the RawReference.
        year_range: Accepted publication years, inclusive.

    Returns:
        ReferenceParse with the outcome and, when parsed, the RawReference.
    """
    text = raw.strip()
    if not text:
        return ReferenceParse(outcome=ReferenceOutcome.MALFORMED)

    segments = [segment.strip() for segment in text.split(",")]
    low, high = year_range
    year_index: Optional[int] = None
    year = 0
    multi_year = False
    for index, segment in enumerate(segments):
        match = _YEAR_SEGMENT.match(segment)
        if match and low <= int(match.group(1)) <= high:
            year_index, year, multi_year = index, int(match.group(1)), match.group(2) is not None
            break

    author = ", ".join(segments[:year_index]) if year_index is not None else segments[0]
    if is_anonymous(author):
        return ReferenceParse(outcome=ReferenceOutcome.ANONYMOUS)
    if year_index is None:
        return ReferenceParse(outcome=ReferenceOutcome.YEARLESS)

    remainder = [s for s in segments[year_index + 1 :] if s and not _LOCATOR_SEGMENT.match(s)]
    try:
        reference = RawReference.model_validate(
            {
                "source_record_id": source_record_id,
                "author_field": author,
                "year": year,
                "title_field": ", ".join(remainder),
            },
            context={"year_range": year_range},
        )
    except ValidationError:
        return ReferenceParse(outcome=ReferenceOutcome.MALFORMED)
    return ReferenceParse(
        outcome=ReferenceOutcome.PARSED, reference=reference, multi_year=multi_year
    )


def parse_reference_string(
    raw: str, year_range: tuple[int, int] = DEFAULT_YEAR_RANGE
) -> Optional[RawReference]:
    """Parse a reference string, returning None for anonymous, year-less or malformed ones."""
    return classify_reference(raw, year_range=year_range).reference


def extract_references(
    records: Iterable[PublicationRecord], year_range: tuple[int, int] = DEFAULT_YEAR_RANGE
) -> tuple[List[RawReference], ReferenceStats]:
    """Parse every raw reference of every record, in record order."""
    references: List[RawReference] = []
    stats = ReferenceStats()
    for record in records:
        for raw in record.raw_references:
            parse = classify_reference(raw, record.record_id, year_range)
            stats.add(parse)
            if parse.reference is not None:
                references.append(parse.reference)

    logger.info(
        f"Parsed {stats.parsed}/{stats.total} references "
        f"({stats.anonymous} anonymous, {stats.yearless} without year, "
        f"{stats.malformed} malformed)"
    )
    if stats.multi_year:
        logger.warning(f"{stats.multi_year} year-range references, first year used")
    return references, stats


def _split_authors(field: str) -> list[dict]:
    authors = []
    for chunk in field.split(";"):
        if not chunk.strip():
            continue
        surname, _, given = chunk.partition(",")
        authors.append({"surname": surname, "given": given})
    return authors


def _row_from_tabular(line: str, header: list[str]) -> dict:
    cells = line.split("\t")
    if len(cells) != len(header):
        raise ValueError(f"expected {len(header)} columns, got {len(cells)}")
    row = dict(zip(header, cells))
    for key in ("id", "year", "authors"):
        if not row.get(key, "").strip():
            row.pop(key, None)
    if "authors" in row:
        row["authors"] = _split_authors(row["authors"])
    row["refs"] = [r for r in row.get("refs", "").split("|") if r.strip()]
    if not row.get("abstract", "").strip():
        row["abstract"] = None
    return row


def _row_from_jsonl(line: str) -> dict:
    row = json.loads(line)
    if not isinstance(row, dict):
        raise ValueError("row is not a JSON object")
    return row


def _to_record(row: dict, year_range: tuple[int, int]) -> PublicationRecord:
    missing = [key for key in REQUIRED_FIELDS if row.get(key) in (None, "", [])]
    if missing:
        raise ValueError(f"missing field(s): {', '.join(missing)}")
    return PublicationRecord.model_validate(
        {
            "record_id": str(row["id"]),
            "journal": row.get("journal") or "",
            "specialism": row.get("specialism") or "",
            "year": row["year"],
            "title": row.get("title") or "",
            "abstract": row.get("abstract"),
            "authors": row["authors"],
            "raw_references": row.get("refs") or [],
        },
        context={"year_range": year_range},
    )


def _describe(error: Exception) -> str:
    if isinstance(error, ValidationError):
        first = error.errors()[0]
        where = ".".join(str(part) for part in first["loc"])
        return f"{where}: {first['msg']}" if where else first["msg"]
    return str(error)


def parse_records(
    stream: BinaryIO | bytes,
    fmt: RecordFormat = "jsonl",
    year_range: tuple[int, int] = DEFAULT_YEAR_RANGE,
) -> IngestResult:
    """
    Parse publication records from a JSONL or tab-separated stream.

    Malformed rows (bad UTF-8, bad JSON, missing id/year/authors, invalid
    values) are reported with their line number and parsing continues. Blank
    lines and a leading UTF-8 byte order mark are skipped.

    Args:
        stream: Binary stream or raw bytes.
        fmt: "jsonl" (one object per line) or "tabular" (header line, then rows).
        year_range: Accepted publication years, inclusive.

    Returns:
        IngestResult with records in input order.

    Raises:
        IngestError: if the stream cannot be read, the tabular header is
            invalid, or two rows share a record id.
    """
    try:
        data = stream if isinstance(stream, bytes) else stream.read()
    except OSError as e:
        raise IngestError(f"cannot read input: {e}") from e
    data = data.removeprefix(b"\xef\xbb\xbf")

    result = IngestResult()
    header: Optional[list[str]] = None
    seen: dict[str, int] = {}

    for number, raw_line in enumerate(data.split(b"\n"), start=1):
        raw_line = raw_line.rstrip(b"\r")
        if not raw_line.strip():
            continue
        try:
            line = raw_line.decode("utf-8")
        except UnicodeDecodeError as e:
            result.rows_read += 1
            result.errors.append(RowError(line=number, reason=f"invalid UTF-8: {e.reason}"))
            continue

        if fmt == "tabular" and header is None:
            header = [column.strip() for column in line.split("\t")]
            missing = [c for c in TABULAR_COLUMNS if c not in header]
            if missing:
                raise IngestError(f"tabular header lacks column(s): {', '.join(missing)}")
            continue

        result.rows_read += 1
        try:
            row = _row_from_tabular(line, header) if fmt == "tabular" else _row_from_jsonl(line)
            record = _to_record(row, year_range)
        except (ValueError, ValidationError) as e:
            result.errors.append(RowError(line=number, reason=_describe(e)))
            continue

        if record.record_id in seen:
            raise IngestError(
                f"duplicate record id {record.record_id!r} on lines "
                f"{seen[record.record_id]} and {number}"
            )
        seen[record.record_id] = number
        result.records.append(record)

    for error in result.errors:
        logger.warning(f"Line {error.line}: {error.reason}")
    logger.info(f"Parsed {len(result.records)} records, {len(result.errors)} malformed rows")
    return result


def _record_to_json(record: PublicationRecord) -> dict:
    row = {
        "id": record.record_id,
        "journal": record.journal,
        "specialism": record.specialism,
        "year": record.year,
        "title": record.title,
        "authors": [{"surname": a.surname, "given": a.given} for a in record.authors],
        "refs": list(record.raw_references),
    }
    if record.abstract is not None:
        row["abstract"] = record.abstract
    return row


def _tabular_cell(value: str, record_id: str, column: str, reserved: str = "") -> str:
    bad = sorted({c for c in value if c in "\t\r\n" + reserved})
    if bad:
        raise IngestError(
            f"record {record_id}: {column} holds {bad!r}, which the tabular format cannot carry"
        )
    return value


def emit_records(records: Iterable[PublicationRecord], fmt: RecordFormat = "jsonl") -> bytes:
    """
    Write records in canonical form.

    ``parse_records(emit_records(parse_records(x).records))`` yields the same
    records as ``parse_records(x)``.

    Raises:
        IngestError: in tabular form, if a field holds a tab or line break, a
            reference holds ``|``, or an author name holds ``,`` or ``;``.
    """
    lines: list[str] = []
    if fmt == "tabular":
        lines.append("\t".join(TABULAR_COLUMNS))
        for record in records:
            rid = record.record_id
            authors = "; ".join(
                f"{_tabular_cell(a.surname, rid, 'author surname', ',;')}, "
                f"{_tabular_cell(a.given, rid, 'author given name', ',;')}"
                for a in record.authors
            )
            cells = [
                _tabular_cell(rid, rid, "id"),
                _tabular_cell(record.journal, rid, "journal"),
                _tabular_cell(record.specialism, rid, "specialism"),
                str(record.year),
                _tabular_cell(record.title, rid, "title"),
                _tabular_cell(record.abstract or "", rid, "abstract"),
                authors,
                "|".join(_tabular_cell(r, rid, "reference", "|") for r in record.raw_references),
            ]
            lines.append("\t".join(cells))
    else:
        for record in records:
            lines.append(
                json.dumps(_record_to_json(record), ensure_ascii=False, separators=(",", ":"))
            )
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""
