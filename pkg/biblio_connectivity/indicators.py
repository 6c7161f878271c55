"""Descriptive series per specialism and period: Price index, counts and overload."""

import logging
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd
from pydantic import BaseModel, Field

from biblio_connectivity.errors import IndicatorError
from biblio_connectivity.ingest import classify_reference
from biblio_connectivity.networks import WEIGHT_FORMAT
from biblio_connectivity.records import DEFAULT_YEAR_RANGE, PublicationRecord
from biblio_connectivity.resolution import AuthorDirectory, ReferenceDictionary, cited_clusters

logger = logging.getLogger(__name__)

INDICATOR_COLUMNS = [
    "specialism",
    "period",
    "article_count",
    "mean_authors_per_article",
    "coauthored_share",
    "unique_authors",
    "unique_cited_sources",
    "mean_unique_refs_per_article",
    "price_index",
    "price_eligible",
    "price_excluded_negative",
]


class PriceIndex(BaseModel):
    """Share of cited works at most ``window`` years older than the citing article."""

    value: Optional[float] = Field(None, description="Absent when nothing is eligible")
    eligible: int = Field(0, ge=0, description="Citing-cited pairs with a non-negative age")
    within_window: int = Field(0, ge=0)
    excluded_negative: int = Field(0, ge=0, description="Pairs whose cited year is later")


class IndicatorRow(BaseModel):
    """Indicators of one (specialism, period) slice."""

    specialism: str
    period: str
    article_count: int = Field(0, ge=0)
    mean_authors_per_article: float = Field(0.0, ge=0)
    coauthored_share: float = Field(0.0, ge=0, le=1)
    unique_authors: int = Field(0, ge=0)
    unique_cited_sources: int = Field(0, ge=0)
    mean_unique_refs_per_article: float = Field(0.0, ge=0)
    price_index: Optional[float] = Field(None, ge=0, le=1)
    price_eligible: int = Field(0, ge=0)
    price_excluded_negative: int = Field(0, ge=0)


class IndicatorTable(BaseModel):
    """Indicator rows ordered by (specialism, period position)."""

    rows: List[IndicatorRow] = Field(default_factory=list)

    def row(self, specialism: str, period: str) -> IndicatorRow:
        for row in self.rows:
            if (row.specialism, row.period) == (specialism, period):
                return row
        raise KeyError((specialism, period))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.model_dump() for r in self.rows], columns=INDICATOR_COLUMNS)

    def write_csv(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(
            path, index=False, float_format=WEIGHT_FORMAT, lineterminator="\n", na_rep=""
        )
        return path


def _clusters_of(
    record: PublicationRecord, dictionary: ReferenceDictionary, year_range: tuple[int, int]
):
    try:
        return cited_clusters(record, dictionary, year_range)
    except KeyError as e:
        raise IndicatorError(
            f"reference {e} of record {record.record_id} is missing from the reference dictionary"
        ) from e


def _cited_years(
    record: PublicationRecord, dictionary: ReferenceDictionary, year_range: tuple[int, int]
) -> Dict[str, List[int]]:
    """Years of the references a record cites, grouped by cited work."""
    years: Dict[str, List[int]] = defaultdict(list)
    for raw in record.raw_references:
        reference = classify_reference(raw, record.record_id, year_range).reference
        if reference is None:
            continue
        try:
            cluster_id = dictionary.key_to_cluster[reference.key]
        except KeyError as e:
            raise IndicatorError(
                f"reference {e} of record {record.record_id} is missing from the reference "
                "dictionary"
            ) from e
        years[cluster_id].append(reference.year)
    return years


def price_index(
    records: Sequence[PublicationRecord],
    dictionary: ReferenceDictionary,
    window: int = 10,
    year_range: tuple[int, int] = DEFAULT_YEAR_RANGE,
) -> PriceIndex:
    """
    Price index of a slice.

    Each (citing article, cited work) pair counts once. Its age is the citing
    year minus the year of the reference the article wrote, not the year of
    the work's canonical form, so citing a later edition gives a younger age.
    When an article cites several variants of one work, the smallest
    non-negative age is used. Pairs with ``0 <= age <= window`` are recent;
    pairs whose every variant postdates the article have a negative age and
    are left out of both counts and tallied.

    Returns:
        PriceIndex whose ``value`` is None when the slice has no eligible pair.
    """
    eligible = within = negative = 0
    for record in records:
        for years in _cited_years(record, dictionary, year_range).values():
            ages = [record.year - year for year in years if year <= record.year]
            if not ages:
                negative += 1
                continue
            eligible += 1
            if min(ages) <= window:
                within += 1
    value = within / eligible if eligible else None
    return PriceIndex(
        value=value, eligible=eligible, within_window=within, excluded_negative=negative
    )


def descriptive_stats(
    records: Sequence[PublicationRecord],
    dictionary: ReferenceDictionary,
    specialism: str = "",
    period: str = "",
    authors: Optional[AuthorDirectory] = None,
    window: int = 10,
    year_range: tuple[int, int] = DEFAULT_YEAR_RANGE,
) -> IndicatorRow:
    """
    Indicator row of one slice.

    Unique cited sources count resolved cited works, not raw strings. An
    empty slice yields zeros with the Price index absent.

    Args:
        records: Articles of the slice.
        dictionary: Reference dictionary covering the slice.
        specialism: Row key.
        period: Row key (period label).
        authors: Author directory; without one, distinct name keys are counted.
        window: Price index window in years.
        year_range: Accepted publication years.
    """
    if not records:
        return IndicatorRow(specialism=specialism, period=period)

    per_article: List[set[str]] = []
    for record in records:
        per_article.append({c.cluster_id for c in _clusters_of(record, dictionary, year_range)})
    cited = set().union(*per_article)

    people: set = set()
    for record in records:
        for name in record.authors:
            if authors is None:
                people.add(name.key)
            else:
                try:
                    people.add(authors.identity_of(name, record.specialism).author_id)
                except KeyError as e:
                    raise IndicatorError(f"author {e} is missing from the author directory") from e

    price = price_index(records, dictionary, window, year_range)
    n = len(records)
    return IndicatorRow(
        specialism=specialism,
        period=period,
        article_count=n,
        mean_authors_per_article=sum(len(r.authors) for r in records) / n,
        coauthored_share=sum(1 for r in records if len(r.authors) >= 2) / n,
        unique_authors=len(people),
        unique_cited_sources=len(cited),
        mean_unique_refs_per_article=sum(len(s) for s in per_article) / n,
        price_index=price.value,
        price_eligible=price.eligible,
        price_excluded_negative=price.excluded_negative,
    )


class JournalSummary(BaseModel):
    """Coverage of one journal within a specialism."""

    specialism: str
    journal: str
    first_year: int
    last_year: int
    article_count: int
    first_abstract_year: Optional[int] = None
    articles_with_abstract: int = 0
    unique_authors: int = Field(0, description="Distinct authors of the whole specialism")


def dataset_summary(
    records: Sequence[PublicationRecord], authors: Optional[AuthorDirectory] = None
) -> List[JournalSummary]:
    """Per (specialism, journal) coverage, as in a dataset overview table."""
    by_journal: Dict[tuple[str, str], List[PublicationRecord]] = defaultdict(list)
    people: Dict[str, set] = defaultdict(set)
    for record in records:
        by_journal[(record.specialism, record.journal)].append(record)
        for name in record.authors:
            key = (
                authors.identity_of(name, record.specialism).author_id
                if authors is not None
                else name.key
            )
            people[record.specialism].add(key)

    summary = []
    for (specialism, journal), items in sorted(by_journal.items()):
        years = [r.year for r in items]
        with_abstract = [r.year for r in items if r.has_abstract]
        summary.append(
            JournalSummary(
                specialism=specialism,
                journal=journal,
                first_year=min(years),
                last_year=max(years),
                article_count=len(items),
                first_abstract_year=min(with_abstract) if with_abstract else None,
                articles_with_abstract=len(with_abstract),
                unique_authors=len(people[specialism]),
            )
        )
    return summary


def write_dataset_summary(summary: Sequence[JournalSummary], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = list(JournalSummary.model_fields)
    frame = pd.DataFrame([s.model_dump() for s in summary], columns=columns)
    frame["first_abstract_year"] = frame["first_abstract_year"].astype("Int64")
    frame.to_csv(path, index=False, lineterminator="\n", na_rep="")
    return path
