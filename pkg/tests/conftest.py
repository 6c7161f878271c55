"""Shared fixtures: toy records, works and graphs."""

from pathlib import Path

import pytest

from biblio_connectivity import config as config_module
from biblio_connectivity.config import PeriodSpec, SynthConfig
from biblio_connectivity.ingest import extract_references
from biblio_connectivity.networks import CoupledGraph
from biblio_connectivity.records import AuthorName, PublicationRecord
from biblio_connectivity.resolution import resolve_references

# Distinct first letters keep every work in its own resolution block.
WORKS = {
    "a": "Adams P, 1990, Agrarian history of europe, V12, P1",
    "b": "Brown K, 1985, Banking in the renaissance",
    "c": "Clark L, 1979, Cities and markets, P44",
    "d": "Dorn M, 1992, Demography of the plague",
    "e": "Evans R, 1970, Empire and trade",
    "f": "Fox T, 1988, Feudal society",
    "g": "Grant S, 1995, Guilds and crafts",
}


def make_record(
    record_id: str,
    year: int = 2000,
    refs=(),
    authors=(("Smith", "John"),),
    specialism: str = "history",
    journal: str = "Journal of History",
    title: str = "",
    abstract=None,
) -> PublicationRecord:
    return PublicationRecord(
        record_id=record_id,
        journal=journal,
        specialism=specialism,
        year=year,
        title=title,
        abstract=abstract,
        authors=tuple(AuthorName(surname=s, given=g) for s, g in authors),
        raw_references=tuple(refs),
    )


@pytest.fixture(autouse=True)
def no_user_config(monkeypatch, tmp_path):
    """Keep a real ~/.config file from leaking into tests."""
    monkeypatch.setattr(config_module, "USER_CONFIG_PATH", tmp_path / "absent" / "config.json")


@pytest.fixture
def record_factory():
    return make_record


@pytest.fixture
def works():
    return WORKS


@pytest.fixture
def resolve():
    """Resolve the references of a list of records into a dictionary."""

    def _resolve(records):
        refs, stats = extract_references(records)
        return resolve_references(refs, discarded=stats.discarded)

    return _resolve


@pytest.fixture
def triangle():
    """Three nodes, edge weights 0.2, 0.5 and 0.9."""
    return CoupledGraph.from_edges(
        "article", "cosine-overlap", ["a", "b", "c"], [0, 1, 0], [1, 2, 2], [0.2, 0.5, 0.9]
    )


@pytest.fixture
def small_synth_config():
    return SynthConfig(
        seed=7,
        periods=[
            PeriodSpec(label="1990s", start=1990, end=1999),
            PeriodSpec(label="2000s", start=2000, end=2009),
        ],
        specialisms=["economics", "history"],
        articles_per_period=20,
        refs_per_article=[8, 10],
        shared_pool_size=[30, 30],
        shared_draw_fraction=[0.5, 0.3],
        coauthor_probability=0.3,
        author_pool_size=15,
        vocabulary_size=200,
        abstract_length=20,
    )


@pytest.fixture
def period_file(tmp_path) -> Path:
    path = tmp_path / "periods.json"
    path.write_text(
        '[{"label": "1990s", "start": 1990, "end": 1999},'
        ' {"label": "2000s", "start": 2000, "end": 2009}]',
        encoding="utf-8",
    )
    return path
