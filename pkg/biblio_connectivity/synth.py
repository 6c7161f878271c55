"""Synthetic corpora with controllable reference sharing across periods."""

import json
import logging
from pathlib import Path
from typing import List, Optional

import numpy as np
from pydantic import ValidationError

from biblio_connectivity.config import PeriodSpec, SynthConfig
from biblio_connectivity.errors import ConfigurationError
from biblio_connectivity.ingest import emit_records
from biblio_connectivity.records import AuthorName, PublicationRecord

logger = logging.getLogger(__name__)

# Ten fixed seeds for averaged trend checks.
FRAGMENTATION_SEEDS = (3, 17, 29, 41, 53, 67, 79, 97, 101, 113)

MAX_CITED_AGE = 30
_NAME_LENGTH = 9
_TITLE_WORDS = 4


def _get_fragmentation_file_path() -> Path:
    """Get the path to the bundled fragmentation generator config."""
    return Path(__file__).parent / "data" / "synth_fragmentation.json"


def load_synth_config(path: Path) -> SynthConfig:
    """Read a generator config from a JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            return SynthConfig.model_validate(json.load(f))
    except FileNotFoundError as e:
        raise ConfigurationError(f"generator config not found: {path}") from e
    except (json.JSONDecodeError, OSError) as e:
        raise ConfigurationError(f"cannot read generator config {path}: {e}") from e
    except ValidationError as e:
        raise ConfigurationError(f"invalid generator config {path}: {e}") from e


def fragmentation_config(seed: int = 0) -> SynthConfig:
    """
    The bundled fragmentation scenario with the given seed.

    The shared draw fraction falls from 0.8 to 0.2 over four periods while
    reference lists grow from 20 to 50, so article networks fragment over time.
    """
    config = load_synth_config(_get_fragmentation_file_path())
    return config.model_copy(update={"seed": seed})


def check_feasible(config: SynthConfig) -> None:
    """Raise ConfigurationError when an article would draw more shared works than exist."""
    for k, period in enumerate(config.periods):
        draws = _shared_draws(config, k)
        if draws > config.shared_pool_size[k]:
            raise ConfigurationError(
                f"period {period.label}: {draws} shared references per article "
                f"but the shared pool holds {config.shared_pool_size[k]}"
            )


def _shared_draws(config: SynthConfig, k: int) -> int:
    return int(round(config.shared_draw_fraction[k] * config.refs_per_article[k]))


class _Generator:
    """Draws every random quantity from one numpy Generator in a fixed order."""

    def __init__(self, config: SynthConfig):
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.vocabulary = self._vocabulary(config.vocabulary_size)
        ranks = np.arange(1, len(self.vocabulary) + 1, dtype=np.float64)
        self.word_weights = (1 / ranks) / (1 / ranks).sum()

    def letters(self, count: int, length: int) -> List[str]:
        codes = self.rng.integers(ord("a"), ord("z") + 1, size=(count, length), dtype=np.uint8)
        return [row.tobytes().decode("ascii") for row in codes]

    def _vocabulary(self, size: int) -> List[str]:
        words: dict[str, None] = {}
        while len(words) < size:
            for word in self.letters(size - len(words), 6):
                words.setdefault(word)
        return list(words)

    def words(self, count: int) -> str:
        picks = self.rng.choice(len(self.vocabulary), size=count, p=self.word_weights)
        return " ".join(self.vocabulary[k] for k in picks)

    def works(self, count: int, oldest: int, newest: int) -> List[str]:
        """Reference strings of ``count`` distinct works published in [oldest, newest]."""
        surnames = self.letters(count, _NAME_LENGTH)
        initials = self.letters(count, 1)
        titles = self.letters(count * _TITLE_WORDS, _NAME_LENGTH)
        years = self.rng.integers(oldest, newest + 1, size=count)
        return [
            f"{surnames[k].capitalize()} {initials[k].upper()}, {years[k]}, "
            f"{' '.join(titles[k * _TITLE_WORDS:(k + 1) * _TITLE_WORDS])}"
            for k in range(count)
        ]

    def authors(self, count: int) -> List[AuthorName]:
        surnames = self.letters(count, _NAME_LENGTH)
        given = self.letters(count, 6)
        return [
            AuthorName(surname=s.capitalize(), given=g.capitalize())
            for s, g in zip(surnames, given)
        ]

    def byline(self, pool: List[AuthorName]) -> List[AuthorName]:
        picked = [int(self.rng.integers(len(pool)))]
        while len(picked) < len(pool) and self.rng.random() < self.config.coauthor_probability:
            candidate = int(self.rng.integers(len(pool)))
            if candidate not in picked:
                picked.append(candidate)
        return [pool[k] for k in picked]

    def period_articles(
        self, specialism: str, k: int, period: PeriodSpec, pool: List[AuthorName]
    ) -> List[PublicationRecord]:
        config = self.config
        oldest = min(period.start, period.end - MAX_CITED_AGE)
        shared = self.works(config.shared_pool_size[k], oldest, period.start)
        n_shared = _shared_draws(config, k)
        n_private = config.refs_per_article[k] - n_shared

        articles = []
        for i in range(config.articles_per_period):
            year = int(self.rng.integers(period.start, period.end + 1))
            picks = self.rng.choice(len(shared), size=n_shared, replace=False)
            refs = [shared[p] for p in sorted(picks.tolist())]
            refs += self.works(n_private, year - MAX_CITED_AGE, year)
            articles.append(
                PublicationRecord(
                    record_id=f"{specialism}-{period.label}-{i:05d}",
                    journal=f"Journal of {specialism.capitalize()}",
                    specialism=specialism,
                    year=year,
                    title=self.words(_TITLE_WORDS * 2),
                    abstract=self.words(config.abstract_length),
                    authors=tuple(self.byline(pool)),
                    raw_references=tuple(refs),
                )
            )
        return articles


def generate(config: SynthConfig) -> List[PublicationRecord]:
    """
    Generate a synthetic corpus.

    In period ``k`` every article draws ``shared_draw_fraction[k]`` of its
    ``refs_per_article[k]`` references without replacement from the period's
    shared pool and the rest from works no other article cites. Authors,
    reference authors and titles are random letter strings, so distinct works
    never look alike to the resolver. Abstracts follow a Zipf-like vocabulary.

    Args:
        config: Generator parameters; the seed fixes every draw.

    Returns:
        Records ordered by specialism, then period, then index.

    Raises:
        ConfigurationError: if an article would draw more shared references
            than its period's pool holds.
    """
    check_feasible(config)
    generator = _Generator(config)
    records: List[PublicationRecord] = []
    for specialism in config.specialisms:
        pool = generator.authors(config.author_pool_size)
        for k, period in enumerate(config.periods):
            records.extend(generator.period_articles(specialism, k, period, pool))
    logger.info(f"Generated {len(records)} synthetic records (seed {config.seed})")
    return records


def write_jsonl(config: SynthConfig, path: Optional[Path] = None) -> bytes:
    """Generate a corpus in the ingest JSONL format, writing it to ``path`` if given."""
    data = emit_records(generate(config), "jsonl")
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
        logger.info(f"Wrote synthetic corpus to {path}")
    return data
