"""Period set loader and corpus slicing."""

import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

from pydantic import ValidationError

from biblio_connectivity.config import PeriodSet, PeriodSpec, check_disjoint
from biblio_connectivity.errors import ConfigurationError
from biblio_connectivity.records import PublicationRecord

logger = logging.getLogger(__name__)


def _get_periods_file_path() -> Path:
    """Get the path to the bundled periods.json file."""
    module_dir = Path(__file__).parent
    return module_dir / "data" / "periods.json"


def _read_period_file(path: Path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise ConfigurationError(f"period file not found: {path}") from e
    except (json.JSONDecodeError, OSError) as e:
        raise ConfigurationError(f"cannot read period file {path}: {e}") from e


def _to_period_set(name: str, entries: object) -> PeriodSet:
    try:
        return PeriodSet(name=name, periods=entries)
    except ValidationError as e:
        raise ConfigurationError(f"invalid period set {name}: {e}") from e


def load_period_sets() -> Dict[str, PeriodSet]:
    """
    Load the bundled default period sets.

    Returns:
        Dictionary mapping set names ("citation", "text") to PeriodSet objects.
    """
    data = _read_period_file(_get_periods_file_path())
    sets = {name: _to_period_set(name, entries) for name, entries in data.items()}
    logger.debug(f"Loaded {len(sets)} default period sets")
    return sets


def load_period_set(name_or_path: str | Path) -> PeriodSet:
    """
    Resolve a period set by bundled name or from a JSON file.

    A file holds either a list of ``{label, start, end}`` entries or an object
    with a ``periods`` list.

    Args:
        name_or_path: "citation", "text", or a path to a period file.

    Returns:
        The validated PeriodSet.
    """
    defaults = load_period_sets()
    if isinstance(name_or_path, str) and name_or_path in defaults:
        return defaults[name_or_path]

    path = Path(name_or_path)
    data = _read_period_file(path)
    entries = data.get("periods") if isinstance(data, dict) else data
    period_set = _to_period_set(path.stem, entries)
    logger.info(f"Loaded {len(period_set.periods)} periods from {path}")
    return period_set


def slice_periods(
    records: Iterable[PublicationRecord], periods: Sequence[PeriodSpec]
) -> Dict[str, List[PublicationRecord]]:
    """
    Partition records by the period containing their year.

    Records outside every period are left out; ``unassigned_records`` returns
    them. Slices keep input order and every label is present, even when empty.

    Raises:
        ConfigurationError: if the periods overlap.
    """
    check_disjoint(list(periods))
    slices: Dict[str, List[PublicationRecord]] = {p.label: [] for p in periods}
    outside = 0
    for record in records:
        period = next((p for p in periods if p.contains(record.year)), None)
        if period is None:
            outside += 1
            continue
        slices[period.label].append(record)

    if outside:
        logger.warning(f"{outside} records fall outside every period")
    return slices


def unassigned_records(
    records: Iterable[PublicationRecord], periods: Sequence[PeriodSpec]
) -> List[PublicationRecord]:
    """Records whose year no period covers (the "outside" tally)."""
    return [r for r in records if not any(p.contains(r.year) for p in periods)]
