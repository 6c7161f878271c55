"""Pipeline controller: runs the stages and writes the report bundle."""

import hashlib
import json
import logging
import re
import shutil
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence

from biblio_connectivity import __version__
from biblio_connectivity.config import ConfigManager, NetworkKind, PeriodSpec, PipelineConfig
from biblio_connectivity.errors import (
    IndicatorError,
    IngestError,
    NetworkError,
    PercolationError,
    PipelineError,
    ResolutionError,
)
from biblio_connectivity.indicators import (
    IndicatorTable,
    dataset_summary,
    descriptive_stats,
    write_dataset_summary,
)
from biblio_connectivity.ingest import (
    IngestReport,
    InputReport,
    emit_records,
    extract_references,
    parse_records,
)
from biblio_connectivity.networks import (
    WEIGHT_FORMAT,
    CoupledGraph,
    build_article_coupling,
    build_author_coupling,
    read_graph,
    write_graph,
)
from biblio_connectivity.percolation import (
    aggregate_profiles,
    connectivity_profile,
    pooled_threshold_grid,
    read_grid,
    write_aggregate,
    write_profile,
)
from biblio_connectivity.periods import load_period_set, slice_periods, unassigned_records
from biblio_connectivity.records import PublicationRecord
from biblio_connectivity.resolution import (
    AuthorDirectory,
    ReferenceDictionary,
    resolve_authors,
    resolve_references,
)
from biblio_connectivity.text import IdfTable, build_idf, build_text_coupling, profile_records

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
SERIES = "series.json"
RECORDS_FILE = Path("ingest") / "records.jsonl"
INGEST_REPORT = Path("ingest") / "report.json"
REFERENCES_FILE = Path("resolution") / "references.json"
AUTHORS_FILE = Path("resolution") / "authors.json"
NETWORK_INDEX = Path("networks") / "index.json"
PERCOLATION_INDEX = Path("percolation") / "index.json"
INDICATOR_INDEX = Path("indicators") / "index.json"


def path_label(value: str) -> str:
    """File-system safe form of a specialism or period label."""
    return re.sub(r"[^\w.\-]+", "_", value).strip("_") or "_"


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_json(path: Path, payload: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")
    return path


def read_json(path: Path) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


class PipelineController:
    """Coordinates the pipeline stages over one report bundle.

    Every stage reads what earlier stages persisted in the bundle, so a stage
    can be rerun on its own. Stage output is written to a hidden ``.partial``
    directory and moved into place only when the stage succeeds.
    """

    def __init__(
        self,
        config_path: Optional[Path] = None,
        overrides: Optional[Dict[str, Any]] = None,
        config: Optional[PipelineConfig] = None,
    ):
        """Initialize the controller from a config file plus overrides, or a ready config."""
        self.config_manager = ConfigManager(config_path)
        self.config: PipelineConfig = config or self.config_manager.load(overrides)

    # Stage plumbing

    @contextmanager
    def _stage(self, name: str, error: type[PipelineError], out: Path) -> Iterator[Path]:
        """Yield a scratch directory that replaces ``out/name`` on success."""
        partial = out / f".{name}.partial"
        final = out / name
        shutil.rmtree(partial, ignore_errors=True)
        partial.mkdir(parents=True)
        logger.info(f"Stage {name} started")
        try:
            yield partial
        except PipelineError as e:
            shutil.rmtree(partial, ignore_errors=True)
            logger.error(f"stage failed: {e.stage}: {e.message}")
            raise
        except (OSError, ValueError, KeyError) as e:
            shutil.rmtree(partial, ignore_errors=True)
            wrapped = error(f"{type(e).__name__}: {e}")
            logger.error(f"stage failed: {wrapped.stage}: {wrapped.message}")
            raise wrapped from e
        shutil.rmtree(final, ignore_errors=True)
        partial.rename(final)
        logger.info(f"Stage {name} finished")

    def _records(self, bundle: Path) -> List[PublicationRecord]:
        data = (bundle / RECORDS_FILE).read_bytes()
        result = parse_records(data, "jsonl", self.config.year_range)
        if result.errors:
            raise ValueError(f"{bundle / RECORDS_FILE} has {len(result.errors)} malformed rows")
        return result.records

    def _periods(self, name_or_path: str) -> List[PeriodSpec]:
        return load_period_set(name_or_path).periods

    def _network_kinds(self) -> List[NetworkKind]:
        return [NetworkKind(kind) for kind in self.config.networks]

    # Stages

    def ingest(self, inputs: Optional[Sequence[Path]] = None, out: Optional[Path] = None) -> Path:
        """
        Parse the input record files into ``ingest/records.jsonl``.

        Raises:
            IngestError: if an input cannot be read, ids repeat across inputs,
                or no valid record remains.
        """
        inputs = list(inputs or self.config.inputs)
        out = out or self.config.out_dir
        if not inputs:
            raise IngestError("no input files given")

        with self._stage("ingest", IngestError, out) as stage:
            report = IngestReport()
            records: List[PublicationRecord] = []
            origin: Dict[str, str] = {}
            for path in inputs:
                logger.info(f"Reading {path}")
                data = Path(path).read_bytes()
                result = parse_records(data, self.config.input_format, self.config.year_range)
                for record in result.records:
                    if record.record_id in origin:
                        raise IngestError(
                            f"record id {record.record_id!r} appears in "
                            f"{origin[record.record_id]} and {Path(path).name}"
                        )
                    origin[record.record_id] = Path(path).name
                records.extend(result.records)
                report.inputs.append(
                    InputReport(
                        name=Path(path).name,
                        sha256=hashlib.sha256(data).hexdigest(),
                        rows_read=result.rows_read,
                        records=len(result.records),
                        errors=result.errors,
                    )
                )
            if not records:
                raise IngestError("input holds no valid publication records")

            _, report.references = extract_references(records, self.config.year_range)
            report.records = len(records)
            (stage / RECORDS_FILE.name).write_bytes(emit_records(records, "jsonl"))
            write_json(stage / INGEST_REPORT.name, report.model_dump(mode="json"))
        return out

    def resolve(self, bundle: Optional[Path] = None, out: Optional[Path] = None) -> Path:
        """Resolve references and authors into the persisted dictionaries."""
        bundle = bundle or self.config.out_dir
        out = out or bundle
        with self._stage("resolution", ResolutionError, out) as stage:
            records = self._records(bundle)
            references, stats = extract_references(records, self.config.year_range)
            dictionary = resolve_references(
                references, self.config.match, self.config.threads, stats.discarded
            )
            authors = resolve_authors(
                ((name, r.specialism) for r in records for name in r.authors),
                self.config.match,
                self.config.author_scope,
                self.config.threads,
            )
            dictionary.save(stage / REFERENCES_FILE.name)
            authors.save(stage / AUTHORS_FILE.name)
            write_json(
                stage / "report.json",
                {
                    "references": dictionary.report.model_dump(mode="json"),
                    "authors": {
                        "scope": authors.scope_mode,
                        "names": len(authors.identities),
                        "identities": len({i.author_id for i in authors.identities.values()}),
                    },
                },
            )
        return out

    def _build_graph(
        self,
        kind: NetworkKind,
        specialism: str,
        period: PeriodSpec,
        records: List[PublicationRecord],
        dictionary: ReferenceDictionary,
        authors: AuthorDirectory,
        idf: Optional[IdfTable],
    ) -> CoupledGraph:
        year_range = self.config.year_range
        if kind == NetworkKind.ARTICLE_COSINE:
            return build_article_coupling(records, dictionary, specialism, period, year_range)
        if kind == NetworkKind.AUTHOR_COSINE:
            return build_author_coupling(
                records, dictionary, authors, specialism, period, year_range
            )
        profiles, excluded = profile_records(records, self.config.text_journals or None)
        isolates = excluded if self.config.keep_abstractless_isolates else ()
        return build_text_coupling(
            profiles, idf, self.config.bm25, specialism, period, isolates, excluded
        )

    def networks(self, bundle: Optional[Path] = None, out: Optional[Path] = None) -> Path:
        """Build every configured network for every (specialism, period) slice."""
        bundle = bundle or self.config.out_dir
        out = out or bundle
        with self._stage("networks", NetworkError, out) as stage:
            records = self._records(bundle)
            dictionary = ReferenceDictionary.load(bundle / REFERENCES_FILE)
            authors = AuthorDirectory.load(bundle / AUTHORS_FILE)
            specialisms = sorted({r.specialism for r in records})
            kinds = self._network_kinds()

            period_sets = {"citation": self._periods(self.config.periods)}
            if NetworkKind.TEXT_BM25 in kinds:
                period_sets["text"] = self._periods(self.config.text_periods)
            unassigned = {
                name: len(unassigned_records(records, periods))
                for name, periods in period_sets.items()
            }

            idf = None
            if NetworkKind.TEXT_BM25 in kinds:
                profiles, _ = profile_records(records, self.config.text_journals or None)
                if profiles:
                    idf = build_idf(profiles)
                else:
                    logger.warning("No record has a usable abstract, text networks skipped")
                    kinds = [k for k in kinds if k != NetworkKind.TEXT_BM25]

            tasks = []
            for kind in kinds:
                periods = period_sets["text" if kind == NetworkKind.TEXT_BM25 else "citation"]
                for specialism in specialisms:
                    in_specialism = [r for r in records if r.specialism == specialism]
                    slices = slice_periods(in_specialism, periods)
                    for period in periods:
                        tasks.append((kind, specialism, period, slices[period.label]))

            logger.info(f"Building {len(tasks)} networks with {self.config.threads} threads")
            with ThreadPoolExecutor(max_workers=self.config.threads) as pool:
                graphs = pool.map(
                    lambda task: self._build_graph(*task, dictionary, authors, idf), tasks
                )
                entries = []
                for (kind, specialism, period, _), graph in zip(tasks, graphs):
                    rel = Path(kind.value) / path_label(specialism) / path_label(period.label)
                    files = write_graph(graph, stage / rel)
                    entries.append(
                        {
                            "type": "network",
                            "network": kind.value,
                            "specialism": specialism,
                            "period": period.label,
                            "stem": (Path("networks") / rel).as_posix(),
                            "files": [
                                f"networks/{f.relative_to(stage).as_posix()}" for f in files
                            ],
                            "nodes": graph.node_count,
                            "edges": graph.edge_count,
                        }
                    )
            write_json(stage / NETWORK_INDEX.name, {"series": entries, "unassigned": unassigned})
        return out

    def percolate(self, bundle: Optional[Path] = None, out: Optional[Path] = None) -> Path:
        """Sweep every persisted network and aggregate curves across specialisms."""
        bundle = bundle or self.config.out_dir
        out = out or bundle
        with self._stage("percolation", PercolationError, out) as stage:
            index = read_json(bundle / NETWORK_INDEX)["series"]
            kinds = [k.value for k in self._network_kinds()]
            override = read_grid(self.config.grid_file) if self.config.grid_file else None
            entries = []
            for kind in kinds:
                items = [e for e in index if e["network"] == kind]
                if not items:
                    continue
                graphs = [read_graph(bundle / e["stem"]) for e in items]
                grid = override or pooled_threshold_grid(graphs)
                grid_rel = Path(kind) / "grid.txt"
                (stage / kind).mkdir(parents=True, exist_ok=True)
                (stage / grid_rel).write_text(
                    "".join(f"{WEIGHT_FORMAT % t}\n" for t in grid), encoding="utf-8"
                )

                swept = [(e, g) for e, g in zip(items, graphs) if g.node_count > 0]
                for e in items:
                    if e["nodes"] == 0:
                        logger.warning(f"{kind}/{e['specialism']}/{e['period']} is empty, skipped")
                with ThreadPoolExecutor(max_workers=self.config.threads) as pool:
                    profiles = list(
                        pool.map(lambda eg: connectivity_profile(eg[1], grid, kind), swept)
                    )

                by_period: Dict[str, list] = {}
                for (e, _), profile in zip(swept, profiles):
                    rel = (
                        Path(kind)
                        / path_label(e["specialism"])
                        / f"{path_label(e['period'])}.csv"
                    )
                    write_profile(profile, stage / rel)
                    by_period.setdefault(e["period"], []).append(profile)
                    entries.append(
                        {
                            "type": "profile",
                            "network": kind,
                            "specialism": e["specialism"],
                            "period": e["period"],
                            "grid": f"percolation/{grid_rel.as_posix()}",
                            "file": f"percolation/{rel.as_posix()}",
                        }
                    )

                variants = [("all", ())]
                if self.config.aggregate_exclude:
                    variants.append(("excluding", tuple(self.config.aggregate_exclude)))
                for period, group in by_period.items():
                    for variant, exclude in variants:
                        curve = aggregate_profiles(group, exclude)
                        if curve is None:
                            continue
                        rel = Path(kind) / "aggregate" / f"{path_label(period)}.{variant}.csv"
                        write_aggregate(curve, stage / rel)
                        entries.append(
                            {
                                "type": "aggregate",
                                "network": kind,
                                "specialism": "*",
                                "period": period,
                                "grid": f"percolation/{grid_rel.as_posix()}",
                                "file": f"percolation/{rel.as_posix()}",
                                "specialisms": curve.specialisms,
                                "excluded": curve.excluded,
                            }
                        )
            write_json(stage / PERCOLATION_INDEX.name, {"series": entries})
        return out

    def indicators(self, bundle: Optional[Path] = None, out: Optional[Path] = None) -> Path:
        """Indicator table per (specialism, citation period) and the dataset summary."""
        bundle = bundle or self.config.out_dir
        out = out or bundle
        with self._stage("indicators", IndicatorError, out) as stage:
            records = self._records(bundle)
            dictionary = ReferenceDictionary.load(bundle / REFERENCES_FILE)
            authors = AuthorDirectory.load(bundle / AUTHORS_FILE)
            periods = self._periods(self.config.periods)
            specialisms = sorted({r.specialism for r in records})

            slices = []
            for specialism in specialisms:
                sliced = slice_periods([r for r in records if r.specialism == specialism], periods)
                slices.extend((specialism, p.label, sliced[p.label]) for p in periods)

            def row(item):
                specialism, label, members = item
                return descriptive_stats(
                    members,
                    dictionary,
                    specialism,
                    label,
                    authors,
                    self.config.price_window,
                    self.config.year_range,
                )

            with ThreadPoolExecutor(max_workers=self.config.threads) as pool:
                table = IndicatorTable(rows=list(pool.map(row, slices)))
            table.write_csv(stage / "indicators.csv")
            write_dataset_summary(dataset_summary(records, authors), stage / "dataset_summary.csv")
            write_json(
                stage / INDICATOR_INDEX.name,
                {
                    "series": [
                        {
                            "type": "indicators",
                            "file": "indicators/indicators.csv",
                            "periods": [p.label for p in periods],
                            "specialisms": specialisms,
                        },
                        {"type": "dataset-summary", "file": "indicators/dataset_summary.csv"},
                    ]
                },
            )
        return out

    # Bundle

    def finalize(self, out: Path, source: Optional[Path] = None) -> dict:
        """Write ``series.json`` and ``manifest.json`` for the files present in ``out``."""
        series = []
        for index in (NETWORK_INDEX, PERCOLATION_INDEX, INDICATOR_INDEX):
            if (out / index).exists():
                series.extend(read_json(out / index)["series"])
        write_json(out / SERIES, {"series": series})

        inputs = []
        for candidate in (out, source):
            if candidate is not None and (candidate / INGEST_REPORT).exists():
                report = read_json(candidate / INGEST_REPORT)
                inputs = [{"name": i["name"], "sha256": i["sha256"]} for i in report["inputs"]]
                break

        files = {
            path.relative_to(out).as_posix(): sha256_file(path)
            for path in sorted(out.rglob("*"))
            if path.is_file()
            and path.name != MANIFEST
            and not any(part.startswith(".") for part in path.relative_to(out).parts)
        }
        manifest = {
            "tool": "biblio-connectivity",
            "version": __version__,
            "config_hash": self.config.config_hash(),
            "inputs": inputs,
            "files": files,
        }
        write_json(out / MANIFEST, manifest)
        logger.info(f"Bundle {out}: {len(files)} files")
        return manifest

    def run(self) -> Path:
        """
        Run every stage into a fresh bundle at ``out_dir``.

        The bundle is assembled next to ``out_dir`` and moved into place only
        after the last stage, so a failed run leaves no partial output.
        """
        out = self.config.out_dir
        partial = out.with_name(out.name + ".partial")
        shutil.rmtree(partial, ignore_errors=True)
        partial.mkdir(parents=True)
        try:
            self.ingest(out=partial)
            self.resolve(partial)
            self.networks(partial)
            self.percolate(partial)
            self.indicators(partial)
            self.finalize(partial)
        except BaseException:
            shutil.rmtree(partial, ignore_errors=True)
            raise
        if out.exists():
            logger.info(f"Replacing existing bundle {out}")
            shutil.rmtree(out)
        partial.rename(out)
        logger.info(f"Pipeline finished: {out}")
        return out
