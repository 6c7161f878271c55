"""Reference-overlap coupling networks of articles and authors."""

import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Literal, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import sparse

from biblio_connectivity.config import PeriodSpec
from biblio_connectivity.errors import NetworkError
from biblio_connectivity.records import DEFAULT_YEAR_RANGE, PublicationRecord
from biblio_connectivity.resolution import AuthorDirectory, ReferenceDictionary, cited_clusters

logger = logging.getLogger(__name__)

NodeKind = Literal["article", "author"]
WeightKind = Literal["cosine-overlap", "bm25-text"]

WEIGHT_FORMAT = "%.9g"


def round_weights(weights: Iterable[float]) -> np.ndarray:
    """Round to the 9 significant digits used when graphs are written out."""
    return np.array([float(WEIGHT_FORMAT % w) for w in weights], dtype=np.float64)


@dataclass(frozen=True, eq=False)
class CoupledGraph:
    """Weighted undirected graph over articles or authors.

    Edges are stored once per unordered pair as ``sources[k] < targets[k]``,
    sorted by (source, target), with strictly positive weights.
    """

    node_kind: NodeKind
    weight_kind: WeightKind
    nodes: tuple[str, ...]
    sources: np.ndarray
    targets: np.ndarray
    weights: np.ndarray
    specialism: str = ""
    period: Optional[PeriodSpec] = None
    excluded: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not len(self.sources) == len(self.targets) == len(self.weights):
            raise NetworkError("edge arrays differ in length")
        if len(self.sources):
            if np.any(self.sources >= self.targets):
                raise NetworkError("edges must satisfy source < target (no self-loops)")
            if np.any(self.weights <= 0):
                raise NetworkError("edge weights must be positive")
            if np.any(self.targets >= len(self.nodes)):
                raise NetworkError("edge refers to an unknown node")
            order = np.lexsort((self.targets, self.sources))
            if np.any(order != np.arange(len(order))):
                raise NetworkError("edges must be sorted by (source, target)")
            pairs = self.sources.astype(np.int64) * len(self.nodes) + self.targets
            if len(np.unique(pairs)) != len(pairs):
                raise NetworkError("duplicate edge")
        if self.weight_kind == "cosine-overlap" and np.any(self.weights > 1):
            raise NetworkError("cosine weights must not exceed 1")

    @classmethod
    def from_edges(
        cls,
        node_kind: NodeKind,
        weight_kind: WeightKind,
        nodes: Sequence[str],
        sources: Iterable[int],
        targets: Iterable[int],
        weights: Iterable[float],
        **kwargs,
    ) -> "CoupledGraph":
        """Build a graph from unordered edge arrays, rounding weights."""
        src = np.asarray(list(sources), dtype=np.int64)
        dst = np.asarray(list(targets), dtype=np.int64)
        w = round_weights(weights)
        low, high = np.minimum(src, dst), np.maximum(src, dst)
        keep = w > 0
        low, high, w = low[keep], high[keep], w[keep]
        order = np.lexsort((high, low))
        return cls(
            node_kind, weight_kind, tuple(nodes), low[order], high[order], w[order], **kwargs
        )

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.weights)

    def edges(self) -> Iterator[tuple[int, int, float]]:
        for i, j, w in zip(self.sources.tolist(), self.targets.tolist(), self.weights.tolist()):
            yield i, j, w

    def summary(self) -> dict:
        """Node/edge counts and weight range."""
        if self.edge_count:
            w_min, w_max = float(self.weights.min()), float(self.weights.max())
            w_mean = float(WEIGHT_FORMAT % self.weights.mean())
        else:
            w_min = w_max = w_mean = None
        return {
            "node_kind": self.node_kind,
            "weight_kind": self.weight_kind,
            "specialism": self.specialism,
            "period": self.period.model_dump() if self.period else None,
            "nodes": self.node_count,
            "edges": self.edge_count,
            "excluded": len(self.excluded),
            "weight_min": w_min,
            "weight_max": w_max,
            "weight_mean": w_mean,
        }


def cosine_coupling_weight(refs_i: set[str], refs_j: set[str]) -> float:
    """
    Cosine similarity of two reference sets.

    Args:
        refs_i: Cited-work ids of the first node.
        refs_j: Cited-work ids of the second node.

    Returns:
        |refs_i & refs_j| / (sqrt|refs_i| * sqrt|refs_j|); 0.0 if either set is empty.
    """
    if not refs_i or not refs_j:
        return 0.0
    shared = len(refs_i & refs_j)
    return shared / (math.sqrt(len(refs_i)) * math.sqrt(len(refs_j)))


def _cosine_graph(
    node_kind: NodeKind,
    nodes: List[str],
    reference_sets: List[set[str]],
    **kwargs,
) -> CoupledGraph:
    """All-pairs cosine overlap via a sparse node x cited-work incidence matrix."""
    vocabulary = {cid: k for k, cid in enumerate(sorted(set().union(*reference_sets)))}
    rows = [i for i, refs in enumerate(reference_sets) for _ in refs]
    cols = [vocabulary[cid] for refs in reference_sets for cid in refs]
    incidence = sparse.csr_matrix(
        (np.ones(len(rows), dtype=np.int64), (rows, cols)),
        shape=(len(nodes), len(vocabulary)),
    )
    overlap = sparse.triu(incidence @ incidence.T, k=1).tocoo()
    sizes = np.array([len(refs) for refs in reference_sets], dtype=np.float64)
    weights = overlap.data / (np.sqrt(sizes[overlap.row]) * np.sqrt(sizes[overlap.col]))
    graph = CoupledGraph.from_edges(
        node_kind, "cosine-overlap", nodes, overlap.row, overlap.col, weights, **kwargs
    )
    logger.debug(f"{node_kind} coupling: {graph.node_count} nodes, {graph.edge_count} edges")
    return graph


def _record_clusters(
    records: Sequence[PublicationRecord],
    resolution: ReferenceDictionary,
    year_range: tuple[int, int],
) -> Dict[str, set[str]]:
    try:
        return {
            r.record_id: {c.cluster_id for c in cited_clusters(r, resolution, year_range)}
            for r in records
        }
    except KeyError as e:
        raise NetworkError(f"reference {e} is missing from the reference dictionary") from e


def build_article_coupling(
    records: Sequence[PublicationRecord],
    resolution: ReferenceDictionary,
    specialism: str = "",
    period: Optional[PeriodSpec] = None,
    year_range: tuple[int, int] = DEFAULT_YEAR_RANGE,
) -> CoupledGraph:
    """
    Article bibliographic coupling network of one slice.

    One node per article (isolates included), ordered by record id; edges
    weighted by the cosine overlap of the articles' cited works.
    """
    clusters = _record_clusters(records, resolution, year_range)
    nodes = sorted(clusters)
    return _cosine_graph(
        "article", nodes, [clusters[n] for n in nodes], specialism=specialism, period=period
    )


def build_author_coupling(
    records: Sequence[PublicationRecord],
    resolution: ReferenceDictionary,
    authors: AuthorDirectory,
    specialism: str = "",
    period: Optional[PeriodSpec] = None,
    year_range: tuple[int, int] = DEFAULT_YEAR_RANGE,
) -> CoupledGraph:
    """
    Author bibliographic coupling network of one slice.

    Each author's reference set is the union of the cited works of all their
    articles in the slice; co-authors of a single article therefore share an
    edge of weight one.
    """
    clusters = _record_clusters(records, resolution, year_range)
    by_author: Dict[str, set[str]] = defaultdict(set)
    try:
        for record in records:
            for name in record.authors:
                identity = authors.identity_of(name, record.specialism)
                by_author[identity.author_id] |= clusters[record.record_id]
    except KeyError as e:
        raise NetworkError(f"author {e} is missing from the author directory") from e
    nodes = sorted(by_author)
    return _cosine_graph(
        "author", nodes, [by_author[n] for n in nodes], specialism=specialism, period=period
    )


def write_graph(graph: CoupledGraph, stem: Path) -> list[Path]:
    """
    Export a graph as ``<stem>.edges.tsv``, ``<stem>.nodes.txt`` and ``<stem>.summary.json``.

    Edge rows are ``source<TAB>target<TAB>weight`` with node ids, sorted by
    node index.
    """
    stem.parent.mkdir(parents=True, exist_ok=True)
    nodes = np.asarray(graph.nodes, dtype=object)
    edges = pd.DataFrame(
        {
            "source": nodes[graph.sources] if graph.edge_count else [],
            "target": nodes[graph.targets] if graph.edge_count else [],
            "weight": graph.weights,
        }
    )
    edge_path = stem.with_name(stem.name + ".edges.tsv")
    node_path = stem.with_name(stem.name + ".nodes.txt")
    summary_path = stem.with_name(stem.name + ".summary.json")
    edges.to_csv(
        edge_path,
        sep="\t",
        header=False,
        index=False,
        float_format=WEIGHT_FORMAT,
        lineterminator="\n",
    )
    with open(node_path, "w", encoding="utf-8", newline="\n") as f:
        f.writelines(f"{node}\n" for node in graph.nodes)
    with open(summary_path, "w", encoding="utf-8") as f:
        json.dump(graph.summary(), f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")
    return [edge_path, node_path, summary_path]


def read_graph(stem: Path) -> CoupledGraph:
    """Read a graph written by ``write_graph``."""
    summary_path = stem.with_name(stem.name + ".summary.json")
    try:
        with open(summary_path, "r", encoding="utf-8") as f:
            summary = json.load(f)
        with open(stem.with_name(stem.name + ".nodes.txt"), "r", encoding="utf-8") as f:
            nodes = [line.rstrip("\n") for line in f]
        edge_path = stem.with_name(stem.name + ".edges.tsv")
        if not edge_path.read_text(encoding="utf-8").strip():
            edges = pd.DataFrame({"source": [], "target": [], "weight": []})
        else:
            edges = pd.read_csv(
                edge_path,
                sep="\t",
                header=None,
                names=["source", "target", "weight"],
                dtype={"source": str, "target": str, "weight": np.float64},
                keep_default_na=False,
            )
    except (OSError, ValueError) as e:
        raise NetworkError(f"cannot read graph {stem}: {e}") from e

    index = {node: k for k, node in enumerate(nodes)}
    period = summary.get("period")
    return CoupledGraph.from_edges(
        summary["node_kind"],
        summary["weight_kind"],
        nodes,
        edges["source"].map(index).to_numpy(),
        edges["target"].map(index).to_numpy(),
        edges["weight"].to_numpy(),
        specialism=summary.get("specialism", ""),
        period=PeriodSpec(**period) if period else None,
    )
