"""Connectivity decay of coupling networks under edge-weight thresholds."""

import logging
from pathlib import Path
from typing import List, Optional, Sequence

import networkx as nx
import numpy as np
import pandas as pd
from networkx.utils import UnionFind
from pydantic import BaseModel, Field, model_validator

from biblio_connectivity.errors import ConfigurationError, PercolationError
from biblio_connectivity.networks import WEIGHT_FORMAT, CoupledGraph, round_weights

logger = logging.getLogger(__name__)

PROFILE_COLUMNS = ["threshold", "components", "c", "giant_fraction", "nodes", "edges_retained"]
COSINE_GRID = [k / 100 for k in range(101)]


class ConnectivityProfile(BaseModel):
    """Component statistics of one graph along an ascending threshold grid.

    ``c_values[k]`` is the number of connected components left after removing
    every edge with weight strictly below ``thresholds[k]``, divided by the
    node count.
    """

    thresholds: List[float]
    component_counts: List[int]
    c_values: List[float]
    giant_fractions: List[float]
    edges_retained: List[int]
    node_count: int = Field(..., ge=1)
    network: str = Field("", description="Network kind the graph was built as")
    specialism: str = ""
    period: str = ""

    @model_validator(mode="after")
    def validate_curves(self) -> "ConnectivityProfile":
        n = len(self.thresholds)
        for name in ("component_counts", "c_values", "giant_fractions", "edges_retained"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} must have one entry per threshold")
        counts = np.asarray(self.component_counts)
        giants = np.asarray(self.giant_fractions)
        if np.any(np.diff(counts) < 0):
            raise ValueError("component counts must not decrease with the threshold")
        if np.any(np.diff(giants) > 0):
            raise ValueError("giant fractions must not increase with the threshold")
        if np.any(counts < 1) or np.any(counts > self.node_count):
            raise ValueError("component counts must lie in [1, node_count]")
        return self

    def at(self, threshold: float) -> dict:
        """The row of the grid point equal to ``threshold``."""
        try:
            k = self.thresholds.index(threshold)
        except ValueError as e:
            raise KeyError(threshold) from e
        return {
            "threshold": self.thresholds[k],
            "components": self.component_counts[k],
            "c": self.c_values[k],
            "giant_fraction": self.giant_fractions[k],
            "nodes": self.node_count,
            "edges_retained": self.edges_retained[k],
        }

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "threshold": self.thresholds,
                "components": self.component_counts,
                "c": self.c_values,
                "giant_fraction": self.giant_fractions,
                "nodes": [self.node_count] * len(self.thresholds),
                "edges_retained": self.edges_retained,
            },
            columns=PROFILE_COLUMNS,
        )


class ComponentSummary(BaseModel):
    """Exact component sizes of a graph at one threshold."""

    threshold: float
    component_sizes: List[int] = Field(..., description="Descending; the first is the giant")
    isolate_count: int = Field(..., ge=0)

    @property
    def component_count(self) -> int:
        return len(self.component_sizes)

    @property
    def giant_size(self) -> int:
        return self.component_sizes[0] if self.component_sizes else 0


class AggregateCurve(BaseModel):
    """Pointwise mean and median of c(t) across specialisms."""

    network: str
    period: str
    thresholds: List[float]
    mean_c: List[float]
    median_c: List[float]
    specialisms: List[str]
    excluded: List[str] = Field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "threshold": self.thresholds,
                "mean_c": self.mean_c,
                "median_c": self.median_c,
                "specialisms": [len(self.specialisms)] * len(self.thresholds),
            }
        )


def _check_grid(thresholds: Sequence[float]) -> List[float]:
    grid = [float(t) for t in thresholds]
    if not grid:
        raise ConfigurationError("threshold grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigurationError("thresholds must be strictly ascending")
    return grid


def connectivity_profile(
    graph: CoupledGraph, thresholds: Sequence[float], network: str = ""
) -> ConnectivityProfile:
    """
    Sweep a threshold grid in one pass.

    Edges are sorted by descending weight and merged into a union-find while
    the threshold falls from the top of the grid, so each grid point costs
    only the unions of the edges it adds back.

    Args:
        graph: Graph to sweep; every node is retained at every threshold.
        thresholds: Strictly ascending grid.
        network: Provenance label copied onto the profile.

    Returns:
        ConnectivityProfile aligned with ``thresholds``.

    Raises:
        ConfigurationError: if the grid is empty or not strictly ascending.
        PercolationError: if the graph has no nodes.
    """
    grid = _check_grid(thresholds)
    n = graph.node_count
    if n == 0:
        raise PercolationError("cannot sweep a graph without nodes")

    order = np.argsort(-graph.weights, kind="stable")
    weights = graph.weights[order].tolist()
    sources = graph.sources[order].tolist()
    targets = graph.targets[order].tolist()

    union = UnionFind(range(n))
    components, giant, added = n, 1, 0
    counts, giants, retained = [0] * len(grid), [0] * len(grid), [0] * len(grid)
    for k in range(len(grid) - 1, -1, -1):
        t = grid[k]
        while added < len(weights) and weights[added] >= t:
            root_i, root_j = union[sources[added]], union[targets[added]]
            if root_i != root_j:
                union.union(root_i, root_j)
                components -= 1
                giant = max(giant, union.weights[union[root_i]])
            added += 1
        counts[k], giants[k], retained[k] = components, giant, added

    return ConnectivityProfile(
        thresholds=grid,
        component_counts=counts,
        c_values=[c / n for c in counts],
        giant_fractions=[g / n for g in giants],
        edges_retained=retained,
        node_count=n,
        network=network,
        specialism=graph.specialism,
        period=graph.period.label if graph.period else "",
    )


def components_at(graph: CoupledGraph, threshold: float) -> ComponentSummary:
    """Component sizes keeping only edges of weight at least ``threshold``."""
    kept = nx.Graph()
    kept.add_nodes_from(range(graph.node_count))
    kept.add_edges_from((i, j) for i, j, w in graph.edges() if w >= threshold)
    sizes = sorted((len(c) for c in nx.connected_components(kept)), reverse=True)
    return ComponentSummary(
        threshold=threshold,
        component_sizes=sizes,
        isolate_count=sum(1 for s in sizes if s == 1),
    )


def _quantile_grid(weights: np.ndarray) -> List[float]:
    positive = weights[weights > 0]
    if positive.size == 0:
        return [0.0]
    quantiles = np.percentile(positive, np.arange(101))
    return np.unique(round_weights(quantiles)).tolist()


def default_threshold_grid(graph: CoupledGraph) -> List[float]:
    """
    Grid used when none is configured.

    Cosine graphs get 0.00, 0.01, ..., 1.00. BM25 weights are unbounded, so
    text graphs get the 0th..100th percentiles of their positive weights,
    deduplicated. An edgeless graph gets ``[0.0]``.
    """
    if graph.edge_count == 0:
        return [0.0]
    if graph.weight_kind == "cosine-overlap":
        return list(COSINE_GRID)
    return _quantile_grid(graph.weights)


def pooled_threshold_grid(graphs: Sequence[CoupledGraph]) -> List[float]:
    """
    One grid for several graphs of the same weight kind.

    Profiles computed on a shared grid can be averaged pointwise.
    """
    kinds = {g.weight_kind for g in graphs}
    if len(kinds) > 1:
        raise PercolationError(f"cannot pool grids across weight kinds {sorted(kinds)}")
    if not graphs or all(g.edge_count == 0 for g in graphs):
        return [0.0]
    if kinds == {"cosine-overlap"}:
        return list(COSINE_GRID)
    return _quantile_grid(np.concatenate([g.weights for g in graphs]))


def read_grid(path: Path) -> List[float]:
    """
    Read a threshold grid override: one number per line, blank lines ignored.

    Raises:
        ConfigurationError: if the file is unreadable or not strictly ascending.
    """
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
        return _check_grid([float(line) for line in lines if line.strip()])
    except (OSError, ValueError) as e:
        raise ConfigurationError(f"invalid threshold grid {path}: {e}") from e


def aggregate_profiles(
    profiles: Sequence[ConnectivityProfile], exclude: Sequence[str] = ()
) -> Optional[AggregateCurve]:
    """
    Pointwise mean and median of c(t) across specialisms.

    All profiles must share network kind, period and grid. Profiles whose
    specialism is in ``exclude`` are left out; None when nothing remains.
    """
    skip = set(exclude)
    kept = sorted((p for p in profiles if p.specialism not in skip), key=lambda p: p.specialism)
    if not kept:
        return None
    head = kept[0]
    for profile in kept[1:]:
        if profile.thresholds != head.thresholds:
            raise PercolationError(
                f"profiles of {head.network}/{head.period} do not share a threshold grid"
            )
        if (profile.network, profile.period) != (head.network, head.period):
            raise PercolationError("cannot aggregate profiles of different networks or periods")

    curves = np.array([p.c_values for p in kept], dtype=np.float64)
    return AggregateCurve(
        network=head.network,
        period=head.period,
        thresholds=head.thresholds,
        mean_c=round_weights(curves.mean(axis=0)).tolist(),
        median_c=round_weights(np.median(curves, axis=0)).tolist(),
        specialisms=[p.specialism for p in kept],
        excluded=sorted(set(exclude)),
    )


def write_profile(profile: ConnectivityProfile, path: Path) -> Path:
    """Export a profile as CSV with the columns in ``PROFILE_COLUMNS``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    profile.to_frame().to_csv(path, index=False, float_format=WEIGHT_FORMAT, lineterminator="\n")
    return path


def write_aggregate(curve: AggregateCurve, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    curve.to_frame().to_csv(path, index=False, float_format=WEIGHT_FORMAT, lineterminator="\n")
    return path
