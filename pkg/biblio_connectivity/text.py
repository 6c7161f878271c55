"""Tokenization, global IDF and BM25 textual coupling networks."""

import logging
import math
import re
from collections import Counter
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy import sparse

from biblio_connectivity.config import Bm25Config, PeriodSpec
from biblio_connectivity.errors import NetworkError
from biblio_connectivity.networks import CoupledGraph
from biblio_connectivity.records import PublicationRecord

logger = logging.getLogger(__name__)

# Runs of letters and digits; anything else separates tokens.
_TOKEN = re.compile(r"[^\W_]+")
_ROW_CHUNK = 256


class TokenProfile(BaseModel):
    """Bag of tokens of one document."""

    doc_id: str
    token_counts: Dict[str, int] = Field(default_factory=dict)
    length: int = Field(0, ge=0, description="Total number of tokens, |D|")

    @model_validator(mode="after")
    def validate_counts(self) -> "TokenProfile":
        if sum(self.token_counts.values()) != self.length:
            raise ValueError("length must equal the sum of token counts")
        if any(n < 1 for n in self.token_counts.values()):
            raise ValueError("token counts must be positive")
        if any(len(t) < 2 or t != t.lower() for t in self.token_counts):
            raise ValueError("tokens must be lower-case and longer than one character")
        return self

    @property
    def is_empty(self) -> bool:
        return self.length == 0


class IdfTable(BaseModel):
    """Corpus-wide document frequencies, positive IDF values and mean length."""

    doc_count: int = Field(..., ge=1)
    doc_frequency: Dict[str, int]
    idf: Dict[str, float]
    mean_length: float = Field(..., gt=0)


def tokenize(title: str, abstract: str, doc_id: str = "") -> TokenProfile:
    """
    Tokenize the concatenation of title and abstract.

    Text is lower-cased and split on every non-alphanumeric character;
    single-character tokens are dropped.

    Args:
        title: Article title.
        abstract: Article abstract.
        doc_id: Identifier carried on the profile.

    Returns:
        TokenProfile, empty when nothing survives.
    """
    text = f"{title or ''} {abstract or ''}".lower()
    tokens = [t for t in _TOKEN.findall(text) if len(t) > 1]
    counts = Counter(tokens)
    return TokenProfile(
        doc_id=doc_id, token_counts=dict(sorted(counts.items())), length=len(tokens)
    )


def profile_records(
    records: Iterable[PublicationRecord], text_journals: Optional[Sequence[str]] = None
) -> tuple[List[TokenProfile], List[str]]:
    """
    Token profiles of the records eligible for text networks.

    Records outside ``text_journals`` (when given) are skipped silently;
    records without an abstract or with an empty profile are returned in the
    excluded list.
    """
    journals = set(text_journals or ())
    profiles: List[TokenProfile] = []
    excluded: List[str] = []
    for record in records:
        if journals and record.journal not in journals:
            continue
        if not record.has_abstract:
            excluded.append(record.record_id)
            continue
        profile = tokenize(record.title, record.abstract or "", record.record_id)
        if profile.is_empty:
            logger.warning(f"Record {record.record_id} has no usable tokens, excluded")
            excluded.append(record.record_id)
            continue
        profiles.append(profile)
    if excluded:
        logger.info(f"{len(excluded)} records excluded from text networks")
    return profiles, excluded


def build_idf(profiles: Sequence[TokenProfile]) -> IdfTable:
    """
    Build the IDF table shared by every text network.

    ``idf[z] = log((N - p_z + 0.5) / (p_z + 0.5))`` with the natural log;
    tokens whose value is not positive are left out.
    """
    profiles = [p for p in profiles if not p.is_empty]
    if not profiles:
        raise NetworkError("cannot build IDF without at least one non-empty profile")

    n = len(profiles)
    frequency: Counter[str] = Counter()
    for profile in profiles:
        frequency.update(profile.token_counts.keys())

    idf = {}
    for token, p_z in sorted(frequency.items()):
        value = math.log((n - p_z + 0.5) / (p_z + 0.5))
        if value > 0:
            idf[token] = value
    mean_length = sum(p.length for p in profiles) / n
    logger.info(f"IDF over {n} documents: {len(idf)}/{len(frequency)} tokens kept")
    return IdfTable(
        doc_count=n, doc_frequency=dict(sorted(frequency.items())), idf=idf, mean_length=mean_length
    )


def bm25_score(
    i: TokenProfile, j: TokenProfile, idf: IdfTable, k1: float = 2.0, b: float = 0.75
) -> float:
    """Asymmetric BM25 score of ``j`` for the unique tokens of ``i``."""
    norm = k1 * (1 - b + b * j.length / idf.mean_length)
    score = 0.0
    for token in i.token_counts:
        weight = idf.idf.get(token)
        n_z = j.token_counts.get(token, 0)
        if weight is None or n_z == 0:
            continue
        score += weight * n_z * (k1 + 1) / (n_z + norm)
    return score


def bm25_pair(
    i: TokenProfile, j: TokenProfile, idf: IdfTable, k1: float = 2.0, b: float = 0.75
) -> float:
    """Symmetric BM25 edge weight, the mean of both directions."""
    return (bm25_score(i, j, idf, k1, b) + bm25_score(j, i, idf, k1, b)) / 2


def _query_and_term_matrices(
    profiles: Sequence[TokenProfile], idf: IdfTable, params: Bm25Config
) -> tuple[sparse.csr_matrix, sparse.csc_matrix]:
    """Query matrix Q[doc, token] = idf and saturated term matrix T[token, doc]."""
    vocabulary = {token: k for k, token in enumerate(idf.idf)}
    rows, cols, idf_values, tf_values = [], [], [], []
    for d, profile in enumerate(profiles):
        norm = params.k1 * (1 - params.b + params.b * profile.length / idf.mean_length)
        for token, n_z in profile.token_counts.items():
            k = vocabulary.get(token)
            if k is None:
                continue
            rows.append(d)
            cols.append(k)
            idf_values.append(idf.idf[token])
            tf_values.append(n_z * (params.k1 + 1) / (n_z + norm))
    shape = (len(profiles), len(vocabulary))
    query = sparse.csr_matrix((idf_values, (rows, cols)), shape=shape, dtype=np.float64)
    terms = sparse.csc_matrix((tf_values, (cols, rows)), shape=shape[::-1], dtype=np.float64)
    return query, terms


def build_text_coupling(
    profiles: Sequence[TokenProfile],
    idf: IdfTable,
    params: Optional[Bm25Config] = None,
    specialism: str = "",
    period: Optional[PeriodSpec] = None,
    isolates: Sequence[str] = (),
    excluded: Sequence[str] = (),
) -> CoupledGraph:
    """
    BM25 textual coupling network over every pair of profiles.

    Pairs are evaluated in row chunks, so only a chunk of the score matrix
    is held at a time; pairs with zero weight get no edge.

    Args:
        profiles: Non-empty profiles of the slice.
        idf: Global IDF table.
        params: BM25 k1 and b.
        specialism: Provenance label.
        period: Provenance period.
        isolates: Extra node ids (excluded articles kept as isolates).
        excluded: Articles of the slice left out for lack of usable text,
            counted whether or not they are kept as isolates.

    Returns:
        CoupledGraph with node ids ordered by record id.
    """
    params = params or Bm25Config()
    ordered = sorted(profiles, key=lambda p: p.doc_id)
    query, terms = _query_and_term_matrices(ordered, idf, params)

    sources, targets, weights = [], [], []
    for start in range(0, len(ordered), _ROW_CHUNK):
        stop = min(start + _ROW_CHUNK, len(ordered))
        forward = query[start:stop] @ terms
        backward = (query @ terms[:, start:stop]).T
        chunk = ((forward + backward) * 0.5).tocoo()
        rows = chunk.row + start
        keep = (chunk.col > rows) & (chunk.data > 0)
        sources.append(rows[keep])
        targets.append(chunk.col[keep])
        weights.append(chunk.data[keep])

    nodes = [p.doc_id for p in ordered]
    extra = sorted(set(isolates) - set(nodes))
    all_nodes = sorted(nodes + extra)
    position = {node: k for k, node in enumerate(all_nodes)}
    remap = np.array([position[node] for node in nodes], dtype=np.int64)

    def gather(parts: list) -> np.ndarray:
        return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)

    graph = CoupledGraph.from_edges(
        "article",
        "bm25-text",
        all_nodes,
        remap[gather(sources)] if len(nodes) else [],
        remap[gather(targets)] if len(nodes) else [],
        gather(weights),
        specialism=specialism,
        period=period,
        excluded=tuple(sorted(excluded)),
    )
    logger.debug(f"text coupling: {graph.node_count} nodes, {graph.edge_count} edges")
    return graph
