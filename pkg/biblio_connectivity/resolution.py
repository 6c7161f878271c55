"""Disambiguation of cited references and article authors."""

import json
import logging
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Iterable, List, Literal, Optional, Sequence

import numpy as np
from networkx.utils import UnionFind
from pydantic import BaseModel, Field

from biblio_connectivity.config import MatchRuleConfig
from biblio_connectivity.ingest import classify_reference
from biblio_connectivity.records import (
    DEFAULT_YEAR_RANGE,
    AuthorName,
    PublicationRecord,
    RawReference,
)
from biblio_connectivity.similarity import jaro_winkler, similarity_block, similarity_matrix

logger = logging.getLogger(__name__)

GLOBAL_SCOPE = "*"
_AUTHOR_CHUNK = 1024


class ResolvedReference(BaseModel):
    """A cited work: the cluster of reference strings that denote it."""

    cluster_id: str = Field(..., description="Smallest normalized member key")
    canonical_author: str
    canonical_year: int
    canonical_title: str
    member_count: int = Field(..., ge=1, description="Distinct normalized reference strings")


class ResolutionReport(BaseModel):
    """Counts describing a reference resolution run."""

    raw: int = Field(0, description="Reference occurrences resolved")
    unique_keys: int = Field(0, description="Distinct normalized reference strings")
    resolved: int = Field(0, description="Clusters")
    discarded: int = Field(0, description="References discarded while parsing")
    block_sizes: Dict[str, int] = Field(
        default_factory=dict, description="Keys per block, for blocks with more than one key"
    )
    cluster_size_histogram: Dict[int, int] = Field(default_factory=dict)


class ReferenceDictionary(BaseModel):
    """The global reference dictionary: normalized reference key -> cited work."""

    clusters: Dict[str, ResolvedReference] = Field(default_factory=dict)
    key_to_cluster: Dict[str, str] = Field(default_factory=dict)
    report: ResolutionReport = Field(default_factory=ResolutionReport)

    def __getitem__(self, reference: RawReference | str) -> ResolvedReference:
        key = reference if isinstance(reference, str) else reference.key
        return self.clusters[self.key_to_cluster[key]]

    def __contains__(self, reference: object) -> bool:
        if isinstance(reference, RawReference):
            reference = reference.key
        return reference in self.key_to_cluster

    def __len__(self) -> int:
        return len(self.key_to_cluster)

    def cluster_ids(self, references: Iterable[RawReference]) -> set[str]:
        """Distinct clusters cited by ``references``."""
        return {self.key_to_cluster[r.key] for r in references}

    def save(self, path: Path) -> None:
        """Persist the dictionary as JSON for later stages and reruns."""
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = self.model_dump(mode="json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=1, sort_keys=True, ensure_ascii=False)
            f.write("\n")
        logger.info(f"Saved reference dictionary ({len(self.clusters)} clusters) to {path}")

    @classmethod
    def load(cls, path: Path) -> "ReferenceDictionary":
        with open(path, "r", encoding="utf-8") as f:
            return cls.model_validate(json.load(f))


def _prefix(value: str, cfg: MatchRuleConfig) -> str:
    return value[: cfg.prefix_chars]


def _title_rule(title_sim, same_year, cfg: MatchRuleConfig):
    return ((title_sim >= cfg.title_jw_min_with_year) & same_year) | (
        title_sim >= cfg.title_jw_min_alone
    )


def references_match(r1: RawReference, r2: RawReference, cfg: MatchRuleConfig) -> bool:
    """
    Decide whether two references denote the same cited work.

    All of the following must hold on the normalized fields:
    (a) the author and title fields share their first ``prefix_chars``
    characters; (b) Jaro-Winkler of the author fields reaches
    ``author_jw_min``; (c) Jaro-Winkler of the titles reaches
    ``title_jw_min_with_year`` with equal years, or ``title_jw_min_alone``.
    """
    a1, a2 = r1.norm_author, r2.norm_author
    t1, t2 = r1.norm_title, r2.norm_title
    if _prefix(a1, cfg) != _prefix(a2, cfg) or _prefix(t1, cfg) != _prefix(t2, cfg):
        return False
    if jaro_winkler(a1, a2) < cfg.author_jw_min:
        return False
    return bool(_title_rule(jaro_winkler(t1, t2), r1.year == r2.year, cfg))


def _match_block(block: List[RawReference], cfg: MatchRuleConfig) -> list[tuple[int, int]]:
    """Index pairs (i < j) of matching references within one block."""
    authors = [r.norm_author for r in block]
    titles = [r.norm_title for r in block]
    years = np.array([r.year for r in block])
    author_sim = similarity_matrix(authors)
    title_sim = similarity_matrix(titles)
    same_year = years[:, None] == years[None, :]
    matches = (author_sim >= cfg.author_jw_min) & _title_rule(title_sim, same_year, cfg)
    rows, cols = np.nonzero(np.triu(matches, k=1))
    return list(zip(rows.tolist(), cols.tolist()))


def resolve_references(
    refs: Sequence[RawReference],
    cfg: Optional[MatchRuleConfig] = None,
    threads: int = 1,
    discarded: int = 0,
) -> ReferenceDictionary:
    """
    Cluster references into cited works.

    References are blocked on their author and title prefixes (rule (a) of
    ``references_match`` makes this lossless), matched pairwise within each
    block, and merged by transitive closure. Each cluster is named after its
    lexicographically smallest normalized key, so the result does not depend
    on input order or thread count.

    Args:
        refs: Parsed references, possibly with repeats.
        cfg: Match thresholds.
        threads: Worker threads for block matching.
        discarded: References discarded upstream, copied into the report.

    Returns:
        ReferenceDictionary covering every key in ``refs``.
    """
    cfg = cfg or MatchRuleConfig()
    by_key: Dict[str, RawReference] = {}
    for ref in refs:
        by_key.setdefault(ref.key, ref)
    keys = sorted(by_key)

    blocks: Dict[str, List[RawReference]] = defaultdict(list)
    for key in keys:
        ref = by_key[key]
        blocks[f"{_prefix(ref.norm_author, cfg)}|{_prefix(ref.norm_title, cfg)}"].append(ref)
    multi = sorted(name for name, members in blocks.items() if len(members) > 1)
    logger.info(f"Resolving {len(keys)} distinct references in {len(blocks)} blocks")

    union = UnionFind(keys)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        block_pairs = pool.map(lambda name: _match_block(blocks[name], cfg), multi)
        for name, pairs in zip(multi, block_pairs):
            members = blocks[name]
            for i, j in pairs:
                union.union(members[i].key, members[j].key)
            logger.debug(f"Block {name!r}: {len(members)} keys, {len(pairs)} matches")

    result = ReferenceDictionary()
    for group in union.to_sets():
        cluster_id = min(group)
        head = by_key[cluster_id]
        result.clusters[cluster_id] = ResolvedReference(
            cluster_id=cluster_id,
            canonical_author=head.norm_author,
            canonical_year=head.year,
            canonical_title=head.norm_title,
            member_count=len(group),
        )
        for key in group:
            result.key_to_cluster[key] = cluster_id

    result.clusters = dict(sorted(result.clusters.items()))
    result.key_to_cluster = dict(sorted(result.key_to_cluster.items()))
    sizes = Counter(c.member_count for c in result.clusters.values())
    result.report = ResolutionReport(
        raw=len(refs),
        unique_keys=len(keys),
        resolved=len(result.clusters),
        discarded=discarded,
        block_sizes={name: len(blocks[name]) for name in multi},
        cluster_size_histogram=dict(sorted(sizes.items())),
    )
    logger.info(f"Resolved {len(refs)} references into {len(result.clusters)} cited works")
    return result


def cited_clusters(
    record: PublicationRecord,
    dictionary: ReferenceDictionary,
    year_range: tuple[int, int] = DEFAULT_YEAR_RANGE,
) -> list[ResolvedReference]:
    """
    Distinct cited works of one record, in first-citation order.

    Raises:
        KeyError: if a parsed reference of the record is missing from the dictionary.
    """
    seen: Dict[str, ResolvedReference] = {}
    for raw in record.raw_references:
        reference = classify_reference(raw, record.record_id, year_range).reference
        if reference is None:
            continue
        resolved = dictionary[reference]
        seen.setdefault(resolved.cluster_id, resolved)
    return list(seen.values())


class AuthorIdentity(BaseModel):
    """A disambiguated author within a scope."""

    author_id: str
    canonical_surname: str
    canonical_given: str
    scope: str = Field(..., description="Specialism label, or '*' for global scope")


class AuthorDirectory(BaseModel):
    """Author-name key -> identity, per scope."""

    identities: Dict[str, AuthorIdentity] = Field(default_factory=dict)
    scope_mode: Literal["specialism", "global"] = "specialism"

    @staticmethod
    def name_key(name: AuthorName, scope: str) -> str:
        surname, given = name.key
        return f"{scope}|{surname}|{given}"

    def scope_for(self, specialism: str) -> str:
        return GLOBAL_SCOPE if self.scope_mode == "global" else specialism

    def identity_of(self, name: AuthorName, specialism: str) -> AuthorIdentity:
        return self.identities[self.name_key(name, self.scope_for(specialism))]

    def save(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.model_dump(mode="json"), f, indent=1, sort_keys=True, ensure_ascii=False)
            f.write("\n")

    @classmethod
    def load(cls, path: Path) -> "AuthorDirectory":
        with open(path, "r", encoding="utf-8") as f:
            return cls.model_validate(json.load(f))


def _author_pairs(names: List[tuple[str, str]], cfg: MatchRuleConfig) -> list[tuple[int, int]]:
    """Index pairs (i < j) of matching (surname, given) keys, surnames compared in chunks."""
    surnames = [surname for surname, _ in names]
    pairs = []
    for start in range(0, len(names), _AUTHOR_CHUNK):
        chunk = similarity_block(surnames[start : start + _AUTHOR_CHUNK], surnames)
        rows, cols = np.nonzero(chunk > cfg.author_surname_min)
        for row, col in zip(rows.tolist(), cols.tolist()):
            i = start + row
            if col <= i:
                continue
            if jaro_winkler(names[i][1], names[col][1]) > cfg.author_given_min:
                pairs.append((i, col))
    return pairs


def resolve_authors(
    names: Iterable[tuple[AuthorName, str]],
    cfg: Optional[MatchRuleConfig] = None,
    scope_mode: Literal["specialism", "global"] = "specialism",
    threads: int = 1,
) -> AuthorDirectory:
    """
    Disambiguate author names within each scope.

    Two names match when the Jaro-Winkler similarity of their (lower-cased,
    punctuation-stripped) surnames is strictly above ``author_surname_min``
    and that of their given names strictly above ``author_given_min``.
    Matches are closed transitively; identities are named after the smallest
    member key.

    Args:
        names: (name, specialism) occurrences.
        cfg: Match thresholds.
        scope_mode: "specialism" compares names within a specialism only.
        threads: Worker threads, one scope per task.

    Returns:
        AuthorDirectory covering every occurrence.
    """
    cfg = cfg or MatchRuleConfig()
    directory = AuthorDirectory(scope_mode=scope_mode)
    scopes: Dict[str, set[tuple[str, str]]] = defaultdict(set)
    for name, specialism in names:
        scopes[directory.scope_for(specialism)].add(name.key)

    ordered = sorted(scopes)
    keyed = {scope: sorted(scopes[scope]) for scope in ordered}
    with ThreadPoolExecutor(max_workers=threads) as pool:
        all_pairs = pool.map(lambda scope: _author_pairs(keyed[scope], cfg), ordered)
        for scope, pairs in zip(ordered, all_pairs):
            members = keyed[scope]
            union = UnionFind(range(len(members)))
            for i, j in pairs:
                union.union(i, j)
            groups = list(union.to_sets())
            for group in groups:
                surname, given = min(members[i] for i in group)
                identity = AuthorIdentity(
                    author_id=f"{scope}|{surname}|{given}",
                    canonical_surname=surname,
                    canonical_given=given,
                    scope=scope,
                )
                for i in group:
                    surname_i, given_i = members[i]
                    directory.identities[f"{scope}|{surname_i}|{given_i}"] = identity
            logger.info(f"Scope {scope!r}: {len(members)} author names, {len(groups)} identities")

    directory.identities = dict(sorted(directory.identities.items()))
    return directory
