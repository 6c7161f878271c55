"""Tests for reference and author disambiguation."""

import itertools
import random

import pytest

from biblio_connectivity.config import MatchRuleConfig
from biblio_connectivity.ingest import parse_reference_string
from biblio_connectivity.records import AuthorName, RawReference
from biblio_connectivity.resolution import (
    GLOBAL_SCOPE,
    ReferenceDictionary,
    cited_clusters,
    references_match,
    resolve_authors,
    resolve_references,
)

CFG = MatchRuleConfig()


def ref(author: str, year: int, title: str) -> RawReference:
    return RawReference(author_field=author, year=year, title_field=title)


def brute_force_clusters(refs: list[RawReference]) -> set[frozenset[str]]:
    """All-pairs matching on unique keys followed by a depth-first closure."""
    unique = {r.key: r for r in refs}
    keys = sorted(unique)
    neighbours = {k: set() for k in keys}
    for a, b in itertools.combinations(keys, 2):
        if references_match(unique[a], unique[b], CFG):
            neighbours[a].add(b)
            neighbours[b].add(a)
    seen, clusters = set(), set()
    for start in keys:
        if start in seen:
            continue
        stack, component = [start], set()
        while stack:
            key = stack.pop()
            if key in component:
                continue
            component.add(key)
            stack.extend(neighbours[key] - component)
        seen |= component
        clusters.add(frozenset(component))
    return clusters


def clusters_of(dictionary: ReferenceDictionary) -> set[frozenset[str]]:
    groups: dict[str, set[str]] = {}
    for key, cluster_id in dictionary.key_to_cluster.items():
        groups.setdefault(cluster_id, set()).add(key)
    return {frozenset(g) for g in groups.values()}


def perturb(rng: random.Random, text: str) -> str:
    """Edit one character after the third, so blocks are preserved most of the time."""
    if len(text) < 5 or rng.random() < 0.3:
        return text
    pos = rng.randrange(3, len(text))
    op = rng.choice(["drop", "swap", "sub"])
    if op == "drop":
        return text[:pos] + text[pos + 1 :]
    if op == "swap" and pos + 1 < len(text):
        return text[:pos] + text[pos + 1] + text[pos] + text[pos + 2 :]
    return text[:pos] + rng.choice("aeiourst") + text[pos + 1 :]


def random_corpus(rng: random.Random, size: int) -> list[RawReference]:
    bases = [
        ("smith j", "the decline of feudalism"),
        ("smith j", "the decline of feudal europe"),
        ("smyth j", "the decline of feudalism"),
        ("brown k", "banking in the renaissance"),
        ("brown k", "banking and the renaissance state"),
        ("browne k", "banking in renaissance italy"),
    ]
    corpus = []
    for _ in range(size):
        author, title = rng.choice(bases)
        corpus.append(ref(perturb(rng, author), rng.choice([1990, 1991]), perturb(rng, title)))
    return corpus


class TestReferencesMatch:
    def test_punctuation_variants_match(self):
        r1 = ref("smith, j", 1990, "the decline of feudalism")
        r2 = ref("smith, j.", 1990, "the decline of feudalism")
        assert references_match(r1, r2, CFG)

    def test_identical_references_match(self):
        r1 = parse_reference_string("Smith J, 1990, Hist J, V33, P123")
        assert references_match(r1, r1, CFG)

    def test_author_prefix_must_agree(self):
        r1 = ref("smith j", 1990, "the decline of feudalism")
        r2 = ref("asmith j", 1990, "the decline of feudalism")
        assert not references_match(r1, r2, CFG)
        assert not references_match(r2, r1, CFG)

    def test_title_threshold_depends_on_year(self):
        custom = MatchRuleConfig(title_jw_min_with_year=0.85, title_jw_min_alone=0.999)
        r1 = ref("smith j", 1990, "the decline of feudalism")
        r2 = ref("smith j", 1990, "the decline of feudal europe")
        r3 = ref("smith j", 1995, "the decline of feudal europe")
        assert references_match(r1, r2, custom)
        assert not references_match(r1, r3, custom)

    def test_symmetric_over_random_pairs(self):
        rng = random.Random(5)
        corpus = random_corpus(rng, 80)
        for a, b in itertools.combinations(corpus, 2):
            assert references_match(a, b, CFG) == references_match(b, a, CFG)


class TestResolveReferences:
    def test_three_variants_form_one_cluster(self):
        refs = [
            ref("smith j", 1990, "the decline of feudalism"),
            ref("smith j.", 1990, "the decline of feudalism"),
            ref("Smith, J", 1990, "The decline of feudalism."),
        ]
        variants = [
            ref("smith j", 1990, "the decline of feudalism"),
            ref("smith j", 1990, "the decline of feudalsm"),
            ref("smith jo", 1990, "the decline of feudalism"),
        ]
        assert len(resolve_references(refs).clusters) == 1
        dictionary = resolve_references(variants)
        assert len(dictionary.clusters) == 1
        (cluster,) = dictionary.clusters.values()
        assert cluster.member_count == 3
        assert cluster.cluster_id == min(r.key for r in variants)

    def test_author_prefix_mismatch_gives_two_clusters(self):
        refs = [
            ref("smith j", 1990, "the decline of feudalism"),
            ref("jones j", 1990, "the decline of feudalism"),
        ]
        assert len(resolve_references(refs).clusters) == 2

    def test_empty_input(self):
        dictionary = resolve_references([])
        assert len(dictionary) == 0
        assert dictionary.report.resolved == 0

    def test_report_counts(self):
        refs = [ref("smith j", 1990, "the decline of feudalism")] * 3 + [
            ref("smith j.", 1990, "the decline of feudalism"),
            ref("brown k", 1985, "banking"),
        ]
        report = resolve_references(refs, discarded=4).report
        assert (report.raw, report.unique_keys, report.resolved, report.discarded) == (5, 2, 2, 4)
        assert report.cluster_size_histogram == {1: 2}

    @pytest.mark.parametrize("seed", range(50))
    def test_blocked_clustering_equals_brute_force(self, seed):
        rng = random.Random(seed)
        corpus = random_corpus(rng, rng.randint(1, 60))
        dictionary = resolve_references(corpus)
        assert clusters_of(dictionary) == brute_force_clusters(corpus)
        assert len(dictionary.clusters) <= len({r.key for r in corpus})

    def test_independent_of_input_order_and_threads(self):
        rng = random.Random(99)
        corpus = random_corpus(rng, 120)
        baseline = resolve_references(corpus, threads=1)
        shuffled = corpus[:]
        rng.shuffle(shuffled)
        other = resolve_references(shuffled, threads=4)
        assert other.clusters == baseline.clusters
        assert other.key_to_cluster == baseline.key_to_cluster

    def test_save_and_load(self, tmp_path):
        dictionary = resolve_references([ref("smith j", 1990, "the decline of feudalism")])
        dictionary.save(tmp_path / "references.json")
        assert ReferenceDictionary.load(tmp_path / "references.json") == dictionary

    def test_cited_clusters_are_distinct_and_ordered(self, record_factory, works, resolve):
        record = record_factory(
            "r1",
            refs=[works["b"], works["a"], "Brown K, 1985, Banking in the renaissance, P9"],
        )
        dictionary = resolve([record])
        cited = cited_clusters(record, dictionary)
        assert [c.canonical_author for c in cited] == ["brown k", "adams p"]


class TestResolveAuthors:
    def occurrences(self, *names, specialism="history"):
        return [(AuthorName(surname=s, given=g), specialism) for s, g in names]

    def test_same_name_same_identity(self):
        names = self.occurrences(("Colavizza", "Giovanni"), ("colavizza", "giovanni"))
        directory = resolve_authors(names)
        first, second = (directory.identity_of(n, s) for n, s in names)
        assert first == second

    def test_initial_is_not_merged_with_full_given_name(self):
        names = self.occurrences(("Colavizza", "Giovanni"), ("Colavizza", "G"))
        directory = resolve_authors(names)
        ids = {directory.identity_of(n, s).author_id for n, s in names}
        assert len(ids) == 2

    def test_different_given_names_stay_apart(self):
        names = self.occurrences(("Rossi", "Anna"), ("Rossi", "Bruno"))
        directory = resolve_authors(names)
        assert len({i.author_id for i in directory.identities.values()}) == 2

    def test_close_surnames_merge(self):
        names = self.occurrences(("Johansson", "Anna"), ("Johanson", "Anna"))
        directory = resolve_authors(names)
        first, second = (directory.identity_of(n, s) for n, s in names)
        assert first.author_id == second.author_id == "history|johanson|anna"

    def test_scope_is_per_specialism_by_default(self):
        names = self.occurrences(("Rossi", "Anna")) + self.occurrences(
            ("Rossi", "Anna"), specialism="economics"
        )
        directory = resolve_authors(names)
        ids = {directory.identity_of(n, s).author_id for n, s in names}
        assert ids == {"history|rossi|anna", "economics|rossi|anna"}

    def test_global_scope(self):
        names = self.occurrences(("Rossi", "Anna")) + self.occurrences(
            ("Rossi", "Anna"), specialism="economics"
        )
        directory = resolve_authors(names, scope_mode="global")
        ids = {directory.identity_of(n, s).author_id for n, s in names}
        assert ids == {f"{GLOBAL_SCOPE}|rossi|anna"}
