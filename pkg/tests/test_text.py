"""Tests for tokenization, IDF and BM25 text networks."""

import itertools
import math

import pytest

from biblio_connectivity.config import Bm25Config
from biblio_connectivity.errors import NetworkError
from biblio_connectivity.text import (
    TokenProfile,
    bm25_pair,
    bm25_score,
    build_idf,
    build_text_coupling,
    profile_records,
    tokenize,
)

FIVE_DOCS = ["alpha beta beta", "alpha gamma", "beta gamma delta", "delta epsilon", "zeta eta"]


def profiles_of(texts: list[str]) -> list[TokenProfile]:
    return [tokenize(text, "", f"d{k}") for k, text in enumerate(texts)]


def formula_bm25(query: str, doc: str, texts: list[str], k1=2.0, b=0.75) -> float:
    """BM25 written out longhand over whitespace-split toy documents."""
    docs = [t.split() for t in texts]
    n = len(docs)
    mean_length = sum(len(d) for d in docs) / n
    target = doc.split()
    score = 0.0
    for token in set(query.split()):
        p = sum(token in d for d in docs)
        idf = math.log((n - p + 0.5) / (p + 0.5))
        count = target.count(token)
        if idf <= 0 or count == 0:
            continue
        score += idf * count * (k1 + 1) / (count + k1 * (1 - b + b * len(target) / mean_length))
    return score


class TestTokenize:
    def test_lowercases_and_drops_single_characters(self):
        profile = tokenize("A Tale", "of two, cities")
        assert profile.token_counts == {"cities": 1, "of": 1, "tale": 1, "two": 1}
        assert profile.length == 4

    def test_everything_dropped_gives_empty_profile(self):
        assert tokenize("X-Y", "").is_empty

    def test_repeated_tokens_are_counted(self):
        profile = tokenize("Trade and trade", "TRADE routes")
        assert profile.token_counts["trade"] == 3
        assert profile.length == 5

    def test_profile_validation(self):
        with pytest.raises(ValueError):
            TokenProfile(doc_id="x", token_counts={"trade": 2}, length=3)
        with pytest.raises(ValueError):
            TokenProfile(doc_id="x", token_counts={"Trade": 1}, length=1)


class TestIdf:
    def test_rare_tokens_kept_common_tokens_discarded(self):
        idf = build_idf(profiles_of(["alpha beta", "alpha gamma", "delta gamma"]))
        assert idf.doc_count == 3
        assert idf.idf["beta"] == pytest.approx(math.log(2.5 / 1.5))
        assert idf.idf["beta"] == pytest.approx(0.5108, abs=1e-4)
        assert "alpha" not in idf.idf
        assert idf.doc_frequency["alpha"] == 2
        assert idf.mean_length == 2.0

    def test_no_profiles_is_an_error(self):
        with pytest.raises(NetworkError):
            build_idf([])
        with pytest.raises(NetworkError):
            build_idf([tokenize("", "", "d0")])


class TestBm25:
    def test_common_tokens_only_give_no_edges(self):
        profiles = profiles_of(["alpha beta", "alpha gamma", "delta gamma"])
        graph = build_text_coupling(profiles, build_idf(profiles))
        assert graph.node_count == 3
        assert graph.edge_count == 0

    def test_score_matches_longhand_formula(self):
        profiles = profiles_of(FIVE_DOCS)
        idf = build_idf(profiles)
        for (i, a), (j, b) in itertools.permutations(enumerate(FIVE_DOCS), 2):
            expected = formula_bm25(a, b, FIVE_DOCS)
            assert bm25_score(profiles[i], profiles[j], idf) == pytest.approx(expected, rel=1e-9)

    def test_graph_weights_match_pairwise_scores(self):
        profiles = profiles_of(FIVE_DOCS)
        idf = build_idf(profiles)
        graph = build_text_coupling(profiles, idf)
        weights = {(graph.nodes[i], graph.nodes[j]): w for i, j, w in graph.edges()}
        for a, b in itertools.combinations(profiles, 2):
            expected = bm25_pair(a, b, idf)
            if expected == 0:
                assert (a.doc_id, b.doc_id) not in weights
            else:
                assert weights[(a.doc_id, b.doc_id)] == pytest.approx(expected, rel=1e-8)
        # zeta eta shares nothing with the rest.
        assert all("d4" not in pair for pair in weights)
        assert graph.weight_kind == "bm25-text"

    def test_pair_weight_is_symmetric(self):
        profiles = profiles_of(FIVE_DOCS)
        idf = build_idf(profiles)
        for a, b in itertools.combinations(profiles, 2):
            assert bm25_pair(a, b, idf) == bm25_pair(b, a, idf)

    def test_parameters_change_the_weights(self):
        profiles = profiles_of(FIVE_DOCS)
        idf = build_idf(profiles)
        default = build_text_coupling(profiles, idf)
        flat = build_text_coupling(profiles, idf, Bm25Config(k1=0.5, b=0.0))
        assert default.edge_count == flat.edge_count
        assert list(default.weights) != list(flat.weights)

    def test_isolates_are_added_as_nodes(self):
        profiles = profiles_of(FIVE_DOCS)
        graph = build_text_coupling(profiles, build_idf(profiles), isolates=["a0", "z9"])
        assert graph.nodes == ("a0", "d0", "d1", "d2", "d3", "d4", "z9")
        assert graph.excluded == ()

    def test_excluded_articles_are_counted_without_becoming_nodes(self):
        profiles = profiles_of(FIVE_DOCS)
        graph = build_text_coupling(profiles, build_idf(profiles), excluded=["z9", "a0"])
        assert graph.node_count == 5
        assert graph.excluded == ("a0", "z9")
        assert graph.summary()["excluded"] == 2


class TestProfileRecords:
    def test_records_without_abstract_are_excluded(self, record_factory):
        records = [
            record_factory("r1", title="Trade routes", abstract="Venetian trade routes."),
            record_factory("r2", title="Trade routes"),
            record_factory("r3", title="", abstract="! ? ."),
        ]
        profiles, excluded = profile_records(records)
        assert [p.doc_id for p in profiles] == ["r1"]
        assert excluded == ["r2", "r3"]

    def test_journal_filter_skips_silently(self, record_factory):
        records = [
            record_factory("r1", journal="Journal of History", abstract="Venetian trade."),
            record_factory("r2", journal="Other Review", abstract="Venetian trade."),
            record_factory("r3", journal="Other Review"),
        ]
        profiles, excluded = profile_records(records, text_journals=["Journal of History"])
        assert [p.doc_id for p in profiles] == ["r1"]
        assert excluded == []
