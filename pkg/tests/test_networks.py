"""Tests for reference-overlap coupling networks."""

import itertools
import math
import random

import numpy as np
import pytest

from biblio_connectivity.errors import NetworkError
from biblio_connectivity.networks import (
    CoupledGraph,
    build_article_coupling,
    build_author_coupling,
    cosine_coupling_weight,
    read_graph,
    write_graph,
)
from biblio_connectivity.resolution import cited_clusters, resolve_authors


def edge_dict(graph: CoupledGraph) -> dict[tuple[str, str], float]:
    return {(graph.nodes[i], graph.nodes[j]): w for i, j, w in graph.edges()}


class TestCosineWeight:
    def test_golden_value(self):
        assert cosine_coupling_weight({"a", "b", "c"}, {"b", "c", "d"}) == pytest.approx(2 / 3)

    def test_identical_and_disjoint(self):
        assert cosine_coupling_weight({"a", "b"}, {"a", "b"}) == pytest.approx(1.0)
        assert cosine_coupling_weight({"a"}, {"b"}) == 0.0
        assert cosine_coupling_weight(set(), {"b"}) == 0.0

    def test_properties_over_random_sets(self):
        rng = random.Random(42)
        universe = [str(k) for k in range(30)]
        for _ in range(10_000):
            a = set(rng.sample(universe, rng.randint(1, 10)))
            b = set(rng.sample(universe, rng.randint(1, 10)))
            w = cosine_coupling_weight(a, b)
            assert w == cosine_coupling_weight(b, a)
            assert 0.0 <= w <= 1.0 + 1e-12
            assert (w == 0.0) == a.isdisjoint(b)
            if w > 0:
                # Citing one more work nobody else cites dilutes the overlap.
                assert cosine_coupling_weight(a | {"private"}, b) < w


class TestArticleCoupling:
    def test_three_article_golden_graph(self, record_factory, works, resolve):
        records = [
            record_factory("r1", refs=[works[k] for k in "abc"]),
            record_factory("r2", refs=[works[k] for k in "bcd"]),
            record_factory("r3", refs=[works[k] for k in "defg"]),
        ]
        graph = build_article_coupling(records, resolve(records))
        assert graph.nodes == ("r1", "r2", "r3")
        assert list(graph.sources) == [0, 1]
        assert list(graph.targets) == [1, 2]
        assert graph.weights[0] == pytest.approx(2 / 3, rel=1e-8)
        assert graph.weights[1] == pytest.approx(1 / math.sqrt(12), rel=1e-8)

    def test_identical_reference_lists_give_weight_one(self, record_factory, works, resolve):
        records = [
            record_factory("r1", refs=[works["a"], works["b"]]),
            record_factory("r2", refs=[works["b"], works["a"]]),
        ]
        graph = build_article_coupling(records, resolve(records))
        assert list(graph.weights) == [1.0]

    def test_isolates_are_kept(self, record_factory, works, resolve):
        records = [
            record_factory("r1", refs=[works["a"]]),
            record_factory("r2", refs=[]),
            record_factory("r3", refs=[works["a"]]),
        ]
        graph = build_article_coupling(records, resolve(records))
        assert graph.node_count == 3
        assert edge_dict(graph) == {("r1", "r3"): 1.0}

    def test_empty_slice(self, resolve):
        graph = build_article_coupling([], resolve([]))
        assert graph.node_count == 0
        assert graph.edge_count == 0

    def test_unresolved_reference_is_a_network_error(self, record_factory, works, resolve):
        dictionary = resolve([record_factory("r1", refs=[works["a"]])])
        with pytest.raises(NetworkError):
            build_article_coupling([record_factory("r2", refs=[works["b"]])], dictionary)

    def test_matches_naive_all_pairs(self, record_factory, works, resolve):
        rng = random.Random(8)
        keys = list(works)
        records = []
        for k in range(30):
            refs = [works[x] for x in rng.sample(keys, rng.randint(0, 5))]
            records.append(record_factory(f"r{k:02d}", refs=refs))
        dictionary = resolve(records)
        graph = build_article_coupling(records, dictionary)
        sets = {
            r.record_id: {c.cluster_id for c in cited_clusters(r, dictionary)} for r in records
        }
        expected = {}
        for a, b in itertools.combinations(sorted(sets), 2):
            w = cosine_coupling_weight(sets[a], sets[b])
            if w > 0:
                expected[(a, b)] = w
        actual = edge_dict(graph)
        assert actual.keys() == expected.keys()
        for pair, w in expected.items():
            assert actual[pair] == pytest.approx(w, rel=1e-8)


class TestAuthorCoupling:
    def test_coauthors_share_an_edge_of_weight_one(self, record_factory, works, resolve):
        records = [
            record_factory(
                "r1", refs=[works["a"], works["b"]], authors=[("Rossi", "Anna"), ("Bauer", "Max")]
            )
        ]
        authors = resolve_authors((n, r.specialism) for r in records for n in r.authors)
        graph = build_author_coupling(records, resolve(records), authors)
        assert graph.node_kind == "author"
        assert edge_dict(graph) == {("history|bauer|max", "history|rossi|anna"): 1.0}

    def test_reference_sets_are_unions_over_articles(self, record_factory, works, resolve):
        records = [
            record_factory("r1", refs=[works["a"], works["b"]], authors=[("Rossi", "Anna")]),
            record_factory("r2", refs=[works["b"], works["c"]], authors=[("Rossi", "Anna")]),
            record_factory("r3", refs=[works[k] for k in "abc"], authors=[("Bauer", "Max")]),
            record_factory("r4", refs=[works["g"]], authors=[("Costa", "Lia")]),
        ]
        authors = resolve_authors((n, r.specialism) for r in records for n in r.authors)
        graph = build_author_coupling(records, resolve(records), authors)
        assert graph.node_count == 3
        assert edge_dict(graph) == {("history|bauer|max", "history|rossi|anna"): 1.0}


class TestCoupledGraph:
    def test_from_edges_orders_and_drops_zero_weights(self):
        graph = CoupledGraph.from_edges(
            "article", "bm25-text", ["a", "b", "c"], [2, 1, 0], [0, 0, 1], [1.5, 0.0, 2.25]
        )
        assert list(zip(graph.sources, graph.targets)) == [(0, 1), (0, 2)]
        assert list(graph.weights) == [2.25, 1.5]

    def test_weights_are_rounded_to_nine_significant_digits(self):
        graph = CoupledGraph.from_edges("article", "bm25-text", ["a", "b"], [0], [1], [1 / 3])
        assert graph.weights[0] == 0.333333333

    @pytest.mark.parametrize(
        "sources, targets, weights",
        [([0], [0], [0.5]), ([0, 0], [1, 1], [0.5, 0.5]), ([1], [0], [0.5]), ([0], [1], [-1.0])],
    )
    def test_invalid_edges_are_rejected(self, sources, targets, weights):
        with pytest.raises(NetworkError):
            CoupledGraph(
                "article",
                "cosine-overlap",
                ("a", "b"),
                np.array(sources),
                np.array(targets),
                np.array(weights),
            )

    def test_cosine_weights_above_one_are_rejected(self):
        with pytest.raises(NetworkError):
            CoupledGraph.from_edges("article", "cosine-overlap", ["a", "b"], [0], [1], [1.5])

    def test_write_and_read(self, tmp_path, triangle):
        files = write_graph(triangle, tmp_path / "g" / "triangle")
        assert [f.name for f in files] == [
            "triangle.edges.tsv",
            "triangle.nodes.txt",
            "triangle.summary.json",
        ]
        assert files[0].read_text() == "a\tb\t0.2\na\tc\t0.9\nb\tc\t0.5\n"
        again = read_graph(tmp_path / "g" / "triangle")
        assert again.nodes == triangle.nodes
        assert np.array_equal(again.weights, triangle.weights)
        summary = triangle.summary()
        assert (summary["nodes"], summary["edges"]) == (3, 3)
        assert (summary["weight_min"], summary["weight_max"]) == (0.2, 0.9)

    def test_edgeless_graph_round_trips(self, tmp_path):
        graph = CoupledGraph.from_edges("author", "cosine-overlap", ["x"], [], [], [])
        write_graph(graph, tmp_path / "lonely")
        assert read_graph(tmp_path / "lonely").node_count == 1
