from __future__ import annotations

import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import msg, snap
from oracles import brute_force_cosharing_edges
from coshare import _kernels
from coshare.misinfo import LabelSet
from coshare.neardup import ContentCluster, cluster_snapshot, SimilarityConfig
from coshare.network import (
    CoSharingNetwork,
    build_cosharing_network,
    network_summary,
    node_metrics,
)


def make_cluster(cid: str, members: set[str]) -> ContentCluster:
    return ContentCluster(
        cluster_id=cid,
        media_type="text",
        member_msg_ids=frozenset(members),
        representative_msg_id=sorted(members)[0],
    )


def network_from_posts(posts: list[tuple[str, str, str]], weight_mode="distinct"):
    """posts: (user, cluster_id, msg_id) triples; every user posts in g1."""
    messages = [msg(mid, user=user, ts=i) for i, (user, _, mid) in enumerate(posts)]
    members: dict[str, set[str]] = {}
    for user, cid, mid in posts:
        members.setdefault(cid, set()).add(mid)
    clusters = [make_cluster(cid, ids) for cid, ids in sorted(members.items())]
    return build_cosharing_network(snap(messages), clusters, None, weight_mode)


def graph(edges: dict[tuple[str, str], int]) -> CoSharingNetwork:
    return CoSharingNetwork(1, edges)


class TestBuild:
    def test_two_users_one_cluster(self):
        net = network_from_posts([("A", "c1", "m1"), ("B", "c1", "m2")])
        assert net.nodes == {"A", "B"}
        assert net.edges == {("A", "B"): 1}

    def test_isolated_user_excluded(self):
        net = network_from_posts(
            [
                ("A", "x", "m1"),
                ("A", "y", "m2"),
                ("B", "x", "m3"),
                ("C", "y", "m4"),
                ("D", "z", "m5"),
            ]
        )
        assert net.nodes == {"A", "B", "C"}
        assert net.edges == {("A", "B"): 1, ("A", "C"): 1}

    def test_two_shared_clusters_weight_two(self):
        net = network_from_posts(
            [("A", "x", "m1"), ("A", "y", "m2"), ("B", "x", "m3"), ("B", "y", "m4")]
        )
        assert net.edges == {("A", "B"): 2}

    def test_distinct_mode_ignores_reposts(self):
        # A posts the same cluster 3 times: weight stays 1
        net = network_from_posts(
            [("A", "x", "m1"), ("A", "x", "m2"), ("A", "x", "m3"), ("B", "x", "m4")]
        )
        assert net.edges == {("A", "B"): 1}

    def test_min_count_mode(self):
        net = network_from_posts(
            [("A", "x", "m1"), ("A", "x", "m2"), ("B", "x", "m3"), ("B", "x", "m4"), ("B", "x", "m5")],
            weight_mode="min_count",
        )
        assert net.edges == {("A", "B"): 2}

    def test_node_attrs_counts(self):
        messages = [
            msg("m1", user="A", group="g1"),
            msg("m2", user="A", group="g2"),
            msg("m3", user="B", group="g1"),
            msg("m4", user="C", group="g3"),  # not in any shared cluster
        ]
        clusters = [make_cluster("c1", {"m1", "m3"})]
        labels = LabelSet(misinfo_cluster_ids=frozenset({"c1"}), provenance={"c1": "override_file"})
        net = build_cosharing_network(snap(messages), clusters, labels)
        assert set(net.node_attrs) == {"A", "B"}
        assert net.node_attrs["A"].groups_posted_in == {"g1", "g2"}
        assert net.node_attrs["A"].msg_count == 2
        assert net.node_attrs["A"].misinfo_count == 1
        assert net.node_attrs["B"].misinfo_count == 1

    def test_order_invariance(self):
        posts = [(f"u{i % 7}", f"c{i % 4}", f"m{i}") for i in range(30)]
        shuffled = posts[:]
        random.Random(3).shuffle(shuffled)
        assert network_from_posts(posts).edges == network_from_posts(shuffled).edges

    @settings(max_examples=30, deadline=None)
    @given(
        st.lists(
            st.tuples(st.integers(0, 9), st.integers(0, 5)),
            min_size=0,
            max_size=50,
            unique=True,
        )
    )
    def test_matches_pair_enumeration_oracle(self, pairs):
        posts = [(f"u{u}", f"c{c}", f"m{i}") for i, (u, c) in enumerate(pairs)]
        net = network_from_posts(posts)
        user_clusters: dict[str, set[str]] = {}
        for u, c, _ in posts:
            user_clusters.setdefault(u, set()).add(c)
        assert net.edges == brute_force_cosharing_edges(user_clusters)

    def test_degree_sum_is_twice_edges(self):
        posts = [(f"u{i % 6}", f"c{i % 3}", f"m{i}") for i in range(40)]
        net = network_from_posts(posts)
        metrics = node_metrics(net)
        assert sum(m.degree for m in metrics.values()) == 2 * len(net.edges)
        assert sum(m.strength for m in metrics.values()) == 2 * sum(net.edges.values())


class TestMetrics:
    def test_triangle_clustering(self):
        net = graph({("a", "b"): 1, ("b", "c"): 1, ("a", "c"): 1})
        metrics = node_metrics(net)
        assert all(m.clustering_coeff == 1.0 for m in metrics.values())

    def test_star_center_clustering_zero(self):
        net = graph({("hub", "l1"): 1, ("hub", "l2"): 1, ("hub", "l3"): 1})
        metrics = node_metrics(net)
        assert metrics["hub"].clustering_coeff == 0.0
        assert metrics["l1"].clustering_coeff == 0.0  # degree < 2

    def test_path_closeness(self):
        net = graph({("a", "b"): 1, ("b", "c"): 1})
        metrics = node_metrics(net)
        assert metrics["b"].closeness == pytest.approx(1.0)
        assert metrics["a"].closeness == pytest.approx(2 / 3)
        assert metrics["c"].closeness == pytest.approx(2 / 3)

    def test_component_corrected_closeness(self):
        # K2 plus K2: each node sees 1 neighbor at distance 1, n=4
        net = graph({("a", "b"): 1, ("c", "d"): 1})
        metrics = node_metrics(net)
        for m in metrics.values():
            assert m.closeness == pytest.approx((1 / 3) * (1 / 1))
        assert len({m.component_id for m in metrics.values()}) == 2

    def test_component_ids_deterministic(self):
        net = graph({("x", "y"): 1, ("a", "b"): 1})
        metrics = node_metrics(net)
        assert metrics["a"].component_id == 0  # smallest node first
        assert metrics["x"].component_id == 1

    def test_strength_vs_degree(self):
        net = graph({("a", "b"): 5, ("b", "c"): 2})
        metrics = node_metrics(net)
        assert metrics["b"].degree == 2
        assert metrics["b"].strength == 7


class TestSummary:
    def test_empty_network(self):
        summary = network_summary(graph({}))
        assert summary["n_nodes"] == 0
        assert summary["n_edges"] == 0

    def test_single_edge(self):
        summary = network_summary(graph({("a", "b"): 1}))
        assert summary["n_nodes"] == 2
        assert summary["n_edges"] == 1
        assert summary["n_components"] == 1
        assert summary["avg_degree"] == 1.0

    def test_two_disjoint_triangles(self):
        edges = {
            ("a", "b"): 1,
            ("b", "c"): 1,
            ("a", "c"): 1,
            ("x", "y"): 1,
            ("y", "z"): 1,
            ("x", "z"): 1,
        }
        summary = network_summary(graph(edges))
        assert summary["n_nodes"] == 6
        assert summary["n_edges"] == 6
        assert summary["n_components"] == 2
        assert summary["avg_degree"] == 2.0
        assert summary["avg_clustering"] == 1.0
        assert summary["sd_degree"] == 0.0

    def test_population_sd(self):
        # degrees: hub 3, leaves 1,1,1 -> mean 1.5, var (2.25+0.75)/4... hand:
        # ((3-1.5)^2 + 3*(1-1.5)^2)/4 = (2.25 + 0.75)/4 = 0.75
        net = graph({("hub", "l1"): 1, ("hub", "l2"): 1, ("hub", "l3"): 1})
        summary = network_summary(net)
        assert summary["avg_degree"] == 1.5
        assert summary["sd_degree"] == pytest.approx(0.75**0.5)

    def test_groups_covered(self):
        messages = [
            msg("m1", user="A", group="g1"),
            msg("m2", user="B", group="g2"),
            msg("m3", user="C", group="g3"),
        ]
        clusters = [make_cluster("c1", {"m1", "m2"})]
        net = build_cosharing_network(snap(messages), clusters)
        assert network_summary(net)["groups_covered"] == 2


class TestKernels:
    """The compiled kernels must agree with the pure-python twins."""

    def _random_csr(self, seed, n=60, p=0.08):
        rnd = random.Random(seed)
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rnd.random() < p]
        return _kernels.build_csr(n, edges), edges, n

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_bfs_and_triangles_paths_agree(self, seed):
        (indptr, indices), edges, n = self._random_csr(seed)
        s_py, c_py = _kernels._py_bfs_sums(indptr, indices, n)
        s_nb, c_nb = _kernels._nb_bfs_sums(indptr, indices, n)
        np.testing.assert_array_equal(s_py, s_nb)
        np.testing.assert_array_equal(c_py, c_nb)
        np.testing.assert_array_equal(
            _kernels._py_triangles(indptr, indices, n),
            _kernels._nb_triangles(indptr, indices, n),
        )

    def test_metrics_against_handmade_bfs(self):
        (indptr, indices), edges, n = self._random_csr(7, n=25, p=0.12)
        sums, counts = _kernels._py_bfs_sums(indptr, indices, n)
        adj = {i: set() for i in range(n)}
        for u, v in edges:
            adj[u].add(v)
            adj[v].add(u)
        for s in range(min(n, 10)):
            dist = {s: 0}
            frontier = [s]
            while frontier:
                nxt = []
                for x in frontier:
                    for y in adj[x]:
                        if y not in dist:
                            dist[y] = dist[x] + 1
                            nxt.append(y)
                frontier = nxt
            assert sums[s] == sum(dist.values())
            assert counts[s] == len(dist)


def test_build_from_clustered_snapshot_end_to_end():
    """Small pipeline slice: texts cluster, then the network reflects it."""
    t1 = "candidato fez declaracao sobre urnas e seguranca das eleicoes brasileiras"
    t2 = "candidato fez declaracao sobre urnas e seguranca das eleicoes brasileiras hoje"
    messages = [
        msg("m1", user="A", text=t1, ts=1),
        msg("m2", user="B", text=t2, ts=2),
        msg("m3", user="C", text="texto completamente diferente sem relacao alguma aqui", ts=3),
    ]
    clusters, _ = cluster_snapshot(snap(messages), SimilarityConfig(min_text_chars=0))
    net = build_cosharing_network(snap(messages), clusters)
    assert net.edges == {("A", "B"): 1}
