"""Weekly media co-sharing networks and their topological metrics.

Nodes are users, an edge joins two users who posted messages in at least one
common content cluster during the window, and the weight counts how many
distinct clusters they shared (the `min_count` mode instead sums the smaller
of the two posting counts per shared cluster).
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from . import _kernels
from .ingest import Snapshot
from .misinfo import LabelSet
from .neardup import ContentCluster

WEIGHT_MODES = ("distinct", "min_count")


@dataclass(frozen=True)
class NodeAttrs:
    groups_posted_in: frozenset[str]
    msg_count: int
    misinfo_count: int


@dataclass(frozen=True)
class NodeMetrics:
    degree: int
    strength: int
    clustering_coeff: float
    closeness: float
    component_id: int


@dataclass
class CoSharingNetwork:
    window_index: int
    edges: dict[tuple[str, str], int]  # key sorted (u, v), u < v
    node_attrs: dict[str, NodeAttrs] = field(default_factory=dict)

    @property
    def nodes(self) -> set[str]:
        nodes: set[str] = set()
        for u, v in self.edges:
            nodes.add(u)
            nodes.add(v)
        return nodes

    def adjacency(self) -> dict[str, dict[str, int]]:
        adj: dict[str, dict[str, int]] = defaultdict(dict)
        for (u, v), w in sorted(self.edges.items()):
            adj[u][v] = w
            adj[v][u] = w
        return dict(adj)


def build_cosharing_network(
    snapshot: Snapshot,
    clusters: Sequence[ContentCluster],
    labels: LabelSet | None = None,
    weight_mode: str = "distinct",
) -> CoSharingNetwork:
    """Build the window's co-sharing graph from its content clusters.

    Users who shared nothing in common with anyone else are excluded. Node
    attributes (groups posted in, message and misinformation counts) are
    taken over the full window snapshot.
    """
    if weight_mode not in WEIGHT_MODES:
        raise ValueError(f"weight_mode must be one of {WEIGHT_MODES}")
    user_of = {m.msg_id: m.user_id for m in snapshot.messages}
    edges: dict[tuple[str, str], int] = {}
    misinfo_ids = labels.misinfo_cluster_ids if labels is not None else frozenset()
    misinfo_msgs: Counter[str] = Counter()

    for cluster in sorted(clusters, key=lambda c: c.cluster_id):
        posts: Counter[str] = Counter()
        for msg_id in cluster.member_msg_ids:
            user = user_of.get(msg_id)
            if user is not None:
                posts[user] += 1
        if cluster.cluster_id in misinfo_ids:
            for user, n in posts.items():
                misinfo_msgs[user] += n
        users = sorted(posts)
        for i in range(len(users)):
            for j in range(i + 1, len(users)):
                pair = (users[i], users[j])
                inc = 1 if weight_mode == "distinct" else min(posts[pair[0]], posts[pair[1]])
                edges[pair] = edges.get(pair, 0) + inc

    members = set()
    for u, v in edges:
        members.add(u)
        members.add(v)

    groups: dict[str, set[str]] = defaultdict(set)
    msg_count: Counter[str] = Counter()
    for m in snapshot.messages:
        groups[m.user_id].add(m.group_id)
        msg_count[m.user_id] += 1

    node_attrs = {
        user: NodeAttrs(
            groups_posted_in=frozenset(groups.get(user, ())),
            msg_count=msg_count.get(user, 0),
            misinfo_count=misinfo_msgs.get(user, 0),
        )
        for user in sorted(members)
    }
    return CoSharingNetwork(snapshot.window_index, edges, node_attrs)


def node_metrics(network: CoSharingNetwork) -> dict[str, NodeMetrics]:
    """Degree, strength, local clustering, component-corrected closeness.

    Clustering and closeness are computed on the unweighted simple graph;
    closeness(v) = [(|C|-1)/(n-1)] * [(|C|-1)/sum of hop distances] where C
    is v's connected component.
    """
    order = sorted(network.nodes)
    if not order:
        return {}
    index = {u: i for i, u in enumerate(order)}
    n = len(order)
    int_edges = [(index[u], index[v]) for (u, v) in sorted(network.edges)]
    indptr, indices = _kernels.build_csr(n, int_edges)

    degree = [0] * n
    strength = [0] * n
    for (u, v), w in network.edges.items():
        iu, iv = index[u], index[v]
        degree[iu] += 1
        degree[iv] += 1
        strength[iu] += w
        strength[iv] += w

    triangles = _kernels.triangle_counts(indptr, indices, n)
    dist_sums, reach_counts = _kernels.bfs_distance_sums(indptr, indices, n)
    components = _kernels.component_labels(indptr, indices, n)

    metrics: dict[str, NodeMetrics] = {}
    for i, user in enumerate(order):
        k = degree[i]
        cc = (2.0 * triangles[i] / (k * (k - 1))) if k >= 2 else 0.0
        comp_size = int(reach_counts[i])
        if n > 1 and comp_size > 1 and dist_sums[i] > 0:
            closeness = ((comp_size - 1) / (n - 1)) * ((comp_size - 1) / dist_sums[i])
        else:
            closeness = 0.0
        metrics[user] = NodeMetrics(
            degree=k,
            strength=strength[i],
            clustering_coeff=cc,
            closeness=closeness,
            component_id=int(components[i]),
        )
    return metrics


def _mean_sd(values: Iterable[float]) -> tuple[float, float]:
    vals = list(values)
    if not vals:
        return 0.0, 0.0
    mean = sum(vals) / len(vals)
    var = sum((v - mean) ** 2 for v in vals) / len(vals)  # population variance
    return mean, math.sqrt(var)


def network_summary(
    network: CoSharingNetwork, metrics: Mapping[str, NodeMetrics] | None = None
) -> dict:
    """Aggregate topology figures for one window's network."""
    if metrics is None:
        metrics = node_metrics(network)
    if not metrics:
        return {
            "n_nodes": 0,
            "n_edges": 0,
            "n_components": 0,
            "avg_degree": 0.0,
            "sd_degree": 0.0,
            "avg_edge_weight": 0.0,
            "sd_edge_weight": 0.0,
            "avg_clustering": 0.0,
            "sd_clustering": 0.0,
            "groups_covered": 0,
        }
    avg_deg, sd_deg = _mean_sd(m.degree for m in metrics.values())
    avg_w, sd_w = _mean_sd(network.edges.values())
    avg_cc, sd_cc = _mean_sd(m.clustering_coeff for m in metrics.values())
    groups = set()
    for user in metrics:
        attrs = network.node_attrs.get(user)
        if attrs is not None:
            groups.update(attrs.groups_posted_in)
    return {
        "n_nodes": len(metrics),
        "n_edges": len(network.edges),
        "n_components": len({m.component_id for m in metrics.values()}),
        "avg_degree": avg_deg,
        "sd_degree": sd_deg,
        "avg_edge_weight": avg_w,
        "sd_edge_weight": sd_w,
        "avg_clustering": avg_cc,
        "sd_clustering": sd_cc,
        "groups_covered": len(groups),
    }


def node_attrs_to_records(network: CoSharingNetwork) -> list[dict]:
    return [
        {
            "user": user,
            "groups": sorted(attrs.groups_posted_in),
            "msg_count": attrs.msg_count,
            "misinfo_count": attrs.misinfo_count,
        }
        for user, attrs in sorted(network.node_attrs.items())
    ]


def node_attrs_from_records(records: Iterable[dict]) -> dict[str, NodeAttrs]:
    return {
        rec["user"]: NodeAttrs(
            groups_posted_in=frozenset(rec["groups"]),
            msg_count=rec["msg_count"],
            misinfo_count=rec["misinfo_count"],
        )
        for rec in records
    }
