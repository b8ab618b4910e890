"""Deterministic Louvain community detection on backbone graphs.

The quality score is weighted modularity
Q = (1/2m) sum_ij [A_ij - k_i k_j / 2m] delta(c_i, c_j)
over ordered node pairs (diagonal included).
"""

from __future__ import annotations

import random
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Mapping, Sequence

from .ingest import Snapshot
from .misinfo import LabelSet
from .neardup import ContentCluster
from .network import NodeMetrics

PASS_GAIN_EPS = 1e-7


@dataclass(frozen=True)
class CommunityPartition:
    assignment: dict[str, int]  # node -> community id, ids dense from 0
    n_communities: int
    modularity: float
    seed: int


def modularity(adjacency: Mapping[str, Mapping[str, float]], assignment: Mapping[str, int]) -> float:
    """Weighted modularity of a partition; raises on an edgeless graph."""
    for node in adjacency:
        if node not in assignment:
            raise ValueError(f"assignment missing node {node!r}")
    strength = {u: float(sum(nbrs.values())) for u, nbrs in adjacency.items()}
    two_m = sum(strength.values())
    if two_m <= 0:
        raise ValueError("modularity undefined for an edgeless graph")
    intra = 0.0
    tot = defaultdict(float)
    for u, nbrs in adjacency.items():
        cu = assignment[u]
        tot[cu] += strength[u]
        for v, w in nbrs.items():
            if assignment[v] == cu:
                intra += w
    return intra / two_m - sum((t / two_m) ** 2 for t in tot.values())


class _Level:
    """One aggregation level: integer nodes, symmetric weights, full
    diagonal self-loop values."""

    def __init__(self, neighbors: list[dict[int, float]], self_loops: list[float]):
        self.neighbors = neighbors
        self.self_loops = self_loops
        self.n = len(neighbors)
        self.strength = [
            sum(neighbors[i].values()) + self_loops[i] for i in range(self.n)
        ]


def _local_moves(
    level: _Level,
    rng: random.Random,
    two_m: float,
    initial: list[int] | None = None,
) -> tuple[list[int], bool]:
    """Greedy node moves until a sweep gains less than the epsilon.

    Ties in gain go to the lowest community id. Returns (community per node,
    whether any node moved).
    """
    com = list(range(level.n)) if initial is None else list(initial)
    tot = [0.0] * level.n
    for i in range(level.n):
        tot[com[i]] += level.strength[i]
    order = list(range(level.n))
    rng.shuffle(order)
    moved_any = False
    while True:
        pass_gain = 0.0
        for i in order:
            k_i = level.strength[i]
            c_old = com[i]
            links: dict[int, float] = defaultdict(float)
            for j, w in level.neighbors[i].items():
                links[com[j]] += w
            tot[c_old] -= k_i
            best_c = c_old
            best_g = links.get(c_old, 0.0) - tot[c_old] * k_i / two_m
            baseline = best_g
            for c in sorted(links):
                if c == c_old:
                    continue
                g = links[c] - tot[c] * k_i / two_m
                if g > best_g or (g == best_g and c < best_c):
                    best_g, best_c = g, c
            tot[best_c] += k_i
            if best_c != c_old:
                com[i] = best_c
                moved_any = True
                pass_gain += (best_g - baseline) * 2.0 / two_m
        if pass_gain < PASS_GAIN_EPS:
            return com, moved_any


def _aggregate(level: _Level, com: list[int]) -> tuple[_Level, list[int]]:
    """Phase two: collapse communities into supernodes (dense renumbering in
    ascending community-id order). Returns the new level plus the map from
    old supernode index to new supernode index."""
    ids = sorted(set(com))
    remap = {c: i for i, c in enumerate(ids)}
    node_to_super = [remap[c] for c in com]
    n_new = len(ids)
    neighbors: list[dict[int, float]] = [defaultdict(float) for _ in range(n_new)]
    self_loops = [0.0] * n_new
    for i in range(level.n):
        ci = node_to_super[i]
        self_loops[ci] += level.self_loops[i]
        for j, w in level.neighbors[i].items():
            if j < i:
                continue
            cj = node_to_super[j]
            if ci == cj:
                self_loops[ci] += 2.0 * w
            else:
                neighbors[ci][cj] += w
                neighbors[cj][ci] += w
    return _Level([dict(nb) for nb in neighbors], self_loops), node_to_super


def louvain(adjacency: Mapping[str, Mapping[str, float]], seed: int = 42) -> CommunityPartition:
    """Two-phase Louvain with seeded visit order, pinned tie-breaking and a
    final single-node refinement sweep at the original resolution.

    Identical (graph, seed) inputs always produce the identical partition.
    Final community ids are dense, ordered by each community's smallest
    member node.
    """
    nodes = sorted(adjacency)
    index = {u: i for i, u in enumerate(nodes)}
    neighbors: list[dict[int, float]] = [{} for _ in nodes]
    self_loops = [0.0] * len(nodes)
    n_edges = 0
    for u in nodes:
        for v, w in adjacency[u].items():
            if v == u:
                self_loops[index[u]] = float(w)
            else:
                neighbors[index[u]][index[v]] = float(w)
                n_edges += 1
    if n_edges == 0 and not any(self_loops):
        raise ValueError("louvain undefined for an edgeless graph")

    level0 = _Level(neighbors, self_loops)
    two_m = sum(level0.strength)
    rng = random.Random(seed)
    membership = list(range(level0.n))  # original node -> current supernode
    level = level0

    while True:
        prev_n = level.n
        com, moved = _local_moves(level, rng, two_m)
        if not moved:
            break
        level, node_to_super = _aggregate(level, com)
        membership = [node_to_super[m] for m in membership]
        if level.n == prev_n:
            break

    # refinement sweep at the original resolution: aggregation only moves
    # whole blocks, so a final round of single-node moves can still improve Q
    membership, _ = _local_moves(level0, rng, two_m, initial=membership)

    # dense ids ordered by smallest member node
    first_member: dict[int, str] = {}
    for node in nodes:
        c = membership[index[node]]
        if c not in first_member:
            first_member[c] = node
    order = sorted(first_member, key=lambda c: first_member[c])
    remap = {c: i for i, c in enumerate(order)}
    assignment = {node: remap[membership[index[node]]] for node in nodes}

    q = _partition_modularity(level0, membership, two_m)
    return CommunityPartition(
        assignment=assignment,
        n_communities=len(order),
        modularity=q,
        seed=seed,
    )


def _partition_modularity(level: _Level, com: list[int], two_m: float) -> float:
    intra = 0.0
    tot = defaultdict(float)
    for i in range(level.n):
        intra += level.self_loops[i]
        tot[com[i]] += level.strength[i]
        for j, w in level.neighbors[i].items():
            if com[j] == com[i]:
                intra += w
    return intra / two_m - sum((t / two_m) ** 2 for t in tot.values())


def community_profiles(
    partition: CommunityPartition,
    snapshot: Snapshot,
    clusters: Sequence[ContentCluster],
    labels: LabelSet,
    metrics: Mapping[str, NodeMetrics],
) -> list[dict]:
    """Per-community sharing and topology profile.

    Message counts cover everything the members posted in the window;
    topological columns average the members' full-network metrics.
    """
    members: dict[int, list[str]] = defaultdict(list)
    for node in sorted(partition.assignment):
        members[partition.assignment[node]].append(node)

    cluster_of: dict[str, str] = {}
    for c in clusters:
        for mid in c.member_msg_ids:
            cluster_of[mid] = c.cluster_id

    msgs_by_user: Counter[str] = Counter()
    groups_by_user: dict[str, set[str]] = defaultdict(set)
    misinfo_msgs_by_user: Counter[str] = Counter()
    misinfo_clusters_by_user: dict[str, set[str]] = defaultdict(set)
    for m in snapshot.messages:
        msgs_by_user[m.user_id] += 1
        groups_by_user[m.user_id].add(m.group_id)
        cid = cluster_of.get(m.msg_id)
        if cid is not None and cid in labels.misinfo_cluster_ids:
            misinfo_msgs_by_user[m.user_id] += 1
            misinfo_clusters_by_user[m.user_id].add(cid)

    profiles = []
    for cid in sorted(members):
        users = members[cid]
        groups: set[str] = set()
        unique_misinfo: set[str] = set()
        for u in users:
            groups.update(groups_by_user.get(u, ()))
            unique_misinfo.update(misinfo_clusters_by_user.get(u, ()))
        present = [metrics[u] for u in users if u in metrics]
        n_present = len(present)
        profiles.append(
            {
                "community_id": cid,
                "n_users": len(users),
                "n_msgs": sum(msgs_by_user.get(u, 0) for u in users),
                "n_misinfo_msgs": sum(misinfo_msgs_by_user.get(u, 0) for u in users),
                "n_unique_misinfo": len(unique_misinfo),
                "groups_spanned": len(groups),
                "avg_degree": sum(m.degree for m in present) / n_present if n_present else 0.0,
                "avg_strength": sum(m.strength for m in present) / n_present if n_present else 0.0,
                "avg_clustering": (
                    sum(m.clustering_coeff for m in present) / n_present if n_present else 0.0
                ),
                "avg_closeness": (
                    sum(m.closeness for m in present) / n_present if n_present else 0.0
                ),
            }
        )
    return profiles
