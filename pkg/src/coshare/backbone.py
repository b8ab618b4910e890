"""Disparity-filter backbone and periphery extraction.

Each edge is tested at both endpoints against the null hypothesis that a
node's strength is spread uniformly over its edges; the closed-form
significance is alpha = (1 - w/s)^(k-1).
"""

from __future__ import annotations

from dataclasses import dataclass

from .ingest import Snapshot
from .network import CoSharingNetwork, network_summary, node_metrics

SALIENCE_RULES = ("both", "either")


@dataclass(frozen=True, slots=True)
class BackboneEdge:
    u: str
    v: str
    weight: int
    alpha_u: float
    alpha_v: float


@dataclass(frozen=True)
class BackbonePartition:
    pvalue: float
    backbone_edges: tuple[BackboneEdge, ...]
    backbone_nodes: frozenset[str]
    periphery_nodes: frozenset[str]

    @property
    def network_nodes(self) -> frozenset[str]:
        return self.backbone_nodes | self.periphery_nodes


def disparity_alpha(weight: float, node_strength: float, node_degree: int) -> float:
    """Significance of one edge at one endpoint: (1 - w/s)^(k-1), 0^0 = 1.

    Degree-1 nodes always yield 1 (never significant).
    """
    if node_strength <= 0:
        raise ValueError("node_strength must be positive")
    if node_degree < 1:
        raise ValueError("node_degree must be >= 1")
    if weight <= 0 or weight > node_strength:
        raise ValueError("weight must be in (0, node_strength]")
    if node_degree == 1:
        return 1.0
    return (1.0 - weight / node_strength) ** (node_degree - 1)


def extract_backbone(
    network: CoSharingNetwork, pvalue: float = 0.1, salience_rule: str = "both"
) -> BackbonePartition:
    """Split a network into salient edges (backbone) and the rest.

    An edge is salient when alpha < pvalue (strict) at both endpoints; the
    `either` rule relaxes this to one endpoint. Periphery nodes are all
    network nodes not incident to a salient edge.
    """
    if not 0.0 < pvalue < 1.0:
        raise ValueError("pvalue must be in (0, 1)")
    if salience_rule not in SALIENCE_RULES:
        raise ValueError(f"salience_rule must be one of {SALIENCE_RULES}")
    degree: dict[str, int] = {}
    strength: dict[str, int] = {}
    for (u, v), w in network.edges.items():
        degree[u] = degree.get(u, 0) + 1
        degree[v] = degree.get(v, 0) + 1
        strength[u] = strength.get(u, 0) + w
        strength[v] = strength.get(v, 0) + w

    salient: list[BackboneEdge] = []
    nodes: set[str] = set()
    for (u, v), w in sorted(network.edges.items()):
        alpha_u = disparity_alpha(w, strength[u], degree[u])
        alpha_v = disparity_alpha(w, strength[v], degree[v])
        if salience_rule == "both":
            keep = alpha_u < pvalue and alpha_v < pvalue
        else:
            keep = alpha_u < pvalue or alpha_v < pvalue
        if keep:
            salient.append(BackboneEdge(u, v, w, alpha_u, alpha_v))
            nodes.add(u)
            nodes.add(v)
    return BackbonePartition(
        pvalue=pvalue,
        backbone_edges=tuple(salient),
        backbone_nodes=frozenset(nodes),
        periphery_nodes=frozenset(network.nodes - nodes),
    )


def backbone_subnetwork(partition: BackbonePartition, network: CoSharingNetwork) -> CoSharingNetwork:
    """The backbone as a network of its own (weights preserved)."""
    edges = {(e.u, e.v): e.weight for e in partition.backbone_edges}
    attrs = {u: a for u, a in network.node_attrs.items() if u in partition.backbone_nodes}
    return CoSharingNetwork(network.window_index, edges, attrs)


def backbone_coverage(
    partition: BackbonePartition, snapshot: Snapshot, network: CoSharingNetwork
) -> dict:
    """User/group coverage of the backbone plus its topology summary.

    group_coverage counts groups with at least one network member that also
    have at least one backbone member.
    """
    n_network = len(partition.network_nodes)
    user_coverage = len(partition.backbone_nodes) / n_network if n_network else 0.0

    user_groups: dict[str, set[str]] = {}
    for m in snapshot.messages:
        user_groups.setdefault(m.user_id, set()).add(m.group_id)
    network_groups: set[str] = set()
    backbone_groups: set[str] = set()
    for user in partition.network_nodes:
        network_groups.update(user_groups.get(user, ()))
    for user in partition.backbone_nodes:
        backbone_groups.update(user_groups.get(user, ()))
    group_coverage = len(backbone_groups) / len(network_groups) if network_groups else 0.0

    sub = backbone_subnetwork(partition, network)
    summary = network_summary(sub, node_metrics(sub)) if sub.edges else network_summary(sub, {})
    return {
        "user_coverage": user_coverage,
        "group_coverage": group_coverage,
        "n_backbone_nodes": len(partition.backbone_nodes),
        "n_periphery_nodes": len(partition.periphery_nodes),
        "summary": summary,
    }


def backbone_to_records(partition: BackbonePartition) -> list[dict]:
    return [
        {
            "u": e.u,
            "v": e.v,
            "weight": e.weight,
            "alpha_u": e.alpha_u,
            "alpha_v": e.alpha_v,
        }
        for e in partition.backbone_edges
    ]
