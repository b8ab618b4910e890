"""Pipeline stages: each one reads artifacts from disk and writes new ones,
so any stage can be rerun in isolation."""

from __future__ import annotations

import csv
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Mapping

from . import analytics, artifacts
from .backbone import (
    BackboneEdge,
    BackbonePartition,
    backbone_coverage,
    backbone_to_records,
    extract_backbone,
)
from .communities import CommunityPartition, community_profiles, louvain
from .config import PipelineConfig
from .ingest import (
    Snapshot,
    activity_stats,
    filter_short_texts,
    message_from_record,
    message_to_record,
    parse_corpus,
    window_messages,
)
from .misinfo import (
    LabelSet,
    apply_labels,
    facts_from_records,
    flag_suspicious,
    labels_from_records,
    labels_to_records,
    overrides_from_records,
)
from .neardup import (
    ContentCluster,
    SimilarityConfig,
    cluster_snapshot,
    clusters_from_records,
    clusters_to_records,
)
from .network import (
    CoSharingNetwork,
    NodeMetrics,
    build_cosharing_network,
    network_summary,
    node_attrs_from_records,
    node_attrs_to_records,
    node_metrics,
)

STAGES = ("ingest", "dedup", "label", "network", "backbone", "communities", "report", "persistence")

PERSISTENCE_SETS = (
    "users_misinfo",
    "users_top10_misinfo",
    "users_top50_misinfo",
    "groups_misinfo",
    "groups_high_tier",
)

GROUP_LEVEL_THRESHOLDS = (1, 5, 10, 20)


class MissingArtifactError(FileNotFoundError):
    """An upstream stage artifact is absent."""


class DataError(ValueError):
    """Input data is unusable (e.g. strict-mode parse failure)."""


def _require(path: Path) -> Path:
    if not path.is_file():
        raise MissingArtifactError(str(path))
    return path


def _load_snapshot(config: PipelineConfig, index: int) -> Snapshot:
    path = _require(config.window_dir(index) / "messages.jsonl")
    messages = tuple(message_from_record(rec) for rec in artifacts.iter_jsonl(path))
    start = config.origin_timestamp + (index - 1) * config.window_len_seconds
    return Snapshot(index, start, start + config.window_len_seconds, messages)


def _load_clusters(config: PipelineConfig, index: int) -> list[ContentCluster]:
    path = _require(config.window_dir(index) / "clusters.jsonl")
    return clusters_from_records(artifacts.iter_jsonl(path))


def _load_labels(config: PipelineConfig, index: int) -> LabelSet:
    path = _require(config.window_dir(index) / "labels.jsonl")
    return labels_from_records(artifacts.iter_jsonl(path))


def _load_network(config: PipelineConfig, index: int) -> CoSharingNetwork:
    edges_path = _require(config.window_dir(index) / "edges.txt")
    attrs_path = _require(config.window_dir(index) / "node_attrs.jsonl")
    edges = artifacts.read_edge_list(edges_path)
    attrs = node_attrs_from_records(artifacts.iter_jsonl(attrs_path))
    return CoSharingNetwork(index, edges, attrs)


def _load_node_metrics(config: PipelineConfig, index: int) -> dict[str, NodeMetrics]:
    path = _require(config.window_dir(index) / "node_metrics.csv")
    metrics: dict[str, NodeMetrics] = {}
    with path.open(encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            metrics[row["user"]] = NodeMetrics(
                degree=int(row["degree"]),
                strength=int(row["strength"]),
                clustering_coeff=float(row["clustering"]),
                closeness=float(row["closeness"]),
                component_id=int(row["component"]),
            )
    return metrics


def _load_backbone(config: PipelineConfig, index: int, network_nodes: set[str]) -> BackbonePartition:
    path = _require(config.window_dir(index) / "backbone_edges.jsonl")
    edges = tuple(
        BackboneEdge(rec["u"], rec["v"], rec["weight"], rec["alpha_u"], rec["alpha_v"])
        for rec in artifacts.iter_jsonl(path)
    )
    nodes = frozenset(n for e in edges for n in (e.u, e.v))
    return BackbonePartition(
        pvalue=config.backbone_pvalue,
        backbone_edges=edges,
        backbone_nodes=nodes,
        periphery_nodes=frozenset(network_nodes - nodes),
    )


def _load_partition(config: PipelineConfig, index: int) -> CommunityPartition:
    csv_path = _require(config.window_dir(index) / "communities.csv")
    summary = artifacts.load_json(_require(config.window_dir(index) / "communities_summary.json"))
    assignment: dict[str, int] = {}
    with csv_path.open(encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            assignment[row["user"]] = int(row["community"])
    return CommunityPartition(
        assignment=assignment,
        n_communities=summary["n_communities"],
        modularity=summary["modularity"],
        seed=summary["seed"],
    )


def _similarity_config(config: PipelineConfig) -> SimilarityConfig:
    stopwords = None
    if config.stopwords_path is not None:
        words = _require(config.stopwords_path).read_text(encoding="utf-8").split()
        stopwords = frozenset(w.lower() for w in words)
    return SimilarityConfig(
        jaccard_threshold=config.jaccard_threshold,
        min_text_chars=config.min_text_chars,
        stopwords=stopwords,
    )


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


def stage_ingest(config: PipelineConfig, strict: bool = False) -> None:
    corpus = _require(config.corpus_path)
    with corpus.open(encoding="utf-8") as fh:
        messages, report = parse_corpus(fh, strict=strict)
    snapshots, window_report = window_messages(
        messages, config.origin_timestamp, config.window_len_seconds, config.n_windows
    )
    config.output_dir.mkdir(parents=True, exist_ok=True)
    artifacts.dump_jsonl(
        ({"line_no": r.line_no, "reason": r.reason} for r in report.rejections),
        config.output_dir / "rejections.jsonl",
    )
    per_window = []
    for snap in snapshots:
        wdir = config.window_dir(snap.window_index)
        wdir.mkdir(parents=True, exist_ok=True)
        artifacts.dump_jsonl(
            (message_to_record(m) for m in snap.messages), wdir / "messages.jsonl"
        )
        stats = activity_stats(snap)
        per_window.append(
            {
                "window_index": snap.window_index,
                "start": snap.start,
                "end": snap.end,
                "n_messages": len(snap.messages),
                **asdict(stats),
            }
        )
    artifacts.dump_json(
        {
            "n_lines": report.n_lines,
            "n_parsed": report.n_parsed,
            "n_rejected": len(report.rejections),
            "windowing": asdict(window_report),
            "windows": per_window,
        },
        config.output_dir / "ingest_summary.json",
    )


def stage_dedup(config: PipelineConfig, index: int) -> None:
    snapshot = _load_snapshot(config, index)
    simconfig = _similarity_config(config)
    filtered = filter_short_texts(snapshot, config.min_text_chars)
    matrix_dir = config.matrix_dir if config.matrix_dir is not None else config.corpus_path.parent
    clusters, rejections = cluster_snapshot(filtered, simconfig, matrix_dir=matrix_dir)
    wdir = config.window_dir(index)
    artifacts.dump_jsonl(clusters_to_records(clusters), wdir / "clusters.jsonl")
    artifacts.dump_jsonl(
        ({"msg_id": r.msg_id, "reason": r.reason} for r in rejections),
        wdir / "cluster_rejections.jsonl",
    )


def stage_label(config: PipelineConfig, index: int) -> None:
    clusters = _load_clusters(config, index)
    snapshot = _load_snapshot(config, index)
    facts = []
    if config.facts_path is not None:
        facts = facts_from_records(artifacts.iter_jsonl(_require(config.facts_path)))
    overrides = []
    if config.overrides_path is not None:
        overrides = overrides_from_records(artifacts.iter_jsonl(_require(config.overrides_path)))

    text_of = {m.msg_id: m.text_body or "" for m in snapshot.messages if m.media_type == "text"}
    cluster_texts = {
        c.cluster_id: text_of[c.representative_msg_id]
        for c in clusters
        if c.media_type == "text" and c.representative_msg_id in text_of
    }
    suspicious = flag_suspicious(
        cluster_texts, facts, config.tfidf_threshold, _similarity_config(config)
    )
    labels, warnings = apply_labels(clusters, suspicious, overrides)
    wdir = config.window_dir(index)
    artifacts.dump_jsonl(labels_to_records(labels), wdir / "labels.jsonl")
    artifacts.dump_jsonl(({"warning": w} for w in warnings), wdir / "label_warnings.jsonl")


def stage_network(config: PipelineConfig, index: int) -> None:
    snapshot = _load_snapshot(config, index)
    clusters = _load_clusters(config, index)
    labels = _load_labels(config, index)
    network = build_cosharing_network(snapshot, clusters, labels, config.weight_mode)
    metrics = node_metrics(network)
    wdir = config.window_dir(index)
    artifacts.write_edge_list(wdir / "edges.txt", network.edges)
    artifacts.dump_jsonl(node_attrs_to_records(network), wdir / "node_attrs.jsonl")
    artifacts.write_csv(
        wdir / "node_metrics.csv",
        ["user", "degree", "strength", "clustering", "closeness", "component"],
        (
            [u, m.degree, m.strength, m.clustering_coeff, m.closeness, m.component_id]
            for u, m in sorted(metrics.items())
        ),
    )
    artifacts.dump_json(network_summary(network, metrics), wdir / "network_summary.json")


def stage_backbone(config: PipelineConfig, index: int) -> None:
    network = _load_network(config, index)
    snapshot = _load_snapshot(config, index)
    partition = extract_backbone(network, config.backbone_pvalue, config.salience_rule)
    coverage = backbone_coverage(partition, snapshot, network)
    wdir = config.window_dir(index)
    artifacts.dump_jsonl(backbone_to_records(partition), wdir / "backbone_edges.jsonl")
    artifacts.dump_json(coverage, wdir / "backbone_summary.json")


def stage_communities(config: PipelineConfig, index: int) -> None:
    network = _load_network(config, index)
    partition = _load_backbone(config, index, network.nodes)
    snapshot = _load_snapshot(config, index)
    clusters = _load_clusters(config, index)
    labels = _load_labels(config, index)
    metrics = _load_node_metrics(config, index)

    adjacency: dict[str, dict[str, float]] = defaultdict(dict)
    for e in partition.backbone_edges:
        adjacency[e.u][e.v] = float(e.weight)
        adjacency[e.v][e.u] = float(e.weight)

    wdir = config.window_dir(index)
    if adjacency:
        communities = louvain(dict(adjacency), config.louvain_seed)
    else:
        communities = CommunityPartition({}, 0, 0.0, config.louvain_seed)
    profiles = community_profiles(communities, snapshot, clusters, labels, metrics)

    artifacts.write_csv(
        wdir / "communities.csv",
        ["user", "community"],
        ([u, c] for u, c in sorted(communities.assignment.items())),
    )
    artifacts.dump_json(
        {
            "n_communities": communities.n_communities,
            "modularity": communities.modularity,
            "seed": communities.seed,
        },
        wdir / "communities_summary.json",
    )
    artifacts.write_csv(
        wdir / "community_profiles.csv",
        [
            "community_id",
            "n_users",
            "n_msgs",
            "n_misinfo_msgs",
            "n_unique_misinfo",
            "groups_spanned",
            "avg_degree",
            "avg_strength",
            "avg_clustering",
            "avg_closeness",
        ],
        ([p[k] for k in (
            "community_id",
            "n_users",
            "n_msgs",
            "n_misinfo_msgs",
            "n_unique_misinfo",
            "groups_spanned",
            "avg_degree",
            "avg_strength",
            "avg_clustering",
            "avg_closeness",
        )] for p in profiles),
    )


def _try_spearman(xs, ys) -> float | None:
    try:
        return analytics.spearman(xs, ys)
    except ValueError:
        return None


def stage_report(config: PipelineConfig, index: int) -> None:
    snapshot = _load_snapshot(config, index)
    clusters = _load_clusters(config, index)
    labels = _load_labels(config, index)
    network = _load_network(config, index)
    metrics = _load_node_metrics(config, index)
    partition = _load_backbone(config, index, network.nodes)
    communities = _load_partition(config, index)
    wdir = config.window_dir(index)
    net_summary = artifacts.load_json(_require(wdir / "network_summary.json"))
    bb_summary = artifacts.load_json(_require(wdir / "backbone_summary.json"))
    profiles = community_profiles(communities, snapshot, clusters, labels, metrics)

    stats, user_aggregates = analytics.user_misinfo_stats(snapshot, clusters, labels, network)
    categories = analytics.categorize_users(stats, config.top_k)
    levels = analytics.participation_levels(stats)
    participation = analytics.backbone_participation(partition, snapshot, clusters, labels, stats)

    cluster_of: dict[str, str] = {}
    media_of: dict[str, str] = {}
    for c in clusters:
        media_of[c.cluster_id] = c.media_type
        for mid in c.member_msg_ids:
            cluster_of[mid] = c.cluster_id

    n_misinfo_msgs = 0
    by_media_msgs: Counter[str] = Counter()
    shared_misinfo_clusters: set[str] = set()
    for m in snapshot.messages:
        cid = cluster_of.get(m.msg_id)
        if cid is not None and cid in labels.misinfo_cluster_ids:
            n_misinfo_msgs += 1
            by_media_msgs[media_of[cid]] += 1
            shared_misinfo_clusters.add(cid)
    by_media_unique: Counter[str] = Counter(media_of[c] for c in shared_misinfo_clusters)
    audience = analytics.potential_audience(labels, snapshot, clusters)
    active_users = len({m.user_id for m in snapshot.messages})

    group_rows = analytics.group_profiles(snapshot, clusters, labels, network, metrics)
    group_misinfo = {g["group_id"]: g["n_misinfo_msgs"] for g in group_rows}
    group_tiers = analytics.tier_entities(group_misinfo)
    comm_misinfo = {str(p["community_id"]): p["n_misinfo_msgs"] for p in profiles}
    comm_tiers = analytics.tier_entities(comm_misinfo)

    ranking = analytics.rank_by_misinfo(stats)
    top_misinfo_users = [u for u in sorted(stats) if categories[u] == "top_misinfo"]
    total_mmsgs_network = sum(s.misinfo_msgs for s in stats.values())
    top_share = (
        sum(stats[u].misinfo_msgs for u in top_misinfo_users) / total_mmsgs_network
        if total_mmsgs_network
        else None
    )
    total_introductions = sum(s.introductions for s in stats.values())
    top_intro_share = (
        sum(stats[u].introductions for u in top_misinfo_users) / total_introductions
        if total_introductions
        else None
    )

    # groups with at least one network member ("co-sharing groups")
    cosharing_groups = {
        g["group_id"] for g in group_rows if g["n_members_in_network"] > 0
    }
    misinfo_groups = [g for g in group_rows if g["n_misinfo_msgs"] > 0]
    group_levels = {
        f"gte_{t}": (
            sum(1 for g in misinfo_groups if g["n_misinfo_msgs"] >= t) / len(cosharing_groups)
            if cosharing_groups
            else 0.0
        )
        for t in GROUP_LEVEL_THRESHOLDS
    }
    tier_share_groups = _tier_shares(group_misinfo, group_tiers)
    tier_share_comms = _tier_shares(comm_misinfo, comm_tiers)

    misinfo_comms = [p for p in profiles if p["n_misinfo_msgs"] > 0]

    report = {
        "window_index": index,
        "start": snapshot.start,
        "end": snapshot.end,
        "activity": asdict(activity_stats(snapshot)),
        "misinfo": {
            "n_misinfo_msgs": n_misinfo_msgs,
            "n_unique_misinfo": len(shared_misinfo_clusters),
            # everything unlabeled is unchecked content, never "true"
            "n_unchecked_clusters": len(clusters) - len(labels.misinfo_cluster_ids),
            "by_media_msgs": dict(sorted(by_media_msgs.items())),
            "by_media_unique": dict(sorted(by_media_unique.items())),
            "potential_audience": audience,
            "potential_audience_pct": audience / active_users if active_users else 0.0,
        },
        "network": net_summary,
        "backbone": bb_summary,
        "backbone_participation": participation,
        "users": {
            **user_aggregates,
            "top_misinfo_users": top_misinfo_users,
            "top_misinfo_msg_share": top_share,
            "top_misinfo_introduction_share": top_intro_share,
            "participation_levels": levels,
        },
        "groups": {
            "n_groups": len(group_rows),
            "n_cosharing_groups": len(cosharing_groups),
            "n_groups_with_misinfo": len(misinfo_groups),
            "pct_cosharing_groups_with_misinfo": (
                sum(1 for g in misinfo_groups if g["group_id"] in cosharing_groups)
                / len(cosharing_groups)
                if cosharing_groups
                else 0.0
            ),
            "avg_misinfo_msgs": analytics._mean([g["n_misinfo_msgs"] for g in misinfo_groups]),
            "sd_misinfo_msgs": analytics._sd([g["n_misinfo_msgs"] for g in misinfo_groups]),
            "max_misinfo_msgs": max((g["n_misinfo_msgs"] for g in misinfo_groups), default=0),
            "avg_members": analytics._mean([g["n_members"] for g in misinfo_groups]),
            "sd_members": analytics._sd([g["n_members"] for g in misinfo_groups]),
            "max_members": max((g["n_members"] for g in misinfo_groups), default=0),
            "participation_levels": group_levels,
            "tier_misinfo_share": tier_share_groups,
            "spearman_misinfo_vs_msgs": _try_spearman(
                [g["n_misinfo_msgs"] for g in misinfo_groups],
                [g["n_msgs"] for g in misinfo_groups],
            ),
            "spearman_misinfo_vs_members": _try_spearman(
                [g["n_misinfo_msgs"] for g in misinfo_groups],
                [g["n_members"] for g in misinfo_groups],
            ),
        },
        "communities": {
            "n_communities": communities.n_communities,
            "modularity": communities.modularity,
            "n_with_misinfo": len(misinfo_comms),
            "pct_with_misinfo": (
                len(misinfo_comms) / communities.n_communities if communities.n_communities else 0.0
            ),
            "avg_misinfo_msgs": analytics._mean([p["n_misinfo_msgs"] for p in misinfo_comms]),
            "sd_misinfo_msgs": analytics._sd([p["n_misinfo_msgs"] for p in misinfo_comms]),
            "max_misinfo_msgs": max((p["n_misinfo_msgs"] for p in misinfo_comms), default=0),
            "avg_users": analytics._mean([p["n_users"] for p in profiles]),
            "sd_users": analytics._sd([p["n_users"] for p in profiles]),
            "max_users": max((p["n_users"] for p in profiles), default=0),
            "avg_groups": analytics._mean([p["groups_spanned"] for p in profiles]),
            "sd_groups": analytics._sd([p["groups_spanned"] for p in profiles]),
            "max_groups": max((p["groups_spanned"] for p in profiles), default=0),
            "tier_misinfo_share": tier_share_comms,
            "spearman_misinfo_vs_msgs": _try_spearman(
                [p["n_misinfo_msgs"] for p in misinfo_comms],
                [p["n_msgs"] for p in misinfo_comms],
            ),
            "spearman_misinfo_vs_users": _try_spearman(
                [p["n_misinfo_msgs"] for p in misinfo_comms],
                [p["n_users"] for p in misinfo_comms],
            ),
            "spearman_misinfo_vs_groups": _try_spearman(
                [p["n_misinfo_msgs"] for p in misinfo_comms],
                [p["groups_spanned"] for p in misinfo_comms],
            ),
        },
        "sets": {
            "users_misinfo": sorted(u for u, s in stats.items() if s.misinfo_msgs > 0),
            "users_top10_misinfo": sorted(ranking[:10]),
            "users_top50_misinfo": sorted(ranking[:50]),
            "groups_misinfo": sorted(g["group_id"] for g in misinfo_groups),
            "groups_high_tier": sorted(g for g, t in group_tiers.items() if t == "high"),
        },
    }
    artifacts.dump_json(report, wdir / "report.json")
    _write_tables(wdir, stats, categories, metrics, partition, group_rows, group_tiers, profiles, comm_tiers)
    _write_cdfs(wdir, stats, categories, metrics, group_rows, group_tiers, profiles, comm_tiers)


def _tier_shares(misinfo_counts: Mapping[str, int], tiers: Mapping[str, str]) -> dict:
    total = sum(misinfo_counts[e] for e in tiers)
    shares = {}
    for tier in analytics.VOLUME_TIERS:
        amount = sum(misinfo_counts[e] for e, t in tiers.items() if t == tier)
        shares[tier] = amount / total if total else 0.0
    return shares


def _write_tables(wdir, stats, categories, metrics, partition, group_rows, group_tiers, profiles, comm_tiers):
    tables = wdir / "tables"
    tables.mkdir(exist_ok=True)
    artifacts.write_csv(
        tables / "users.csv",
        [
            "user",
            "category",
            "misinfo_msgs",
            "unique_misinfo",
            "total_msgs",
            "introductions",
            "degree",
            "strength",
            "clustering",
            "closeness",
            "in_backbone",
        ],
        (
            [
                u,
                categories[u],
                s.misinfo_msgs,
                s.unique_misinfo,
                s.total_msgs,
                s.introductions,
                metrics[u].degree,
                metrics[u].strength,
                metrics[u].clustering_coeff,
                metrics[u].closeness,
                int(u in partition.backbone_nodes),
            ]
            for u, s in sorted(stats.items())
        ),
    )
    artifacts.write_csv(
        tables / "groups.csv",
        [
            "group",
            "tier",
            "n_members",
            "n_msgs",
            "n_misinfo_msgs",
            "n_misinfo_posters",
            "non_sharing_fraction",
            "n_members_in_network",
            "avg_degree",
            "avg_strength",
            "avg_clustering",
            "avg_closeness",
        ],
        (
            [
                g["group_id"],
                group_tiers.get(g["group_id"], "none"),
                g["n_members"],
                g["n_msgs"],
                g["n_misinfo_msgs"],
                g["n_misinfo_posters"],
                g["non_sharing_fraction"],
                g["n_members_in_network"],
                _opt(g["avg_degree"]),
                _opt(g["avg_strength"]),
                _opt(g["avg_clustering"]),
                _opt(g["avg_closeness"]),
            ]
            for g in group_rows
        ),
    )
    artifacts.write_csv(
        tables / "communities.csv",
        [
            "community_id",
            "tier",
            "n_users",
            "n_msgs",
            "n_misinfo_msgs",
            "n_unique_misinfo",
            "groups_spanned",
            "avg_degree",
            "avg_strength",
            "avg_clustering",
            "avg_closeness",
        ],
        (
            [
                p["community_id"],
                comm_tiers.get(str(p["community_id"]), "none"),
                p["n_users"],
                p["n_msgs"],
                p["n_misinfo_msgs"],
                p["n_unique_misinfo"],
                p["groups_spanned"],
                p["avg_degree"],
                p["avg_strength"],
                p["avg_clustering"],
                p["avg_closeness"],
            ]
            for p in profiles
        ),
    )


def _opt(value):
    return "" if value is None else value


def _write_cdf(path: Path, values) -> None:
    rows = analytics.cdf(values) if values else []
    artifacts.write_csv(path, ["x", "p"], ([x, p] for x, p in rows))


def _write_cdfs(wdir, stats, categories, metrics, group_rows, group_tiers, profiles, comm_tiers):
    cdir = wdir / "cdf"
    cdir.mkdir(exist_ok=True)
    for cat in analytics.USER_CATEGORIES:
        users = [u for u in sorted(stats) if categories[u] == cat]
        _write_cdf(cdir / f"user_total_msgs__{cat}.csv", [stats[u].total_msgs for u in users])
        _write_cdf(cdir / f"user_misinfo_msgs__{cat}.csv", [stats[u].misinfo_msgs for u in users])
        _write_cdf(cdir / f"user_introductions__{cat}.csv", [stats[u].introductions for u in users])
        _write_cdf(cdir / f"user_degree__{cat}.csv", [metrics[u].degree for u in users])
        _write_cdf(cdir / f"user_strength__{cat}.csv", [metrics[u].strength for u in users])
        _write_cdf(cdir / f"user_closeness__{cat}.csv", [metrics[u].closeness for u in users])
    for tier in analytics.VOLUME_TIERS:
        rows = [g for g in group_rows if group_tiers.get(g["group_id"]) == tier]
        _write_cdf(cdir / f"group_total_msgs__{tier}.csv", [g["n_msgs"] for g in rows])
        _write_cdf(cdir / f"group_misinfo_msgs__{tier}.csv", [g["n_misinfo_msgs"] for g in rows])
        _write_cdf(cdir / f"group_members__{tier}.csv", [g["n_members"] for g in rows])
        with_net = [g for g in rows if g["n_members_in_network"] > 0]
        _write_cdf(cdir / f"group_degree__{tier}.csv", [g["avg_degree"] for g in with_net])
        _write_cdf(cdir / f"group_strength__{tier}.csv", [g["avg_strength"] for g in with_net])
        _write_cdf(cdir / f"group_closeness__{tier}.csv", [g["avg_closeness"] for g in with_net])
        comms = [p for p in profiles if comm_tiers.get(str(p["community_id"])) == tier]
        _write_cdf(cdir / f"comm_total_msgs__{tier}.csv", [p["n_msgs"] for p in comms])
        _write_cdf(cdir / f"comm_misinfo_msgs__{tier}.csv", [p["n_misinfo_msgs"] for p in comms])
        _write_cdf(cdir / f"comm_users__{tier}.csv", [p["n_users"] for p in comms])
        _write_cdf(cdir / f"comm_groups__{tier}.csv", [p["groups_spanned"] for p in comms])
        _write_cdf(cdir / f"comm_degree__{tier}.csv", [p["avg_degree"] for p in comms])
        _write_cdf(cdir / f"comm_strength__{tier}.csv", [p["avg_strength"] for p in comms])
        _write_cdf(cdir / f"comm_clustering__{tier}.csv", [p["avg_clustering"] for p in comms])
        _write_cdf(cdir / f"comm_closeness__{tier}.csv", [p["avg_closeness"] for p in comms])


def stage_persistence(config: PipelineConfig) -> None:
    window_sets: list[dict[str, list[str]]] = []
    for index in range(1, config.n_windows + 1):
        report = artifacts.load_json(_require(config.window_dir(index) / "report.json"))
        window_sets.append(report["sets"])
    rows = []
    result: dict[str, dict[str, float | None]] = {name: {} for name in PERSISTENCE_SETS}
    for index in range(2, config.n_windows + 1):
        prev, curr = window_sets[index - 2], window_sets[index - 1]
        for name in PERSISTENCE_SETS:
            frac = analytics.persistence(prev[name], curr[name])
            result[name][str(index)] = frac
            rows.append([name, index, "" if frac is None else frac])
    artifacts.dump_json(result, config.output_dir / "persistence.json")
    artifacts.write_csv(
        config.output_dir / "persistence.csv", ["set", "window", "persistence"], rows
    )


# ---------------------------------------------------------------------------
# Stage driver
# ---------------------------------------------------------------------------

_PER_WINDOW = {
    "dedup": stage_dedup,
    "label": stage_label,
    "network": stage_network,
    "backbone": stage_backbone,
    "communities": stage_communities,
    "report": stage_report,
}


def _run_window_stage(config: PipelineConfig, name: str, index: int) -> None:
    _PER_WINDOW[name](config, index)


def run_stage(config: PipelineConfig, name: str, jobs: int = 1, strict: bool = False) -> None:
    """Run one pipeline stage (or `all`) against the configured artifacts."""
    if name == "all":
        for stage in STAGES:
            run_stage(config, stage, jobs=jobs, strict=strict)
        return
    if name == "ingest":
        stage_ingest(config, strict=strict)
        return
    if name == "persistence":
        stage_persistence(config)
        return
    if name not in _PER_WINDOW:
        raise ValueError(f"unknown stage: {name}")
    indices = range(1, config.n_windows + 1)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_window_stage, config, name, i) for i in indices]
            for f in futures:
                f.result()
    else:
        for i in indices:
            _run_window_stage(config, name, i)
