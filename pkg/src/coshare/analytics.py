"""Hierarchical characterization: per-user, per-group and per-community
misinformation statistics, top-k categories, volume tiers, correlations,
CDF series and cross-window persistence."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .backbone import BackbonePartition
from .ingest import Snapshot
from .misinfo import LabelSet
from .neardup import ContentCluster
from .network import CoSharingNetwork, NodeMetrics

CATEGORY_TOP_MISINFO = "top_misinfo"
CATEGORY_TOP_ALL = "top_all"
CATEGORY_OTHERS = "others"
USER_CATEGORIES = (CATEGORY_TOP_MISINFO, CATEGORY_TOP_ALL, CATEGORY_OTHERS)

TIER_HIGH = "high"
TIER_MEDIUM = "medium"
TIER_LOW = "low"
VOLUME_TIERS = (TIER_HIGH, TIER_MEDIUM, TIER_LOW)


@dataclass(frozen=True)
class UserStats:
    user_id: str
    misinfo_msgs: int
    unique_misinfo: int
    total_msgs: int
    introductions: int


def user_misinfo_stats(
    snapshot: Snapshot,
    clusters: Sequence[ContentCluster],
    labels: LabelSet,
    network: CoSharingNetwork,
) -> tuple[dict[str, UserStats], dict]:
    """Per-user sharing stats for the users present in the network.

    introductions counts the clusters whose earliest post in the window came
    from the user. Aggregates cover the users with at least one
    misinformation message.
    """
    users = sorted(network.nodes)
    cluster_of: dict[str, str] = {}
    for c in clusters:
        for mid in c.member_msg_ids:
            cluster_of[mid] = c.cluster_id

    total: Counter[str] = Counter()
    misinfo: Counter[str] = Counter()
    uniq: dict[str, set[str]] = defaultdict(set)
    first_post: dict[str, tuple[tuple[int, str], str]] = {}
    for m in snapshot.messages:
        total[m.user_id] += 1
        cid = cluster_of.get(m.msg_id)
        if cid is None:
            continue
        key = (m.timestamp, m.msg_id)
        if cid not in first_post or key < first_post[cid][0]:
            first_post[cid] = (key, m.user_id)
        if cid in labels.misinfo_cluster_ids:
            misinfo[m.user_id] += 1
            uniq[m.user_id].add(cid)
    introductions: Counter[str] = Counter(user for _, user in first_post.values())

    stats = {
        u: UserStats(
            user_id=u,
            misinfo_msgs=misinfo.get(u, 0),
            unique_misinfo=len(uniq.get(u, ())),
            total_msgs=total.get(u, 0),
            introductions=introductions.get(u, 0),
        )
        for u in users
    }

    sharers = [s for s in stats.values() if s.misinfo_msgs > 0]
    counts = [s.misinfo_msgs for s in sharers]
    uniq_counts = [s.unique_misinfo for s in sharers]
    aggregates = {
        "n_users": len(users),
        "n_users_with_misinfo": len(sharers),
        "pct_users_with_misinfo": len(sharers) / len(users) if users else 0.0,
        "avg_misinfo_msgs": _mean(counts),
        "sd_misinfo_msgs": _sd(counts),
        "max_misinfo_msgs": max(counts, default=0),
        "avg_unique_misinfo": _mean(uniq_counts),
        "sd_unique_misinfo": _sd(uniq_counts),
        "max_unique_misinfo": max(uniq_counts, default=0),
    }
    return stats, aggregates


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def _sd(values: Sequence[float]) -> float:
    if not values:
        return 0.0
    mu = _mean(values)
    return math.sqrt(sum((v - mu) ** 2 for v in values) / len(values))


def rank_by_misinfo(stats: Mapping[str, UserStats]) -> list[str]:
    """Users with >=1 misinformation message, most engaged first.

    Ordering pinned to (misinfo desc, total desc, user id asc).
    """
    sharers = [s for s in stats.values() if s.misinfo_msgs > 0]
    sharers.sort(key=lambda s: (-s.misinfo_msgs, -s.total_msgs, s.user_id))
    return [s.user_id for s in sharers]


def categorize_users(stats: Mapping[str, UserStats], k: int = 10) -> dict[str, str]:
    """Three user categories: top-k misinformation sharers, top-k overall
    sharers among the rest, and everyone else."""
    if k < 1:
        raise ValueError("k must be >= 1")
    top_misinfo = set(rank_by_misinfo(stats)[:k])
    rest = [s for s in stats.values() if s.user_id not in top_misinfo]
    rest.sort(key=lambda s: (-s.total_msgs, -s.misinfo_msgs, s.user_id))
    top_all = {s.user_id for s in rest[:k]}
    categories = {}
    for user in sorted(stats):
        if user in top_misinfo:
            categories[user] = CATEGORY_TOP_MISINFO
        elif user in top_all:
            categories[user] = CATEGORY_TOP_ALL
        else:
            categories[user] = CATEGORY_OTHERS
    return categories


def participation_levels(
    stats: Mapping[str, UserStats],
    thresholds: Sequence[float] = (0.01, 0.05, 0.1, 0.2, 0.3, 0.5),
) -> dict[str, float]:
    """Fraction of users at each participation level.

    gte_1_msg is the share of users with any misinformation; gte_<x>pct the
    share whose misinformation ratio is at least x.
    """
    for x in thresholds:
        if not 0.0 < x <= 1.0:
            raise ValueError("thresholds must be in (0, 1]")
    n = len(stats)
    levels: dict[str, float] = {}
    levels["gte_1_msg"] = (
        sum(1 for s in stats.values() if s.misinfo_msgs >= 1) / n if n else 0.0
    )
    for x in thresholds:
        hits = sum(
            1
            for s in stats.values()
            if s.total_msgs > 0 and s.misinfo_msgs / s.total_msgs >= x
        )
        levels[f"gte_{_pct_label(x)}pct"] = hits / n if n else 0.0
    return levels


def _pct_label(x: float) -> str:
    pct = x * 100
    return str(int(pct)) if pct == int(pct) else str(pct)


def tier_entities(misinfo_counts: Mapping[str, int]) -> dict[str, str]:
    """high / medium / low volume tiers over entities with >=1 misinfo
    message: high = top ceil(25%), low = bottom ceil(25%) (truncated to
    whatever high left over), medium = the rest."""
    entities = [(eid, n) for eid, n in misinfo_counts.items() if n > 0]
    if not entities:
        return {}
    entities.sort(key=lambda en: (-en[1], en[0]))
    n = len(entities)
    q = math.ceil(0.25 * n)
    n_low = min(q, n - q)
    tiers: dict[str, str] = {}
    for i, (eid, _) in enumerate(entities):
        if i < q:
            tiers[eid] = TIER_HIGH
        elif i >= n - n_low:
            tiers[eid] = TIER_LOW
        else:
            tiers[eid] = TIER_MEDIUM
    return tiers


def group_profiles(
    snapshot: Snapshot,
    clusters: Sequence[ContentCluster],
    labels: LabelSet,
    network: CoSharingNetwork,
    metrics: Mapping[str, NodeMetrics],
) -> list[dict]:
    """Per-group sharing stats plus member-averaged network metrics.

    Group members are the users who posted in the group during the window;
    topological averages run over the members present in the network.
    """
    cluster_of: dict[str, str] = {}
    for c in clusters:
        for mid in c.member_msg_ids:
            cluster_of[mid] = c.cluster_id

    posters: dict[str, set[str]] = defaultdict(set)
    msgs: Counter[str] = Counter()
    misinfo_msgs: Counter[str] = Counter()
    misinfo_posters: dict[str, set[str]] = defaultdict(set)
    for m in snapshot.messages:
        posters[m.group_id].add(m.user_id)
        msgs[m.group_id] += 1
        cid = cluster_of.get(m.msg_id)
        if cid is not None and cid in labels.misinfo_cluster_ids:
            misinfo_msgs[m.group_id] += 1
            misinfo_posters[m.group_id].add(m.user_id)

    profiles = []
    for group in sorted(posters):
        members = posters[group]
        n_members = len(members)
        present = [metrics[u] for u in sorted(members) if u in metrics]
        n_present = len(present)
        n_sharing = len(misinfo_posters.get(group, ()))
        profiles.append(
            {
                "group_id": group,
                "n_members": n_members,
                "n_msgs": msgs[group],
                "n_misinfo_msgs": misinfo_msgs.get(group, 0),
                "n_misinfo_posters": n_sharing,
                "non_sharing_fraction": (n_members - n_sharing) / n_members if n_members else 0.0,
                "n_members_in_network": n_present,
                "avg_degree": _mean([m.degree for m in present]) if present else None,
                "avg_strength": _mean([m.strength for m in present]) if present else None,
                "avg_clustering": (
                    _mean([m.clustering_coeff for m in present]) if present else None
                ),
                "avg_closeness": _mean([m.closeness for m in present]) if present else None,
            }
        )
    return profiles


def potential_audience(labels: LabelSet, snapshot: Snapshot, clusters: Sequence[ContentCluster]) -> int:
    """Number of distinct posters across the groups where misinformation
    appeared during the window."""
    cluster_of: dict[str, str] = {}
    for c in clusters:
        for mid in c.member_msg_ids:
            cluster_of[mid] = c.cluster_id
    misinfo_groups: set[str] = set()
    for m in snapshot.messages:
        cid = cluster_of.get(m.msg_id)
        if cid is not None and cid in labels.misinfo_cluster_ids:
            misinfo_groups.add(m.group_id)
    audience: set[str] = set()
    for m in snapshot.messages:
        if m.group_id in misinfo_groups:
            audience.add(m.user_id)
    return len(audience)


def backbone_participation(
    partition: BackbonePartition,
    snapshot: Snapshot,
    clusters: Sequence[ContentCluster],
    labels: LabelSet,
    stats: Mapping[str, UserStats],
) -> dict:
    """How much of the misinformation activity sits on the backbone."""
    backbone = partition.backbone_nodes
    sharers = {u for u, s in stats.items() if s.misinfo_msgs > 0}
    backbone_sharers = sharers & backbone
    ranking = rank_by_misinfo(stats)
    top10 = set(ranking[:10])
    top50 = set(ranking[:50])

    total_mmsgs = sum(s.misinfo_msgs for s in stats.values())
    backbone_mmsgs = sum(stats[u].misinfo_msgs for u in sorted(backbone_sharers))

    cluster_of: dict[str, str] = {}
    for c in clusters:
        for mid in c.member_msg_ids:
            cluster_of[mid] = c.cluster_id
    shared_clusters: set[str] = set()
    backbone_clusters: set[str] = set()
    misinfo_groups: set[str] = set()
    group_members: dict[str, set[str]] = defaultdict(set)
    for m in snapshot.messages:
        group_members[m.group_id].add(m.user_id)
        cid = cluster_of.get(m.msg_id)
        if cid is not None and cid in labels.misinfo_cluster_ids:
            shared_clusters.add(cid)
            misinfo_groups.add(m.group_id)
            if m.user_id in backbone:
                backbone_clusters.add(cid)

    backbone_groups = {g for g, users in group_members.items() if users & backbone}

    return {
        "n_backbone_users_with_misinfo": len(backbone_sharers),
        "pct_backbone_users_with_misinfo": _ratio(len(backbone_sharers), len(backbone)),
        "pct_misinfo_users_in_backbone": _ratio(len(backbone_sharers), len(sharers)),
        "pct_top10_misinfo_in_backbone": _ratio(len(top10 & backbone), len(top10)),
        "pct_top50_misinfo_in_backbone": _ratio(len(top50 & backbone), len(top50)),
        "pct_misinfo_msgs_from_backbone": _ratio(backbone_mmsgs, total_mmsgs),
        "pct_unique_misinfo_from_backbone": _ratio(len(backbone_clusters), len(shared_clusters)),
        "n_misinfo_groups_covered_by_backbone": len(misinfo_groups & backbone_groups),
        "pct_backbone_groups_with_misinfo": _ratio(
            len(misinfo_groups & backbone_groups), len(backbone_groups)
        ),
        "pct_misinfo_groups_covered_by_backbone": _ratio(
            len(misinfo_groups & backbone_groups), len(misinfo_groups)
        ),
    }


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation (mean ranks for ties)."""
    if len(xs) != len(ys):
        raise ValueError("series must have equal length")
    if len(xs) < 2:
        raise ValueError("need at least 2 observations")
    rx = _average_ranks(xs)
    ry = _average_ranks(ys)
    mx, my = _mean(rx), _mean(ry)
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    if vx == 0.0 or vy == 0.0:
        raise ValueError("spearman undefined for a constant series")
    return cov / math.sqrt(vx * vy)


def _average_ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for t in range(i, j + 1):
            ranks[order[t]] = avg
        i = j + 1
    return ranks


def persistence(prev: Iterable[str], curr: Iterable[str]) -> float | None:
    """Fraction of last window's set that remains this window; None when the
    previous set was empty."""
    prev_set = set(prev)
    if not prev_set:
        return None
    return len(prev_set & set(curr)) / len(prev_set)


def cdf(values: Sequence[float]) -> list[tuple[float, float]]:
    """Empirical CDF points (x, P(X <= x)) at each distinct value."""
    if not values:
        raise ValueError("cdf of an empty sample is undefined")
    counts = Counter(values)
    n = len(values)
    points = []
    cum = 0
    for x in sorted(counts):
        cum += counts[x]
        points.append((x, cum / n))
    return points
