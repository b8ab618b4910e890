"""coshare: batch toolkit for media co-sharing network analysis.

The pipeline turns anonymized message logs into weekly co-sharing networks,
disparity-filter backbones, Louvain communities and hierarchical
misinformation statistics (users, groups, communities) with cross-window
persistence.
"""

from .analytics import cdf, persistence, spearman
from .backbone import BackbonePartition, disparity_alpha, extract_backbone
from .communities import CommunityPartition, louvain, modularity
from .config import PipelineConfig, load_config
from .ingest import (
    Message,
    Snapshot,
    activity_stats,
    filter_short_texts,
    parse_corpus,
    window_messages,
)
from .misinfo import FactRecord, LabelSet, apply_labels, build_tfidf_vectors, cosine, flag_suspicious
from .neardup import (
    ContentCluster,
    SimilarityConfig,
    cluster_snapshot,
    jaccard,
    phash,
    tokenize_normalize,
)
from .network import CoSharingNetwork, build_cosharing_network, network_summary, node_metrics

__version__ = "0.1.0"

__all__ = [
    "BackbonePartition",
    "CommunityPartition",
    "ContentCluster",
    "CoSharingNetwork",
    "FactRecord",
    "LabelSet",
    "Message",
    "PipelineConfig",
    "SimilarityConfig",
    "Snapshot",
    "activity_stats",
    "apply_labels",
    "build_cosharing_network",
    "build_tfidf_vectors",
    "cdf",
    "cluster_snapshot",
    "cosine",
    "disparity_alpha",
    "extract_backbone",
    "filter_short_texts",
    "flag_suspicious",
    "jaccard",
    "load_config",
    "louvain",
    "modularity",
    "network_summary",
    "node_metrics",
    "parse_corpus",
    "persistence",
    "phash",
    "spearman",
    "tokenize_normalize",
    "window_messages",
]
