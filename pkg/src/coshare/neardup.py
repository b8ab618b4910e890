"""Near-duplicate content clustering per media type.

Texts are grouped by Jaccard word-set similarity (connected components over
the `> threshold` similarity graph), images by equal perceptual-hash
fingerprints, audio and video by equal transfer identifiers.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .ingest import Message, Snapshot

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class SimilarityConfig:
    jaccard_threshold: float = 0.7
    min_text_chars: int = 180
    stopwords: frozenset[str] | None = None
    stemming: bool = False
    stemmer: Callable[[str], str] | None = None
    # all-pairs comparison above this many texts switches to an exact
    # token-inverted-index prefilter (disjoint sets can never match)
    inverted_index_threshold: int = 5000

    def __post_init__(self):
        if not 0.0 <= self.jaccard_threshold <= 1.0:
            raise ValueError("jaccard_threshold must be in [0, 1]")
        if self.stemming and self.stemmer is None:
            raise ValueError("stemming=True requires a stemmer callable")


@dataclass(frozen=True)
class ContentCluster:
    """Equivalence class of near-duplicate messages of one media type.

    content_key is the grouping key for non-text media (fingerprint or
    transfer id); None for text clusters.
    """

    cluster_id: str
    media_type: str
    member_msg_ids: frozenset[str]
    representative_msg_id: str
    content_key: str | None = None


@dataclass(frozen=True, slots=True)
class ClusterRejection:
    msg_id: str
    reason: str


def strip_accents(text: str) -> str:
    """Remove combining marks after canonical (NFD) decomposition."""
    return "".join(ch for ch in unicodedata.normalize("NFD", text) if not unicodedata.combining(ch))


def tokenize_terms(text: str, config: SimilarityConfig | None = None) -> list[str]:
    """Normalized term sequence: lowercase, accent-stripped, split on
    non-alphanumerics, stopwords removed, optional stemming."""
    config = config or SimilarityConfig()
    terms = _WORD_RE.findall(strip_accents(text.lower()))
    if config.stopwords:
        terms = [t for t in terms if t not in config.stopwords]
    if config.stemming and config.stemmer is not None:
        terms = [config.stemmer(t) for t in terms]
    return terms


def tokenize_normalize(text: str, config: SimilarityConfig | None = None) -> frozenset[str]:
    return frozenset(tokenize_terms(text, config))


def jaccard(set_a: frozenset[str] | set[str], set_b: frozenset[str] | set[str]) -> float:
    """|A∩B| / |A∪B| with the 0/0 -> 0 convention."""
    if not set_a and not set_b:
        return 0.0
    inter = len(set_a & set_b)
    if inter == 0:
        return 0.0
    return inter / (len(set_a) + len(set_b) - inter)


# ---------------------------------------------------------------------------
# Perceptual hash
# ---------------------------------------------------------------------------

_DCT32 = None


def _dct_matrix(n: int = 32) -> np.ndarray:
    # orthonormal DCT-II basis: row k, column j
    global _DCT32
    if _DCT32 is None:
        k = np.arange(n).reshape(-1, 1)
        j = np.arange(n).reshape(1, -1)
        mat = np.cos(np.pi * (2 * j + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
        mat[0, :] = np.sqrt(1.0 / n)
        _DCT32 = mat
    return _DCT32


def _box_downscale(matrix: np.ndarray, size: int = 32) -> np.ndarray:
    """Average over a size x size grid of contiguous boxes.

    Box i along an axis of length L covers [floor(i*L/size), floor((i+1)*L/size)).
    """
    h, w = matrix.shape
    rows = np.floor(np.arange(size + 1) * h / size).astype(int)
    cols = np.floor(np.arange(size + 1) * w / size).astype(int)
    out = np.empty((size, size), dtype=np.float64)
    for i in range(size):
        band = matrix[rows[i] : rows[i + 1]]
        for j in range(size):
            out[i, j] = band[:, cols[j] : cols[j + 1]].mean()
    return out


def phash(matrix: np.ndarray) -> int:
    """64-bit perceptual fingerprint of a grayscale matrix (H, W >= 32).

    Box-average to 32x32, orthonormal 2-D DCT-II, keep the 8x8
    lowest-frequency block with the DC coefficient replaced by 0, then set
    one bit per coefficient strictly above the block median (row-major,
    most significant bit first). Coefficients that are zero up to float
    roundoff (relative to the pixel scale) are snapped to exactly 0, so
    featureless inputs hash to 0.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] < 32 or matrix.shape[1] < 32:
        raise ValueError("matrix must be 2-D with both dimensions >= 32")
    small = _box_downscale(matrix)
    d = _dct_matrix()
    coeffs = d @ small @ d.T
    block = coeffs[:8, :8].copy()
    block[0, 0] = 0.0  # brightness lives in the DC term only
    tol = 1e-8 * max(1.0, float(np.abs(small).max()))
    block[np.abs(block) < tol] = 0.0
    median = float(np.median(block))
    bits = (block > median).ravel()
    fp = 0
    for bit in bits:
        fp = (fp << 1) | int(bit)
    return fp


def fingerprint_hex(fp: int) -> str:
    return format(fp, "016x")


def read_graymap(path: Path | str) -> np.ndarray:
    """Read a portable graymap (P2 ascii or P5 binary) into a 2-D array."""
    data = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated graymap header")
        fields.append(data[start:pos])
    magic = fields[0]
    try:
        width, height, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    except ValueError as exc:
        raise ValueError(f"{path}: bad graymap header") from exc
    if magic not in (b"P2", b"P5") or width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise ValueError(f"{path}: unsupported graymap header")
    n = width * height
    if magic == b"P2":
        values = np.array(data[pos:].split()[:n], dtype=np.float64)
        if values.size != n:
            raise ValueError(f"{path}: truncated P2 pixel data")
    else:
        pos += 1  # single whitespace after maxval
        dtype = ">u2" if maxval > 255 else np.uint8
        itemsize = 2 if maxval > 255 else 1
        raw = data[pos : pos + n * itemsize]
        if len(raw) != n * itemsize:
            raise ValueError(f"{path}: truncated P5 pixel data")
        values = np.frombuffer(raw, dtype=dtype).astype(np.float64)
    return values.reshape(height, width)


# ---------------------------------------------------------------------------
# Clustering
# ---------------------------------------------------------------------------


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def _text_candidate_pairs(token_sets: list[frozenset[str]], config: SimilarityConfig):
    n = len(token_sets)
    if n <= config.inverted_index_threshold:
        for i in range(n):
            for j in range(i + 1, n):
                yield i, j
        return
    # exact prefilter: only pairs sharing at least one token can have
    # similarity > 0
    postings: dict[str, list[int]] = {}
    for i, toks in enumerate(token_sets):
        for t in toks:
            postings.setdefault(t, []).append(i)
    seen: set[tuple[int, int]] = set()
    for t in sorted(postings):
        docs = postings[t]
        for a in range(len(docs)):
            for b in range(a + 1, len(docs)):
                pair = (docs[a], docs[b])
                if pair not in seen:
                    seen.add(pair)
                    yield pair


def _cluster_from_members(members: list[Message], media: str, key: str | None) -> ContentCluster:
    rep = min(members, key=Message.sort_key)
    return ContentCluster(
        cluster_id=f"{media}:{rep.msg_id}",
        media_type=media,
        member_msg_ids=frozenset(m.msg_id for m in members),
        representative_msg_id=rep.msg_id,
        content_key=key,
    )


def cluster_snapshot(
    snapshot: Snapshot,
    config: SimilarityConfig | None = None,
    matrix_dir: Path | str | None = None,
) -> tuple[list[ContentCluster], list[ClusterRejection]]:
    """Partition a window's messages into near-duplicate clusters.

    Text messages are expected to be length-filtered already. Image messages
    carrying a matrix_ref instead of a fingerprint are hashed from the
    referenced graymap file (resolved against matrix_dir); unusable image
    messages come back as rejections rather than clusters.
    """
    config = config or SimilarityConfig()
    ordered = sorted(snapshot.messages, key=Message.sort_key)
    rejections: list[ClusterRejection] = []
    clusters: list[ContentCluster] = []

    texts = [m for m in ordered if m.media_type == "text"]
    if texts:
        token_sets = [tokenize_normalize(m.text_body or "", config) for m in texts]
        dsu = _DisjointSet(len(texts))
        for i, j in _text_candidate_pairs(token_sets, config):
            if jaccard(token_sets[i], token_sets[j]) > config.jaccard_threshold:
                dsu.union(i, j)
        groups: dict[int, list[Message]] = {}
        for i, msg in enumerate(texts):
            groups.setdefault(dsu.find(i), []).append(msg)
        for root in sorted(groups):
            clusters.append(_cluster_from_members(groups[root], "text", None))

    by_key: dict[tuple[str, str], list[Message]] = {}
    for msg in ordered:
        if msg.media_type == "image":
            key = msg.image_fingerprint
            if key is None:
                if not msg.matrix_ref:
                    rejections.append(
                        ClusterRejection(msg.msg_id, "image lacks fingerprint and matrix_ref")
                    )
                    continue
                ref = Path(msg.matrix_ref)
                if matrix_dir is not None and not ref.is_absolute():
                    ref = Path(matrix_dir) / ref
                try:
                    key = fingerprint_hex(phash(read_graymap(ref)))
                except (OSError, ValueError) as exc:
                    rejections.append(ClusterRejection(msg.msg_id, f"unusable matrix: {exc}"))
                    continue
            by_key.setdefault(("image", key), []).append(msg)
        elif msg.media_type in ("audio", "video"):
            by_key.setdefault((msg.media_type, msg.transfer_id or ""), []).append(msg)

    for (media, key), members in sorted(
        by_key.items(), key=lambda kv: min(m.sort_key() for m in kv[1])
    ):
        clusters.append(_cluster_from_members(members, media, key))

    clusters.sort(key=lambda c: c.cluster_id)
    return clusters, rejections


def clusters_to_records(clusters: Iterable[ContentCluster]) -> list[dict]:
    records = []
    for c in clusters:
        rec = {
            "cluster_id": c.cluster_id,
            "media": c.media_type,
            "representative": c.representative_msg_id,
            "members": sorted(c.member_msg_ids),
        }
        if c.content_key is not None:
            rec["content_key"] = c.content_key
        records.append(rec)
    return records


def clusters_from_records(records: Iterable[dict]) -> list[ContentCluster]:
    return [
        ContentCluster(
            cluster_id=rec["cluster_id"],
            media_type=rec["media"],
            member_msg_ids=frozenset(rec["members"]),
            representative_msg_id=rec["representative"],
            content_key=rec.get("content_key"),
        )
        for rec in records
    ]
