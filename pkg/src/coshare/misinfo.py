"""Misinformation labeling: TF-IDF cosine matching against checked facts,
plus explicit override labels for externally verified content."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .neardup import ContentCluster, SimilarityConfig, tokenize_terms

OVERRIDE_KINDS = ("cluster", "fingerprint", "transfer_id")


@dataclass(frozen=True, slots=True)
class FactRecord:
    fact_id: str
    text: str
    source_agency: str = ""


@dataclass(frozen=True, slots=True)
class OverrideEntry:
    kind: str  # cluster | fingerprint | transfer_id
    key: str
    confirm: bool


@dataclass(frozen=True, slots=True)
class SuspiciousMatch:
    cluster_id: str
    fact_id: str
    score: float


@dataclass
class LabelSet:
    """Clusters labeled as misinformation, with provenance per cluster."""

    misinfo_cluster_ids: frozenset[str] = frozenset()
    provenance: dict[str, str] = field(default_factory=dict)  # tfidf_match | override_file
    matched_fact: dict[str, str] = field(default_factory=dict)

    def __contains__(self, cluster_id: str) -> bool:
        return cluster_id in self.misinfo_cluster_ids


def build_tfidf_vectors(documents: Sequence[Counter]) -> list[dict[str, float]]:
    """weight(t, d) = tf(t, d) * ln(N / df(t)), raw term counts.

    Terms occurring in every document get weight 0 (idf = ln 1).
    """
    if not documents:
        raise ValueError("at least one document required")
    n_docs = len(documents)
    df: Counter[str] = Counter()
    for doc in documents:
        df.update(doc.keys())
    idf = {t: math.log(n_docs / d) for t, d in df.items()}
    vectors: list[dict[str, float]] = []
    for doc in documents:
        vec = {}
        for term, tf in doc.items():
            w = tf * idf[term]
            if w != 0.0:
                vec[term] = w
        vectors.append(vec)
    return vectors


def cosine(u: Mapping[str, float], v: Mapping[str, float]) -> float:
    """Cosine of sparse vectors; zero norm on either side gives 0."""
    if not u or not v:
        return 0.0
    if len(v) < len(u):
        u, v = v, u
    dot = sum(w * v[t] for t, w in u.items() if t in v)
    nu = math.sqrt(sum(w * w for w in u.values()))
    nv = math.sqrt(sum(w * w for w in v.values()))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return dot / (nu * nv)


def flag_suspicious(
    cluster_texts: Mapping[str, str],
    facts: Sequence[FactRecord],
    threshold: float = 0.4,
    config: SimilarityConfig | None = None,
) -> list[SuspiciousMatch]:
    """Score text-cluster representatives against the fact corpus.

    Facts and cluster texts are pooled for document frequencies. A cluster
    keeps only its best-scoring fact, and only when score >= threshold
    (ties between facts go to the lowest fact_id).
    """
    if not facts or not cluster_texts:
        return []
    cluster_ids = sorted(cluster_texts)
    fact_docs = [Counter(tokenize_terms(f.text, config)) for f in facts]
    cluster_docs = [Counter(tokenize_terms(cluster_texts[cid], config)) for cid in cluster_ids]
    vectors = build_tfidf_vectors([*fact_docs, *cluster_docs])
    fact_vecs = vectors[: len(facts)]
    matches: list[SuspiciousMatch] = []
    for cid, vec in zip(cluster_ids, vectors[len(facts) :]):
        best: tuple[float, str] | None = None
        for fact, fvec in zip(facts, fact_vecs):
            score = cosine(vec, fvec)
            if best is None or score > best[0] or (score == best[0] and fact.fact_id < best[1]):
                best = (score, fact.fact_id)
        if best is not None and best[0] >= threshold:
            matches.append(SuspiciousMatch(cid, best[1], best[0]))
    return matches


def apply_labels(
    clusters: Sequence[ContentCluster],
    suspicious: Iterable[SuspiciousMatch],
    overrides: Iterable[OverrideEntry] = (),
) -> tuple[LabelSet, list[str]]:
    """Combine TF-IDF matches with the override file into the final LabelSet.

    Overrides either veto a suspicious cluster (confirm=false) or add labels
    by cluster id, image fingerprint or transfer id. Entries that match
    nothing in the window produce warnings and are skipped.
    """
    by_id = {c.cluster_id: c for c in clusters}
    by_content_key: dict[tuple[str, str], list[str]] = {}
    for c in clusters:
        if c.content_key is not None:
            kind = "fingerprint" if c.media_type == "image" else "transfer_id"
            by_content_key.setdefault((kind, c.content_key), []).append(c.cluster_id)

    labeled: dict[str, str] = {}
    matched_fact: dict[str, str] = {}
    for match in suspicious:
        if match.cluster_id in by_id:
            labeled[match.cluster_id] = "tfidf_match"
            matched_fact[match.cluster_id] = match.fact_id

    warnings: list[str] = []
    for entry in overrides:
        if entry.kind == "cluster":
            targets = [entry.key] if entry.key in by_id else []
        elif entry.kind in ("fingerprint", "transfer_id"):
            targets = by_content_key.get((entry.kind, entry.key), [])
        else:
            warnings.append(f"unknown override kind: {entry.kind}")
            continue
        if not targets:
            warnings.append(f"override {entry.kind}={entry.key} matches no cluster")
            continue
        for cid in targets:
            if entry.confirm:
                labeled.setdefault(cid, "override_file")
            else:
                labeled.pop(cid, None)
                matched_fact.pop(cid, None)

    label_set = LabelSet(
        misinfo_cluster_ids=frozenset(labeled),
        provenance=dict(sorted(labeled.items())),
        matched_fact={c: matched_fact[c] for c in sorted(matched_fact) if c in labeled},
    )
    return label_set, warnings


def facts_from_records(records: Iterable[dict]) -> list[FactRecord]:
    facts = []
    seen: set[str] = set()
    for rec in records:
        fid = rec["fact_id"]
        if fid in seen:
            raise ValueError(f"duplicate fact_id: {fid}")
        seen.add(fid)
        facts.append(FactRecord(fact_id=fid, text=rec["text"], source_agency=rec.get("source_agency", "")))
    return facts


def overrides_from_records(records: Iterable[dict]) -> list[OverrideEntry]:
    return [
        OverrideEntry(kind=rec["kind"], key=rec["key"], confirm=bool(rec["confirm"]))
        for rec in records
    ]


def labels_to_records(labels: LabelSet) -> list[dict]:
    records = []
    for cid in sorted(labels.misinfo_cluster_ids):
        rec = {"cluster_id": cid, "provenance": labels.provenance[cid]}
        if cid in labels.matched_fact:
            rec["fact_id"] = labels.matched_fact[cid]
        records.append(rec)
    return records


def labels_from_records(records: Iterable[dict]) -> LabelSet:
    provenance = {}
    matched = {}
    for rec in records:
        provenance[rec["cluster_id"]] = rec["provenance"]
        if "fact_id" in rec:
            matched[rec["cluster_id"]] = rec["fact_id"]
    return LabelSet(
        misinfo_cluster_ids=frozenset(provenance),
        provenance=dict(sorted(provenance.items())),
        matched_fact=dict(sorted(matched.items())),
    )
