from __future__ import annotations

import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import msg, snap
from oracles import brute_force_text_clusters, reference_phash
from coshare.neardup import (
    SimilarityConfig,
    cluster_snapshot,
    fingerprint_hex,
    jaccard,
    phash,
    read_graymap,
    tokenize_normalize,
    tokenize_terms,
)

WORD_SET = st.frozensets(st.sampled_from("abcdefgh"), max_size=8)


class TestTokenize:
    def test_accent_strip_lowercase_dedup(self):
        assert tokenize_normalize("Olá, olá MUNDO") == {"ola", "mundo"}

    def test_empty_string(self):
        assert tokenize_normalize("") == frozenset()

    def test_stopwords(self):
        config = SimilarityConfig(stopwords=frozenset({"a"}))
        assert tokenize_normalize("a b a", config) == {"b"}

    def test_split_on_non_alphanumeric(self):
        assert tokenize_normalize("foo-bar_baz 42!") == {"foo", "bar", "baz", "42"}

    def test_terms_keep_counts(self):
        assert tokenize_terms("bla bla car") == ["bla", "bla", "car"]

    def test_stemmer_hook(self):
        config = SimilarityConfig(stemming=True, stemmer=lambda t: t[:3])
        assert tokenize_normalize("casas casinha", config) == {"cas"}

    def test_stemming_without_stemmer_rejected(self):
        with pytest.raises(ValueError):
            SimilarityConfig(stemming=True)


class TestJaccard:
    def test_identical_sets(self):
        assert jaccard(frozenset("abc"), frozenset("abc")) == 1.0

    def test_disjoint_sets(self):
        assert jaccard(frozenset("ab"), frozenset("cd")) == 0.0

    def test_half_overlap(self):
        assert jaccard(frozenset("abc"), frozenset("bcd")) == 0.5

    def test_empty_convention(self):
        assert jaccard(frozenset(), frozenset()) == 0.0
        assert jaccard(frozenset(), frozenset("a")) == 0.0

    @given(WORD_SET, WORD_SET)
    def test_symmetric_and_bounded(self, a, b):
        assert jaccard(a, b) == jaccard(b, a)
        assert 0.0 <= jaccard(a, b) <= 1.0


class TestPhash:
    def test_identical_matrices(self):
        rng = np.random.default_rng(1)
        m = rng.uniform(0, 255, (40, 50))
        assert phash(m) == phash(m.copy())

    def test_constant_matrix_is_zero(self):
        assert phash(np.full((32, 32), 137.0)) == 0
        assert phash(np.full((64, 48), 3.0)) == 0

    def test_brightness_shift_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            m = rng.uniform(0, 200, (37, 33))
            assert phash(m) == phash(m + 10.0)

    def test_small_matrix_rejected(self):
        with pytest.raises(ValueError):
            phash(np.zeros((31, 64)))

    def test_matches_reference_implementation(self):
        rng = np.random.default_rng(3)
        for shape in [(32, 32), (45, 32), (64, 100), (33, 217)]:
            m = rng.uniform(0, 255, shape)
            assert phash(m) == reference_phash(m), shape

    def test_random_pair_hamming_distance_near_32(self):
        rng = np.random.default_rng(4)
        distances = []
        for _ in range(40):
            a = phash(rng.uniform(0, 255, (32, 32)))
            b = phash(rng.uniform(0, 255, (32, 32)))
            distances.append(bin(a ^ b).count("1"))
        assert 24 <= sum(distances) / len(distances) <= 40

    def test_hex_rendering(self):
        assert fingerprint_hex(0) == "0000000000000000"
        assert fingerprint_hex(2**63) == "8000000000000000"


class TestGraymap:
    def test_p2_and_p5_agree(self, tmp_path):
        rng = np.random.default_rng(5)
        m = rng.integers(0, 256, (33, 40), dtype=np.uint8)
        p2 = tmp_path / "img.p2.pgm"
        header = f"P2\n# comment\n{m.shape[1]} {m.shape[0]}\n255\n"
        p2.write_text(header + "\n".join(" ".join(map(str, row)) for row in m))
        p5 = tmp_path / "img.p5.pgm"
        p5.write_bytes(f"P5\n{m.shape[1]} {m.shape[0]}\n255\n".encode() + m.tobytes())
        np.testing.assert_array_equal(read_graymap(p2), read_graymap(p5))
        assert phash(read_graymap(p2)) == phash(m.astype(float))

    def test_16bit_p5(self, tmp_path):
        m = np.array([[300, 5], [65535, 0]], dtype=">u2")
        path = tmp_path / "deep.pgm"
        path.write_bytes(b"P5\n2 2\n65535\n" + m.tobytes())
        np.testing.assert_array_equal(read_graymap(path), m.astype(float))

    def test_truncated_file_rejected(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P5\n4 4\n255\nxy")
        with pytest.raises(ValueError):
            read_graymap(path)


def _text_from_tokens(tokens: list[str]) -> str:
    return " ".join(tokens)


class TestClusterSnapshot:
    def setup_method(self):
        self.config = SimilarityConfig(jaccard_threshold=0.7, min_text_chars=0)

    def test_single_message_singleton(self):
        clusters, rejections = cluster_snapshot(snap([msg("a", text="alpha beta")]), self.config)
        assert len(clusters) == 1
        assert clusters[0].member_msg_ids == {"a"}
        assert clusters[0].representative_msg_id == "a"
        assert not rejections

    def test_verbatim_duplicates_grouped(self):
        text = "one two three four"
        clusters, _ = cluster_snapshot(
            snap([msg("a", text=text, ts=5), msg("b", text=text, ts=1)]), self.config
        )
        assert len(clusters) == 1
        assert clusters[0].member_msg_ids == {"a", "b"}
        # earliest timestamp wins the representative slot
        assert clusters[0].representative_msg_id == "b"

    def test_transitive_closure_chain(self):
        # A~B and B~C above threshold, A~C far below: all three merge
        a = "w1 w2 w3 w4 w5 w6 w7 w8"
        b = "w1 w2 w3 w4 w5 w6 w7 x1"  # jaccard(a,b) = 7/9 ≈ 0.78
        c = "x1 w2 w3 w4 w5 w6 w7 x2"  # jaccard(b,c) = 7/9; jaccard(a,c) = 6/10
        config = SimilarityConfig(jaccard_threshold=0.7, min_text_chars=0)
        assert jaccard(tokenize_normalize(a), tokenize_normalize(b)) == pytest.approx(7 / 9)
        assert jaccard(tokenize_normalize(a), tokenize_normalize(c)) == pytest.approx(6 / 10)
        clusters, _ = cluster_snapshot(
            snap([msg("a", text=a), msg("b", text=b), msg("c", text=c)]), config
        )
        assert len(clusters) == 1
        assert clusters[0].member_msg_ids == {"a", "b", "c"}

    def test_threshold_is_strict(self):
        # jaccard exactly 0.7: 7 shared of 10 total terms
        a = "t1 t2 t3 t4 t5 t6 t7 a1 a2 a3"
        b = "t1 t2 t3 t4 t5 t6 t7 b1 b2 b3"
        sim = jaccard(tokenize_normalize(a), tokenize_normalize(b))
        assert sim == pytest.approx(7 / 13)
        # build a pair at exactly 0.7: |∩|=7, |∪|=10 -> sets of size 7 and 10
        x = "t1 t2 t3 t4 t5 t6 t7"
        y = "t1 t2 t3 t4 t5 t6 t7 b1 b2 b3"
        assert jaccard(tokenize_normalize(x), tokenize_normalize(y)) == 0.7
        clusters, _ = cluster_snapshot(snap([msg("x", text=x), msg("y", text=y)]), self.config)
        assert len(clusters) == 2

    def test_image_clusters_by_fingerprint(self):
        messages = [
            msg("i1", media="image", fingerprint="aa" * 8, ts=3),
            msg("i2", media="image", fingerprint="aa" * 8, ts=1),
            msg("i3", media="image", fingerprint="bb" * 8, ts=2),
        ]
        clusters, _ = cluster_snapshot(snap(messages), self.config)
        by_key = {c.content_key: c for c in clusters}
        assert by_key["aa" * 8].member_msg_ids == {"i1", "i2"}
        assert by_key["aa" * 8].representative_msg_id == "i2"
        assert by_key["bb" * 8].member_msg_ids == {"i3"}

    def test_image_from_matrix_ref(self, tmp_path):
        m = np.random.default_rng(7).integers(0, 256, (32, 32), dtype=np.uint8)
        (tmp_path / "img.pgm").write_bytes(b"P5\n32 32\n255\n" + m.tobytes())
        expected = fingerprint_hex(phash(m.astype(float)))
        messages = [
            msg("i1", media="image", matrix_ref="img.pgm"),
            msg("i2", media="image", fingerprint=expected),
        ]
        clusters, rejections = cluster_snapshot(snap(messages), self.config, matrix_dir=tmp_path)
        assert not rejections
        assert len(clusters) == 1
        assert clusters[0].member_msg_ids == {"i1", "i2"}

    def test_unusable_image_rejected(self, tmp_path):
        messages = [msg("i1", media="image", matrix_ref="missing.pgm")]
        clusters, rejections = cluster_snapshot(snap(messages), self.config, matrix_dir=tmp_path)
        assert clusters == []
        assert rejections[0].msg_id == "i1"

    def test_audio_video_by_transfer_id(self):
        messages = [
            msg("a1", media="audio", transfer_id="T1"),
            msg("a2", media="audio", transfer_id="T1"),
            msg("v1", media="video", transfer_id="T1"),
        ]
        clusters, _ = cluster_snapshot(snap(messages), self.config)
        media = sorted((c.media_type, len(c.member_msg_ids)) for c in clusters)
        # same transfer id never merges across media types
        assert media == [("audio", 2), ("video", 1)]

    def test_partition_per_media(self):
        messages = [
            msg("t1", text="aa bb cc"),
            msg("t2", text="dd ee ff"),
            msg("i1", media="image", fingerprint="0" * 16),
            msg("a1", media="audio"),
        ]
        clusters, _ = cluster_snapshot(snap(messages), self.config)
        covered = sorted(mid for c in clusters for mid in c.member_msg_ids)
        assert covered == ["a1", "i1", "t1", "t2"]


def _random_corpus(rnd: random.Random, n_texts: int, vocab: int) -> list[str]:
    words = [f"w{i}" for i in range(vocab)]
    texts = []
    for _ in range(n_texts):
        base = rnd.sample(words, rnd.randint(3, 8))
        texts.append(" ".join(base))
        # occasionally derive a near duplicate of an earlier text
        if texts and rnd.random() < 0.4:
            donor = rnd.choice(texts)
            toks = donor.split()
            if rnd.random() < 0.5 and len(toks) > 3:
                toks = toks[:-1]
            else:
                toks = toks + [rnd.choice(words)]
            texts.append(" ".join(toks))
    return texts


class TestOracleEquivalence:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_brute_force(self, seed):
        rnd = random.Random(seed)
        texts = _random_corpus(rnd, 60, 30)
        messages = [msg(f"m{i:03d}", text=t, ts=i) for i, t in enumerate(texts)]
        config = SimilarityConfig(jaccard_threshold=0.7, min_text_chars=0)
        clusters, _ = cluster_snapshot(snap(messages), config)
        got = sorted(sorted(c.member_msg_ids) for c in clusters)
        token_sets = [tokenize_normalize(t, config) for t in texts]
        comps = brute_force_text_clusters(token_sets, 0.7)
        expected = sorted(sorted(messages[i].msg_id for i in comp) for comp in comps)
        assert got == expected

    def test_inverted_index_path_equivalent(self):
        rnd = random.Random(9)
        texts = _random_corpus(rnd, 80, 25)
        messages = [msg(f"m{i:03d}", text=t, ts=i) for i, t in enumerate(texts)]
        allpairs = SimilarityConfig(jaccard_threshold=0.7, min_text_chars=0)
        prefiltered = SimilarityConfig(
            jaccard_threshold=0.7, min_text_chars=0, inverted_index_threshold=0
        )
        a, _ = cluster_snapshot(snap(messages), allpairs)
        b, _ = cluster_snapshot(snap(messages), prefiltered)
        assert [c.member_msg_ids for c in a] == [c.member_msg_ids for c in b]

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.lists(st.sampled_from("abcdefghij"), max_size=6), max_size=25))
    def test_clusters_partition_messages(self, docs):
        messages = [msg(f"m{i:02d}", text=" ".join(doc), ts=i) for i, doc in enumerate(docs)]
        config = SimilarityConfig(jaccard_threshold=0.7, min_text_chars=0)
        clusters, _ = cluster_snapshot(snap(messages), config)
        covered = sorted(mid for c in clusters for mid in c.member_msg_ids)
        assert covered == sorted(m.msg_id for m in messages)
        for c in clusters:
            assert c.representative_msg_id in c.member_msg_ids
