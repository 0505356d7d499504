"""Sidecar parsing, subword pooling, and quantization tests."""

from __future__ import annotations

import math

import numpy as np
import pytest

from gazner.errors import AlignmentError, FormatError, NumericError
from gazner.sidecar import Sidecar, pool_subwords, quantize_embedding, read_sidecar


class TestSidecarIO:
    def test_embedding_round_trip(self, tmp_path):
        sc = Sidecar(kind="emb", layer=24, dim=3)
        sc.put(0, 0, [0.1, -2.5, 3.0])
        sc.put(0, 1, [1e-7, 0.333333333333, -4.25])
        sc.put(3, 0, [0.0, 0.0, 1.0])
        path = tmp_path / "emb.txt"
        sc.save(path)
        loaded = read_sidecar(path)
        assert loaded.kind == "emb" and loaded.layer == 24 and loaded.dim == 3
        assert len(loaded) == 3
        for key in sc.keys():
            np.testing.assert_array_equal(loaded.get(*key), sc.get(*key))

    def test_tag_round_trip(self, tmp_path):
        sc = Sidecar(kind="tag", layer=-1, dim=0)
        sc.put(0, 0, "B-PER")
        sc.put(1, 2, "O")
        path = tmp_path / "tags.txt"
        sc.save(path)
        loaded = read_sidecar(path)
        assert loaded.get(0, 0) == "B-PER"
        assert loaded.get(1, 2) == "O"
        assert loaded.get(9, 9) is None

    def test_malformed_header_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("#SIDECAR kind=emb layer=24\n", encoding="utf-8")
        with pytest.raises(FormatError):
            read_sidecar(path)

    def test_tag_kind_with_nonzero_dim_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("#SIDECAR kind=tag layer=-1 dim=4\n", encoding="utf-8")
        with pytest.raises(FormatError):
            read_sidecar(path)

    def test_duplicate_entry_rejected(self, tmp_path):
        path = tmp_path / "dup.txt"
        path.write_text(
            "#SIDECAR kind=emb layer=24 dim=1\n0 0 1.0\n0 0 2.0\n", encoding="utf-8"
        )
        with pytest.raises(FormatError) as info:
            read_sidecar(path)
        assert ":3:" in str(info.value)

    def test_wrong_width_rejected(self, tmp_path):
        path = tmp_path / "w.txt"
        path.write_text("#SIDECAR kind=emb layer=24 dim=2\n0 0 1.0 2.0 3.0\n", encoding="utf-8")
        with pytest.raises(FormatError):
            read_sidecar(path)

    def test_vectors_in_file_order(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text(
            "#SIDECAR kind=emb layer=23 dim=1\n1 0 5.0\n0 0 3.0\n0 1 4.0\n", encoding="utf-8"
        )
        sc = read_sidecar(path)
        np.testing.assert_array_equal(sc.vectors().ravel(), [5.0, 3.0, 4.0])


class TestPoolSubwords:
    def test_first_piece(self):
        pieces = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        out = pool_subwords([2, 1], pieces, policy="first_piece")
        np.testing.assert_array_equal(out, [[1.0, 2.0], [5.0, 6.0]])

    def test_mean(self):
        pieces = np.array([[1.0], [3.0], [5.0]])
        out = pool_subwords([2, 1], pieces, policy="mean")
        np.testing.assert_allclose(out, [[2.0], [5.0]])

    def test_count_sum_must_match(self):
        with pytest.raises(AlignmentError):
            pool_subwords([2, 2], np.zeros((3, 4)))

    def test_zero_count_rejected(self):
        with pytest.raises(AlignmentError):
            pool_subwords([0, 3], np.zeros((3, 4)))

    def test_unknown_policy_rejected(self):
        with pytest.raises(ValueError):
            pool_subwords([1], np.zeros((1, 2)), policy="max")


class TestQuantize:
    def test_reference_value(self):
        assert quantize_embedding([0.456]) == [46]

    def test_half_away_from_zero(self):
        assert quantize_embedding([0.005]) == [1]
        assert quantize_embedding([-0.005]) == [-1]
        assert quantize_embedding([0.015]) == [2]
        assert quantize_embedding([-0.015]) == [-2]
        assert quantize_embedding([0.0]) == [0]

    def test_results_are_ints(self):
        out = quantize_embedding([0.1, -0.2, 1.5])
        assert all(isinstance(v, int) for v in out)

    def test_error_bound(self):
        rng = np.random.default_rng(3)
        vec = rng.normal(scale=2.0, size=500)
        out = np.array(quantize_embedding(vec))
        assert np.all(np.abs(out - 100.0 * vec) <= 0.5 + 1e-9)

    def test_non_finite_rejected(self):
        with pytest.raises(NumericError):
            quantize_embedding([float("nan")])
        with pytest.raises(NumericError):
            quantize_embedding([math.inf])
        with pytest.raises(NumericError):
            quantize_embedding([1e307])  # overflows once scaled
