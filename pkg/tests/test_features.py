"""Feature extraction tests: predicates, presets, and the feature file."""

from __future__ import annotations

import numpy as np
import pytest

from gazner.corpus import LabeledSentence
from gazner.errors import AlignmentError, ConfigError
from gazner.features import (
    FeatureResources,
    ModelPreset,
    PRESETS,
    default_stopwords,
    featurize,
    frequency_bin,
    is_bangla,
    is_digit_token,
    is_punct_token,
    read_features,
    write_features,
)
from gazner.gazetteer import GazetteerTrie
from gazner.kmeans import kmeans_fit
from gazner.sidecar import Sidecar


class TestPredicates:
    def test_is_bangla(self):
        assert is_bangla("ঢাকা")
        assert is_bangla("ঢাকা শহর")  # space is allowed
        assert is_bangla("")  # vacuously true
        assert is_bangla(chr(2432))
        assert is_bangla(chr(2559))
        assert not is_bangla(chr(2431))
        assert not is_bangla(chr(2560))
        assert not is_bangla("Dhaka")
        assert not is_bangla("ঢাকা1")

    def test_is_digit_token(self):
        assert is_digit_token("123")
        assert is_digit_token("০১২৯")  # Bangla digits
        assert is_digit_token("1০")
        assert not is_digit_token("12a")
        assert not is_digit_token("")
        assert not is_digit_token("১.৫")

    def test_is_punct_token(self):
        assert is_punct_token(",")
        assert is_punct_token("!?")
        assert is_punct_token("।")
        assert not is_punct_token("ক.")
        assert not is_punct_token("")

    def test_frequency_bins(self):
        assert frequency_bin(1) == "1"
        assert frequency_bin(2) == "2-5"
        assert frequency_bin(5) == "2-5"
        assert frequency_bin(6) == "6-20"
        assert frequency_bin(20) == "6-20"
        assert frequency_bin(21) == ">20"


class TestPresets:
    def test_ladder_is_cumulative_through_e(self):
        assert PRESETS["A"] == frozenset({"suffix", "prefix", "index", "length", "neighbors", "boundary"})
        assert PRESETS["B"] == PRESETS["A"] | {"isdigit", "ispunct", "frequency"}
        assert PRESETS["C"] == PRESETS["B"] | {"pos"}
        assert PRESETS["D"] == PRESETS["C"] | {"gazetteer"}
        assert PRESETS["E"] == PRESETS["D"] | {"isbangla", "isstopword"}

    def test_embedding_branches_fork_from_d(self):
        assert PRESETS["F"] == PRESETS["D"] | {"kmeans24"}
        assert PRESETS["G"] == PRESETS["F"] | {"kmeans23"}
        assert PRESETS["H"] == PRESETS["F"] | {"softmax_tag"}
        assert PRESETS["I"] == PRESETS["F"] | {"raw_embedding"}

    def test_lookup_is_case_insensitive(self):
        assert ModelPreset.named("d").name == "D"

    def test_unknown_preset_rejected(self):
        with pytest.raises(ConfigError):
            ModelPreset.named("Z")


class TestBasicFeatures:
    def setup_method(self):
        self.sent = LabeledSentence(
            "s0", ["ঢাকায়", "১২", "যায়"], pos=["NN", "CD", "VB"], labels=["B-LOC", "O", "O"]
        )

    def test_preset_a_features_exact(self):
        # Affixes and length count Unicode scalars; spell that out by
        # listing the scalars rather than slicing the string.
        tok = self.sent.tokens[0]
        scalars = [ch for ch in tok]
        feats = featurize([self.sent], "A")[0].features
        assert feats[0] == {
            f"suf3={''.join(scalars[-3:])}": 1.0,
            f"pre3={''.join(scalars[:3])}": 1.0,
            "idx": 0.0,
            "len": float(len(scalars)),
            f"w={tok}": 1.0,
            "w[+1]=১২": 1.0,
            "w[+2]=যায়": 1.0,
            "bos": 1.0,
        }
        assert feats[1]["w[-1]=ঢাকায়"] == 1.0
        assert feats[1]["idx"] == 1.0
        assert "bos" not in feats[1]
        assert feats[2]["eos"] == 1.0
        assert feats[2]["w[-2]=ঢাকায়"] == 1.0

    def test_short_token_uses_whole_word_affixes(self):
        sent = LabeledSentence("s0", ["ক"], labels=["O"])
        feats = featurize([sent], "A")[0].features
        assert feats[0]["suf3=ক"] == 1.0
        assert feats[0]["pre3=ক"] == 1.0

    def test_single_token_is_both_bos_and_eos(self):
        sent = LabeledSentence("s0", ["ক"], labels=["O"])
        feats = featurize([sent], "A")[0].features
        assert feats[0]["bos"] == 1.0 and feats[0]["eos"] == 1.0

    def test_preset_b_adds_surface_flags(self):
        feats = featurize([self.sent], "B")[0].features
        assert feats[1]["isdigit"] == 1.0
        assert "isdigit" not in feats[0]
        assert feats[0]["freq=1"] == 1.0

    def test_frequency_counted_over_featurized_split(self):
        sents = [
            LabeledSentence("s0", ["ক", "ক"], labels=["O", "O"]),
            LabeledSentence("s1", ["ক", "খ"], labels=["O", "O"]),
        ]
        feats = featurize(sents, "B")
        assert feats[0].features[0]["freq=2-5"] == 1.0
        assert feats[1].features[1]["freq=1"] == 1.0

    def test_preset_c_adds_pos_window(self):
        feats = featurize([self.sent], "C")[0].features
        assert feats[1]["pos=CD"] == 1.0
        assert feats[1]["pos[-1]=NN"] == 1.0
        assert feats[1]["pos[+1]=VB"] == 1.0

    def test_preset_c_without_pos_fails_fast(self):
        sent = LabeledSentence("s0", ["ক"], labels=["O"])
        with pytest.raises(ConfigError):
            featurize([sent], "C")

    def test_threads_do_not_change_output(self):
        sents = [
            LabeledSentence(f"s{i}", [f"ক{i}", "খ", "গ"], pos=["NN"] * 3, labels=["O"] * 3)
            for i in range(9)
        ]
        assert featurize(sents, "C", threads=1) == featurize(sents, "C", threads=4)


class TestGazetteerFeatures:
    def setup_method(self):
        self.trie = GazetteerTrie()
        self.trie.insert("ঢাকা", "LOC")

    def test_flag_window(self):
        sent = LabeledSentence("s0", ["ঢাকা", "শহরে", "যায়"], pos=["NN"] * 3, labels=["B-LOC", "O", "O"])
        res = FeatureResources(gazetteer=self.trie)
        feats = featurize([sent], "D", res)[0].features
        assert feats[0]["is_loc"] == 1.0
        assert feats[1]["is_loc[-1]"] == 1.0
        assert feats[2]["is_loc[-2]"] == 1.0
        assert "is_loc" not in feats[1]
        assert "is_per" not in feats[0]

    def test_missing_gazetteer_fails_fast(self):
        sent = LabeledSentence("s0", ["ক"], pos=["NN"], labels=["O"])
        with pytest.raises(ConfigError):
            featurize([sent], "D")

    def test_preset_e_adds_language_flags(self):
        sent = LabeledSentence("s0", ["ঢাকা", "এবং"], pos=["NN", "CC"], labels=["B-LOC", "O"])
        res = FeatureResources(gazetteer=self.trie, stopwords=default_stopwords())
        feats = featurize([sent], "E", res)[0].features
        assert feats[0]["isbangla"] == 1.0
        assert feats[1]["isstopword"] == 1.0
        assert "isstopword" not in feats[0]


def make_embedding_sidecar(sentences, layer, dim=4, scale=1.0):
    rng = np.random.default_rng(layer)
    sc = Sidecar(kind="emb", layer=layer, dim=dim)
    for s, sent in enumerate(sentences):
        for t in range(len(sent.tokens)):
            sc.put(s, t, rng.normal(scale=scale, size=dim))
    return sc


class TestEmbeddingFeatures:
    def setup_method(self):
        self.trie = GazetteerTrie()
        self.trie.insert("ঢাকা", "LOC")
        self.sents = [
            LabeledSentence("s0", ["ঢাকা", "যায়"], pos=["NN", "VB"], labels=["B-LOC", "O"]),
            LabeledSentence("s1", ["খবর"], pos=["NN"], labels=["O"]),
        ]
        self.emb24 = make_embedding_sidecar(self.sents, 24)
        self.emb23 = make_embedding_sidecar(self.sents, 23)
        self.km24 = kmeans_fit(self.emb24.vectors(), k=2, seed=0, layer=24)
        self.km23 = kmeans_fit(self.emb23.vectors(), k=2, seed=0, layer=23)

    def test_cluster_id_features(self):
        res = FeatureResources(gazetteer=self.trie, emb24=self.emb24, kmeans24=self.km24)
        feats = featurize(self.sents, "F", res)
        f = feats[0].features[0]
        hits = [name for name in f if name.startswith("km24=")]
        assert len(hits) == 1
        assert f[hits[0]] == 1.0

    def test_preset_g_needs_both_layers(self):
        res = FeatureResources(gazetteer=self.trie, emb24=self.emb24, kmeans24=self.km24)
        with pytest.raises(ConfigError):
            featurize(self.sents, "G", res)
        res.emb23, res.kmeans23 = self.emb23, self.km23
        feats = featurize(self.sents, "G", res)
        assert any(n.startswith("km23=") for n in feats[0].features[0])

    def test_softmax_tag_feature(self):
        tags = Sidecar(kind="tag", layer=-1, dim=0)
        for s, sent in enumerate(self.sents):
            for t in range(len(sent.tokens)):
                tags.put(s, t, "B-LOC" if t == 0 else "O")
        res = FeatureResources(gazetteer=self.trie, emb24=self.emb24, kmeans24=self.km24, tags=tags)
        feats = featurize(self.sents, "H", res)
        assert feats[0].features[0]["softmax_tag=B-LOC"] == 1.0

    def test_raw_embedding_keeps_every_dimension(self):
        sc = Sidecar(kind="emb", layer=24, dim=3)
        sc.put(0, 0, [0.456, 0.0, -0.005])
        sent = LabeledSentence("s0", ["ঢাকা"], pos=["NN"], labels=["B-LOC"])
        km = kmeans_fit(np.array([[0.456, 0.0, -0.005]]), k=1, seed=0, layer=24)
        res = FeatureResources(gazetteer=self.trie, emb24=sc, kmeans24=km)
        f = featurize([sent], "I", res)[0].features[0]
        assert f["e0"] == 46.0
        assert f["e1"] == 0.0  # zero dimensions still appear
        assert f["e2"] == -1.0

    def test_missing_sidecar_entry_names_position(self):
        sc = Sidecar(kind="emb", layer=24, dim=4)
        sc.put(0, 0, [0.0] * 4)  # second token missing
        res = FeatureResources(gazetteer=self.trie, emb24=sc, kmeans24=self.km24)
        with pytest.raises(AlignmentError) as info:
            featurize(self.sents[:1], "F", res)
        assert "token 1" in str(info.value)


class TestFeatureFile:
    def test_round_trip(self, tmp_path):
        sents = [
            LabeledSentence("s0", ["ঢাকায়", "১২"], pos=["NN", "CD"], labels=["B-LOC", "O"]),
            LabeledSentence("named", ["যায়"], pos=["VB"], labels=["O"]),
        ]
        feats = featurize(sents, "C")
        path = tmp_path / "f.feats"
        write_features(feats, path)
        loaded = read_features(path)
        assert loaded == feats

    def test_names_with_equals_survive(self, tmp_path):
        # A token that is itself an equals sign stresses the name=value split.
        sent = LabeledSentence("s0", ["=", "ক"], labels=["O", "O"])
        feats = featurize([sent], "A")
        path = tmp_path / "f.feats"
        write_features(feats, path)
        assert read_features(path) == feats

    def test_numeric_values_survive(self, tmp_path):
        from gazner.features import FeaturizedSentence

        feats = [
            FeaturizedSentence(
                id="s0",
                tokens=["ক"],
                labels=["O"],
                features=[{"e0": -41.0, "e1": 0.0, "score": 0.125}],
            )
        ]
        path = tmp_path / "f.feats"
        write_features(feats, path)
        assert read_features(path) == feats

    def test_unlabeled_round_trip(self, tmp_path):
        from gazner.features import FeaturizedSentence

        feats = [FeaturizedSentence(id="s0", tokens=["ক"], labels=None, features=[{"w=ক": 1.0}])]
        path = tmp_path / "f.feats"
        write_features(feats, path)
        assert read_features(path)[0].labels is None
