"""Gazetteer-augmented CRF toolkit for Bangla named entity recognition."""

from .corpus import (
    ClassWeights,
    CorpusStats,
    LabelScheme,
    LabeledSentence,
    class_weights,
    clean_corpus,
    corpus_stats,
    read_conll,
    repair_bio,
    write_conll,
)
from .crf import CrfModel, Lattice, decode, log_partition, marginals, score_sequence, train, viterbi_lattice
from .errors import (
    AlignmentError,
    ConfigError,
    FormatError,
    GaznerError,
    LabelError,
    NumericError,
    ParseError,
    TrainingError,
)
from .evaluation import EvalReport, evaluate, extract_entities, format_report
from .features import FeatureResources, ModelPreset, PRESETS, featurize, read_features, write_features
from .gazetteer import GazetteerTrie, build_gazetteer, normalize_phrase, sentence_flags
from .kmeans import ClusterModel, kmeans_assign, kmeans_fit
from .sidecar import Sidecar, pool_subwords, quantize_embedding, read_sidecar

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "ClassWeights",
    "ClusterModel",
    "ConfigError",
    "CorpusStats",
    "CrfModel",
    "EvalReport",
    "FeatureResources",
    "FormatError",
    "GaznerError",
    "GazetteerTrie",
    "LabelError",
    "LabelScheme",
    "LabeledSentence",
    "Lattice",
    "ModelPreset",
    "NumericError",
    "PRESETS",
    "ParseError",
    "Sidecar",
    "TrainingError",
    "build_gazetteer",
    "class_weights",
    "clean_corpus",
    "corpus_stats",
    "decode",
    "evaluate",
    "extract_entities",
    "featurize",
    "format_report",
    "kmeans_assign",
    "kmeans_fit",
    "log_partition",
    "marginals",
    "normalize_phrase",
    "pool_subwords",
    "quantize_embedding",
    "read_conll",
    "read_features",
    "read_sidecar",
    "repair_bio",
    "score_sequence",
    "sentence_flags",
    "train",
    "viterbi_lattice",
    "write_conll",
    "write_features",
]
