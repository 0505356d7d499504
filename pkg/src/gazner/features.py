"""Token feature extraction under named feature presets.

Each token becomes a sparse mapping from feature name to numeric value.
Most features are indicator-valued categoricals rendered as
``name=value`` with value 1; a few are genuinely numeric (token length,
position, quantized embedding dimensions). Preset names A through I pick
which feature groups are active, mirroring an ablation ladder from
surface features up to external embeddings.
"""

from __future__ import annotations

import unicodedata
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import LabeledSentence
from .errors import AlignmentError, ConfigError, FormatError
from .gazetteer import GazetteerTrie, sentence_flags
from .ioutil import atomic_write, escape_name, unescape_name
from .kmeans import ClusterModel, assign_many
from .sidecar import Sidecar, quantize_embedding

BANGLA_LOW = 2432
BANGLA_HIGH = 2559

GROUPS = (
    "suffix",
    "prefix",
    "index",
    "length",
    "neighbors",
    "boundary",
    "isdigit",
    "ispunct",
    "frequency",
    "pos",
    "gazetteer",
    "isbangla",
    "isstopword",
    "kmeans24",
    "kmeans23",
    "softmax_tag",
    "raw_embedding",
)

_BASE = frozenset({"suffix", "prefix", "index", "length", "neighbors", "boundary"})
_SURFACE = _BASE | {"isdigit", "ispunct", "frequency"}

PRESETS: dict[str, frozenset[str]] = {
    "A": _BASE,
    "B": _SURFACE,
    "C": _SURFACE | {"pos"},
    "D": _SURFACE | {"pos", "gazetteer"},
    "E": _SURFACE | {"pos", "gazetteer", "isbangla", "isstopword"},
    "F": _SURFACE | {"pos", "gazetteer", "kmeans24"},
    "G": _SURFACE | {"pos", "gazetteer", "kmeans24", "kmeans23"},
    "H": _SURFACE | {"pos", "gazetteer", "kmeans24", "softmax_tag"},
    "I": _SURFACE | {"pos", "gazetteer", "kmeans24", "raw_embedding"},
}


def is_bangla(text: str) -> bool:
    """True when every character is a Bangla codepoint or a space.

    The Bangla block spans codepoints 2432 through 2559; the empty
    string passes vacuously.
    """
    return all(BANGLA_LOW <= ord(ch) <= BANGLA_HIGH or ch == " " for ch in text)


def is_digit_token(text: str) -> bool:
    """True for non-empty strings of ASCII or Bangla digits."""
    if not text:
        return False
    return all("0" <= ch <= "9" or "০" <= ch <= "৯" for ch in text)


def is_punct_token(text: str) -> bool:
    """True for non-empty strings of Unicode punctuation characters."""
    if not text:
        return False
    return all(unicodedata.category(ch).startswith("P") for ch in text)


def frequency_bin(count: int) -> str:
    if count <= 1:
        return "1"
    if count <= 5:
        return "2-5"
    if count <= 20:
        return "6-20"
    return ">20"


@dataclass(frozen=True)
class ModelPreset:
    name: str
    groups: frozenset[str]

    @classmethod
    def named(cls, name: str) -> "ModelPreset":
        key = name.upper()
        if key not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; choose one of {', '.join(sorted(PRESETS))}")
        return cls(name=key, groups=PRESETS[key])

    def needs(self, group: str) -> bool:
        return group in self.groups


@dataclass
class FeatureResources:
    """External inputs some feature groups depend on.

    Presets validate their needs against this bundle up front, so a
    missing gazetteer or sidecar fails before any sentence is touched.
    """

    gazetteer: GazetteerTrie | None = None
    kmeans24: ClusterModel | None = None
    kmeans23: ClusterModel | None = None
    emb24: Sidecar | None = None
    emb23: Sidecar | None = None
    tags: Sidecar | None = None
    stopwords: frozenset[str] = frozenset()
    gaz_mode: str = "per_token"
    max_span: int = 5


@dataclass
class FeaturizedSentence:
    id: str
    tokens: list[str]
    labels: list[str] | None
    features: list[dict[str, float]]


def _validate(preset: ModelPreset, sentences: list[LabeledSentence], res: FeatureResources) -> None:
    if preset.needs("pos"):
        for sent in sentences:
            if sent.pos is None:
                raise ConfigError(
                    f"preset {preset.name} uses POS features but sentence {sent.id} has no POS column"
                )
    requirements = [
        ("gazetteer", res.gazetteer, "a gazetteer"),
        ("kmeans24", res.kmeans24, "a layer-24 cluster model"),
        ("kmeans23", res.kmeans23, "a layer-23 cluster model"),
        ("kmeans24", res.emb24, "a layer-24 embedding sidecar"),
        ("kmeans23", res.emb23, "a layer-23 embedding sidecar"),
        ("softmax_tag", res.tags, "a tag sidecar"),
        ("raw_embedding", res.emb24, "a layer-24 embedding sidecar"),
        ("isstopword", res.stopwords or None, "a stopword list"),
    ]
    for group, resource, what in requirements:
        if preset.needs(group) and resource is None:
            raise ConfigError(f"preset {preset.name} needs {what}")


def _embedding_for(sidecar: Sidecar, sent_idx: int, tok_idx: int, sent_id: str) -> np.ndarray:
    vec = sidecar.get(sent_idx, tok_idx)
    if vec is None:
        raise AlignmentError(
            f"sidecar (layer {sidecar.layer}) has no entry for sentence {sent_idx} "
            f"({sent_id}) token {tok_idx}"
        )
    return vec


def _featurize_one(
    sent: LabeledSentence,
    sent_idx: int,
    preset: ModelPreset,
    res: FeatureResources,
    freq: Counter[str],
) -> FeaturizedSentence:
    tokens = sent.tokens
    T = len(tokens)
    feats: list[dict[str, float]] = [dict() for _ in range(T)]

    gaz_flags = None
    if preset.needs("gazetteer"):
        gaz_flags = sentence_flags(res.gazetteer, tokens, mode=res.gaz_mode, max_span=res.max_span)

    cluster24 = cluster23 = None
    if preset.needs("kmeans24"):
        vecs = np.stack([_embedding_for(res.emb24, sent_idx, t, sent.id) for t in range(T)])
        cluster24 = assign_many(res.kmeans24, vecs)
    if preset.needs("kmeans23"):
        vecs = np.stack([_embedding_for(res.emb23, sent_idx, t, sent.id) for t in range(T)])
        cluster23 = assign_many(res.kmeans23, vecs)

    for i, token in enumerate(tokens):
        f = feats[i]
        if preset.needs("suffix"):
            f[f"suf3={token[-3:]}"] = 1.0
        if preset.needs("prefix"):
            f[f"pre3={token[:3]}"] = 1.0
        if preset.needs("index"):
            f["idx"] = float(i)
        if preset.needs("length"):
            f["len"] = float(len(token))
        if preset.needs("neighbors"):
            f[f"w={token}"] = 1.0
            for off in (-2, -1, 1, 2):
                j = i + off
                if 0 <= j < T:
                    sign = f"{off:+d}"
                    f[f"w[{sign}]={tokens[j]}"] = 1.0
        if preset.needs("boundary"):
            if i == 0:
                f["bos"] = 1.0
            if i == T - 1:
                f["eos"] = 1.0
        if preset.needs("isdigit") and is_digit_token(token):
            f["isdigit"] = 1.0
        if preset.needs("ispunct") and is_punct_token(token):
            f["ispunct"] = 1.0
        if preset.needs("frequency"):
            f[f"freq={frequency_bin(freq[token])}"] = 1.0
        if preset.needs("pos"):
            f[f"pos={sent.pos[i]}"] = 1.0
            for off in (-2, -1, 1, 2):
                j = i + off
                if 0 <= j < T:
                    sign = f"{off:+d}"
                    f[f"pos[{sign}]={sent.pos[j]}"] = 1.0
        if preset.needs("gazetteer"):
            for off in (-2, -1, 0, 1, 2):
                j = i + off
                if 0 <= j < T:
                    suffix = "" if off == 0 else f"[{off:+d}]"
                    for tag in gaz_flags[j].tags:
                        f[f"is_{tag.lower()}{suffix}"] = 1.0
        if preset.needs("isbangla") and is_bangla(token):
            f["isbangla"] = 1.0
        if preset.needs("isstopword") and token in res.stopwords:
            f["isstopword"] = 1.0
        if preset.needs("kmeans24"):
            f[f"km24={int(cluster24[i])}"] = 1.0
        if preset.needs("kmeans23"):
            f[f"km23={int(cluster23[i])}"] = 1.0
        if preset.needs("softmax_tag"):
            tag = res.tags.get(sent_idx, i)
            if tag is None:
                raise AlignmentError(
                    f"tag sidecar has no entry for sentence {sent_idx} ({sent.id}) token {i}"
                )
            f[f"softmax_tag={tag}"] = 1.0
        if preset.needs("raw_embedding"):
            vec = _embedding_for(res.emb24, sent_idx, i, sent.id)
            for j, q in enumerate(quantize_embedding(vec)):
                f[f"e{j}"] = float(q)

    return FeaturizedSentence(id=sent.id, tokens=list(tokens), labels=list(sent.labels) if sent.labels else None, features=feats)


def featurize(
    sentences: list[LabeledSentence],
    preset: ModelPreset | str,
    resources: FeatureResources | None = None,
    threads: int = 1,
) -> list[FeaturizedSentence]:
    """Extract features for every sentence under a preset.

    Token frequencies feed the frequency bins and are counted over the
    sentences passed in, so a split is featurized against itself. The
    thread count only parallelizes the per-sentence map; output order and
    content are identical for any value.
    """
    if isinstance(preset, str):
        preset = ModelPreset.named(preset)
    res = resources or FeatureResources()
    _validate(preset, sentences, res)
    freq: Counter[str] = Counter()
    if preset.needs("frequency"):
        for sent in sentences:
            freq.update(sent.tokens)

    if threads <= 1 or len(sentences) < 2:
        return [_featurize_one(s, i, preset, res, freq) for i, s in enumerate(sentences)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda pair: _featurize_one(pair[1], pair[0], preset, res, freq), enumerate(sentences)))


def write_features(featurized: list[FeaturizedSentence], path: str | Path) -> None:
    """Serialize featurized sentences as token/label/feature rows.

    Each row is ``token<TAB>label<TAB>name=value ...`` with feature names
    escaped and sorted; unlabeled tokens write ``-`` in the label slot.
    Values that are whole numbers render without a decimal point.
    """

    def fmt_value(v: float) -> str:
        return str(int(v)) if float(v).is_integer() else repr(float(v))

    with atomic_write(path) as fh:
        for sent in featurized:
            fh.write(f"# id {sent.id}\n")
            for i, token in enumerate(sent.tokens):
                label = sent.labels[i] if sent.labels else "-"
                parts = [
                    f"{escape_name(name)}={fmt_value(value)}"
                    for name, value in sorted(sent.features[i].items())
                ]
                fh.write(f"{token}\t{label}\t{' '.join(parts)}\n")
            fh.write("\n")


def read_features(path: str | Path) -> list[FeaturizedSentence]:
    """Inverse of :func:`write_features`."""
    path = Path(path)
    out: list[FeaturizedSentence] = []
    tokens: list[str] = []
    labels: list[str] = []
    feats: list[dict[str, float]] = []
    current_id: str | None = None

    def flush():
        nonlocal tokens, labels, feats, current_id
        if tokens:
            has_labels = any(l != "-" for l in labels)
            out.append(
                FeaturizedSentence(
                    id=current_id if current_id is not None else f"s{len(out)}",
                    tokens=tokens,
                    labels=labels if has_labels else None,
                    features=feats,
                )
            )
        tokens, labels, feats = [], [], []
        current_id = None

    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                flush()
                continue
            if line.startswith("# id"):
                flush()
                current_id = line[len("# id") :].strip()
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise FormatError(f"{path}:{line_no}: expected 3 tab-separated fields")
            token, label, feat_str = fields
            f: dict[str, float] = {}
            for part in feat_str.split() if feat_str else []:
                name, _, value = part.rpartition("=")
                if not name:
                    raise FormatError(f"{path}:{line_no}: malformed feature {part!r}")
                try:
                    f[unescape_name(name)] = float(value)
                except ValueError as exc:
                    raise FormatError(f"{path}:{line_no}: bad feature value in {part!r}") from exc
            tokens.append(token)
            labels.append(label)
            feats.append(f)
    flush()
    return out


def load_stopwords(path: str | Path) -> frozenset[str]:
    """One stopword per line; blank lines and # comments are skipped."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word and not word.startswith("#"):
                words.add(word)
    return frozenset(words)


def default_stopwords() -> frozenset[str]:
    """The bundled Bangla stopword list."""
    from importlib.resources import files

    text = files("gazner").joinpath("data/stopwords_bn.txt").read_text(encoding="utf-8")
    words = {line.strip() for line in text.splitlines()}
    return frozenset(w for w in words if w and not w.startswith("#"))
