"""BIO-tagged corpus ingestion, cleaning, statistics, and class weights.

Supported file formats (UTF-8, blank line between sentences):

* ``two_col``    -- ``token<TAB>label``
* ``three_col``  -- ``token<TAB>pos<TAB>label``
* ``multiconer`` -- ``# id <sentence id>`` comment, then ``token _ _ label``
  rows with whitespace-separated placeholder columns
"""

from __future__ import annotations

import logging
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import AlignmentError, LabelError, NumericError, ParseError
from .ioutil import atomic_write

log = logging.getLogger("gazner.corpus")

DEFAULT_ENTITY_TYPES = ("PER", "LOC", "GRP", "CORP", "CW", "PROD")

FORMATS = ("two_col", "three_col", "multiconer")


def is_punct_char(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


@dataclass(frozen=True)
class LabelScheme:
    """Entity type inventory and the BIO labels derived from it.

    Labels are ordered B-t, I-t per entity type, with O last, so the
    label list always has 2 * len(entity_types) + 1 entries.
    """

    entity_types: tuple[str, ...] = DEFAULT_ENTITY_TYPES

    def __post_init__(self):
        if not self.entity_types:
            raise ValueError("at least one entity type required")
        if len(set(self.entity_types)) != len(self.entity_types):
            raise ValueError("duplicate entity types")
        if "O" in self.entity_types:
            raise ValueError("'O' cannot be an entity type")

    @property
    def labels(self) -> tuple[str, ...]:
        out = []
        for t in self.entity_types:
            out.append(f"B-{t}")
            out.append(f"I-{t}")
        out.append("O")
        return tuple(out)

    def is_valid(self, label: str) -> bool:
        if label == "O":
            return True
        if len(label) < 3 or label[1] != "-" or label[0] not in ("B", "I"):
            return False
        return label[2:] in self.entity_types

    def entity_type_of(self, label: str) -> str | None:
        """Entity type of a B-/I- label, None for O."""
        if label == "O":
            return None
        return label[2:]


@dataclass
class LabeledSentence:
    """Tokenized sentence with optional POS and BIO label columns."""

    id: str
    tokens: list[str]
    pos: list[str] | None = None
    labels: list[str] | None = None

    def __post_init__(self):
        if self.pos is not None and len(self.pos) != len(self.tokens):
            raise AlignmentError(f"sentence {self.id}: {len(self.pos)} POS tags for {len(self.tokens)} tokens")
        if self.labels is not None and len(self.labels) != len(self.tokens):
            raise AlignmentError(f"sentence {self.id}: {len(self.labels)} labels for {len(self.tokens)} tokens")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class CorpusStats:
    entity_counts: dict[str, int]
    token_label_counts: dict[str, int]
    total_tokens: int
    o_fraction: float


@dataclass
class ClassWeights:
    """Per-label loss weights plus the unclamped values for inspection."""

    weights: dict[str, float]
    raw: dict[str, float]
    n: int
    total: int
    floor: float


def read_conll(path: str | Path, fmt: str = "two_col", scheme: LabelScheme | None = None) -> list[LabeledSentence]:
    """Read a labeled corpus file; labels are validated against the scheme.

    Sentence ids come from ``# id`` comments in multiconer files and are
    synthesized as s0, s1, ... for the column formats, so a read/write/read
    cycle through the same format reproduces the sentences exactly.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown corpus format {fmt!r}")
    scheme = scheme or LabelScheme()
    path = Path(path)
    sentences: list[LabeledSentence] = []
    tokens: list[str] = []
    pos: list[str] = []
    labels: list[str] = []
    current_id: str | None = None

    def flush():
        nonlocal tokens, pos, labels, current_id
        if tokens:
            sid = current_id if current_id is not None else f"s{len(sentences)}"
            sentences.append(
                LabeledSentence(
                    id=sid,
                    tokens=tokens,
                    pos=pos if fmt == "three_col" else None,
                    labels=labels,
                )
            )
        tokens, pos, labels = [], [], []
        current_id = None

    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                flush()
                continue
            if fmt == "multiconer" and line.startswith("# id"):
                flush()
                current_id = line[len("# id") :].strip()
                continue
            if fmt == "multiconer":
                fields = line.split()
                if len(fields) != 4:
                    raise ParseError(f"expected 4 whitespace-separated fields, got {len(fields)}", str(path), line_no)
                token, label = fields[0], fields[3]
            elif fmt == "three_col":
                fields = line.split("\t")
                if len(fields) != 3:
                    raise ParseError(f"expected 3 tab-separated fields, got {len(fields)}", str(path), line_no)
                token, label = fields[0], fields[2]
                pos.append(fields[1])
            else:
                fields = line.split("\t")
                if len(fields) != 2:
                    raise ParseError(f"expected 2 tab-separated fields, got {len(fields)}", str(path), line_no)
                token, label = fields
            if not scheme.is_valid(label):
                raise LabelError(f"{path}:{line_no}: unknown label {label!r}")
            tokens.append(token)
            labels.append(label)
    flush()
    return sentences


def write_conll(sentences: list[LabeledSentence], path: str | Path, fmt: str = "two_col") -> None:
    """Write sentences in a corpus format; inverse of :func:`read_conll`."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown corpus format {fmt!r}")
    with atomic_write(path) as fh:
        for sent in sentences:
            if sent.labels is None:
                raise LabelError(f"sentence {sent.id} has no labels to write")
            if fmt == "three_col" and sent.pos is None:
                raise LabelError(f"sentence {sent.id} has no POS column for three_col output")
            if fmt == "multiconer":
                fh.write(f"# id {sent.id}\n")
            for i, token in enumerate(sent.tokens):
                if fmt == "multiconer":
                    fh.write(f"{token} _ _ {sent.labels[i]}\n")
                elif fmt == "three_col":
                    fh.write(f"{token}\t{sent.pos[i]}\t{sent.labels[i]}\n")
                else:
                    fh.write(f"{token}\t{sent.labels[i]}\n")
            fh.write("\n")


def repair_bio(labels: list[str], scheme: LabelScheme | None = None) -> tuple[list[str], int]:
    """Convert orphan I-x labels (no preceding B-x/I-x) to B-x.

    Returns the repaired sequence and the number of changes; never raises.
    """
    repaired = list(labels)
    fixes = 0
    prev_type: str | None = None
    for i, label in enumerate(repaired):
        if label.startswith("I-"):
            etype = label[2:]
            if prev_type != etype:
                repaired[i] = f"B-{etype}"
                fixes += 1
            prev_type = etype
        elif label.startswith("B-"):
            prev_type = label[2:]
        else:
            prev_type = None
    if fixes:
        log.debug("repaired %d orphan I- labels", fixes)
    return repaired, fixes


def _clean_token(token: str) -> str:
    # Single-character punctuation tokens stay; longer tokens lose any
    # leading punctuation. Trailing characters (abbreviation periods
    # included) are never touched.
    if len(token) <= 1:
        return token
    i = 0
    while i < len(token) and is_punct_char(token[i]):
        i += 1
    return token[i:]


def clean_corpus(sentences: list[LabeledSentence]) -> list[LabeledSentence]:
    """Strip leading punctuation from tokens; drop tokens that vanish.

    Labels and POS tags of dropped tokens are dropped with them, and a
    sentence whose tokens all vanish is removed entirely. Idempotent.
    """
    out: list[LabeledSentence] = []
    for sent in sentences:
        kept_tokens: list[str] = []
        kept_pos: list[str] = []
        kept_labels: list[str] = []
        for i, token in enumerate(sent.tokens):
            cleaned = _clean_token(token)
            if not cleaned:
                log.debug("sentence %s: dropped token %r after cleaning", sent.id, token)
                continue
            kept_tokens.append(cleaned)
            if sent.pos is not None:
                kept_pos.append(sent.pos[i])
            if sent.labels is not None:
                kept_labels.append(sent.labels[i])
        if not kept_tokens:
            log.debug("sentence %s: empty after cleaning, removed", sent.id)
            continue
        out.append(
            LabeledSentence(
                id=sent.id,
                tokens=kept_tokens,
                pos=kept_pos if sent.pos is not None else None,
                labels=kept_labels if sent.labels is not None else None,
            )
        )
    return out


def corpus_stats(sentences: list[LabeledSentence], scheme: LabelScheme | None = None) -> CorpusStats:
    """Count entity mentions (B- prefixes) and per-label token totals."""
    scheme = scheme or LabelScheme()
    entity_counts: Counter[str] = Counter()
    label_counts: dict[str, int] = {label: 0 for label in scheme.labels}
    total = 0
    for sent in sentences:
        if sent.labels is None:
            raise LabelError(f"sentence {sent.id} is unlabeled")
        for label in sent.labels:
            if label not in label_counts:
                raise LabelError(f"sentence {sent.id}: unknown label {label!r}")
            label_counts[label] += 1
            total += 1
            if label.startswith("B-"):
                entity_counts[label[2:]] += 1
    for etype in scheme.entity_types:
        entity_counts.setdefault(etype, 0)
    o_fraction = label_counts["O"] / total if total else 0.0
    return CorpusStats(
        entity_counts=dict(entity_counts),
        token_label_counts=label_counts,
        total_tokens=total,
        o_fraction=o_fraction,
    )


def class_weights(
    token_label_counts: dict[str, int],
    floor: float = 0.01,
    n: int | None = None,
) -> ClassWeights:
    """Imbalance-countering loss weights: ``(1 - (n+2) * count / total) * 10``.

    ``n`` defaults to the number of labels in the supplied map. The raw
    value goes negative for dominant labels, so the usable weights are
    clamped from below at ``floor``; the unclamped values are kept in
    ``raw`` for inspection.
    """
    if floor < 0:
        raise ValueError("floor must be non-negative")
    for label, count in token_label_counts.items():
        if count < 0:
            raise ValueError(f"negative count for label {label!r}")
    total = sum(token_label_counts.values())
    if total == 0:
        raise NumericError("total token count is zero")
    if n is None:
        n = len(token_label_counts)
    raw = {label: (1.0 - (n + 2) * count / total) * 10.0 for label, count in token_label_counts.items()}
    weights = {label: max(floor, value) for label, value in raw.items()}
    return ClassWeights(weights=weights, raw=raw, n=n, total=total, floor=floor)
