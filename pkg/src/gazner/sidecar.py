"""Sidecar files carrying per-token vectors or tags from an external model.

A sidecar is a text file aligned to a corpus by (sentence index, token
index). The first line is a header:

    #SIDECAR kind=emb layer=24 dim=1024
    #SIDECAR kind=tag layer=-1 dim=0

Each following non-empty line is ``s t v1 v2 ... vd`` for embeddings or
``s t TAG`` for tags, whitespace separated. Tag sidecars use dim=0.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AlignmentError, FormatError, NumericError
from .ioutil import atomic_write

_HEADER_RE = re.compile(r"^#SIDECAR kind=(emb|tag) layer=(-?\d+) dim=(\d+)$")


@dataclass
class Sidecar:
    """In-memory sidecar: a (sentence, token) keyed map of values."""

    kind: str
    layer: int
    dim: int
    _entries: dict[tuple[int, int], object] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("emb", "tag"):
            raise ValueError(f"sidecar kind must be 'emb' or 'tag', got {self.kind!r}")
        if self.kind == "emb" and self.dim <= 0:
            raise ValueError("embedding sidecar needs dim > 0")
        if self.kind == "tag" and self.dim != 0:
            raise ValueError("tag sidecar must have dim=0")

    def put(self, sent: int, tok: int, value) -> None:
        key = (sent, tok)
        if key in self._entries:
            raise FormatError(f"duplicate sidecar entry for sentence {sent} token {tok}")
        if self.kind == "emb":
            vec = np.asarray(value, dtype=np.float64)
            if vec.shape != (self.dim,):
                raise FormatError(
                    f"sentence {sent} token {tok}: expected {self.dim} values, got {vec.shape}"
                )
            self._entries[key] = vec
        else:
            self._entries[key] = str(value)

    def get(self, sent: int, tok: int):
        return self._entries.get((sent, tok))

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: tuple[int, int]) -> bool:
        return key in self._entries

    def keys(self):
        return self._entries.keys()

    def vectors(self) -> np.ndarray:
        """All embedding vectors stacked in file (insertion) order."""
        if self.kind != "emb":
            raise ValueError("vectors() is only meaningful for embedding sidecars")
        if not self._entries:
            return np.zeros((0, self.dim))
        return np.stack(list(self._entries.values()))

    def save(self, path: str | Path) -> None:
        with atomic_write(path) as fh:
            fh.write(f"#SIDECAR kind={self.kind} layer={self.layer} dim={self.dim}\n")
            for (s, t), value in self._entries.items():
                if self.kind == "emb":
                    vals = " ".join(repr(float(v)) for v in value)
                    fh.write(f"{s} {t} {vals}\n")
                else:
                    fh.write(f"{s} {t} {value}\n")


def read_sidecar(path: str | Path) -> Sidecar:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").rstrip("\r")
        m = _HEADER_RE.match(header)
        if not m:
            raise FormatError(f"{path}:1: malformed sidecar header {header!r}")
        kind, layer, dim = m.group(1), int(m.group(2)), int(m.group(3))
        try:
            sc = Sidecar(kind=kind, layer=layer, dim=dim)
        except ValueError as exc:
            raise FormatError(f"{path}:1: {exc}") from exc
        for line_no, raw in enumerate(fh, start=2):
            line = raw.strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) < 3:
                raise FormatError(f"{path}:{line_no}: expected at least 3 fields")
            try:
                s, t = int(fields[0]), int(fields[1])
            except ValueError as exc:
                raise FormatError(f"{path}:{line_no}: bad sentence/token index") from exc
            if kind == "emb":
                if len(fields) != 2 + dim:
                    raise FormatError(
                        f"{path}:{line_no}: expected {dim} values, got {len(fields) - 2}"
                    )
                try:
                    vec = [float(v) for v in fields[2:]]
                except ValueError as exc:
                    raise FormatError(f"{path}:{line_no}: non-numeric value") from exc
                try:
                    sc.put(s, t, vec)
                except FormatError as exc:
                    raise FormatError(f"{path}:{line_no}: {exc}") from exc
            else:
                if len(fields) != 3:
                    raise FormatError(f"{path}:{line_no}: expected exactly one tag")
                try:
                    sc.put(s, t, fields[2])
                except FormatError as exc:
                    raise FormatError(f"{path}:{line_no}: {exc}") from exc
    return sc


def pool_subwords(piece_counts: list[int], piece_vectors: np.ndarray, policy: str = "first_piece") -> np.ndarray:
    """Collapse subword piece vectors to one vector per token.

    ``piece_counts[i]`` is the number of pieces token i was split into;
    the counts must sum to the number of rows in ``piece_vectors``.
    ``first_piece`` keeps each token's first piece, ``mean`` averages.
    """
    if policy not in ("first_piece", "mean"):
        raise ValueError(f"unknown pooling policy {policy!r}")
    piece_vectors = np.asarray(piece_vectors, dtype=np.float64)
    for i, c in enumerate(piece_counts):
        if c < 1:
            raise AlignmentError(f"token {i} has piece count {c}; every token needs at least one piece")
    total = sum(piece_counts)
    if total != piece_vectors.shape[0]:
        raise AlignmentError(
            f"piece counts sum to {total} but {piece_vectors.shape[0]} piece vectors supplied"
        )
    out = np.empty((len(piece_counts), piece_vectors.shape[1]))
    start = 0
    for i, c in enumerate(piece_counts):
        if policy == "first_piece":
            out[i] = piece_vectors[start]
        else:
            out[i] = piece_vectors[start : start + c].mean(axis=0)
        start += c
    return out


def quantize_embedding(vector) -> list[int]:
    """Scale by 100 and round half away from zero to integers.

    round(0.456 * 100) -> 46, round(-0.005 * 100) -> -1. Non-finite
    input is rejected rather than silently propagated.
    """
    out = []
    for v in np.asarray(vector, dtype=np.float64).ravel():
        y = float(v) * 100.0
        if not math.isfinite(y):
            raise NumericError(f"cannot quantize non-finite value {v!r}")
        out.append(int(math.copysign(math.floor(abs(y) + 0.5), y)))
    return out
