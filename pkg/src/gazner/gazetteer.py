"""Entity gazetteer backed by a character-level trie.

Phrases are stored as full character sequences, spaces included, so
multi-word entries match as units. Each terminal node carries the set of
entity types the phrase is listed under. The trie serializes to a small
versioned binary format with a canonical child order, making the bytes a
deterministic function of the entry set.
"""

from __future__ import annotations

import io
import logging
import struct
import unicodedata
from dataclasses import dataclass
from pathlib import Path

from .errors import FormatError
from .corpus import LabelScheme, is_punct_char

log = logging.getLogger("gazner.gazetteer")

_MAGIC = b"GZTR"
_VERSION = 1


def normalize_phrase(phrase: str) -> str:
    """Canonical form for gazetteer entries.

    NFC normalization, internal whitespace runs collapsed to one space,
    and punctuation or space characters trimmed from both edges.
    """
    phrase = unicodedata.normalize("NFC", phrase)
    phrase = " ".join(phrase.split())
    while phrase and (is_punct_char(phrase[0]) or phrase[0] == " "):
        phrase = phrase[1:]
    while phrase and (is_punct_char(phrase[-1]) or phrase[-1] == " "):
        phrase = phrase[:-1]
    return phrase


class _Node:
    __slots__ = ("children", "tags")

    def __init__(self):
        self.children: dict[str, _Node] = {}
        self.tags: set[str] = set()


@dataclass(frozen=True)
class GazetteerFlags:
    """Entity type flags attached to one token position."""

    tags: frozenset[str]

    def has(self, tag: str) -> bool:
        return tag in self.tags


class GazetteerTrie:
    """Character trie mapping normalized phrases to entity type sets."""

    def __init__(self, tag_order: tuple[str, ...] | None = None):
        self._root = _Node()
        self.tag_order: tuple[str, ...] = tag_order or LabelScheme().entity_types
        self.entry_count: dict[str, int] = {tag: 0 for tag in self.tag_order}

    def insert(self, phrase: str, tag: str) -> bool:
        """Insert a normalized phrase under an entity type.

        Returns True if the (phrase, tag) pair was new. Empty phrases and
        unknown tags are rejected.
        """
        if tag not in self.entry_count:
            raise ValueError(f"unknown entity type {tag!r}")
        phrase = normalize_phrase(phrase)
        if not phrase:
            return False
        node = self._root
        for ch in phrase:
            node = node.children.setdefault(ch, _Node())
        if tag in node.tags:
            return False
        node.tags.add(tag)
        self.entry_count[tag] += 1
        return True

    def lookup(self, phrase: str) -> frozenset[str]:
        tags, _ = self.lookup_steps(phrase)
        return tags

    def lookup_steps(self, phrase: str) -> tuple[frozenset[str], int]:
        """Look up a phrase, counting trie descents.

        The step count is the number of child-edge traversals plus the
        final terminal check, so it never exceeds len(phrase) + 1.
        """
        phrase = unicodedata.normalize("NFC", phrase)
        node = self._root
        steps = 0
        for ch in phrase:
            steps += 1
            child = node.children.get(ch)
            if child is None:
                return frozenset(), steps
            node = child
        steps += 1
        return frozenset(node.tags), steps

    def __contains__(self, phrase: str) -> bool:
        return bool(self.lookup(phrase))

    def __len__(self) -> int:
        return sum(self.entry_count.values())

    def iter_entries(self):
        """Yield (phrase, tags) pairs in canonical (character-sorted) order."""
        stack: list[tuple[_Node, str]] = [(self._root, "")]
        while stack:
            node, prefix = stack.pop()
            if node.tags:
                yield prefix, frozenset(node.tags)
            for ch in sorted(node.children, reverse=True):
                stack.append((node.children[ch], prefix + ch))

    # -- binary serialization -------------------------------------------

    def save(self, path: str | Path) -> None:
        buf = io.BytesIO()
        buf.write(_MAGIC)
        buf.write(struct.pack("<B", _VERSION))
        buf.write(struct.pack("<B", len(self.tag_order)))
        for tag in self.tag_order:
            raw = tag.encode("utf-8")
            buf.write(struct.pack("<B", len(raw)))
            buf.write(raw)
        for tag in self.tag_order:
            buf.write(struct.pack("<I", self.entry_count[tag]))
        tag_bit = {tag: i for i, tag in enumerate(self.tag_order)}
        stack = [self._root]
        while stack:
            node = stack.pop()
            mask = 0
            for tag in node.tags:
                mask |= 1 << tag_bit[tag]
            buf.write(struct.pack("<QI", mask, len(node.children)))
            for ch in sorted(node.children, reverse=True):
                stack.append(node.children[ch])
            for ch in sorted(node.children):
                buf.write(struct.pack("<I", ord(ch)))
        data = buf.getvalue()
        from .ioutil import atomic_write

        with atomic_write(path, binary=True) as fh:
            fh.write(data)

    @classmethod
    def load(cls, path: str | Path) -> "GazetteerTrie":
        data = Path(path).read_bytes()
        view = memoryview(data)
        off = 0

        def take(n: int) -> memoryview:
            nonlocal off
            if off + n > len(view):
                raise FormatError(f"{path}: truncated gazetteer file")
            chunk = view[off : off + n]
            off += n
            return chunk

        if bytes(take(4)) != _MAGIC:
            raise FormatError(f"{path}: not a gazetteer file")
        (version,) = struct.unpack("<B", take(1))
        if version != _VERSION:
            raise FormatError(f"{path}: unsupported gazetteer version {version}")
        (n_tags,) = struct.unpack("<B", take(1))
        tags = []
        for _ in range(n_tags):
            (tlen,) = struct.unpack("<B", take(1))
            tags.append(bytes(take(tlen)).decode("utf-8"))
        trie = cls(tag_order=tuple(tags))
        counts = struct.unpack(f"<{n_tags}I", take(4 * n_tags))
        for tag, count in zip(tags, counts):
            trie.entry_count[tag] = count

        # Rebuild by mirroring the preorder walk: the writer pushes
        # children in reverse-sorted order and emits codepoints sorted,
        # so the next n_children subtrees arrive in sorted char order.
        def read_node() -> _Node:
            mask, n_children = struct.unpack("<QI", take(12))
            node = _Node()
            for i in range(n_tags):
                if mask & (1 << i):
                    node.tags.add(tags[i])
            chars = [chr(cp) for (cp,) in struct.iter_unpack("<I", take(4 * n_children))]
            for ch in chars:
                node.children[ch] = read_node()
            return node

        trie._root = read_node()
        if off != len(view):
            raise FormatError(f"{path}: {len(view) - off} trailing bytes after gazetteer data")
        return trie


def build_gazetteer(
    lists: dict[str, str | Path] | None = None,
    tsv_paths: list[str | Path] | None = None,
    scheme: LabelScheme | None = None,
) -> GazetteerTrie:
    """Build a trie from per-type phrase lists and/or two-column TSVs.

    ``lists`` maps entity type to a one-phrase-per-line file; TSV rows are
    ``phrase<TAB>type``. Lines that normalize to nothing are skipped.
    """
    scheme = scheme or LabelScheme()
    trie = GazetteerTrie(tag_order=scheme.entity_types)
    for tag, path in (lists or {}).items():
        if tag not in trie.entry_count:
            raise ValueError(f"unknown entity type {tag!r}")
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                phrase = line.strip()
                if phrase:
                    trie.insert(phrase, tag)
    for path in tsv_paths or []:
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.rstrip("\n").rstrip("\r")
                if not line.strip():
                    continue
                fields = line.split("\t")
                if len(fields) != 2:
                    raise FormatError(f"{path}:{line_no}: expected phrase<TAB>type")
                trie.insert(fields[0], fields[1])
    log.info("gazetteer built: %s", ", ".join(f"{t}={c}" for t, c in trie.entry_count.items()))
    return trie


def sentence_flags(
    trie: GazetteerTrie,
    tokens: list[str],
    mode: str = "per_token",
    max_span: int = 5,
) -> list[GazetteerFlags]:
    """Mark each token with the entity types the gazetteer supports.

    ``per_token`` looks every token up on its own. ``longest_span`` scans
    left to right, joins up to ``max_span`` tokens with single spaces,
    keeps the longest hit, and flags every token inside it; matched spans
    do not overlap.
    """
    if mode == "per_token":
        return [GazetteerFlags(tags=trie.lookup(token)) for token in tokens]
    if mode != "longest_span":
        raise ValueError(f"unknown gazetteer mode {mode!r}")
    flags: list[set[str]] = [set() for _ in tokens]
    i = 0
    while i < len(tokens):
        best_len = 0
        best_tags: frozenset[str] = frozenset()
        limit = min(max_span, len(tokens) - i)
        for span in range(1, limit + 1):
            tags = trie.lookup(" ".join(tokens[i : i + span]))
            if tags:
                best_len = span
                best_tags = tags
        if best_len:
            for j in range(i, i + best_len):
                flags[j] |= best_tags
            i += best_len
        else:
            i += 1
    return [GazetteerFlags(tags=frozenset(s)) for s in flags]
