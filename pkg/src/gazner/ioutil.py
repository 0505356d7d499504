"""Small I/O helpers: atomic writes and canonical number formatting."""

from __future__ import annotations

import os
import tempfile
from contextlib import contextmanager
from pathlib import Path


@contextmanager
def atomic_write(path: str | Path, binary: bool = False):
    """Write to a temp file in the target directory, rename on success.

    A failure mid-write leaves no partial output at `path`.
    """
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    mode = "wb" if binary else "w"
    try:
        with os.fdopen(fd, mode, encoding=None if binary else "utf-8", newline=None if binary else "\n") as fh:
            yield fh
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def fmt_num(value: float) -> str:
    """Shortest string that parses back to exactly `value`.

    Integral values drop the trailing ".0" so binary feature values
    render as "1" and quantized embeddings as plain integers.
    """
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


_NAME_ESCAPES = {"%": "%25", " ": "%20", "\t": "%09", "\n": "%0A"}


def escape_name(name: str) -> str:
    """Escape whitespace in a feature name for space-delimited files."""
    if not any(c in name for c in _NAME_ESCAPES):
        return name
    for raw, esc in _NAME_ESCAPES.items():
        name = name.replace(raw, esc)
    return name


def unescape_name(name: str) -> str:
    name = name.replace("%20", " ").replace("%09", "\t").replace("%0A", "\n")
    return name.replace("%25", "%")
