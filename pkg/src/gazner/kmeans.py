"""Lloyd's k-means with k-means++ seeding, used to discretize embeddings.

Cluster ids stand in for high-dimensional vectors as categorical
features, so the fit must be reproducible: a fixed seed gives bitwise
identical centroids, and assignment ties break toward the lowest
centroid index.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError
from .ioutil import atomic_write

_HEADER_RE = re.compile(r"^#KMEANS k=(\d+) dim=(\d+) layer=(-?\d+) seed=(\d+) inertia=(\S+)$")

_CHUNK = 2048


@dataclass
class ClusterModel:
    """Fitted centroids plus the provenance needed to reuse them."""

    layer: int
    k: int
    centroids: np.ndarray
    seed: int
    inertia: float
    inertia_history: list[float] = field(default_factory=list, repr=False, compare=False)

    def save(self, path: str | Path) -> None:
        with atomic_write(path) as fh:
            fh.write(
                f"#KMEANS k={self.k} dim={self.centroids.shape[1]} "
                f"layer={self.layer} seed={self.seed} inertia={self.inertia!r}\n"
            )
            for row in self.centroids:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ClusterModel":
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").rstrip("\r")
            m = _HEADER_RE.match(header)
            if not m:
                raise FormatError(f"{path}:1: malformed cluster model header")
            k, dim, layer, seed = (int(m.group(i)) for i in range(1, 5))
            try:
                inertia = float(m.group(5))
            except ValueError as exc:
                raise FormatError(f"{path}:1: bad inertia value") from exc
            rows = []
            for line_no, raw in enumerate(fh, start=2):
                line = raw.strip()
                if not line:
                    continue
                fields = line.split()
                if len(fields) != dim:
                    raise FormatError(f"{path}:{line_no}: expected {dim} values, got {len(fields)}")
                try:
                    rows.append([float(v) for v in fields])
                except ValueError as exc:
                    raise FormatError(f"{path}:{line_no}: non-numeric centroid value") from exc
        if len(rows) != k:
            raise FormatError(f"{path}: header promises {k} centroids, file has {len(rows)}")
        centroids = np.asarray(rows, dtype=np.float64) if rows else np.zeros((0, dim))
        return cls(layer=layer, k=k, centroids=centroids, seed=seed, inertia=inertia)


def _sq_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, (n, k), computed in row chunks."""
    n = points.shape[0]
    out = np.empty((n, centroids.shape[0]))
    c_sq = np.einsum("ij,ij->i", centroids, centroids)
    for start in range(0, n, _CHUNK):
        chunk = points[start : start + _CHUNK]
        p_sq = np.einsum("ij,ij->i", chunk, chunk)
        d = p_sq[:, None] + c_sq[None, :] - 2.0 * chunk @ centroids.T
        np.maximum(d, 0.0, out=d)
        out[start : start + chunk.shape[0]] = d
    return out


def _plus_plus_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = points[first]
    closest = _sq_distances(points, centroids[0:1])[:, 0]
    for i in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            # All remaining mass sits on already-chosen points; any pick works.
            idx = int(rng.integers(n))
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(closest), r, side="right"))
            idx = min(idx, n - 1)
        centroids[i] = points[idx]
        closest = np.minimum(closest, _sq_distances(points, centroids[i : i + 1])[:, 0])
    return centroids


def kmeans_fit(
    points,
    k: int,
    seed: int = 0,
    max_iters: int = 100,
    tol: float = 1e-4,
    layer: int = 0,
) -> ClusterModel:
    """Fit k centroids; inertia is tracked per iteration and never rises.

    Raises ConfigError when there are fewer points than clusters or the
    vectors are zero-dimensional.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ConfigError(f"points must be a 2-d array, got shape {points.shape}")
    n, dim = points.shape
    if k < 1:
        raise ConfigError(f"k must be at least 1, got {k}")
    if dim < 1:
        raise ConfigError("points must have at least one dimension")
    if n < k:
        raise ConfigError(f"cannot place {k} clusters on {n} points")

    rng = np.random.default_rng(seed)
    centroids = _plus_plus_init(points, k, rng)
    history: list[float] = []
    assign = np.zeros(n, dtype=np.int64)

    def exact_inertia(cents: np.ndarray, labels: np.ndarray) -> float:
        # The expanded dot form used for argmin leaves ~1e-16 residue when
        # a point sits on its centroid; the difference form is exact there.
        diff = points - cents[labels]
        return float(np.einsum("ij,ij->", diff, diff))

    for _ in range(max_iters):
        d = _sq_distances(points, centroids)
        assign = d.argmin(axis=1)
        history.append(exact_inertia(centroids, assign))
        new_centroids = centroids.copy()
        for j in range(k):
            members = assign == j
            if members.any():
                new_centroids[j] = points[members].mean(axis=0)
            else:
                # Re-seed a starved cluster from the point farthest from
                # its current centroid.
                farthest = int(d[np.arange(n), assign].argmax())
                new_centroids[j] = points[farthest]
        shift = float(np.abs(new_centroids - centroids).max())
        centroids = new_centroids
        if shift < tol:
            break
    d = _sq_distances(points, centroids)
    assign = d.argmin(axis=1)
    final_inertia = exact_inertia(centroids, assign)
    history.append(final_inertia)
    model = ClusterModel(layer=layer, k=k, centroids=centroids, seed=seed, inertia=final_inertia)
    model.inertia_history = history
    return model


def kmeans_assign(model: ClusterModel, vector) -> int:
    """Nearest centroid id for one vector; ties go to the lowest id."""
    return int(assign_many(model, np.asarray(vector, dtype=np.float64)[None, :])[0])


def assign_many(model: ClusterModel, points) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    if points.shape[1] != model.centroids.shape[1]:
        raise ConfigError(
            f"vector dim {points.shape[1]} does not match centroid dim {model.centroids.shape[1]}"
        )
    return _sq_distances(points, model.centroids).argmin(axis=1)
