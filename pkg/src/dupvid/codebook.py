"""Visual-word codebooks: seeded K-Means training, assignment, and BoVW counts."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import TermVector, VideoArtifact

CODEBOOK_MAGIC = b"DVCB"
CODEBOOK_VERSION = 1
_CODEBOOK_HEADER = struct.Struct("<4sIIIQ")

__all__ = [
    "Codebook",
    "train_kmeans",
    "assign",
    "assign_frames",
    "build_bovw",
    "save_codebook",
    "load_codebook",
]


@dataclass(frozen=True, eq=False)
class Codebook:
    """K centroids in embedding space; row index is the visual-word id."""

    centroids: np.ndarray  # (K, dim) float64, read-only
    training_seed: int
    sse_history: tuple[float, ...] = ()  # per-iteration SSE from training; not persisted

    def __post_init__(self) -> None:
        cents = np.asarray(self.centroids, dtype=np.float64)
        if cents.ndim != 2 or cents.shape[0] < 1 or cents.shape[1] < 1:
            raise ValueError(f"centroids must be a non-empty 2-D array, got {cents.shape}")
        if not np.all(np.isfinite(cents)):
            raise ValueError("centroids must be finite")
        cents.setflags(write=False)
        object.__setattr__(self, "centroids", cents)

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])

    @property
    def dim(self) -> int:
        return int(self.centroids.shape[1])


def _squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """All pairwise squared euclidean distances, (n_points, n_centers).

    Uses the |x|^2 - 2*x.c + |c|^2 expansion so the dominant cost is one
    matmul; tiny negatives from cancellation are clipped to zero.
    """
    p2 = np.einsum("ij,ij->i", points, points)
    c2 = np.einsum("ij,ij->i", centers, centers)
    d2 = p2[:, None] - 2.0 * (points @ centers.T) + c2[None, :]
    np.maximum(d2, 0.0, out=d2)
    return d2


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded k-means++ initialization: first center uniform, the rest
    sampled proportionally to squared distance from the nearest chosen center."""
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centers[0] = points[first]
    d2 = _squared_distances(points, centers[0:1])[:, 0]
    for i in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            # Every point coincides with a chosen center; fall back to uniform.
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[i] = points[idx]
        np.minimum(d2, _squared_distances(points, centers[i : i + 1])[:, 0], out=d2)
    return centers


def train_kmeans(
    points: np.ndarray,
    k: int,
    seed: int,
    max_iters: int = 100,
    tol: float = 1e-4,
) -> Codebook:
    """Lloyd's algorithm with k-means++ seeding.

    Deterministic for a fixed seed: identical runs produce bit-identical
    centroids. Empty clusters are repaired by reseeding them with the point
    farthest from its assigned centroid. Stops when the largest centroid
    displacement falls below ``tol`` or after ``max_iters`` iterations.

    Raises RuntimeError if the within-cluster SSE ever increases between
    iterations, which would indicate a broken update step.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError(f"points must be a non-empty 2-D array, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    n, dim = pts.shape
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= n_points, got k={k}, n_points={n}")
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters}")

    rng = np.random.Generator(np.random.PCG64(seed))
    centroids = _kmeanspp_init(pts, k, rng)
    sse_history: list[float] = []
    prev_sse = np.inf

    for _ in range(max_iters):
        d2 = _squared_distances(pts, centroids)
        labels = np.argmin(d2, axis=1)  # argmin takes the lowest index on ties
        point_d2 = d2[np.arange(n), labels]

        counts = np.bincount(labels, minlength=k)
        if np.any(counts == 0):
            # Reseed each empty cluster (ascending id) with the point farthest
            # from its assigned centroid; each point may be taken only once.
            order = iter(np.argsort(-point_d2, kind="stable"))
            for j in np.flatnonzero(counts == 0):
                far = int(next(order))
                centroids[j] = pts[far]
                labels[far] = j
                point_d2[far] = 0.0
            counts = np.bincount(labels, minlength=k)

        sse = float(point_d2.sum())
        if sse > prev_sse * (1.0 + 1e-12) + 1e-12:
            raise RuntimeError(
                f"k-means SSE increased from {prev_sse!r} to {sse!r}; update step is broken"
            )
        sse_history.append(sse)
        prev_sse = sse

        sums = np.zeros((k, dim), dtype=np.float64)
        np.add.at(sums, labels, pts)
        # Repair can itself empty a singleton cluster (its point was the global
        # farthest); such a cluster keeps its centroid until the next repair.
        new_centroids = np.where(
            (counts > 0)[:, None], sums / np.maximum(counts, 1)[:, None], centroids
        )

        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        if shift < tol:
            break

    return Codebook(
        centroids=centroids, training_seed=seed, sse_history=tuple(sse_history)
    )


def assign_frames(matrix: np.ndarray, codebook: Codebook) -> np.ndarray:
    """Assign each row of an (n, dim) matrix to its nearest centroid.

    Ties go to the lowest word id. Returns int word ids, shape (n,).
    """
    mat = np.asarray(matrix, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[1] != codebook.dim:
        raise ValueError(
            f"expected (n, {codebook.dim}) embeddings, got shape {np.shape(matrix)}"
        )
    d2 = _squared_distances(mat, codebook.centroids)
    return np.argmin(d2, axis=1)


def assign(embedding: np.ndarray, codebook: Codebook) -> int:
    """Visual word for a single embedding vector."""
    vec = np.asarray(embedding, dtype=np.float64)
    if vec.ndim != 1:
        raise ValueError(f"expected a 1-D embedding, got shape {vec.shape}")
    return int(assign_frames(vec[None, :], codebook)[0])


def build_bovw(video: VideoArtifact, codebook: Codebook) -> TermVector:
    """Bag of visual words for a video: raw count per assigned word."""
    words = assign_frames(video.frame_matrix(), codebook)
    counts: dict[int, float] = {}
    for w in words:
        counts[int(w)] = counts.get(int(w), 0.0) + 1.0
    return TermVector(counts)


def save_codebook(codebook: Codebook, path: Path | str) -> None:
    """Persist centroids as little-endian float32 behind a fixed header."""
    header = _CODEBOOK_HEADER.pack(
        CODEBOOK_MAGIC,
        CODEBOOK_VERSION,
        codebook.k,
        codebook.dim,
        codebook.training_seed & 0xFFFFFFFFFFFFFFFF,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(codebook.centroids.astype("<f4").tobytes(order="C"))


def load_codebook(path: Path | str) -> Codebook:
    raw = Path(path).read_bytes()
    if len(raw) < _CODEBOOK_HEADER.size:
        raise ValueError(f"{path}: truncated codebook header ({len(raw)} bytes)")
    magic, version, k, dim, seed = _CODEBOOK_HEADER.unpack_from(raw)
    if magic != CODEBOOK_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}, expected {CODEBOOK_MAGIC!r}")
    if version != CODEBOOK_VERSION:
        raise ValueError(f"{path}: unsupported codebook version {version}")
    expected = _CODEBOOK_HEADER.size + 4 * k * dim
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes for a {k}x{dim} codebook, got {len(raw)}")
    data = np.frombuffer(raw, dtype="<f4", offset=_CODEBOOK_HEADER.size)
    centroids = data.reshape(k, dim).astype(np.float64)
    return Codebook(centroids=centroids, training_seed=int(seed))
