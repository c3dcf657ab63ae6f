"""Visual vocabulary training (seeded k-means) and quantization."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, InvalidParameter, MalformedConfig, TooFewSamples

_MAGIC = b"IMVC"
_FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class Codebook:
    """k centroids of dimension d plus the provenance of their training."""

    centroids: np.ndarray  # (k, d) float64
    feature_id: str
    seed: int

    def __post_init__(self) -> None:
        centroids = np.asarray(self.centroids, dtype=np.float64)
        if centroids.ndim != 2 or centroids.shape[0] < 1:
            raise InvalidParameter("codebook needs at least one centroid row")
        if not np.all(np.isfinite(centroids)):
            raise InvalidParameter("codebook centroids must be finite")
        centroids.flags.writeable = False
        object.__setattr__(self, "centroids", centroids)

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])

    @property
    def dim(self) -> int:
        return int(self.centroids.shape[1])


@dataclass(frozen=True)
class CodebookHeader:
    k: int
    dim: int
    feature_id: str
    seed: int


def _squared_distances(samples: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """(n, k) squared Euclidean distances via explicit differences.

    Chunked over samples to bound the (chunk, k, d) intermediate; the
    difference form keeps exact-tie semantics that the expanded
    |x|^2 + |c|^2 - 2xc form would lose to rounding.
    """
    n = samples.shape[0]
    k, d = centroids.shape
    out = np.empty((n, k), dtype=np.float64)
    chunk = max(1, int(4_000_000 // max(1, k * d)))
    for start in range(0, n, chunk):
        block = samples[start : start + chunk]
        diff = block[:, None, :] - centroids[None, :, :]
        out[start : start + chunk] = np.einsum("nkd,nkd->nk", diff, diff)
    return out


def _kmeanspp_init(samples: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = samples.shape[0]
    centroids = np.empty((k, samples.shape[1]), dtype=np.float64)
    centroids[0] = samples[rng.integers(n)]
    d2 = np.sum((samples - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centroids[j] = samples[idx]
        d2 = np.minimum(d2, np.sum((samples - centroids[j]) ** 2, axis=1))
    return centroids


def train_kmeans(
    samples: np.ndarray,
    k: int,
    max_iters: int = 100,
    seed: int = 0,
    feature_id: str = "",
) -> Codebook:
    """Seeded k-means++ followed by Lloyd iterations.

    Training stops when no assignment changes or at ``max_iters``.  Empty
    clusters are repaired by reassigning the farthest sample of the
    largest cluster, which keeps k constant.  Within-cluster sum of
    squares is checked to be non-increasing after every update step.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2:
        raise DimensionMismatch("samples must be a 2-D array")
    n = samples.shape[0]
    if k < 1:
        raise InvalidParameter("k must be >= 1")
    if n < k:
        raise TooFewSamples(f"need at least {k} samples, got {n}")

    rng = np.random.default_rng(seed)
    centroids = _kmeanspp_init(samples, k, rng)
    previous = None
    wcss_prev = np.inf
    for _ in range(max_iters):
        d2 = _squared_distances(samples, centroids)
        assignment = np.argmin(d2, axis=1)

        counts = np.bincount(assignment, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            donor = int(np.argmax(counts))
            members = np.flatnonzero(assignment == donor)
            farthest = members[int(np.argmax(d2[members, donor]))]
            assignment[farthest] = empty
            counts[donor] -= 1
            counts[empty] += 1

        for j in range(k):
            centroids[j] = samples[assignment == j].mean(axis=0)

        wcss = float(
            np.sum((samples - centroids[assignment]) ** 2)
        )
        if wcss > wcss_prev * (1 + 1e-12) + 1e-9:
            raise AssertionError(
                f"within-cluster sum of squares increased: {wcss_prev} -> {wcss}"
            )
        wcss_prev = wcss

        if previous is not None and np.array_equal(previous, assignment):
            break
        previous = assignment
    return Codebook(centroids, feature_id, seed)


def assign(vector: np.ndarray, codebook: Codebook) -> int:
    """Index of the nearest centroid; ties break to the lowest index."""
    vector = np.asarray(vector, dtype=np.float64)
    if vector.shape != (codebook.dim,):
        raise DimensionMismatch(
            f"vector of length {vector.shape} vs codebook dimension {codebook.dim}"
        )
    d2 = np.sum((codebook.centroids - vector) ** 2, axis=1)
    return int(np.argmin(d2))


def assign_many(vectors: np.ndarray, codebook: Codebook) -> np.ndarray:
    """Vectorized nearest-centroid assignment with the same tie-break."""
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[1] != codebook.dim:
        raise DimensionMismatch(
            f"vectors of shape {vectors.shape} vs codebook dimension {codebook.dim}"
        )
    if vectors.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    d2 = _squared_distances(vectors, codebook.centroids)
    return np.argmin(d2, axis=1)


def save_codebook(codebook: Codebook, path: str | Path) -> None:
    """Binary format: magic, version, k, d, seed, featureId, float32 rows."""
    feature = codebook.feature_id.encode("utf-8")
    header = struct.pack(
        "<4sHIIq H",
        _MAGIC,
        _FORMAT_VERSION,
        codebook.k,
        codebook.dim,
        codebook.seed,
        len(feature),
    )
    body = codebook.centroids.astype("<f4").tobytes(order="C")
    Path(path).write_bytes(header + feature + body)


def read_codebook_header(path: str | Path) -> CodebookHeader:
    size = struct.calcsize("<4sHIIq H")
    with open(path, "rb") as fh:
        blob = fh.read(size)
        if len(blob) < size:
            raise MalformedConfig(f"codebook file truncated: {path}")
        magic, version, k, dim, seed, feature_len = struct.unpack("<4sHIIq H", blob)
        if magic != _MAGIC:
            raise MalformedConfig(f"not a codebook file: {path}")
        if version != _FORMAT_VERSION:
            raise MalformedConfig(f"unsupported codebook version {version}")
        feature = fh.read(feature_len).decode("utf-8")
    return CodebookHeader(k=k, dim=dim, feature_id=feature, seed=seed)


def load_codebook(path: str | Path) -> Codebook:
    header = read_codebook_header(path)
    offset = struct.calcsize("<4sHIIq H") + len(header.feature_id.encode("utf-8"))
    blob = Path(path).read_bytes()
    expected = offset + header.k * header.dim * 4
    if len(blob) != expected:
        raise MalformedConfig(f"codebook file has wrong size: {path}")
    flat = np.frombuffer(blob, dtype="<f4", offset=offset)
    centroids = flat.reshape(header.k, header.dim).astype(np.float64)
    return Codebook(centroids, header.feature_id, header.seed)
