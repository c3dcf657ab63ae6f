"""Euclidean locality-sensitive hashing shortlist index.

Each of L tables hashes a vector with k projections h(v) = floor((a.v +
b) / w); the k-tuple forms the bucket key.  Projections come from a
seeded per-table random stream, so tables are reproducible and adding
tables never changes the existing ones.  Bucket keys are folded to
64-bit fingerprints for storage; a fingerprint collision can only
enlarge a shortlist, never lose candidates from the matched bucket.
"""
from __future__ import annotations

import hashlib
import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidParameter, MalformedConfig

_PARAMS_FILE = "params.json"
_IDS_FILE = "ids.json"
_TABLES_FILE = "tables.bin"
_MAGIC = b"IMLS"


@dataclass(frozen=True)
class LshParams:
    tables: int
    hashes: int
    bucket_width: float
    seed: int
    dim: int

    def __post_init__(self) -> None:
        if self.tables < 1 or self.hashes < 1:
            raise InvalidParameter("tables and hashes must be >= 1")
        if not self.bucket_width > 0:
            raise InvalidParameter("bucket width must be > 0")
        if self.seed < 0:
            raise InvalidParameter("seed must be >= 0")
        if self.dim < 1:
            raise InvalidParameter("dimensionality must be >= 1")


def _table_projections(params: LshParams, table: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(np.random.SeedSequence([params.seed, table]))
    a = rng.standard_normal((params.hashes, params.dim))
    b = rng.uniform(0.0, params.bucket_width, size=params.hashes)
    return a, b


def _fingerprint(key: np.ndarray) -> int:
    digest = hashlib.blake2b(key.astype("<i8").tobytes(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class LshIndex:
    """Immutable-after-build hash table index over descriptor vectors."""

    def __init__(self, params: LshParams, ids: Sequence[str], tables: list[dict[int, list[int]]]):
        self.params = params
        self.ids = tuple(ids)
        self._tables = tables
        self._projections = [_table_projections(params, t) for t in range(params.tables)]

    @classmethod
    def build(
        cls,
        vectors: Mapping[str, np.ndarray],
        params: LshParams,
        workers: int | None = None,
    ) -> "LshIndex":
        """Hash every vector into every table.

        Tables are independent, so they can be built by a worker pool;
        the result is identical to the serial build.
        """
        ids = sorted(vectors)
        if ids:
            matrix = np.vstack([np.asarray(vectors[i], dtype=np.float64) for i in ids])
            if matrix.shape[1] != params.dim:
                raise DimensionMismatch(
                    f"vectors of dimension {matrix.shape[1]} vs params dim {params.dim}"
                )
        else:
            matrix = np.zeros((0, params.dim))

        def build_table(t: int) -> dict[int, list[int]]:
            a, b = _table_projections(params, t)
            keys = np.floor((matrix @ a.T + b) / params.bucket_width).astype(np.int64)
            table: dict[int, list[int]] = {}
            for row in range(keys.shape[0]):
                fp = _fingerprint(keys[row])
                table.setdefault(fp, []).append(row)
            return table

        if workers and workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                tables = list(pool.map(build_table, range(params.tables)))
        else:
            tables = [build_table(t) for t in range(params.tables)]
        return cls(params, ids, tables)

    def __len__(self) -> int:
        return len(self.ids)

    def keys_for(self, vector: np.ndarray) -> list[int]:
        """Per-table bucket fingerprints of a vector."""
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.params.dim,):
            raise DimensionMismatch(
                f"query of shape {vector.shape} vs index dim {self.params.dim}"
            )
        fingerprints = []
        for a, b in self._projections:
            key = np.floor((a @ vector + b) / self.params.bucket_width).astype(np.int64)
            fingerprints.append(_fingerprint(key))
        return fingerprints

    def shortlist(self, vector: np.ndarray) -> set[str]:
        """Union over tables of the bucket the query falls into."""
        out: set[int] = set()
        for table, fp in zip(self._tables, self.keys_for(vector)):
            out.update(table.get(fp, ()))
        return {self.ids[i] for i in out}

    # -- persistence --------------------------------------------------------

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        params = {
            "tables": self.params.tables,
            "hashes": self.params.hashes,
            "bucketWidth": self.params.bucket_width,
            "seed": self.params.seed,
            "dim": self.params.dim,
        }
        (directory / _PARAMS_FILE).write_text(
            json.dumps(params, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        (directory / _IDS_FILE).write_text(
            json.dumps(list(self.ids)) + "\n", encoding="utf-8"
        )
        with open(directory / _TABLES_FILE, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<I", len(self._tables)))
            for table in self._tables:
                entries = sorted(
                    (fp, idx) for fp, rows in table.items() for idx in rows
                )
                fh.write(struct.pack("<I", len(entries)))
                for fp, idx in entries:
                    fh.write(struct.pack("<QI", fp, idx))

    @classmethod
    def load(cls, directory: str | Path) -> "LshIndex":
        directory = Path(directory)
        try:
            raw = json.loads((directory / _PARAMS_FILE).read_text(encoding="utf-8"))
            ids = json.loads((directory / _IDS_FILE).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise MalformedConfig(f"missing hash index file: {exc}") from exc
        params = LshParams(
            tables=int(raw["tables"]),
            hashes=int(raw["hashes"]),
            bucket_width=float(raw["bucketWidth"]),
            seed=int(raw["seed"]),
            dim=int(raw["dim"]),
        )
        blob = (directory / _TABLES_FILE).read_bytes()
        if blob[:4] != _MAGIC:
            raise MalformedConfig("bad hash table file magic")
        offset = 4
        (n_tables,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        tables: list[dict[int, list[int]]] = []
        for _ in range(n_tables):
            (n_entries,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            table: dict[int, list[int]] = {}
            for _ in range(n_entries):
                fp, idx = struct.unpack_from("<QI", blob, offset)
                offset += 12
                table.setdefault(fp, []).append(idx)
            tables.append(table)
        if len(tables) != params.tables:
            raise MalformedConfig("hash table count does not match parameters")
        return cls(params, [str(i) for i in ids], tables)


def estimate_bucket_width(
    matrix: np.ndarray, sample: int = 1000, seed: int = 0, factor: float = 0.1
) -> float:
    """Default width: ``factor`` times the mean pairwise distance of a sample."""
    matrix = np.asarray(matrix, dtype=np.float64)
    n = matrix.shape[0]
    if n < 2:
        return 1.0
    if n > sample:
        rng = np.random.default_rng(seed)
        matrix = matrix[np.sort(rng.choice(n, size=sample, replace=False))]
        n = sample
    sq = np.sum(matrix**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (matrix @ matrix.T)
    np.fill_diagonal(d2, 0.0)
    distances = np.sqrt(np.maximum(d2, 0.0))
    mean = distances[np.triu_indices(n, k=1)].mean()
    return float(factor * mean) if mean > 0 else 1.0
