"""Descriptor vector storage backends and linear scans.

Two backends share one interface: a CSV file with an `imageId,v0,...`
header for research portability, and a fixed-record binary file for
practical use.  Vectors are canonicalized to float32 at the storage
boundary; the binary backend round-trips them bit exactly and the CSV
backend writes exact decimal representations.  Additional database
backends can implement the same surface.

Stores are single-writer during a build and safe for concurrent readers
once built.
"""
from __future__ import annotations

import csv
import json
import struct
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .core import DISTANCE, DescriptorVector, ScoredList, register_component
from .errors import (
    DimensionMismatch,
    DuplicateId,
    IndexNotFound,
    InvalidParameter,
    MalformedConfig,
)
from .measures import bulk_scores, metric

_BIN_MAGIC = b"IMVS"
_BIN_VERSION = 1


class VectorStore:
    """In-memory vector table with a persistence backend."""

    backend = "memory"

    def __init__(self, path: Path | None, feature_id: str, dim: int) -> None:
        if dim < 1:
            raise InvalidParameter("dimensionality must be >= 1")
        self.path = path
        self.feature_id = feature_id
        self.dim = dim
        self._ids: list[str] = []
        self._rows: list[np.ndarray] = []
        self._index: dict[str, int] = {}
        self._matrix: np.ndarray | None = None

    # -- building -----------------------------------------------------------

    def _memory_insert(self, image_id: str, values: np.ndarray) -> np.ndarray:
        if values.shape != (self.dim,):
            raise DimensionMismatch(
                f"vector of shape {values.shape} vs index dimensionality {self.dim}"
            )
        image_id = str(image_id)
        if image_id in self._index:
            raise DuplicateId(f"imageId already stored: {image_id}")
        row = values.astype(np.float32)
        self._index[image_id] = len(self._ids)
        self._ids.append(image_id)
        self._rows.append(row)
        self._matrix = None
        return row

    def insert(self, image_id: str, vector: DescriptorVector | np.ndarray) -> None:
        """Add one vector; duplicate ids and mismatched inserts rejected."""
        if isinstance(vector, DescriptorVector):
            if vector.feature_id != self.feature_id:
                raise InvalidParameter(
                    f"vector feature {vector.feature_id!r} does not match "
                    f"index feature {self.feature_id!r}"
                )
            values = vector.values
        else:
            values = np.asarray(vector, dtype=np.float64)
        row = self._memory_insert(image_id, values)
        self._write_row(str(image_id), row)

    def _write_row(self, image_id: str, row: np.ndarray) -> None:
        raise NotImplementedError

    def close(self) -> None:
        """Finalize the on-disk artifact; the store stays readable."""

    def __enter__(self) -> "VectorStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- reading ------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, image_id: str) -> bool:
        return image_id in self._index

    def ids(self) -> tuple[str, ...]:
        return tuple(self._ids)

    def get(self, image_id: str) -> np.ndarray:
        try:
            return self._rows[self._index[image_id]]
        except KeyError:
            raise KeyError(f"imageId not stored: {image_id}") from None

    def items(self) -> Iterator[tuple[str, np.ndarray]]:
        return zip(self._ids, self._rows)

    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            if self._rows:
                self._matrix = np.vstack(self._rows)
            else:
                self._matrix = np.zeros((0, self.dim), dtype=np.float32)
        return self._matrix

    def scan(
        self,
        query: np.ndarray,
        metric_name: str,
        shortlist: Iterable[str] | None = None,
        top_n: int | None = None,
    ) -> ScoredList:
        """Rank stored vectors against a query under a named measure.

        With a shortlist only its members are scored; ids not present in
        the store are ignored.  Ties break by imageId, so the result does
        not depend on insertion order.
        """
        m = metric(metric_name)
        query = np.asarray(query, dtype=np.float64)
        if query.shape != (self.dim,):
            raise DimensionMismatch(
                f"query of shape {query.shape} vs index dimensionality {self.dim}"
            )
        if shortlist is None:
            ids = self._ids
            rows = self.matrix()
        else:
            members = sorted(i for i in set(shortlist) if i in self._index)
            ids = members
            rows = (
                self.matrix()[[self._index[i] for i in members]]
                if members
                else np.zeros((0, self.dim), dtype=np.float32)
            )
        if not ids:
            return ScoredList((), m.polarity, source=self.feature_id)
        scores = bulk_scores(metric_name, rows.astype(np.float64), query)
        if m.polarity == DISTANCE:
            order = sorted(range(len(ids)), key=lambda i: (scores[i], ids[i]))
        else:
            order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
        if top_n is not None:
            order = order[:top_n]
        entries = tuple((ids[i], float(scores[i])) for i in order)
        return ScoredList(entries, m.polarity, source=self.feature_id)


class CsvStore(VectorStore):
    """CSV backend: header row ``imageId,v0,...,v{d-1}``, UTF-8."""

    backend = "csv"

    def __init__(self, path: Path, feature_id: str, dim: int, _fh=None) -> None:
        super().__init__(path, feature_id, dim)
        self._fh = _fh

    @classmethod
    def create(cls, path: str | Path, feature_id: str, dim: int) -> "CsvStore":
        path = Path(path)
        fh = open(path, "w", encoding="utf-8", newline="")
        store = cls(path, feature_id, dim, _fh=fh)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["imageId"] + [f"v{i}" for i in range(dim)])
        return store

    def _write_row(self, image_id: str, row: np.ndarray) -> None:
        if self._fh is None:
            raise InvalidParameter("store is read-only")
        writer = csv.writer(self._fh, lineterminator="\n")
        writer.writerow([image_id] + [repr(float(v)) for v in row])

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None
            meta = {
                "featureId": self.feature_id,
                "dimensionality": self.dim,
                "count": len(self),
            }
            self.path.with_suffix(self.path.suffix + ".meta.json").write_text(
                json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8"
            )

    @classmethod
    def open(cls, path: str | Path) -> "CsvStore":
        path = Path(path)
        if not path.is_file():
            raise IndexNotFound(f"no CSV index at {path}")
        meta_path = path.with_suffix(path.suffix + ".meta.json")
        feature_id = ""
        if meta_path.is_file():
            feature_id = json.loads(meta_path.read_text(encoding="utf-8"))["featureId"]
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header or header[0] != "imageId":
                raise MalformedConfig(f"bad CSV index header in {path}")
            dim = len(header) - 1
            store = cls(path, feature_id, dim, _fh=None)
            for line in reader:
                if not line:
                    continue
                values = np.asarray([float(v) for v in line[1:]], dtype=np.float64)
                store._memory_insert(line[0], values)
        return store


class BinaryStore(VectorStore):
    """Fixed-record binary backend with an in-memory id-to-row map."""

    backend = "binary"

    def __init__(self, path: Path, feature_id: str, dim: int, _fh=None) -> None:
        super().__init__(path, feature_id, dim)
        self._fh = _fh

    @classmethod
    def create(cls, path: str | Path, feature_id: str, dim: int) -> "BinaryStore":
        path = Path(path)
        fh = open(path, "wb")
        feature = feature_id.encode("utf-8")
        fh.write(struct.pack("<4sHIIH", _BIN_MAGIC, _BIN_VERSION, dim, 0, len(feature)))
        fh.write(feature)
        return cls(path, feature_id, dim, _fh=fh)

    def _write_row(self, image_id: str, row: np.ndarray) -> None:
        if self._fh is None:
            raise InvalidParameter("store is read-only")
        encoded = image_id.encode("utf-8")
        self._fh.write(struct.pack("<H", len(encoded)))
        self._fh.write(encoded)
        self._fh.write(row.astype("<f4").tobytes())

    def close(self) -> None:
        if self._fh is not None:
            self._fh.seek(struct.calcsize("<4sHI"))
            self._fh.write(struct.pack("<I", len(self)))
            self._fh.close()
            self._fh = None

    @classmethod
    def open(cls, path: str | Path) -> "BinaryStore":
        path = Path(path)
        if not path.is_file():
            raise IndexNotFound(f"no binary index at {path}")
        blob = path.read_bytes()
        head = struct.calcsize("<4sHIIH")
        magic, version, dim, count, feature_len = struct.unpack_from("<4sHIIH", blob, 0)
        if magic != _BIN_MAGIC:
            raise MalformedConfig(f"bad binary index magic in {path}")
        if version != _BIN_VERSION:
            raise MalformedConfig(f"unsupported binary index version {version}")
        feature_id = blob[head : head + feature_len].decode("utf-8")
        store = cls(path, feature_id, dim, _fh=None)
        offset = head + feature_len
        for _ in range(count):
            (id_len,) = struct.unpack_from("<H", blob, offset)
            offset += 2
            image_id = blob[offset : offset + id_len].decode("utf-8")
            offset += id_len
            row = np.frombuffer(blob, dtype="<f4", count=dim, offset=offset)
            offset += dim * 4
            store._memory_insert(image_id, row.astype(np.float64))
        return store


_BACKENDS = {"csv": CsvStore, "binary": BinaryStore}


def create_store(backend: str, path: str | Path, feature_id: str, dim: int) -> VectorStore:
    try:
        cls = _BACKENDS[backend]
    except KeyError:
        raise InvalidParameter(f"unknown storer backend: {backend!r}") from None
    return cls.create(path, feature_id, dim)


def open_store(backend: str, path: str | Path) -> VectorStore:
    try:
        cls = _BACKENDS[backend]
    except KeyError:
        raise InvalidParameter(f"unknown storer backend: {backend!r}") from None
    return cls.open(path)


for _name in _BACKENDS:
    register_component(
        "storer", _name, lambda _n=_name: _BACKENDS[_n], {}
    )
