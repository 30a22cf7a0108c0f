"""Binary embedding files (EMB1) and label CSVs.

EMB1 layout, little-endian throughout:

    bytes 0-3    ASCII "EMB1"
    bytes 4-7    u32 version (currently 1)
    bytes 8-11   u32 count
    bytes 12-15  u32 dim
    byte  16     u8 dtype code (1 = float32)
    bytes 17-19  zero padding
    payload      count * dim * 4 bytes of row-major float32

Labels travel as UTF-8 CSV with the exact header ``row,image_id,label``,
LF line endings, row indices 0..count-1 contiguous and ascending, labels
restricted to the BIRADS range 1-6.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"EMB1"
VERSION = 1
DTYPE_FLOAT32 = 1
HEADER_SIZE = 20
# Refuse headers declaring more payload than any sane embedding file holds.
MAX_PAYLOAD_BYTES = 1 << 40

_HEADER = struct.Struct("<4sIIIB3s")

LABEL_MIN = 1
LABEL_MAX = 6
LABELS_HEADER = ["row", "image_id", "label"]


class FormatError(ValueError):
    """Malformed EMB1 data: bad magic, bad sizes, non-finite payload."""


class LabelError(ValueError):
    """Malformed or out-of-domain label CSV."""


@dataclass(frozen=True)
class EmbeddingSet:
    """A count x dim matrix of finite float32 vectors with a model tag."""

    data: np.ndarray
    source_tag: str = ""

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise FormatError(f"embedding data must be 2-D, got shape {arr.shape}")
        if arr.shape[1] < 1:
            raise FormatError("embedding dim must be positive")
        if not np.all(np.isfinite(arr)):
            raise FormatError("embedding data contains NaN or Inf")
        object.__setattr__(self, "data", arr)

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class LabelTable:
    """Per-row (row_index, image_id, label) triples, rows 0..count-1."""

    rows: tuple

    def __post_init__(self):
        rows = tuple((int(r), str(i), int(l)) for r, i, l in self.rows)
        for expected, (r, _, lab) in enumerate(rows):
            if r != expected:
                raise LabelError(f"row indices must be 0..{len(rows) - 1} contiguous ascending; "
                                 f"got {r} at position {expected}")
            if not (LABEL_MIN <= lab <= LABEL_MAX):
                raise LabelError(f"label {lab} at row {r} outside {LABEL_MIN}-{LABEL_MAX}")
        object.__setattr__(self, "rows", rows)

    @property
    def count(self) -> int:
        return len(self.rows)

    def labels(self) -> np.ndarray:
        return np.array([lab for _, _, lab in self.rows], dtype=np.int64)

    def label_of(self, row: int) -> int:
        return self.rows[row][2]


@dataclass(frozen=True)
class AlignmentReport:
    vector_count: int
    label_count: int

    @property
    def ok(self) -> bool:
        return self.vector_count == self.label_count

    def __bool__(self) -> bool:
        return self.ok

    def message(self) -> str:
        if self.ok:
            return f"aligned: {self.vector_count} vectors, {self.label_count} labels"
        return (f"mismatch: {self.vector_count} vectors but "
                f"{self.label_count} labels")


def write_embeddings(embeddings: EmbeddingSet, destination) -> int:
    """Write the EMB1 byte stream; returns the number of bytes written."""
    if not np.all(np.isfinite(embeddings.data)):
        raise FormatError("refusing to write non-finite embedding data")
    header = _HEADER.pack(MAGIC, VERSION, embeddings.count, embeddings.dim,
                          DTYPE_FLOAT32, b"\x00\x00\x00")
    payload = np.ascontiguousarray(embeddings.data, dtype="<f4").tobytes()
    destination.write(header)
    destination.write(payload)
    return len(header) + len(payload)


def write_embeddings_file(embeddings: EmbeddingSet, path) -> int:
    with open(path, "wb") as f:
        return write_embeddings(embeddings, f)


def read_embeddings(source, source_tag: str = "") -> EmbeddingSet:
    """Parse an EMB1 byte stream, rejecting anything malformed."""
    header = source.read(HEADER_SIZE)
    if len(header) < HEADER_SIZE:
        raise FormatError(f"header truncated: got {len(header)} of {HEADER_SIZE} bytes")
    magic, version, count, dim, dtype, padding = _HEADER.unpack(header)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if dtype != DTYPE_FLOAT32:
        raise FormatError(f"unsupported dtype code {dtype}")
    if padding != b"\x00\x00\x00":
        raise FormatError("nonzero header padding")
    if dim < 1:
        raise FormatError("declared dim must be positive")
    expected = count * dim * 4
    if expected > MAX_PAYLOAD_BYTES:
        raise FormatError(f"declared payload of {expected} bytes exceeds the "
                          f"{MAX_PAYLOAD_BYTES}-byte limit")
    payload = source.read(expected)
    if len(payload) < expected:
        raise FormatError(f"payload truncated: header declares {count}x{dim} "
                          f"({expected} bytes) but only {len(payload)} present")
    if source.read(1):
        raise FormatError("trailing bytes after declared payload")
    data = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    if not np.all(np.isfinite(data)):
        raise FormatError("payload contains NaN or Inf")
    return EmbeddingSet(data=data.copy(), source_tag=source_tag)


def read_embeddings_file(path, source_tag: str = "") -> EmbeddingSet:
    with open(path, "rb") as f:
        return read_embeddings(f, source_tag=source_tag)


def read_labels(source) -> LabelTable:
    """Parse the labels CSV (header ``row,image_id,label``)."""
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise LabelError("empty labels file") from None
    if header != LABELS_HEADER:
        raise LabelError(f"bad header {header!r}, expected {LABELS_HEADER!r}")
    rows = []
    for lineno, record in enumerate(reader, start=2):
        if not record:
            continue
        if len(record) != 3:
            raise LabelError(f"line {lineno}: expected 3 fields, got {len(record)}")
        row_s, image_id, label_s = record
        try:
            row = int(row_s)
            label = int(label_s)
        except ValueError:
            raise LabelError(f"line {lineno}: non-integer row or label") from None
        rows.append((row, image_id, label))
    return LabelTable(rows=tuple(rows))


def read_labels_file(path) -> LabelTable:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return read_labels(f)


def write_labels(labels: LabelTable, destination) -> None:
    destination.write(",".join(LABELS_HEADER) + "\n")
    for row, image_id, label in labels.rows:
        destination.write(f"{row},{image_id},{label}\n")


def write_labels_file(labels: LabelTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        write_labels(labels, f)


def validate_alignment(embeddings: EmbeddingSet, labels: LabelTable) -> AlignmentReport:
    """Check that the label table covers exactly the embedding rows."""
    return AlignmentReport(vector_count=embeddings.count, label_count=labels.count)
