"""Writer for the EMB1 interchange format and the labels CSV.

Kept independent of the retrieval engine: the two packages meet only at
the file formats. Header: "EMB1", u32 version 1, u32 count, u32 dim,
u8 dtype (1 = float32), 3 zero bytes; then row-major little-endian
float32 payload.
"""

import struct

import numpy as np

_HEADER = struct.Struct("<4sIIIB3s")


def write_emb1(matrix: np.ndarray, path) -> int:
    data = np.ascontiguousarray(matrix, dtype="<f4")
    if data.ndim != 2:
        raise ValueError(f"expected 2-D matrix, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ValueError("refusing to write non-finite embeddings")
    header = _HEADER.pack(b"EMB1", 1, data.shape[0], data.shape[1], 1,
                          b"\x00\x00\x00")
    with open(path, "wb") as f:
        f.write(header)
        f.write(data.tobytes())
    return len(header) + data.nbytes


def write_labels_csv(records, path) -> None:
    """records: iterable of (image_id, label); rows numbered in order."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("row,image_id,label\n")
        for row, (image_id, label) in enumerate(records):
            f.write(f"{row},{image_id},{int(label)}\n")
