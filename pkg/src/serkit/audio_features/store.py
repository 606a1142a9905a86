"""Binary feature store.

Layout (little-endian):

    magic  4 bytes  b"SERF"
    version u16     currently 1
    n_rows  u64
    dim     u32
    feature_kind  u8   0=logmel_functionals 1=external_import 2=embedding
    normalization u8   0=raw 1=zscored
    data    n_rows * dim float32, row-major
    ids     per row: u32 byte length + UTF-8 bytes

Values are stored as float32; save -> load -> save is bit-exact. Z-score
statistics are not part of this container (the CLI keeps them in a JSON
sidecar next to the store).
"""

from __future__ import annotations

import struct

import numpy as np

from .table import FeatureTable, FEATURE_KINDS, NORMALIZATIONS

MAGIC = b"SERF"
VERSION = 1
_HEADER = struct.Struct("<4sHQIBB")


class StoreError(ValueError):
    pass


def save_table(table: FeatureTable, path) -> None:
    n, dim = table.matrix.shape
    header = _HEADER.pack(
        MAGIC, VERSION, n, dim,
        FEATURE_KINDS.index(table.feature_kind),
        NORMALIZATIONS.index(table.normalization),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(table.matrix, dtype="<f4").tobytes())
        for uid in table.utterance_ids:
            raw = uid.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)


def load_table(path) -> FeatureTable:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise StoreError(f"{path}: truncated header")
    magic, version, n, dim, kind_i, norm_i = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise StoreError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise StoreError(f"{path}: unsupported version {version}")
    try:
        kind = FEATURE_KINDS[kind_i]
        norm = NORMALIZATIONS[norm_i]
    except IndexError as e:
        raise StoreError(f"{path}: bad enum byte") from e
    off = _HEADER.size
    data_bytes = n * dim * 4
    if len(blob) < off + data_bytes:
        raise StoreError(f"{path}: truncated data section")
    matrix = np.frombuffer(blob, dtype="<f4", count=n * dim, offset=off)
    matrix = matrix.reshape(n, dim).astype(np.float64)
    off += data_bytes
    ids = []
    for _ in range(n):
        if len(blob) < off + 4:
            raise StoreError(f"{path}: truncated id table")
        (length,) = struct.unpack_from("<I", blob, off)
        off += 4
        if len(blob) < off + length:
            raise StoreError(f"{path}: truncated id entry")
        ids.append(blob[off:off + length].decode("utf-8"))
        off += length
    if off != len(blob):
        raise StoreError(f"{path}: {len(blob) - off} trailing bytes")
    return FeatureTable(
        utterance_ids=tuple(ids), matrix=matrix,
        feature_kind=kind, normalization=norm,
    )
