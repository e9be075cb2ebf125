"""Binary encoding of cell/fact runs and size-limited block packing.

A run of cells (or facts) is encoded to one byte stream, which is then
chunked into blocks of at most ``block_size_limit`` bytes; every
non-final block is filled to exactly the limit, the final block carries
the remainder. unpack is the exact inverse of pack: checksums are
verified per block, the payloads concatenated and decoded.
"""

from __future__ import annotations

import hashlib
import struct

from ..errors import ChecksumMismatch
from .records import Block, Cell, FactRecord, QUALITIES, QUALITY_CODE

DEFAULT_BLOCK_SIZE_LIMIT = 32 * 1024 * 1024  # 32 MiB

_CELL_HEAD = struct.Struct("<HHqdIB")   # len(object_id), len(metric), bucket_ts, value, count, quality
_FACT_HEAD = struct.Struct("<HHqdB")    # len(object_id), len(metric), ts, value, quality


def checksum(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


def encode_cells(cells) -> bytes:
    out = bytearray()
    for c in cells:
        o = c.object_id.encode("utf-8")
        m = c.metric.encode("utf-8")
        out += _CELL_HEAD.pack(len(o), len(m), c.bucket_ts, c.value, c.count, QUALITY_CODE[c.quality])
        out += o
        out += m
    return bytes(out)


def decode_cells(data: bytes) -> list:
    cells = []
    pos = 0
    n = len(data)
    size = _CELL_HEAD.size
    while pos < n:
        lo, lm, ts, value, count, q = _CELL_HEAD.unpack_from(data, pos)
        pos += size
        object_id = data[pos:pos + lo].decode("utf-8")
        pos += lo
        metric = data[pos:pos + lm].decode("utf-8")
        pos += lm
        cells.append(Cell(object_id, metric, ts, value, count, QUALITIES[q]))
    return cells


def encode_facts(records) -> bytes:
    out = bytearray()
    for r in records:
        o = r.object_id.encode("utf-8")
        m = r.metric.encode("utf-8")
        out += _FACT_HEAD.pack(len(o), len(m), r.ts, r.value, QUALITY_CODE[r.quality])
        out += o
        out += m
    return bytes(out)


def decode_facts(data: bytes) -> list:
    records = []
    pos = 0
    n = len(data)
    size = _FACT_HEAD.size
    while pos < n:
        lo, lm, ts, value, q = _FACT_HEAD.unpack_from(data, pos)
        pos += size
        object_id = data[pos:pos + lo].decode("utf-8")
        pos += lo
        metric = data[pos:pos + lm].decode("utf-8")
        pos += lm
        records.append(FactRecord(object_id, metric, ts, value, QUALITIES[q]))
    return records


def chunk_payload(payload: bytes, limit: int, id_prefix: str) -> list:
    """Split an encoded run into checksummed blocks of at most ``limit`` bytes."""
    if limit <= 0:
        raise ValueError("block size limit must be positive")
    blocks = []
    for idx, start in enumerate(range(0, len(payload), limit)):
        part = payload[start:start + limit]
        blocks.append(Block(f"{id_prefix}.{idx:04d}", len(part), checksum(part), part))
    return blocks


def pack(cells, limit: int = DEFAULT_BLOCK_SIZE_LIMIT, id_prefix: str = "blk") -> list:
    """Encode a sorted cell run and split it into blocks. Empty run -> no blocks."""
    payload = encode_cells(cells)
    if not payload:
        return []
    return chunk_payload(payload, limit, id_prefix)


def join_blocks(blocks) -> bytes:
    """Verify each block's checksum and concatenate payloads."""
    parts = []
    for b in blocks:
        if len(b.payload) != b.byte_len or checksum(b.payload) != b.checksum:
            raise ChecksumMismatch(f"block {b.block_id} failed checksum verification")
        parts.append(b.payload)
    return b"".join(parts)


def unpack(blocks) -> list:
    """Inverse of :func:`pack`. Raises ChecksumMismatch on corruption."""
    if not blocks:
        return []
    return decode_cells(join_blocks(blocks))
