"""Simulated storage node: one append-only log plus a cache-block directory.

On-disk layout per node::

    <store>/nodes/<node_id>/append.log   versioned, append-only fact blocks
    <store>/nodes/<node_id>/blocks/      one file per cached slice block

Log framing: the file opens with a magic header line; each record is
``HREC | u32 header_len | header JSON | u32 payload_len | payload``.
Records damaged in the payload are detected by checksum at read time;
a truncated tail record is skipped on scan.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

from .blocks import checksum as block_checksum

LOG_MAGIC = b"HMLOG1\n"
REC_MAGIC = b"HREC"
_U32 = struct.Struct("<I")


class StorageNode:
    def __init__(self, root: Path, node_id: str):
        self.node_id = node_id
        self.root = Path(root)
        self.log_path = self.root / "append.log"
        self.blocks_dir = self.root / "blocks"
        self._log_index = {}    # block_id -> (offset, payload_len) of latest copy
        self._ensure_layout()

    def _ensure_layout(self):
        self.root.mkdir(parents=True, exist_ok=True)
        self.blocks_dir.mkdir(exist_ok=True)
        if not self.log_path.exists():
            self.log_path.write_bytes(LOG_MAGIC)

    # --- append log -----------------------------------------------------

    def append_log_block(self, header: dict, payload: bytes):
        data = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
        with open(self.log_path, "ab") as fh:
            offset = fh.tell()
            fh.write(REC_MAGIC)
            fh.write(_U32.pack(len(data)))
            fh.write(data)
            fh.write(_U32.pack(len(payload)))
            payload_off = offset + len(REC_MAGIC) + _U32.size + len(data) + _U32.size
            fh.write(payload)
        self._log_index[header["block_id"]] = (payload_off, len(payload))

    def scan_log(self, with_payload: bool = True):
        """Yield (header, payload|None) for every intact log record, in order."""
        self._log_index.clear()
        with open(self.log_path, "rb") as fh:
            magic = fh.read(len(LOG_MAGIC))
            if magic != LOG_MAGIC:
                raise ValueError(f"node {self.node_id}: bad log magic")
            while True:
                marker = fh.read(len(REC_MAGIC))
                if len(marker) < len(REC_MAGIC):
                    return
                if marker != REC_MAGIC:
                    return  # tail garbage; stop scanning
                raw = fh.read(_U32.size)
                if len(raw) < _U32.size:
                    return
                (hlen,) = _U32.unpack(raw)
                hdata = fh.read(hlen)
                raw = fh.read(_U32.size)
                if len(hdata) < hlen or len(raw) < _U32.size:
                    return
                (plen,) = _U32.unpack(raw)
                payload_off = fh.tell()
                payload = fh.read(plen)
                if len(payload) < plen:
                    return
                header = json.loads(hdata.decode("utf-8"))
                self._log_index[header["block_id"]] = (payload_off, plen)
                yield header, (payload if with_payload else None)

    # --- cache blocks -----------------------------------------------------

    def _cache_path(self, block_id: str) -> Path:
        return self.blocks_dir / f"{block_id}.blk"

    def write_cache_block(self, block_id: str, payload: bytes):
        self._cache_path(block_id).write_bytes(payload)

    def delete_cache_block(self, block_id: str):
        self._cache_path(block_id).unlink(missing_ok=True)

    def clear_cache_blocks(self):
        for p in self.blocks_dir.glob("*.blk"):
            p.unlink()

    def cache_block_ids(self):
        return sorted(p.name[:-4] for p in self.blocks_dir.glob("*.blk"))

    # --- reads ------------------------------------------------------------

    def read_block(self, block_id: str):
        """Raw bytes of a block replica on this node, or None if absent."""
        p = self._cache_path(block_id)
        if p.exists():
            return p.read_bytes()
        loc = self._log_index.get(block_id)
        if loc is None:
            return None
        offset, plen = loc
        with open(self.log_path, "rb") as fh:
            fh.seek(offset)
            return fh.read(plen)

    def verify_block(self, block_id: str, expected_checksum: str) -> bool:
        data = self.read_block(block_id)
        return data is not None and block_checksum(data) == expected_checksum
