"""Replica placement via rendezvous (highest-random-weight) hashing."""

from __future__ import annotations

import hashlib


def _score(node_id: str, block_id: str) -> int:
    h = hashlib.sha256(f"{node_id}|{block_id}".encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big")


def place(block_id: str, nodes, r: int) -> list:
    """Top-r nodes for a block, by descending hash score (node_id breaks ties).

    Deterministic for a given node set; removing a node only remaps the
    blocks that were placed on it.
    """
    ranked = sorted(nodes, key=lambda n: (-_score(n, block_id), n))
    if r > len(ranked):
        raise ValueError(f"replication factor {r} exceeds node count {len(ranked)}")
    return ranked[:r]
