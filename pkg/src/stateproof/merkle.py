"""Binary Merkle tree with logarithmic inclusion proofs.

Leaves are hashed once from their data blocks; interior nodes hash the
concatenation of their children.  An unpaired node at the end of a level
is promoted unchanged to the next level (no Bitcoin-style duplication),
so a proof for leaf count ``n`` carries exactly ``ceil(log2(n))``
siblings when ``n`` is a power of two and never more otherwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .hashing import HashId, digest, digest_pair

__all__ = [
    "EmptyInput",
    "IndexOutOfRange",
    "Side",
    "MerkleProof",
    "MerkleTree",
    "verify",
]


class EmptyInput(ValueError):
    pass


class IndexOutOfRange(IndexError):
    pass


class Side(str, Enum):
    """Which side of the concatenation the sibling digest sits on."""

    LEFT = "left"
    RIGHT = "right"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class MerkleProof:
    leaf_index: int
    siblings: tuple[tuple[bytes, Side], ...]
    hash_id: HashId

    def to_json(self) -> str:
        return json.dumps(
            {
                "leaf_index": self.leaf_index,
                "hash": str(self.hash_id),
                "siblings": [
                    {"digest": "0x" + d.hex(), "side": str(s)} for d, s in self.siblings
                ],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "MerkleProof":
        obj = json.loads(text)
        return cls(
            leaf_index=obj["leaf_index"],
            siblings=tuple(
                (bytes.fromhex(e["digest"][2:]), Side(e["side"])) for e in obj["siblings"]
            ),
            hash_id=HashId(obj["hash"]),
        )


class MerkleTree:
    """Immutable tree; ``levels[0]`` holds leaf hashes, the top level the root."""

    __slots__ = ("hash_id", "levels")

    def __init__(self, hash_id: HashId, levels: list[list[bytes]]):
        self.hash_id = HashId(hash_id)
        self.levels = levels

    @classmethod
    def build(cls, hash_id: HashId, data_blocks: list[bytes]) -> "MerkleTree":
        if len(data_blocks) == 0:
            raise EmptyInput("cannot build a Merkle tree over zero blocks")
        return cls.from_leaf_hashes(hash_id, [digest(hash_id, b) for b in data_blocks])

    @classmethod
    def from_leaf_hashes(cls, hash_id: HashId, leaf_hashes: list[bytes]) -> "MerkleTree":
        """Build over pre-hashed leaves (used for MMR peaks, where leaves are
        already block-hash digests)."""
        if len(leaf_hashes) == 0:
            raise EmptyInput("cannot build a Merkle tree over zero leaves")
        levels = [list(leaf_hashes)]
        while len(levels[-1]) > 1:
            cur = levels[-1]
            nxt = []
            for i in range(0, len(cur) - 1, 2):
                nxt.append(digest_pair(hash_id, cur[i], cur[i + 1]))
            if len(cur) % 2 == 1:
                nxt.append(cur[-1])  # promote the unpaired node unchanged
            levels.append(nxt)
        return cls(hash_id, levels)

    @property
    def leaf_count(self) -> int:
        return len(self.levels[0])

    def root(self) -> bytes:
        return self.levels[-1][0]

    def leaf_hash(self, leaf_index: int) -> bytes:
        return self.levels[0][leaf_index]

    def prove(self, leaf_index: int) -> MerkleProof:
        if not 0 <= leaf_index < self.leaf_count:
            raise IndexOutOfRange(f"leaf index {leaf_index} not in [0, {self.leaf_count})")
        siblings = []
        idx = leaf_index
        for level in self.levels[:-1]:
            if idx % 2 == 1:
                siblings.append((level[idx - 1], Side.LEFT))
            elif idx + 1 < len(level):
                siblings.append((level[idx + 1], Side.RIGHT))
            # else: unpaired node, promoted unchanged -- no sibling here
            idx //= 2
        return MerkleProof(leaf_index=leaf_index, siblings=tuple(siblings), hash_id=self.hash_id)


def verify(root: bytes, leaf_hash: bytes, proof: MerkleProof) -> bool:
    """Fold ``leaf_hash`` through the proof's siblings; never raises."""
    try:
        acc = leaf_hash
        for sibling, side in proof.siblings:
            if side == Side.LEFT:
                acc = digest_pair(proof.hash_id, sibling, acc)
            elif side == Side.RIGHT:
                acc = digest_pair(proof.hash_id, acc, sibling)
            else:
                return False
        return acc == root
    except (ValueError, KeyError, TypeError):
        return False
