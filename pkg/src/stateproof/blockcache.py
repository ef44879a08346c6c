"""MPT-backed block-hash cache: provable append AND prepend.

The cache maps 8-byte big-endian block numbers to 32-byte block hashes
inside a persistent Merkle-Patricia trie.  The key set is always a
contiguous number range, and each boundary extension must re-establish
the chain linkage:

* append of block B at the right edge requires ``B.prev_hash`` to equal
  the cached hash of the current rightmost block;
* prepend of block B at the left edge requires the current leftmost
  block's ``prev_hash`` to equal ``HASH(B)``.

Every operation emits a witness carrying the full headers involved, so
a witness chain can be replayed from scratch by anyone: the replay
re-checks every linkage conjunct and reproduces every intermediate trie
root.  That replay is the explicit, non-succinct stand-in for a proof
of proper construction.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from . import mpt
from .chain import BlockHeader, header_hash
from .hashing import HashId

__all__ = [
    "LinkageViolation",
    "NumberGap",
    "OutOfRange",
    "BlockHashCache",
    "InitWitness",
    "AppendWitness",
    "PrependWitness",
    "CacheCheckResult",
    "number_key",
    "cache_init",
    "cache_append",
    "cache_prepend",
    "cache_prove",
    "cache_verify",
    "replay_witnesses",
    "witness_to_json_obj",
    "witness_from_json_obj",
]


class LinkageViolation(ValueError):
    """A header fails the parent-hash conjunct of the boundary invariant."""


class NumberGap(ValueError):
    """A header's number would break range contiguity."""


class OutOfRange(KeyError):
    pass


def number_key(number: int) -> bytes:
    """Fixed-width key: uniform trie depth, no prefix ambiguity."""
    return struct.pack(">Q", number)


@dataclass(frozen=True)
class InitWitness:
    header: BlockHeader
    resulting_trie_root: bytes


@dataclass(frozen=True)
class AppendWitness:
    prior_trie_root: bytes
    appended_header: BlockHeader
    resulting_trie_root: bytes


@dataclass(frozen=True)
class PrependWitness:
    prior_trie_root: bytes
    prepended_header: BlockHeader
    current_leftmost_header: BlockHeader  # makes every conjunct re-checkable offline
    resulting_trie_root: bytes


def witness_to_json_obj(w) -> dict:
    if isinstance(w, InitWitness):
        return {
            "kind": "init",
            "header": w.header.to_json_obj(),
            "resulting_root": "0x" + w.resulting_trie_root.hex(),
        }
    if isinstance(w, AppendWitness):
        return {
            "kind": "append",
            "prior_root": "0x" + w.prior_trie_root.hex(),
            "header": w.appended_header.to_json_obj(),
            "resulting_root": "0x" + w.resulting_trie_root.hex(),
        }
    if isinstance(w, PrependWitness):
        return {
            "kind": "prepend",
            "prior_root": "0x" + w.prior_trie_root.hex(),
            "header": w.prepended_header.to_json_obj(),
            "leftmost_header": w.current_leftmost_header.to_json_obj(),
            "resulting_root": "0x" + w.resulting_trie_root.hex(),
        }
    raise TypeError(f"not a cache witness: {type(w).__name__}")


def witness_from_json_obj(obj: dict):
    kind = obj["kind"]
    if kind == "init":
        return InitWitness(
            header=BlockHeader.from_json_obj(obj["header"]),
            resulting_trie_root=bytes.fromhex(obj["resulting_root"][2:]),
        )
    if kind == "append":
        return AppendWitness(
            prior_trie_root=bytes.fromhex(obj["prior_root"][2:]),
            appended_header=BlockHeader.from_json_obj(obj["header"]),
            resulting_trie_root=bytes.fromhex(obj["resulting_root"][2:]),
        )
    if kind == "prepend":
        return PrependWitness(
            prior_trie_root=bytes.fromhex(obj["prior_root"][2:]),
            prepended_header=BlockHeader.from_json_obj(obj["header"]),
            current_leftmost_header=BlockHeader.from_json_obj(obj["leftmost_header"]),
            resulting_trie_root=bytes.fromhex(obj["resulting_root"][2:]),
        )
    raise ValueError(f"unknown witness kind {kind!r}")


@dataclass(frozen=True)
class BlockHashCache:
    trie: mpt.Trie
    lowest_number: int
    highest_number: int
    hash_id: HashId
    leftmost_header: BlockHeader
    witnesses: tuple

    def stored_hash(self, number: int) -> bytes:
        value = self.trie.get(number_key(number))
        if value is None:
            raise OutOfRange(f"block {number} not cached")
        return value

    def root(self) -> bytes:
        return self.trie.root()


def cache_init(header: BlockHeader, hash_id: HashId = HashId.KECCAK256) -> tuple[BlockHashCache, InitWitness]:
    hash_id = HashId(hash_id)
    trie = mpt.Trie(mpt.NodeStore(), hash_id).insert(
        number_key(header.number), header_hash(header, hash_id)
    )
    witness = InitWitness(header=header, resulting_trie_root=trie.root())
    cache = BlockHashCache(
        trie=trie,
        lowest_number=header.number,
        highest_number=header.number,
        hash_id=hash_id,
        leftmost_header=header,
        witnesses=(witness,),
    )
    return cache, witness


def cache_append(cache: BlockHashCache, header: BlockHeader) -> tuple[BlockHashCache, AppendWitness]:
    if header.number != cache.highest_number + 1:
        raise NumberGap(
            f"append expects block {cache.highest_number + 1}, got {header.number}"
        )
    rightmost_hash = cache.stored_hash(cache.highest_number)
    if header.parent_hash != rightmost_hash:
        raise LinkageViolation("appended header's parent hash does not match the cached rightmost hash")
    prior_root = cache.trie.root()
    trie = cache.trie.insert(number_key(header.number), header_hash(header, cache.hash_id))
    witness = AppendWitness(
        prior_trie_root=prior_root,
        appended_header=header,
        resulting_trie_root=trie.root(),
    )
    new_cache = BlockHashCache(
        trie=trie,
        lowest_number=cache.lowest_number,
        highest_number=header.number,
        hash_id=cache.hash_id,
        leftmost_header=cache.leftmost_header,
        witnesses=cache.witnesses + (witness,),
    )
    return new_cache, witness


def cache_prepend(cache: BlockHashCache, header: BlockHeader) -> tuple[BlockHashCache, PrependWitness]:
    if header.number != cache.lowest_number - 1:
        raise NumberGap(
            f"prepend expects block {cache.lowest_number - 1}, got {header.number}"
        )
    if cache.leftmost_header.parent_hash != header_hash(header, cache.hash_id):
        raise LinkageViolation("current leftmost header's parent hash does not match the prepended block")
    prior_root = cache.trie.root()
    trie = cache.trie.insert(number_key(header.number), header_hash(header, cache.hash_id))
    witness = PrependWitness(
        prior_trie_root=prior_root,
        prepended_header=header,
        current_leftmost_header=cache.leftmost_header,
        resulting_trie_root=trie.root(),
    )
    new_cache = BlockHashCache(
        trie=trie,
        lowest_number=header.number,
        highest_number=cache.highest_number,
        hash_id=cache.hash_id,
        leftmost_header=header,
        witnesses=cache.witnesses + (witness,),
    )
    return new_cache, witness


def cache_prove(cache: BlockHashCache, block_number: int) -> tuple[mpt.MptProof, tuple]:
    if not cache.lowest_number <= block_number <= cache.highest_number:
        raise OutOfRange(
            f"block {block_number} outside cached range "
            f"[{cache.lowest_number}, {cache.highest_number}]"
        )
    return cache.trie.prove(number_key(block_number)), cache.witnesses


@dataclass(frozen=True)
class CacheCheckResult:
    ok: bool
    failed_step: int | None = None
    reason: str | None = None
    lowest_number: int | None = None
    highest_number: int | None = None
    final_root: bytes | None = None

    def __bool__(self) -> bool:
        return self.ok


def replay_witnesses(witnesses, hash_id: HashId = HashId.KECCAK256) -> CacheCheckResult:
    """Rebuild the cache from scratch, re-checking every conjunct.

    Returns the reconstructed range and final root on success, or the
    first failing step index and why.
    """
    hash_id = HashId(hash_id)
    if not witnesses or not isinstance(witnesses[0], InitWitness):
        return CacheCheckResult(ok=False, failed_step=0, reason="chain must start with an init witness")
    w0 = witnesses[0]
    trie = mpt.Trie(mpt.NodeStore(), hash_id).insert(
        number_key(w0.header.number), header_hash(w0.header, hash_id)
    )
    if trie.root() != w0.resulting_trie_root:
        return CacheCheckResult(ok=False, failed_step=0, reason="init root does not replay")
    lowest = highest = w0.header.number
    leftmost = w0.header
    rightmost_hash = header_hash(w0.header, hash_id)

    for step, w in enumerate(witnesses[1:], start=1):
        if isinstance(w, AppendWitness):
            if w.prior_trie_root != trie.root():
                return CacheCheckResult(ok=False, failed_step=step, reason="prior root discontinuity")
            if w.appended_header.number != highest + 1:
                return CacheCheckResult(ok=False, failed_step=step, reason="number gap on append")
            if w.appended_header.parent_hash != rightmost_hash:
                return CacheCheckResult(ok=False, failed_step=step, reason="append linkage violated")
            rightmost_hash = header_hash(w.appended_header, hash_id)
            trie = trie.insert(number_key(w.appended_header.number), rightmost_hash)
            highest += 1
        elif isinstance(w, PrependWitness):
            if w.prior_trie_root != trie.root():
                return CacheCheckResult(ok=False, failed_step=step, reason="prior root discontinuity")
            if w.prepended_header.number != lowest - 1:
                return CacheCheckResult(ok=False, failed_step=step, reason="number gap on prepend")
            if w.current_leftmost_header != leftmost:
                return CacheCheckResult(ok=False, failed_step=step, reason="leftmost header mismatch")
            prepended_hash = header_hash(w.prepended_header, hash_id)
            if leftmost.parent_hash != prepended_hash:
                return CacheCheckResult(ok=False, failed_step=step, reason="prepend linkage violated")
            trie = trie.insert(number_key(w.prepended_header.number), prepended_hash)
            lowest -= 1
            leftmost = w.prepended_header
        else:
            return CacheCheckResult(ok=False, failed_step=step, reason="unknown witness kind")
        if trie.root() != w.resulting_trie_root:
            return CacheCheckResult(ok=False, failed_step=step, reason="resulting root does not replay")

    return CacheCheckResult(
        ok=True,
        lowest_number=lowest,
        highest_number=highest,
        final_root=trie.root(),
    )


def rebuild_from_witnesses(witnesses, hash_id: HashId = HashId.KECCAK256) -> BlockHashCache:
    """Reconstruct a full cache object from a valid witness chain."""
    result = replay_witnesses(witnesses, hash_id)
    if not result.ok:
        raise ValueError(f"witness chain does not replay at step {result.failed_step}: {result.reason}")
    hash_id = HashId(hash_id)
    trie = mpt.Trie(mpt.NodeStore(), hash_id)
    leftmost = witnesses[0].header
    for w in witnesses:
        if isinstance(w, InitWitness):
            trie = trie.insert(number_key(w.header.number), header_hash(w.header, hash_id))
        elif isinstance(w, AppendWitness):
            trie = trie.insert(
                number_key(w.appended_header.number), header_hash(w.appended_header, hash_id)
            )
        else:
            trie = trie.insert(
                number_key(w.prepended_header.number), header_hash(w.prepended_header, hash_id)
            )
            leftmost = w.prepended_header
    return BlockHashCache(
        trie=trie,
        lowest_number=result.lowest_number,
        highest_number=result.highest_number,
        hash_id=hash_id,
        leftmost_header=leftmost,
        witnesses=tuple(witnesses),
    )


def cache_verify(
    root: bytes,
    block_number: int,
    claimed_hash: bytes,
    proof: mpt.MptProof,
    witness_chain,
    hash_id: HashId = HashId.KECCAK256,
) -> CacheCheckResult:
    """Accept iff the MPT proof binds number -> hash under ``root`` AND
    the witness chain replays from init to exactly that root."""
    replay = replay_witnesses(witness_chain, hash_id)
    if not replay.ok:
        return replay
    if replay.final_root != root:
        return CacheCheckResult(
            ok=False,
            failed_step=len(witness_chain) - 1,
            reason="witness chain ends at a different root (lineage mismatch)",
        )
    if not replay.lowest_number <= block_number <= replay.highest_number:
        return CacheCheckResult(ok=False, failed_step=None, reason="block number outside replayed range")
    try:
        value = mpt.verify(root, number_key(block_number), proof, hash_id)
    except mpt.InvalidProof as exc:
        return CacheCheckResult(ok=False, failed_step=None, reason=f"mpt proof invalid: {exc.reason}")
    if value != claimed_hash:
        return CacheCheckResult(ok=False, failed_step=None, reason="proved value differs from claimed hash")
    return CacheCheckResult(
        ok=True,
        lowest_number=replay.lowest_number,
        highest_number=replay.highest_number,
        final_root=replay.final_root,
    )
