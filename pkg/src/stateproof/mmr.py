"""Merkle Mountain Range block-hash accumulator.

The accumulator state is O(log n): an ordered list of peak roots with
strictly decreasing heights (one peak per set bit of the leaf count).
Appends merge equal-height peaks right-to-left; nothing already
committed is ever recomputed or altered, which is what makes the
structure grow-only.  Prepending is impossible by construction.

The root "bags" the peaks with a left fold seeded by a fixed sentinel
(keccak256 of ``MMR_EMPTY_V1``), so the single-peak and many-peak cases
are handled uniformly.  The root itself is never an MMR node.

Every state transition emits a :class:`ConstructionWitness`; replaying a
witness chain re-executes each append and re-checks each block linkage,
standing in for a recursive proof of proper construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .hashing import HashId, digest_pair, keccak256
from .merkle import MerkleTree, Side

__all__ = [
    "BrokenLinkage",
    "EmptyAccumulator",
    "InconsistentLog",
    "IndexOutOfRange",
    "MmrState",
    "MmrProof",
    "ConstructionWitness",
    "ReplayResult",
    "EMPTY_ROOT_SENTINEL",
    "ZERO_DIGEST",
    "mmr_init",
    "mmr_append",
    "mmr_root",
    "mmr_prove",
    "mmr_verify",
    "mmr_replay_witnesses",
    "peaks_from_leaves",
]


class BrokenLinkage(ValueError):
    """Appended header's parent hash does not match the previous block."""


class EmptyAccumulator(ValueError):
    pass


class InconsistentLog(ValueError):
    """Prover-supplied leaf log does not reproduce the accumulator peaks."""


class IndexOutOfRange(IndexError):
    pass


EMPTY_ROOT_SENTINEL = keccak256(b"MMR_EMPTY_V1")
ZERO_DIGEST = b"\x00" * 32


@dataclass(frozen=True)
class MmrState:
    leaf_count: int
    peaks: tuple[tuple[int, bytes], ...]  # (height, digest), heights strictly decreasing
    hash_id: HashId

    def to_json_obj(self) -> dict:
        return {
            "leaf_count": self.leaf_count,
            "peaks": [{"height": h, "digest": "0x" + d.hex()} for h, d in self.peaks],
        }


@dataclass(frozen=True)
class MmrProof:
    leaf_index: int
    merkle_path: tuple[tuple[bytes, Side], ...]
    peaks_snapshot: tuple[tuple[int, bytes], ...]
    hash_id: HashId

    def to_json_obj(self) -> dict:
        return {
            "leaf_index": self.leaf_index,
            "merkle_path": [{"digest": "0x" + d.hex(), "side": str(s)} for d, s in self.merkle_path],
            "peaks": [{"height": h, "digest": "0x" + d.hex()} for h, d in self.peaks_snapshot],
            "hash": str(self.hash_id),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "MmrProof":
        return cls(
            leaf_index=obj["leaf_index"],
            merkle_path=tuple(
                (bytes.fromhex(e["digest"][2:]), Side(e["side"])) for e in obj["merkle_path"]
            ),
            peaks_snapshot=tuple((e["height"], bytes.fromhex(e["digest"][2:])) for e in obj["peaks"]),
            hash_id=HashId(obj["hash"]),
        )


@dataclass(frozen=True)
class ConstructionWitness:
    """Replayable record of one append (the explicit stand-in for pi)."""

    step_index: int
    prior_root: bytes
    appended_leaf: bytes
    claimed_prev_hash: bytes  # parent hash carried by the appended header
    expected_prev_hash: bytes  # hash of the block the chain tip held before
    new_root: bytes

    def to_json_obj(self) -> dict:
        return {
            "step": self.step_index,
            "prior_root": "0x" + self.prior_root.hex(),
            "leaf": "0x" + self.appended_leaf.hex(),
            "claimed_prev_hash": "0x" + self.claimed_prev_hash.hex(),
            "expected_prev_hash": "0x" + self.expected_prev_hash.hex(),
            "new_root": "0x" + self.new_root.hex(),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ConstructionWitness":
        return cls(
            step_index=obj["step"],
            prior_root=bytes.fromhex(obj["prior_root"][2:]),
            appended_leaf=bytes.fromhex(obj["leaf"][2:]),
            claimed_prev_hash=bytes.fromhex(obj["claimed_prev_hash"][2:]),
            expected_prev_hash=bytes.fromhex(obj["expected_prev_hash"][2:]),
            new_root=bytes.fromhex(obj["new_root"][2:]),
        )


@dataclass(frozen=True)
class ReplayResult:
    ok: bool
    failed_step: int | None = None
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def _merge_peaks(peaks: list[tuple[int, bytes]], hash_id: HashId) -> tuple[tuple[int, bytes], ...]:
    while len(peaks) >= 2 and peaks[-1][0] == peaks[-2][0]:
        h, right = peaks.pop()
        _, left = peaks.pop()
        peaks.append((h + 1, digest_pair(hash_id, left, right)))
    return tuple(peaks)


def mmr_init(genesis_leaf: bytes, hash_id: HashId = HashId.KECCAK256) -> tuple[MmrState, ConstructionWitness]:
    state = MmrState(leaf_count=1, peaks=((0, genesis_leaf),), hash_id=HashId(hash_id))
    witness = ConstructionWitness(
        step_index=0,
        prior_root=EMPTY_ROOT_SENTINEL,
        appended_leaf=genesis_leaf,
        claimed_prev_hash=ZERO_DIGEST,
        expected_prev_hash=ZERO_DIGEST,
        new_root=mmr_root(state),
    )
    return state, witness


def mmr_append(
    state: MmrState,
    leaf: bytes,
    block_header,
    prev_header_hash: bytes,
) -> tuple[MmrState, ConstructionWitness]:
    """Append the hash of ``block_header``, enforcing the chain link.

    ``block_header`` must hash to ``leaf`` and its parent hash must equal
    ``prev_header_hash`` (the hash of the block appended one step
    earlier); otherwise the construction proof must fail and
    :class:`BrokenLinkage` is raised.
    """
    from .chain import header_hash  # local import: chain depends on hashing only

    if header_hash(block_header, state.hash_id) != leaf:
        raise BrokenLinkage("leaf is not the hash of the supplied header")
    if block_header.parent_hash != prev_header_hash:
        raise BrokenLinkage(
            f"header #{block_header.number} parent hash does not match the previous block"
        )
    prior = mmr_root(state)
    peaks = _merge_peaks(list(state.peaks) + [(0, leaf)], state.hash_id)
    new_state = MmrState(leaf_count=state.leaf_count + 1, peaks=peaks, hash_id=state.hash_id)
    witness = ConstructionWitness(
        step_index=state.leaf_count,
        prior_root=prior,
        appended_leaf=leaf,
        claimed_prev_hash=block_header.parent_hash,
        expected_prev_hash=prev_header_hash,
        new_root=mmr_root(new_state),
    )
    return new_state, witness


def mmr_root(state: MmrState) -> bytes:
    """Bag the peaks: left fold with digest_pair, seeded by the sentinel."""
    if state.leaf_count == 0:
        raise EmptyAccumulator("cannot take the root of an empty accumulator")
    acc = EMPTY_ROOT_SENTINEL
    for _, peak in state.peaks:
        acc = digest_pair(state.hash_id, acc, peak)
    return acc


def peaks_from_leaves(hash_id: HashId, leaves: list[bytes]) -> tuple[tuple[int, bytes], ...]:
    peaks: list[tuple[int, bytes]] = []
    for leaf in leaves:
        peaks.append((0, leaf))
        peaks = list(_merge_peaks(peaks, hash_id))
    return tuple(peaks)


def _peak_spans(peaks) -> list[tuple[int, int, int]]:
    """(start_leaf, size, height) for each peak, left to right."""
    spans = []
    start = 0
    for height, _ in peaks:
        size = 1 << height
        spans.append((start, size, height))
        start += size
    return spans


def mmr_prove(state: MmrState, full_leaf_log: list[bytes], leaf_index: int) -> MmrProof:
    """Prove one leaf; the accumulator holds digests only, the prover
    supplies the full leaf log and must reproduce the committed peaks."""
    if not 0 <= leaf_index < state.leaf_count:
        raise IndexOutOfRange(f"leaf index {leaf_index} not in [0, {state.leaf_count})")
    if len(full_leaf_log) != state.leaf_count or peaks_from_leaves(state.hash_id, full_leaf_log) != state.peaks:
        raise InconsistentLog("leaf log does not reproduce the accumulator peaks")
    for start, size, _height in _peak_spans(state.peaks):
        if start <= leaf_index < start + size:
            tree = MerkleTree.from_leaf_hashes(state.hash_id, full_leaf_log[start : start + size])
            inner = tree.prove(leaf_index - start)
            return MmrProof(
                leaf_index=leaf_index,
                merkle_path=inner.siblings,
                peaks_snapshot=state.peaks,
                hash_id=state.hash_id,
            )
    raise IndexOutOfRange(f"leaf index {leaf_index} beyond committed peaks")


def mmr_verify(root: bytes, leaf: bytes, proof: MmrProof) -> bool:
    """True iff the path folds onto the right peak, at the position the
    proof claims, and bagging the peak snapshot reproduces ``root``."""
    try:
        heights = [h for h, _ in proof.peaks_snapshot]
        if any(not isinstance(h, int) or not 0 <= h < 64 for h in heights):
            return False
        if any(heights[i] <= heights[i + 1] for i in range(len(heights) - 1)):
            return False
        spans = _peak_spans(proof.peaks_snapshot)
        total = sum(size for _, size, _ in spans)
        if not 0 <= proof.leaf_index < total:
            return False
        for (start, size, height), (_, peak_digest) in zip(spans, proof.peaks_snapshot):
            if start <= proof.leaf_index < start + size:
                if len(proof.merkle_path) != height:
                    return False
                offset = proof.leaf_index - start
                acc = leaf
                for level, (sibling, side) in enumerate(proof.merkle_path):
                    expected = Side.LEFT if (offset >> level) & 1 else Side.RIGHT
                    if side != expected:
                        return False
                    if side == Side.LEFT:
                        acc = digest_pair(proof.hash_id, sibling, acc)
                    else:
                        acc = digest_pair(proof.hash_id, acc, sibling)
                if acc != peak_digest:
                    return False
                bagged = EMPTY_ROOT_SENTINEL
                for _, d in proof.peaks_snapshot:
                    bagged = digest_pair(proof.hash_id, bagged, d)
                return bagged == root
        return False
    except (ValueError, TypeError, KeyError):
        return False


def mmr_replay_witnesses(
    witness_chain: list[ConstructionWitness],
    hash_id: HashId = HashId.KECCAK256,
) -> ReplayResult:
    """Re-execute a witness chain from scratch.

    Checks, per step: root continuity with the previous witness, the
    claimed-vs-expected parent linkage, continuity of the linkage with
    the previously appended leaf, and that re-appending the leaf onto the
    reconstructed accumulator reproduces the recorded new root.
    """
    if not witness_chain:
        return ReplayResult(ok=False, failed_step=None, reason="empty witness chain")
    peaks: list[tuple[int, bytes]] = []
    prev_leaf: bytes | None = None
    prev_root = EMPTY_ROOT_SENTINEL
    for i, w in enumerate(witness_chain):
        if w.step_index != i:
            return ReplayResult(ok=False, failed_step=i, reason="step index out of order")
        if w.prior_root != prev_root:
            return ReplayResult(ok=False, failed_step=i, reason="prior root discontinuity")
        if w.claimed_prev_hash != w.expected_prev_hash:
            return ReplayResult(ok=False, failed_step=i, reason="parent hash linkage violated")
        if i == 0:
            if w.expected_prev_hash != ZERO_DIGEST:
                return ReplayResult(ok=False, failed_step=0, reason="genesis witness must carry zero linkage")
        elif w.expected_prev_hash != prev_leaf:
            return ReplayResult(ok=False, failed_step=i, reason="linkage does not chain to the previous leaf")
        peaks = list(_merge_peaks(peaks + [(0, w.appended_leaf)], HashId(hash_id)))
        state = MmrState(leaf_count=i + 1, peaks=tuple(peaks), hash_id=HashId(hash_id))
        if mmr_root(state) != w.new_root:
            return ReplayResult(ok=False, failed_step=i, reason="replayed root does not match witness")
        prev_leaf = w.appended_leaf
        prev_root = w.new_root
    return ReplayResult(ok=True)
