"""Deterministic discrete-event simulator of one L1 and N L2 chains.

The simulator drives block production, periodic L2 state updates to a
rollup contract on L1, and periodic bridge pushes of the latest L1
block hash into a designated contract slot on each L2.  Both channels
are modeled as genuine storage writes, so every cross-chain claim is
verified end-to-end through the real proof stack: hierarchical storage
proofs against block hashes, block-inclusion proofs through a replayed
block-hash accumulator (MPT cache by default, MMR selectable), and an
explicit finality policy.

Everything is pure bookkeeping on simulated time: no wall clock, no
randomness.  Two worlds built from the same configs replay identical
event logs byte for byte.

Finality model
--------------
L1 blocks jump from no finality straight to objective finality after a
fixed delay.  An L2 block has no finality until a state update covering
it lands on L1, weak finality during the challenge period that follows,
and objective finality once the period elapses unchallenged.

Verification flows
------------------
``verify_l2_on_l1`` executes the seven-step pattern (storage proof on
the source L2, state-update lookup, L2 inclusion proof, rollup-slot
storage proof on L1, L1 inclusion proof, final policy check), and
``verify_l1_on_l2`` the six-step bridged pattern; ``verify_l2_on_l2``
composes the two.  Each flow returns a step-by-step report; rejections
are reported, not raised, so scenario outputs can be golden-tested.
"""

from __future__ import annotations

import heapq
import json
import struct
from dataclasses import dataclass, field
from enum import IntEnum

from . import blockcache, mmr, mpt
from .chain import (
    BlockHeader,
    HierarchicalProof,
    SimChain,
    StorageWrite,
    UnknownBlock,
    header_hash,
    verify_hierarchical,
)
from .chain import InvalidProof as HierarchicalInvalidProof
from .hashing import HashId, keccak256

__all__ = [
    "FinalityStatus",
    "NetworkConfig",
    "StateUpdateRecord",
    "BridgeRecord",
    "StepRecord",
    "VerificationReport",
    "InclusionEvidence",
    "L2OnL1Evidence",
    "L1OnL2Evidence",
    "L2OnL2Evidence",
    "SimWorld",
    "advance",
    "run_scenario",
    "rollup_contract_address",
    "state_update_slot",
    "bridge_contract_address",
    "BRIDGE_SLOT",
    "DEFAULT_L1_BLOCK_TIME",
    "DEFAULT_L2_BLOCK_TIME",
    "DEFAULT_STATE_UPDATE_INTERVAL",
    "DEFAULT_BRIDGE_PUSH_INTERVAL",
    "DEFAULT_CHALLENGE_PERIOD",
    "DEFAULT_L1_FINALITY_DELAY",
]

DEFAULT_L1_BLOCK_TIME = 12
DEFAULT_L2_BLOCK_TIME = 2
DEFAULT_STATE_UPDATE_INTERVAL = 1800  # lower bound of the 30-60 min range
DEFAULT_BRIDGE_PUSH_INTERVAL = 600
DEFAULT_CHALLENGE_PERIOD = 604_800  # 7 days
DEFAULT_L1_FINALITY_DELAY = 780  # ~13 minutes


class FinalityStatus(IntEnum):
    NONE = 0
    WEAK = 1
    OBJECTIVE = 2

    @property
    def label(self) -> str:
        return {0: "none", 1: "weak", 2: "objective"}[int(self)]

    @classmethod
    def from_label(cls, label: str) -> "FinalityStatus":
        return {"none": cls.NONE, "weak": cls.WEAK, "objective": cls.OBJECTIVE}[label]


@dataclass(frozen=True)
class NetworkConfig:
    chain_id: str
    layer: str  # "L1" | "L2"
    block_time_seconds: int
    parent_chain_id: str | None = None
    state_update_interval_seconds: int | None = None
    challenge_period_seconds: int | None = None
    bridge_push_interval_seconds: int | None = None  # None: no bridge on this L2
    l1_finality_delay_seconds: int | None = None

    def validated(self) -> "NetworkConfig":
        if self.layer not in ("L1", "L2"):
            raise ValueError(f"layer must be L1 or L2, got {self.layer!r}")
        if self.block_time_seconds <= 0:
            raise ValueError("block time must be positive")
        if self.layer == "L1":
            if self.l1_finality_delay_seconds is None or self.l1_finality_delay_seconds <= 0:
                raise ValueError("L1 config needs a positive finality delay")
        else:
            if self.parent_chain_id is None:
                raise ValueError("L2 config must reference its L1 parent")
            for name in ("state_update_interval_seconds", "challenge_period_seconds"):
                v = getattr(self, name)
                if v is None or v <= 0:
                    raise ValueError(f"L2 config needs a positive {name}")
            if self.bridge_push_interval_seconds is not None and self.bridge_push_interval_seconds <= 0:
                raise ValueError("bridge push interval must be positive when set")
        return self

    @classmethod
    def from_json_obj(cls, obj: dict) -> "NetworkConfig":
        return cls(
            chain_id=obj["chain_id"],
            layer=obj["layer"],
            block_time_seconds=obj["block_time_seconds"],
            parent_chain_id=obj.get("parent_chain_id"),
            state_update_interval_seconds=obj.get("state_update_interval_seconds"),
            challenge_period_seconds=obj.get("challenge_period_seconds"),
            bridge_push_interval_seconds=obj.get("bridge_push_interval_seconds"),
            l1_finality_delay_seconds=obj.get("l1_finality_delay_seconds"),
        ).validated()


# --- designated contract layout ------------------------------------------------

_ADDR = 20


def rollup_contract_address(l2_chain_id: str) -> bytes:
    """L1 address of the rollup contract receiving an L2's state updates."""
    return keccak256(b"stateproof/rollup/" + l2_chain_id.encode())[:_ADDR]


def state_update_slot(l2_chain_id: str, epoch: int) -> bytes:
    """Storage slot for one state update: keccak256(chain_id || epoch)."""
    return keccak256(l2_chain_id.encode() + struct.pack(">Q", epoch))


def bridge_contract_address(l2_chain_id: str) -> bytes:
    """L2 address of the bridge contract holding the latest L1 block hash."""
    return keccak256(b"stateproof/bridge/" + l2_chain_id.encode())[:_ADDR]


BRIDGE_SLOT = keccak256(b"stateproof/bridge/l1_block_hash")


# --- logs -------------------------------------------------------------------------


@dataclass(frozen=True)
class StateUpdateRecord:
    l2_chain_id: str
    l2_block_number: int  # L2transferedBlock
    l2_block_hash: bytes
    l1_block_number: int  # L1proofBlock
    epoch: int
    time: int


@dataclass(frozen=True)
class BridgeRecord:
    l1_block_number: int  # L1transferedBlock
    l1_block_hash: bytes
    l2_chain_id: str
    l2_block_number: int  # L2proofBlock (where the bridged hash landed)
    time: int


@dataclass
class _PendingWrite:
    address: bytes
    slot: bytes
    value: bytes
    note: dict | None = None  # log record to emit once the write is in a block


@dataclass
class _ChainRuntime:
    config: NetworkConfig
    chain: SimChain
    cache: blockcache.BlockHashCache
    mmr_state: mmr.MmrState
    mmr_witnesses: list
    mmr_leaves: list
    pending: list = field(default_factory=list)
    epoch: int = 0  # next state-update epoch (L2 only)


class SimWorld:
    """One event loop over all configured chains; strictly single-threaded."""

    def __init__(self, configs: list[NetworkConfig], hash_id: HashId = HashId.KECCAK256):
        configs = [c.validated() for c in configs]
        l1s = [c for c in configs if c.layer == "L1"]
        if len(l1s) != 1:
            raise ValueError("exactly one L1 chain must be configured")
        self.l1_id = l1s[0].chain_id
        for c in configs:
            if c.layer == "L2" and c.parent_chain_id != self.l1_id:
                raise ValueError(f"L2 {c.chain_id} references unknown L1 {c.parent_chain_id!r}")
        self.hash_id = HashId(hash_id)
        self.clock = 0
        self.runtimes: dict[str, _ChainRuntime] = {}
        self.state_update_log: list[StateUpdateRecord] = []
        self.bridge_log: list[BridgeRecord] = []
        self.event_log: list[str] = []
        self._queue: list = []
        self._seq = 0

        for c in configs:
            sim = SimChain(hash_id=self.hash_id, block_time=c.block_time_seconds, genesis_time=0)
            genesis = sim.head
            cache, _ = blockcache.cache_init(genesis, self.hash_id)
            state, witness = mmr.mmr_init(header_hash(genesis, self.hash_id), self.hash_id)
            self.runtimes[c.chain_id] = _ChainRuntime(
                config=c,
                chain=sim,
                cache=cache,
                mmr_state=state,
                mmr_witnesses=[witness],
                mmr_leaves=[header_hash(genesis, self.hash_id)],
            )
        for c in configs:
            self._schedule(c.block_time_seconds, "block", c.chain_id)
        for c in configs:
            if c.layer == "L2":
                self._schedule(c.state_update_interval_seconds, "state_update", c.chain_id)
                if c.bridge_push_interval_seconds is not None:
                    self._schedule(c.bridge_push_interval_seconds, "bridge_push", c.chain_id)

    # -- event machinery ---------------------------------------------------

    def _schedule(self, time: int, kind: str, chain_id: str, payload=None) -> None:
        heapq.heappush(self._queue, (time, self._seq, kind, chain_id, payload))
        self._seq += 1

    def schedule_write(self, time: int, chain_id: str, address: bytes, slot: bytes, value: bytes) -> None:
        """Queue a plain storage write, applied in the chain's next block."""
        if chain_id not in self.runtimes:
            raise KeyError(f"unknown chain {chain_id!r}")
        self._schedule(time, "write", chain_id, _PendingWrite(address=address, slot=slot, value=value))

    def advance(self, until_time: int) -> "SimWorld":
        if until_time < self.clock:
            raise ValueError("cannot advance backwards")
        while self._queue and self._queue[0][0] <= until_time:
            time, seq, kind, chain_id, payload = heapq.heappop(self._queue)
            self._process(time, seq, kind, chain_id, payload)
        self.clock = until_time
        return self

    def _process(self, time: int, seq: int, kind: str, chain_id: str, payload) -> None:
        rt = self.runtimes[chain_id]
        if kind == "block":
            self._produce_block(rt, time, seq)
            self._schedule(time + rt.config.block_time_seconds, "block", chain_id)
        elif kind == "state_update":
            head = rt.chain.head
            head_hash = rt.chain.block_hash(head.number)
            epoch = rt.epoch
            rt.epoch += 1
            self.runtimes[self.l1_id].pending.append(
                _PendingWrite(
                    address=rollup_contract_address(chain_id),
                    slot=state_update_slot(chain_id, epoch),
                    value=head_hash,
                    note={
                        "kind": "state_update",
                        "l2_chain_id": chain_id,
                        "l2_block_number": head.number,
                        "l2_block_hash": head_hash,
                        "epoch": epoch,
                    },
                )
            )
            self.event_log.append(
                f"t={time} seq={seq} state_update chain={chain_id} epoch={epoch} l2_block={head.number}"
            )
            self._schedule(time + rt.config.state_update_interval_seconds, "state_update", chain_id)
        elif kind == "bridge_push":
            l1 = self.runtimes[self.l1_id]
            l1_head = l1.chain.head
            l1_hash = l1.chain.block_hash(l1_head.number)
            rt.pending.append(
                _PendingWrite(
                    address=bridge_contract_address(chain_id),
                    slot=BRIDGE_SLOT,
                    value=l1_hash,
                    note={
                        "kind": "bridge",
                        "l1_block_number": l1_head.number,
                        "l1_block_hash": l1_hash,
                        "l2_chain_id": chain_id,
                    },
                )
            )
            self.event_log.append(
                f"t={time} seq={seq} bridge_push chain={chain_id} l1_block={l1_head.number}"
            )
            self._schedule(time + rt.config.bridge_push_interval_seconds, "bridge_push", chain_id)
        elif kind == "write":
            rt.pending.append(payload)
            self.event_log.append(
                f"t={time} seq={seq} write chain={chain_id} "
                f"address=0x{payload.address.hex()} slot=0x{payload.slot.hex()} value=0x{payload.value.hex()}"
            )
        else:
            raise ValueError(f"unknown event kind {kind!r}")

    def _produce_block(self, rt: _ChainRuntime, time: int, seq: int) -> None:
        writes = rt.pending
        rt.pending = []
        changes = [StorageWrite(address=w.address, slot=w.slot, value=w.value) for w in writes]
        header = rt.chain.apply_block(changes, timestamp=time)
        new_hash = rt.chain.block_hash(header.number)
        prev_hash = rt.chain.block_hash(header.number - 1)

        rt.cache, _ = blockcache.cache_append(rt.cache, header)
        rt.mmr_state, witness = mmr.mmr_append(rt.mmr_state, new_hash, header, prev_hash)
        rt.mmr_witnesses.append(witness)
        rt.mmr_leaves.append(new_hash)

        for w in writes:
            if w.note is None:
                continue
            if w.note["kind"] == "state_update":
                self.state_update_log.append(
                    StateUpdateRecord(
                        l2_chain_id=w.note["l2_chain_id"],
                        l2_block_number=w.note["l2_block_number"],
                        l2_block_hash=w.note["l2_block_hash"],
                        l1_block_number=header.number,
                        epoch=w.note["epoch"],
                        time=header.timestamp,
                    )
                )
            elif w.note["kind"] == "bridge":
                self.bridge_log.append(
                    BridgeRecord(
                        l1_block_number=w.note["l1_block_number"],
                        l1_block_hash=w.note["l1_block_hash"],
                        l2_chain_id=w.note["l2_chain_id"],
                        l2_block_number=header.number,
                        time=header.timestamp,
                    )
                )
        self.event_log.append(
            f"t={time} seq={seq} block chain={rt.config.chain_id} number={header.number} "
            f"hash=0x{new_hash.hex()} writes={len(writes)}"
        )

    # -- finality -------------------------------------------------------------

    def finality_of(self, chain_id: str, block_number: int, at_time: int) -> FinalityStatus:
        rt = self.runtimes[chain_id]
        header = rt.chain.header(block_number)  # raises UnknownBlock
        if header.timestamp > at_time:
            raise UnknownBlock(f"block {block_number} does not exist yet at t={at_time}")
        if rt.config.layer == "L1":
            if at_time >= header.timestamp + rt.config.l1_finality_delay_seconds:
                return FinalityStatus.OBJECTIVE
            return FinalityStatus.NONE
        update = self._covering_update(chain_id, block_number)
        if update is None or update.time > at_time:
            return FinalityStatus.NONE
        if at_time >= update.time + rt.config.challenge_period_seconds:
            return FinalityStatus.OBJECTIVE
        return FinalityStatus.WEAK

    def _covering_update(self, chain_id: str, block_number: int) -> StateUpdateRecord | None:
        for record in self.state_update_log:
            if record.l2_chain_id == chain_id and record.l2_block_number >= block_number:
                return record
        return None

    # -- evidence construction ---------------------------------------------------

    def _inclusion_evidence(
        self, chain_id: str, target_number: int, anchor_number: int, accumulator: str
    ) -> "InclusionEvidence | None":
        """Inclusion proofs for target and anchor blocks under the
        accumulator state as of the anchor block (None when unprovable)."""
        rt = self.runtimes[chain_id]
        if anchor_number < target_number or anchor_number > rt.chain.head.number:
            return None
        if accumulator == "mpt":
            witnesses = rt.cache.witnesses[: anchor_number + 1]
            root = witnesses[-1].resulting_trie_root
            trie = mpt.Trie.at_root(rt.cache.trie.store, root, self.hash_id)
            target_proof = trie.prove(blockcache.number_key(target_number))
            anchor_proof = trie.prove(blockcache.number_key(anchor_number))
        elif accumulator == "mmr":
            leaves = rt.mmr_leaves[: anchor_number + 1]
            state = mmr.MmrState(
                leaf_count=len(leaves),
                peaks=mmr.peaks_from_leaves(self.hash_id, leaves),
                hash_id=self.hash_id,
            )
            witnesses = tuple(rt.mmr_witnesses[: anchor_number + 1])
            root = witnesses[-1].new_root
            target_proof = mmr.mmr_prove(state, leaves, target_number)
            anchor_proof = mmr.mmr_prove(state, leaves, anchor_number)
        else:
            raise ValueError(f"unknown accumulator kind {accumulator!r}")
        return InclusionEvidence(
            accumulator=accumulator,
            root=root,
            target_number=target_number,
            target_hash=rt.chain.block_hash(target_number),
            anchor_number=anchor_number,
            anchor_hash=rt.chain.block_hash(anchor_number),
            target_proof=target_proof,
            anchor_proof=anchor_proof,
            witnesses=tuple(witnesses),
        )


def advance(world: SimWorld, until_time: int) -> SimWorld:
    return world.advance(until_time)


# --- reports -----------------------------------------------------------------------


@dataclass
class StepRecord:
    name: str
    evidence: str
    passed: bool

    def to_json_obj(self) -> dict:
        return {"name": self.name, "evidence": self.evidence, "passed": self.passed}


@dataclass
class VerificationReport:
    flow: str
    steps: list[StepRecord]
    finality_at_verification: FinalityStatus
    accepted: bool
    simulated_time: int
    error: str | None = None
    recovered_value: bytes | None = None

    def to_json_obj(self) -> dict:
        return {
            "flow": self.flow,
            "accepted": self.accepted,
            "error": self.error,
            "finality_at_verification": self.finality_at_verification.label,
            "simulated_time": self.simulated_time,
            "recovered_value": "0x" + self.recovered_value.hex() if self.recovered_value else None,
            "steps": [s.to_json_obj() for s in self.steps],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2)


# --- evidence containers (mutable on purpose: tests corrupt single items) -----------


@dataclass
class InclusionEvidence:
    accumulator: str
    root: bytes
    target_number: int
    target_hash: bytes
    anchor_number: int
    anchor_hash: bytes
    target_proof: object
    anchor_proof: object
    witnesses: tuple

    def describe(self) -> str:
        return (
            f"{self.accumulator}_inclusion(target={self.target_number}, "
            f"anchor={self.anchor_number}, root=0x{self.root.hex()[:16]}..)"
        )


def _check_inclusion(ev: InclusionEvidence, hash_id: HashId) -> bool:
    """Replay the witness chain and verify both block bindings under it."""
    try:
        if ev.accumulator == "mpt":
            replay = blockcache.replay_witnesses(ev.witnesses, hash_id)
            if not replay.ok or replay.final_root != ev.root:
                return False
            if replay.highest_number != ev.anchor_number:
                return False
            for number, block_hash, proof in (
                (ev.target_number, ev.target_hash, ev.target_proof),
                (ev.anchor_number, ev.anchor_hash, ev.anchor_proof),
            ):
                if mpt.verify(ev.root, blockcache.number_key(number), proof, hash_id) != block_hash:
                    return False
            return True
        if ev.accumulator == "mmr":
            replay = mmr.mmr_replay_witnesses(list(ev.witnesses), hash_id)
            if not replay.ok:
                return False
            if ev.witnesses[-1].new_root != ev.root:
                return False
            if len(ev.witnesses) - 1 != ev.anchor_number:
                return False
            if ev.witnesses[-1].appended_leaf != ev.anchor_hash:
                return False
            for number, block_hash, proof in (
                (ev.target_number, ev.target_hash, ev.target_proof),
                (ev.anchor_number, ev.anchor_hash, ev.anchor_proof),
            ):
                if proof.leaf_index != number:
                    return False
                if not mmr.mmr_verify(ev.root, block_hash, proof):
                    return False
            return True
        return False
    except (ValueError, KeyError, TypeError, mpt.InvalidProof):
        return False


@dataclass
class L2OnL1Evidence:
    l2_chain_id: str
    l2_proof_block: int
    address: bytes
    slot: bytes
    accumulator: str
    l2_proof_block_hash: bytes
    storage_proof_l2: HierarchicalProof
    update: StateUpdateRecord | None
    l2_inclusion: InclusionEvidence | None
    l1_proof_block: int | None
    l1_proof_block_hash: bytes | None
    rollup_storage_proof: HierarchicalProof | None
    l1_inclusion: InclusionEvidence | None
    l1_verification_block: int


@dataclass
class L1OnL2Evidence:
    l2_chain_id: str
    l1_proof_block: int
    address: bytes
    slot: bytes
    accumulator: str
    bridge: BridgeRecord | None
    l1_proof_block_hash: bytes
    storage_proof_l1: HierarchicalProof
    l1_inclusion: InclusionEvidence | None
    l2_proof_block_hash: bytes | None
    bridged_storage_proof: HierarchicalProof | None
    l2_inclusion: InclusionEvidence | None
    l2_verification_block: int


@dataclass
class L2OnL2Evidence:
    source: L2OnL1Evidence
    dest_l2_chain_id: str
    dest_bridge: BridgeRecord | None
    dest_l2_proof_block_hash: bytes | None
    dest_bridged_storage_proof: HierarchicalProof | None
    dest_l2_inclusion: InclusionEvidence | None
    dest_verification_block: int


# --- flow: L2 -> L1 ------------------------------------------------------------------


def prepare_l2_on_l1(
    world: SimWorld,
    l2_chain: str,
    l2_proof_block: int,
    address: bytes,
    slot: bytes,
    l1_verification_block: int | None = None,
    accumulator: str = "mpt",
) -> L2OnL1Evidence:
    rt = world.runtimes[l2_chain]
    if rt.config.layer != "L2":
        raise ValueError(f"{l2_chain!r} is not an L2 chain")
    l1 = world.runtimes[world.l1_id]
    if l1_verification_block is None:
        l1_verification_block = l1.chain.head.number
    l1.chain.header(l1_verification_block)  # existence check
    rt.chain.header(l2_proof_block)

    update = world._covering_update(l2_chain, l2_proof_block)
    evidence = L2OnL1Evidence(
        l2_chain_id=l2_chain,
        l2_proof_block=l2_proof_block,
        address=address,
        slot=slot,
        accumulator=accumulator,
        l2_proof_block_hash=rt.chain.block_hash(l2_proof_block),
        storage_proof_l2=rt.chain.make_storage_proof(l2_proof_block, address, slot),
        update=update,
        l2_inclusion=None,
        l1_proof_block=None,
        l1_proof_block_hash=None,
        rollup_storage_proof=None,
        l1_inclusion=None,
        l1_verification_block=l1_verification_block,
    )
    if update is None:
        return evidence
    evidence.l2_inclusion = world._inclusion_evidence(
        l2_chain, l2_proof_block, update.l2_block_number, accumulator
    )
    evidence.l1_proof_block = update.l1_block_number
    evidence.l1_proof_block_hash = l1.chain.block_hash(update.l1_block_number)
    evidence.rollup_storage_proof = l1.chain.make_storage_proof(
        update.l1_block_number,
        rollup_contract_address(l2_chain),
        state_update_slot(l2_chain, update.epoch),
    )
    evidence.l1_inclusion = world._inclusion_evidence(
        world.l1_id, update.l1_block_number, l1_verification_block, accumulator
    )
    return evidence


def _verify_storage_step(block_hash: bytes, proof: HierarchicalProof, address: bytes, slot: bytes):
    """Shared step body: returns (ok, recovered value or None)."""
    if proof.address != address or proof.slot_key != slot:
        return False, None
    try:
        return True, verify_hierarchical(block_hash, proof)
    except HierarchicalInvalidProof:
        return False, None


def check_l2_on_l1(
    world: SimWorld,
    ev: L2OnL1Evidence,
    policy: FinalityStatus = FinalityStatus.WEAK,
    trusted_l1_hash: bytes | None = None,
    flow_name: str = "l2_to_l1",
    unprovable_l1_error: str = "InclusionUnprovable",
) -> VerificationReport:
    steps: list[StepRecord] = []
    try:
        finality = world.finality_of(ev.l2_chain_id, ev.l2_proof_block, world.clock)
    except (UnknownBlock, KeyError):
        finality = FinalityStatus.NONE

    def reject(error: str) -> VerificationReport:
        return VerificationReport(
            flow=flow_name,
            steps=steps,
            finality_at_verification=finality,
            accepted=False,
            simulated_time=world.clock,
            error=error,
        )

    # 1. storage proof at L2proofBlock
    ok, value = _verify_storage_step(ev.l2_proof_block_hash, ev.storage_proof_l2, ev.address, ev.slot)
    steps.append(
        StepRecord(
            name="storage_proof_at_l2_proof_block",
            evidence=f"hierarchical_proof(chain={ev.l2_chain_id}, block={ev.l2_proof_block}, "
            f"address=0x{ev.address.hex()}, slot=0x{ev.slot.hex()})",
            passed=ok,
        )
    )
    if not ok:
        return reject("VerificationFailed")

    # 2. locate the state update carrying L2transferedBlock
    covered = ev.update is not None and ev.update.l2_block_number >= ev.l2_proof_block
    steps.append(
        StepRecord(
            name="locate_state_update",
            evidence=(
                f"state_update(epoch={ev.update.epoch}, l2_block={ev.update.l2_block_number}, "
                f"l1_block={ev.update.l1_block_number})"
                if ev.update is not None
                else "state_update(none)"
            ),
            passed=covered,
        )
    )
    if not covered:
        return reject("NotYetCommitted")

    # 3. L2 block inclusion: proof block and transferred block share a chain
    ok = (
        ev.l2_inclusion is not None
        and ev.l2_inclusion.target_number == ev.l2_proof_block
        and ev.l2_inclusion.target_hash == ev.l2_proof_block_hash
        and ev.l2_inclusion.anchor_number == ev.update.l2_block_number
        and ev.l2_inclusion.anchor_hash == ev.update.l2_block_hash
        and _check_inclusion(ev.l2_inclusion, world.hash_id)
    )
    steps.append(
        StepRecord(
            name="l2_block_inclusion",
            evidence=ev.l2_inclusion.describe() if ev.l2_inclusion is not None else "inclusion(none)",
            passed=ok,
        )
    )
    if not ok:
        return reject("InclusionUnprovable")

    # 4. identify L1proofBlock (where the state update landed)
    ok = (
        ev.l1_proof_block is not None
        and ev.l1_proof_block == ev.update.l1_block_number
        and ev.l1_proof_block_hash is not None
    )
    steps.append(
        StepRecord(
            name="locate_l1_proof_block",
            evidence=f"l1_block={ev.l1_proof_block}",
            passed=ok,
        )
    )
    if not ok:
        return reject("VerificationFailed")

    # 5. storage proof: the transferred hash sits in the rollup contract on L1proofBlock
    expected_slot = state_update_slot(ev.l2_chain_id, ev.update.epoch)
    ok = ev.rollup_storage_proof is not None
    if ok:
        ok, stored = _verify_storage_step(
            ev.l1_proof_block_hash,
            ev.rollup_storage_proof,
            rollup_contract_address(ev.l2_chain_id),
            expected_slot,
        )
        ok = ok and stored == ev.update.l2_block_hash
    steps.append(
        StepRecord(
            name="rollup_slot_storage_proof",
            evidence=f"hierarchical_proof(chain={world.l1_id}, block={ev.l1_proof_block}, "
            f"address=0x{rollup_contract_address(ev.l2_chain_id).hex()}, slot=0x{expected_slot.hex()})",
            passed=ok,
        )
    )
    if not ok:
        return reject("VerificationFailed")

    # 6. L1 block inclusion: L1proofBlock and L1verificationBlock share a chain
    if trusted_l1_hash is None:
        trusted_l1_hash = world.runtimes[world.l1_id].chain.block_hash(ev.l1_verification_block)
    ok = (
        ev.l1_inclusion is not None
        and ev.l1_inclusion.target_number == ev.l1_proof_block
        and ev.l1_inclusion.target_hash == ev.l1_proof_block_hash
        and ev.l1_inclusion.anchor_number == ev.l1_verification_block
        and ev.l1_inclusion.anchor_hash == trusted_l1_hash
        and _check_inclusion(ev.l1_inclusion, world.hash_id)
    )
    steps.append(
        StepRecord(
            name="l1_block_inclusion",
            evidence=ev.l1_inclusion.describe() if ev.l1_inclusion is not None else "inclusion(none)",
            passed=ok,
        )
    )
    if not ok:
        return reject(unprovable_l1_error)

    # 7. verify on L1verificationBlock under the finality policy
    ok = finality >= policy
    steps.append(
        StepRecord(
            name="verify_on_l1_verification_block",
            evidence=f"l1_block={ev.l1_verification_block}, finality={finality.label}, "
            f"policy={policy.label}",
            passed=ok,
        )
    )
    if not ok:
        return reject("FinalityInsufficient")

    return VerificationReport(
        flow=flow_name,
        steps=steps,
        finality_at_verification=finality,
        accepted=True,
        simulated_time=world.clock,
        recovered_value=value,
    )


def verify_l2_on_l1(
    world: SimWorld,
    l2_chain: str,
    l2_proof_block: int,
    address: bytes,
    slot: bytes,
    l1_verification_block: int | None = None,
    policy: FinalityStatus = FinalityStatus.WEAK,
    accumulator: str = "mpt",
) -> VerificationReport:
    ev = prepare_l2_on_l1(
        world, l2_chain, l2_proof_block, address, slot, l1_verification_block, accumulator
    )
    return check_l2_on_l1(world, ev, policy)


# --- flow: L1 -> L2 --------------------------------------------------------------------


def prepare_l1_on_l2(
    world: SimWorld,
    l1_proof_block: int,
    address: bytes,
    slot: bytes,
    l2_chain: str,
    l2_verification_block: int | None = None,
    accumulator: str = "mpt",
) -> L1OnL2Evidence:
    rt = world.runtimes[l2_chain]
    if rt.config.layer != "L2":
        raise ValueError(f"{l2_chain!r} is not an L2 chain")
    l1 = world.runtimes[world.l1_id]
    l1.chain.header(l1_proof_block)
    if l2_verification_block is None:
        l2_verification_block = rt.chain.head.number
    rt.chain.header(l2_verification_block)

    # earliest bridge record whose transferred block covers the proof block
    bridge = None
    if rt.config.bridge_push_interval_seconds is not None:
        for record in world.bridge_log:
            if record.l2_chain_id == l2_chain and record.l1_block_number >= l1_proof_block:
                bridge = record
                break

    evidence = L1OnL2Evidence(
        l2_chain_id=l2_chain,
        l1_proof_block=l1_proof_block,
        address=address,
        slot=slot,
        accumulator=accumulator,
        bridge=bridge,
        l1_proof_block_hash=l1.chain.block_hash(l1_proof_block),
        storage_proof_l1=l1.chain.make_storage_proof(l1_proof_block, address, slot),
        l1_inclusion=None,
        l2_proof_block_hash=None,
        bridged_storage_proof=None,
        l2_inclusion=None,
        l2_verification_block=l2_verification_block,
    )
    if bridge is None:
        return evidence
    evidence.l1_inclusion = world._inclusion_evidence(
        world.l1_id, l1_proof_block, bridge.l1_block_number, accumulator
    )
    evidence.l2_proof_block_hash = rt.chain.block_hash(bridge.l2_block_number)
    evidence.bridged_storage_proof = rt.chain.make_storage_proof(
        bridge.l2_block_number, bridge_contract_address(l2_chain), BRIDGE_SLOT
    )
    evidence.l2_inclusion = world._inclusion_evidence(
        l2_chain, bridge.l2_block_number, l2_verification_block, accumulator
    )
    return evidence


def check_l1_on_l2(
    world: SimWorld,
    ev: L1OnL2Evidence,
    policy: FinalityStatus = FinalityStatus.WEAK,
    flow_name: str = "l1_to_l2",
) -> VerificationReport:
    steps: list[StepRecord] = []
    try:
        finality = world.finality_of(world.l1_id, ev.l1_proof_block, world.clock)
    except (UnknownBlock, KeyError):
        finality = FinalityStatus.NONE

    def reject(error: str) -> VerificationReport:
        return VerificationReport(
            flow=flow_name,
            steps=steps,
            finality_at_verification=finality,
            accepted=False,
            simulated_time=world.clock,
            error=error,
        )

    # 1. bridge delivery of L1transferedBlock
    rt = world.runtimes[ev.l2_chain_id]
    if rt.config.bridge_push_interval_seconds is None:
        steps.append(StepRecord(name="bridge_delivery", evidence="bridge(unconfigured)", passed=False))
        return reject("BridgeUnavailable")
    ok = ev.bridge is not None and ev.bridge.l1_block_number >= ev.l1_proof_block
    steps.append(
        StepRecord(
            name="bridge_delivery",
            evidence=(
                f"bridge(l1_block={ev.bridge.l1_block_number}, l2_block={ev.bridge.l2_block_number})"
                if ev.bridge is not None
                else "bridge(no covering transfer)"
            ),
            passed=ok,
        )
    )
    if not ok:
        return reject("ProofBlockTooNew")

    # 2. storage proof at L1proofBlock
    ok, value = _verify_storage_step(ev.l1_proof_block_hash, ev.storage_proof_l1, ev.address, ev.slot)
    steps.append(
        StepRecord(
            name="storage_proof_at_l1_proof_block",
            evidence=f"hierarchical_proof(chain={world.l1_id}, block={ev.l1_proof_block}, "
            f"address=0x{ev.address.hex()}, slot=0x{ev.slot.hex()})",
            passed=ok,
        )
    )
    if not ok:
        return reject("VerificationFailed")

    # 3. L1 inclusion: proof block belongs to the chain of the transferred block
    ok = (
        ev.l1_inclusion is not None
        and ev.l1_inclusion.target_number == ev.l1_proof_block
        and ev.l1_inclusion.target_hash == ev.l1_proof_block_hash
        and ev.l1_inclusion.anchor_number == ev.bridge.l1_block_number
        and ev.l1_inclusion.anchor_hash == ev.bridge.l1_block_hash
        and _check_inclusion(ev.l1_inclusion, world.hash_id)
    )
    steps.append(
        StepRecord(
            name="l1_block_inclusion",
            evidence=ev.l1_inclusion.describe() if ev.l1_inclusion is not None else "inclusion(none)",
            passed=ok,
        )
    )
    if not ok:
        return reject("InclusionUnprovable")

    # 4. the bridged hash is stored inside L2proofBlock
    ok = ev.bridged_storage_proof is not None and ev.l2_proof_block_hash is not None
    if ok:
        ok, stored = _verify_storage_step(
            ev.l2_proof_block_hash,
            ev.bridged_storage_proof,
            bridge_contract_address(ev.l2_chain_id),
            BRIDGE_SLOT,
        )
        ok = ok and stored == ev.bridge.l1_block_hash
    steps.append(
        StepRecord(
            name="bridged_hash_storage_proof",
            evidence=f"hierarchical_proof(chain={ev.l2_chain_id}, block={ev.bridge.l2_block_number}, "
            f"address=0x{bridge_contract_address(ev.l2_chain_id).hex()}, slot=0x{BRIDGE_SLOT.hex()})",
            passed=ok,
        )
    )
    if not ok:
        return reject("VerificationFailed")

    # 5. L2 inclusion: L2proofBlock belongs to the chain of L2verificationBlock
    trusted_l2_hash = rt.chain.block_hash(ev.l2_verification_block)
    ok = (
        ev.l2_inclusion is not None
        and ev.l2_inclusion.target_number == ev.bridge.l2_block_number
        and ev.l2_inclusion.target_hash == ev.l2_proof_block_hash
        and ev.l2_inclusion.anchor_number == ev.l2_verification_block
        and ev.l2_inclusion.anchor_hash == trusted_l2_hash
        and _check_inclusion(ev.l2_inclusion, world.hash_id)
    )
    steps.append(
        StepRecord(
            name="l2_block_inclusion",
            evidence=ev.l2_inclusion.describe() if ev.l2_inclusion is not None else "inclusion(none)",
            passed=ok,
        )
    )
    if not ok:
        return reject("InclusionUnprovable")

    # 6. verify on L2verificationBlock under the finality policy
    ok = finality >= policy
    steps.append(
        StepRecord(
            name="verify_on_l2_verification_block",
            evidence=f"l2_block={ev.l2_verification_block}, finality={finality.label}, "
            f"policy={policy.label}",
            passed=ok,
        )
    )
    if not ok:
        return reject("FinalityInsufficient")

    return VerificationReport(
        flow=flow_name,
        steps=steps,
        finality_at_verification=finality,
        accepted=True,
        simulated_time=world.clock,
        recovered_value=value,
    )


def verify_l1_on_l2(
    world: SimWorld,
    l1_proof_block: int,
    address: bytes,
    slot: bytes,
    l2_chain: str,
    l2_verification_block: int | None = None,
    policy: FinalityStatus = FinalityStatus.WEAK,
    accumulator: str = "mpt",
) -> VerificationReport:
    ev = prepare_l1_on_l2(
        world, l1_proof_block, address, slot, l2_chain, l2_verification_block, accumulator
    )
    return check_l1_on_l2(world, ev, policy)


# --- flow: L2 -> L2 (composition) -----------------------------------------------------


def prepare_l2_on_l2(
    world: SimWorld,
    source_l2: str,
    source_proof_block: int,
    address: bytes,
    slot: bytes,
    dest_l2: str,
    dest_verification_block: int | None = None,
    accumulator: str = "mpt",
) -> L2OnL2Evidence:
    src = world.runtimes[source_l2]
    dst = world.runtimes[dest_l2]
    if src.config.layer != "L2" or dst.config.layer != "L2":
        raise ValueError("both endpoints must be L2 chains")
    if src.config.parent_chain_id != dst.config.parent_chain_id:
        raise ValueError("source and destination must share the same L1 parent")
    if dest_verification_block is None:
        dest_verification_block = dst.chain.head.number
    dst.chain.header(dest_verification_block)

    # latest bridged L1 block on the destination
    dest_bridge = None
    if dst.config.bridge_push_interval_seconds is not None:
        for record in world.bridge_log:
            if record.l2_chain_id == dest_l2:
                dest_bridge = record

    # source side verifies against the bridged L1 block, not the L1 head
    l1_anchor = dest_bridge.l1_block_number if dest_bridge is not None else None
    source = prepare_l2_on_l1(
        world, source_l2, source_proof_block, address, slot, l1_anchor, accumulator
    )

    evidence = L2OnL2Evidence(
        source=source,
        dest_l2_chain_id=dest_l2,
        dest_bridge=dest_bridge,
        dest_l2_proof_block_hash=None,
        dest_bridged_storage_proof=None,
        dest_l2_inclusion=None,
        dest_verification_block=dest_verification_block,
    )
    if dest_bridge is None:
        return evidence
    evidence.dest_l2_proof_block_hash = dst.chain.block_hash(dest_bridge.l2_block_number)
    evidence.dest_bridged_storage_proof = dst.chain.make_storage_proof(
        dest_bridge.l2_block_number, bridge_contract_address(dest_l2), BRIDGE_SLOT
    )
    evidence.dest_l2_inclusion = world._inclusion_evidence(
        dest_l2, dest_bridge.l2_block_number, dest_verification_block, accumulator
    )
    return evidence


def check_l2_on_l2(
    world: SimWorld,
    ev: L2OnL2Evidence,
    policy: FinalityStatus = FinalityStatus.WEAK,
) -> VerificationReport:
    dst = world.runtimes[ev.dest_l2_chain_id]
    flow_name = "l2_to_l2"

    # destination bridge must exist before the source side can anchor on it
    if dst.config.bridge_push_interval_seconds is None or ev.dest_bridge is None:
        step = StepRecord(
            name="bridge_delivery",
            evidence="bridge(unconfigured)" if dst.config.bridge_push_interval_seconds is None
            else "bridge(no transfer yet)",
            passed=False,
        )
        return VerificationReport(
            flow=flow_name,
            steps=[step],
            finality_at_verification=FinalityStatus.NONE,
            accepted=False,
            simulated_time=world.clock,
            error="BridgeUnavailable" if dst.config.bridge_push_interval_seconds is None else "ProofBlockTooNew",
        )

    # source portion: the L2->L1 pattern anchored at the bridged L1 block;
    # a bridge push older than the state update shows up as a failure of
    # the L1-side linkage step
    source_report = check_l2_on_l1(
        world,
        ev.source,
        policy,
        trusted_l1_hash=ev.dest_bridge.l1_block_hash,
        flow_name=flow_name,
        unprovable_l1_error="NotYetCommitted",
    )
    steps = list(source_report.steps)
    finality = source_report.finality_at_verification
    if not source_report.accepted:
        return VerificationReport(
            flow=flow_name,
            steps=steps,
            finality_at_verification=finality,
            accepted=False,
            simulated_time=world.clock,
            error=source_report.error,
        )

    def reject(error: str) -> VerificationReport:
        return VerificationReport(
            flow=flow_name,
            steps=steps,
            finality_at_verification=finality,
            accepted=False,
            simulated_time=world.clock,
            error=error,
        )

    # destination portion (the L1 -> L2 pattern, bridged-hash side)
    steps.append(
        StepRecord(
            name="bridge_delivery",
            evidence=f"bridge(l1_block={ev.dest_bridge.l1_block_number}, "
            f"l2_block={ev.dest_bridge.l2_block_number})",
            passed=True,
        )
    )

    ok = ev.dest_bridged_storage_proof is not None and ev.dest_l2_proof_block_hash is not None
    if ok:
        ok, stored = _verify_storage_step(
            ev.dest_l2_proof_block_hash,
            ev.dest_bridged_storage_proof,
            bridge_contract_address(ev.dest_l2_chain_id),
            BRIDGE_SLOT,
        )
        ok = ok and stored == ev.dest_bridge.l1_block_hash
    steps.append(
        StepRecord(
            name="bridged_hash_storage_proof",
            evidence=f"hierarchical_proof(chain={ev.dest_l2_chain_id}, "
            f"block={ev.dest_bridge.l2_block_number}, "
            f"address=0x{bridge_contract_address(ev.dest_l2_chain_id).hex()}, slot=0x{BRIDGE_SLOT.hex()})",
            passed=ok,
        )
    )
    if not ok:
        return reject("VerificationFailed")

    trusted_dest_hash = dst.chain.block_hash(ev.dest_verification_block)
    ok = (
        ev.dest_l2_inclusion is not None
        and ev.dest_l2_inclusion.target_number == ev.dest_bridge.l2_block_number
        and ev.dest_l2_inclusion.target_hash == ev.dest_l2_proof_block_hash
        and ev.dest_l2_inclusion.anchor_number == ev.dest_verification_block
        and ev.dest_l2_inclusion.anchor_hash == trusted_dest_hash
        and _check_inclusion(ev.dest_l2_inclusion, world.hash_id)
    )
    steps.append(
        StepRecord(
            name="dest_l2_block_inclusion",
            evidence=ev.dest_l2_inclusion.describe()
            if ev.dest_l2_inclusion is not None
            else "inclusion(none)",
            passed=ok,
        )
    )
    if not ok:
        return reject("InclusionUnprovable")

    # final: the source state update must carry the policy-required finality on L1
    l1_finality = world.finality_of(world.l1_id, ev.source.l1_proof_block, world.clock)
    ok = l1_finality >= policy
    steps.append(
        StepRecord(
            name="verify_on_dest_l2_verification_block",
            evidence=f"dest_block={ev.dest_verification_block}, l1_finality={l1_finality.label}, "
            f"policy={policy.label}",
            passed=ok,
        )
    )
    if not ok:
        return reject("FinalityInsufficient")

    return VerificationReport(
        flow=flow_name,
        steps=steps,
        finality_at_verification=finality,
        accepted=True,
        simulated_time=world.clock,
        recovered_value=source_report.recovered_value,
    )


def verify_l2_on_l2(
    world: SimWorld,
    source_l2: str,
    source_proof_block: int,
    address: bytes,
    slot: bytes,
    dest_l2: str,
    dest_verification_block: int | None = None,
    policy: FinalityStatus = FinalityStatus.WEAK,
    accumulator: str = "mpt",
) -> VerificationReport:
    ev = prepare_l2_on_l2(
        world, source_l2, source_proof_block, address, slot, dest_l2,
        dest_verification_block, accumulator,
    )
    return check_l2_on_l2(world, ev, policy)


# --- scenario runner --------------------------------------------------------------------


def _hex_bytes(text: str) -> bytes:
    return bytes.fromhex(text[2:] if text.startswith("0x") else text)


def run_scenario(scenario: dict) -> tuple[SimWorld, list[VerificationReport]]:
    """Build a world from a scenario dict, drive it, run its requests."""
    configs = [NetworkConfig.from_json_obj(c) for c in scenario["networks"]]
    world = SimWorld(configs, hash_id=HashId(scenario.get("hash", "keccak256")))
    for write in scenario.get("writes", []):
        world.schedule_write(
            time=write["time"],
            chain_id=write["chain"],
            address=_hex_bytes(write["address"]),
            slot=_hex_bytes(write["slot"]),
            value=_hex_bytes(write["value"]),
        )
    world.advance(scenario["advance_to"])

    reports = []
    for req in scenario.get("requests", []):
        flow = req["flow"]
        policy = FinalityStatus.from_label(req.get("policy", "weak"))
        accumulator = req.get("accumulator", "mpt")
        if flow == "l2_to_l1":
            reports.append(
                verify_l2_on_l1(
                    world,
                    l2_chain=req["l2_chain"],
                    l2_proof_block=req["l2_proof_block"],
                    address=_hex_bytes(req["address"]),
                    slot=_hex_bytes(req["slot"]),
                    l1_verification_block=req.get("l1_verification_block"),
                    policy=policy,
                    accumulator=accumulator,
                )
            )
        elif flow == "l1_to_l2":
            reports.append(
                verify_l1_on_l2(
                    world,
                    l1_proof_block=req["l1_proof_block"],
                    address=_hex_bytes(req["address"]),
                    slot=_hex_bytes(req["slot"]),
                    l2_chain=req["l2_chain"],
                    l2_verification_block=req.get("l2_verification_block"),
                    policy=policy,
                    accumulator=accumulator,
                )
            )
        elif flow == "l2_to_l2":
            reports.append(
                verify_l2_on_l2(
                    world,
                    source_l2=req["source_l2"],
                    source_proof_block=req["source_proof_block"],
                    address=_hex_bytes(req["address"]),
                    slot=_hex_bytes(req["slot"]),
                    dest_l2=req["dest_l2"],
                    dest_verification_block=req.get("dest_verification_block"),
                    policy=policy,
                    accumulator=accumulator,
                )
            )
        else:
            raise ValueError(f"unknown flow {flow!r}")
    return world, reports
