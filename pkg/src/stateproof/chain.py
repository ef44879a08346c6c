"""Simulated Ethereum-like chain: headers, world state, storage proofs.

A block header is a simplified six-field RLP list -- number, parent
hash, state root, transactions root, receipts root, timestamp -- not
the full mainnet header.  The state machinery, however, is bit-exact
with Ethereum: the state trie maps keccak256(address) to the RLP of the
account 4-tuple (nonce, balance, storage root, code hash), and each
contract's storage trie maps keccak256(slot) to the RLP of the stored
word with leading zeros stripped.  Recorded ``eth_getProof`` material
therefore verifies through this module unchanged.

State is versioned: tries are persistent, every block's snapshot stays
reachable through its state root, and proofs generated at block N keep
verifying against block N's hash forever.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum

from . import mpt, rlp
from .hashing import HashId, digest

__all__ = [
    "MalformedChange",
    "UnknownBlock",
    "InvalidProof",
    "BlockhashMode",
    "BlockClass",
    "BlockHeader",
    "Account",
    "StorageWrite",
    "AccountWrite",
    "HierarchicalProof",
    "SimChain",
    "header_hash",
    "encode_header",
    "decode_header",
    "encode_account",
    "decode_account",
    "verify_hierarchical",
    "classify_block",
    "ZERO_DIGEST",
    "WINDOW_RECENT",
    "RING_SIZE",
]

ZERO_DIGEST = b"\x00" * 32
ADDRESS_SIZE = 20
WORD_SIZE = 32
WINDOW_RECENT = 256  # blockhash() reach
RING_SIZE = 8192  # EIP-2935 ring buffer slots
DEFAULT_BLOCK_TIME = 12


class MalformedChange(ValueError):
    pass


class UnknownBlock(KeyError):
    pass


class InvalidProof(ValueError):
    """Hierarchical proof rejection; ``layer`` is header, account or storage."""

    def __init__(self, layer: str, reason: str):
        self.layer = layer
        self.reason = reason
        super().__init__(f"{layer}: {reason}")


class BlockhashMode(str, Enum):
    WINDOW256 = "window256"
    EIP2935_RING8192 = "eip2935_ring8192"

    def __str__(self) -> str:
        return self.value


class BlockClass(str, Enum):
    CURRENT = "current"
    RECENT = "recent"
    HISTORICAL = "historical"

    def __str__(self) -> str:
        return self.value


# --- headers ----------------------------------------------------------------


@dataclass(frozen=True)
class BlockHeader:
    number: int
    parent_hash: bytes
    state_root: bytes
    transactions_root: bytes
    receipts_root: bytes
    timestamp: int

    def to_json_obj(self) -> dict:
        return {
            "number": self.number,
            "parent_hash": "0x" + self.parent_hash.hex(),
            "state_root": "0x" + self.state_root.hex(),
            "transactions_root": "0x" + self.transactions_root.hex(),
            "receipts_root": "0x" + self.receipts_root.hex(),
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "BlockHeader":
        return cls(
            number=obj["number"],
            parent_hash=bytes.fromhex(obj["parent_hash"][2:]),
            state_root=bytes.fromhex(obj["state_root"][2:]),
            transactions_root=bytes.fromhex(obj["transactions_root"][2:]),
            receipts_root=bytes.fromhex(obj["receipts_root"][2:]),
            timestamp=obj["timestamp"],
        )


def encode_header(header: BlockHeader) -> bytes:
    return rlp.encode(
        [
            header.number,
            header.parent_hash,
            header.state_root,
            header.transactions_root,
            header.receipts_root,
            header.timestamp,
        ]
    )


def decode_header(encoding: bytes) -> BlockHeader:
    fields = rlp.decode(encoding)
    if not isinstance(fields, list) or len(fields) != 6:
        raise ValueError("header preimage is not a 6-field RLP list")
    number, parent, state, txs, rcpts, ts = fields
    for d in (parent, state, txs, rcpts):
        if len(d) != 32:
            raise ValueError("header digest field is not 32 bytes")
    return BlockHeader(
        number=rlp.decode_int(number),
        parent_hash=parent,
        state_root=state,
        transactions_root=txs,
        receipts_root=rcpts,
        timestamp=rlp.decode_int(ts),
    )


def header_hash(header: BlockHeader, hash_id: HashId = HashId.KECCAK256) -> bytes:
    return digest(hash_id, encode_header(header))


# --- accounts ----------------------------------------------------------------


@dataclass(frozen=True)
class Account:
    nonce: int
    balance: int
    storage_root: bytes
    code_hash: bytes


def encode_account(account: Account) -> bytes:
    return rlp.encode([account.nonce, account.balance, account.storage_root, account.code_hash])


def decode_account(encoding: bytes) -> Account:
    fields = rlp.decode(encoding)
    if not isinstance(fields, list) or len(fields) != 4:
        raise ValueError("account record is not a 4-field RLP list")
    nonce, balance, storage_root, code_hash = fields
    if len(storage_root) != 32 or len(code_hash) != 32:
        raise ValueError("account digest field is not 32 bytes")
    return Account(
        nonce=rlp.decode_int(nonce),
        balance=rlp.decode_int(balance),
        storage_root=storage_root,
        code_hash=code_hash,
    )


def _encode_storage_word(value: bytes) -> bytes:
    # Ethereum stores RLP of the word with leading zeros stripped
    return rlp.encode(value.lstrip(b"\x00"))


def _decode_storage_word(encoding: bytes) -> bytes:
    raw = rlp.decode(encoding)
    if not isinstance(raw, bytes) or len(raw) > WORD_SIZE:
        raise ValueError("storage value does not decode to a 32-byte word")
    return raw.rjust(WORD_SIZE, b"\x00")


# --- state changes ------------------------------------------------------------


@dataclass(frozen=True)
class StorageWrite:
    address: bytes
    slot: bytes
    value: bytes  # 32-byte word


@dataclass(frozen=True)
class AccountWrite:
    address: bytes
    balance: int | None = None
    nonce: int | None = None
    code_hash: bytes | None = None


def _validate_change(change) -> None:
    if isinstance(change, StorageWrite):
        if len(change.address) != ADDRESS_SIZE:
            raise MalformedChange("address must be 20 bytes")
        if len(change.slot) != WORD_SIZE or len(change.value) != WORD_SIZE:
            raise MalformedChange("slot and value must be 32 bytes")
    elif isinstance(change, AccountWrite):
        if len(change.address) != ADDRESS_SIZE:
            raise MalformedChange("address must be 20 bytes")
        if change.code_hash is not None and len(change.code_hash) != WORD_SIZE:
            raise MalformedChange("code hash must be 32 bytes")
        if change.balance is not None and change.balance < 0:
            raise MalformedChange("balance must be non-negative")
        if change.nonce is not None and change.nonce < 0:
            raise MalformedChange("nonce must be non-negative")
    else:
        raise MalformedChange(f"unsupported change type {type(change).__name__}")


# --- hierarchical proofs -------------------------------------------------------


@dataclass
class HierarchicalProof:
    """Full Header-State-Storage chain for one (address, slot) claim."""

    header_preimage: bytes
    address: bytes
    slot_key: bytes
    account_proof: mpt.MptProof
    storage_proof: mpt.MptProof
    hash_id: HashId = HashId.KECCAK256

    def to_json_obj(self) -> dict:
        # field naming mirrors eth_getProof so recorded fixtures drop in
        return {
            "hash": str(self.hash_id),
            "blockHeaderPreimage": "0x" + self.header_preimage.hex(),
            "address": "0x" + self.address.hex(),
            "accountProof": ["0x" + n.hex() for n in self.account_proof.nodes],
            "storageProof": [
                {
                    "key": "0x" + self.slot_key.hex(),
                    "proof": ["0x" + n.hex() for n in self.storage_proof.nodes],
                }
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "HierarchicalProof":
        slot = obj["storageProof"][0]
        return cls(
            header_preimage=bytes.fromhex(obj["blockHeaderPreimage"][2:]),
            address=bytes.fromhex(obj["address"][2:]),
            slot_key=bytes.fromhex(slot["key"][2:]),
            account_proof=mpt.MptProof(
                nodes=tuple(bytes.fromhex(n[2:]) for n in obj["accountProof"])
            ),
            storage_proof=mpt.MptProof(
                nodes=tuple(bytes.fromhex(n[2:]) for n in slot["proof"])
            ),
            hash_id=HashId(obj.get("hash", "keccak256")),
        )

    @classmethod
    def from_json(cls, text: str) -> "HierarchicalProof":
        return cls.from_json_obj(json.loads(text))


def verify_hierarchical(block_hash: bytes, proof: HierarchicalProof) -> bytes | None:
    """Verify the three layers in order and return the slot word.

    Layer order: header preimage against the block hash, account proof
    under the header's state root, storage proof under the account's
    storage root.  Returns ``None`` when the proof shows absence (of the
    slot, or of the whole account).  Raises :class:`InvalidProof` naming
    the offending layer otherwise.
    """
    hash_id = proof.hash_id
    if digest(hash_id, proof.header_preimage) != block_hash:
        raise InvalidProof("header", "preimage does not hash to the block hash")
    try:
        header = decode_header(proof.header_preimage)
    except (ValueError, rlp.RlpError) as exc:
        raise InvalidProof("header", f"undecodable preimage: {exc}") from exc

    account_key = digest(hash_id, proof.address)
    try:
        account_rlp = mpt.verify(header.state_root, account_key, proof.account_proof, hash_id)
    except mpt.InvalidProof as exc:
        raise InvalidProof("account", exc.reason) from exc
    if account_rlp is None:
        # absent account: a well-formed claim needs an empty storage proof
        if proof.storage_proof.nodes:
            raise InvalidProof("storage", "storage nodes supplied for an absent account")
        return None
    try:
        account = decode_account(account_rlp)
    except (ValueError, rlp.RlpError) as exc:
        raise InvalidProof("account", f"undecodable account record: {exc}") from exc

    slot_key = digest(hash_id, proof.slot_key)
    try:
        value_rlp = mpt.verify(account.storage_root, slot_key, proof.storage_proof, hash_id)
    except mpt.InvalidProof as exc:
        raise InvalidProof("storage", exc.reason) from exc
    if value_rlp is None:
        return None
    try:
        return _decode_storage_word(value_rlp)
    except (ValueError, rlp.RlpError) as exc:
        raise InvalidProof("storage", f"undecodable storage value: {exc}") from exc


# --- the simulated chain --------------------------------------------------------


class SimChain:
    """Single chain with versioned world state and blockhash windows.

    ``apply_block`` is the only mutator and must be externally
    serialized; every query runs against immutable snapshots.
    """

    def __init__(
        self,
        hash_id: HashId = HashId.KECCAK256,
        block_time: int = DEFAULT_BLOCK_TIME,
        genesis_time: int = 0,
        blockhash_mode: BlockhashMode = BlockhashMode.WINDOW256,
    ):
        self.hash_id = HashId(hash_id)
        self.block_time = block_time
        self.blockhash_mode = BlockhashMode(blockhash_mode)
        self.store = mpt.NodeStore()
        empty = mpt.empty_root(self.hash_id)
        genesis = BlockHeader(
            number=0,
            parent_hash=ZERO_DIGEST,
            state_root=empty,
            transactions_root=empty,
            receipts_root=empty,
            timestamp=genesis_time,
        )
        self.headers: list[BlockHeader] = [genesis]
        self._hashes: list[bytes] = [header_hash(genesis, self.hash_id)]

    # -- header access ---------------------------------------------------

    @property
    def head(self) -> BlockHeader:
        return self.headers[-1]

    def header(self, number: int) -> BlockHeader:
        if not 0 <= number < len(self.headers):
            raise UnknownBlock(f"block {number} does not exist (head={self.head.number})")
        return self.headers[number]

    def block_hash(self, number: int) -> bytes:
        if not 0 <= number < len(self._hashes):
            raise UnknownBlock(f"block {number} does not exist (head={self.head.number})")
        return self._hashes[number]

    # -- state access ------------------------------------------------------

    def _state_trie(self, state_root: bytes) -> mpt.Trie:
        return mpt.Trie.at_root(self.store, state_root, self.hash_id)

    def get_account(self, block_number: int, address: bytes) -> Account | None:
        header = self.header(block_number)
        raw = self._state_trie(header.state_root).get(digest(self.hash_id, address))
        return decode_account(raw) if raw is not None else None

    def get_storage(self, block_number: int, address: bytes, slot: bytes) -> bytes | None:
        account = self.get_account(block_number, address)
        if account is None:
            return None
        storage = mpt.Trie.at_root(self.store, account.storage_root, self.hash_id)
        raw = storage.get(digest(self.hash_id, slot))
        return _decode_storage_word(raw) if raw is not None else None

    # -- block production -----------------------------------------------------

    def apply_block(self, changes: list, timestamp: int | None = None) -> BlockHeader:
        for change in changes:
            _validate_change(change)
        prev = self.head
        state = self._state_trie(prev.state_root)

        # group storage writes so each touched account is rewritten once
        storage_by_addr: dict[bytes, list[StorageWrite]] = {}
        account_writes: list[AccountWrite] = []
        order: list[bytes] = []
        for change in changes:
            if isinstance(change, StorageWrite):
                if change.address not in storage_by_addr:
                    order.append(change.address)
                storage_by_addr.setdefault(change.address, []).append(change)
            else:
                account_writes.append(change)

        for address in order:
            account = self._load_or_new_account(state, address)
            storage = mpt.Trie.at_root(self.store, account.storage_root, self.hash_id)
            for w in storage_by_addr[address]:
                storage = storage.insert(digest(self.hash_id, w.slot), _encode_storage_word(w.value))
            account = replace(account, storage_root=storage.root())
            state = state.insert(digest(self.hash_id, address), encode_account(account))

        for w in account_writes:
            account = self._load_or_new_account(state, w.address)
            if w.balance is not None:
                account = replace(account, balance=w.balance)
            if w.nonce is not None:
                account = replace(account, nonce=w.nonce)
            if w.code_hash is not None:
                account = replace(account, code_hash=w.code_hash)
            state = state.insert(digest(self.hash_id, w.address), encode_account(account))

        header = BlockHeader(
            number=prev.number + 1,
            parent_hash=self._hashes[-1],
            state_root=state.root(),
            transactions_root=mpt.empty_root(self.hash_id),
            receipts_root=mpt.empty_root(self.hash_id),
            timestamp=timestamp if timestamp is not None else prev.timestamp + self.block_time,
        )
        self.headers.append(header)
        self._hashes.append(header_hash(header, self.hash_id))
        return header

    def _load_or_new_account(self, state: mpt.Trie, address: bytes) -> Account:
        raw = state.get(digest(self.hash_id, address))
        if raw is not None:
            return decode_account(raw)
        return Account(
            nonce=0,
            balance=0,
            storage_root=mpt.empty_root(self.hash_id),
            code_hash=digest(self.hash_id, b""),
        )

    # -- proofs ---------------------------------------------------------------

    def make_storage_proof(self, block_number: int, address: bytes, slot: bytes) -> HierarchicalProof:
        header = self.header(block_number)
        state = self._state_trie(header.state_root)
        account_key = digest(self.hash_id, address)
        account_proof = state.prove(account_key)
        raw_account = state.get(account_key)
        if raw_account is None:
            storage_proof = mpt.MptProof(nodes=())
        else:
            account = decode_account(raw_account)
            storage = mpt.Trie.at_root(self.store, account.storage_root, self.hash_id)
            storage_proof = storage.prove(digest(self.hash_id, slot))
        return HierarchicalProof(
            header_preimage=encode_header(header),
            address=address,
            slot_key=slot,
            account_proof=account_proof,
            storage_proof=storage_proof,
            hash_id=self.hash_id,
        )

    # -- blockhash access windows ----------------------------------------------

    def blockhash_lookup(self, current_number: int, target_number: int) -> bytes | None:
        """Hash of ``target_number`` as visible from ``current_number``.

        window256 mode mirrors ``blockhash()``: the last 256 blocks.  The
        ring mode mirrors the EIP-2935 system contract: 8192 slots keyed
        by number mod 8192, each overwritten as the chain advances, so a
        hash stays readable for exactly 8192 blocks.  Block N's hash
        becomes readable from block N+1 onward in both modes.
        """
        if target_number >= current_number:
            return None
        if not 0 <= current_number < len(self.headers):
            raise UnknownBlock(f"block {current_number} does not exist")
        distance = current_number - target_number
        limit = WINDOW_RECENT if self.blockhash_mode == BlockhashMode.WINDOW256 else RING_SIZE
        if distance > limit or target_number < 0:
            return None
        return self._hashes[target_number]


def classify_block(current_number: int, target_number: int, mode: BlockhashMode) -> BlockClass:
    """current / recent / historical split relative to the access window."""
    if target_number > current_number:
        raise ValueError("target block is in the future")
    if target_number == current_number:
        return BlockClass.CURRENT
    limit = WINDOW_RECENT if BlockhashMode(mode) == BlockhashMode.WINDOW256 else RING_SIZE
    if current_number - target_number <= limit:
        return BlockClass.RECENT
    return BlockClass.HISTORICAL
