"""Chain model tests: headers, world state, hierarchical proofs, windows."""

import dataclasses
import random

import pytest

from stateproof import mpt
from stateproof.chain import (
    Account,
    AccountWrite,
    BlockClass,
    BlockhashMode,
    BlockHeader,
    HierarchicalProof,
    InvalidProof,
    MalformedChange,
    SimChain,
    StorageWrite,
    UnknownBlock,
    classify_block,
    decode_account,
    decode_header,
    encode_account,
    encode_header,
    header_hash,
    verify_hierarchical,
)
from stateproof.hashing import HashId, keccak256

K = HashId.KECCAK256

ADDR_A = bytes(range(20))
ADDR_B = bytes(range(1, 21))
SLOT_1 = keccak256(b"slot-1")
SLOT_2 = keccak256(b"slot-2")
VAL_1 = keccak256(b"value-1")
VAL_2 = keccak256(b"value-2")


def test_header_encoding_round_trip():
    header = BlockHeader(7, b"\x01" * 32, b"\x02" * 32, b"\x03" * 32, b"\x04" * 32, 1234)
    assert decode_header(encode_header(header)) == header
    assert header_hash(header) == keccak256(encode_header(header))


def test_account_encoding_round_trip():
    account = Account(nonce=3, balance=10**18, storage_root=b"\x05" * 32, code_hash=b"\x06" * 32)
    assert decode_account(encode_account(account)) == account


def test_headers_chain_by_parent_hash():
    chain = SimChain()
    for _ in range(3):
        chain.apply_block([])
    for n in range(1, 4):
        assert chain.header(n).parent_hash == chain.block_hash(n - 1)
    assert chain.header(0).state_root == mpt.empty_root(K)


def test_empty_change_set_keeps_state_root():
    chain = SimChain()
    chain.apply_block([StorageWrite(ADDR_A, SLOT_1, VAL_1)])
    before = chain.head.state_root
    header = chain.apply_block([])
    assert header.state_root == before
    assert header.parent_hash != chain.header(header.number - 2).parent_hash


def test_storage_write_and_read_back():
    chain = SimChain()
    chain.apply_block([StorageWrite(ADDR_A, SLOT_1, VAL_1)])
    assert chain.get_storage(1, ADDR_A, SLOT_1) == VAL_1
    assert chain.get_storage(1, ADDR_A, SLOT_2) is None
    assert chain.get_storage(1, ADDR_B, SLOT_1) is None
    account = chain.get_account(1, ADDR_A)
    assert account is not None and account.storage_root != mpt.empty_root(K)


def test_account_write():
    chain = SimChain()
    chain.apply_block([AccountWrite(ADDR_A, balance=5, nonce=2)])
    account = chain.get_account(1, ADDR_A)
    assert (account.balance, account.nonce) == (5, 2)


def test_malformed_changes_rejected():
    chain = SimChain()
    with pytest.raises(MalformedChange):
        chain.apply_block([StorageWrite(b"\x00" * 19, SLOT_1, VAL_1)])
    with pytest.raises(MalformedChange):
        chain.apply_block([StorageWrite(ADDR_A, b"\x00" * 31, VAL_1)])
    with pytest.raises(MalformedChange):
        chain.apply_block([StorageWrite(ADDR_A, SLOT_1, b"\x00" * 33)])
    with pytest.raises(MalformedChange):
        chain.apply_block(["not-a-change"])


def test_untouched_sibling_account_still_proves_after_update():
    chain = SimChain()
    chain.apply_block([StorageWrite(ADDR_A, SLOT_1, VAL_1), StorageWrite(ADDR_B, SLOT_1, VAL_2)])
    chain.apply_block([StorageWrite(ADDR_A, SLOT_2, VAL_2)])  # touch only A
    # B's proof under the NEW root still verifies and recovers its value
    proof_b = chain.make_storage_proof(2, ADDR_B, SLOT_1)
    assert verify_hierarchical(chain.block_hash(2), proof_b) == VAL_2
    # and A's updated slot shows up under the new root only
    assert chain.get_storage(2, ADDR_A, SLOT_2) == VAL_2
    assert chain.get_storage(1, ADDR_A, SLOT_2) is None


def test_hierarchical_proof_round_trip_present_and_absent():
    chain = SimChain()
    chain.apply_block([StorageWrite(ADDR_A, SLOT_1, VAL_1)])
    block_hash = chain.block_hash(1)

    present = chain.make_storage_proof(1, ADDR_A, SLOT_1)
    assert verify_hierarchical(block_hash, present) == VAL_1

    absent_slot = chain.make_storage_proof(1, ADDR_A, SLOT_2)
    assert verify_hierarchical(block_hash, absent_slot) is None

    absent_account = chain.make_storage_proof(1, ADDR_B, SLOT_1)
    assert verify_hierarchical(block_hash, absent_account) is None


def test_proof_made_at_n_fails_against_n_plus_1():
    chain = SimChain()
    chain.apply_block([StorageWrite(ADDR_A, SLOT_1, VAL_1)])
    proof = chain.make_storage_proof(1, ADDR_A, SLOT_1)
    chain.apply_block([StorageWrite(ADDR_A, SLOT_1, VAL_2)])
    with pytest.raises(InvalidProof) as err:
        verify_hierarchical(chain.block_hash(2), proof)
    assert err.value.layer == "header"


def test_hierarchical_layer_attribution():
    chain = SimChain()
    chain.apply_block([StorageWrite(ADDR_A, SLOT_1, VAL_1)])
    block_hash = chain.block_hash(1)
    honest = chain.make_storage_proof(1, ADDR_A, SLOT_1)

    # header layer: tamper the preimage
    bad = dataclasses.replace(honest, header_preimage=honest.header_preimage + b"\x00")
    with pytest.raises(InvalidProof) as err:
        verify_hierarchical(block_hash, bad)
    assert err.value.layer == "header"

    # account layer: flip a byte inside an account-proof node
    nodes = list(honest.account_proof.nodes)
    raw = bytearray(nodes[-1])
    raw[-1] ^= 0x01
    nodes[-1] = bytes(raw)
    bad = dataclasses.replace(honest, account_proof=mpt.MptProof(nodes=tuple(nodes)))
    with pytest.raises(InvalidProof) as err:
        verify_hierarchical(block_hash, bad)
    assert err.value.layer == "account"

    # storage layer: flip a byte inside a storage-proof node
    nodes = list(honest.storage_proof.nodes)
    raw = bytearray(nodes[0])
    raw[-1] ^= 0x01
    nodes[0] = bytes(raw)
    bad = dataclasses.replace(honest, storage_proof=mpt.MptProof(nodes=tuple(nodes)))
    with pytest.raises(InvalidProof) as err:
        verify_hierarchical(block_hash, bad)
    assert err.value.layer == "storage"


def test_hierarchical_proof_json_round_trip():
    chain = SimChain()
    chain.apply_block([StorageWrite(ADDR_A, SLOT_1, VAL_1)])
    proof = chain.make_storage_proof(1, ADDR_A, SLOT_1)
    restored = HierarchicalProof.from_json(proof.to_json())
    assert verify_hierarchical(chain.block_hash(1), restored) == VAL_1


def test_snapshot_immutability_over_100_blocks():
    chain = SimChain()
    chain.apply_block([StorageWrite(ADDR_A, SLOT_1, VAL_1)])
    proof = chain.make_storage_proof(1, ADDR_A, SLOT_1)
    anchor = chain.block_hash(1)
    rng = random.Random(2)
    for _ in range(100):
        chain.apply_block([StorageWrite(ADDR_A, rng.randbytes(32), rng.randbytes(32))])
    assert verify_hierarchical(anchor, proof) == VAL_1
    # and the snapshot is still directly queryable
    assert chain.get_storage(1, ADDR_A, SLOT_1) == VAL_1


def test_hierarchical_composition_random_probes():
    rng = random.Random(4)
    chain = SimChain()
    model = {}
    for _ in range(6):
        writes = []
        for _ in range(8):
            addr = rng.choice([ADDR_A, ADDR_B, bytes(rng.randbytes(20))])
            slot, value = rng.randbytes(32), rng.randbytes(32)
            writes.append(StorageWrite(addr, slot, value))
            model[(addr, slot)] = value
        chain.apply_block(writes)
    head = chain.head.number
    block_hash = chain.block_hash(head)
    probes = list(model)[:150] + [(ADDR_A, rng.randbytes(32)) for _ in range(50)]
    for addr, slot in probes:
        proof = chain.make_storage_proof(head, addr, slot)
        assert verify_hierarchical(block_hash, proof) == model.get((addr, slot))


# --- blockhash windows --------------------------------------------------------------


@pytest.fixture(scope="module")
def long_chain():
    chain = SimChain()
    for _ in range(1100):
        chain.apply_block([])
    return chain


def test_header_chain_integrity_over_1000_blocks(long_chain):
    for n in range(1, 1001):
        assert long_chain.header(n).parent_hash == header_hash(long_chain.header(n - 1))


def test_window256_boundaries(long_chain):
    assert long_chain.blockhash_lookup(1000, 744) == long_chain.block_hash(744)  # distance 256
    assert long_chain.blockhash_lookup(1000, 743) is None  # distance 257
    assert long_chain.blockhash_lookup(1000, 999) is not None
    assert long_chain.blockhash_lookup(1000, 1000) is None  # self
    assert long_chain.blockhash_lookup(1000, 1001) is None  # future


def test_ring8192_boundaries():
    chain = SimChain(blockhash_mode=BlockhashMode.EIP2935_RING8192)
    for _ in range(8400):
        chain.apply_block([])
    assert chain.blockhash_lookup(8300, 108) == chain.block_hash(108)  # distance 8192
    assert chain.blockhash_lookup(8300, 107) is None  # distance 8193
    assert chain.blockhash_lookup(8300, 8299) is not None


def test_classify_block():
    assert classify_block(1000, 1000, BlockhashMode.WINDOW256) == BlockClass.CURRENT
    assert classify_block(1000, 900, BlockhashMode.WINDOW256) == BlockClass.RECENT
    assert classify_block(1000, 744, BlockhashMode.WINDOW256) == BlockClass.RECENT
    assert classify_block(1000, 743, BlockhashMode.WINDOW256) == BlockClass.HISTORICAL
    assert classify_block(10000, 100, BlockhashMode.EIP2935_RING8192) == BlockClass.HISTORICAL
    assert classify_block(9000, 1000, BlockhashMode.EIP2935_RING8192) == BlockClass.RECENT
    with pytest.raises(ValueError):
        classify_block(10, 11, BlockhashMode.WINDOW256)


def test_unknown_block_errors():
    chain = SimChain()
    with pytest.raises(UnknownBlock):
        chain.header(5)
    with pytest.raises(UnknownBlock):
        chain.make_storage_proof(5, ADDR_A, SLOT_1)
