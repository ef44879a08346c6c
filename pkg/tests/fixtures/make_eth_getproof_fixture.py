"""Generate the committed eth_getProof-format fixture.

Provenance
----------
This build environment has no route to a public Ethereum JSON-RPC
endpoint, so the fixture was NOT captured live.  It is produced by the
independent reference implementation in tests/reference (its own RLP,
hex-prefix, node-structure and Keccak code, written from the published
specifications and sharing nothing with the package under test), over
mainnet-shaped data: a 64-account state trie keyed by keccak256(address)
holding RLP [nonce, balance, storageRoot, codeHash] records, and a
24-slot contract storage trie keyed by keccak256(slot) holding RLP
zero-stripped words.  Field names and encodings follow the
eth_getProof response format exactly, so a genuinely captured response
is a drop-in replacement.

The block header wraps the state root in this repo's six-field header
encoding (full mainnet header layout is out of scope).

Run:  python tests/fixtures/make_eth_getproof_fixture.py
"""

import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from reference.keccak_ref import keccak256_reference as keccak
from reference.mpt_ref import _rlp, trie_prove, trie_root

OUT = Path(__file__).parent / "eth_getproof_fixture.json"

BLOCK_NUMBER = 19_426_587
TIMESTAMP = 1_710_338_963


def be_min(x: int) -> bytes:
    if x == 0:
        return b""
    return x.to_bytes((x.bit_length() + 7) // 8, "big")


def quantity(x: int) -> str:
    return hex(x)


def main():
    rng = random.Random(0xE7421)

    target_address = rng.randbytes(20)
    target_nonce = 1
    target_balance = 31_337 * 10**13
    code_hash = keccak(rng.randbytes(512))  # stand-in deployed bytecode

    # contract storage: 24 slots, realistic mix of word shapes
    slots = {}
    for i in range(24):
        slot = be_min(i).rjust(32, b"\x00") if i < 8 else rng.randbytes(32)
        if i % 3 == 0:
            value = rng.randrange(1, 2**64)  # counters, balances
        elif i % 3 == 1:
            value = int.from_bytes(rng.randbytes(20), "big")  # addresses
        else:
            value = int.from_bytes(rng.randbytes(32), "big")  # hashes
        slots[slot] = value
    storage_map = {keccak(s): _rlp(be_min(v)) for s, v in slots.items()}
    storage_root = trie_root(storage_map)

    # surrounding world state
    state_map = {}
    for _ in range(64):
        addr = rng.randbytes(20)
        account = [
            be_min(rng.randrange(0, 500)),
            be_min(rng.randrange(0, 100 * 10**18)),
            keccak(_rlp(b"")) if rng.random() < 0.8 else keccak(rng.randbytes(64)),
            keccak(b"") if rng.random() < 0.7 else keccak(rng.randbytes(256)),
        ]
        state_map[keccak(addr)] = _rlp(account)
    target_account = [be_min(target_nonce), be_min(target_balance), storage_root, code_hash]
    state_map[keccak(target_address)] = _rlp(target_account)
    state_root = trie_root(state_map)

    # six-field header wrapping the state root
    parent_hash = keccak(b"fixture-parent")
    transactions_root = keccak(_rlp(b""))
    receipts_root = keccak(_rlp(b""))
    header_preimage = _rlp(
        [
            be_min(BLOCK_NUMBER),
            parent_hash,
            state_root,
            transactions_root,
            receipts_root,
            be_min(TIMESTAMP),
        ]
    )
    block_hash = keccak(header_preimage)

    present_slot = sorted(slots)[3]
    absent_slot = keccak(b"never-written-slot")
    assert absent_slot not in slots

    fixture = {
        "provenance": (
            "Synthesized offline by the independent reference MPT/Keccak oracle in "
            "tests/reference (no public-endpoint route exists in the build environment); "
            "exact eth_getProof wire format over mainnet-shaped data. See this "
            "generator script for the full derivation; regenerate with: "
            "python tests/fixtures/make_eth_getproof_fixture.py"
        ),
        "blockNumber": quantity(BLOCK_NUMBER),
        "blockHash": "0x" + block_hash.hex(),
        "blockHeaderPreimage": "0x" + header_preimage.hex(),
        "stateRoot": "0x" + state_root.hex(),
        "address": "0x" + target_address.hex(),
        "accountProof": ["0x" + n.hex() for n in trie_prove(state_map, keccak(target_address))],
        "balance": quantity(target_balance),
        "codeHash": "0x" + code_hash.hex(),
        "nonce": quantity(target_nonce),
        "storageHash": "0x" + storage_root.hex(),
        "storageProof": [
            {
                "key": "0x" + present_slot.hex(),
                "value": quantity(slots[present_slot]),
                "proof": ["0x" + n.hex() for n in trie_prove(storage_map, keccak(present_slot))],
            },
            {
                "key": "0x" + absent_slot.hex(),
                "value": "0x0",
                "proof": ["0x" + n.hex() for n in trie_prove(storage_map, keccak(absent_slot))],
            },
        ],
    }
    OUT.write_text(json.dumps(fixture, indent=2) + "\n")
    print(f"wrote {OUT}")
    print(f"block hash   {fixture['blockHash']}")
    print(f"state root   {fixture['stateRoot']}")
    print(f"storage root {fixture['storageHash']}")


if __name__ == "__main__":
    main()
