"""Merkle-Patricia tries and hierarchical storage proofs.

Run: python demos/02_mpt_storage_proofs.py
"""

from stateproof import mpt
from stateproof.chain import SimChain, StorageWrite, verify_hierarchical
from stateproof.hashing import HashId, keccak256

K = HashId.KECCAK256

# --- the raw trie ------------------------------------------------------------

trie = mpt.Trie(mpt.NodeStore(), K)
print(f"empty trie root (the canonical constant): 0x{trie.root().hex()}")

trie = trie.insert(b"db", b"a key-value store")
trie = trie.insert(b"do", b"a verb")
print(f"after inserting 'db' and 'do' (shared prefix compresses): 0x{trie.root().hex()}")

snapshot = trie.root()
trie2 = trie.insert(b"dog", b"a pet")
print(f"after 'dog': 0x{trie2.root().hex()}")

# the old snapshot stays alive: tries are persistent
old = mpt.Trie.at_root(trie.store, snapshot, K)
assert old.get(b"dog") is None and trie2.get(b"dog") == b"a pet"
print("the pre-'dog' snapshot is still fully queryable by its root (versioning)")

proof = trie2.prove(b"cat")
assert mpt.verify(trie2.root(), b"cat", proof, K) is None
print(f"exclusion proof for the absent key 'cat': {len(proof.nodes)} node(s), verifies as absent")

# --- the full Header-State-Storage chain --------------------------------------

chain = SimChain()
contract = bytes.fromhex("00112233445566778899aabbccddeeff00112233")
slot = keccak256(b"balances[alice]")
value = (42 * 10**18).to_bytes(32, "big")
chain.apply_block([StorageWrite(contract, slot, value)])

proof = chain.make_storage_proof(1, contract, slot)
block_hash = chain.block_hash(1)
print(f"\nhierarchical proof at block 1 (hash 0x{block_hash.hex()[:16]}..):")
print(f"  account proof: {len(proof.account_proof.nodes)} node(s) under the state root")
print(f"  storage proof: {len(proof.storage_proof.nodes)} node(s) under the account's storage root")

recovered = verify_hierarchical(block_hash, proof)
print(f"  verified value: {int.from_bytes(recovered, 'big') / 10**18} ether")

# proofs pin a specific block: state changes invalidate nothing retroactively
chain.apply_block([StorageWrite(contract, slot, (7 * 10**18).to_bytes(32, "big"))])
assert verify_hierarchical(block_hash, proof) == value
print("after block 2 overwrites the slot, the block-1 proof still verifies against block 1")
