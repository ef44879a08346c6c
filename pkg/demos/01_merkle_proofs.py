"""Merkle trees: build, prove, verify, tamper.

Run: python demos/01_merkle_proofs.py
"""

from stateproof.hashing import HashId
from stateproof.merkle import MerkleProof, MerkleTree, verify

K = HashId.KECCAK256

blocks = [f"data block {i}".encode() for i in range(8)]
tree = MerkleTree.build(K, blocks)
print(f"built a Merkle tree over {len(blocks)} blocks")
print(f"root: 0x{tree.root().hex()}")

proof = tree.prove(5)
print(f"\nproof for leaf 5 carries {len(proof.siblings)} siblings (log2(8) = 3):")
for digest, side in proof.siblings:
    print(f"  {side:>5}: 0x{digest.hex()}")

assert verify(tree.root(), tree.leaf_hash(5), proof)
print("\nfolding the leaf hash through the siblings reproduces the root: verified")

# any change to the underlying data changes the root completely
tampered = list(blocks)
tampered[5] = b"data block 5!"
other = MerkleTree.build(K, tampered)
print(f"\nafter flipping one byte of block 5 the root becomes:\n      0x{other.root().hex()}")
assert not verify(other.root(), tree.leaf_hash(5), proof)
print("and the old proof no longer verifies against it")

# odd leaf counts promote the unpaired node instead of duplicating it
tree3 = MerkleTree.build(K, blocks[:3])
print(f"\na 3-leaf tree proves leaf 2 with {len(tree3.prove(2).siblings)} sibling "
      "(the unpaired leaf is promoted upward unchanged)")

print("\nproofs serialize to JSON:")
print(MerkleProof.from_json(proof.to_json()).to_json())
