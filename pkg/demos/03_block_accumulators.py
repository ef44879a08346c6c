"""Block-hash accumulators: MMR vs the bidirectional MPT cache.

Run: python demos/03_block_accumulators.py
"""

import dataclasses

from stateproof import blockcache, mmr
from stateproof.chain import SimChain

chain = SimChain()
for _ in range(20):
    chain.apply_block([])

# --- MMR: grow-only, O(log n) state -----------------------------------------------

state, witness = mmr.mmr_init(chain.block_hash(0))
witnesses = [witness]
for n in range(1, 12):
    state, witness = mmr.mmr_append(
        state, chain.block_hash(n), chain.header(n), chain.block_hash(n - 1)
    )
    witnesses.append(witness)

print(f"MMR after 12 appends: {len(state.peaks)} peaks of heights "
      f"{[h for h, _ in state.peaks]} (12 = 0b1100)")
leaves = [chain.block_hash(n) for n in range(12)]
proof = mmr.mmr_prove(state, leaves, 5)
print(f"proof for leaf 5: {len(proof.merkle_path)}-step path inside its peak "
      f"+ the {len(proof.peaks_snapshot)}-peak snapshot")
assert mmr.mmr_verify(mmr.mmr_root(state), leaves[5], proof)
print("verifies against the bagged root")

replay = mmr.mmr_replay_witnesses(witnesses)
print(f"witness-chain replay (the stand-in for a recursive construction proof): ok={replay.ok}")

from stateproof.chain import header_hash

forged = dataclasses.replace(chain.header(12), parent_hash=b"\x66" * 32)
try:
    mmr.mmr_append(state, header_hash(forged), forged, chain.block_hash(11))
except mmr.BrokenLinkage as exc:
    print(f"appending a header with a forged parent hash: BrokenLinkage ({exc})")

# --- MPT cache: grows in BOTH directions --------------------------------------------

cache, _ = blockcache.cache_init(chain.header(10))
for n in range(11, 16):
    cache, _ = blockcache.cache_append(cache, chain.header(n))
for n in range(9, 4, -1):
    cache, _ = blockcache.cache_prepend(cache, chain.header(n))
print(f"\nMPT cache grew to range [{cache.lowest_number}, {cache.highest_number}] "
      "via interleaved appends AND prepends (the MMR cannot prepend)")

proof, wchain = blockcache.cache_prove(cache, 7)
result = blockcache.cache_verify(cache.root(), 7, chain.block_hash(7), proof, wchain)
print(f"inclusion proof for block 7 + full witness replay: ok={result.ok}, "
      f"replayed range [{result.lowest_number}, {result.highest_number}]")

smuggled = list(wchain)
w = next(w for w in smuggled if isinstance(w, blockcache.AppendWitness))
idx = smuggled.index(w)
smuggled[idx] = dataclasses.replace(
    w, appended_header=dataclasses.replace(w.appended_header, parent_hash=b"\x01" * 32)
)
bad = blockcache.cache_verify(cache.root(), 7, chain.block_hash(7), proof, smuggled)
print(f"with one linkage violation smuggled into the chain: ok={bad.ok} "
      f"(fails at step {bad.failed_step}: {bad.reason})")
