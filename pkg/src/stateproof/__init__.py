"""stateproof: storage proofs, block-hash accumulators, and a
deterministic simulator of cross-chain state verification."""

from .hashing import HashId, digest, digest_pair, keccak256, mimc_sponge

__all__ = ["HashId", "digest", "digest_pair", "keccak256", "mimc_sponge"]

__version__ = "0.1.0"
