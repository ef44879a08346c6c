"""Pluggable 32-byte hash primitives and a native-throughput benchmark.

Two algorithms are exposed behind one interface:

* ``keccak256`` -- the original Keccak-256 sponge (pre-NIST padding, pad
  byte ``0x01``) as used by Ethereum.  The permutation is JIT-compiled
  with numba so it is fast enough to back the trie and accumulator
  modules directly.
* ``mimc_sponge`` -- a MiMC-based hash over the BN254 scalar field
  (exponent 7, 91 rounds).  Round constants are derived by iterating
  keccak256 over the ASCII seed ``stateproof-mimc-bn254``; see README
  for the full derivation so the parameterization is reproducible.

The benchmark harness measures native wall-clock throughput only.  It
deliberately does NOT model arithmetization cost inside a ZK circuit,
which is a different axis entirely; the numbers here answer "how fast
is this hash on a CPU", nothing more.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numba import njit, uint64

__all__ = [
    "HashId",
    "BenchReport",
    "BenchRow",
    "keccak256",
    "mimc_sponge",
    "digest",
    "digest_pair",
    "bench_hashes",
    "MIMC_PRIME",
    "MIMC_ROUNDS",
    "MIMC_EXPONENT",
    "MIMC_SEED",
]


class HashId(str, Enum):
    """Identifier selecting the hash behind every digest operation."""

    KECCAK256 = "keccak256"
    MIMC_SPONGE = "mimc_sponge"

    def __str__(self) -> str:
        return self.value


DIGEST_SIZE = 32

# ---------------------------------------------------------------------------
# Keccak-256 (Ethereum variant: multi-rate padding byte 0x01, rate 1088 bits)
# ---------------------------------------------------------------------------

_KECCAK_RATE = 136

_ROTC = np.array(
    [1, 3, 6, 10, 15, 21, 28, 36, 45, 55, 2, 14, 27, 41, 56, 8, 25, 43, 62, 18, 39, 61, 20, 44],
    dtype=np.uint64,
)
_PILN = np.array(
    [10, 7, 11, 17, 18, 3, 5, 16, 8, 21, 24, 4, 15, 23, 19, 13, 12, 2, 20, 14, 22, 9, 6, 1],
    dtype=np.int64,
)
_RC = np.array(
    [
        0x0000000000000001, 0x0000000000008082, 0x800000000000808A, 0x8000000080008000,
        0x000000000000808B, 0x0000000080000001, 0x8000000080008081, 0x8000000000008009,
        0x000000000000008A, 0x0000000000000088, 0x0000000080008009, 0x000000008000000A,
        0x000000008000808B, 0x800000000000008B, 0x8000000000008089, 0x8000000000008003,
        0x8000000000008002, 0x8000000000000080, 0x000000000000800A, 0x800000008000000A,
        0x8000000080008081, 0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
    ],
    dtype=np.uint64,
)


@njit(cache=True)
def _keccak_f1600(st):
    bc = np.empty(5, dtype=np.uint64)
    for rnd in range(24):
        # theta
        for i in range(5):
            bc[i] = st[i] ^ st[i + 5] ^ st[i + 10] ^ st[i + 15] ^ st[i + 20]
        for i in range(5):
            t = bc[(i + 4) % 5] ^ ((bc[(i + 1) % 5] << uint64(1)) | (bc[(i + 1) % 5] >> uint64(63)))
            for j in range(0, 25, 5):
                st[j + i] ^= t
        # rho + pi
        t = st[1]
        for i in range(24):
            j = _PILN[i]
            tmp = st[j]
            r = _ROTC[i]
            st[j] = (t << r) | (t >> (uint64(64) - r))
            t = tmp
        # chi
        for j in range(0, 25, 5):
            for i in range(5):
                bc[i] = st[j + i]
            for i in range(5):
                st[j + i] = bc[i] ^ ((~bc[(i + 1) % 5]) & bc[(i + 2) % 5])
        # iota
        st[0] ^= _RC[rnd]


def keccak256(data: bytes) -> bytes:
    """Keccak-256 of ``data``, bit-exact with Ethereum's hash function."""
    st = np.zeros(25, dtype=np.uint64)
    padded = bytearray(data)
    padded += b"\x00" * (_KECCAK_RATE - (len(data) % _KECCAK_RATE))
    padded[len(data)] ^= 0x01
    padded[-1] ^= 0x80
    lanes = np.frombuffer(bytes(padded), dtype=np.uint64)
    words = _KECCAK_RATE // 8
    for b in range(len(padded) // _KECCAK_RATE):
        st[:words] ^= lanes[b * words : (b + 1) * words]
        _keccak_f1600(st)
    return st.tobytes()[:32]


# ---------------------------------------------------------------------------
# MiMC sponge over the BN254 scalar field
# ---------------------------------------------------------------------------

MIMC_PRIME = 21888242871839275222246405745257275088548364400416034343698204186575808495617
MIMC_ROUNDS = 91
MIMC_EXPONENT = 7
MIMC_SEED = b"stateproof-mimc-bn254"

_MIMC_CHUNK = 31  # 31-byte chunks always fit below the 254-bit modulus


def _mimc_constants() -> tuple[int, ...]:
    # c_0 = 0; c_i = keccak256^i(seed) mod p for i = 1 .. rounds-1
    cts = [0]
    s = keccak256(MIMC_SEED)
    for _ in range(MIMC_ROUNDS - 1):
        cts.append(int.from_bytes(s, "big") % MIMC_PRIME)
        s = keccak256(s)
    return tuple(cts)


_MIMC_CTS: tuple[int, ...] | None = None


def _mimc_permute(x: int, k: int) -> int:
    global _MIMC_CTS
    if _MIMC_CTS is None:
        _MIMC_CTS = _mimc_constants()
    for c in _MIMC_CTS:
        x = pow((x + k + c) % MIMC_PRIME, MIMC_EXPONENT, MIMC_PRIME)
    return (x + k) % MIMC_PRIME


def _mimc_absorb(state: int, x: int) -> int:
    # Miyaguchi-Preneel step: state' = state + x + E_state(x)
    return (state + x + _mimc_permute(x, state)) % MIMC_PRIME


def mimc_sponge(data: bytes) -> bytes:
    """MiMC hash of a byte string.

    The input is split into 31-byte chunks interpreted as big-endian
    field elements and absorbed sequentially; a final chunk equal to the
    input length in bytes closes the sponge, so distinct-length inputs
    (including the empty string) can never collide trivially.
    """
    state = 0
    for i in range(0, len(data), _MIMC_CHUNK):
        state = _mimc_absorb(state, int.from_bytes(data[i : i + _MIMC_CHUNK], "big"))
    state = _mimc_absorb(state, len(data))
    return state.to_bytes(32, "big")


# ---------------------------------------------------------------------------
# Uniform digest interface
# ---------------------------------------------------------------------------

_BACKENDS = {
    HashId.KECCAK256: keccak256,
    HashId.MIMC_SPONGE: mimc_sponge,
}


def digest(hash_id: HashId, data: bytes) -> bytes:
    """32-byte digest of ``data`` under the selected algorithm."""
    return _BACKENDS[HashId(hash_id)](bytes(data))


def digest_pair(hash_id: HashId, left: bytes, right: bytes) -> bytes:
    """Digest of the concatenation ``left || right`` (order-sensitive)."""
    if len(left) != DIGEST_SIZE or len(right) != DIGEST_SIZE:
        raise ValueError("digest_pair operands must be 32-byte digests")
    return digest(hash_id, left + right)


# ---------------------------------------------------------------------------
# Benchmark harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchRow:
    hash_id: HashId
    input_size_bytes: int
    iterations: int
    total_nanoseconds: int
    throughput_bytes_per_second: float
    last_digest: bytes


@dataclass(frozen=True)
class BenchReport:
    rows: tuple[BenchRow, ...]

    CSV_HEADER = "hash,input_size,iterations,total_ns,throughput_bps,last_digest_hex"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.hash_id},{r.input_size_bytes},{r.iterations},"
                f"{r.total_nanoseconds},{r.throughput_bytes_per_second:.3f},"
                f"0x{r.last_digest.hex()}"
            )
        return "\n".join(lines) + "\n"


def bench_input(seed: int, size: int) -> bytes:
    """Deterministic pseudo-random input used for one benchmark row."""
    return random.Random(seed).randbytes(size)


def bench_hashes(
    hash_ids: list[HashId],
    input_sizes: list[int],
    iterations: int,
    seed: int = 42,
    runs: int = 3,
) -> BenchReport:
    """Time every (hash, size) pair over seeded pseudo-random input.

    Each row is timed ``runs`` times on a monotonic clock and the median
    elapsed time is reported, which keeps the numbers stable at desk
    scale.  The last digest column makes the run reproducible: it only
    depends on the seed, never on timing.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if any(s < 0 for s in input_sizes):
        raise ValueError("input sizes must be >= 0")
    runs = max(runs, 3)
    rows = []
    for hid in hash_ids:
        hid = HashId(hid)
        fn = _BACKENDS[hid]
        for size in input_sizes:
            data = bench_input(seed, size)
            elapsed = []
            last = b""
            for _ in range(runs):
                t0 = time.perf_counter_ns()
                for _ in range(iterations):
                    last = fn(data)
                elapsed.append(max(time.perf_counter_ns() - t0, 1))
            total_ns = sorted(elapsed)[len(elapsed) // 2]
            throughput = size * iterations / (total_ns / 1e9)
            rows.append(
                BenchRow(
                    hash_id=hid,
                    input_size_bytes=size,
                    iterations=iterations,
                    total_nanoseconds=total_ns,
                    throughput_bytes_per_second=throughput,
                    last_digest=last,
                )
            )
    return BenchReport(rows=tuple(rows))
