"""Acceptance suite: one test per criterion, one pass/fail line each.

Runtime bounds are asserted with a monotonic clock inside the relevant
tests.  Run with plain ``pytest``; the criterion lines print through the
capture so they are visible either way.
"""

import contextlib
import dataclasses
import itertools
import json
import math
import random
import time
from pathlib import Path

import pytest

from reference.keccak_ref import keccak256_reference
from reference.mpt_ref import trie_root as oracle_trie_root
from stateproof import blockcache, mmr, mpt
from stateproof.chain import BlockhashMode, SimChain, StorageWrite, header_hash
from stateproof.cli import main as cli_main
from stateproof.hashing import HashId, bench_hashes, digest, keccak256
from stateproof.merkle import MerkleTree, verify as merkle_verify
from stateproof.sim import (
    FinalityStatus,
    NetworkConfig,
    SimWorld,
    check_l2_on_l1,
    prepare_l2_on_l1,
    run_scenario,
)

K = HashId.KECCAK256
ROOT = Path(__file__).parents[1]
FIXTURE = Path(__file__).parent / "fixtures" / "eth_getproof_fixture.json"

keccak256(b"warmup")  # JIT warm-up stays out of the timing windows


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def _criterion(number, description):
        try:
            yield
        except BaseException:
            with capsys.disabled():
                print(f"[FAIL] criterion {number}: {description}")
            raise
        with capsys.disabled():
            print(f"[PASS] criterion {number}: {description}")

    return _criterion


def unhex(s):
    return bytes.fromhex(s[2:] if s.startswith("0x") else s)


def test_criterion_1_merkle_proof_size_law(criterion):
    with criterion(1, "Merkle proof size law + 10,000 random round-trips in < 5 s"):
        t0 = time.perf_counter()
        rng = random.Random(101)
        for exp in range(0, 11):  # n in {1, 2, 4, ..., 1024}
            n = 1 << exp
            tree = MerkleTree.build(K, [rng.randbytes(8) for _ in range(n)])
            for i in range(n):
                assert len(tree.prove(i).siblings) == exp
        trees = [
            MerkleTree.build(K, [rng.randbytes(12) for _ in range(rng.randint(1, 600))])
            for _ in range(12)
        ]
        for _ in range(10_000):
            tree = rng.choice(trees)
            i = rng.randrange(tree.leaf_count)
            proof = tree.prove(i)
            assert merkle_verify(tree.root(), tree.leaf_hash(i), proof)
            if tree.leaf_count > 1:
                assert len(proof.siblings) <= math.ceil(math.log2(tree.leaf_count))
        elapsed = time.perf_counter() - t0
        assert elapsed < 5.0, f"took {elapsed:.2f}s"


def test_criterion_2_ethereum_bit_compatibility(criterion):
    with criterion(2, "committed eth_getProof fixture verifies bit-exactly; tampers rejected; < 1 s"):
        t0 = time.perf_counter()
        fx = json.loads(FIXTURE.read_text())
        state_root = unhex(fx["stateRoot"])
        address = unhex(fx["address"])
        account_nodes = tuple(unhex(n) for n in fx["accountProof"])

        account_rlp = mpt.verify(state_root, keccak256(address), mpt.MptProof(nodes=account_nodes), K)
        from stateproof.chain import HierarchicalProof, decode_account, verify_hierarchical

        account = decode_account(account_rlp)
        assert account.balance == int(fx["balance"], 16)
        assert account.nonce == int(fx["nonce"], 16)
        assert account.storage_root == unhex(fx["storageHash"])
        assert account.code_hash == unhex(fx["codeHash"])

        for entry in fx["storageProof"]:
            nodes = tuple(unhex(n) for n in entry["proof"])
            got = mpt.verify(account.storage_root, keccak256(unhex(entry["key"])), mpt.MptProof(nodes=nodes), K)
            expected = int(entry["value"], 16)
            if expected == 0:
                assert got is None
            else:
                from stateproof import rlp as rlp_mod

                assert rlp_mod.decode_int(rlp_mod.decode(got)) == expected

        slot_entry = fx["storageProof"][0]
        hier = HierarchicalProof(
            header_preimage=unhex(fx["blockHeaderPreimage"]),
            address=address,
            slot_key=unhex(slot_entry["key"]),
            account_proof=mpt.MptProof(nodes=account_nodes),
            storage_proof=mpt.MptProof(nodes=tuple(unhex(n) for n in slot_entry["proof"])),
        )
        value = verify_hierarchical(unhex(fx["blockHash"]), hier)
        assert int.from_bytes(value, "big") == int(slot_entry["value"], 16)

        # single-byte tamper in every node of both proofs is rejected
        for which, nodes in (("account", account_nodes), ("storage", hier.storage_proof.nodes)):
            for i, node in enumerate(nodes):
                raw = bytearray(node)
                raw[len(raw) // 2] ^= 0x01
                mutated = list(nodes)
                mutated[i] = bytes(raw)
                bad = dataclasses.replace(
                    hier, **{f"{which}_proof": mpt.MptProof(nodes=tuple(mutated))}
                )
                with pytest.raises(Exception):
                    got = verify_hierarchical(unhex(fx["blockHash"]), bad)
                    assert got == value and False, "tamper accepted"
        elapsed = time.perf_counter() - t0
        assert elapsed < 1.0, f"took {elapsed:.2f}s"


def test_criterion_3_empty_trie_root_and_small_instance_oracle(criterion):
    with criterion(3, "empty-trie root constant; exhaustive small tries match the independent oracle"):
        assert mpt.empty_root(K).hex() == (
            "56e81f171bcc55a6ff8345e692c0f86e5b48e01b996cadc001622fb5e363b421"
        )
        alphabet = [0x00, 0x01, 0xAB]
        universe = [bytes([a]) for a in alphabet] + [
            bytes([a, b]) for a in alphabet for b in alphabet
        ]
        for size in (1, 2):
            for combo in itertools.combinations(universe, size):
                mapping = {k: bytes([i + 1]) for i, k in enumerate(combo)}
                expected = oracle_trie_root(mapping)
                for perm in itertools.permutations(combo):
                    trie = mpt.Trie(mpt.NodeStore(), K)
                    for key in perm:
                        trie = trie.insert(key, mapping[key])
                    assert trie.root() == expected
        rng = random.Random(103)
        extended = universe + [bytes([a, b, c]) for a in alphabet for b in alphabet for c in alphabet]
        for _ in range(50):
            combo = rng.sample(extended, 6)
            mapping = {k: rng.randbytes(rng.randint(1, 8)) for k in combo}
            expected = oracle_trie_root(mapping)
            for _ in range(6):
                rng.shuffle(combo)
                trie = mpt.Trie(mpt.NodeStore(), K)
                for key in combo:
                    trie = trie.insert(key, mapping[key])
                assert trie.root() == expected


def test_criterion_4_mmr_structure_law(criterion):
    with criterion(4, "MMR peak laws (11 -> heights 3,1,0; popcount to 256) + all-leaf round-trips to 64 in < 10 s"):
        t0 = time.perf_counter()
        chain = SimChain()
        for _ in range(260):
            chain.apply_block([])
        state, _ = mmr.mmr_init(chain.block_hash(0))
        leaves = [chain.block_hash(0)]
        for n in range(1, 257):
            if n == 11:
                assert [h for h, _ in state.peaks] == [3, 1, 0]
            assert len(state.peaks) == bin(n).count("1")
            if n <= 64:
                root = mmr.mmr_root(state)
                for idx in range(n):
                    proof = mmr.mmr_prove(state, leaves, idx)
                    assert mmr.mmr_verify(root, leaves[idx], proof)
            state, _ = mmr.mmr_append(
                state, chain.block_hash(n), chain.header(n), chain.block_hash(n - 1)
            )
            leaves.append(chain.block_hash(n))
        assert len(state.peaks) == bin(257).count("1")
        elapsed = time.perf_counter() - t0
        assert elapsed < 10.0, f"took {elapsed:.2f}s"


def test_criterion_5_eq1_eq2_enforcement(criterion):
    with criterion(5, "append/prepend conjunct mutations each rejected with the intended error"):
        chain = SimChain()
        for _ in range(14):
            chain.apply_block([])
        cache, _ = blockcache.cache_init(chain.header(5))
        for n in range(6, 10):
            cache, _ = blockcache.cache_append(cache, chain.header(n))
        for n in range(4, 0, -1):
            cache, _ = blockcache.cache_prepend(cache, chain.header(n))
        assert (cache.lowest_number, cache.highest_number) == (1, 10 - 1)

        # honest chain: zero false rejects
        assert blockcache.replay_witnesses(cache.witnesses).ok

        # live append mutations
        honest_append = chain.header(10)
        with pytest.raises(blockcache.LinkageViolation):
            blockcache.cache_append(
                cache, dataclasses.replace(honest_append, parent_hash=b"\x01" * 32)
            )
        with pytest.raises(blockcache.NumberGap):
            blockcache.cache_append(cache, dataclasses.replace(honest_append, number=11))
        # live prepend mutations
        honest_prepend = chain.header(0)
        with pytest.raises(blockcache.LinkageViolation):
            blockcache.cache_prepend(
                cache, dataclasses.replace(honest_prepend, timestamp=999)
            )
        with pytest.raises(blockcache.NumberGap):
            blockcache.cache_prepend(cache, dataclasses.replace(honest_prepend, number=2))
        # and the honest operations still pass: zero false rejects
        blockcache.cache_append(cache, honest_append)
        blockcache.cache_prepend(cache, honest_prepend)

        # stored-hash conjunct: smuggle a header whose hash differs from
        # what the trie recorded -- replay must fail at that step
        for i, w in enumerate(cache.witnesses):
            if isinstance(w, blockcache.AppendWitness):
                smuggled = dataclasses.replace(
                    w, appended_header=dataclasses.replace(w.appended_header, state_root=b"\x07" * 32)
                )
            elif isinstance(w, blockcache.PrependWitness):
                smuggled = dataclasses.replace(
                    w, prepended_header=dataclasses.replace(w.prepended_header, state_root=b"\x07" * 32)
                )
            else:
                smuggled = dataclasses.replace(
                    w, header=dataclasses.replace(w.header, state_root=b"\x07" * 32)
                )
            mutated = list(cache.witnesses)
            mutated[i] = smuggled
            result = blockcache.replay_witnesses(mutated)
            assert not result.ok and result.failed_step is not None


def test_criterion_6_blockhash_window_boundaries(criterion):
    with criterion(6, "blockhash windows: 256/257 and 8192/8193 exact boundaries"):
        chain = SimChain()
        for _ in range(1001):
            chain.apply_block([])
        assert chain.blockhash_lookup(1000, 744) == chain.block_hash(744)
        assert chain.blockhash_lookup(1000, 743) is None

        ring = SimChain(blockhash_mode=BlockhashMode.EIP2935_RING8192)
        for _ in range(8300):
            ring.apply_block([])
        assert ring.blockhash_lookup(8293, 101) == ring.block_hash(101)  # distance 8192
        assert ring.blockhash_lookup(8294, 101) is None  # distance 8193


def test_criterion_7_finality_timeline(criterion):
    with criterion(7, "finality: weak within [1800, 3600], objective at +604800 exactly, L1 at +780 exactly"):
        configs = [
            NetworkConfig(chain_id="l1", layer="L1", block_time_seconds=12,
                          l1_finality_delay_seconds=780),
            NetworkConfig(chain_id="l2", layer="L2", block_time_seconds=2,
                          parent_chain_id="l1", state_update_interval_seconds=1800,
                          challenge_period_seconds=604_800,
                          bridge_push_interval_seconds=600),
        ]
        world = SimWorld(configs)
        world.advance(1812)
        update = next(r for r in world.state_update_log if r.l2_chain_id == "l2")
        block = 1  # born at t=2

        weak_start = update.time
        assert 1800 <= weak_start <= 3600
        assert world.finality_of("l2", block, weak_start - 1) == FinalityStatus.NONE
        assert world.finality_of("l2", block, weak_start) == FinalityStatus.WEAK
        assert world.finality_of("l2", block, weak_start + 604_800 - 1) == FinalityStatus.WEAK
        assert world.finality_of("l2", block, weak_start + 604_800) == FinalityStatus.OBJECTIVE

        l1_header = world.runtimes["l1"].chain.header(10)
        assert world.finality_of("l1", 10, l1_header.timestamp + 779) == FinalityStatus.NONE
        assert world.finality_of("l1", 10, l1_header.timestamp + 780) == FinalityStatus.OBJECTIVE


def test_criterion_8_flow_soundness_golden_scenarios(criterion, tmp_path):
    with criterion(8, "3 bundled scenarios byte-identical on 2 runs vs goldens; evidence corruption flips one step; < 30 s"):
        t0 = time.perf_counter()
        golden = Path(__file__).parent / "golden"
        for name in ("l2_to_l1_weak", "l1_to_l2_too_new", "l2_to_l2_composed"):
            outputs = []
            for run_idx in (1, 2):
                report = tmp_path / f"{name}.{run_idx}.json"
                log = tmp_path / f"{name}.{run_idx}.log"
                code = cli_main([
                    "sim", "run", "--scenario", str(ROOT / "scenarios" / f"{name}.json"),
                    "--report", str(report), "--log", str(log),
                ])
                assert code == 0
                outputs.append((report.read_bytes(), log.read_bytes()))
            assert outputs[0] == outputs[1], f"{name}: runs differ"
            assert outputs[0][0] == (golden / f"{name}.report.json").read_bytes()
            assert outputs[0][1] == (golden / f"{name}.events.log").read_bytes()

        # corrupting any single evidence artifact flips exactly its step
        scenario = json.loads((ROOT / "scenarios" / "l2_to_l1_weak.json").read_text())
        world, reports = run_scenario(scenario)
        assert reports[0].accepted
        req = scenario["requests"][0]
        address, slot = unhex(req["address"]), unhex(req["slot"])
        corruptions = {
            "storage_proof_at_l2_proof_block": lambda ev: dataclasses.replace(
                ev, l2_proof_block_hash=b"\x00" * 32
            ),
            "l2_block_inclusion": lambda ev: dataclasses.replace(
                ev, l2_inclusion=dataclasses.replace(ev.l2_inclusion, root=b"\x01" * 32)
            ),
            "rollup_slot_storage_proof": lambda ev: dataclasses.replace(
                ev,
                rollup_storage_proof=dataclasses.replace(
                    ev.rollup_storage_proof,
                    header_preimage=ev.rollup_storage_proof.header_preimage + b"\x00",
                ),
            ),
            "l1_block_inclusion": lambda ev: dataclasses.replace(
                ev,
                l1_inclusion=dataclasses.replace(
                    ev.l1_inclusion, witnesses=ev.l1_inclusion.witnesses[:-1]
                ),
            ),
        }
        for step_name, corrupt in corruptions.items():
            evidence = prepare_l2_on_l1(world, req["l2_chain"], req["l2_proof_block"], address, slot)
            report = check_l2_on_l1(world, corrupt(evidence), FinalityStatus.WEAK)
            assert not report.accepted
            failed = [s.name for s in report.steps if not s.passed]
            assert failed == [step_name], (step_name, failed)
        elapsed = time.perf_counter() - t0
        assert elapsed < 30.0, f"took {elapsed:.2f}s"


def test_criterion_9_accumulator_equivalence(criterion):
    with criterion(9, "mmr and mpt cache accept exactly the same inclusion claims over a 32-block chain"):
        chain = SimChain()
        for _ in range(31):
            chain.apply_block([])

        cache, _ = blockcache.cache_init(chain.header(0))
        state, witness = mmr.mmr_init(chain.block_hash(0))
        mmr_witnesses = [witness]
        leaves = [chain.block_hash(0)]
        for n in range(1, 32):
            cache, _ = blockcache.cache_append(cache, chain.header(n))
            state, witness = mmr.mmr_append(
                state, chain.block_hash(n), chain.header(n), chain.block_hash(n - 1)
            )
            mmr_witnesses.append(witness)
            leaves.append(chain.block_hash(n))

        cache_root = cache.root()
        mmr_root_digest = mmr.mmr_root(state)
        for n in range(32):
            for claimed, expect in (
                (chain.block_hash(n), True),
                (keccak256(b"forged" + bytes([n])), False),
            ):
                proof, witnesses = blockcache.cache_prove(cache, n)
                mpt_accepts = bool(
                    blockcache.cache_verify(cache_root, n, claimed, proof, witnesses)
                )
                mmr_proof = mmr.mmr_prove(state, leaves, n)
                mmr_accepts = (
                    mmr.mmr_verify(mmr_root_digest, claimed, mmr_proof)
                    and mmr.mmr_replay_witnesses(mmr_witnesses).ok
                    and mmr_witnesses[-1].new_root == mmr_root_digest
                )
                assert mpt_accepts == mmr_accepts == expect, (n, expect)


def test_criterion_10_bench_csv_and_keccak_vectors(criterion):
    with criterion(10, "bench CSV well-formed for {keccak, mimc} x {32 B, 4 KiB}; >= 10 keccak vectors match the oracle"):
        report = bench_hashes([HashId.KECCAK256, HashId.MIMC_SPONGE], [32, 4096], 50)
        csv = report.to_csv()
        lines = csv.strip().split("\n")
        assert lines[0] == "hash,input_size,iterations,total_ns,throughput_bps,last_digest_hex"
        assert len(lines) == 5
        for line in lines[1:]:
            hash_name, size, iters, total_ns, bps, last_hex = line.split(",")
            assert hash_name in ("keccak256", "mimc_sponge")
            assert int(size) in (32, 4096)
            assert int(iters) == 50
            assert int(total_ns) > 0
            assert float(bps) > 0
            assert last_hex.startswith("0x") and len(last_hex) == 66

        vectors = [
            b"", b"\x00", b"a", b"abc", bytes(range(32)),
            b"q" * 135, b"q" * 136, b"q" * 137, b"q" * 272,
            bytes(1024), bytes([0xAB]) * 1024,
        ]
        assert len(vectors) >= 10
        for v in vectors:
            assert keccak256(v) == keccak256_reference(v)
