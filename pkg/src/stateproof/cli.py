"""Command-line entry point.

Subcommands: ``chain gen``, ``chain blockhash``, ``proof make``,
``proof verify``, ``acc {mmr|mpt} {init|append|prepend|prove|verify}``,
``sim run``, ``bench``.

Exit codes: 0 accept, 1 domain rejection (failed verification, broken
linkage), 2 usage or input parse error.  All randomness flows from an
explicit ``--seed`` and no wall-clock value ever enters an output file,
so identical invocations produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys

from . import blockcache, mmr, mpt
from .chain import (
    AccountWrite,
    BlockhashMode,
    BlockHeader,
    HierarchicalProof,
    InvalidProof,
    SimChain,
    StorageWrite,
    header_hash,
    verify_hierarchical,
)
from .hashing import HashId, bench_hashes
from .sim import run_scenario

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_USAGE = 2


def _default_hash() -> str:
    return os.environ.get("STATEPROOF_HASH", "keccak256")


def _hex(b: bytes) -> str:
    return "0x" + b.hex()


def _unhex(text: str, width: int | None = None) -> bytes:
    raw = bytes.fromhex(text[2:] if text.startswith("0x") else text)
    if width is not None and len(raw) != width:
        raise ValueError(f"expected {width} bytes, got {len(raw)}")
    return raw


def _read_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# --- chain fixtures -------------------------------------------------------------


def _generate_fixture(blocks: int, accounts: int, seed: int, block_time: int, hash_id: HashId) -> dict:
    rng = random.Random(seed)
    addresses = [rng.randbytes(20) for _ in range(accounts)]
    chain = SimChain(hash_id=hash_id, block_time=block_time)
    fixture_blocks = []
    for _ in range(blocks):
        writes = []
        balances = []
        for _ in range(rng.randint(1, 3)):
            addr = rng.choice(addresses)
            if rng.random() < 0.75:
                writes.append(
                    {
                        "address": _hex(addr),
                        "slot": _hex(rng.randbytes(32)),
                        "value": _hex(rng.randbytes(32)),
                    }
                )
            else:
                balances.append({"address": _hex(addr), "balance": rng.randrange(10**18)})
        changes = [
            StorageWrite(_unhex(w["address"]), _unhex(w["slot"]), _unhex(w["value"]))
            for w in writes
        ] + [AccountWrite(_unhex(b["address"]), balance=b["balance"]) for b in balances]
        header = chain.apply_block(changes)
        fixture_blocks.append(
            {
                "number": header.number,
                "timestamp": header.timestamp,
                "writes": writes,
                "balances": balances,
            }
        )
    return {
        "hash": str(hash_id),
        "block_time": block_time,
        "genesis_time": 0,
        "seed": seed,
        "accounts": [_hex(a) for a in addresses],
        "blocks": fixture_blocks,
        "headers": [h.to_json_obj() for h in chain.headers],
    }


def load_fixture_headers(fixture: dict) -> list[BlockHeader]:
    """Headers exactly as recorded; linkage is NOT validated here, the
    accumulators enforce it themselves."""
    return [BlockHeader.from_json_obj(h) for h in fixture["headers"]]


def load_fixture_chain(fixture: dict) -> SimChain:
    """Rebuild the chain state from the change log and cross-check the
    recorded headers."""
    hash_id = HashId(fixture["hash"])
    chain = SimChain(
        hash_id=hash_id,
        block_time=fixture["block_time"],
        genesis_time=fixture.get("genesis_time", 0),
    )
    for block in fixture["blocks"]:
        changes = [
            StorageWrite(_unhex(w["address"]), _unhex(w["slot"]), _unhex(w["value"]))
            for w in block["writes"]
        ] + [
            AccountWrite(_unhex(b["address"]), balance=b["balance"])
            for b in block.get("balances", [])
        ]
        chain.apply_block(changes, timestamp=block["timestamp"])
    recorded = load_fixture_headers(fixture)
    if chain.headers != recorded:
        raise ValueError("fixture headers do not match the replayed change log")
    return chain


# --- subcommand bodies -------------------------------------------------------------


def _cmd_chain_gen(args) -> int:
    fixture = _generate_fixture(
        blocks=args.blocks,
        accounts=args.accounts,
        seed=args.seed,
        block_time=args.block_time,
        hash_id=HashId(args.hash),
    )
    _write_text(args.out, json.dumps(fixture, indent=2) + "\n")
    final = BlockHeader.from_json_obj(fixture["headers"][-1])
    print(f"final header hash: {_hex(header_hash(final, HashId(args.hash)))}", file=sys.stderr)
    return EXIT_OK


def _cmd_chain_blockhash(args) -> int:
    fixture = _read_json(args.fixture)
    chain = load_fixture_chain(fixture)
    chain.blockhash_mode = BlockhashMode(args.mode)
    result = chain.blockhash_lookup(args.current, args.target)
    if result is None:
        print("unavailable")
        return EXIT_REJECTED
    print(_hex(result))
    return EXIT_OK


def _cmd_proof_make(args) -> int:
    chain = load_fixture_chain(_read_json(args.fixture))
    proof = chain.make_storage_proof(args.block, _unhex(args.address, 20), _unhex(args.slot, 32))
    obj = proof.to_json_obj()
    obj["blockHash"] = _hex(chain.block_hash(args.block))
    _write_text(args.out, json.dumps(obj, indent=2) + "\n")
    return EXIT_OK


def _cmd_proof_verify(args) -> int:
    obj = _read_json(args.proof)
    proof = HierarchicalProof.from_json_obj(obj)
    block_hash = _unhex(args.block_hash or obj.get("blockHash"), 32)
    try:
        value = verify_hierarchical(block_hash, proof)
    except InvalidProof as exc:
        print(f"rejected at layer={exc.layer}: {exc.reason}")
        return EXIT_REJECTED
    print("absent" if value is None else _hex(value))
    return EXIT_OK


def _load_cache_state(path: str):
    obj = _read_json(path)
    if obj.get("kind") != "mpt":
        raise ValueError("state file is not an mpt accumulator")
    hash_id = HashId(obj["hash_id"])
    witnesses = [blockcache.witness_from_json_obj(w) for w in obj["witnesses"]]
    return blockcache.rebuild_from_witnesses(witnesses, hash_id), hash_id


def _save_cache_state(path: str, cache, hash_id: HashId) -> None:
    obj = {
        "kind": "mpt",
        "hash_id": str(hash_id),
        "witnesses": [blockcache.witness_to_json_obj(w) for w in cache.witnesses],
    }
    _write_text(path, json.dumps(obj, indent=2) + "\n")


def _cmd_acc_mpt(args) -> int:
    if args.action == "init":
        headers = load_fixture_headers(_read_json(args.fixture))
        hash_id = HashId(_read_json(args.fixture)["hash"])
        if not 0 <= args.start < len(headers):
            print(f"fixture has no block {args.start}", file=sys.stderr)
            return EXIT_USAGE
        cache, _ = blockcache.cache_init(headers[args.start], hash_id)
        _save_cache_state(args.state, cache, hash_id)
        print(f"initialized at block {args.start}, root {_hex(cache.root())}")
        return EXIT_OK
    if args.action in ("append", "prepend"):
        cache, hash_id = _load_cache_state(args.state)
        headers = load_fixture_headers(_read_json(args.fixture))
        number = cache.highest_number + 1 if args.action == "append" else cache.lowest_number - 1
        if not 0 <= number < len(headers):
            print(f"fixture has no block {number}", file=sys.stderr)
            return EXIT_REJECTED
        try:
            if args.action == "append":
                cache, _ = blockcache.cache_append(cache, headers[number])
            else:
                cache, _ = blockcache.cache_prepend(cache, headers[number])
        except (blockcache.LinkageViolation, blockcache.NumberGap) as exc:
            print(f"rejected: {exc}", file=sys.stderr)
            return EXIT_REJECTED
        _save_cache_state(args.state, cache, hash_id)
        print(f"{args.action}ed block {number}, range [{cache.lowest_number}, {cache.highest_number}], root {_hex(cache.root())}")
        return EXIT_OK
    if args.action == "prove":
        cache, hash_id = _load_cache_state(args.state)
        try:
            proof, witnesses = blockcache.cache_prove(cache, args.number)
        except blockcache.OutOfRange as exc:
            print(f"rejected: {exc}", file=sys.stderr)
            return EXIT_REJECTED
        bundle = {
            "kind": "mpt",
            "hash_id": str(hash_id),
            "root": _hex(cache.root()),
            "number": args.number,
            "hash": _hex(cache.stored_hash(args.number)),
            "mpt_proof": proof.to_json_obj(cache.root(), blockcache.number_key(args.number)),
            "witnesses": [blockcache.witness_to_json_obj(w) for w in witnesses],
        }
        _write_text(args.out, json.dumps(bundle, indent=2) + "\n")
        return EXIT_OK
    # verify
    bundle = _read_json(args.bundle)
    hash_id = HashId(bundle["hash_id"])
    _, _, proof = mpt.MptProof.from_json_obj(bundle["mpt_proof"])
    witnesses = [blockcache.witness_from_json_obj(w) for w in bundle["witnesses"]]
    result = blockcache.cache_verify(
        _unhex(bundle["root"], 32),
        bundle["number"],
        _unhex(bundle["hash"], 32),
        proof,
        witnesses,
        hash_id,
    )
    if not result.ok:
        print(f"rejected at step {result.failed_step}: {result.reason}")
        return EXIT_REJECTED
    print(f"verified: block {bundle['number']} -> {bundle['hash']}")
    return EXIT_OK


def _load_mmr_state(path: str):
    obj = _read_json(path)
    if obj.get("kind") != "mmr":
        raise ValueError("state file is not an mmr accumulator")
    hash_id = HashId(obj["hash_id"])
    witnesses = [mmr.ConstructionWitness.from_json_obj(w) for w in obj["witnesses"]]
    replay = mmr.mmr_replay_witnesses(witnesses, hash_id)
    if not replay.ok:
        raise ValueError(f"mmr state does not replay at step {replay.failed_step}: {replay.reason}")
    leaves = [w.appended_leaf for w in witnesses]
    state = mmr.MmrState(
        leaf_count=len(leaves),
        peaks=mmr.peaks_from_leaves(hash_id, leaves),
        hash_id=hash_id,
    )
    return state, witnesses, leaves, hash_id


def _save_mmr_state(path: str, witnesses, hash_id: HashId) -> None:
    obj = {
        "kind": "mmr",
        "hash_id": str(hash_id),
        "witnesses": [w.to_json_obj() for w in witnesses],
    }
    _write_text(path, json.dumps(obj, indent=2) + "\n")


def _cmd_acc_mmr(args) -> int:
    if args.action == "prepend":
        print(
            "mmr prepend is unsupported by construction: a Merkle Mountain Range "
            "grows in one direction only; use the mpt accumulator for prepends",
            file=sys.stderr,
        )
        return EXIT_USAGE
    if args.action == "init":
        fixture = _read_json(args.fixture)
        headers = load_fixture_headers(fixture)
        hash_id = HashId(fixture["hash"])
        if not 0 <= args.start < len(headers):
            print(f"fixture has no block {args.start}", file=sys.stderr)
            return EXIT_USAGE
        _, witness = mmr.mmr_init(header_hash(headers[args.start], hash_id), hash_id)
        _save_mmr_state(args.state, [witness], hash_id)
        print(f"initialized at block {args.start}")
        return EXIT_OK
    if args.action == "append":
        state, witnesses, leaves, hash_id = _load_mmr_state(args.state)
        headers = load_fixture_headers(_read_json(args.fixture))
        number = args.start + len(leaves)  # --start records the base block
        if number >= len(headers):
            print(f"fixture has no block {number}", file=sys.stderr)
            return EXIT_REJECTED
        header = headers[number]
        try:
            state, witness = mmr.mmr_append(
                state, header_hash(header, hash_id), header, leaves[-1]
            )
        except mmr.BrokenLinkage as exc:
            print(f"rejected: {exc}", file=sys.stderr)
            return EXIT_REJECTED
        _save_mmr_state(args.state, witnesses + [witness], hash_id)
        print(f"appended block {number}, {len(state.peaks)} peaks, root {_hex(mmr.mmr_root(state))}")
        return EXIT_OK
    if args.action == "prove":
        state, witnesses, leaves, hash_id = _load_mmr_state(args.state)
        index = args.number - args.start
        if not 0 <= index < state.leaf_count:
            print(f"rejected: index {index} out of range", file=sys.stderr)
            return EXIT_REJECTED
        proof = mmr.mmr_prove(state, leaves, index)
        bundle = {
            "kind": "mmr",
            "hash_id": str(hash_id),
            "root": _hex(mmr.mmr_root(state)),
            "index": index,
            "leaf": _hex(leaves[index]),
            "proof": proof.to_json_obj(),
            "witnesses": [w.to_json_obj() for w in witnesses],
        }
        _write_text(args.out, json.dumps(bundle, indent=2) + "\n")
        return EXIT_OK
    # verify
    bundle = _read_json(args.bundle)
    hash_id = HashId(bundle["hash_id"])
    witnesses = [mmr.ConstructionWitness.from_json_obj(w) for w in bundle["witnesses"]]
    root = _unhex(bundle["root"], 32)
    leaf = _unhex(bundle["leaf"], 32)
    proof = mmr.MmrProof.from_json_obj(bundle["proof"])
    replay = mmr.mmr_replay_witnesses(witnesses, hash_id)
    if not replay.ok:
        print(f"rejected: witness chain fails at step {replay.failed_step}: {replay.reason}")
        return EXIT_REJECTED
    if witnesses[-1].new_root != root or not mmr.mmr_verify(root, leaf, proof):
        print("rejected: inclusion proof does not verify against the constructed root")
        return EXIT_REJECTED
    print(f"verified: leaf {bundle['index']} -> {bundle['leaf']}")
    return EXIT_OK


def _cmd_sim_run(args) -> int:
    scenario = _read_json(args.scenario)
    world, reports = run_scenario(scenario)
    out = {
        "clock": world.clock,
        "reports": [r.to_json_obj() for r in reports],
    }
    _write_text(args.report, json.dumps(out, indent=2) + "\n")
    if args.log is not None:
        _write_text(args.log, "\n".join(world.event_log) + "\n")
    rejected = [r for r in reports if not r.accepted]
    for r in reports:
        status = "accepted" if r.accepted else f"rejected ({r.error})"
        print(f"{r.flow}: {status}", file=sys.stderr)
    if rejected and args.strict:
        return EXIT_REJECTED
    return EXIT_OK


def _cmd_bench(args) -> int:
    hash_ids = [HashId(h.strip()) for h in args.hashes.split(",") if h.strip()]
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    report = bench_hashes(hash_ids, sizes, args.iters, seed=args.seed)
    _write_text(args.out, report.to_csv())
    return EXIT_OK


# --- argument wiring ----------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stateproof",
        description="storage-proof toolkit: tries, accumulators, and a multichain verification simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    chain = sub.add_parser("chain", help="chain fixture generation and queries")
    chain_sub = chain.add_subparsers(dest="action", required=True)
    gen = chain_sub.add_parser("gen", help="generate a deterministic chain fixture")
    gen.add_argument("--blocks", type=int, required=True)
    gen.add_argument("--accounts", type=int, default=4)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--block-time", type=int, default=12)
    gen.add_argument("--hash", default=_default_hash(), choices=[h.value for h in HashId])
    gen.add_argument("--out", default=None)
    gen.set_defaults(func=_cmd_chain_gen)
    bh = chain_sub.add_parser("blockhash", help="blockhash window lookup")
    bh.add_argument("--fixture", required=True)
    bh.add_argument("--current", type=int, required=True)
    bh.add_argument("--target", type=int, required=True)
    bh.add_argument("--mode", default="window256", choices=[m.value for m in BlockhashMode])
    bh.set_defaults(func=_cmd_chain_blockhash)

    proof = sub.add_parser("proof", help="hierarchical storage proofs")
    proof_sub = proof.add_subparsers(dest="action", required=True)
    mk = proof_sub.add_parser("make")
    mk.add_argument("--fixture", required=True)
    mk.add_argument("--block", type=int, required=True)
    mk.add_argument("--address", required=True)
    mk.add_argument("--slot", required=True)
    mk.add_argument("--out", default=None)
    mk.set_defaults(func=_cmd_proof_make)
    pv = proof_sub.add_parser("verify")
    pv.add_argument("--proof", required=True)
    pv.add_argument("--block-hash", default=None)
    pv.set_defaults(func=_cmd_proof_verify)

    acc = sub.add_parser("acc", help="block-hash accumulators")
    acc_sub = acc.add_subparsers(dest="kind", required=True)
    for kind, handler in (("mpt", _cmd_acc_mpt), ("mmr", _cmd_acc_mmr)):
        k = acc_sub.add_parser(kind)
        k.add_argument("action", choices=["init", "append", "prepend", "prove", "verify"])
        k.add_argument("--fixture", help="chain fixture supplying headers")
        k.add_argument("--state", help="accumulator state file")
        k.add_argument("--start", type=int, default=0, help="fixture block the accumulator starts at")
        k.add_argument("--number", type=int, help="block number to prove")
        k.add_argument("--bundle", help="proof bundle to verify")
        k.add_argument("--out", default=None)
        k.set_defaults(func=handler)

    simp = sub.add_parser("sim", help="multichain verification scenarios")
    sim_sub = simp.add_subparsers(dest="action", required=True)
    run = sim_sub.add_parser("run")
    run.add_argument("--scenario", required=True)
    run.add_argument("--report", default=None)
    run.add_argument("--log", default=None)
    run.add_argument("--strict", action="store_true")
    run.set_defaults(func=_cmd_sim_run)

    bench = sub.add_parser("bench", help="hash benchmark (native wall-clock throughput, not ZK-circuit cost)")
    bench.add_argument("--hashes", default="keccak256,mimc_sponge")
    bench.add_argument("--sizes", default="32,1024")
    bench.add_argument("--iters", type=int, default=1000)
    bench.add_argument("--seed", type=int, default=42)
    bench.add_argument("--out", default=None)
    bench.set_defaults(func=_cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
