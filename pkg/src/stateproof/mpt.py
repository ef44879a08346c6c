"""Ethereum-compatible hex-nibble Merkle-Patricia trie.

Node encoding follows the yellow paper exactly: RLP lists with
hex-prefix (compact) path encoding, and child references that are
embedded inline when the child's encoding is shorter than 32 bytes,
otherwise replaced by the keccak256 digest of the encoding.  Roots and
proofs are therefore bit-compatible with real Ethereum proof material
(``eth_getProof`` node arrays drop in directly).

The trie is persistent: nodes live in an append-only store keyed by
digest, an insert returns a new ``Trie`` handle sharing the store, and
any old root digest keeps resolving forever.  Deletion is deliberately
unsupported; an empty value on insert is rejected rather than treated
as a delete.

Keys are raw bytes here.  Secure keying (hashing addresses and slots
before lookup) is applied one layer up, in :mod:`stateproof.chain`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import rlp
from .hashing import HashId, digest

__all__ = [
    "EmptyValue",
    "InvalidProof",
    "MptProof",
    "NodeStore",
    "Trie",
    "empty_root",
    "bytes_to_nibbles",
    "encode_path",
    "decode_path",
]


class EmptyValue(ValueError):
    """Raised on insert with an empty value (deletion is out of scope)."""


class InvalidProof(ValueError):
    """Malformed or non-verifying proof chain.

    ``reason`` is one of ``root_mismatch``, ``broken_link``,
    ``bad_encoding``, ``path_overrun``.
    """

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


# --- nibble paths and hex-prefix (compact) encoding ------------------------


def bytes_to_nibbles(key: bytes) -> tuple[int, ...]:
    out = []
    for b in key:
        out.append(b >> 4)
        out.append(b & 0x0F)
    return tuple(out)


def encode_path(nibbles: tuple[int, ...], is_leaf: bool) -> bytes:
    flags = 2 if is_leaf else 0
    if len(nibbles) % 2 == 1:
        head = [((flags | 1) << 4) | nibbles[0]]
        rest = nibbles[1:]
    else:
        head = [flags << 4]
        rest = nibbles
    out = bytearray(head)
    for i in range(0, len(rest), 2):
        out.append((rest[i] << 4) | rest[i + 1])
    return bytes(out)


def decode_path(data: bytes) -> tuple[tuple[int, ...], bool]:
    if len(data) == 0:
        raise InvalidProof("bad_encoding", "empty hex-prefix path")
    flags = data[0] >> 4
    if flags > 3:
        raise InvalidProof("bad_encoding", f"invalid hex-prefix flag nibble {flags}")
    nibbles = []
    if flags & 1:
        nibbles.append(data[0] & 0x0F)
    elif data[0] & 0x0F:
        raise InvalidProof("bad_encoding", "even-parity path with nonzero pad nibble")
    for b in data[1:]:
        nibbles.append(b >> 4)
        nibbles.append(b & 0x0F)
    return tuple(nibbles), bool(flags & 2)


def _common_prefix_len(a, b) -> int:
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


# --- node store and references ---------------------------------------------
#
# A decoded node is a plain RLP structure:
#   leaf / extension : [hex-prefix path, value-or-child-ref]
#   branch           : [ref0 .. ref15, value]
# A child ref is b"" (absent), a nested list (inline node, encoding < 32
# bytes) or a 32-byte digest.


class NodeStore:
    """Append-only map digest -> canonical node encoding.

    Nodes are immutable once written, so concurrent readers are safe;
    writers must be serialized externally per trie lineage.
    """

    __slots__ = ("_nodes",)

    def __init__(self):
        self._nodes = {}

    def put(self, node_hash: bytes, encoding: bytes) -> None:
        self._nodes.setdefault(node_hash, encoding)

    def get(self, node_hash: bytes) -> bytes:
        return self._nodes[node_hash]

    def __len__(self) -> int:
        return len(self._nodes)


def empty_root(hash_id: HashId = HashId.KECCAK256) -> bytes:
    """Root of the empty trie: digest of the RLP of the empty string."""
    return digest(hash_id, rlp.encode(b""))


@dataclass(frozen=True)
class MptProof:
    """Ordered node encodings from the root toward the key."""

    nodes: tuple[bytes, ...]

    def to_json_obj(self, root: bytes, key: bytes) -> dict:
        return {
            "root": "0x" + root.hex(),
            "key": "0x" + key.hex(),
            "nodes": ["0x" + n.hex() for n in self.nodes],
        }

    def to_json(self, root: bytes, key: bytes) -> str:
        return json.dumps(self.to_json_obj(root, key), indent=2)

    @classmethod
    def from_json_obj(cls, obj: dict) -> tuple[bytes, bytes, "MptProof"]:
        root = bytes.fromhex(obj["root"][2:])
        key = bytes.fromhex(obj["key"][2:])
        return root, key, cls(nodes=tuple(bytes.fromhex(n[2:]) for n in obj["nodes"]))


class Trie:
    """Immutable view onto a persistent trie (store + root reference)."""

    __slots__ = ("store", "hash_id", "_root_node")

    def __init__(self, store: NodeStore, hash_id: HashId = HashId.KECCAK256, _root_node=None):
        self.store = store
        self.hash_id = HashId(hash_id)
        self._root_node = _root_node  # decoded structure, None for empty trie

    # -- hashing / references ------------------------------------------

    def _commit(self, node) -> bytes:
        """Store a node encoding and return its digest."""
        enc = rlp.encode(node)
        h = digest(self.hash_id, enc)
        self.store.put(h, enc)
        return h

    def _ref(self, node):
        """Reference for a child: inline when the encoding is < 32 bytes."""
        enc = rlp.encode(node)
        if len(enc) < 32:
            return node
        h = digest(self.hash_id, enc)
        self.store.put(h, enc)
        return h

    def _load(self, ref):
        if isinstance(ref, list):
            return ref
        return rlp.decode(self.store.get(ref))

    def root(self) -> bytes:
        if self._root_node is None:
            return empty_root(self.hash_id)
        return self._commit(self._root_node)

    @classmethod
    def at_root(cls, store: NodeStore, root: bytes, hash_id: HashId = HashId.KECCAK256) -> "Trie":
        """Reopen a snapshot by its root digest."""
        if root == empty_root(hash_id):
            return cls(store, hash_id)
        return cls(store, hash_id, _root_node=rlp.decode(store.get(root)))

    # -- retrieval -------------------------------------------------------

    def get(self, key: bytes) -> bytes | None:
        node = self._root_node
        path = bytes_to_nibbles(key)
        while True:
            if node is None:
                return None
            if len(node) == 17:
                if not path:
                    return node[16] if node[16] != b"" else None
                child = node[path[0]]
                if child == b"":
                    return None
                node = self._load(child)
                path = path[1:]
                continue
            remainder, is_leaf = decode_path(node[0])
            if is_leaf:
                return node[1] if remainder == path else None
            if path[: len(remainder)] != remainder:
                return None
            node = self._load(node[1])
            path = path[len(remainder) :]

    # -- insertion -------------------------------------------------------

    def insert(self, key: bytes, value: bytes) -> "Trie":
        if len(value) == 0:
            raise EmptyValue("empty values are rejected; deletion is unsupported")
        path = bytes_to_nibbles(key)
        new_root = self._insert_node(self._root_node, path, bytes(value))
        return Trie(self.store, self.hash_id, _root_node=new_root)

    def _insert_node(self, node, path, value):
        if node is None:
            return [encode_path(path, True), value]
        if len(node) == 17:
            new = list(node)
            if not path:
                new[16] = value
                return new
            child = node[path[0]]
            sub = self._insert_node(None if child == b"" else self._load(child), path[1:], value)
            new[path[0]] = self._ref(sub)
            return new
        remainder, is_leaf = decode_path(node[0])
        if is_leaf:
            if remainder == path:
                return [node[0], value]
            return self._split(remainder, node[1], True, path, value)
        # extension node
        common = _common_prefix_len(remainder, path)
        if common == len(remainder):
            sub = self._insert_node(self._load(node[1]), path[common:], value)
            return [node[0], self._ref(sub)]
        return self._split(remainder, node[1], False, path, value, common)

    def _split(self, old_path, old_payload, old_is_leaf, new_path, value, common=None):
        """Replace a leaf/extension with a branch below the shared prefix."""
        if common is None:
            common = _common_prefix_len(old_path, new_path)
        old_rest = old_path[common:]
        new_rest = new_path[common:]
        branch = [b""] * 16 + [b""]
        if old_is_leaf:
            if old_rest:
                branch[old_rest[0]] = self._ref([encode_path(old_rest[1:], True), old_payload])
            else:
                branch[16] = old_payload
        else:
            # old_rest is never empty here: extensions only split on divergence
            if len(old_rest) == 1:
                branch[old_rest[0]] = old_payload
            else:
                branch[old_rest[0]] = self._ref([encode_path(old_rest[1:], False), old_payload])
        if new_rest:
            branch[new_rest[0]] = self._ref([encode_path(new_rest[1:], True), value])
        else:
            branch[16] = value
        if common:
            return [encode_path(old_path[:common], False), self._ref(branch)]
        return branch

    # -- proofs ----------------------------------------------------------

    def prove(self, key: bytes) -> MptProof:
        """Inclusion proof for present keys, exclusion proof for absent ones."""
        nodes = []
        node = self._root_node
        if node is None:
            return MptProof(nodes=())
        nodes.append(rlp.encode(node))
        path = bytes_to_nibbles(key)
        while True:
            if len(node) == 17:
                if not path:
                    return MptProof(nodes=tuple(nodes))
                child = node[path[0]]
                if child == b"":
                    return MptProof(nodes=tuple(nodes))
                if not isinstance(child, list):
                    nodes.append(self.store.get(child))
                node = self._load(child)
                path = path[1:]
                continue
            remainder, is_leaf = decode_path(node[0])
            if is_leaf or path[: len(remainder)] != remainder:
                return MptProof(nodes=tuple(nodes))
            child = node[1]
            if not isinstance(child, list):
                nodes.append(self.store.get(child))
            node = self._load(child)
            path = path[len(remainder) :]


def verify(
    root: bytes,
    key: bytes,
    proof: MptProof,
    hash_id: HashId = HashId.KECCAK256,
) -> bytes | None:
    """Check a proof chain against ``root`` and walk it along ``key``.

    Returns the proven value, or ``None`` when the proof is a well-formed
    exclusion proof.  Raises :class:`InvalidProof` on any malformed or
    non-chaining node sequence.
    """
    path = bytes_to_nibbles(key)
    if root == empty_root(hash_id):
        if proof.nodes:
            raise InvalidProof("path_overrun", "empty trie admits no proof nodes")
        return None
    if not proof.nodes:
        raise InvalidProof("broken_link", "no nodes supplied for non-empty root")
    if digest(hash_id, proof.nodes[0]) != root:
        raise InvalidProof("root_mismatch", "first node does not hash to the root")

    idx = 0
    node = _decode_node(proof.nodes[0])
    while True:
        if len(node) == 17:
            if not path:
                _expect_consumed(proof, idx)
                return _value_bytes(node[16]) if node[16] != b"" else None
            child = node[path[0]]
            path = path[1:]
            if child == b"":
                _expect_consumed(proof, idx)
                return None
            node, idx = _follow(proof, idx, child, hash_id)
            continue
        remainder, is_leaf = decode_path(node[0])
        if is_leaf:
            _expect_consumed(proof, idx)
            return _value_bytes(node[1]) if remainder == path else None
        if path[: len(remainder)] != remainder:
            _expect_consumed(proof, idx)
            return None
        path = path[len(remainder) :]
        node, idx = _follow(proof, idx, node[1], hash_id)


def _value_bytes(value) -> bytes:
    if not isinstance(value, bytes):
        raise InvalidProof("bad_encoding", "node value slot holds a nested list")
    return value


def _decode_node(encoding_or_struct):
    if isinstance(encoding_or_struct, bytes):
        try:
            node = rlp.decode(encoding_or_struct)
        except rlp.RlpError as exc:
            raise InvalidProof("bad_encoding", str(exc)) from exc
    else:
        node = encoding_or_struct
    if not isinstance(node, list) or len(node) not in (2, 17):
        raise InvalidProof("bad_encoding", "node is not a 2- or 17-item list")
    if len(node) == 2 and not isinstance(node[0], bytes):
        raise InvalidProof("bad_encoding", "path element must be a byte string")
    return node


def _follow(proof: MptProof, idx: int, child, hash_id: HashId):
    """Resolve a child reference, consuming the next proof node if hashed."""
    if isinstance(child, list):
        return _decode_node(child), idx
    if len(child) != 32:
        raise InvalidProof("bad_encoding", f"child reference of width {len(child)}")
    if idx + 1 >= len(proof.nodes):
        raise InvalidProof("broken_link", "proof ends while a hashed child is expected")
    nxt = proof.nodes[idx + 1]
    if digest(hash_id, nxt) != child:
        raise InvalidProof("broken_link", "node does not hash to its parent's reference")
    return _decode_node(nxt), idx + 1


def _expect_consumed(proof: MptProof, idx: int) -> None:
    if idx != len(proof.nodes) - 1:
        raise InvalidProof("path_overrun", "unused proof nodes after traversal ended")


def audit_structure(trie: Trie) -> None:
    """Walk the trie and assert the canonical-form invariants.

    Extensions carry a non-empty shared path and never point directly at
    another extension; branches have at least two children or one child
    plus a value.  Raises ``AssertionError`` on violation (test helper).
    """

    def walk(node, via_extension: bool):
        if len(node) == 17:
            children = [c for c in node[:16] if c != b""]
            has_value = node[16] != b""
            assert len(children) >= 2 or (len(children) >= 1 and has_value), (
                "branch must hold >=2 children, or >=1 child plus a value"
            )
            for c in children:
                walk(trie._load(c), via_extension=False)
            return
        remainder, is_leaf = decode_path(node[0])
        if is_leaf:
            assert node[1] != b"", "leaf value must be non-empty"
            return
        assert len(remainder) > 0, "extension path must be non-empty"
        assert not via_extension, "extension must not point at another extension"
        child = trie._load(node[1])
        assert len(child) == 17, "extension child must be a branch"
        walk(child, via_extension=True)

    if trie._root_node is not None:
        walk(trie._root_node, via_extension=False)
