"""Independent Ethereum Merkle-Patricia trie oracle.

One-shot, top-down recursive construction from a complete key-value
map: sort the keys, split on the longest common prefix, and emit
leaf / extension / branch structures per the yellow paper.  Carries its
own RLP and hex-prefix encoders and hashes with the reference Keccak,
so no code path is shared with the package's incremental-insert trie.

Nodes are kept as full structures (("leaf", path, value) / ("ext",
path, child) / ("branch", children, value)); references are computed on
demand with the standard inline-below-32-bytes rule.
"""

from .keccak_ref import keccak256_reference


def _rlp(item):
    if isinstance(item, bytes):
        if len(item) == 1 and item[0] < 0x80:
            return item
        return _rlp_len(len(item), 0x80) + item
    payload = b"".join(_rlp(x) for x in item)
    return _rlp_len(len(payload), 0xC0) + payload


def _rlp_len(n, offset):
    if n < 56:
        return bytes([offset + n])
    be = n.to_bytes((n.bit_length() + 7) // 8, "big")
    return bytes([offset + 55 + len(be)]) + be


def _nibbles(key: bytes):
    out = []
    for b in key:
        out += [b >> 4, b & 0x0F]
    return tuple(out)


def _hp(nibbles, leaf):
    flag = 2 if leaf else 0
    if len(nibbles) % 2:
        data = [((flag | 1) << 4) | nibbles[0]]
        nibbles = nibbles[1:]
    else:
        data = [flag << 4]
    for i in range(0, len(nibbles), 2):
        data.append((nibbles[i] << 4) | nibbles[i + 1])
    return bytes(data)


def _build(items):
    """items: sorted list of (nibble_tuple, value), keys distinct, len >= 1."""
    if len(items) == 1:
        path, value = items[0]
        return ("leaf", path, value)
    first = items[0][0]
    prefix_len = len(first)
    for path, _ in items[1:]:
        n = 0
        while n < min(prefix_len, len(path)) and path[n] == first[n]:
            n += 1
        prefix_len = n
    if prefix_len > 0:
        stripped = [(path[prefix_len:], v) for path, v in items]
        return ("ext", first[:prefix_len], _build_branch(stripped))
    return _build_branch(items)


def _build_branch(items):
    children = [None] * 16
    value = b""
    groups = {}
    for path, v in items:
        if len(path) == 0:
            value = v
        else:
            groups.setdefault(path[0], []).append((path[1:], v))
    for nibble, group in groups.items():
        children[nibble] = _build(group)
    return ("branch", children, value)


def _to_rlp_form(node):
    kind = node[0]
    if kind == "leaf":
        return [_hp(node[1], True), node[2]]
    if kind == "ext":
        return [_hp(node[1], False), _child_ref(node[2])]
    children, value = node[1], node[2]
    return [b"" if c is None else _child_ref(c) for c in children] + [value]


def _child_ref(node):
    form = _to_rlp_form(node)
    enc = _rlp(form)
    if len(enc) < 32:
        return form
    return keccak256_reference(enc)


def node_encoding(node) -> bytes:
    return _rlp(_to_rlp_form(node))


def trie_root(mapping: dict[bytes, bytes]) -> bytes:
    """Root digest of the trie holding exactly ``mapping``."""
    if not mapping:
        return keccak256_reference(_rlp(b""))
    items = sorted((_nibbles(k), v) for k, v in mapping.items())
    return keccak256_reference(node_encoding(_build(items)))


def trie_get(mapping: dict[bytes, bytes], key: bytes):
    return mapping.get(key)


def trie_prove(mapping: dict[bytes, bytes], key: bytes) -> list[bytes]:
    """eth_getProof-style proof: encodings of every hashed node on the
    path from the root toward ``key`` (inclusion or exclusion)."""
    if not mapping:
        return []
    items = sorted((_nibbles(k), v) for k, v in mapping.items())
    node = _build(items)
    path = _nibbles(key)
    nodes = [node_encoding(node)]
    while True:
        kind = node[0]
        if kind == "leaf":
            return nodes
        if kind == "ext":
            remainder = node[1]
            if path[: len(remainder)] != remainder:
                return nodes
            child = node[2]
            path = path[len(remainder) :]
        else:
            if not path:
                return nodes
            child = node[1][path[0]]
            if child is None:
                return nodes
            path = path[1:]
        if len(node_encoding(child)) >= 32:
            nodes.append(node_encoding(child))
        node = child
