"""Minimal RLP codec: byte strings, non-negative ints, and nested lists.

Only the subset needed for trie nodes, account records and block headers
is implemented.  Decoding is strict: non-canonical encodings (oversized
length fields, single bytes wrapped in a string header) and trailing
garbage are rejected, so a decoded-then-reencoded item always round-trips
to the identical bytes.
"""

from __future__ import annotations

__all__ = ["encode", "decode", "encode_int", "decode_int", "RlpError"]


class RlpError(ValueError):
    pass


def encode_int(x: int) -> bytes:
    """Big-endian minimal encoding; zero encodes as the empty string."""
    if x < 0:
        raise RlpError("RLP cannot encode negative integers")
    if x == 0:
        return b""
    return x.to_bytes((x.bit_length() + 7) // 8, "big")


def decode_int(b: bytes) -> int:
    if len(b) > 0 and b[0] == 0:
        raise RlpError("non-minimal integer encoding (leading zero)")
    return int.from_bytes(b, "big")


def _encode_length(length: int, offset: int) -> bytes:
    if length < 56:
        return bytes([offset + length])
    length_bytes = encode_int(length)
    return bytes([offset + 55 + len(length_bytes)]) + length_bytes


def encode(item) -> bytes:
    if isinstance(item, (bytes, bytearray, memoryview)):
        item = bytes(item)
        if len(item) == 1 and item[0] < 0x80:
            return item
        return _encode_length(len(item), 0x80) + item
    if isinstance(item, bool):
        raise RlpError("refusing to encode bool")
    if isinstance(item, int):
        return encode(encode_int(item))
    if isinstance(item, (list, tuple)):
        payload = b"".join(encode(x) for x in item)
        return _encode_length(len(payload), 0xC0) + payload
    raise RlpError(f"cannot RLP-encode {type(item).__name__}")


def _consume_length(data: bytes, pos: int, short: int, long: int) -> tuple[int, int]:
    prefix = data[pos]
    if prefix <= short + 55:
        return prefix - short, pos + 1
    n = prefix - (short + 55)
    if pos + 1 + n > len(data):
        raise RlpError("truncated length field")
    raw = data[pos + 1 : pos + 1 + n]
    if raw[0] == 0:
        raise RlpError("length field has leading zero")
    length = int.from_bytes(raw, "big")
    if length < 56:
        raise RlpError("long form used for short payload")
    return length, pos + 1 + n


def _decode_at(data: bytes, pos: int):
    if pos >= len(data):
        raise RlpError("unexpected end of input")
    prefix = data[pos]
    if prefix < 0x80:
        return bytes([prefix]), pos + 1
    if prefix < 0xC0:
        length, start = _consume_length(data, pos, 0x80, 0xB7)
        end = start + length
        if end > len(data):
            raise RlpError("truncated string payload")
        payload = data[start:end]
        if length == 1 and payload[0] < 0x80:
            raise RlpError("single byte below 0x80 must encode as itself")
        return payload, end
    length, start = _consume_length(data, pos, 0xC0, 0xF7)
    end = start + length
    if end > len(data):
        raise RlpError("truncated list payload")
    items = []
    cur = start
    while cur < end:
        item, cur = _decode_at(data, cur)
        items.append(item)
    if cur != end:
        raise RlpError("list payload length mismatch")
    return items, end


def decode(data: bytes):
    """Decode one RLP item; bytes stay bytes, lists become Python lists."""
    if len(data) == 0:
        raise RlpError("cannot decode empty input")
    item, end = _decode_at(bytes(data), 0)
    if end != len(data):
        raise RlpError("trailing bytes after RLP item")
    return item
