"""Chunked LZ77 byte codec with LZ4-style sequence framing.

Every chunk is compressed on its own, so chunks decode independently.  A
sequence is::

    token | literal-length ext | literals | offset (u16 LE) | match-length ext

The token high nibble is the literal count and the low nibble the match
length minus 4; a nibble of 15 is continued by bytes of 255 closed by a byte
< 255.  The final sequence of a chunk may stop after its literals.  Matching
is greedy with a single-entry hash table on 4-byte prefixes, offsets are
limited to 65535 and matches may overlap their source.

A chunk whose encoding would not be shorter than the input is stored raw;
the decoder recognises it by ``enc_len == raw_len``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

MIN_MATCH = 4
MAX_OFFSET = 65535
KIB = 1024
CHUNK_SIZES = (64 * KIB, 256 * KIB, 1024 * KIB)
CHUNK_HEADER = 8

_HDR = struct.Struct("<II")


class LzFormatError(ValueError):
    pass


@dataclass
class LzStream:
    chunk_size: int
    chunks: list = field(default_factory=list)  # (raw_len, enc_len, payload)

    @property
    def raw_size(self) -> int:
        return sum(c[0] for c in self.chunks)

    def nbytes(self) -> int:
        return sum(CHUNK_HEADER + c[1] for c in self.chunks)

    def to_bytes(self) -> bytes:
        parts = [struct.pack("<IQ", self.chunk_size, len(self.chunks))]
        for raw_len, enc_len, payload in self.chunks:
            parts.append(_HDR.pack(raw_len, enc_len))
            parts.append(payload)
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, buf: bytes, offset: int = 0) -> tuple["LzStream", int]:
        try:
            chunk_size, count = struct.unpack_from("<IQ", buf, offset)
        except struct.error:
            raise LzFormatError("truncated stream header") from None
        offset += 12
        chunks = []
        for _ in range(count):
            if offset + CHUNK_HEADER > len(buf):
                raise LzFormatError("truncated chunk header")
            raw_len, enc_len = _HDR.unpack_from(buf, offset)
            offset += CHUNK_HEADER
            if offset + enc_len > len(buf):
                raise LzFormatError("truncated chunk payload")
            chunks.append((raw_len, enc_len, bytes(buf[offset : offset + enc_len])))
            offset += enc_len
        return cls(chunk_size, chunks), offset


def _match_length(data: bytes, a: int, b: int, n: int) -> int:
    # longest L with data[a:a+L] == data[b:b+L], b + L <= n
    length = 0
    step = 16
    while True:
        if b + length + step <= n and data[a + length : a + length + step] == data[b + length : b + length + step]:
            length += step
            step = min(step * 2, 1 << 16)
        elif step > 1:
            step //= 2
        else:
            return length


def _put_length(out: bytearray, n: int) -> None:
    while n >= 255:
        out.append(255)
        n -= 255
    out.append(n)


def _emit(out: bytearray, literals: bytes, offset: int, match_len: int) -> None:
    lit = len(literals)
    ml = match_len - MIN_MATCH if match_len else 0
    out.append((min(lit, 15) << 4) | min(ml, 15))
    if lit >= 15:
        _put_length(out, lit - 15)
    out += literals
    if match_len:
        out += offset.to_bytes(2, "little")
        if ml >= 15:
            _put_length(out, ml - 15)


def compress_block(data: bytes) -> bytes:
    n = len(data)
    out = bytearray()
    table: dict[bytes, int] = {}
    anchor = 0
    i = 0
    last = n - MIN_MATCH
    while i <= last:
        key = data[i : i + MIN_MATCH]
        cand = table.get(key)
        table[key] = i
        if cand is not None and i - cand <= MAX_OFFSET:
            length = MIN_MATCH + _match_length(data, cand + MIN_MATCH, i + MIN_MATCH, n)
            _emit(out, data[anchor:i], i - cand, length)
            i += length
            anchor = i
            if MIN_MATCH <= i <= last + 2:
                table[data[i - 2 : i + 2]] = i - 2
        else:
            i += 1
    if anchor < n or not out:
        _emit(out, data[anchor:], 0, 0)
    return bytes(out)


def _get_length(src: bytes, p: int) -> tuple[int, int]:
    total = 0
    while True:
        if p >= len(src):
            raise LzFormatError("truncated length extension")
        b = src[p]
        p += 1
        total += b
        if b != 255:
            return total, p


def decompress_block(src: bytes, raw_len: int) -> bytes:
    out = bytearray()
    p = 0
    n = len(src)
    while p < n:
        token = src[p]
        p += 1
        lit = token >> 4
        if lit == 15:
            ext, p = _get_length(src, p)
            lit += ext
        if p + lit > n:
            raise LzFormatError("truncated literals")
        out += src[p : p + lit]
        p += lit
        if p == n:
            break
        if p + 2 > n:
            raise LzFormatError("truncated match offset")
        offset = src[p] | (src[p + 1] << 8)
        p += 2
        ml = token & 15
        if ml == 15:
            ext, p = _get_length(src, p)
            ml += ext
        ml += MIN_MATCH
        if offset == 0 or offset > len(out):
            raise LzFormatError(f"bad match offset {offset}")
        start = len(out) - offset
        if offset >= ml:
            out += out[start : start + ml]
        else:
            pattern = bytes(out[start:])
            out += (pattern * (ml // offset + 1))[:ml]
        if len(out) > raw_len:
            break
    if len(out) != raw_len:
        raise LzFormatError(f"chunk decoded to {len(out)} bytes, expected {raw_len}")
    return bytes(out)


def lz_encode(data: bytes, chunk_size: int = 64 * KIB) -> LzStream:
    if chunk_size < 1 or chunk_size > 2**32 - 1:
        raise ValueError("chunk_size must be in [1, 2**32)")
    data = bytes(data)
    stream = LzStream(chunk_size)
    for start in range(0, len(data), chunk_size):
        raw = data[start : start + chunk_size]
        enc = compress_block(raw)
        if len(enc) >= len(raw):
            enc = raw
        stream.chunks.append((len(raw), len(enc), enc))
    return stream


def decode_chunk(raw_len: int, enc_len: int, payload: bytes) -> bytes:
    if len(payload) != enc_len:
        raise LzFormatError("payload length does not match enc_len")
    if enc_len == raw_len:
        return bytes(payload)
    if enc_len > raw_len:
        raise LzFormatError("enc_len exceeds raw_len")
    return decompress_block(payload, raw_len)


def lz_decode(stream: LzStream) -> bytes:
    return b"".join(decode_chunk(*c) for c in stream.chunks)
