"""Lossless back-ends for thresholded coefficient arrays, plus the WGC1 file."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .csr import CorruptBlockError, CsrBlock, csr_decode, csr_encode
from .lz import CHUNK_SIZES, LzFormatError, LzStream, lz_decode, lz_encode

__all__ = [
    "CODECS",
    "CompressedPatch",
    "ContainerError",
    "CorruptBlockError",
    "CsrBlock",
    "LzFormatError",
    "LzStream",
    "CHUNK_SIZES",
    "compressed_size",
    "csr_decode",
    "csr_encode",
    "decode_patch",
    "dense_size",
    "encode_patch",
    "lz_decode",
    "lz_encode",
    "read_container",
    "write_container",
    "dumps_container",
    "loads_container",
]

CODECS = {"csr": 0, "lz": 1}
_F32_FLAG = 0x100
MAGIC = b"WGC1"


class ContainerError(ValueError):
    pass


@dataclass
class CompressedPatch:
    codec: str
    dims: tuple
    components: int
    levels: int
    payload: list  # CsrBlock per component, or a single LzStream
    value_width: int = 8

    @property
    def dense_bytes(self) -> int:
        return dense_size(self.dims, self.components)

    @property
    def compressed_bytes(self) -> int:
        return compressed_size(self)

    @property
    def nnz(self) -> int:
        if self.codec != "csr":
            raise AttributeError("nnz is only tracked by the csr codec")
        return sum(b.nnz for b in self.payload)


def dense_size(dims, components: int = 1) -> int:
    return 8 * int(np.prod(dims)) * components


def compressed_size(p: CompressedPatch) -> int:
    if p.codec == "csr":
        return sum(b.nbytes(p.value_width) for b in p.payload)
    if p.codec == "lz":
        return sum(s.nbytes() for s in p.payload)
    raise ContainerError(f"unknown codec {p.codec!r}")


def _dtype(width: int):
    if width == 8:
        return np.dtype("<f8")
    if width == 4:
        return np.dtype("<f4")
    raise ContainerError(f"unsupported value width {width}")


def encode_patch(
    values: np.ndarray,
    levels: int,
    codec: str = "csr",
    chunk_size: int = 64 * 1024,
    value_width: int = 8,
) -> CompressedPatch:
    """Encode a ``(components, *dims)`` coefficient array.

    ``value_width=4`` stores values as float32, which is lossy.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim < 2:
        raise ValueError("values must be shaped (components, *dims)")
    dt = _dtype(value_width)
    comps, dims = values.shape[0], tuple(values.shape[1:])
    if codec == "csr":
        payload = [csr_encode(values[c], dtype=dt) for c in range(comps)]
    elif codec == "lz":
        payload = [lz_encode(values.astype(dt).tobytes(), chunk_size)]
    else:
        raise ContainerError(f"unknown codec {codec!r}")
    return CompressedPatch(codec, dims, comps, levels, payload, value_width)


def decode_patch(p: CompressedPatch) -> np.ndarray:
    shape = (p.components,) + tuple(p.dims)
    if p.codec == "csr":
        if len(p.payload) != p.components:
            raise ContainerError("one CSR block per component expected")
        out = np.empty(shape)
        for c, block in enumerate(p.payload):
            out[c] = csr_decode(block).reshape(p.dims)
        return out
    if p.codec == "lz":
        raw = lz_decode(p.payload[0])
        dt = _dtype(p.value_width)
        if len(raw) != dt.itemsize * int(np.prod(shape)):
            raise ContainerError("decoded byte count does not match shape")
        return np.frombuffer(raw, dtype=dt).astype(np.float64).reshape(shape)
    raise ContainerError(f"unknown codec {p.codec!r}")


def dumps_container(p: CompressedPatch) -> bytes:
    codec_id = CODECS[p.codec] | (_F32_FLAG if p.value_width == 4 else 0)
    parts = [MAGIC, struct.pack("<II", codec_id, len(p.dims))]
    parts.append(struct.pack(f"<{len(p.dims)}I", *p.dims))
    parts.append(struct.pack("<II", p.components, p.levels))
    if p.codec == "csr":
        dt = _dtype(p.value_width)
        for b in p.payload:
            for arr, t in ((b.values, dt), (b.col, "<u4"), (b.row, "<u4")):
                parts.append(struct.pack("<Q", len(arr)))
                parts.append(np.asarray(arr, dtype=t).tobytes())
    else:
        parts.append(p.payload[0].to_bytes())
    return b"".join(parts)


def loads_container(buf: bytes) -> CompressedPatch:
    if buf[:4] != MAGIC:
        raise ContainerError("not a WGC1 container")
    try:
        codec_id, ndims = struct.unpack_from("<II", buf, 4)
        off = 12
        dims = struct.unpack_from(f"<{ndims}I", buf, off)
        off += 4 * ndims
        components, levels = struct.unpack_from("<II", buf, off)
        off += 8
    except struct.error:
        raise ContainerError("truncated header") from None
    width = 4 if codec_id & _F32_FLAG else 8
    names = {v: k for k, v in CODECS.items()}
    codec = names.get(codec_id & ~_F32_FLAG)
    if codec is None:
        raise ContainerError(f"unknown codec id {codec_id}")
    if codec == "csr":
        rows = int(np.prod(dims[:-1])) if len(dims) > 1 else 1
        cols = dims[-1]
        payload = []
        for _ in range(components):
            arrays = []
            for t in (_dtype(width), np.dtype("<u4"), np.dtype("<u4")):
                if off + 8 > len(buf):
                    raise ContainerError("truncated CSR array header")
                (count,) = struct.unpack_from("<Q", buf, off)
                off += 8
                end = off + count * t.itemsize
                if end > len(buf):
                    raise ContainerError("truncated CSR array")
                arrays.append(np.frombuffer(buf[off:end], dtype=t).copy())
                off = end
            payload.append(CsrBlock(arrays[0], arrays[1], arrays[2], rows, cols))
    else:
        stream, off = LzStream.from_bytes(buf, off)
        payload = [stream]
    return CompressedPatch(codec, tuple(dims), components, levels, payload, width)


def write_container(path, p: CompressedPatch) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_container(p))


def read_container(path) -> CompressedPatch:
    with open(path, "rb") as fh:
        return loads_container(fh.read())
