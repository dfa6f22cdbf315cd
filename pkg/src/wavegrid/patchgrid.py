"""Decomposition of a global grid into overlapping patches with a ghost ring.

Each patch holds ``2**k + 1`` logical cells per axis plus one ghost layer on
each side.  Neighbouring patches share their boundary logical layer, so a
global axis of length ``G`` split into ``P`` patches needs ``G = P * 2**k + 1``.

With periodic boundaries the first and last global layers are the same
physical cell, i.e. a periodic axis of ``G`` points holds ``G - 1`` distinct
cells.  The trapezoid-weighted global mass then equals the plain sum over
distinct cells.
"""

from __future__ import annotations

import itertools
import struct
from dataclasses import dataclass, field

import numpy as np

from .wavelet import trapezoid_weights

GHOST = 1
WGRD_MAGIC = b"WGRD"
WGRD_VERSION = 1


class DecompositionError(ValueError):
    pass


class ConsistencyError(RuntimeError):
    """Shared cells disagree between patches."""


@dataclass
class Patch:
    coords: tuple
    logical_dims: tuple
    origin: tuple
    values: np.ndarray  # (components, *true_dims)

    @property
    def true_dims(self) -> tuple:
        return tuple(n + 2 * GHOST for n in self.logical_dims)

    @property
    def logical(self) -> tuple:
        return (slice(None),) + tuple(slice(GHOST, GHOST + n) for n in self.logical_dims)

    def logical_view(self) -> np.ndarray:
        return self.values[self.logical]


@dataclass
class PatchGrid:
    global_dims: tuple
    splits: tuple
    components: int
    periodic: bool = True
    patches: dict = field(default_factory=dict)

    @property
    def ndim(self) -> int:
        return len(self.global_dims)

    @property
    def patch_logical_dims(self) -> tuple:
        return tuple((g - 1) // p + 1 for g, p in zip(self.global_dims, self.splits))

    def __iter__(self):
        return iter(self.patches[c] for c in sorted(self.patches))

    def __len__(self):
        return len(self.patches)


def decompose(global_dims, splits, components: int = 1, periodic: bool = True) -> PatchGrid:
    global_dims = tuple(int(g) for g in global_dims)
    splits = tuple(int(p) for p in splits)
    if len(global_dims) != len(splits):
        raise DecompositionError("global_dims and splits differ in rank")
    if components < 1:
        raise DecompositionError("components must be >= 1")
    logical = []
    for g, p in zip(global_dims, splits):
        if p < 1 or g < 3 or (g - 1) % p:
            raise DecompositionError(f"cannot split length {g} into {p} patches")
        m = (g - 1) // p
        if m & (m - 1):
            raise DecompositionError(
                f"length {g} with {p} splits gives patch length {m + 1}, not 2**k + 1"
            )
        logical.append(m + 1)
    grid = PatchGrid(global_dims, splits, components, periodic)
    for coords in itertools.product(*(range(p) for p in splits)):
        origin = tuple(c * (n - 1) for c, n in zip(coords, logical))
        true_dims = tuple(n + 2 * GHOST for n in logical)
        values = np.zeros((components,) + true_dims)
        grid.patches[coords] = Patch(coords, tuple(logical), origin, values)
    return grid


def _index(ndim: int, ax: int, i) -> tuple:
    idx = [slice(None)] * (ndim + 1)
    idx[ax + 1] = i
    return tuple(idx)


def sync_ghosts(grid: PatchGrid) -> None:
    """Refresh every ghost layer from the neighbouring patches.

    Axes are processed in order and whole hyperplanes (including ghosts of
    earlier axes) are copied, so edge and corner ghosts end up consistent.
    Shared logical cells are left alone.
    """
    nd = grid.ndim
    for ax in range(nd):
        n = grid.patch_logical_dims[ax]
        p_count = grid.splits[ax]
        for coords, patch in grid.patches.items():
            c = coords[ax]
            left = right = None
            if c > 0:
                left = coords[:ax] + (c - 1,) + coords[ax + 1 :]
            elif grid.periodic:
                left = coords[:ax] + (p_count - 1,) + coords[ax + 1 :]
            if c < p_count - 1:
                right = coords[:ax] + (c + 1,) + coords[ax + 1 :]
            elif grid.periodic:
                right = coords[:ax] + (0,) + coords[ax + 1 :]
            v = patch.values
            if left is None:
                v[_index(nd, ax, 0)] = v[_index(nd, ax, 1)]
            else:
                v[_index(nd, ax, 0)] = grid.patches[left].values[_index(nd, ax, n - 1)]
            if right is None:
                v[_index(nd, ax, n + 1)] = v[_index(nd, ax, n)]
            else:
                v[_index(nd, ax, n + 1)] = grid.patches[right].values[_index(nd, ax, 2)]


def scatter(grid: PatchGrid, global_field: np.ndarray) -> None:
    """Load every patch's logical block from a ``(components, *global_dims)`` field."""
    global_field = np.asarray(global_field, dtype=np.float64)
    if global_field.shape != (grid.components,) + grid.global_dims:
        raise DecompositionError(
            f"field shape {global_field.shape} does not match grid "
            f"{(grid.components,) + grid.global_dims}"
        )
    for patch in grid:
        block = (slice(None),) + tuple(
            slice(o, o + n) for o, n in zip(patch.origin, patch.logical_dims)
        )
        patch.values[patch.logical] = global_field[block]


def _agree(a: np.ndarray, b: np.ndarray, rtol: float) -> bool:
    scale = max(float(np.abs(a).max(initial=0.0)), float(np.abs(b).max(initial=0.0)), 1e-300)
    return bool(np.all(np.abs(a - b) <= rtol * scale))


def assemble(grid: PatchGrid, rtol: float = 1e-12, check: bool = True) -> np.ndarray:
    """Global ``(components, *global_dims)`` field from the logical cells."""
    out = np.zeros((grid.components,) + grid.global_dims)
    written = np.zeros(grid.global_dims, dtype=bool)
    for patch in grid:
        region = tuple(slice(o, o + n) for o, n in zip(patch.origin, patch.logical_dims))
        block = patch.logical_view()
        if check:
            seen = written[region]
            if seen.any():
                old = out[(slice(None),) + region][:, seen]
                if not _agree(old, block[:, seen], rtol):
                    raise ConsistencyError(
                        f"patch {patch.coords} disagrees with a neighbour on shared cells"
                    )
        out[(slice(None),) + region] = block
        written[region] = True
    if check and grid.periodic:
        for ax in range(grid.ndim):
            first = out[_index(grid.ndim, ax, 0)]
            last = out[_index(grid.ndim, ax, -1)]
            if not _agree(first, last, rtol):
                raise ConsistencyError(f"periodic boundary layers disagree along axis {ax}")
    return out


def patch_mass(patch: Patch) -> np.ndarray:
    """Trapezoid mass of each component over the patch's logical block."""
    block = patch.logical_view()
    out = block
    for ax in reversed(range(1, block.ndim)):
        out = np.tensordot(out, trapezoid_weights(block.shape[ax]), axes=([ax], [0]))
    return np.asarray(out, dtype=np.float64)


def global_mass(grid: PatchGrid) -> np.ndarray:
    """Sum of per-patch trapezoid masses, one entry per component."""
    total = np.zeros(grid.components)
    for patch in grid:
        total += patch_mass(patch)
    return total


def write_wgrd(path, values: np.ndarray) -> None:
    """Write a ``(components, *dims)`` array in the WGRD snapshot format."""
    values = np.asarray(values, dtype="<f8")
    if values.ndim < 2:
        raise ValueError("values must be shaped (components, *dims)")
    dims = values.shape[1:]
    with open(path, "wb") as fh:
        fh.write(WGRD_MAGIC)
        fh.write(struct.pack("<II", WGRD_VERSION, len(dims)))
        fh.write(struct.pack(f"<{len(dims)}I", *dims))
        fh.write(struct.pack("<I", values.shape[0]))
        fh.write(np.ascontiguousarray(values).tobytes())


def read_wgrd(path) -> np.ndarray:
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:4] != WGRD_MAGIC:
        raise ValueError(f"{path}: not a WGRD file")
    try:
        version, ndims = struct.unpack_from("<II", buf, 4)
        dims = struct.unpack_from(f"<{ndims}I", buf, 12)
        (components,) = struct.unpack_from("<I", buf, 12 + 4 * ndims)
    except struct.error:
        raise ValueError(f"{path}: truncated WGRD header") from None
    if version != WGRD_VERSION:
        raise ValueError(f"{path}: unsupported WGRD version {version}")
    start = 16 + 4 * ndims
    count = components * int(np.prod(dims))
    if len(buf) - start != 8 * count:
        raise ValueError(f"{path}: expected {count} values")
    return np.frombuffer(buf, dtype="<f8", offset=start).reshape((components,) + tuple(dims)).copy()
