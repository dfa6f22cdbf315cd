"""Mass-conserving 5/3 lifting wavelet on intervals of 2**j + 1 samples.

A single step splits a signal into ``2**(j-1) + 1`` coarse samples and
``2**(j-1)`` details.  The predict step removes the linear interpolation of
the even neighbours from every odd sample, and the update step adds weighted
details back to the interior even samples so that the trapezoidal mass of the
coarse signal is exactly half the mass of the fine one.  End points are kept.

N-D transforms are separable: all levels are run along the first axis, then
all levels along the second axis, and so on.  Coefficients are stored in the
corner layout: along every axis the coarse samples come first, followed by the
detail bands from coarsest to finest.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "InvalidLengthError",
    "PlanError",
    "WaveletPlan",
    "CoefficientSet",
    "scale_of_length",
    "dwt_step_1d",
    "idwt_step_1d",
    "dwt_nd",
    "idwt_nd",
    "analysis_matrix",
    "synthesis_matrix",
    "interleave",
    "trapezoid_weights",
    "trapezoid_mass",
    "write_matrix_csv",
]


class InvalidLengthError(ValueError):
    """Raised when a signal length is not of the form 2**j + 1."""


class PlanError(ValueError):
    """Raised for inconsistent plans, dimensions or band maps."""


def scale_of_length(n: int) -> int:
    """Return j such that ``n == 2**j + 1``, or raise InvalidLengthError."""
    m = int(n) - 1
    if m < 1 or m & (m - 1):
        raise InvalidLengthError(f"length {n} is not of the form 2**j + 1")
    return m.bit_length() - 1


def _update_weights(m: int) -> np.ndarray:
    # alpha_k = 1/4 in the interior and 1/2 on the first and last detail
    w = np.full(m, 0.25)
    w[0] = 0.5
    w[-1] = 0.5
    return w


def _bcast(w: np.ndarray, ndim: int) -> np.ndarray:
    return w.reshape((-1,) + (1,) * (ndim - 1))


def _forward_axis0(block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    even = block[0::2]
    odd = block[1::2]
    details = odd - (even[:-1] + even[1:]) / 2
    coarse = even.copy()
    m = details.shape[0]
    if m > 1:
        w = _bcast(_update_weights(m), block.ndim)
        wd = w * details
        coarse[1:-1] += wd[:-1] + wd[1:]
    return coarse, details


def _inverse_axis0(coarse: np.ndarray, details: np.ndarray) -> np.ndarray:
    m = details.shape[0]
    even = coarse.copy()
    if m > 1:
        w = _bcast(_update_weights(m), coarse.ndim)
        wd = w * details
        even[1:-1] -= wd[:-1] + wd[1:]
    out = np.empty((2 * m + 1,) + coarse.shape[1:], dtype=np.result_type(coarse, details))
    out[0::2] = even
    out[1::2] = details + (even[:-1] + even[1:]) / 2
    return out


def dwt_step_1d(s: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """One lifting step on a 1-D signal of length ``2**j + 1`` (j >= 1).

    Returns ``(coarse, details)`` with lengths ``2**(j-1) + 1`` and
    ``2**(j-1)``.  The mass is halved exactly for j >= 2; a 3-sample step
    keeps only the two end points and cannot conserve it.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 1:
        raise InvalidLengthError("dwt_step_1d expects a 1-D signal")
    if scale_of_length(len(s)) < 1:
        raise InvalidLengthError("a 2-sample signal cannot be transformed further")
    return _forward_axis0(s)


def idwt_step_1d(coarse: Sequence[float], details: Sequence[float]) -> np.ndarray:
    """Invert :func:`dwt_step_1d`."""
    coarse = np.asarray(coarse, dtype=np.float64)
    details = np.asarray(details, dtype=np.float64)
    if coarse.ndim != 1 or details.ndim != 1 or len(coarse) != len(details) + 1:
        raise InvalidLengthError(
            f"need len(coarse) == len(details) + 1, got {len(coarse)} and {len(details)}"
        )
    if scale_of_length(len(coarse) + len(details)) < 1:
        raise InvalidLengthError("a 2-sample signal cannot be transformed further")
    return _inverse_axis0(coarse, details)


@dataclass(frozen=True)
class WaveletPlan:
    """Per-axis lengths (each ``2**k + 1``) and the number of levels."""

    dims: tuple[int, ...]
    levels: int

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims:
            raise PlanError("plan needs at least one dimension")
        if self.levels < 0:
            raise PlanError("levels must be >= 0")
        for d in dims:
            try:
                k = scale_of_length(d)
            except InvalidLengthError as exc:
                raise PlanError(str(exc)) from None
            if self.levels > k:
                raise PlanError(f"{self.levels} levels exceed scale {k} of length {d}")

    @property
    def scales(self) -> tuple[int, ...]:
        return tuple(scale_of_length(d) for d in self.dims)

    @property
    def sample_dims(self) -> tuple[int, ...]:
        """Length of the coarse sample block along each axis."""
        return tuple(2 ** (k - self.levels) + 1 for k in self.scales)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))


def _axis_band_index(n: int, levels: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-position (is_detail, normalized scale) for one axis in corner layout.

    The coarsest detail band gets scale 0, the finest ``levels - 1``.
    Sample positions get scale 0.
    """
    k = scale_of_length(n)
    is_detail = np.zeros(n, dtype=bool)
    scale = np.zeros(n, dtype=np.int64)
    start = 2 ** (k - levels) + 1
    for j in range(levels):
        width = 2 ** (k - levels + j)
        is_detail[start : start + width] = True
        scale[start : start + width] = j
        start += width
    return is_detail, scale


@dataclass
class CoefficientSet:
    """Wavelet coefficients of one field component in corner layout."""

    plan: WaveletPlan
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.plan.dims:
            raise PlanError(
                f"coefficient shape {self.values.shape} does not match plan {self.plan.dims}"
            )

    def axis_bands(self, axis: int) -> tuple[np.ndarray, np.ndarray]:
        return _axis_band_index(self.plan.dims[axis], self.plan.levels)

    def detail_mask(self) -> np.ndarray:
        """True where the coefficient is a detail along at least one axis."""
        mask = np.zeros(self.plan.dims, dtype=bool)
        for ax in range(len(self.plan.dims)):
            det, _ = self.axis_bands(ax)
            shape = [1] * len(self.plan.dims)
            shape[ax] = -1
            mask |= det.reshape(shape)
        return mask

    def sample_mask(self) -> np.ndarray:
        return ~self.detail_mask()

    def band(self, index: Sequence[int]) -> tuple[tuple[int, ...], tuple[str, ...]]:
        """Scale tuple and kind tuple (``"sample"``/``"detail"``) of one coefficient."""
        if len(index) != len(self.plan.dims):
            raise PlanError("index rank does not match plan")
        scales, kinds = [], []
        for ax, i in enumerate(index):
            det, sc = self.axis_bands(ax)
            scales.append(int(sc[i]))
            kinds.append("detail" if det[i] else "sample")
        return tuple(scales), tuple(kinds)

    def copy(self) -> "CoefficientSet":
        return CoefficientSet(self.plan, self.values.copy())


def dwt_nd(field: np.ndarray, plan: WaveletPlan) -> CoefficientSet:
    """Multi-level separable transform of ``field`` into corner layout."""
    field = np.asarray(field, dtype=np.float64)
    if field.shape != plan.dims:
        raise PlanError(f"field shape {field.shape} does not match plan {plan.dims}")
    out = field.copy()
    for ax in range(field.ndim):
        view = np.moveaxis(out, ax, 0)
        n = view.shape[0]
        for _ in range(plan.levels):
            coarse, details = _forward_axis0(view[:n])
            h = coarse.shape[0]
            view[:h] = coarse
            view[h:n] = details
            n = h
    return CoefficientSet(plan, out)


def idwt_nd(coeffs: CoefficientSet) -> np.ndarray:
    """Inverse of :func:`dwt_nd`."""
    plan = coeffs.plan
    values = np.asarray(coeffs.values, dtype=np.float64)
    if values.shape != plan.dims:
        raise PlanError(f"coefficient shape {values.shape} does not match plan {plan.dims}")
    out = values.copy()
    for ax in reversed(range(out.ndim)):
        view = np.moveaxis(out, ax, 0)
        k = scale_of_length(view.shape[0])
        for lev in reversed(range(plan.levels)):
            h = 2 ** (k - lev - 1) + 1
            n = 2 ** (k - lev) + 1
            view[:n] = _inverse_axis0(view[:h], view[h:n])
    return out


def interleave(coarse: np.ndarray, details: np.ndarray) -> np.ndarray:
    """Pack one step's output as ``(s0, d0, s1, d1, ..., s_last)``."""
    v = np.empty(len(coarse) + len(details))
    v[0::2] = coarse
    v[1::2] = details
    return v


def analysis_matrix(j: int) -> np.ndarray:
    """Dense matrix ``A`` of one step, ``interleave(*dwt_step_1d(u)) == A @ u``."""
    if not 1 <= j <= 10:
        raise InvalidLengthError(f"scale j={j} outside [1, 10]")
    n = 2**j + 1
    a = np.empty((n, n))
    basis = np.eye(n)
    for r in range(n):
        a[:, r] = interleave(*dwt_step_1d(basis[r]))
    return a


def synthesis_matrix(j: int) -> np.ndarray:
    """Dense matrix of the inverse step, acting on interleaved vectors."""
    if not 1 <= j <= 10:
        raise InvalidLengthError(f"scale j={j} outside [1, 10]")
    n = 2**j + 1
    a = np.empty((n, n))
    basis = np.eye(n)
    for r in range(n):
        e = basis[r]
        a[:, r] = idwt_step_1d(e[0::2], e[1::2])
    return a


def write_matrix_csv(path, matrix: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in matrix:
            w.writerow([repr(float(x)) for x in row])


def trapezoid_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w


def trapezoid_mass(s: np.ndarray) -> float:
    """Tensor-product trapezoid sum with half weights on every boundary face."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim == 1:
        return float((s[0] + s[-1]) / 2 + s[1:-1].sum())
    out = s
    for ax in reversed(range(s.ndim)):
        out = np.tensordot(out, trapezoid_weights(s.shape[ax]), axes=([ax], [0]))
    return float(out)
