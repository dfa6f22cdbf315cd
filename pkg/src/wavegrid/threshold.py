"""Scale-dependent nullification of wavelet details.

Scale indices are normalized per axis so that the coarsest detail band is 0
and each finer band adds 1; sample positions count as 0.  ``c`` is therefore
the threshold of the coarsest details in every mode.

Note on ``accumulation``: finer bands get *larger* thresholds,
``c * alpha ** sum(j)``, the same direction as ``capped``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .wavelet import CoefficientSet

MODES = ("constant", "accumulation", "capped")


class ThresholdError(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdSpec:
    c: float = 0.0
    mode: str = "capped"
    alpha: float = 2.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ThresholdError(f"unknown threshold mode {self.mode!r}")
        if not self.c >= 0:
            raise ThresholdError("threshold c must be >= 0")
        if not self.alpha > 1:
            raise ThresholdError("alpha must be > 1")


def band_threshold(scales: Sequence[int], spec: ThresholdSpec) -> float:
    if spec.mode not in MODES:
        raise ThresholdError(f"unknown threshold mode {spec.mode!r}")
    if spec.mode == "constant":
        return float(spec.c)
    if spec.mode == "capped":
        return float(spec.c * spec.alpha ** max(scales))
    return float(spec.c * spec.alpha ** sum(scales))


def threshold_field(coeffs: CoefficientSet, spec: ThresholdSpec) -> np.ndarray:
    """Per-coefficient threshold, broadcast from the per-axis scale indices."""
    ndim = len(coeffs.plan.dims)
    combined = np.zeros(coeffs.plan.dims, dtype=np.int64)
    for ax in range(ndim):
        _, sc = coeffs.axis_bands(ax)
        shape = [1] * ndim
        shape[ax] = -1
        sc = sc.reshape(shape)
        if spec.mode == "capped":
            combined = np.maximum(combined, sc)
        else:
            combined = combined + sc
    if spec.mode == "constant":
        return np.full(coeffs.plan.dims, float(spec.c))
    return spec.c * spec.alpha ** combined.astype(np.float64)


def apply_threshold(coeffs: CoefficientSet, spec: ThresholdSpec) -> int:
    """Zero every detail with ``|d| < threshold`` in place.

    Returns how many detail coefficients fell under their threshold (those
    already equal to zero included).  Samples are never touched.
    """
    if spec.c == 0:
        return 0
    mask = coeffs.detail_mask() & (np.abs(coeffs.values) < threshold_field(coeffs, spec))
    coeffs.values[mask] = 0.0
    return int(mask.sum())
