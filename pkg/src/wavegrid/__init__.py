"""Mass-conserving wavelet compression for finite-volume grids."""

from .config import ConfigError, SimConfig
from .patchgrid import PatchGrid, assemble, decompose, global_mass, read_wgrd, sync_ghosts, write_wgrd
from .threshold import ThresholdSpec, apply_threshold, band_threshold
from .wavelet import (
    CoefficientSet,
    WaveletPlan,
    analysis_matrix,
    dwt_nd,
    dwt_step_1d,
    idwt_nd,
    idwt_step_1d,
    trapezoid_mass,
)

__all__ = [
    "CoefficientSet",
    "ConfigError",
    "PatchGrid",
    "SimConfig",
    "ThresholdSpec",
    "WaveletPlan",
    "analysis_matrix",
    "apply_threshold",
    "assemble",
    "band_threshold",
    "decompose",
    "dwt_nd",
    "dwt_step_1d",
    "global_mass",
    "idwt_nd",
    "idwt_step_1d",
    "read_wgrd",
    "sync_ghosts",
    "trapezoid_mass",
    "write_wgrd",
]
__version__ = "0.1.0"
