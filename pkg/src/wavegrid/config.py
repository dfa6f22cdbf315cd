from __future__ import annotations

from dataclasses import dataclass, field, replace

from .threshold import MODES


class ConfigError(ValueError):
    """Invalid run configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to reproduce one simulation run.

    ``nx`` is the number of grid points per axis, shared periodic boundary
    layer included, so the domain holds ``nx - 1`` distinct cells per axis
    and the grid step is ``length / (nx - 1)``.
    """

    scheme: str = "transport"
    nx: int = 129
    splits: tuple = (2, 2)
    cfl: float = 0.45
    t_end: float = 0.5
    alpha: float = 0.9
    beta: float = 0.9
    g: float = 9.81
    length: float = 1.0
    levels: int = 4
    mode: str = "capped"
    threshold: float = 0.01
    codec: str = "csr"
    chunk_size: int = 64 * 1024
    value_width: int = 8
    compression: bool = True
    strict: bool = False
    threads: int = 1
    snapshot_at: tuple = ()
    seed: int = 0
    ratio_window: float | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.scheme not in ("transport", "swe"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if not 0 < self.cfl <= 1:
            raise ConfigError(f"CFL must be in (0, 1], got {self.cfl}")
        if self.t_end < 0:
            raise ConfigError("t_end must be >= 0")
        if self.length <= 0:
            raise ConfigError("domain length must be > 0")
        if self.scheme == "swe" and len(self.splits) != 2:
            raise ConfigError("shallow water runs are two-dimensional")
        if self.scheme == "transport" and len(self.splits) not in (2, 3):
            raise ConfigError("transport runs need 2 or 3 split counts")
        if self.mode not in MODES:
            raise ConfigError(f"unknown threshold mode {self.mode!r}")
        if not self.threshold >= 0:
            raise ConfigError("threshold must be >= 0")
        if self.codec not in ("csr", "lz"):
            raise ConfigError(f"unknown codec {self.codec!r}")
        if self.chunk_size < 1:
            raise ConfigError("chunk size must be positive")
        if self.value_width not in (4, 8):
            raise ConfigError("value width must be 4 or 8 bytes")
        if self.levels < 0:
            raise ConfigError("levels must be >= 0")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.nx < 3:
            raise ConfigError("nx must be >= 3")
        for p in self.splits:
            m = (self.nx - 1) // p if p > 0 else 0
            if p < 1 or (self.nx - 1) % p or m & (m - 1):
                raise ConfigError(f"nx={self.nx} cannot be split into {p} patches of 2**k+1 points")
            if self.levels > m.bit_length() - 1:
                raise ConfigError(f"{self.levels} levels too deep for patches of {m + 1} points")

    @property
    def ndim(self) -> int:
        return len(self.splits)

    @property
    def dx(self) -> float:
        return self.length / (self.nx - 1)

    @property
    def components(self) -> int:
        return 3 if self.scheme == "swe" else 1

    @property
    def velocity(self) -> tuple:
        v = (self.alpha, self.beta, self.extra.get("gamma", 0.0))
        return v[: self.ndim]

    def with_(self, **kw) -> "SimConfig":
        return replace(self, **kw)
