"""Finite-volume update, numerical fluxes and reference solutions.

Fluxes are called as ``Q(WL, WR, N)`` where ``WL`` and ``WR`` are arrays of
shape ``(m, ...)`` (m conserved components) and ``N`` is a unit axis
direction given as a tuple.  On a 2-D grid the four directions are
``N0=(1,0), N1=(-1,0), N2=(0,1), N3=(0,-1)``.
"""

from __future__ import annotations

import math

import numpy as np

from .config import ConfigError, SimConfig

H_MIN = 1e-12


class DomainError(ValueError):
    """Non-physical state, e.g. a dry or negative water depth."""


class RiemannError(RuntimeError):
    """The exact Riemann solver failed to converge."""


def directions(ndim: int = 2) -> list:
    out = []
    for ax in range(ndim):
        for sign in (1, -1):
            n = [0] * ndim
            n[ax] = sign
            out.append(tuple(n))
    return out


DIRECTIONS = directions(2)


def fv_step(values: np.ndarray, flux, dt: float, dx: float) -> np.ndarray:
    """One explicit FV step on a patch with a synchronized ghost ring.

    Every cell except the outermost ring is updated; the result is a new
    array and ``values`` is left untouched.
    """
    ndim = values.ndim - 1
    inner = (slice(None),) + (slice(1, -1),) * ndim
    w = values[inner]
    new = values.copy()
    acc = w.copy()
    ratio = dt / dx
    for n in directions(ndim):
        nb = (slice(None),) + tuple(slice(1 + k, values.shape[i + 1] - 1 + k) for i, k in enumerate(n))
        acc -= ratio * flux(w, values[nb], n)
    new[inner] = acc
    return new


class UpwindFlux:
    """Upwind flux for linear transport at constant velocity."""

    def __init__(self, velocity):
        self.velocity = tuple(float(v) for v in velocity)

    def speed(self, n) -> float:
        return sum(v * k for v, k in zip(self.velocity, n))

    def __call__(self, wl, wr, n):
        s = self.speed(n)
        return wl * max(s, 0.0) + wr * min(s, 0.0)

    def physical(self, w, n):
        return w * self.speed(n)


def flux_upwind(wl, wr, n, alpha: float, beta: float):
    return UpwindFlux((alpha, beta))(wl, wr, n)


# --- shallow water -----------------------------------------------------------


def swe_physical_flux(w, n, g: float = 9.81):
    h, hu, hv = w[0], w[1], w[2]
    un = (hu * n[0] + hv * n[1]) / h
    p = 0.5 * g * h * h
    return np.stack([h * un, hu * un + p * n[0], hv * un + p * n[1]])


def _depth_function(h, hk, g):
    """Wave curve f_k(h) and its derivative (rarefaction if h <= hk, else shock)."""
    rare = h <= hk
    sq = np.sqrt(g * h)
    s = np.sqrt(g * (h + hk) / (2 * h * hk))
    f = np.where(rare, 2 * (sq - np.sqrt(g * hk)), (h - hk) * s)
    df = np.where(rare, np.sqrt(g / h), s - (h - hk) * g / (4 * h * h * s))
    return f, df


def riemann_star(hl, ul, hr, ur, g: float = 9.81, tol: float = 1e-10, maxiter: int = 100):
    """Star-region depth and normal velocity of the 1-D shallow-water Riemann problem.

    Newton iteration on ``f_L(h) + f_R(h) + uR - uL = 0`` started from the
    two-rarefaction estimate; stops once every ``|dh| < tol``.
    """
    hl, ul, hr, ur = (np.asarray(a, dtype=np.float64) for a in (hl, ul, hr, ur))
    if np.any(hl <= H_MIN) or np.any(hr <= H_MIN):
        raise DomainError(f"water depth must be > {H_MIN}; min(hL)={hl.min()}, min(hR)={hr.min()}")
    al, ar = np.sqrt(g * hl), np.sqrt(g * hr)
    du = ur - ul
    if np.any(2 * (al + ar) <= du):
        raise DomainError("initial data create a dry region; dry states are unsupported")
    h = ((al + ar) / 2 - du / 4) ** 2 / g
    for _ in range(maxiter):
        fl, dfl = _depth_function(h, hl, g)
        fr, dfr = _depth_function(h, hr, g)
        step = (fl + fr + du) / (dfl + dfr)
        h_new = h - step
        h_new = np.where(h_new > 0, h_new, h / 2)
        delta = np.abs(h_new - h)
        h = h_new
        if np.all(delta < tol):
            break
    else:
        worst = int(np.argmax(delta))
        raise RiemannError(
            f"Newton iteration did not converge in {maxiter} steps "
            f"(max |dh|={delta.max():.3e} at flat index {worst}: "
            f"hL={np.ravel(hl * np.ones_like(h))[worst]}, hR={np.ravel(hr * np.ones_like(h))[worst]})"
        )
    fl, _ = _depth_function(h, hl, g)
    fr, _ = _depth_function(h, hr, g)
    u = 0.5 * (ul + ur) + 0.5 * (fr - fl)
    return h, u


def sample_riemann(hl, ul, vl, hr, ur, vr, g: float = 9.81, xi: float = 0.0):
    """Exact solution ``(h, u, v)`` at ``x/t = xi``; ``u`` is the normal velocity."""
    hs, us = riemann_star(hl, ul, hr, ur, g)
    al, ar = np.sqrt(g * hl), np.sqrt(g * hr)
    a_s = np.sqrt(g * hs)

    # left wave
    shock_l = hs > hl
    sl = ul - al * np.sqrt(0.5 * hs * (hs + hl)) / hl
    head_l = ul - al
    tail_l = us - a_s
    fan_u_l = (ul + 2 * al + 2 * xi) / 3
    fan_a_l = (ul + 2 * al - xi) / 3
    left_is_l = np.where(shock_l, xi <= sl, xi <= head_l)
    left_in_fan = ~shock_l & (xi > head_l) & (xi < tail_l)
    h_left = np.where(left_is_l, hl, np.where(left_in_fan, fan_a_l**2 / g, hs))
    u_left = np.where(left_is_l, ul, np.where(left_in_fan, fan_u_l, us))

    # right wave
    shock_r = hs > hr
    sr = ur + ar * np.sqrt(0.5 * hs * (hs + hr)) / hr
    head_r = ur + ar
    tail_r = us + a_s
    fan_u_r = (ur - 2 * ar + 2 * xi) / 3
    fan_a_r = (-ur + 2 * ar + xi) / 3
    right_is_r = np.where(shock_r, xi >= sr, xi >= head_r)
    right_in_fan = ~shock_r & (xi < head_r) & (xi > tail_r)
    h_right = np.where(right_is_r, hr, np.where(right_in_fan, fan_a_r**2 / g, hs))
    u_right = np.where(right_is_r, ur, np.where(right_in_fan, fan_u_r, us))

    on_left = xi <= us
    h = np.where(on_left, h_left, h_right)
    u = np.where(on_left, u_left, u_right)
    v = np.where(on_left, vl, vr)
    return h, u, v


class GodunovFlux:
    """Godunov flux for 2-D shallow water from the exact Riemann solution."""

    def __init__(self, g: float = 9.81):
        self.g = float(g)

    def __call__(self, wl, wr, n):
        nx, ny = n
        hl, hr = wl[0], wr[0]
        if np.any(hl <= H_MIN) or np.any(hr <= H_MIN):
            raise DomainError("water depth must stay positive")
        unl = (wl[1] * nx + wl[2] * ny) / hl
        utl = (-wl[1] * ny + wl[2] * nx) / hl
        unr = (wr[1] * nx + wr[2] * ny) / hr
        utr = (-wr[1] * ny + wr[2] * nx) / hr
        h, un, ut = sample_riemann(hl, unl, utl, hr, unr, utr, self.g)
        fn = h * un * un + 0.5 * self.g * h * h
        ft = h * un * ut
        return np.stack([h * un, fn * nx - ft * ny, fn * ny + ft * nx])

    def physical(self, w, n):
        return swe_physical_flux(w, n, self.g)


def flux_godunov_swe(wl, wr, n, g: float = 9.81):
    return GodunovFlux(g)(np.asarray(wl, float), np.asarray(wr, float), n)


# --- time step and reference solutions ---------------------------------------


def cfl_dt(values, config: SimConfig) -> float:
    """Stable step from the CFL condition.

    ``values`` is an iterable of ``(m, ...)`` state arrays (e.g. the logical
    blocks of every patch); only shallow water reads it.
    """
    if not config.cfl > 0:
        raise ConfigError("CFL must be > 0")
    if config.scheme == "transport":
        vmax = max(abs(v) for v in config.velocity)
        if vmax == 0:
            raise ConfigError("transport velocity is zero")
        return config.cfl * config.dx / vmax
    speed = 0.0
    for w in values:
        h = w[0]
        if np.any(h <= H_MIN):
            raise DomainError("water depth must stay positive")
        c = np.sqrt(config.g * h)
        speed = max(speed, float(np.max(np.abs(w[1] / h) + c)), float(np.max(np.abs(w[2] / h) + c)))
    return config.cfl * config.dx / speed


def node_coordinates(config: SimConfig) -> np.ndarray:
    return np.arange(config.nx) * config.dx


def _periodic_offset(x, centre, length):
    return np.mod(x - centre + length / 2, length) - length / 2


def exact_transport(t: float, config: SimConfig) -> np.ndarray:
    """Periodic Gaussian ``1 + exp(-30 r**2)`` centred mid-domain, moved by ``velocity * t``.

    Returns a ``(1, nx, ..., nx)`` field on the grid nodes.
    """
    x = node_coordinates(config)
    centre = config.length / 2
    r2 = 0.0
    for ax, v in enumerate(config.velocity):
        d = _periodic_offset(x - v * t, centre, config.length)
        shape = [1] * config.ndim
        shape[ax] = -1
        r2 = r2 + (d * d).reshape(shape)
    return (1.0 + np.exp(-30.0 * r2))[None]


def dam_break(config: SimConfig, h_in: float = 2.0, h_out: float = 1.0, side: float = 0.5) -> np.ndarray:
    """Still water with a raised centred square column; ``(3, nx, nx)``."""
    x = node_coordinates(config)
    inside = np.abs(x - config.length / 2) <= side / 2
    sq = inside[:, None] & inside[None, :]
    w = np.zeros((3, config.nx, config.nx))
    w[0] = np.where(sq, h_in, h_out)
    return w


def initial_field(config: SimConfig) -> np.ndarray:
    if config.scheme == "transport":
        return exact_transport(0.0, config)
    return dam_break(config)


def make_flux(config: SimConfig):
    if config.scheme == "transport":
        return UpwindFlux(config.velocity)
    return GodunovFlux(config.g)


def l2_error(sim: np.ndarray, exact: np.ndarray, size=None) -> float:
    """Cell-volume-scaled sum of squared differences (no square root)."""
    sim = np.asarray(sim, dtype=np.float64)
    exact = np.asarray(exact, dtype=np.float64)
    if sim.shape != exact.shape:
        raise ValueError("sim and exact shapes differ")
    if size is None:
        size = (1.0,) * sim.ndim
    volume = math.prod(size) / math.prod(sim.shape)
    return float(volume * np.sum((sim - exact) ** 2))
