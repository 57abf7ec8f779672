"""Shared value types for one-dimensional detection models.

Physical constants, detector specifications, uniform grids, wave states,
and the trapezoid inner product used everywhere else in the package.

Three detector models share a common shape: free motion on a half-line,
with detection implemented either by an imaginary step potential of
strength v occupying [0, L] (soft detector), by an absorbing boundary
condition psi'(0) = (nu + i kappa) psi(0) at the origin (hard detector),
or by a plain reflecting wall (no detection, reference case).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

__all__ = [
    "PhysicalConstants",
    "NATURAL_UNITS",
    "Neumann",
    "Robin",
    "Dirichlet",
    "WallCondition",
    "ImaginaryPotential",
    "AbsorbingBoundary",
    "HardWall",
    "DetectorSpec",
    "Grid",
    "grid_for_domain",
    "WaveState",
    "GaussianPacketSpec",
    "make_gaussian_packet",
    "trapezoid_weights",
    "norm_squared",
    "inner_product",
    "EDGE_GUARD_RATIO",
]

# Amplitude at a domain edge above this fraction of the peak means the
# state is not numerically supported inside the box.
EDGE_GUARD_RATIO = 1e-8


@dataclass(frozen=True)
class PhysicalConstants:
    """Planck constant and particle mass. Defaults are natural units."""

    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self) -> None:
        if not (self.hbar > 0 and math.isfinite(self.hbar)):
            raise ValueError(f"hbar must be positive and finite, got {self.hbar}")
        if not (self.mass > 0 and math.isfinite(self.mass)):
            raise ValueError(f"mass must be positive and finite, got {self.mass}")


NATURAL_UNITS = PhysicalConstants()


@dataclass(frozen=True)
class Neumann:
    """Reflecting wall: zero normal derivative at the right edge."""


@dataclass(frozen=True)
class Robin:
    """Mixed wall: psi'(L) = alpha * psi(L) at the right edge."""

    alpha: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be finite, got {self.alpha}")


@dataclass(frozen=True)
class Dirichlet:
    """Rigid wall: psi(L) = 0 at the right edge."""


WallCondition = Union[Neumann, Robin, Dirichlet]


@dataclass(frozen=True)
class ImaginaryPotential:
    """Soft detector: potential -i v on [0, L], wall condition at L.

    The absorbing region includes its left endpoint, so a grid node at
    x = 0 carries the full potential. L = inf is a valid specification
    for closed-form mode work but cannot be discretized.
    """

    v: float
    L: float
    right_wall: WallCondition = Neumann()

    def __post_init__(self) -> None:
        if not (self.v >= 0 and math.isfinite(self.v)):
            raise ValueError(f"detector strength v must be >= 0 and finite, got {self.v}")
        if not self.L > 0:
            raise ValueError(f"detector length L must be positive, got {self.L}")


@dataclass(frozen=True)
class AbsorbingBoundary:
    """Hard detector: psi'(0) = (nu + i kappa) psi(0), domain (-inf, 0]."""

    kappa: float
    nu: float = 0.0

    def __post_init__(self) -> None:
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be positive and finite, got {self.kappa}")
        if not math.isfinite(self.nu):
            raise ValueError(f"nu must be finite, got {self.nu}")


@dataclass(frozen=True)
class HardWall:
    """No detector: reflecting Dirichlet wall at x = 0."""


DetectorSpec = Union[ImaginaryPotential, AbsorbingBoundary, HardWall]


@dataclass(frozen=True)
class Grid:
    """Uniform grid with n nodes, endpoints included."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self) -> None:
        if not self.x_max > self.x_min:
            raise ValueError(f"need x_max > x_min, got [{self.x_min}, {self.x_max}]")
        if self.n < 3:
            raise ValueError(f"grid needs at least 3 nodes, got {self.n}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @cached_property
    def x(self) -> np.ndarray:
        xs = np.linspace(self.x_min, self.x_max, self.n)
        xs.flags.writeable = False
        return xs

    def index_at(self, x0: float) -> int:
        """Index of the node at abscissa x0. Raises if no node lies there."""
        j = int(round((x0 - self.x_min) / self.dx))
        if not 0 <= j < self.n or abs(self.x[j] - x0) > 1e-6 * self.dx:
            raise ValueError(f"no grid node at x = {x0} (dx = {self.dx})")
        return j


def grid_for_domain(
    x_min: float,
    dx: float,
    x_max: float = 0.0,
    require_node_at: float | None = None,
) -> Grid:
    """Grid on [x_min', x_max] with spacing dx, snapping x_min outward.

    x_max is kept exact; x_min moves left (never right) so the extent is
    an integer number of cells. With require_node_at set, raises unless
    that abscissa lands on a node, which needs (x_max - point) / dx to be
    an integer.
    """
    if not dx > 0:
        raise ValueError(f"dx must be positive, got {dx}")
    if not x_max > x_min:
        raise ValueError(f"need x_max > x_min, got [{x_min}, {x_max}]")
    n_cells = math.ceil((x_max - x_min) / dx - 1e-9)
    grid = Grid(x_max - n_cells * dx, x_max, n_cells + 1)
    if require_node_at is not None:
        ratio = (x_max - require_node_at) / dx
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError(
                f"dx = {dx} leaves no grid node at x = {require_node_at}; "
                f"choose dx dividing {x_max - require_node_at}"
            )
    return grid


def trapezoid_weights(grid: Grid) -> np.ndarray:
    """Quadrature weights: dx at interior nodes, dx/2 at the endpoints."""
    w = np.full(grid.n, grid.dx)
    w[0] = w[-1] = grid.dx / 2
    return w


@dataclass(frozen=True)
class WaveState:
    """Complex amplitudes sampled on a grid at a fixed time."""

    grid: Grid
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        amp = np.array(self.amplitudes, dtype=complex, copy=True)
        if amp.shape != (self.grid.n,):
            raise ValueError(
                f"amplitudes shape {amp.shape} does not match grid with {self.grid.n} nodes"
            )
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)


def norm_squared(state: WaveState) -> float:
    """Trapezoid-rule squared norm of the state."""
    w = trapezoid_weights(state.grid)
    return float(np.sum(w * np.abs(state.amplitudes) ** 2))


def inner_product(bra: WaveState, ket: WaveState) -> complex:
    """Trapezoid-rule inner product, antilinear in the first argument."""
    if bra.grid != ket.grid:
        raise ValueError("inner product requires states on the same grid")
    w = trapezoid_weights(bra.grid)
    return complex(np.sum(w * np.conj(bra.amplitudes) * ket.amplitudes))


@dataclass(frozen=True)
class GaussianPacketSpec:
    """Center x0, width sigma, and mean wavenumber k0 of a Gaussian packet."""

    x0: float
    sigma: float
    k0: float

    def __post_init__(self) -> None:
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        if not (math.isfinite(self.x0) and math.isfinite(self.k0)):
            raise ValueError("x0 and k0 must be finite")


def make_gaussian_packet(grid: Grid, spec: GaussianPacketSpec) -> WaveState:
    """Normalized packet exp(-(x - x0)^2 / (4 sigma^2)) exp(i k0 x) at t = 0.

    Raises if the envelope at either grid edge exceeds EDGE_GUARD_RATIO
    times its peak: such a packet does not fit in the box.
    """
    x = grid.x
    envelope = np.exp(-((x - spec.x0) ** 2) / (4 * spec.sigma**2))
    peak = envelope.max()
    if envelope[0] > EDGE_GUARD_RATIO * peak or envelope[-1] > EDGE_GUARD_RATIO * peak:
        raise ValueError(
            f"packet (x0 = {spec.x0}, sigma = {spec.sigma}) touches the domain edge; "
            "enlarge the grid or shrink the packet"
        )
    amp = envelope * np.exp(1j * spec.k0 * x)
    w = trapezoid_weights(grid)
    amp /= math.sqrt(float(np.sum(w * np.abs(amp) ** 2)))
    return WaveState(grid, amp, 0.0)
