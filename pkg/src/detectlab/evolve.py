"""Crank-Nicolson time evolution for the detection models.

One step solves (1 + i dt H / 2 hbar) psi_next = (1 - i dt H / 2 hbar) psi
with a tridiagonal H: the three-point Laplacian plus the detector term.
The soft detector contributes -i v on the diagonal of every node with
x >= 0; the hard detector enters through its boundary row. Ghost-node
elimination keeps the boundary rows second order:

    Neumann     psi_{N+1} = psi_{N-1}
    Robin       psi_{N+1} = psi_{N-1} + 2 dx alpha psi_N
    absorbing   psi_{N+1} = psi_{N-1} + 2 dx (nu + i kappa) psi_N

Rigid (Dirichlet) nodes are frozen: their row and column are cleared and
the solve forces them to zero, which keeps H symmetric under the
trapezoid inner product. With that inner product the scheme obeys an
exact discrete continuity identity per step,

    N^2_next - N^2_prev = (2 dt / hbar) Im <phi, H phi>,
    phi = (psi_next + psi_prev) / 2,

so the norm is conserved to rounding without absorption and strictly
nonincreasing with it.

External interface: write_time_series_csv emits the columns
t, norm_sq, rho_T_norm, rho_T_flux, rho_T_pointwise (flux and pointwise
rates are defined for the hard detector only and left empty otherwise);
write_place_density_csv emits x, t, density rows for the soft detector.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.linalg import LinAlgError

from .core import (
    NATURAL_UNITS,
    AbsorbingBoundary,
    DetectorSpec,
    Dirichlet,
    EDGE_GUARD_RATIO,
    Grid,
    HardWall,
    ImaginaryPotential,
    Neumann,
    PhysicalConstants,
    Robin,
    WaveState,
    trapezoid_weights,
)

__all__ = [
    "AccuracyWarning",
    "DiscreteHamiltonian",
    "build_hamiltonian",
    "step",
    "run",
    "flux",
    "default_time_step",
    "Snapshots",
    "PlaceDensity",
    "TimeSeries",
    "write_time_series_csv",
    "write_place_density_csv",
]


class AccuracyWarning(UserWarning):
    """Step size too coarse for the fastest decay scale in the model."""


@dataclass(frozen=True)
class DiscreteHamiltonian:
    """Tridiagonal discretization of one detector model on a grid."""

    grid: Grid
    model: DetectorSpec
    constants: PhysicalConstants
    diag: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    coupling: float
    frozen_nodes: tuple[int, ...]

    def matvec(self, psi: np.ndarray) -> np.ndarray:
        out = self.diag * psi
        out[:-1] += self.upper * psi[1:]
        out[1:] += self.lower * psi[:-1]
        return out


def _require_edge(grid: Grid, value: float, what: str) -> None:
    if abs(grid.x_max - value) > 1e-12 * max(1.0, abs(value)):
        raise ValueError(f"grid must end at {what} = {value}, got x_max = {grid.x_max}")


def build_hamiltonian(
    grid: Grid,
    model: DetectorSpec,
    constants: PhysicalConstants = NATURAL_UNITS,
) -> DiscreteHamiltonian:
    """Tridiagonal H for the model; validates grid / model alignment.

    The left edge is always a frozen rigid node (the domain is truncated
    far from the action there). The soft detector needs the grid to end
    exactly at the wall L, with a node at x = 0; the hard detector and
    the plain wall need the grid to end at 0.
    """
    n = grid.n
    dx = grid.dx
    t = -(constants.hbar**2) / (2 * constants.mass * dx * dx)
    diag = np.full(n, -2 * t, dtype=complex)
    lower = np.full(n - 1, t, dtype=complex)
    upper = np.full(n - 1, t, dtype=complex)
    frozen = [0]

    if isinstance(model, ImaginaryPotential):
        if not math.isfinite(model.L):
            raise ValueError("a half-infinite absorbing region cannot be discretized")
        _require_edge(grid, model.L, "the wall position L")
        j0 = grid.index_at(0.0)
        diag[j0:] += -1j * model.v
        wall = model.right_wall
        if isinstance(wall, Neumann):
            lower[-1] = 2 * t
        elif isinstance(wall, Robin):
            lower[-1] = 2 * t
            diag[-1] += 2 * dx * t * wall.alpha
        elif isinstance(wall, Dirichlet):
            frozen.append(n - 1)
        else:
            raise TypeError(f"unknown wall condition {wall!r}")
    elif isinstance(model, AbsorbingBoundary):
        _require_edge(grid, 0.0, "the absorbing boundary")
        lower[-1] = 2 * t
        diag[-1] += 2 * dx * t * complex(model.nu, model.kappa)
    elif isinstance(model, HardWall):
        _require_edge(grid, 0.0, "the wall")
        frozen.append(n - 1)
    else:
        raise TypeError(f"unknown detector model {model!r}")

    for j in frozen:
        diag[j] = 0
        if j > 0:
            lower[j - 1] = 0
            upper[j - 1] = 0
        if j < n - 1:
            upper[j] = 0
            lower[j] = 0

    return DiscreteHamiltonian(
        grid=grid,
        model=model,
        constants=constants,
        diag=diag,
        lower=lower,
        upper=upper,
        coupling=t,
        frozen_nodes=tuple(frozen),
    )


class _CrankNicolson:
    """Banded forward matrix and backward solve for a fixed step size."""

    def __init__(self, ham: DiscreteHamiltonian, dt: float):
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        hbar = ham.constants.hbar
        rate = dt * float(np.max(-ham.diag.imag)) / hbar
        if rate > 1:
            warnings.warn(
                f"dt resolves the fastest absorption scale poorly "
                f"(dt * max|Im H| / hbar = {rate:.2f} > 1); expect degraded accuracy",
                AccuracyWarning,
                stacklevel=3,
            )
        alpha = 1j * dt / (2 * hbar)
        n = ham.grid.n
        ab = np.zeros((3, n), dtype=complex)
        ab[0, 1:] = alpha * ham.upper
        ab[1, :] = 1 + alpha * ham.diag
        ab[2, :-1] = alpha * ham.lower
        # Frozen rows reduce to the identity; the rhs is zeroed below.
        for j in ham.frozen_nodes:
            ab[1, j] = 1
        self._ab = ab
        self._bd = 1 - alpha * ham.diag
        self._bu = -alpha * ham.upper
        self._bl = -alpha * ham.lower
        self._frozen = np.asarray(ham.frozen_nodes, dtype=int)
        self._dt = dt

    def advance(self, psi: np.ndarray) -> np.ndarray:
        rhs = self._bd * psi
        rhs[:-1] += self._bu * psi[1:]
        rhs[1:] += self._bl * psi[:-1]
        rhs[self._frozen] = 0
        try:
            out = solve_banded((1, 1), self._ab, rhs, check_finite=False, overwrite_b=True)
        except LinAlgError as err:
            raise RuntimeError(
                f"Crank-Nicolson system singular at dt = {self._dt}"
            ) from err
        return out


def step(state: WaveState, hamiltonian: DiscreteHamiltonian, dt: float) -> WaveState:
    """One Crank-Nicolson step of the state."""
    if state.grid != hamiltonian.grid:
        raise ValueError("state and Hamiltonian live on different grids")
    out = _CrankNicolson(hamiltonian, dt).advance(np.array(state.amplitudes))
    return WaveState(state.grid, out, state.time + dt)


def default_time_step(
    model: DetectorSpec,
    grid: Grid,
    k0: float,
    constants: PhysicalConstants = NATURAL_UNITS,
) -> float:
    """Conservative dt: 1e-2 of the phase and absorption time scales.

    For the hard detector the absorbing boundary row scales like
    hbar kappa / (m dx), so dt is capped at half its inverse.
    """
    hbar, m = constants.hbar, constants.mass
    candidates = []
    if k0 != 0:
        candidates.append(1e-2 * 2 * m / (hbar * k0 * k0))
    if isinstance(model, ImaginaryPotential) and model.v > 0:
        candidates.append(1e-2 * hbar / model.v)
    elif isinstance(model, AbsorbingBoundary):
        candidates.append(0.5 * m * grid.dx / (hbar * model.kappa))
    if not candidates:
        raise ValueError("no intrinsic time scale; give dt explicitly")
    return min(candidates)


@dataclass(frozen=True)
class Snapshots:
    """Full wavefunctions stored at a stride of steps (first and last kept)."""

    times: np.ndarray
    grid: Grid
    psi: np.ndarray  # shape (len(times), grid.n)


@dataclass(frozen=True)
class PlaceDensity:
    """Detection-place density (2 v / hbar) |psi|^2 on the absorbing nodes."""

    times: np.ndarray
    x: np.ndarray
    density: np.ndarray  # shape (len(times), len(x))


@dataclass(frozen=True)
class TimeSeries:
    """Per-step record of one evolution run.

    The arrival-time densities live on step midpoints: rho_t_norm is the
    discrete norm loss -d(N^2)/dt, exact for the scheme; rho_t_flux and
    rho_t_pointwise are the boundary flux and hbar kappa / m |psi(0)|^2
    of the hard detector, averaged onto the same midpoints, None for the
    other models. step_times / step_norm_sq / step_flux hold the raw
    per-step values including both endpoints.
    """

    times: np.ndarray
    norm_sq: np.ndarray
    rho_t_norm: np.ndarray
    rho_t_flux: np.ndarray | None
    rho_t_pointwise: np.ndarray | None
    step_times: np.ndarray
    step_norm_sq: np.ndarray
    step_flux: np.ndarray | None
    terminal_norm_sq: float
    plateaued: bool
    snapshots: Snapshots | None = None
    place_density: PlaceDensity | None = None

    @property
    def detection_probability(self) -> float:
        return 1.0 - self.terminal_norm_sq


def _one_sided_derivative(psi: np.ndarray, dx: float) -> complex:
    # Second-order backward stencil at the last node.
    return (3 * psi[-1] - 4 * psi[-2] + psi[-3]) / (2 * dx)


def flux(state: WaveState, node: int, constants: PhysicalConstants = NATURAL_UNITS) -> float:
    """Probability flux (hbar / m) Im(conj(psi) psi') at one node.

    Centered difference at interior nodes, second-order one-sided at the
    two edge nodes.
    """
    psi = state.amplitudes
    dx = state.grid.dx
    n = state.grid.n
    if not 0 <= node < n:
        raise IndexError(f"node {node} outside grid of {n} nodes")
    if node == 0:
        d = -(3 * psi[0] - 4 * psi[1] + psi[2]) / (2 * dx)
    elif node == n - 1:
        d = _one_sided_derivative(psi, dx)
    else:
        d = (psi[node + 1] - psi[node - 1]) / (2 * dx)
    return float(constants.hbar / constants.mass * (np.conj(psi[node]) * d).imag)


def _record_steps(n_steps: int, stride: int | None) -> list[int]:
    if stride is None:
        return []
    if stride < 1:
        raise ValueError(f"stride must be a positive integer, got {stride}")
    marks = list(range(0, n_steps + 1, stride))
    if marks[-1] != n_steps:
        marks.append(n_steps)
    return marks


def run(
    initial: WaveState,
    model: DetectorSpec,
    dt: float,
    n_steps: int,
    constants: PhysicalConstants = NATURAL_UNITS,
    *,
    snapshot_stride: int | None = None,
    place_density_stride: int | None = None,
    left_edge_guard: bool = True,
) -> TimeSeries:
    """Evolve the initial state for n_steps and collect the time series.

    Raises if the initial amplitude at the truncated left edge exceeds
    EDGE_GUARD_RATIO of the peak (disable with left_edge_guard=False,
    e.g. for states that legitimately vanish there to rounding only) or
    if the squared norm ever grows by more than 1e-10 in one step.
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    ham = build_hamiltonian(initial.grid, model, constants)
    psi = np.array(initial.amplitudes)
    peak = float(np.max(np.abs(psi)))
    if left_edge_guard and abs(psi[0]) > EDGE_GUARD_RATIO * peak:
        raise ValueError(
            "initial state has support at the truncated left edge; enlarge the "
            "domain or pass left_edge_guard=False"
        )
    stepper = _CrankNicolson(ham, dt)
    w = trapezoid_weights(initial.grid)
    t0 = initial.time
    hbar, m = constants.hbar, constants.mass

    hard = isinstance(model, AbsorbingBoundary)
    soft = isinstance(model, ImaginaryPotential)
    snap_marks = set(_record_steps(n_steps, snapshot_stride))
    place_marks = set(_record_steps(n_steps, place_density_stride))
    if place_marks and not soft:
        raise ValueError("place density is defined for the soft detector only")
    j0 = ham.grid.index_at(0.0) if soft else None

    norms = np.empty(n_steps + 1)
    fluxes = np.empty(n_steps + 1) if hard else None
    pointwise = np.empty(n_steps + 1) if hard else None
    snap_t, snap_psi = [], []
    place_t, place_rho = [], []
    dx = initial.grid.dx

    def record(s: int) -> None:
        norms[s] = float(w @ (psi.real**2 + psi.imag**2))
        if hard:
            d = _one_sided_derivative(psi, dx)
            fluxes[s] = hbar / m * float((np.conj(psi[-1]) * d).imag)
            pointwise[s] = hbar * model.kappa / m * float(abs(psi[-1]) ** 2)
        if s in snap_marks:
            snap_t.append(t0 + s * dt)
            snap_psi.append(psi.copy())
        if s in place_marks:
            place_t.append(t0 + s * dt)
            place_rho.append(2 * model.v / hbar * (psi.real[j0:] ** 2 + psi.imag[j0:] ** 2))

    record(0)
    for s in range(1, n_steps + 1):
        psi = stepper.advance(psi)
        record(s)
        if norms[s] > norms[s - 1] + 1e-10:
            raise RuntimeError(
                f"squared norm grew by {norms[s] - norms[s - 1]:.3e} at step {s}; "
                "the discretization is unstable for these parameters"
            )

    mid_times = t0 + (np.arange(n_steps) + 0.5) * dt
    rho_norm = -np.diff(norms) / dt
    rho_max = float(rho_norm.max(initial=0.0))
    series = TimeSeries(
        times=mid_times,
        norm_sq=(norms[:-1] + norms[1:]) / 2,
        rho_t_norm=rho_norm,
        rho_t_flux=(fluxes[:-1] + fluxes[1:]) / 2 if hard else None,
        rho_t_pointwise=(pointwise[:-1] + pointwise[1:]) / 2 if hard else None,
        step_times=t0 + np.arange(n_steps + 1) * dt,
        step_norm_sq=norms,
        step_flux=fluxes,
        terminal_norm_sq=float(norms[-1]),
        plateaued=bool(rho_max <= 0 or rho_norm[-1] <= 1e-3 * rho_max),
        snapshots=(
            Snapshots(np.array(snap_t), initial.grid, np.array(snap_psi))
            if snap_marks
            else None
        ),
        place_density=(
            PlaceDensity(np.array(place_t), initial.grid.x[j0:].copy(), np.array(place_rho))
            if place_marks
            else None
        ),
    )
    return series


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def write_time_series_csv(series: TimeSeries, path) -> None:
    """Midpoint time series with the fixed column contract.

    Columns: t, norm_sq, rho_T_norm, rho_T_flux, rho_T_pointwise. The
    last two are empty unless the run used the hard detector.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "norm_sq", "rho_T_norm", "rho_T_flux", "rho_T_pointwise"])
        fx = series.rho_t_flux
        pw = series.rho_t_pointwise
        for i, t in enumerate(series.times):
            writer.writerow(
                [
                    _fmt(t),
                    _fmt(series.norm_sq[i]),
                    _fmt(series.rho_t_norm[i]),
                    _fmt(fx[i] if fx is not None else None),
                    _fmt(pw[i] if pw is not None else None),
                ]
            )


def write_place_density_csv(series: TimeSeries, path) -> None:
    """Detection-place density rows: x, t, density (time-major order)."""
    pd = series.place_density
    if pd is None:
        raise ValueError("run was made without place_density_stride; nothing to write")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "t", "density"])
        for i, t in enumerate(pd.times):
            for j, x in enumerate(pd.x):
                writer.writerow([_fmt(x), _fmt(t), _fmt(pd.density[i, j])])
