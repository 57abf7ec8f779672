"""Trajectory sampling on top of a stored evolution.

Trajectories follow the probability velocity field v = J / |psi|^2 built
from the snapshots of a run; positions start distributed as |psi_0|^2.
Integration is a midpoint (RK2) rule with the fields interpolated
linearly in x and t between snapshots.

Detection is model specific. With the soft detector a trajectory inside
the absorbing region is killed at the constant rate 2 v / hbar; each
substep draws one uniform number, compares it with the exposure
1 - exp(-rate * dwell), and on detection converts the same number into
the exact conditional detection time inside the dwell window, so the
recorded place always lies in [0, L]. With the hard detector a
trajectory is detected the moment it reaches the boundary x = 0 and the
place is 0 by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    AbsorbingBoundary,
    DetectorSpec,
    ImaginaryPotential,
    NATURAL_UNITS,
    PhysicalConstants,
    WaveState,
)
from .evolve import TimeSeries

__all__ = [
    "TrajectoryOutcome",
    "sample_initial_positions",
    "simulate",
    "summarize",
]

# Below this probability density the velocity field is unreliable; the
# division is floored and the trajectory flagged.
_DENSITY_FLOOR = 1e-12
_DIVISION_FLOOR = 1e-30


@dataclass(frozen=True)
class TrajectoryOutcome:
    """Fate of one trajectory.

    detection_time / detection_place are None when not detected.
    entered_detector records whether the trajectory ever reached the
    absorbing region; hit_velocity_floor flags positions where the
    interpolated density fell below 1e-12 while the trajectory was live,
    making the velocity there a capped estimate.
    """

    detected: bool
    detection_time: float | None
    detection_place: float | None
    exited_left: bool
    entered_detector: bool
    hit_velocity_floor: bool
    path: np.ndarray | None = None


def sample_initial_positions(state: WaveState, n: int, seed: int) -> np.ndarray:
    """n positions distributed as |psi|^2 via the inverse cumulative rule."""
    if n < 1:
        raise ValueError(f"need n >= 1 samples, got {n}")
    x = state.grid.x
    rho = np.abs(state.amplitudes) ** 2
    cell_mass = (rho[:-1] + rho[1:]) / 2 * state.grid.dx
    cdf = np.concatenate(([0.0], np.cumsum(cell_mass)))
    if cdf[-1] <= 0:
        raise ValueError("state has zero norm; cannot sample positions")
    cdf /= cdf[-1]
    u = np.random.default_rng(seed).random(n)
    return np.interp(u, cdf, x)


def _gradient_rows(psi: np.ndarray, dx: float) -> np.ndarray:
    d = np.empty_like(psi)
    d[:, 1:-1] = (psi[:, 2:] - psi[:, :-2]) / (2 * dx)
    d[:, 0] = -(3 * psi[:, 0] - 4 * psi[:, 1] + psi[:, 2]) / (2 * dx)
    d[:, -1] = (3 * psi[:, -1] - 4 * psi[:, -2] + psi[:, -3]) / (2 * dx)
    return d


def simulate(
    model: DetectorSpec,
    series: TimeSeries,
    positions: np.ndarray,
    seed: int,
    constants: PhysicalConstants = NATURAL_UNITS,
    *,
    substeps: int = 1,
    record_paths: bool = False,
) -> list[TrajectoryOutcome]:
    """Integrate trajectories through the snapshots of a finished run.

    The series must have been produced with snapshot_stride set and with
    the same model. Per-trajectory uniform draws advance in lockstep
    whether or not a trajectory is still live, so outcome k is unchanged
    by the fate of the others (fixed seed, fixed cadence).
    """
    snaps = series.snapshots
    if snaps is None:
        raise ValueError("series has no snapshots; rerun with snapshot_stride set")
    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps}")
    soft = isinstance(model, ImaginaryPotential)
    hard = isinstance(model, AbsorbingBoundary)
    if not (soft or hard):
        raise TypeError("trajectories need a detecting model (soft or hard)")

    grid = snaps.grid
    x = grid.x
    x_lo, x_hi = grid.x_min, grid.x_max
    pos = np.asarray(positions, dtype=float).copy()
    if pos.ndim != 1:
        raise ValueError("positions must be a 1-d array")
    if np.any(pos < x_lo) or np.any(pos > x_hi):
        raise ValueError("initial positions must lie inside the grid")

    hbar, m = constants.hbar, constants.mass
    rho_rows = np.abs(snaps.psi) ** 2
    grad = _gradient_rows(snaps.psi, grid.dx)
    j_rows = hbar / m * (np.conj(snaps.psi) * grad).imag
    times = snaps.times
    n = pos.size
    rng = np.random.default_rng(seed)
    rate = 2 * model.v / hbar if soft else 0.0

    alive = np.ones(n, dtype=bool)
    detected = np.zeros(n, dtype=bool)
    det_time = np.full(n, np.nan)
    det_place = np.full(n, np.nan)
    exited = np.zeros(n, dtype=bool)
    entered = np.zeros(n, dtype=bool)
    floored = np.zeros(n, dtype=bool)
    paths = np.full((len(times), n), np.nan) if record_paths else None
    if record_paths:
        paths[0] = pos

    def velocity(p: np.ndarray, rho_a, rho_b, j_a, j_b, w: float, live: np.ndarray):
        rho = np.interp(p, x, (1 - w) * rho_a + w * rho_b)
        cur = np.interp(p, x, (1 - w) * j_a + w * j_b)
        floored[live & (rho < _DENSITY_FLOOR)] = True
        return cur / np.maximum(rho, _DIVISION_FLOOR)

    for jrow in range(len(times) - 1):
        h_snap = times[jrow + 1] - times[jrow]
        h = h_snap / substeps
        rho_a, rho_b = rho_rows[jrow], rho_rows[jrow + 1]
        j_a, j_b = j_rows[jrow], j_rows[jrow + 1]
        for s in range(substeps):
            u = rng.random(n)
            if not alive.any():
                continue
            w0 = s / substeps
            wm = (s + 0.5) / substeps
            v1 = velocity(pos, rho_a, rho_b, j_a, j_b, w0, alive)
            mid = pos + 0.5 * h * v1
            v2 = velocity(mid, rho_a, rho_b, j_a, j_b, wm, alive)
            raw = pos + h * v2
            # Crossing fractions need the unclipped endpoint; the stored
            # position is clamped to the wall afterwards.
            new = np.clip(raw, x_lo, x_hi)
            t_base = times[jrow] + s * h

            if hard:
                crossing = alive & (raw >= x_hi)
                if crossing.any():
                    frac = np.zeros(n)
                    span = raw - pos
                    good = crossing & (span > 0)
                    frac[good] = (x_hi - pos[good]) / span[good]
                    detected[crossing] = True
                    det_time[crossing] = t_base + h * np.clip(frac[crossing], 0.0, 1.0)
                    det_place[crossing] = x_hi
                    entered[crossing] = True
                    alive[crossing] = False
            else:
                s0, s1 = pos, new
                lo = np.minimum(s0, s1)
                hi = np.maximum(s0, s1)
                span = np.abs(s1 - s0)
                inside = alive & (hi >= 0)
                entered[inside] = True
                # Fraction of the substep spent at x >= 0 along the
                # linear path, and the moment the region is entered.
                with np.errstate(divide="ignore", invalid="ignore"):
                    frac_in = np.where(span > 0, (hi - np.maximum(lo, 0.0)) / span, 1.0)
                frac_in = np.clip(np.where(inside, frac_in, 0.0), 0.0, 1.0)
                tau0 = np.where(
                    (s0 < 0) & inside & (span > 0), h * (-s0) / np.where(span > 0, span, 1.0), 0.0
                )
                dwell = h * frac_in
                p_det = -np.expm1(-rate * dwell)
                caught = alive & (u < p_det)
                if caught.any():
                    tau = tau0[caught] - np.log1p(-u[caught]) / rate
                    det_time[caught] = t_base + tau
                    # Place along the linear path at the detection moment.
                    place = s0[caught] + (s1[caught] - s0[caught]) * (tau / h)
                    det_place[caught] = np.clip(place, 0.0, x_hi)
                    detected[caught] = True
                    alive[caught] = False

            leaving = alive & (raw < x_lo)
            if leaving.any():
                exited[leaving] = True
                alive[leaving] = False
            pos = np.where(alive, new, pos)
        if record_paths:
            paths[jrow + 1] = np.where(alive, pos, np.nan)

    outcomes = []
    for i in range(n):
        outcomes.append(
            TrajectoryOutcome(
                detected=bool(detected[i]),
                detection_time=float(det_time[i]) if detected[i] else None,
                detection_place=float(det_place[i]) if detected[i] else None,
                exited_left=bool(exited[i]),
                entered_detector=bool(entered[i]),
                hit_velocity_floor=bool(floored[i]),
                path=paths[:, i].copy() if record_paths else None,
            )
        )
    return outcomes


def summarize(outcomes: list[TrajectoryOutcome]) -> dict:
    """Aggregate counts: detection share, left exits, region re-exits."""
    n = len(outcomes)
    n_det = sum(o.detected for o in outcomes)
    n_entered = sum(o.entered_detector for o in outcomes)
    n_exited = sum(o.exited_left for o in outcomes)
    times = [o.detection_time for o in outcomes if o.detected]
    return {
        "n": n,
        "n_detected": n_det,
        "detected_fraction": n_det / n if n else math.nan,
        "n_entered_detector": n_entered,
        "reexit_fraction": 1 - n_det / n_entered if n_entered else math.nan,
        "n_exited_left": n_exited,
        "mean_detection_time": float(np.mean(times)) if times else math.nan,
    }
