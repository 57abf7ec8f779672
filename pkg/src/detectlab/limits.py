"""Hard-detector limit sweeps and convergence reporting.

A hard-limit sequence scales the soft detector as (v_i, L_i) with
v_i L_i = hbar^2 kappa / (2 m) held fixed while v grows. Along such a
sequence the soft reflection coefficient approaches the hard-detector
value (k - kappa) / (k + kappa) for reflecting walls, the absorbing
region empties out, and the arrival-time density of an evolved packet
approaches the hard-detector one. Each sweep returns a
ConvergenceReport with the measured errors, auxiliary diagnostics, a
log-log slope fit, and a verdict.

The verdict is mechanical: "converging" means the last three errors
decrease strictly and the final error is below a tenth of the largest
one; anything else is "non-converging". Sweeps that merely tabulate a
comparison (no inherent limit claim) carry verdict None.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (
    AbsorbingBoundary,
    Dirichlet,
    GaussianPacketSpec,
    ImaginaryPotential,
    NATURAL_UNITS,
    Neumann,
    PhysicalConstants,
    WallCondition,
    grid_for_domain,
    make_gaussian_packet,
)
from .eigen import (
    SearchWindow,
    allcock_mode,
    eval_mode,
    fII_norm_squared,
    finite_interval_spectrum,
    reflection_absorption,
    soft_mode,
    wall_factor,
)
from .evolve import default_time_step, run

__all__ = [
    "HardLimitSequence",
    "make_hard_sequence",
    "ConvergenceReport",
    "fit_loglog_slope",
    "sweep_ck",
    "sweep_ck_dirichlet",
    "sweep_fII",
    "sweep_allcock",
    "EvolutionNumerics",
    "sweep_rhoT",
    "sweep_finite_interval_roots",
    "write_convergence_csv",
    "report_to_dict",
]


@dataclass(frozen=True)
class HardLimitSequence:
    """Strengths and lengths with v L pinned to hbar^2 kappa / (2 m)."""

    kappa: float
    entries: tuple[tuple[float, float], ...]


def make_hard_sequence(
    kappa: float,
    v0: float,
    ratio: float,
    count: int,
    constants: PhysicalConstants = NATURAL_UNITS,
) -> HardLimitSequence:
    """Geometric sequence v_i = v0 ratio^i with L_i = hbar^2 kappa / (2 m v_i)."""
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if not v0 > 0:
        raise ValueError(f"v0 must be positive, got {v0}")
    if not ratio > 1:
        raise ValueError(f"ratio must exceed 1, got {ratio}")
    if count < 2:
        raise ValueError(f"need at least 2 entries, got {count}")
    scale = constants.hbar**2 * kappa / (2 * constants.mass)
    entries = tuple((v0 * ratio**i, scale / (v0 * ratio**i)) for i in range(count))
    return HardLimitSequence(kappa=kappa, entries=entries)


@dataclass(frozen=True)
class ConvergenceReport:
    """Errors along a parameter sweep plus a fitted rate and a verdict."""

    name: str
    parameter_name: str
    parameters: np.ndarray
    errors: np.ndarray
    aux: dict[str, np.ndarray] = field(default_factory=dict)
    slope: float | None = None
    slope_residual: float | None = None
    verdict: str | None = None


def fit_loglog_slope(parameters, errors) -> tuple[float | None, float | None]:
    """Least-squares slope of log error against log parameter.

    Returns (None, None) with fewer than 4 points or any nonpositive
    value, where the fit would be meaningless.
    """
    p = np.asarray(parameters, dtype=float)
    e = np.asarray(errors, dtype=float)
    if p.size < 4 or np.any(p <= 0) or np.any(e <= 0):
        return None, None
    coeffs, residuals, *_ = np.polyfit(np.log(p), np.log(e), 1, full=True)
    rms = float(np.sqrt(residuals[0] / p.size)) if residuals.size else 0.0
    return float(coeffs[0]), rms


def _verdict(errors: np.ndarray) -> str:
    e = np.asarray(errors, dtype=float)
    if e.size >= 3 and e[-3] > e[-2] > e[-1] and e[-1] < 0.1 * e.max():
        return "converging"
    return "non-converging"


def _report(name, parameter_name, parameters, errors, aux, verdict="auto") -> ConvergenceReport:
    parameters = np.asarray(parameters, dtype=float)
    errors = np.asarray(errors, dtype=float)
    aux = {key: np.asarray(vals, dtype=float) for key, vals in aux.items()}
    slope, resid = fit_loglog_slope(parameters, errors)
    return ConvergenceReport(
        name=name,
        parameter_name=parameter_name,
        parameters=parameters,
        errors=errors,
        aux=aux,
        slope=slope,
        slope_residual=resid,
        verdict=_verdict(errors) if verdict == "auto" else verdict,
    )


def sweep_ck(
    k: float,
    sequence: HardLimitSequence,
    wall: WallCondition = Neumann(),
    constants: PhysicalConstants = NATURAL_UNITS,
) -> ConvergenceReport:
    """Distance of the soft reflection coefficient from the hard one.

    Errors are |c_soft - (k - kappa) / (k + kappa)| along the sequence.
    The auxiliary effective boundary parameter kappa_eff =
    lam (1 - F) / (1 + F) rewrites c_soft as (k - kappa_eff) /
    (k + kappa_eff), so its distance from kappa tracks the same limit.
    A rigid wall at L suppresses absorption entirely and has its own
    sweep (sweep_ck_dirichlet); asking for it here is a usage error.
    """
    if isinstance(wall, Dirichlet):
        raise ValueError(
            "a rigid wall never reaches the hard-detector limit; use sweep_ck_dirichlet"
        )
    target = (k - sequence.kappa) / (k + sequence.kappa)
    errors, kre, kim, kdist, absc = [], [], [], [], []
    for v, L in sequence.entries:
        mode = soft_mode(k, v, L, wall, constants)
        F = wall_factor(mode.lam, L, wall)
        kap_eff = mode.lam * (1 - F) / (1 + F)
        errors.append(abs(mode.c - target))
        kre.append(kap_eff.real)
        kim.append(kap_eff.imag)
        kdist.append(abs(kap_eff - sequence.kappa))
        absc.append(abs(mode.c))
    return _report(
        "ck",
        "v",
        [v for v, _ in sequence.entries],
        errors,
        {"kappa_eff_re": kre, "kappa_eff_im": kim, "kappa_eff_dist": kdist, "abs_c": absc},
    )


def sweep_ck_dirichlet(
    k: float,
    sequence: HardLimitSequence,
    constants: PhysicalConstants = NATURAL_UNITS,
) -> ConvergenceReport:
    """Same distance as sweep_ck but with the rigid wall at L.

    The wall reflects everything back through the absorbing region and
    c tends to -1 instead of the hard value, so the error saturates at
    2k / (k + kappa). The verdict documents the failure.
    """
    target = (k - sequence.kappa) / (k + sequence.kappa)
    errors, absc, dist_m1 = [], [], []
    for v, L in sequence.entries:
        mode = soft_mode(k, v, L, Dirichlet(), constants)
        errors.append(abs(mode.c - target))
        absc.append(abs(mode.c))
        dist_m1.append(abs(mode.c + 1))
    return _report(
        "ck_dirichlet",
        "v",
        [v for v, _ in sequence.entries],
        errors,
        {"abs_c": absc, "dist_to_minus_one": dist_m1},
    )


def sweep_fII(
    k: float,
    sequence: HardLimitSequence,
    constants: PhysicalConstants = NATURAL_UNITS,
) -> ConvergenceReport:
    """Weight of the mode inside the absorbing region along the sequence.

    Errors are the integrals of |f_II|^2 over [0, L] with the reflecting
    wall; they vanish in the limit. Auxiliary columns track the interior
    coefficients against their common limit k / (k + kappa), plus the
    two component integrals whose square-root sum bounds the total.
    """
    errors, a_dist, b_dist, a_part, b_part = [], [], [], [], []
    from .eigen import _exp_integral  # shared small helper

    target = k / (k + sequence.kappa)
    for v, L in sequence.entries:
        mode = soft_mode(k, v, L, Neumann(), constants)
        errors.append(fII_norm_squared(mode))
        a_dist.append(abs(mode.a - target))
        b_dist.append(abs(mode.b - target))
        a_part.append(abs(mode.a) ** 2 * _exp_integral(-2 * mode.lam.imag, L).real)
        b_part.append(abs(mode.b) ** 2 * _exp_integral(2 * mode.lam.imag, L).real)
    return _report(
        "fII",
        "v",
        [v for v, _ in sequence.entries],
        errors,
        {"a_dist": a_dist, "b_dist": b_dist, "a_part": a_part, "b_part": b_part},
    )


def sweep_allcock(
    k: float,
    v_values,
    constants: PhysicalConstants = NATURAL_UNITS,
) -> ConvergenceReport:
    """Half-infinite absorber at growing strength: the anti-limit.

    With L = inf the reflection coefficient tends to -1 (total
    reflection) and the absorbed share tends to zero, so strengthening
    the detector eventually detects nothing. Errors are |c + 1|.
    Auxiliary columns: the absorbed share, |a|, and the largest sampled
    distance between the free-region profile and the rigid-wall profile
    2 i sin(kx) over 25 points in [-3 pi / k, 0].
    """
    errors, absorbed, a_abs, fi_dist = [], [], [], []
    xs = np.linspace(-3 * math.pi / k, 0.0, 25)
    target = 2j * np.sin(k * xs)
    for v in v_values:
        mode = allcock_mode(k, v, constants)
        _, A = reflection_absorption(mode)
        errors.append(abs(mode.c + 1))
        absorbed.append(A)
        a_abs.append(abs(mode.a))
        fi_dist.append(float(np.max(np.abs(eval_mode(mode, xs) - target))))
    return _report(
        "allcock",
        "v",
        list(v_values),
        errors,
        {"absorbed": absorbed, "abs_a": a_abs, "fI_dist": fi_dist},
        verdict="auto",
    )


@dataclass(frozen=True)
class EvolutionNumerics:
    """Grid and stepping parameters shared by the runs of a sweep.

    dt = None picks the conservative default per run (see
    default_time_step); an explicit dt is used verbatim for the soft
    runs. dt_hard controls the reference hard-detector run separately
    and falls back to dt, then to the default rule.
    """

    x_min: float
    dx: float
    t_end: float
    dt: float | None = None
    dt_hard: float | None = None

    def __post_init__(self) -> None:
        if not self.dx > 0:
            raise ValueError(f"dx must be positive, got {self.dx}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.dt_hard is not None and not self.dt_hard > 0:
            raise ValueError(f"dt_hard must be positive, got {self.dt_hard}")


def _soft_rho(args):
    packet, v, L, numerics, constants = args
    grid = grid_for_domain(numerics.x_min, numerics.dx, L, require_node_at=0.0)
    state = make_gaussian_packet(grid, packet)
    model = ImaginaryPotential(v, L, Neumann())
    dt = numerics.dt or default_time_step(model, grid, packet.k0, constants)
    n_steps = max(1, round(numerics.t_end / dt))
    series = run(state, model, dt, n_steps, constants)
    return series.times, series.rho_t_norm, dt, series.detection_probability


def sweep_rhoT(
    packet: GaussianPacketSpec,
    sequence: HardLimitSequence,
    numerics: EvolutionNumerics,
    constants: PhysicalConstants = NATURAL_UNITS,
    *,
    nu: float = 0.0,
    max_workers: int | None = None,
) -> ConvergenceReport:
    """Arrival-time density of evolved packets against the hard detector.

    One hard-detector reference run (kappa from the sequence, optional
    bias nu), one soft run per sequence entry, all from the same packet
    on grids with the shared spacing. Errors are
    sup_t |rho_soft - rho_hard| over the reference midpoints (soft
    densities are interpolated onto them); the L1 distance rides along
    as an auxiliary column. The grid must resolve the smallest absorbing
    region with at least four cells.
    """
    L_min = min(L for _, L in sequence.entries)
    if numerics.dx > L_min / 4 * (1 + 1e-12):
        raise ValueError(
            f"dx = {numerics.dx} cannot resolve the smallest absorbing region "
            f"(need dx <= L_min / 4 = {L_min / 4})"
        )
    grid_h = grid_for_domain(numerics.x_min, numerics.dx, 0.0)
    state_h = make_gaussian_packet(grid_h, packet)
    model_h = AbsorbingBoundary(sequence.kappa, nu)
    dt_h = (
        numerics.dt_hard
        or numerics.dt
        or default_time_step(model_h, grid_h, packet.k0, constants)
    )
    ref = run(state_h, model_h, dt_h, max(1, round(numerics.t_end / dt_h)), constants)
    ref_t = ref.times
    ref_rho = ref.rho_t_norm
    ref_peak = float(ref_rho.max())

    jobs = [(packet, v, L, numerics, constants) for v, L in sequence.entries]
    workers = max_workers or min(len(jobs), 4)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_soft_rho, jobs))

    errors, l1, rel, dts, probs = [], [], [], [], []
    for times, rho, dt, prob in results:
        diff = np.abs(np.interp(ref_t, times, rho) - ref_rho)
        errors.append(float(diff.max()))
        l1.append(float(np.trapezoid(diff, ref_t)))
        rel.append(float(diff.max() / ref_peak))
        dts.append(dt)
        probs.append(prob)
    aux = {
        "l1_dist": l1,
        "sup_over_peak": rel,
        "dt": dts,
        "detect_prob": probs,
        "abr_peak": [ref_peak] * len(results),
        "abr_detect_prob": [ref.detection_probability] * len(results),
    }
    return _report("rhoT", "v", [v for v, _ in sequence.entries], errors, aux)


def sweep_finite_interval_roots(
    ell: float,
    sequence: HardLimitSequence,
    window: SearchWindow,
    wall: WallCondition = Neumann(),
    constants: PhysicalConstants = NATURAL_UNITS,
) -> ConvergenceReport:
    """Interval spectra of the soft models against the hard one.

    For each entry the discrete wavenumbers inside the window are
    matched to the hard-detector ones by nearest distance; errors are
    the mean matched distances. Tabulated comparison only, so the
    verdict is left unset.
    """
    hard_pts = finite_interval_spectrum(ell, AbsorbingBoundary(sequence.kappa), window, constants)
    if not hard_pts:
        raise ValueError("no hard-detector roots inside the window; widen it")
    hard_k = np.array([p.k for p in hard_pts])
    errors, counts = [], []
    for v, L in sequence.entries:
        pts = finite_interval_spectrum(ell, ImaginaryPotential(v, L, wall), window, constants)
        counts.append(len(pts))
        if not pts:
            errors.append(math.inf)
            continue
        soft_k = np.array([p.k for p in pts])
        dists = [float(np.min(np.abs(soft_k - kh))) for kh in hard_k]
        errors.append(float(np.mean(dists)))
    return _report(
        "interval_roots",
        "v",
        [v for v, _ in sequence.entries],
        errors,
        {"n_roots": counts},
        verdict=None,
    )


def _fmt(value: float) -> str:
    return repr(float(value))


def write_convergence_csv(report: ConvergenceReport, path) -> None:
    """Sweep table: parameter, error, then the auxiliary columns."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["parameter", "error", *report.aux.keys()])
        for i in range(report.parameters.size):
            row = [_fmt(report.parameters[i]), _fmt(report.errors[i])]
            row.extend(_fmt(vals[i]) for vals in report.aux.values())
            writer.writerow(row)


def report_to_dict(report: ConvergenceReport) -> dict:
    """JSON-ready view of a report."""
    return {
        "name": report.name,
        "parameter_name": report.parameter_name,
        "parameters": [float(p) for p in report.parameters],
        "errors": [float(e) for e in report.errors],
        "aux": {key: [float(v) for v in vals] for key, vals in report.aux.items()},
        "slope": report.slope,
        "slope_residual": report.slope_residual,
        "verdict": report.verdict,
    }
