"""Closed-form scattering eigenmodes and discrete complex spectra.

Soft-detector modes live on (-inf, L]: an incoming plus reflected wave
f_I(x) = exp(ikx) + c exp(-ikx) on x < 0, and a two-exponential profile
f_II(x) = a exp(i lam x) + b exp(-i lam x) inside the absorbing region
[0, L], where lam^2 = k^2 + 2 i m v / hbar^2 and lam sits in the first
quadrant. The wall at L fixes the ratio b / a through a wall factor F,
and continuity of value and derivative at x = 0 fixes c, a, b:

    c = ((k - lam) + (k + lam) F) / ((k + lam) + (k - lam) F)
    a = 2 k / ((k + lam) + (k - lam) F),    b = F a

Hard-detector modes live on (-inf, 0] with the boundary condition
psi'(0) = (nu + i kappa) psi(0), giving c = (k - kappa + i nu) /
(k + kappa - i nu); at k = kappa, nu = 0 the reflected wave vanishes.

Truncating the free region with a rigid wall at x = -ell turns the
continuum into a discrete set of complex wavenumbers: the roots of
exp(-i k ell) + c_k exp(i k ell) = 0. finite_interval_spectrum hunts
them with a damped Newton iteration over a seeded search window.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    NATURAL_UNITS,
    AbsorbingBoundary,
    DetectorSpec,
    Dirichlet,
    HardWall,
    ImaginaryPotential,
    Neumann,
    PhysicalConstants,
    Robin,
    WallCondition,
)

__all__ = [
    "Eigenmode",
    "lambda_of",
    "wall_factor",
    "soft_mode",
    "hard_mode",
    "allcock_mode",
    "eval_mode",
    "reflection_absorption",
    "mode_overlap_formula",
    "fII_norm_squared",
    "SearchWindow",
    "SpectrumPoint",
    "quantization_residual",
    "finite_interval_spectrum",
    "interval_eigenmode",
]


def lambda_of(k: float, v: float, constants: PhysicalConstants = NATURAL_UNITS) -> complex:
    """First-quadrant branch of sqrt(k^2 + 2 i m v / hbar^2).

    Computed from the half-angle of the principal argument, so Re and Im
    are individually accurate even when one of them is tiny. For v > 0
    both parts are strictly positive; v = 0 degenerates to |k|.
    """
    if not (math.isfinite(k) and v >= 0 and math.isfinite(v)):
        raise ValueError(f"need finite k and v >= 0, got k = {k}, v = {v}")
    z = complex(k * k, 2 * constants.mass * v / constants.hbar**2)
    r = abs(z)
    if r == 0:
        return 0j
    half = math.atan2(z.imag, z.real) / 2
    return math.sqrt(r) * complex(math.cos(half), math.sin(half))


def _lambda_general(k: complex, v: float, constants: PhysicalConstants) -> complex:
    # Branch normalized to Re lam >= 0; mode coefficients are invariant
    # under lam -> -lam so the residual choice is harmless.
    lam = cmath.sqrt(k * k + 2j * constants.mass * v / constants.hbar**2)
    if lam.real < 0 or (lam.real == 0 and lam.imag < 0):
        lam = -lam
    return lam


def wall_factor(lam: complex, L: float, wall: WallCondition) -> complex:
    """Ratio b / a imposed by the wall at x = L on the region-II profile."""
    if not (math.isfinite(L) and L > 0):
        raise ValueError(f"wall factor needs finite L > 0, got {L}")
    phase = cmath.exp(2j * lam * L)
    if isinstance(wall, Neumann):
        return phase
    if isinstance(wall, Dirichlet):
        return -phase
    if isinstance(wall, Robin):
        denom = 1j * lam + wall.alpha
        if denom == 0:
            raise ValueError(f"Robin wall is singular at i lam = -alpha (alpha = {wall.alpha})")
        return (1j * lam - wall.alpha) / denom * phase
    raise TypeError(f"unknown wall condition {wall!r}")


@dataclass(frozen=True)
class Eigenmode:
    """Stationary scattering state of one detector model at wavenumber k.

    lam, a, b describe the profile inside the absorbing region and are
    None for hard-detector modes, which have no such region.
    """

    model: DetectorSpec
    k: complex
    c: complex
    energy: complex
    lam: complex | None = None
    a: complex | None = None
    b: complex | None = None


def _energy(k: complex, constants: PhysicalConstants) -> complex:
    return constants.hbar**2 * k * k / (2 * constants.mass)


def soft_mode(
    k: float,
    v: float,
    L: float,
    wall: WallCondition = Neumann(),
    constants: PhysicalConstants = NATURAL_UNITS,
) -> Eigenmode:
    """Soft-detector scattering mode at real wavenumber k > 0."""
    if not k > 0:
        raise ValueError(f"scattering mode needs k > 0, got {k}")
    if not (v > 0 and math.isfinite(v)):
        raise ValueError(f"soft mode needs v > 0, got {v}")
    lam = lambda_of(k, v, constants)
    F = wall_factor(lam, L, wall)
    den = (k + lam) + (k - lam) * F
    if den == 0:
        raise ValueError(f"degenerate mode: matching denominator vanishes at k = {k}")
    a = 2 * k / den
    return Eigenmode(
        model=ImaginaryPotential(v, L, wall),
        k=complex(k),
        c=((k - lam) + (k + lam) * F) / den,
        energy=_energy(k, constants),
        lam=lam,
        a=a,
        b=F * a,
    )


def hard_mode(
    k: float,
    kappa: float,
    nu: float = 0.0,
    constants: PhysicalConstants = NATURAL_UNITS,
) -> Eigenmode:
    """Hard-detector scattering mode at real wavenumber k > 0."""
    if not k > 0:
        raise ValueError(f"scattering mode needs k > 0, got {k}")
    model = AbsorbingBoundary(kappa, nu)
    c = (k - kappa + 1j * nu) / (k + kappa - 1j * nu)
    return Eigenmode(model=model, k=complex(k), c=c, energy=_energy(k, constants))


def allcock_mode(
    k: float, v: float, constants: PhysicalConstants = NATURAL_UNITS
) -> Eigenmode:
    """Soft mode on a half-infinite absorbing region (L = inf, b = 0).

    The growing exponential is excluded outright, so no wall factor is
    involved and c = (k - lam) / (k + lam).
    """
    if not k > 0:
        raise ValueError(f"scattering mode needs k > 0, got {k}")
    if not (v > 0 and math.isfinite(v)):
        raise ValueError(f"soft mode needs v > 0, got {v}")
    lam = lambda_of(k, v, constants)
    return Eigenmode(
        model=ImaginaryPotential(v, math.inf),
        k=complex(k),
        c=(k - lam) / (k + lam),
        energy=_energy(k, constants),
        lam=lam,
        a=2 * k / (k + lam),
        b=0j,
    )


def eval_mode(mode: Eigenmode, x) -> np.ndarray | complex:
    """Mode amplitudes at the given abscissas.

    Region II factors are evaluated only where x >= 0, never on the free
    region, where exp(-i lam x) would overflow for strong absorption.
    Scalar input returns a scalar.
    """
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs)
    model = mode.model
    if isinstance(model, ImaginaryPotential):
        bound = model.L
    elif isinstance(model, AbsorbingBoundary):
        bound = 0.0
    else:
        raise TypeError(f"cannot evaluate a mode of model {model!r}")
    if np.any(xs > bound * (1 + 1e-12) + 1e-12):
        raise ValueError(f"abscissa beyond the model domain (x <= {bound})")

    out = np.empty(xs.shape, dtype=complex)
    inside = xs >= 0 if isinstance(model, ImaginaryPotential) else np.zeros(xs.shape, bool)
    free = ~inside
    out[free] = np.exp(1j * mode.k * xs[free]) + mode.c * np.exp(-1j * mode.k * xs[free])
    if inside.any():
        xi = xs[inside]
        vals = np.zeros(xi.shape, dtype=complex)
        # Skip vanishing components: the excluded growing exponential of
        # a half-infinite region would overflow at large x.
        if mode.a != 0:
            vals += mode.a * np.exp(1j * mode.lam * xi)
        if mode.b != 0:
            vals += mode.b * np.exp(-1j * mode.lam * xi)
        out[inside] = vals
    return complex(out[0]) if scalar else out


def reflection_absorption(mode: Eigenmode) -> tuple[float, float]:
    """Reflection probability R = |c|^2 and absorbed share A = 1 - R."""
    if mode.k.imag != 0:
        raise ValueError("reflection and absorption are defined for real k only")
    R = abs(mode.c) ** 2
    return R, 1.0 - R


def mode_overlap_formula(k: float, k2: float, c: complex, c2: complex) -> complex:
    """Closed-form overlap of the free-region parts of two scattering modes.

    Distributional integral of conj(f_II at k2) * (f at k) over the free
    half-line with the delta term dropped; valid for distinct real
    wavenumbers:

        -i (1 - conj(c2) c) / (k - k2) - i (conj(c2) - c) / (k + k2)
    """
    if k == k2:
        raise ValueError("overlap formula needs distinct wavenumbers")
    if k <= 0 or k2 <= 0:
        raise ValueError("overlap formula needs positive real wavenumbers")
    c2c = complex(c2).conjugate()
    return -1j * (1 - c2c * c) / (k - k2) - 1j * (c2c - c) / (k + k2)


def _exp_integral(q: complex, L: float) -> complex:
    # int_0^L exp(q x) dx, stable for small |q| L.
    qL = q * L
    if abs(qL) < 1e-4:
        return L * (1 + qL / 2 + qL * qL / 6 + qL * qL * qL / 24)
    return (cmath.exp(qL) - 1) / q


def fII_norm_squared(mode: Eigenmode) -> float:
    """Integral of |f_II|^2 over the absorbing region [0, L].

    Sum of three exponential integrals; for L = inf only the decaying
    component may be present (b = 0) and the integral collapses to
    |a|^2 / (2 Im lam). For purely real lam with b = 0 the integrand is
    constant and the result is |a|^2 L.
    """
    model = mode.model
    if not isinstance(model, ImaginaryPotential):
        raise TypeError("norm over the absorbing region needs a soft-detector mode")
    a, b, lam, L = mode.a, mode.b, mode.lam, model.L
    if math.isinf(L):
        if b != 0:
            raise ValueError("half-infinite region requires b = 0")
        if lam.imag <= 0:
            raise ValueError("half-infinite integral diverges for Im lam <= 0")
        return abs(a) ** 2 / (2 * lam.imag)
    total = abs(a) ** 2 * _exp_integral(-2 * lam.imag, L)
    total += abs(b) ** 2 * _exp_integral(2 * lam.imag, L)
    total += 2 * (a * b.conjugate() * _exp_integral(2j * lam.real, L)).real
    return float(total.real)


# --- discrete spectrum on a finite interval ---------------------------------


@dataclass(frozen=True)
class SearchWindow:
    """Rectangle in the complex k plane seeded with a regular grid.

    Newton iterations start from every cell midpoint; converged roots are
    kept when they land inside the (slightly padded) window, deduplicated
    at 10x the step tolerance.
    """

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    n_re: int = 41
    n_im: int = 21
    tol: float = 1e-12
    residual_tol: float = 1e-10
    max_iter: int = 60

    def __post_init__(self) -> None:
        if not (self.re_max > self.re_min and self.im_max > self.im_min):
            raise ValueError("empty search window")
        if self.n_re < 2 or self.n_im < 2:
            raise ValueError("need at least a 2x2 seed grid")
        if not (self.tol > 0 and self.residual_tol > 0):
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class SpectrumPoint:
    """One discrete complex wavenumber with its energy and decay rate.

    mu = -Im E > 0 is the exponential decay rate of the squared norm
    (up to the factor 2 / hbar); residual is |quantization condition| at
    the converged root.
    """

    k: complex
    energy: complex
    mu: float
    residual: float


def _reflection_at(model: DetectorSpec, k: complex, constants: PhysicalConstants) -> complex:
    if isinstance(model, AbsorbingBoundary):
        return (k - model.kappa + 1j * model.nu) / (k + model.kappa - 1j * model.nu)
    if isinstance(model, ImaginaryPotential):
        lam = _lambda_general(k, model.v, constants)
        F = wall_factor(lam, model.L, model.right_wall)
        den = (k + lam) + (k - lam) * F
        return ((k - lam) + (k + lam) * F) / den
    raise TypeError(f"model {model!r} has no reflection coefficient")


def quantization_residual(
    k: complex,
    ell: float,
    model: DetectorSpec,
    constants: PhysicalConstants = NATURAL_UNITS,
) -> complex:
    """Value of exp(-i k ell) + c_k exp(i k ell); zero on the spectrum.

    This is the condition that the free-region mode profile vanishes at
    the rigid wall x = -ell closing the interval on the left.
    """
    if not ell > 0:
        raise ValueError(f"interval length ell must be positive, got {ell}")
    c = _reflection_at(model, k, constants)
    return cmath.exp(-1j * k * ell) + c * cmath.exp(1j * k * ell)


def _newton_root(f, z0: complex, window: SearchWindow, df=None) -> complex | None:
    def feval(z: complex) -> complex | None:
        # Stray iterates with huge |Im k| overflow the exponentials;
        # treat that as divergence of this seed.
        try:
            val = f(z)
        except OverflowError:
            return None
        return val if cmath.isfinite(val) else None

    pad_re = 0.05 * (window.re_max - window.re_min)
    pad_im = 0.05 * (window.im_max - window.im_min)
    z = z0
    fz = feval(z)
    if fz is None:
        return None
    for _ in range(window.max_iter):
        if df is not None:
            d = df(z)
        else:
            h = 1e-7 * (1 + abs(z))
            f_hi, f_lo = feval(z + h), feval(z - h)
            if f_hi is None or f_lo is None:
                return None
            d = (f_hi - f_lo) / (2 * h)
        if d == 0 or not cmath.isfinite(d):
            return None
        step = fz / d
        # Damped update: halve the step until the residual stops growing.
        z_new = fz_new = None
        scale = 1.0
        for _ in range(30):
            cand = z - scale * step
            f_cand = feval(cand)
            if f_cand is not None and (abs(f_cand) <= abs(fz) or scale < 1e-6):
                z_new, fz_new = cand, f_cand
                break
            scale /= 2
        if z_new is None:
            return None
        if not (
            window.re_min - pad_re <= z_new.real <= window.re_max + pad_re
            and window.im_min - pad_im <= z_new.imag <= window.im_max + pad_im
        ):
            return None
        converged = abs(z_new - z) < window.tol * (1 + abs(z_new))
        z, fz = z_new, fz_new
        if converged and abs(fz) < window.residual_tol:
            return z
    return None


def finite_interval_spectrum(
    ell: float,
    model: DetectorSpec,
    window: SearchWindow,
    constants: PhysicalConstants = NATURAL_UNITS,
) -> list[SpectrumPoint]:
    """Discrete complex wavenumbers of the interval-truncated model.

    Roots of the quantization condition inside the window, restricted to
    Re k > 0 (the physical half; k -> -k reproduces the same mode) with
    the trivial root at k = 0 excluded. Sorted by Re k. Every returned
    point satisfies mu > 0: the truncated modes all decay.
    """
    if isinstance(model, HardWall):
        raise TypeError("the hard-wall reference model has a real spectrum; nothing to search")
    if not (ell > 0 and math.isfinite(ell)):
        raise ValueError(f"interval length ell must be positive and finite, got {ell}")

    def f(k: complex) -> complex:
        return quantization_residual(k, ell, model, constants)

    df = None
    if isinstance(model, AbsorbingBoundary):
        kap = model.kappa - 1j * model.nu

        def df(k: complex) -> complex:  # noqa: F811
            dc = 2 * kap / (k + kap) ** 2
            c = (k - kap) / (k + kap)
            return (
                -1j * ell * cmath.exp(-1j * k * ell)
                + (dc + 1j * ell * c) * cmath.exp(1j * k * ell)
            )

    res = np.linspace(window.re_min, window.re_max, window.n_re)
    ims = np.linspace(window.im_min, window.im_max, window.n_im)
    roots: list[complex] = []
    dedup = 10 * window.tol
    for im in ims:
        for re in res:
            z = _newton_root(f, complex(re, im), window, df)
            if z is None:
                continue
            if z.real <= dedup:
                continue
            if any(abs(z - r) < dedup * (1 + abs(z)) for r in roots):
                continue
            roots.append(z)

    points = []
    for z in sorted(roots, key=lambda r: r.real):
        energy = _energy(z, constants)
        mu = -energy.imag
        if mu <= 0:
            continue
        points.append(SpectrumPoint(k=z, energy=energy, mu=mu, residual=abs(f(z))))
    return points


def interval_eigenmode(
    point: SpectrumPoint,
    model: DetectorSpec,
    constants: PhysicalConstants = NATURAL_UNITS,
) -> Eigenmode:
    """Eigenmode profile exp(ikx) + c_k exp(-ikx) at a spectrum point.

    The profile vanishes at x = -ell by construction of the spectrum and
    obeys the detector condition at x = 0, so it evolves in time by the
    pure phase exp(-i E t / hbar).
    """
    k = point.k
    c = _reflection_at(model, k, constants)
    if isinstance(model, ImaginaryPotential):
        lam = _lambda_general(k, model.v, constants)
        F = wall_factor(lam, model.L, model.right_wall)
        den = (k + lam) + (k - lam) * F
        a = 2 * k / den
        return Eigenmode(
            model=model, k=k, c=c, energy=point.energy, lam=lam, a=a, b=F * a
        )
    return Eigenmode(model=model, k=k, c=c, energy=point.energy)
