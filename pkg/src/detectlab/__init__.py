"""Toolbox for one-dimensional quantum detection models.

Two detector families on a half-line: a soft detector built from an
imaginary step potential over a finite region, and a hard detector
built from an absorbing boundary condition at a point. The package
provides their closed-form scattering eigenmodes, the discrete complex
spectra of interval-truncated variants, norm-preserving Crank-Nicolson
time evolution with arrival-time densities, trajectory sampling of
detection times and places, and parameter sweeps probing the limit in
which the soft detector turns hard.
"""

__version__ = "0.1.0"

from .core import (
    AbsorbingBoundary,
    Dirichlet,
    GaussianPacketSpec,
    Grid,
    HardWall,
    ImaginaryPotential,
    NATURAL_UNITS,
    Neumann,
    PhysicalConstants,
    Robin,
    WaveState,
    grid_for_domain,
    inner_product,
    make_gaussian_packet,
    norm_squared,
)
from .eigen import (
    Eigenmode,
    SearchWindow,
    SpectrumPoint,
    allcock_mode,
    eval_mode,
    fII_norm_squared,
    finite_interval_spectrum,
    hard_mode,
    interval_eigenmode,
    lambda_of,
    mode_overlap_formula,
    reflection_absorption,
    soft_mode,
    wall_factor,
)
from .evolve import (
    AccuracyWarning,
    TimeSeries,
    build_hamiltonian,
    default_time_step,
    flux,
    run,
    step,
    write_place_density_csv,
    write_time_series_csv,
)
from .bohm import TrajectoryOutcome, sample_initial_positions, simulate, summarize
from .limits import (
    ConvergenceReport,
    EvolutionNumerics,
    HardLimitSequence,
    fit_loglog_slope,
    make_hard_sequence,
    sweep_allcock,
    sweep_ck,
    sweep_ck_dirichlet,
    sweep_fII,
    sweep_finite_interval_roots,
    sweep_rhoT,
)

__all__ = [name for name in dir() if not name.startswith("_")]
