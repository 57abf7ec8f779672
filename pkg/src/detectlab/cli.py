"""Command-line front end.

Subcommands: eigen, spectrum, evolve, bohm, sweep. Each reads a flat
JSON configuration (scalars and lists only), applies --set overrides,
writes its CSV/JSON outputs into the output directory, and finishes
with a manifest recording the resolved configuration, package version,
wall-clock time, and a sha256 checksum per output file. Output files
are byte-deterministic for a fixed configuration and seed; the manifest
timestamps are informational and excluded from that contract.

The output directory comes from --out, else the DETECTLAB_OUT
environment variable, else the working directory. Configuration errors
exit with status 2 and a one-line JSON record on stderr naming the
offending field; a sweep that ends in a non-converging verdict is a
scientific result, not an error, and exits 0.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .core import (
    AbsorbingBoundary,
    Dirichlet,
    GaussianPacketSpec,
    HardWall,
    ImaginaryPotential,
    Neumann,
    Robin,
    grid_for_domain,
    make_gaussian_packet,
)
from .bohm import sample_initial_positions, simulate, summarize
from .eigen import (
    SearchWindow,
    allcock_mode,
    eval_mode,
    finite_interval_spectrum,
    hard_mode,
    reflection_absorption,
    soft_mode,
)
from .evolve import (
    default_time_step,
    run,
    write_place_density_csv,
    write_time_series_csv,
)
from .limits import (
    EvolutionNumerics,
    make_hard_sequence,
    report_to_dict,
    sweep_allcock,
    sweep_ck,
    sweep_ck_dirichlet,
    sweep_fII,
    sweep_finite_interval_roots,
    sweep_rhoT,
    write_convergence_csv,
)

__all__ = ["main", "load_config", "save_config", "ConfigError"]


class ConfigError(ValueError):
    """Bad or missing configuration field."""


def load_config(path) -> dict:
    """Read a flat JSON configuration; nested objects are rejected."""
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ConfigError("configuration must be a JSON object")
    for key, value in cfg.items():
        if isinstance(value, dict):
            raise ConfigError(f"configuration must be flat; field '{key}' is an object")
    return cfg


def save_config(cfg: dict, path) -> None:
    """Write a configuration so that load_config reads it back unchanged."""
    with open(path, "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require(cfg: dict, key: str, command: str):
    if key not in cfg:
        raise ConfigError(f"missing required field '{key}' for '{command}'")
    return cfg[key]


def _fnum(cfg: dict, key: str, command: str, default=None) -> float:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required field '{key}' for '{command}'")
        return default
    try:
        value = cfg[key]
        if isinstance(value, str) and value == "inf":
            return math.inf
        return float(value)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"field '{key}' must be a number, got {cfg[key]!r}") from err


def _inum(cfg: dict, key: str, command: str, default=None) -> int:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required field '{key}' for '{command}'")
        return default
    value = cfg[key]
    if isinstance(value, bool) or (not isinstance(value, int) and int(value) != value):
        raise ConfigError(f"field '{key}' must be an integer, got {value!r}")
    return int(value)


def _wall_from(cfg: dict, command: str):
    name = cfg.get("wall", "neumann")
    if name == "neumann":
        return Neumann()
    if name == "dirichlet":
        return Dirichlet()
    if name == "robin":
        return Robin(_fnum(cfg, "alpha", command))
    raise ConfigError(f"field 'wall' must be neumann, robin, or dirichlet, got {name!r}")


def _model_from(cfg: dict, command: str):
    name = _require(cfg, "model", command)
    if name == "soft":
        return ImaginaryPotential(
            _fnum(cfg, "v", command), _fnum(cfg, "L", command), _wall_from(cfg, command)
        )
    if name == "abr":
        return AbsorbingBoundary(_fnum(cfg, "kappa", command), _fnum(cfg, "nu", command, 0.0))
    if name == "hardwall":
        return HardWall()
    raise ConfigError(f"field 'model' must be soft, abr, or hardwall, got {name!r}")


def _packet_from(cfg: dict, command: str) -> GaussianPacketSpec:
    return GaussianPacketSpec(
        x0=_fnum(cfg, "x0", command),
        sigma=_fnum(cfg, "sigma", command),
        k0=_fnum(cfg, "k0", command),
    )


def _window_from(cfg: dict, command: str) -> SearchWindow:
    return SearchWindow(
        re_min=_fnum(cfg, "window_re_min", command),
        re_max=_fnum(cfg, "window_re_max", command),
        im_min=_fnum(cfg, "window_im_min", command),
        im_max=_fnum(cfg, "window_im_max", command),
        n_re=_inum(cfg, "window_n_re", command, 41),
        n_im=_inum(cfg, "window_n_im", command, 21),
        tol=_fnum(cfg, "tol", command, 1e-12),
    )


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def _write_csv(path, header, rows) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# --- subcommands -------------------------------------------------------------


def _k_values(cfg: dict, command: str) -> list[float]:
    if "k_values" in cfg:
        values = cfg["k_values"]
        if not isinstance(values, list) or not values:
            raise ConfigError("field 'k_values' must be a nonempty list")
        return [float(k) for k in values]
    k_min = _fnum(cfg, "k_min", command)
    k_max = _fnum(cfg, "k_max", command)
    count = _inum(cfg, "k_count", command)
    return [float(k) for k in np.linspace(k_min, k_max, count)]


def _mode_at(model, k: float, cfg: dict, command: str):
    if isinstance(model, ImaginaryPotential):
        if math.isinf(model.L):
            return allcock_mode(k, model.v)
        return soft_mode(k, model.v, model.L, model.right_wall)
    if isinstance(model, AbsorbingBoundary):
        return hard_mode(k, model.kappa, model.nu)
    raise ConfigError("command 'eigen' needs a detecting model (soft or abr)")


def cmd_eigen(cfg: dict, outdir: str) -> dict:
    model = _model_from(cfg, "eigen")
    rows = []
    for k in _k_values(cfg, "eigen"):
        mode = _mode_at(model, k, cfg, "eigen")
        R, A = reflection_absorption(mode)
        rows.append(
            [
                _fmt(k),
                _fmt(mode.c.real),
                _fmt(mode.c.imag),
                _fmt(R),
                _fmt(A),
                _fmt(mode.lam.real if mode.lam is not None else None),
                _fmt(mode.lam.imag if mode.lam is not None else None),
                _fmt(abs(mode.a) if mode.a is not None else None),
                _fmt(abs(mode.b) if mode.b is not None else None),
            ]
        )
    files = {"eigen_modes.csv": os.path.join(outdir, "eigen_modes.csv")}
    _write_csv(
        files["eigen_modes.csv"],
        ["k", "re_c", "im_c", "R", "A", "re_lambda", "im_lambda", "abs_a", "abs_b"],
        rows,
    )
    if "sample_k" in cfg:
        mode = _mode_at(model, _fnum(cfg, "sample_k", "eigen"), cfg, "eigen")
        x_min = _fnum(cfg, "sample_x_min", "eigen", -10.0)
        points = _inum(cfg, "sample_points", "eigen", 201)
        if isinstance(model, AbsorbingBoundary) or math.isinf(model.L):
            bound = 0.0
        else:
            bound = model.L
        xs = np.linspace(x_min, bound, points)
        values = eval_mode(mode, xs)
        files["mode_profile.csv"] = os.path.join(outdir, "mode_profile.csv")
        _write_csv(
            files["mode_profile.csv"],
            ["x", "re_f", "im_f"],
            [[_fmt(x), _fmt(f.real), _fmt(f.imag)] for x, f in zip(xs, values)],
        )
    return files


def cmd_spectrum(cfg: dict, outdir: str) -> dict:
    model = _model_from(cfg, "spectrum")
    ell = _fnum(cfg, "ell", "spectrum")
    points = finite_interval_spectrum(ell, model, _window_from(cfg, "spectrum"))
    files = {"spectrum.csv": os.path.join(outdir, "spectrum.csv")}
    _write_csv(
        files["spectrum.csv"],
        ["re_k", "im_k", "re_E", "mu", "residual"],
        [
            [_fmt(p.k.real), _fmt(p.k.imag), _fmt(p.energy.real), _fmt(p.mu), _fmt(p.residual)]
            for p in points
        ],
    )
    return files


def _evolved(cfg: dict, command: str, *, need_snapshots: bool = False):
    model = _model_from(cfg, command)
    dx = _fnum(cfg, "dx", command)
    x_min = _fnum(cfg, "x_min", command)
    if isinstance(model, ImaginaryPotential):
        if not math.isfinite(model.L):
            raise ConfigError("evolution needs a finite detector length L")
        grid = grid_for_domain(x_min, dx, model.L, require_node_at=0.0)
    else:
        grid = grid_for_domain(x_min, dx, 0.0)
    packet = _packet_from(cfg, command)
    state = make_gaussian_packet(grid, packet)
    dt = cfg.get("dt")
    dt = float(dt) if dt is not None else default_time_step(model, grid, packet.k0)
    t_end = _fnum(cfg, "t_end", command)
    n_steps = max(1, round(t_end / dt))
    snapshot_stride = _inum(cfg, "snapshot_stride", command, 0) or None
    if need_snapshots and snapshot_stride is None:
        snapshot_stride = 10
    place_stride = _inum(cfg, "place_density_stride", command, 0) or None
    series = run(
        state,
        model,
        dt,
        n_steps,
        snapshot_stride=snapshot_stride,
        place_density_stride=place_stride,
    )
    resolved = dict(cfg)
    resolved["dt"] = dt
    resolved["n_steps"] = n_steps
    return model, state, series, resolved


def cmd_evolve(cfg: dict, outdir: str) -> tuple[dict, dict]:
    _, _, series, resolved = _evolved(cfg, "evolve")
    files = {"time_series.csv": os.path.join(outdir, "time_series.csv")}
    write_time_series_csv(series, files["time_series.csv"])
    if series.place_density is not None:
        files["place_density.csv"] = os.path.join(outdir, "place_density.csv")
        write_place_density_csv(series, files["place_density.csv"])
    return files, resolved


def cmd_bohm(cfg: dict, outdir: str, seed: int) -> tuple[dict, dict]:
    model, state, series, resolved = _evolved(cfg, "bohm", need_snapshots=True)
    n = _inum(cfg, "n_trajectories", "bohm")
    substeps = _inum(cfg, "substeps", "bohm", 1)
    positions = sample_initial_positions(state, n, seed)
    outcomes = simulate(model, series, positions, seed + 1, substeps=substeps)
    rows = []
    for i, o in enumerate(outcomes):
        rows.append([str(i), "1" if o.detected else "0", _fmt(o.detection_time), _fmt(o.detection_place)])
    files = {
        "trajectories.csv": os.path.join(outdir, "trajectories.csv"),
        "time_series.csv": os.path.join(outdir, "time_series.csv"),
        "bohm_summary.json": os.path.join(outdir, "bohm_summary.json"),
    }
    _write_csv(files["trajectories.csv"], ["index", "detected", "T", "X"], rows)
    write_time_series_csv(series, files["time_series.csv"])
    stats = summarize(outcomes)
    stats["terminal_norm_sq"] = series.terminal_norm_sq
    with open(files["bohm_summary.json"], "w") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    resolved["seed"] = seed
    resolved["substeps"] = substeps
    return files, resolved


def cmd_sweep(cfg: dict, outdir: str) -> dict:
    kind = _require(cfg, "sweep", "sweep")
    known = ("ck", "ck_dirichlet", "fii", "allcock", "rhot", "interval_roots")
    if kind not in known:
        raise ConfigError(f"field 'sweep' must be one of {', '.join(known)}; got {kind!r}")
    if kind == "allcock":
        values = _require(cfg, "v_values", "sweep")
        if not isinstance(values, list) or not values:
            raise ConfigError("field 'v_values' must be a nonempty list")
        report = sweep_allcock(_fnum(cfg, "k", "sweep"), [float(v) for v in values])
    else:
        sequence = make_hard_sequence(
            _fnum(cfg, "kappa", "sweep"),
            _fnum(cfg, "v0", "sweep"),
            _fnum(cfg, "ratio", "sweep"),
            _inum(cfg, "count", "sweep"),
        )
        if kind == "ck":
            report = sweep_ck(_fnum(cfg, "k", "sweep"), sequence, _wall_from(cfg, "sweep"))
        elif kind == "ck_dirichlet":
            report = sweep_ck_dirichlet(_fnum(cfg, "k", "sweep"), sequence)
        elif kind == "fii":
            report = sweep_fII(_fnum(cfg, "k", "sweep"), sequence)
        elif kind == "rhot":
            numerics = EvolutionNumerics(
                x_min=_fnum(cfg, "x_min", "sweep"),
                dx=_fnum(cfg, "dx", "sweep"),
                t_end=_fnum(cfg, "t_end", "sweep"),
                dt=float(cfg["dt"]) if cfg.get("dt") is not None else None,
                dt_hard=float(cfg["dt_hard"]) if cfg.get("dt_hard") is not None else None,
            )
            report = sweep_rhoT(
                _packet_from(cfg, "sweep"), sequence, numerics,
                nu=float(cfg.get("nu", 0.0)),
            )
        else:
            report = sweep_finite_interval_roots(
                _fnum(cfg, "ell", "sweep"), sequence, _window_from(cfg, "sweep"),
                _wall_from(cfg, "sweep"),
            )
    csv_name = f"sweep_{report.name}.csv"
    json_name = f"sweep_{report.name}_report.json"
    files = {
        csv_name: os.path.join(outdir, csv_name),
        json_name: os.path.join(outdir, json_name),
    }
    write_convergence_csv(report, files[csv_name])
    with open(files[json_name], "w") as fh:
        json.dump(report_to_dict(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return files


# --- driver ------------------------------------------------------------------


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _apply_overrides(cfg: dict, pairs: list[str]) -> dict:
    out = dict(cfg)
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, text = pair.split("=", 1)
        try:
            out[key] = json.loads(text)
        except json.JSONDecodeError:
            out[key] = text
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detectlab",
        description="Detection-model toolbox: eigenmodes, complex spectra, "
        "time evolution, trajectories, and hard-limit sweeps.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("eigen", "tabulate scattering modes over a range of wavenumbers"),
        ("spectrum", "discrete complex spectrum of the interval-truncated model"),
        ("evolve", "Crank-Nicolson run of a Gaussian packet"),
        ("bohm", "trajectory ensemble on top of an evolution run"),
        ("sweep", "hard-detector limit sweeps with a convergence verdict"),
    ]:
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="flat JSON configuration file")
        p.add_argument("--out", help="output directory (default: $DETECTLAB_OUT or .)")
        p.add_argument("--seed", type=int, help="random seed (bohm)")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override one configuration field (JSON value or bare string)",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        cfg = load_config(args.config) if args.config else {}
        cfg = _apply_overrides(cfg, args.set)
        outdir = args.out or os.environ.get("DETECTLAB_OUT") or "."
        os.makedirs(outdir, exist_ok=True)
        seed = args.seed if args.seed is not None else _inum(cfg, "seed", args.command, 0)
        resolved = dict(cfg)
        if args.command == "eigen":
            files = cmd_eigen(cfg, outdir)
        elif args.command == "spectrum":
            files = cmd_spectrum(cfg, outdir)
        elif args.command == "evolve":
            files, resolved = cmd_evolve(cfg, outdir)
        elif args.command == "bohm":
            files, resolved = cmd_bohm(cfg, outdir, seed)
        else:
            files = cmd_sweep(cfg, outdir)
        manifest = {
            "command": args.command,
            "version": __version__,
            "config": resolved,
            "outputs": {name: _sha256(path) for name, path in sorted(files.items())},
            "wallclock_seconds": round(time.perf_counter() - started, 6),
            "created_utc": datetime.now(timezone.utc).isoformat(),
        }
        with open(os.path.join(outdir, f"{args.command}_manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return 0
    except (ConfigError, ValueError, TypeError, KeyError, OSError, RuntimeError) as err:
        record = {"command": args.command, "error": str(err)}
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
