"""Command-line entry point: ``spinqed <command> [--config PATH] [--out DIR] ...``.

Exit status: 0 ok, 1 configuration error, 2 numerical or invariant failure.
Every CSV starts with ``#`` lines recording the code version, the command,
the seed and every configuration value with its origin.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from . import radiative as rd
from .bloch_core import bloch_evolve, spin_symbol0
from .checks import oracle_amplitudes, run_all
from .config import RunConfig, load_config
from .errors import ConfigurationError, DomainError, NumericalError, TruncationWarning
from .field_symbols import SpinSystem, default_rule
from .fock_oracle import DiscreteModeSet, fit_hbar_series, observe_trajectory
from .mode_space import PhasePoint, RadialCutoff, build_grid, free_evolve
from .photon_number import (
    NarrowbandSpec,
    energy_balance_residual,
    field_time_derivative_check,
    make_narrowband,
    n0_rate,
    photon_primitive,
)
from .transition import TransitionQuery, transition_bound

log = logging.getLogger("spinqed")

COMMANDS = ("bloch", "correction", "photon-rate", "bound", "oracle", "sweep", "selftest")


class InvariantFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# config -> objects
# ---------------------------------------------------------------------------

def _cutoff(cfg: RunConfig) -> RadialCutoff:
    return RadialCutoff(cfg["cutoff", "kind"], cfg["cutoff", "scale"], cfg["cutoff", "amplitude"])


def _system(cfg: RunConfig) -> SpinSystem:
    return SpinSystem(np.array(cfg["system", "positions"]), np.array(cfg["system", "b_ext"]))


def _spin_state(cfg: RunConfig, key=("spin", "state"), dim=2):
    a = np.array(cfg[key], dtype=complex)
    if len(a) != dim:
        raise ConfigurationError(f"[{key[0]}] {key[1]} needs {dim} amplitudes, got {len(a)}")
    return a / np.linalg.norm(a)


def _grid(cfg: RunConfig):
    return build_grid(cfg["grid", "n_radial"], cfg["grid", "max_r"],
                      cfg["grid", "n_polar"], cfg["grid", "n_azimuth"])


def _field(cfg: RunConfig):
    grid = _grid(cfg)
    if cfg["field", "kind"] == "zero":
        return PhasePoint.zero(grid), None
    spec = NarrowbandSpec(cfg["field", "nu"], cfg["field", "eps"], cfg["field", "sign"],
                          cfg["field", "amplitude"], tuple(cfg["field", "direction"]),
                          cfg["field", "angular_width"], cfg["field", "tilt"])
    return make_narrowband(spec, grid), spec


def _times(cfg: RunConfig):
    """Sample times on the integrator grid."""
    t_final, dt, n = cfg["time", "t_final"], cfg["time", "dt"], cfg["time", "n_samples"]
    steps = max(1, int(round(t_final / dt)))
    idx = np.unique(np.round(np.linspace(0, steps, n)).astype(int))
    return idx * (t_final / steps)


def _single_mode(cfg: RunConfig, system: SpinSystem):
    return DiscreteModeSet.single(cfg["oracle", "k"], cfg["oracle", "weight"], system,
                                  cfg["oracle", "polarization"], _cutoff(cfg))


def _mode_point(grid, modes, amp: complex) -> PhasePoint:
    z = amp * modes.polarizations[0][None, :]
    return PhasePoint(grid, z.real, z.imag, project=False)


def _observable(text: str):
    if text in ("number", "number_rate"):
        return text
    parts = text.split(":")
    if len(parts) == 3 and parts[0] == "spin":
        try:
            lam, m = int(parts[1]), int(parts[2])
        except ValueError:
            pass
        else:
            if m in (1, 2, 3) and lam >= 0:
                return ("spin", lam, m)
    raise ConfigurationError(
        f"unknown observable {text!r}; use number, number_rate or spin:<particle>:<1|2|3>")


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _header(cfg: RunConfig, command: str, seed: int, extra=()) -> list[str]:
    lines = [f"spinqed {__version__}", f"command: {command}", f"seed: {seed}"]
    lines += cfg.header_lines()
    lines += list(extra)
    return ["# " + s for s in lines]


def _write_csv(path, header, columns: dict, precision: int):
    names = list(columns)
    data = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
    with open(path, "w") as fh:
        fh.write("\n".join(header) + "\n")
        fh.write(",".join(names) + "\n")
        for row in data:
            fh.write(",".join(f"{v:.{precision}e}" for v in row) + "\n")
    return path


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_bloch(cfg, args):
    system = _system(cfg)
    cutoff = _cutoff(cfg)
    X, _ = _field(cfg)
    a = _spin_state(cfg, dim=system.dim)
    times = _times(cfg)
    traj = bloch_evolve(system, X, float(times[-1]), cfg["time", "dt"], cutoff, sample_times=times)
    cols = {"t": traj.times}
    for lam in range(system.n):
        for m in range(3):
            for n in range(3):
                cols[f"R{lam}_{m + 1}{n + 1}"] = traj.R[:, lam, m, n]
        vals = np.array([spin_symbol0(traj[i], lam).expectation(a) for i in range(len(traj))])
        for m in range(3):
            cols[f"S{lam}_{m + 1}"] = vals[:, m]
    worst = max(traj[i].orthogonality_defect() for i in range(len(traj)))
    extra = [f"grid: {X.grid.description}", f"orthogonality defect: {worst:.3e}"]
    path = _write_csv(os.path.join(args.out, "bloch.csv"),
                      _header(cfg, "bloch", args.seed, extra), cols, cfg["output", "precision"])
    print(f"wrote {path}")
    if worst > 1e-9:
        raise InvariantFailure(f"bloch_core: rotation lost orthogonality ({worst:.2e})")


def cmd_correction(cfg, args):
    system = _system(cfg)
    b = system.b_ext
    if system.n != 1 or np.any(system.positions[0] != 0) or abs(b[0]) + abs(b[1]) > 0:
        raise ConfigurationError(
            "correction needs one particle at the origin and b_ext along z")
    bmag = float(b[2])
    cutoff = _cutoff(cfg)
    t = np.linspace(0.0, cfg["time", "t_final"], cfg["time", "n_samples"])
    F = rd.f_coefficients(t, bmag, cutoff)
    cols = {"t": t, "phi0": rd.phi0(t, bmag, cutoff), "phi3": rd.phi3(t, bmag, cutoff),
            "F3_z": F["F3"][:, 2], "s1_z": rd.s1_third(t, bmag, cutoff)}
    rule = default_rule(cutoff)
    extra = [f"cutoff: {cutoff.describe()}", f"|B| = {bmag!r}",
             f"radial rule: composite Gauss-Legendre, {len(rule.nodes)} nodes on [0, {rule.max_r:g}]",
             "time rule: composite Gauss-Legendre, 64 nodes per panel of length 2",
             f"resonance Taylor switch: {rd.RESONANCE_SWITCH:g}"]
    path = _write_csv(os.path.join(args.out, "correction.csv"),
                      _header(cfg, "correction", args.seed, extra), cols, cfg["output", "precision"])
    print(f"wrote {path}")
    s1 = cols["s1_z"]
    if s1[0] != 0.0 or np.any(s1 > 0.0):
        raise InvariantFailure("radiative: s1_z must vanish at t=0 and be <= 0")


def cmd_photon_rate(cfg, args):
    system = _system(cfg)
    cutoff = _cutoff(cfg)
    X, spec = _field(cfg)
    if spec is None:
        raise ConfigurationError("photon-rate needs [field] kind = narrowband")
    a = _spin_state(cfg, dim=system.dim)
    times = _times(cfg)
    dt = cfg["time", "dt"]
    traj = bloch_evolve(system, X, float(times[-1]), dt, cutoff, sample_times=times)
    rates = np.array([np.real(a.conj() @ n0_rate(traj[i].t, X, system, traj[i], cutoff) @ a)
                      for i in range(len(traj))])
    deriv = np.array([max(field_time_derivative_check(x, t, X, spec.nu, spec.sign, cutoff)
                          for x in system.positions) for t in traj.times])
    cols = {"t": traj.times, "rate": rates, "cumulative": photon_primitive(traj.times, rates),
            "field_derivative_residual": deriv}
    balance = energy_balance_residual(system, X, spec.nu, float(times[-1]), dt, cutoff=cutoff)
    extra = [f"grid: {X.grid.description}", f"narrowband: {spec}",
             f"energy-balance residual at t = {times[-1]:g}: {balance:.6e}"]
    path = _write_csv(os.path.join(args.out, "photon_rate.csv"),
                      _header(cfg, "photon-rate", args.seed, extra), cols, cfg["output", "precision"])
    print(f"wrote {path}")
    print(f"energy-balance residual {balance:.3e}")


def _bound_query(cfg, system):
    modes, grid = _single_mode(cfg, system)
    t, hbar = cfg["bound", "t"], cfg["bound", "hbar"]
    X = _mode_point(grid, modes, cfg["bound", "x"])
    ztext = cfg["bound", "z"]
    if ztext == "evolved":
        Z = free_evolve(X, t)
    else:
        try:
            Z = _mode_point(grid, modes, complex(ztext.replace(" ", "")))
        except ValueError:
            raise ConfigurationError(
                f"[bound] z must be 'evolved' or a complex amplitude, got {ztext!r}") from None
    a = _spin_state(cfg, ("bound", "a"), system.dim)
    b = _spin_state(cfg, ("bound", "b"), system.dim)
    return modes, TransitionQuery(X, Z, t, hbar, a, b)


def cmd_bound(cfg, args):
    system = _system(cfg)
    cutoff = _cutoff(cfg)
    modes, q = _bound_query(cfg, system)
    bound = transition_bound(q, system, cutoff)
    swapped = transition_bound(q.swapped(), system, cutoff)
    cols = {"t": [q.t], "hbar": [q.hbar], "bound": [bound], "bound_swapped": [swapped]}
    print(f"bound {bound!r}")
    if cfg["bound", "oracle"]:
        minus, plus, mass = oracle_amplitudes(system, modes, q, cfg["bound", "n_max"])
        cols.update({"amp_minus": [minus], "amp_plus": [plus], "truncation_mass": [mass]})
        print(f"oracle |<exp(-itH/hbar) Psi_X a, Psi_Z b>| = {minus:.12g} (bound {bound:.12g})")
        print(f"oracle |<exp(+itH/hbar) Psi_X a, Psi_Z b>| = {plus:.12g} "
              f"(swapped bound {swapped:.12g})")
    path = _write_csv(os.path.join(args.out, "bound.csv"), _header(cfg, "bound", args.seed),
                      cols, cfg["output", "precision"])
    print(f"wrote {path}")
    if cfg["bound", "oracle"] and (cols["amp_minus"][0] > bound + 1e-6
                                   or cols["amp_plus"][0] > swapped + 1e-6):
        raise InvariantFailure("transition: oracle amplitude exceeds the bound")


def cmd_oracle(cfg, args):
    system = _system(cfg)
    modes, grid = _single_mode(cfg, system)
    X = _mode_point(grid, modes, cfg["oracle", "amplitude"])
    obs = _observable(cfg["oracle", "observable"])
    hbar = cfg["hbar", "value"]
    a = _spin_state(cfg, dim=system.dim)
    times = np.linspace(0.0, cfg["time", "t_final"], cfg["time", "n_samples"])
    res = observe_trajectory(obs, X, hbar, times, modes, system, a, cfg["oracle", "n_max"])
    header = _header(cfg, "oracle", args.seed, [f"observable: {obs}", f"hbar: {hbar!r}"])
    path = _write_csv(os.path.join(args.out, "oracle.csv"), header,
                      {"t": res.times, "value": res.values}, cfg["output", "precision"])
    summary = {"observable": str(obs), "hbar": hbar, "truncation_mass": res.truncation_mass,
               "top_shell_drift": res.drift, "norm_defect": res.norm_defect,
               "flagged": res.flagged, "notes": res.notes, "version": __version__}
    _write_json(os.path.join(args.out, "oracle_summary.json"), summary)
    print(f"wrote {path}")
    if res.norm_defect > 1e-10:
        raise InvariantFailure(f"fock_oracle: norm defect {res.norm_defect:.2e}")


def cmd_sweep(cfg, args):
    system = _system(cfg)
    modes, grid = _single_mode(cfg, system)
    X = _mode_point(grid, modes, cfg["oracle", "amplitude"])
    obs = _observable(cfg["oracle", "observable"])
    hbars = np.array(cfg["hbar", "list"])
    a = _spin_state(cfg, dim=system.dim)
    t = cfg["time", "t_final"]
    n_max = cfg["oracle", "n_max"]

    def one(h):
        return observe_trajectory(obs, X, h, [t], modes, system, a, n_max)

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        runs = list(pool.map(one, hbars))
    fit = fit_hbar_series(hbars, [r.values[0] for r in runs], cfg["oracle", "degree"])
    flagged = fit.flagged or any(r.flagged for r in runs)
    header = _header(cfg, "sweep", args.seed, [f"observable: {obs}", f"t: {t!r}"])
    path = _write_csv(os.path.join(args.out, "sweep.csv"), header,
                      {"hbar": hbars, "value": fit.values,
                       "truncation_mass": [r.truncation_mass for r in runs],
                       "top_shell_drift": [r.drift for r in runs]},
                      cfg["output", "precision"])
    summary = {"observable": str(obs), "t": t, "coefficients": [float(c) for c in fit.coefficients],
               "residual": fit.residual, "order": fit.order, "flagged": flagged,
               "notes": fit.notes + [n for r in runs for n in r.notes], "version": __version__}
    _write_json(os.path.join(args.out, "sweep_summary.json"), summary)
    print(f"wrote {path}")
    print("c = " + ", ".join(f"{c:.8g}" for c in fit.coefficients) + f"; order {fit.order:.4f}")


def cmd_selftest(cfg, args):
    results = run_all(report=print, seed=args.seed)
    failed = [r for r in results if not r.passed]
    if failed:
        raise InvariantFailure(f"{len(failed)} selftest check(s) failed: "
                               + ", ".join(f"{r.label} {r.name}" for r in failed))
    print("selftest: all checks passed")


HANDLERS = {
    "bloch": cmd_bloch,
    "correction": cmd_correction,
    "photon-rate": cmd_photon_rate,
    "bound": cmd_bound,
    "oracle": cmd_oracle,
    "sweep": cmd_sweep,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinqed", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"spinqed {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", default=None, help="INI configuration file")
    parser.add_argument("--out", default=".", help="output directory (default: .)")
    parser.add_argument("--seed", type=int, default=7,
                        help="seed for sampled checks (selftest queries)")
    parser.add_argument("--threads", type=int, default=1,
                        help="workers for independent parameter points")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise ConfigurationError("--threads must be >= 1")
        cfg = load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("always", TruncationWarning)
            HANDLERS[args.command](cfg, args)
    except (ConfigurationError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, InvariantFailure, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
