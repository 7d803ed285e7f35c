"""Command line interface.

Subcommands ``simulate``, ``steady``, ``roots``, ``sweep`` and ``hopf`` write
CSV/JSON files into ``--out``.  Exit codes: 0 success, 2 invalid
configuration, 3 divergence, 4 bracketing or convergence failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ModelError
from .grid import SpatialGrid
from .hopf import (DEFAULT_BRACKETS, AmplitudeParams, amplitude_evolve, analyze_hopf,
                   hopf_report, predict_vs_simulate, write_amplitude_csv)
from .io import dumps_json, fmt, write_csv, write_json
from .model import load_config
from .simulator import classify, simulate, write_snapshot_csv, write_trajectory_csv
from .spectral import CharacteristicContext, find_roots, write_roots_csv
from .steady import reconstruct_profiles, solve_p_at_gene, write_profile_csv

log = logging.getLogger("grnhopf")

PARAM_FLAGS = (("alpha_m", float), ("alpha_p", float), ("mu", float), ("h", int),
               ("l", float), ("x_M", float), ("epsilon", float))


def _common(parser):
    parser.add_argument("--config", type=Path, help="flat key = value parameter file")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    for name, typ in PARAM_FLAGS:
        parser.add_argument("--" + name.replace("_", "-"), dest=name, type=typ)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grnhopf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate the PDE and classify the attractor")
    _common(p)
    p.add_argument("--D", type=float)
    p.add_argument("--t-end", type=float, default=2e4)
    p.add_argument("--n-nodes", type=int, default=2001)
    p.add_argument("--sample-every", type=float, default=1.0)
    p.add_argument("--snapshot", type=float, action="append", default=[],
                   help="store the fields at this time (repeatable)")
    p.add_argument("--window-fraction", type=float, default=0.5)

    p = sub.add_parser("steady", help="point-source stationary profiles")
    _common(p)
    p.add_argument("--D", type=float)
    p.add_argument("--n-nodes", type=int, default=2001)

    p = sub.add_parser("roots", help="zeros of the characteristic function")
    _common(p)
    p.add_argument("--D", type=float, action="append", help="repeatable")
    p.add_argument("--seed-step", type=float, default=0.25)

    p = sub.add_parser("sweep", help="largest eigenvalue real part over a range of D")
    _common(p)
    p.add_argument("--d-min", type=float, default=1e-7)
    p.add_argument("--d-max", type=float, default=0.1)
    p.add_argument("--count", type=int, default=40)

    p = sub.add_parser("hopf", help="critical points and normal-form coefficients")
    _common(p)
    p.add_argument("--bracket", type=float, nargs=2, metavar=("D_LO", "D_HI"))
    p.add_argument("--amplitude-t-end", type=float, default=200.0)
    p.add_argument("--amplitude-dt", type=float, default=1e-3)
    p.add_argument("--verify-amplitude", action="store_true",
                   help="compare simulated limit-cycle amplitudes near the first point")
    p.add_argument("--n-nodes", type=int, default=1001)
    return parser


def _params(args):
    overrides = {name: getattr(args, name) for name, _ in PARAM_FLAGS}
    overrides["D"] = getattr(args, "D", None)
    if isinstance(overrides["D"], list):
        overrides["D"] = None
    return load_config(args.config, overrides)


def _require_D(D):
    if D is None:
        raise ConfigurationError("no diffusion coefficient given (--D or config key D)")
    if not (np.isfinite(D) and D > 0):
        raise ConfigurationError(f"D must be positive, got {D!r}")
    return D


def _outdir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create output directory {path}: {exc}") from exc
    return path


def cmd_simulate(args) -> int:
    params, D = _params(args)
    D = _require_D(D)
    out = _outdir(args.out)
    grid = SpatialGrid(args.n_nodes)
    log.info("simulate D=%g t_end=%g nodes=%d", D, args.t_end, args.n_nodes)
    traj = simulate(params, D, args.t_end, grid, args.sample_every,
                    snapshot_times=args.snapshot)
    cls = classify(traj, args.window_fraction)
    write_trajectory_csv(out / "trajectory.csv", traj)
    write_snapshot_csv(out / "snapshot_final.csv", grid, traj.final)
    for t, state in sorted(traj.snapshots.items()):
        write_snapshot_csv(out / f"snapshot_t{fmt(t)}.csv", grid, state)
    summary = {"D": D, "t_end": float(traj.times[-1]), "n_nodes": grid.n_nodes, "dt": traj.dt,
               "kind": cls.kind, "rel_amplitude": cls.rel_amplitude,
               "period": cls.period, "decay_ratio": cls.decay_ratio}
    write_json(out / "summary.json", summary)
    sys.stdout.write(dumps_json(summary))
    return 0


def cmd_steady(args) -> int:
    params, D = _params(args)
    D = _require_D(D)
    out = _outdir(args.out)
    log.info("steady D=%g", D)
    pg = solve_p_at_gene(params, D)
    sol = reconstruct_profiles(params, D, pg, SpatialGrid(args.n_nodes))
    write_profile_csv(out / "profile.csv", sol)
    write_csv(out / "summary.csv", ("D", "p_at_gene", "residual"), [(D, pg, sol.residual)])
    sys.stdout.write(f"{fmt(D)},{fmt(pg)},{fmt(sol.residual)}\n")
    return 0


def cmd_roots(args) -> int:
    params, D_cfg = _params(args)
    Ds = args.D or ([D_cfg] if D_cfg is not None else [])
    if not Ds:
        raise ConfigurationError("no diffusion coefficient given (--D or config key D)")
    out = _outdir(args.out)
    sets = []
    for D in Ds:
        _require_D(D)
        log.info("roots D=%g", D)
        sets.append(find_roots(CharacteristicContext.create(params, D), step=args.seed_step))
    write_roots_csv(out / "roots.csv", sets)
    sys.stdout.write((out / "roots.csv").read_text())
    return 0


def cmd_sweep(args) -> int:
    params, _ = _params(args)
    if args.count < 1 or not (0 < args.d_min <= args.d_max):
        raise ConfigurationError("empty sweep range")
    if args.count > 1 and args.d_min == args.d_max:
        raise ConfigurationError("empty sweep range")
    out = _outdir(args.out)
    Ds = np.geomspace(args.d_min, args.d_max, args.count) if args.count > 1 else [args.d_min]
    rows = []
    for D in Ds:
        rs = find_roots(CharacteristicContext.create(params, float(D)))
        n_unstable = int(np.sum(rs.roots.real > 0)) if len(rs) else 0
        rows.append((float(D), rs.max_real, n_unstable))
        log.info("sweep D=%g max Re=%.6g unstable=%d", D, rs.max_real, n_unstable)
    write_csv(out / "sweep.csv", ("D", "max_re_lambda", "n_unstable"), rows)
    sys.stdout.write((out / "sweep.csv").read_text())
    return 0


def cmd_hopf(args) -> int:
    params, _ = _params(args)
    out = _outdir(args.out)
    brackets = [tuple(args.bracket)] if args.bracket else list(DEFAULT_BRACKETS)
    points = []
    for br in brackets:
        log.info("hopf bracket [%g, %g]", *br)
        hp = analyze_hopf(params, br)
        points.append(hp)
        ap = amplitude_evolve(AmplitudeParams(hp.a, hp.b, hp.nu, 0.1),
                              args.amplitude_t_end, args.amplitude_dt)
        write_amplitude_csv(out / f"amplitude_j{hp.j}.csv", ap)
    reports = [hopf_report(hp) for hp in points]
    write_json(out / "hopf.json", reports)
    sys.stdout.write(dumps_json(reports))
    if args.verify_amplitude:
        hp = points[0]
        log.info("amplitude check near D=%g (several PDE runs)", hp.D_c)
        chk = predict_vs_simulate(params, hp, grid=SpatialGrid(args.n_nodes))
        report = {"j": hp.j, "offsets": list(chk.offsets), "D": list(chk.D_above),
                  "amplitudes": list(chk.amplitudes),
                  "predicted_amplitudes": list(chk.predicted_amplitudes),
                  "periods": [p if p is not None else None for p in chk.periods],
                  "predicted_period": chk.predicted_period,
                  "exponent": chk.exponent, "below_kinds": list(chk.below_kinds)}
        write_json(out / "amplitude_check.json", report)
        sys.stdout.write(dumps_json(report))
    return 0


COMMANDS = {"simulate": cmd_simulate, "steady": cmd_steady, "roots": cmd_roots,
            "sweep": cmd_sweep, "hopf": cmd_hopf}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ModelError as exc:
        log.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
