"""Command-line entry point: ``neel <command> --config <path> [--out <dir>] [--override key=value ...]``.

Every run writes ``manifest.json`` (config echo, versions, wall clock, sha256
of each CSV).  Module errors produce ``error.json`` in the output directory
and exit code 2.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import platform
import sys
import time
from contextlib import nullcontext
from pathlib import Path

import numpy as np
import scipy
import scipy.fft as sfft

from . import __version__
from .config import RunConfig, dump, parse_config
from .dynamics import Forcing, NonlinearStepper, evolve
from .errors import NeelError
from .floquet import floquet_multipliers
from .grid import Grid
from .linear_ops import assemble_matrix, smallest_eigenpairs
from .periodic_orbit import extract_translation, find_periodic_wall, leading_order_Y
from .static_wall import solve_static_profile

log = logging.getLogger("neel")

COMMANDS = ("static", "evolve", "periodic", "floquet", "spectrum")


class _Writer:
    def __init__(self, out: Path, precision: int):
        self.out = out
        self.precision = precision
        self.files: list[str] = []

    def fmt(self, v) -> str:
        if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
            return str(int(v))
        return format(float(v), f".{self.precision}g")

    def csv(self, name: str, header, rows) -> None:
        path = self.out / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([self.fmt(v) for v in row])
        self.files.append(name)

    def text(self, name: str, body: str) -> None:
        (self.out / name).write_text(body)
        self.files.append(name)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _forcing(cfg: RunConfig) -> Forcing:
    return Forcing(cfg["physics.forcing_kind"], cfg["physics.forcing_amplitude"], cfg["physics.T"])


def _wall(cfg: RunConfig):
    grid = Grid(cfg["grid.L"], cfg["grid.N"])
    return solve_static_profile(grid, tol=cfg["solver.tol_static"], max_iter=cfg["solver.max_static_iter"])


def _orbit(cfg: RunConfig, wall):
    return find_periodic_wall(
        wall, cfg["physics.epsilon"], period=cfg["physics.T"], forcing=_forcing(cfg), nu=cfg["physics.nu"],
        dt=cfg["solver.dt"], snapshots=cfg["solver.snapshots"], tol=cfg["solver.tol_orbit"],
        max_newton=cfg["solver.max_newton"], krylov_dim=cfg["solver.krylov_dim"],
        allow_large=cfg["physics.allow_large_epsilon"])


def cmd_static(cfg: RunConfig, w: _Writer) -> dict:
    wall = _wall(cfg)
    g = wall.grid
    w.csv("profile.csv", ["x", "theta", "dtheta"], zip(g.x, wall.theta0, wall.dtheta0))
    return {"residual": wall.residual, "energy": wall.energy_value, "norm_sq_dtheta0": wall.norm_sq_dtheta0}


def cmd_spectrum(cfg: RunConfig, w: _Writer) -> dict:
    wall = _wall(cfg)
    m = assemble_matrix("L0", wall, cap=cfg["solver.dense_cap"])
    ep = smallest_eigenpairs(m, cfg["solver.n_eigen"])
    w.csv("eigenvalues.csv", ["index", "lambda", "residual"],
          ((i, lam, r) for i, (lam, r) in enumerate(zip(ep.values, ep.residuals))))
    return {"lambda_0": float(ep.values[0]), "Lambda_0": float(ep.values[1]) if len(ep) > 1 else None}


def cmd_evolve(cfg: RunConfig, w: _Writer) -> dict:
    wall = _wall(cfg)
    g = wall.grid
    nu = cfg["physics.nu"]
    bump = wall.project_out_translation(np.exp(-0.5 * g.x**2))
    bump /= g.norm(bump)
    s0 = np.stack([wall.w0 + cfg["evolve.perturbation"] * bump, np.zeros(g.N)])
    stepper = NonlinearStepper(g, cfg["solver.dt"], cfg["physics.epsilon"], nu, _forcing(cfg))
    base = np.stack([wall.w0, np.zeros(g.N)])
    traj = evolve(stepper, s0, 0.0, cfg["evolve.duration"], record_every=cfg["evolve.record_every"],
                  wall=wall, nu=nu, subtract=base)
    f = traj.diagnostics["f"]
    gg = traj.diagnostics["g"]
    rows = []
    for i, t in enumerate(traj.times):
        wv = traj.states[i]
        X, _ = extract_translation(g.theta_ref + wv[0], wall)
        rows.append((t, g.norm(wv[0]), g.norm(wv[1]), f[i], gg[i], X))
    w.csv("trajectory.csv", ["t", "w_l2", "v_l2", "f", "g", "X_fit"], rows)
    return {"steps": int(round(cfg["evolve.duration"] / cfg["solver.dt"])), "records": len(rows)}


def cmd_periodic(cfg: RunConfig, w: _Writer) -> dict:
    wall = _wall(cfg)
    orbit = _orbit(cfg, wall)
    eps = orbit.epsilon
    ys = leading_order_Y(wall, orbit.forcing, orbit.nu, orbit.period, samples=orbit.M)
    Xp = orbit.X_pinned()
    xe = Xp / eps if eps != 0.0 else np.full(orbit.M, np.nan)
    w.csv("orbit.csv", ["t", "X", "X_over_eps", "Y", "chi_H1"],
          zip(orbit.times, orbit.X, xe, ys.Y, orbit.chi_norm))
    g = orbit.grid
    every = cfg["output.snapshot_every"]

    def rows():
        for m in range(0, orbit.M, every):
            th = orbit.theta(m)
            tt = orbit.theta_t(m)
            for j in range(g.N):
                yield (orbit.times[m], g.x[j], th[j], tt[j])

    w.csv("orbit_snapshots.csv", ["t", "x", "theta", "theta_t"], rows())
    return {"epsilon": eps, "poincare_defect": orbit.residual, "max_abs_X": float(np.max(np.abs(orbit.X))),
            "max_chi_H1": float(np.max(orbit.chi_norm)), "newton_history": orbit.newton_history}


def cmd_floquet(cfg: RunConfig, w: _Writer) -> dict:
    wall = _wall(cfg)
    orbit = _orbit(cfg, wall)
    seed = int(os.environ.get("NEEL_SEED", "0"))
    res = floquet_multipliers(orbit, k=cfg["solver.n_multipliers"], seed=seed)
    w.csv("multipliers.csv", ["re", "im", "modulus", "residual"],
          ((mu.real, mu.imag, abs(mu), r) for mu, r in zip(res.multipliers, res.residuals)))
    w.text("verdict.txt", res.verdict_text())
    return {"stable": res.stable, "unit_multiplier_error": res.unit_multiplier_error,
            "second_modulus": res.second_modulus, "poincare_defect": orbit.residual}


HANDLERS = {"static": cmd_static, "spectrum": cmd_spectrum, "evolve": cmd_evolve,
            "periodic": cmd_periodic, "floquet": cmd_floquet}


def _thread_limit():
    raw = os.environ.get("NEEL_THREADS")
    if not raw:
        return nullcontext()
    n = max(1, int(raw))
    from threadpoolctl import threadpool_limits

    class _Both:
        def __enter__(self):
            self._a = threadpool_limits(n)
            self._a.__enter__()
            self._b = sfft.set_workers(n)
            self._b.__enter__()

        def __exit__(self, *exc):
            self._b.__exit__(*exc)
            self._a.__exit__(*exc)

    return _Both()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="neel", description="Neel wall simulator and Floquet stability analyzer.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="config file (defaults apply when omitted)")
    p.add_argument("--out", type=Path, help="output directory (overrides output.directory)")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="dotted config override, repeatable")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def run(command: str, cfg: RunConfig, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    writer = _Writer(out, cfg["output.precision"])
    t0 = time.time()
    try:
        with _thread_limit():
            summary = HANDLERS[command](cfg, writer)
    except NeelError as exc:
        (out / "error.json").write_text(json.dumps(exc.record(), indent=2, default=str) + "\n")
        log.error("%s: %s", type(exc).__name__, exc)
        return 2
    manifest = {
        "command": command,
        "config": cfg.as_dict(),
        "config_text": dump(cfg),
        "versions": {"neel": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "wall_clock_seconds": time.time() - t0,
        "checksums": {name: _sha256(out / name) for name in writer.files},
        "summary": summary,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=float) + "\n")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = args.out
    try:
        text = args.config.read_text() if args.config else ""
        cfg = parse_config(text, args.override)
    except NeelError as exc:
        target = out or Path("neel_out")
        target.mkdir(parents=True, exist_ok=True)
        (target / "error.json").write_text(json.dumps(exc.record(), indent=2) + "\n")
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    out = out or Path(cfg["output.directory"])
    return run(args.command, cfg, out)


if __name__ == "__main__":
    sys.exit(main())
