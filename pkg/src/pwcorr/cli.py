"""Command-line entry point.

    pwcorr verify              [--config FILE] [--out DIR] [--format csv|json|both]
    pwcorr demo-contradiction  ...
    pwcorr trajectories        ...
    pwcorr correlate           ...

Exit status: 0 pass, 1 a scientific check failed, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bohm import TrajectoryEnsemble, integrate_trajectories, sample_initial_positions
from .config import RunConfig, load_config
from .correlators import ContradictionRow, contradiction_report, correlation_sweep, worker_count
from .errors import ConfigurationError, PwcError
from .oscillator import build_state, oscillator_potential
from .verify import run_checks

log = logging.getLogger("pwcorr")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
ROW_FIELDS = ("tau", "qm_re", "qm_im", "qm_sym", "bohm", "fock_re", "fock_im", "flag")
DEMO_TOL_QM, DEMO_TOL_BOHM = 2e-4, 1e-3


def _fmt(v) -> str:
    return f"{v:.17g}" if isinstance(v, float) else str(v)


def write_json(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return path


def write_rows_csv(path: Path, rows: list[ContradictionRow]) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROW_FIELDS)
        for r in rows:
            d = r.as_dict()
            w.writerow([_fmt(d[k]) for k in ROW_FIELDS])
    return path


def write_trajectories_csv(path: Path, ens: TrajectoryEnsemble, every: int = 1) -> Path:
    idx = np.arange(0, ens.times.size, every)
    if idx[-1] != ens.times.size - 1:
        idx = np.append(idx, ens.times.size - 1)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["particle_id", "xi", "t", "x"])
        for j in range(ens.n_particles):
            xi = _fmt(float(ens.xi[j]))
            for i in idx:
                w.writerow([j, xi, _fmt(float(ens.times[i])), _fmt(float(ens.positions[i, j]))])
    return path


def _emit(cfg: RunConfig, out: Path, stem: str, payload: dict, rows=None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    if cfg.format in ("json", "both"):
        log.info("wrote %s", write_json(out / f"{stem}.json", payload))
    if rows is not None and cfg.format in ("csv", "both"):
        log.info("wrote %s", write_rows_csv(out / f"{stem}.csv", rows))


# subcommands ----------------------------------------------------------------

def run_verify(cfg: RunConfig, out: Path) -> int:
    checks = run_checks(cfg, log=print)
    failed = [c.name for c in checks if not c.passed]
    payload = {"config": cfg.to_dict(), "passed": not failed, "failed": failed,
               "checks": [c.as_dict() for c in checks]}
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "verify.json", payload)
    if cfg.format in ("csv", "both"):
        with (out / "verify.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["name", "value", "tolerance", "passed"])
            for c in checks:
                w.writerow([c.name, _fmt(c.value), _fmt(float(c.tolerance)), c.passed])
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    if failed:
        print("failing: " + ", ".join(failed))
    return EXIT_FAIL if failed else EXIT_OK


def run_contradiction_demo(cfg: RunConfig, out: Path) -> int:
    if not (cfg.state.kind == "eigenstate" and cfg.state.n == 0):
        raise ConfigurationError(
            f"demo-contradiction needs state = \"eigenstate:0\", got {cfg.state}; the "
            "opposite-sign result is derived for the ground state, where Bohmian "
            "particles stand still")
    half = cfg.period / 2
    lags = list(cfg.lags)
    if not any(abs(tau - half) <= 1e-12 * cfg.period for tau in lags):
        lags.append(half)
    report = contradiction_report(
        cfg.params, cfg.grid, lags, dt=cfg.dt, n_particles=cfg.ensemble.n,
        scheme=cfg.ensemble.scheme, seed=cfg.ensemble.seed, fock_dim=cfg.fock_dim)
    row = report.row_at(half)
    two_q2 = 2 * report.ground_q2
    ok = (row.qm.symmetrized < 0 < row.bohm.symmetrized
          and abs(row.qm.symmetrized + two_q2) <= DEMO_TOL_QM
          and abs(row.bohm.symmetrized - two_q2) <= DEMO_TOL_BOHM)
    report.extras = {"config": cfg.to_dict(), "half_period_lag": half,
                     "two_q2": two_q2, "status": "CONTRADICTION" if ok else "FAILED"}
    _emit(cfg, out, "contradiction", report.as_dict(), report.rows)

    print(f"{'tau/T':>8} {'qm_sym':>12} {'fock_sym':>12} {'bohm_sym':>12}  flag")
    for r in report.rows:
        print(f"{r.tau / cfg.period:8.4f} {r.qm.symmetrized:12.6f} "
              f"{r.fock.symmetrized:12.6f} {r.bohm.symmetrized:12.6f}  {r.flag}")
    print(f"T/2: quantum {row.qm.symmetrized:+.6f} vs Bohm {row.bohm.symmetrized:+.6f} "
          f"(2<q^2> = {two_q2:.6f}) -> {'CONTRADICTION' if ok else 'check failed'}")
    return EXIT_OK if ok else EXIT_FAIL


def run_trajectories(cfg: RunConfig, out: Path) -> int:
    psi0 = build_state(cfg.state, cfg.params, cfg.grid)
    ens = sample_initial_positions(psi0, cfg.ensemble.n, cfg.ensemble.scheme,
                                   cfg.ensemble.seed, source_state=cfg.state)
    ens = integrate_trajectories(ens, psi0, oscillator_potential(cfg.params, cfg.grid),
                                 cfg.t_final, cfg.dt, hbar=cfg.params.hbar,
                                 mass=cfg.params.mass, workers=worker_count())
    out.mkdir(parents=True, exist_ok=True)
    if cfg.format in ("csv", "both"):
        log.info("wrote %s", write_trajectories_csv(out / "trajectories.csv", ens,
                                                     cfg.record_every))
    if cfg.format in ("json", "both"):
        final = ens.positions[-1]
        payload = {"config": cfg.to_dict(), "n_particles": ens.n_particles,
                   "n_times": int(ens.times.size), "t_final": float(ens.times[-1]),
                   "particles": [{"particle_id": j, "xi": float(ens.xi[j]),
                                  "x_final": float(final[j]),
                                  "max_displacement": float(np.max(np.abs(
                                      ens.positions[:, j] - ens.xi[j])))}
                                 for j in range(ens.n_particles)]}
        write_json(out / "trajectories.json", payload)
    print(f"integrated {ens.n_particles} particles over {ens.times.size - 1} steps "
          f"to t = {ens.times[-1]:.6g}")
    return EXIT_OK


def run_correlate(cfg: RunConfig, out: Path) -> int:
    rows = correlation_sweep(cfg.state, cfg.params, cfg.grid, cfg.lags, dt=cfg.dt,
                             n_particles=cfg.ensemble.n, scheme=cfg.ensemble.scheme,
                             seed=cfg.ensemble.seed, fock_dim=cfg.fock_dim)
    payload = {"config": cfg.to_dict(), "params": cfg.params.to_dict(),
               "grid": cfg.grid.to_dict(), "state": str(cfg.state),
               "lags": [r.as_dict() for r in rows]}
    _emit(cfg, out, "correlations", payload, rows)
    for r in rows:
        print(f"tau = {r.tau:.6g}: qm {r.qm.value:.6f} fock {r.fock.value:.6f} "
              f"bohm {r.bohm.value.real:.6f} [{r.flag}]")
    return EXIT_OK


COMMANDS = {
    "verify": run_verify,
    "demo-contradiction": run_contradiction_demo,
    "trajectories": run_trajectories,
    "correlate": run_correlate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pwcorr",
        description="Bohmian vs quantum two-time correlations for the harmonic oscillator.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, default=None, help="TOML run configuration")
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--format", choices=("csv", "json", "both"), default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.format:
            cfg = replace(cfg, format=args.format)
        if args.out:
            cfg = replace(cfg, out_dir=str(args.out))
        return COMMANDS[args.command](cfg, Path(cfg.out_dir))
    except ConfigurationError as exc:
        print(f"pwcorr: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PwcError as exc:
        print(f"pwcorr: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
