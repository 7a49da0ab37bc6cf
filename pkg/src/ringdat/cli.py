"""Command-line front end; one subcommand per experiment.

    ringdat spectrum     ring spectra, analytic and numeric, plus gap report
    ringdat closed       coherent transfer probabilities |<j|psi(t)>|^2
    ringdat gamma-scan   sink population at fixed time against sink rate
    ringdat sweeps       disorder sweep and dephasing sweep
    ringdat dat-map      (sigma, gamma) map of the ensemble-mean sink population

Every run writes its data files plus ``manifest.json`` into the output
directory. Files are staged and renamed only after every result has been
computed and validated, so a failed run leaves no partial outputs.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Callable, Optional

import numpy as np

from . import __version__
from . import io as rio
from .config import ENV_PREFIX, ConfigError, RunConfig, load
from .dynamics import evolve_closed, optimize_sink_rate
from .ensemble import RealizationError, dat_comparison, dat_map, sweep_dephasing, sweep_disorder
from .integrate import IntegrationError
from .lattice import (
    analytic_spectrum,
    build_hamiltonian,
    hamiltonian_in_units_of_J,
    numeric_spectrum,
    spectral_gap,
)

log = logging.getLogger("ringdat")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COMPUTE = 3
EXIT_IO = 4


class ValidationFailure(RuntimeError):
    pass


def _check(condition: bool, message: str):
    if not condition:
        raise ValidationFailure(message)


class Outputs:
    """Collects rendered tables; nothing touches the disk until :meth:`commit`."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.files: dict[str, str] = {}

    def add(self, stem: str, table: rio.Table):
        for fmt in self.cfg.output.formats:
            self.files[f"{stem}.{fmt}"] = table.render(fmt)

    def commit(self, command: str, threads: int):
        manifest = {
            "command": command,
            "version": __version__,
            "seed": self.cfg.disorder.seed,
            "config": self.cfg.echo(),
            "files": {name: rio.sha256(text) for name, text in sorted(self.files.items())},
            "execution": {"threads": threads},
        }
        files = dict(self.files)
        files["manifest.json"] = rio.json_text(manifest)
        return rio.write_all(self.cfg.output.directory, files)


def cmd_spectrum(cfg: RunConfig, out: Outputs, threads: int):
    rows = []
    for kind, topo in cfg.topology.topologies().items():
        analytic = analytic_spectrum(topo)
        numeric = numeric_spectrum(build_hamiltonian(topo), vectors=False)
        deviation = float(np.max(np.abs(analytic.eigenvalues - numeric.eigenvalues)))
        scale = max(1.0, float(np.max(np.abs(numeric.eigenvalues))))
        _check(deviation <= 1e-10 * scale, f"{kind}: analytic and numeric spectra differ by {deviation}")
        out.add(f"spectrum_{kind}_analytic", rio.spectrum_table(analytic))
        out.add(f"spectrum_{kind}_numeric", rio.spectrum_table(numeric))
        absval = np.abs(analytic.eigenvalues)
        rows.append((kind, spectral_gap(analytic.eigenvalues), float(absval.min()), float(absval.max()), deviation))
    out.add("gap_report", rio.Table(("topology", "gap", "min_abs_eigenvalue", "max_abs_eigenvalue", "max_abs_deviation"), rows))


def cmd_closed(cfg: RunConfig, out: Outputs, threads: int):
    t_max = cfg.time.t_max or 50.0
    times = np.linspace(0.0, t_max, cfg.time.n_samples)
    for kind, topo in cfg.topology.topologies().items():
        traj = evolve_closed(hamiltonian_in_units_of_J(topo), 1, times)
        _check(bool(np.all(np.abs(traj.site_populations.sum(axis=1) - 1) < 1e-10)), f"{kind}: norm not conserved")
        out.add(f"closed_{kind}", rio.closed_table(traj))


def cmd_gamma_scan(cfg: RunConfig, out: Outputs, threads: int):
    grid = cfg.sweep.Gamma_grid
    t_eval = cfg.sweep.Gamma_t_eval
    rows = []
    for kind, topo in cfg.topology.topologies().items():
        log.info("%s: scanning %d sink rates at Jt=%g", kind, len(grid), t_eval)
        best, curve = optimize_sink_rate(
            hamiltonian_in_units_of_J(topo),
            grid,
            t_eval,
            gamma=cfg.noise.gamma_over_J,
            sink_source=cfg.noise.sink_source,
            integrator=cfg.integrator.build(),
        )
        _check(bool(np.all((curve > -1e-10) & (curve < 1 + 1e-10))), f"{kind}: sink population out of [0, 1]")
        out.add(f"gamma_scan_{kind}", rio.gamma_scan_table(grid, np.clip(curve, 0, 1)))
        rows.append((kind, best, float(np.clip(curve.max(), 0, 1)), t_eval))
    out.add("gamma_optimum", rio.Table(("topology", "Gamma_best_over_J", "p_sink_at_optimum", "t_eval"), rows))


def _check_unit_interval(kind: str, values):
    values = np.asarray(values)
    _check(bool(np.all((values > -1e-10) & (values < 1 + 1e-10))), f"{kind}: sink population out of [0, 1]")


def cmd_sweeps(cfg: RunConfig, out: Outputs, threads: int):
    for kind, topo in cfg.topology.topologies().items():
        template = cfg.ensemble_template(topo)
        log.info("%s: disorder sweep over %d values, M=%d", kind, len(cfg.sweep.sigma_grid), template.M)
        dis = sweep_disorder(template, cfg.sweep.sigma_grid, workers=threads)
        log.info("%s: dephasing sweep over %d values", kind, len(cfg.sweep.gamma_grid))
        deph = sweep_dephasing(template, cfg.sweep.gamma_grid, workers=threads)
        _check_unit_interval(kind, dis.mean)
        _check_unit_interval(kind, deph.p_sink)
        out.add(f"sweep_disorder_{kind}", rio.disorder_sweep_table(dis))
        out.add(f"sweep_dephasing_{kind}", rio.dephasing_sweep_table(deph))


def cmd_dat_map(cfg: RunConfig, out: Outputs, threads: int, comparison: bool = False):
    for kind, topo in cfg.topology.topologies().items():
        template = cfg.ensemble_template(topo)
        s_grid, g_grid = cfg.sweep.sigma_grid, cfg.sweep.gamma_grid
        log.info("%s: %dx%d map, M=%d, Jt=%g", kind, len(s_grid), len(g_grid), template.M, template.t_eval)
        m = dat_map(template, s_grid, g_grid, workers=threads)
        _check_unit_interval(kind, m.mean)
        _check(bool(np.all(m.stderr >= 0)), f"{kind}: negative standard error")
        out.add(f"dat_map_{kind}", rio.map_table(m))
        if comparison:
            log.info("%s: comparison curves up to Jt=%g", kind, cfg.sweep.comparison_t_max)
            n = cfg.time.n_samples
            curves = dat_comparison(
                template.with_(t_eval=cfg.sweep.comparison_t_max, n_samples=n),
                cfg.sweep.comparison_sigma_over_J,
                cfg.sweep.comparison_gamma_over_J,
                workers=threads,
            )
            for curve in curves.values():
                _check_unit_interval(kind, curve.mean)
            out.add(f"dat_comparison_{kind}", rio.comparison_table(curves))


COMMANDS: dict[str, Callable] = {
    "spectrum": cmd_spectrum,
    "closed": cmd_closed,
    "gamma-scan": cmd_gamma_scan,
    "sweeps": cmd_sweeps,
    "dat-map": cmd_dat_map,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ringdat", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ringdat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH", help="JSON run configuration")
        p.add_argument("--out", metavar="DIR", help=f"output directory (env {ENV_PREFIX}OUT)")
        p.add_argument("--seed", type=int, help=f"disorder seed (env {ENV_PREFIX}SEED)")
        p.add_argument("--threads", type=int, help=f"worker processes (env {ENV_PREFIX}THREADS, default 1)")
        p.add_argument("--topology", choices=["isotropic", "dimerized", "both"])
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "dat-map":
            p.add_argument("--comparison", action="store_true", help="also write the disorder/dephasing comparison curves")
    return parser


def _flag_overrides(args) -> dict:
    out: dict = {}
    if args.out is not None:
        out.setdefault("output", {})["directory"] = args.out
    if args.seed is not None:
        out.setdefault("disorder", {})["seed"] = args.seed
    if args.topology is not None:
        out.setdefault("topology", {})["kind"] = args.topology
    return out


def _threads(args, environ) -> int:
    value = args.threads
    if value is None:
        value = int(environ.get(f"{ENV_PREFIX}THREADS", "1"))
    if value < 1:
        raise ConfigError(f"--threads must be >= 1, got {value}")
    return value


def main(argv: Optional[list[str]] = None, environ=None) -> int:
    environ = os.environ if environ is None else environ
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        threads = _threads(args, environ)
        cfg = load(args.config, _flag_overrides(args), environ)
    except (ConfigError, ValueError) as exc:
        print(f"ringdat: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Outputs(cfg)
    try:
        if args.command == "dat-map":
            cmd_dat_map(cfg, out, threads, comparison=args.comparison)
        else:
            COMMANDS[args.command](cfg, out, threads)
    except (IntegrationError, RealizationError, ValidationFailure, ValueError) as exc:
        print(f"ringdat {args.command}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE

    try:
        written = out.commit(args.command, threads)
    except OSError as exc:
        print(f"ringdat: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in written:
        log.info("wrote %s", path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
