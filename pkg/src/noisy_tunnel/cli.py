"""Command-line front end.

Subcommands: ``evolve`` (time series), ``sweep-coherence`` (t x K grid),
``sweep-nonmarkov`` (K x kappa grid) and ``validate`` (oracle suite).
Settings resolve as CLI flag > config file > built-in default; every output
file starts with a ``# ``-prefixed manifest holding the resolved settings,
and can itself be passed back via ``--config`` to reproduce the run.

Exit codes: 0 success, 2 invalid arguments or config, 3 numerical failure
(integrator underflow, or a horizon warning under ``--strict``),
4 validation failure.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import __version__, csvio, sweeps, validate
from .config import (
    ConfigError,
    load_config,
    parse_bool,
    parse_float_list,
    parse_str_list,
)
from .integrators import IntegrationError
from .sweeps import Axis, SweepSpec

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATION = 4


def _workers_default() -> int:
    env = os.environ.get("NOISY_TUNNEL_WORKERS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"NOISY_TUNNEL_WORKERS is not an integer: {env!r}")
    return 1


class Settings:
    """CLI > config > default resolution for one subcommand run."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config: dict[str, str] = {}
        if args.config:
            self.config = load_config(args.config)

    def get(self, attr: str, key: str, default, parse=None):
        cli_value = getattr(self.args, attr, None)
        if cli_value is not None:
            return cli_value
        if key in self.config:
            raw = self.config[key]
            try:
                return parse(raw) if parse else type(default)(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key {key}: {exc}")
        return default


def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument("--config", help="config file (or a previous output CSV)")
    sub.add_argument("--out", help="output CSV path")
    sub.add_argument("--seed", type=int, help="base RNG seed (default 1234)")
    sub.add_argument("--workers", type=int,
                     help="worker threads for sweep points "
                          "(default: NOISY_TUNNEL_WORKERS or 1)")
    sub.add_argument("--strict", action="store_true",
                     help="escalate numerical warnings to exit code 3")


def _add_params(sub: argparse.ArgumentParser, with_nu: bool):
    sub.add_argument("--epsilon", help="static bias values, comma separated")
    sub.add_argument("--kappa", type=float, help="Gaussian noise intensity")
    sub.add_argument("--delta0", type=float, help="mean tunneling rate")
    sub.add_argument("--delta1", type=float, help="telegraph noise amplitude")
    if with_nu:
        sub.add_argument("--nu", type=float, help="telegraph switching rate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisy-tunnel",
        description="Noise-averaged qubit tunneling: dynamics, coherence, "
                    "non-Markovianity, and Monte Carlo validation.")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("evolve", help="time series of Bloch components and coherences")
    _add_common(p)
    _add_params(p, with_nu=True)
    p.add_argument("--initial", help="initial states, e.g. rho1,rho2")
    p.add_argument("--t-max", type=float, help="end of the time grid")
    p.add_argument("--t-count", type=int, help="number of grid points")
    p.add_argument("--method", choices=["expm", "rk45"], help="ODE backend")

    p = subs.add_parser("sweep-coherence", help="l1 coherence over a (t, K) grid")
    _add_common(p)
    _add_params(p, with_nu=False)
    p.add_argument("--initial", help="initial states, e.g. rho1,rho2")
    p.add_argument("--t-max", type=float)
    p.add_argument("--t-count", type=int)
    p.add_argument("--k-min", type=float)
    p.add_argument("--k-max", type=float)
    p.add_argument("--k-count", type=int)
    p.add_argument("--k-scale", choices=["linear", "log"])
    p.add_argument("--method", choices=["expm", "rk45"])

    p = subs.add_parser("sweep-nonmarkov",
                        help="BLP measure over a (K, kappa) grid, pair (rho1, rho3)")
    _add_common(p)
    _add_params(p, with_nu=False)
    p.add_argument("--k-min", type=float)
    p.add_argument("--k-max", type=float)
    p.add_argument("--k-count", type=int)
    p.add_argument("--k-scale", choices=["linear", "log"])
    p.add_argument("--kappa-min", type=float)
    p.add_argument("--kappa-max", type=float)
    p.add_argument("--kappa-count", type=int)
    p.add_argument("--dt", type=float, help="distinguishability grid step")
    p.add_argument("--horizon", type=float,
                   help="integration horizon (0 = automatic envelope cutoff)")

    p = subs.add_parser("validate", help="run the closed-form and Monte Carlo oracle suite")
    _add_common(p)
    p.add_argument("--n-realizations", type=int, help="ensemble size (default 10000)")
    p.add_argument("--dt", type=float, help="trajectory step for the SDE oracle")
    p.add_argument("--perturb-generator", metavar="I,J,DELTA",
                   help="test hook: add DELTA to generator entry (I, J) in the "
                        "reference dynamics before validating")
    return parser


def _common_settings(s: Settings):
    return {
        "seed": s.get("seed", "run.seed", 1234),
        "workers": s.get("workers", "run.workers", _workers_default()),
        "strict": bool(getattr(s.args, "strict", False)
                       or (s.config.get("run.strict") is not None
                           and parse_bool(s.config["run.strict"]))),
    }


def _check_command(s: Settings, expected: str):
    recorded = s.config.get("run.command")
    if recorded is not None and recorded != expected:
        raise ConfigError(f"config was written by {recorded!r}, "
                          f"not by {expected!r}")


def cmd_evolve(args) -> int:
    s = Settings(args)
    _check_command(s, "evolve")
    common = _common_settings(s)
    epsilons = s.get("epsilon", "params.epsilon", (0.0, 2.0), parse_float_list)
    if isinstance(epsilons, str):
        epsilons = parse_float_list(epsilons)
    kappa = s.get("kappa", "params.kappa", 0.1)
    delta0 = s.get("delta0", "params.delta0", 1.0)
    delta1 = s.get("delta1", "params.delta1", 0.0)
    nu = s.get("nu", "params.nu", 1.0)
    t_max = s.get("t_max", "grid.t-max", 20.0)
    t_count = s.get("t_count", "grid.t-count", 2001)
    initial = s.get("initial", "run.initial", ("rho1", "rho2"), parse_str_list)
    if isinstance(initial, str):
        initial = parse_str_list(initial)
    method = s.get("method", "run.method", "expm")
    out = s.get("out", "run.out", "evolve.csv")

    spec = SweepSpec(axes=(Axis("t", 0.0, t_max, t_count),),
                     fixed={"kappa": kappa, "delta0": delta0,
                            "delta1": delta1, "nu": nu},
                     epsilons=tuple(epsilons), initial_states=tuple(initial),
                     seed=common["seed"], workers=common["workers"])
    manifest = {
        "run": {"command": "evolve", "version": __version__,
                "seed": common["seed"], "workers": common["workers"],
                "strict": common["strict"], "method": method,
                "initial": ",".join(initial)},
        "params": {"epsilon": ",".join(csvio.fmt_value(e) for e in epsilons),
                   "kappa": kappa, "delta0": delta0, "delta1": delta1, "nu": nu},
        "grid": {"t-max": t_max, "t-count": t_count},
    }
    csvio.write_csv(out, manifest, sweeps.EVOLVE_HEADER,
                    sweeps.evolve_rows(spec, method=method))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_sweep_coherence(args) -> int:
    s = Settings(args)
    _check_command(s, "sweep-coherence")
    common = _common_settings(s)
    epsilons = s.get("epsilon", "params.epsilon", (0.0, 2.0), parse_float_list)
    if isinstance(epsilons, str):
        epsilons = parse_float_list(epsilons)
    kappa = s.get("kappa", "params.kappa", 0.1)
    delta0 = s.get("delta0", "params.delta0", 1.0)
    delta1 = s.get("delta1", "params.delta1", 1.0)
    t_max = s.get("t_max", "grid.t-max", 20.0)
    t_count = s.get("t_count", "grid.t-count", 401)
    k_min = s.get("k_min", "grid.k-min", 0.1)
    k_max = s.get("k_max", "grid.k-max", 10.0)
    k_count = s.get("k_count", "grid.k-count", 41)
    k_scale = s.get("k_scale", "grid.k-scale", "log")
    initial = s.get("initial", "run.initial", ("rho1", "rho2"), parse_str_list)
    if isinstance(initial, str):
        initial = parse_str_list(initial)
    method = s.get("method", "run.method", "expm")
    out = s.get("out", "run.out", "coherence_grid.csv")

    spec = SweepSpec(axes=(Axis("t", 0.0, t_max, t_count),
                           Axis("K", k_min, k_max, k_count, k_scale)),
                     fixed={"kappa": kappa, "delta0": delta0, "delta1": delta1},
                     epsilons=tuple(epsilons), initial_states=tuple(initial),
                     seed=common["seed"], workers=common["workers"])
    manifest = {
        "run": {"command": "sweep-coherence", "version": __version__,
                "seed": common["seed"], "workers": common["workers"],
                "strict": common["strict"], "method": method,
                "initial": ",".join(initial)},
        "params": {"epsilon": ",".join(csvio.fmt_value(e) for e in epsilons),
                   "kappa": kappa, "delta0": delta0, "delta1": delta1},
        "grid": {"t-max": t_max, "t-count": t_count, "k-min": k_min,
                 "k-max": k_max, "k-count": k_count, "k-scale": k_scale},
    }
    csvio.write_csv(out, manifest, sweeps.COHERENCE_HEADER,
                    sweeps.coherence_rows(spec, method=method))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_sweep_nonmarkov(args) -> int:
    s = Settings(args)
    _check_command(s, "sweep-nonmarkov")
    common = _common_settings(s)
    epsilons = s.get("epsilon", "params.epsilon", (0.0, 2.0), parse_float_list)
    if isinstance(epsilons, str):
        epsilons = parse_float_list(epsilons)
    delta0 = s.get("delta0", "params.delta0", 1.0)
    delta1 = s.get("delta1", "params.delta1", 1.0)
    k_min = s.get("k_min", "grid.k-min", 0.25)
    k_max = s.get("k_max", "grid.k-max", 8.0)
    k_count = s.get("k_count", "grid.k-count", 11)
    k_scale = s.get("k_scale", "grid.k-scale", "log")
    kappa_min = s.get("kappa_min", "grid.kappa-min", 0.0)
    kappa_max = s.get("kappa_max", "grid.kappa-max", 0.3)
    kappa_count = s.get("kappa_count", "grid.kappa-count", 7)
    dt = s.get("dt", "grid.dt", 1e-3)
    horizon = s.get("horizon", "grid.horizon", 0.0)
    out = s.get("out", "run.out", "nonmarkov_grid.csv")

    spec = SweepSpec(axes=(Axis("K", k_min, k_max, k_count, k_scale),
                           Axis("kappa", kappa_min, kappa_max, kappa_count)),
                     fixed={"delta0": delta0, "delta1": delta1},
                     epsilons=tuple(epsilons), initial_states=("rho1", "rho3"),
                     seed=common["seed"], workers=common["workers"])
    manifest = {
        "run": {"command": "sweep-nonmarkov", "version": __version__,
                "seed": common["seed"], "workers": common["workers"],
                "strict": common["strict"], "pair": "rho1,rho3"},
        "params": {"epsilon": ",".join(csvio.fmt_value(e) for e in epsilons),
                   "delta0": delta0, "delta1": delta1},
        "grid": {"k-min": k_min, "k-max": k_max, "k-count": k_count,
                 "k-scale": k_scale, "kappa-min": kappa_min,
                 "kappa-max": kappa_max, "kappa-count": kappa_count,
                 "dt": dt, "horizon": horizon},
    }
    rows = sweeps.nonmarkov_rows(spec, horizon=None if horizon == 0.0 else horizon,
                                 dt=dt)
    csvio.write_csv(out, manifest, sweeps.NONMARKOV_HEADER, rows)
    print(f"wrote {out}")
    if common["strict"] and any(row[-1] for row in rows):
        print("horizon warning on at least one grid point", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_validate(args) -> int:
    s = Settings(args)
    _check_command(s, "validate")
    common = _common_settings(s)
    n_realizations = s.get("n_realizations", "oracle.n-realizations", 10_000)
    dt = s.get("dt", "oracle.dt", 1e-3)
    out = s.get("out", "run.out", "validate_residuals.csv")
    perturbation = None
    raw = getattr(s.args, "perturb_generator", None) or \
        s.config.get("oracle.perturb-generator")
    if raw:
        parts = raw.split(",")
        if len(parts) != 3:
            raise ConfigError("--perturb-generator expects I,J,DELTA")
        perturbation = (int(parts[0]), int(parts[1]), float(parts[2]))

    results = validate.run_validation(
        n_realizations=n_realizations, dt=dt, seed=common["seed"],
        generator_perturbation=perturbation,
        log=lambda msg: print(msg, file=sys.stderr))
    manifest = {
        "run": {"command": "validate", "version": __version__,
                "seed": common["seed"], "strict": common["strict"]},
        "oracle": {"n-realizations": n_realizations, "dt": dt,
                   "perturb-generator": raw or ""},
    }
    rows = [(r.name, r.case, r.value, r.threshold,
             (not r.skipped) and r.passed, r.skipped, r.note)
            for r in results]
    csvio.write_csv(out, manifest,
                    ["check", "case", "value", "threshold", "passed",
                     "skipped", "note"], rows)
    for line in validate.report_lines(results):
        print(line)
    print(f"wrote {out}")
    return EXIT_OK if all(r.ok for r in results) else EXIT_VALIDATION


_COMMANDS = {
    "evolve": cmd_evolve,
    "sweep-coherence": cmd_sweep_coherence,
    "sweep-nonmarkov": cmd_sweep_nonmarkov,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
