"""``efk`` command-line entry point.

    efk check|solve-ivp|find-periodic|verify-stability|selftest --config <path> [--out <dir>] [--jobs K] [--certificate]

``--config`` may be repeated; each config then writes into ``<out>/<config stem>``
and ``--jobs`` runs them in separate worker processes.  Exit codes: 0 success,
1 internal or self-test failure, 2 hypothesis or certificate failure, 3 Picard
convergence failure, 64 configuration error.  With several configs the largest
code wins.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import config as config_mod
from . import io, selftest
from .delay_integrator import initial_history, solve_ivp
from .errors import (BoundViolationError, CertificateRefused, ConfigurationError, ConvergenceFailure,
                     EFKError)
from .history import PeriodicTrajectory
from .oracles import mild_residual
from .periodic_solver import picard_iterate
from .spectral_core import SpectralField
from .stability_analyzer import attraction_experiment, check_hypotheses, perturbed_history

EXIT_OK, EXIT_INTERNAL, EXIT_HYPOTHESIS, EXIT_CONVERGENCE, EXIT_CONFIG = 0, 1, 2, 3, 64
COMMANDS = ("check", "solve-ivp", "find-periodic", "verify-stability", "selftest")
CONDITIONS = ("H1", "H2", "H3", "H2prime")

log = logging.getLogger("efklab")


@dataclass
class Options:
    command: str
    out: Path
    certificate: bool = False
    residual_check: bool = False
    require: tuple[str, ...] = CONDITIONS
    inject: Optional[str] = None


@dataclass
class Outcome:
    code: int
    lines: list[str] = field(default_factory=list)
    files: list[str] = field(default_factory=list)


def _ubar(cfg, certificate: bool, report=None):
    if cfg.problem.omega is None:
        raise ConfigurationError("a periodic solution needs omega")
    return picard_iterate(cfg.problem, certificate=certificate, hypotheses=report)


def _history(cfg, ubar: Optional[PeriodicTrajectory]):
    kind = cfg.history.get("type", "zero")
    if kind == "zero":
        return None
    if kind == "modes":
        return SpectralField(config_mod.history_vector(cfg, "coeffs"))
    p = cfg.problem
    return perturbed_history(ubar, config_mod.history_vector(cfg, "perturbation"), p.delays.r, p.step_size())


def cmd_check(cfg, opts: Options, out: Outcome):
    report = check_hypotheses(cfg.problem, seed=cfg.seed)
    out.files.append(str(io.write_json(opts.out / "hypotheses.json", report.to_dict(), cfg.meta("check"))))
    for name, cond in report.conditions().items():
        margin = "" if cond.margin is None else f" margin={cond.margin:.6g}"
        out.lines.append(f"{name:<8} {cond.status}{margin}")
    if report.rho is not None:
        out.lines.append(f"rho      {report.rho:.6f}")
    if report.unknown():
        log.warning("conditions not decidable without Lipschitz data: %s", ", ".join(report.unknown()))
    failed = [k for k in opts.require if report.conditions()[k].status == "fails"]
    return report, (EXIT_HYPOTHESIS if failed else EXIT_OK)


def cmd_find_periodic(cfg, opts: Options, out: Outcome):
    meta = cfg.meta("find-periodic")
    report = check_hypotheses(cfg.problem, seed=cfg.seed) if opts.certificate else None
    try:
        ubar, conv = _ubar(cfg, opts.certificate, report)
    except ConvergenceFailure as exc:
        io.write_json(opts.out / "convergence.json", exc.report.to_dict(), meta)
        raise
    out.files.append(str(io.write_trajectory_csv(opts.out / "periodic.csv", ubar, cfg.modes_out, meta,
                                                 every=cfg.output_every)))
    out.files.append(str(io.write_json(opts.out / "convergence.json", conv.to_dict(), meta)))
    emp = "n/a" if conv.empirical_factor is None else f"{conv.empirical_factor:.6f}"
    theo = "n/a" if conv.theoretical_factor is None else f"{conv.theoretical_factor:.6f}"
    out.lines.append(f"converged in {conv.iterations} iterations, empirical factor {emp}, bound {theo}")
    return EXIT_OK


def cmd_solve_ivp(cfg, opts: Options, out: Outcome):
    p = cfg.problem
    meta = cfg.meta("solve-ivp")
    ubar = None
    if cfg.history.get("type") == "periodic_plus":
        ubar, _ = _ubar(cfg, opts.certificate)
    traj = solve_ivp(p, _history(cfg, ubar), cfg.horizon)
    code = EXIT_OK
    extra = None
    summary = {"horizon": cfg.horizon, "h": p.step_size(), "steps": int(np.sum(traj.times > 0)),
               "final_norm": float(np.linalg.norm(traj.values[-1]))}
    if opts.residual_check or cfg.residual_check:
        keep = np.flatnonzero(traj.times >= 0)[:: cfg.output_every]
        column = mild_residual(p, traj, traj.times[keep])
        extra = {"mild_residual": column}
        rng = np.random.default_rng(cfg.seed)
        samples = np.sort(rng.uniform(0.0, cfg.horizon, cfg.residual_samples))
        sampled = mild_residual(p, traj, samples)
        tol = p.tolerances.residual_tol
        summary["residual_check"] = {"times": samples, "residuals": sampled, "tolerance": tol,
                                     "max_column": float(column.max()), "passed": bool(sampled.max() < tol
                                                                                       and column.max() < tol)}
        out.lines.append(f"max mild residual {max(sampled.max(), column.max()):.3e} (tolerance {tol:g})")
        if not summary["residual_check"]["passed"]:
            log.error("mild-solution residual check failed")
            code = EXIT_INTERNAL
    out.files.append(str(io.write_trajectory_csv(opts.out / "trajectory.csv", traj, cfg.modes_out, meta,
                                                 t_min=0.0, every=cfg.output_every, extra=extra)))
    out.files.append(str(io.write_snapshots(opts.out / "snapshots.ndjson", traj, meta, t_min=0.0,
                                            every=cfg.output_every)))
    out.files.append(str(io.write_json(opts.out / "ivp.json", summary, meta)))
    out.lines.append(f"integrated to T={cfg.horizon:g}, final norm {summary['final_norm']:.6e}")
    return code


def cmd_verify_stability(cfg, opts: Options, out: Outcome):
    p = cfg.problem
    meta = cfg.meta("verify-stability")
    report = check_hypotheses(p, seed=cfg.seed)
    if opts.certificate and report.H2prime.status != "holds":
        raise CertificateRefused(f"attraction not certified: H2' {report.H2prime.status}")
    ubar, conv = _ubar(cfg, False, report)
    kappa = _history(cfg, ubar)
    if kappa is None or isinstance(kappa, SpectralField):
        kappa = initial_history(kappa, p.delays.r, p.step_size(), p.discretization.N)
    fit = attraction_experiment(p, kappa, cfg.horizon, ubar, fit_window=cfg.fit_window,
                                certificate=opts.certificate, report=report, raise_on_violation=False)
    rows = zip(fit.times, fit.distances, fit.log_distances, fit.bound_rhs)
    out.files.append(str(io.write_csv(opts.out / "decay.csv", ["t", "distance", "log_distance", "bound_rhs"],
                                      rows, meta)))
    slope_ok = fit.slope_ok(cfg.slack)
    body = {**fit.to_dict(), "rho": report.rho, "slack": cfg.slack, "slope_ok": slope_ok,
            "H2prime": report.H2prime.status, "periodic": conv.to_dict()}
    out.files.append(str(io.write_json(opts.out / "decay.json", body, meta)))
    out.lines.append(f"status {fit.status}, slope {fit.slope:.4f}, exponent bound "
                     f"{fit.theoretical_exponent if fit.theoretical_exponent is None else round(fit.theoretical_exponent, 4)}, "
                     f"envelope {fit.bound_mode}")
    passed = fit.bound_mode in ("as_written", "sup_norm_fallback") and slope_ok is not False
    if fit.status == "fitted" and slope_ok is None:
        passed = False
    if passed:
        return EXIT_OK
    # when the attraction condition holds a miss is a numerical failure, otherwise it is expected
    return EXIT_INTERNAL if report.H2prime.status == "holds" else EXIT_HYPOTHESIS


HANDLERS = {
    "check": lambda cfg, o, out: cmd_check(cfg, o, out)[1],
    "find-periodic": cmd_find_periodic,
    "solve-ivp": cmd_solve_ivp,
    "verify-stability": cmd_verify_stability,
}


def run_one(config_path: Optional[str], opts: Options) -> Outcome:
    """Run one command on one config, mapping exceptions to exit codes."""
    out = Outcome(EXIT_OK)
    try:
        if opts.command == "selftest":
            results = selftest.run(opts.inject, echo=out.lines.append)
            out.code = EXIT_OK if all(ok for _, ok, _ in results) else EXIT_INTERNAL
            return out
        cfg = config_mod.load(config_path)
        opts = Options(**{**opts.__dict__, "certificate": opts.certificate or cfg.certificate})
        opts.out.mkdir(parents=True, exist_ok=True)
        out.code = HANDLERS[opts.command](cfg, opts, out)
    except ConfigurationError as exc:
        out.lines.append(f"config error: {exc}")
        out.code = EXIT_CONFIG
    except CertificateRefused as exc:
        out.lines.append(f"certificate refused: {exc}")
        out.code = EXIT_HYPOTHESIS
    except ConvergenceFailure as exc:
        out.lines.append(f"convergence failure: {exc}")
        out.code = EXIT_CONVERGENCE
    except BoundViolationError as exc:
        out.lines.append(f"bound violation: {exc}")
        out.code = EXIT_INTERNAL
    except EFKError as exc:
        out.lines.append(f"error: {type(exc).__name__}: {exc}")
        out.code = EXIT_INTERNAL
    except OSError as exc:
        out.lines.append(f"error: {exc}")
        out.code = EXIT_CONFIG if config_path and not Path(config_path).exists() else EXIT_INTERNAL
    return out


def _out_dirs(configs: Sequence[str], out: Path) -> list[Path]:
    if len(configs) == 1:
        return [out]
    seen: dict[str, int] = {}
    dirs = []
    for c in configs:
        stem = Path(c).stem
        seen[stem] = seen.get(stem, 0) + 1
        dirs.append(out / (stem if seen[stem] == 1 else f"{stem}_{seen[stem]}"))
    return dirs


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="efk", description="Delayed extended Fisher-Kolmogorov experiments.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", action="append", default=[], metavar="PATH",
                    help="JSON run configuration (repeat for a sweep)")
    ap.add_argument("--out", default="out", type=Path, help="output directory (default: ./out)")
    ap.add_argument("--jobs", type=int, default=1, metavar="K", help="worker processes for sweeps")
    ap.add_argument("--certificate", action="store_true", help="refuse to run unless hypotheses certify it")
    ap.add_argument("--residual-check", action="store_true", help="solve-ivp: add the mild-residual column")
    ap.add_argument("--require", default=",".join(CONDITIONS),
                    help="check: comma-separated conditions that must hold (default: all)")
    ap.add_argument("--inject", choices=selftest.INJECTIONS, help="selftest: inject a deliberate fault")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="efk: %(levelname)s: %(message)s", stream=sys.stderr)
    require = tuple(s.strip() for s in args.require.split(",") if s.strip())
    bad = [r for r in require if r not in CONDITIONS]
    if bad:
        print(f"efk: unknown condition(s) in --require: {', '.join(bad)}", file=sys.stderr)
        return EXIT_CONFIG
    if args.jobs < 1:
        print("efk: --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "selftest":
        outcome = run_one(None, Options("selftest", args.out, inject=args.inject))
        print("\n".join(outcome.lines))
        print(f"selftest {'passed' if outcome.code == EXIT_OK else 'FAILED'}")
        return outcome.code
    if not args.config:
        print(f"efk: {args.command} needs --config", file=sys.stderr)
        return EXIT_CONFIG

    jobs = [(c, Options(args.command, d, args.certificate, args.residual_check, require))
            for c, d in zip(args.config, _out_dirs(args.config, args.out))]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(args.jobs, len(jobs))) as pool:
            outcomes = list(pool.map(run_one, *zip(*jobs)))
    else:
        outcomes = [run_one(c, o) for c, o in jobs]
    for (c, _), o in zip(jobs, outcomes):
        prefix = f"[{c}] " if len(jobs) > 1 else ""
        for line in o.lines:
            print(prefix + line)
        if len(jobs) > 1:
            print(f"{prefix}exit {o.code}")
    return max(o.code for o in outcomes)


if __name__ == "__main__":
    sys.exit(main())
