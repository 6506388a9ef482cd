"""Command line front end.

Subcommands
-----------
generate     draw a synthetic problem and write it as a CSV bundle
tune         minimize one selection criterion and print the result
bounds       evaluate the finite-sample bound terms and the inequality checks
asymptotics  sandwich covariances and the ridge variance ratio
sweep        run the Monte Carlo sweep (records.csv, aggregates.csv, manifest)
normality    sweep plus normality diagnostics at the largest sample size

All subcommands read a flat ``key = value`` config file.  Exit codes:
0 success, 1 config/validation error, 2 runtime failure.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (
    check_eb_bound,
    check_sy_bound,
    eb_bound_terms,
    sandwich_eb,
    sandwich_sure_y,
    sy_bound_terms,
    variance_ratio,
)
from .configfile import ConfigView, parse_kv_file
from .costs import COST_KINDS
from .exceptions import ConfigError, EbsureError, InvalidConfig
from .kernels import FAMILY_IDS, make_family
from .mc import ExperimentConfig, convergence_slopes, normality_diagnostics, run_experiment
from .problems import GenConfig, make_covariance, sample_problem, save_problem
from .tuning import tune

_RECORDS_SCHEMA = (
    "records.csv columns: sample_size, replicate, status, eb_converged, "
    "sy_converged, then one column per scalar metric and per hyper-parameter "
    "component (eta_eb_i, eta_sy_i, scaled_eta_eb_i, scaled_eta_sy_i); floats "
    "carry 17 significant digits."
)
_AGGREGATES_SCHEMA = (
    "aggregates.csv columns: sample_size, field, mean, median, stderr, count "
    "over successful replicates."
)
_BUNDLE_SCHEMA = (
    "problem bundle: Phi.csv (rows = observations, columns = components), "
    "Y.csv, theta0.csv, Sigma.csv, meta.json; orientation is documented in "
    "each CSV header line."
)


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        values = parse_kv_file(args.config)
        view = ConfigView(values, source=str(args.config))
        return args.handler(args, view)
    except (ConfigError, InvalidConfig) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except EbsureError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # never propagate a traceback to the shell
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ebsure",
        description="Kernel-regularized least squares: tuning, bounds, asymptotics, sweeps.",
    )
    parser.add_argument("--version", action="version", version=f"ebsure {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text, epilog=None):
        p = sub.add_parser(
            name, help=help_text, epilog=epilog,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        p.add_argument("--config", required=True, type=Path, help="key = value config file")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=1, help="parallel replicate workers")
        p.add_argument(
            "--full-scale", action="store_true",
            help="full-scale sweep: n=50, cond_target=1e5, replicates=1000",
        )
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
        p.set_defaults(handler=handler)
        return p

    add("generate", _cmd_generate, "draw a problem and save the CSV bundle",
        epilog=_BUNDLE_SCHEMA)
    add("tune", _cmd_tune, "minimize a selection criterion")
    add("bounds", _cmd_bounds, "bound terms and inequality checks on seeded instances")
    add("asymptotics", _cmd_asymptotics, "sandwich covariances and variance ratio")
    add("sweep", _cmd_sweep, "Monte Carlo convergence sweep",
        epilog=_RECORDS_SCHEMA + "\n" + _AGGREGATES_SCHEMA)
    add("normality", _cmd_normality, "sweep plus normality diagnostics")
    return parser


def _say(args, message):
    if not args.quiet:
        print(message)


def _require_out(args):
    if args.out is None:
        raise InvalidConfig("this subcommand needs --out DIR")
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


def _gen_config(view, args, keys=("n", "N", "cond_target", "lambda1", "snr_target", "seed", "theta0")):
    seed = args.seed if args.seed is not None else view.get_int("seed", 0)
    return GenConfig(
        n=view.get_int("n"),
        N=view.get_int("N"),
        cond_target=view.get_float("cond_target", 1.0),
        lambda1=view.get_float("lambda1", 1.0),
        snr_target=view.get_float("snr_target", 1.0),
        seed=seed,
        theta0=view.get_vector("theta0", None),
    )


def _cmd_generate(args, view):
    view.reject_unknown({"n", "N", "cond_target", "lambda1", "snr_target", "seed", "theta0"})
    out = _require_out(args)
    problem = sample_problem(_gen_config(view, args))
    save_problem(problem, out)
    _say(args, f"wrote problem bundle (N={problem.N}, n={problem.n}, "
               f"sigma2={problem.sigma2:.6g}) to {out}")
    return 0


def _cmd_tune(args, view):
    known = {
        "cost", "family", "n", "N", "cond_target", "lambda1", "snr_target",
        "seed", "theta0", "sigma2",
    }
    view.reject_unknown(known)
    kind = view.get_choice("cost", COST_KINDS)
    family_id = view.get_choice("family", FAMILY_IDS)

    if kind in ("limit_eb", "limit_sure_y"):
        theta0 = view.get_vector("theta0")
        family = make_family(family_id, len(theta0))
        Sigma = None
        if kind == "limit_sure_y":
            n = len(theta0)
            seed = args.seed if args.seed is not None else view.get_int("seed", 0)
            Sigma = make_covariance(
                n, view.get_float("cond_target", 1.0), view.get_float("lambda1", 1.0), seed
            )
        result = tune(kind, family, theta0=theta0, Sigma=Sigma,
                      sigma2=view.get_float("sigma2", None))
    else:
        problem = sample_problem(_gen_config(view, args))
        family = make_family(family_id, problem.n)
        result = tune(kind, family, problem=problem)

    print(f"cost_kind = {kind}")
    print(f"family = {family_id}")
    print("eta_hat = " + ", ".join("%.12g" % v for v in result.eta))
    print(f"cost = {result.cost:.12g}")
    print(f"n_evals = {result.n_evals}")
    print(f"converged = {result.converged}")
    print(f"restarts = {result.restarts}")
    if result.near_ties:
        for tie in result.near_ties:
            print("near_tie = " + ", ".join("%.12g" % v for v in tie))
    return 0


def _cmd_bounds(args, view):
    known = {
        "family", "n", "N", "cond_target", "lambda1", "snr_target", "seed",
        "theta0", "eta", "eta_draws", "cond_levels",
    }
    view.reject_unknown(known)
    family_id = view.get_choice("family", FAMILY_IDS)
    problem = sample_problem(_gen_config(view, args))
    family = make_family(family_id, problem.n)

    if view.has("eta"):
        etas = [view.get_vector("eta")]
    else:
        draws = view.get_int("eta_draws", 3)
        rng = np.random.default_rng(problem.N + problem.n)
        lo, hi = family.start_box()
        etas = [
            family.from_internal(lo + rng.random(family.p) * (hi - lo) * 0.5
                                 + 0.25 * (hi - lo))
            for _ in range(draws)
        ]

    rows = []
    all_hold = True
    for eta in etas:
        eb = eb_bound_terms(problem, family, eta)
        sy = sy_bound_terms(problem, family, eta)
        chk_b = check_eb_bound(problem, family, eta)
        chk_y = check_sy_bound(problem, family, eta)
        all_hold &= chk_b.holds and chk_y.holds
        eta_s = ", ".join("%.6g" % v for v in eta)
        print(f"eta = [{eta_s}]")
        print(f"  eb terms: e1b={eb.e1b:.6g} e2b={eb.e2b:.6g} e3b={eb.e3b:.6g} r1={eb.r1}")
        print(f"  eb gap {chk_b.gap:.6g} <= bound {chk_b.bound:.6g}: "
              f"{'OK' if chk_b.holds else 'VIOLATED'}")
        print(f"  sy terms: e1y={sy.e1y:.6g} e2y={sy.e2y:.6g} e3y={sy.e3y:.6g} "
              f"e4y={sy.e4y:.6g} e5y={sy.e5y:.6g} r2={sy.r2}")
        print(f"  sy gap {chk_y.gap:.6g} <= bound {chk_y.bound:.6g}: "
              f"{'OK' if chk_y.holds else 'VIOLATED'}")
        rows.append((eta, eb, sy, chk_b, chk_y))

    if args.out is not None:
        out = _require_out(args)
        lines = ["eta,e1b,e2b,e3b,r1,eb_gap,eb_bound,e1y,e2y,e3y,e4y,e5y,r2,sy_gap,sy_bound"]
        for eta, eb, sy, chk_b, chk_y in rows:
            eta_s = ";".join("%.17g" % v for v in eta)
            lines.append(
                f"{eta_s},{eb.e1b:.17g},{eb.e2b:.17g},{eb.e3b:.17g},{eb.r1},"
                f"{chk_b.gap:.17g},{chk_b.bound:.17g},"
                f"{sy.e1y:.17g},{sy.e2y:.17g},{sy.e3y:.17g},{sy.e4y:.17g},{sy.e5y:.17g},"
                f"{sy.r2},{chk_y.gap:.17g},{chk_y.bound:.17g}"
            )
        (out / "bounds.csv").write_text("\n".join(lines) + "\n")
        _say(args, f"wrote {out / 'bounds.csv'}")

    if view.has("cond_levels"):
        from .asymptotics import cond_power_table, cond_sweep_problems, write_cond_power_csv

        levels = [float(v) for v in view.get_vector("cond_levels")]
        sweep = cond_sweep_problems(
            problem.n, problem.N, levels,
            lambda1=view.get_float("lambda1", 1.0),
            snr_target=view.get_float("snr_target", 5.0),
            seed=args.seed if args.seed is not None else view.get_int("seed", 0),
        )
        table = cond_power_table(sweep, family, etas[0])
        for r in table:
            print(f"  {r.term}: stated cond powers ({r.stated_power_cond_gram}, "
                  f"{r.stated_power_cond_kernel}) at rate {r.rate}, "
                  f"empirical slope {r.empirical_slope:+.3f}")
        if args.out is not None:
            write_cond_power_csv(args.out / "cond_power.csv", table)
            _say(args, f"wrote {args.out / 'cond_power.csv'}")

    print(f"verdict = {'all inequalities hold' if all_hold else 'VIOLATION found'}")
    return 0


def _cmd_asymptotics(args, view):
    known = {"family", "theta0", "cond_target", "lambda1", "seed", "sigma2"}
    view.reject_unknown(known)
    family_id = view.get_choice("family", FAMILY_IDS)
    theta0 = view.get_vector("theta0")
    n = len(theta0)
    seed = args.seed if args.seed is not None else view.get_int("seed", 0)
    Sigma = make_covariance(
        n, view.get_float("cond_target", 1.0), view.get_float("lambda1", 1.0), seed
    )
    sigma2 = view.get_float("sigma2", 1.0)
    family = make_family(family_id, n)

    eta_b = tune("limit_eb", family, theta0=theta0).eta
    eta_y = tune("limit_sure_y", family, theta0=theta0, Sigma=Sigma, sigma2=sigma2).eta
    cov_b = sandwich_eb(family, eta_b, theta0, Sigma, sigma2)
    cov_y = sandwich_sure_y(family, eta_y, theta0, Sigma, sigma2)

    def show(name, M):
        print(f"{name} =")
        for row in np.atleast_2d(M):
            print("  " + "  ".join("%.10g" % v for v in row))

    print("eta_star_b = " + ", ".join("%.10g" % v for v in eta_b))
    print("eta_star_y = " + ", ".join("%.10g" % v for v in eta_y))
    show("curvature_eb", cov_b.curvature)
    show("score_cov_eb", cov_b.score_cov)
    show("asymptotic_cov_eb", cov_b.covariance)
    show("curvature_sure_y", cov_y.curvature)
    show("score_cov_sure_y", cov_y.score_cov)
    show("asymptotic_cov_sure_y", cov_y.covariance)
    print(f"variance_ratio = {variance_ratio(theta0, Sigma):.10g}")
    return 0


def _sweep_config(args, view):
    known = {
        "family", "n", "cond_target", "lambda1", "snr_target", "N_grid",
        "replicates", "base_seed", "theta0",
    }
    view.reject_unknown(known)
    base_seed = args.seed if args.seed is not None else view.get_int("base_seed", 20240601)
    cfg = ExperimentConfig(
        family=view.get_choice("family", FAMILY_IDS, "ridge"),
        n=view.get_int("n", 10),
        cond_target=view.get_float("cond_target", 1e4),
        lambda1=view.get_float("lambda1", 1.0),
        snr_target=view.get_float("snr_target", 5.0),
        N_grid=view.get_int_list("N_grid", (200, 500, 2000, 10000, 50000)),
        replicates=view.get_int("replicates", 200),
        base_seed=base_seed,
        theta0=view.get_vector("theta0", None),
        n_jobs=args.threads,
    )
    if args.full_scale:
        cfg = ExperimentConfig(
            family=cfg.family, n=50, cond_target=1e5, lambda1=cfg.lambda1,
            snr_target=cfg.snr_target, N_grid=cfg.N_grid, replicates=1000,
            base_seed=cfg.base_seed, theta0=None, n_jobs=cfg.n_jobs,
        )
    return cfg


def _write_report(args, report):
    out = _require_out(args)
    report.write_records_csv(out / "records.csv")
    report.write_aggregates_csv(out / "aggregates.csv")
    report.write_manifest(out / "manifest.txt", extra={"version": __version__})
    return out


def _cmd_sweep(args, view):
    cfg = _sweep_config(args, view)
    _say(args, f"running sweep: family={cfg.family} n={cfg.n} "
               f"cond={cfg.cond_target:g} N_grid={cfg.N_grid} R={cfg.replicates}")
    report = run_experiment(cfg)
    out = _write_report(args, report)
    try:
        slopes = convergence_slopes(report)
        for name, slope in sorted(slopes.items()):
            _say(args, f"slope[{name}] = {slope:+.3f}")
    except EbsureError:
        pass  # fewer than 4 grid points; records are still written
    _say(args, f"wrote records.csv, aggregates.csv, manifest.txt to {out}")
    return 0


def _cmd_normality(args, view):
    cfg = _sweep_config(args, view)
    _say(args, f"running normality study: family={cfg.family} n={cfg.n} "
               f"N={cfg.N_grid[-1]} R={cfg.replicates}")
    report = run_experiment(cfg)
    summary = normality_diagnostics(report)
    print(f"sample_size = {summary.sample_size}")
    print(f"replicates_used = {summary.replicates_used}")
    print("var_emp_eb = " + ", ".join("%.10g" % v for v in summary.var_emp_eb))
    print("var_analytic_eb = " + ", ".join("%.10g" % v for v in summary.var_analytic_eb))
    print("var_emp_sure_y = " + ", ".join("%.10g" % v for v in summary.var_emp_sy))
    print("var_analytic_sure_y = " + ", ".join("%.10g" % v for v in summary.var_analytic_sy))
    print(f"ratio_emp = {summary.ratio_emp:.10g}")
    print(f"ratio_reference = {summary.ratio_reference:.10g}")
    print(f"ratio_vs_reference = {summary.ratio_vs_reference:.10g}")
    if args.out is not None:
        _write_report(args, report)
        _say(args, f"wrote sweep outputs to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
