"""Monte Carlo harness: sweeps over sample sizes, replicated tuning runs.

For each sample size and replicate a fresh problem is drawn (true parameter
and regressor covariance held fixed per experiment), both data criteria are
tuned, and per-replicate fits and gaps to the limit quantities are recorded.
Replicates are independent and may run in parallel; results are merged in a
fixed (sample size, replicate) order, so reports are byte-reproducible.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .asymptotics import sandwich_eb, sandwich_sure_y, variance_ratio
from .costs import CostContext, limit_eb, limit_sure_y
from .estimators import fit_g, fit_matrix, fit_y, rls_estimate
from .exceptions import (
    EbsureError,
    ExperimentFailed,
    InsufficientReplicates,
    InsufficientSweep,
    InvalidConfig,
)
from .kernels import FAMILY_IDS, make_family
from .problems import GenConfig, make_covariance, sample_problem
from .tuning import minimize_cost, tune
from .validation import as_vector

_MAX_FAILURE_FRACTION = 0.10

FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep design; defaults are the desk-scale setup (minutes, not hours)."""

    family: str = "ridge"
    n: int = 10
    cond_target: float = 1e4
    lambda1: float = 1.0
    snr_target: float = 5.0
    N_grid: tuple = (200, 500, 2000, 10000, 50000)
    replicates: int = 200
    base_seed: int = 20240601
    theta0: np.ndarray | None = None
    n_jobs: int = 1

    def __post_init__(self):
        if self.family not in FAMILY_IDS:
            raise InvalidConfig(f"family must be one of {FAMILY_IDS}, got {self.family!r}")
        if self.replicates < 1:
            raise InvalidConfig(f"replicates must be >= 1, got {self.replicates}")
        grid = tuple(int(N) for N in self.N_grid)
        if len(grid) == 0:
            raise InvalidConfig("N_grid must not be empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidConfig(f"N_grid must be strictly increasing, got {grid}")
        if grid[0] <= self.n:
            raise InvalidConfig(f"N_grid[0]={grid[0]} must exceed n={self.n}")
        object.__setattr__(self, "N_grid", grid)
        if self.theta0 is not None:
            object.__setattr__(
                self, "theta0", as_vector(self.theta0, "theta0", self.n)
            )
        # GenConfig revalidates the scalar fields
        GenConfig(n=self.n, N=grid[0], cond_target=self.cond_target,
                  lambda1=self.lambda1, snr_target=self.snr_target)


@dataclass(frozen=True)
class McRecord:
    sample_size: int
    replicate: int
    status: str  # "ok" or a failure reason
    sigma2: float = math.nan
    fit_g_eb: float = math.nan
    fit_g_sy: float = math.nan
    fit_y_eb: float = math.nan
    fit_y_sy: float = math.nan
    fit_pp: float = math.nan
    fbar_eb_gap: float = math.nan
    fbar_sy_gap: float = math.nan
    eta_eb_gap: float = math.nan
    eta_sy_gap: float = math.nan
    eta_eb: tuple = ()
    eta_sy: tuple = ()
    scaled_eta_eb: tuple = ()
    scaled_eta_sy: tuple = ()
    eb_converged: bool = False
    sy_converged: bool = False


_SCALAR_FIELDS = (
    "sigma2",
    "fit_g_eb",
    "fit_g_sy",
    "fit_y_eb",
    "fit_y_sy",
    "fit_pp",
    "fbar_eb_gap",
    "fbar_sy_gap",
    "eta_eb_gap",
    "eta_sy_gap",
)
_VECTOR_FIELDS = ("eta_eb", "eta_sy", "scaled_eta_eb", "scaled_eta_sy")


@dataclass(frozen=True)
class McReport:
    config: ExperimentConfig
    theta0: np.ndarray
    Sigma: np.ndarray
    eta_star_b: np.ndarray
    eta_star_y: np.ndarray
    records: tuple

    @property
    def p(self):
        return len(self.eta_star_b)

    def ok_records(self, sample_size=None):
        # fixed (sample size, replicate) order, so aggregates do not depend
        # on the order replicates happened to finish in
        recs = [
            r
            for r in self.records
            if r.status == "ok"
            and (sample_size is None or r.sample_size == sample_size)
        ]
        recs.sort(key=lambda r: (r.sample_size, r.replicate))
        return recs

    def _columns(self):
        cols = list(_SCALAR_FIELDS)
        for name in _VECTOR_FIELDS:
            cols.extend(f"{name}_{i + 1}" for i in range(self.p))
        return cols

    @staticmethod
    def _row_value(record, column):
        if column in _SCALAR_FIELDS:
            return getattr(record, column)
        name, _, idx = column.rpartition("_")
        vec = getattr(record, name)
        i = int(idx) - 1
        return vec[i] if i < len(vec) else math.nan

    def aggregates(self):
        """Per (sample size, column): mean, median, stderr over ok records."""
        rows = []
        for N in self.config.N_grid:
            recs = self.ok_records(N)
            for col in self._columns():
                vals = np.array([self._row_value(r, col) for r in recs], dtype=float)
                vals = vals[np.isfinite(vals)]
                if vals.size == 0:
                    rows.append((N, col, math.nan, math.nan, math.nan, 0))
                    continue
                se = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else math.nan
                rows.append(
                    (N, col, float(vals.mean()), float(np.median(vals)), se, int(vals.size))
                )
        return rows

    # -- serialization ------------------------------------------------------

    def write_records_csv(self, path):
        cols = self._columns()
        header = ["sample_size", "replicate", "status", "eb_converged", "sy_converged"] + cols
        lines = [",".join(header)]
        for r in sorted(self.records, key=lambda r: (r.sample_size, r.replicate)):
            row = [
                str(r.sample_size),
                str(r.replicate),
                r.status,
                str(int(r.eb_converged)),
                str(int(r.sy_converged)),
            ]
            row.extend(FLOAT_FMT % self._row_value(r, c) for c in cols)
            lines.append(",".join(row))
        Path(path).write_text("\n".join(lines) + "\n")

    def write_aggregates_csv(self, path):
        lines = ["sample_size,field,mean,median,stderr,count"]
        for N, col, mean, median, se, count in self.aggregates():
            lines.append(
                f"{N},{col},{FLOAT_FMT % mean},{FLOAT_FMT % median},{FLOAT_FMT % se},{count}"
            )
        Path(path).write_text("\n".join(lines) + "\n")

    def write_manifest(self, path, extra=None):
        """Config echo, itself re-parseable as a sweep config file."""
        cfg = self.config
        lines = [
            "# run manifest: re-parses as a sweep config",
            f"family = {cfg.family}",
            f"n = {cfg.n}",
            f"cond_target = {FLOAT_FMT % cfg.cond_target}",
            f"lambda1 = {FLOAT_FMT % cfg.lambda1}",
            f"snr_target = {FLOAT_FMT % cfg.snr_target}",
            "N_grid = " + ", ".join(str(N) for N in cfg.N_grid),
            f"replicates = {cfg.replicates}",
            f"base_seed = {cfg.base_seed}",
            f"# records = {len(self.records)}",
            f"# failed = {sum(1 for r in self.records if r.status != 'ok')}",
            "# eta_star_b = " + ", ".join(FLOAT_FMT % v for v in self.eta_star_b),
            "# eta_star_y = " + ", ".join(FLOAT_FMT % v for v in self.eta_star_y),
        ]
        if extra:
            lines.extend(f"# {k} = {v}" for k, v in extra.items())
        Path(path).write_text("\n".join(lines) + "\n")


def _run_replicate(cfg, Sigma, theta0, family, eta_star_b, eta_star_y,
                   sample_size, replicate, problem_seed, vstar_seed):
    gen = GenConfig(
        n=cfg.n,
        N=sample_size,
        cond_target=cfg.cond_target,
        lambda1=cfg.lambda1,
        snr_target=cfg.snr_target,
        seed=problem_seed,
    )
    try:
        problem = sample_problem(gen, Sigma=Sigma, theta0=theta0)
        ctx = CostContext.from_problem(problem, family)
        res_eb = minimize_cost(ctx.eb, family)
        res_sy = minimize_cost(ctx.sure_y, family)

        theta_eb = rls_estimate(problem, family.matrix(res_eb.eta)).theta
        theta_sy = rls_estimate(problem, family.matrix(res_sy.eta)).theta
        v_star = np.sqrt(problem.sigma2) * np.random.default_rng(
            vstar_seed
        ).standard_normal(sample_size)

        wb_star = limit_eb(family, eta_star_b, theta0)
        wy_star = limit_sure_y(family, eta_star_y, theta0, Sigma, problem.sigma2)
        sqrt_n_samples = np.sqrt(sample_size)
        return McRecord(
            sample_size=sample_size,
            replicate=replicate,
            status="ok",
            sigma2=problem.sigma2,
            fit_g_eb=fit_g(theta_eb, theta0),
            fit_g_sy=fit_g(theta_sy, theta0),
            fit_y_eb=fit_y(theta_eb, problem, v_star),
            fit_y_sy=fit_y(theta_sy, problem, v_star),
            fit_pp=fit_matrix(problem.gram / sample_size, Sigma),
            fbar_eb_gap=abs(ctx.normalized_eb(eta_star_b) - wb_star),
            fbar_sy_gap=abs(ctx.normalized_sure_y(eta_star_y) - wy_star),
            eta_eb_gap=float(np.linalg.norm(res_eb.eta - eta_star_b)),
            eta_sy_gap=float(np.linalg.norm(res_sy.eta - eta_star_y)),
            eta_eb=tuple(res_eb.eta),
            eta_sy=tuple(res_sy.eta),
            scaled_eta_eb=tuple(sqrt_n_samples * (res_eb.eta - eta_star_b)),
            scaled_eta_sy=tuple(sqrt_n_samples * (res_sy.eta - eta_star_y)),
            eb_converged=res_eb.converged,
            sy_converged=res_sy.converged,
        )
    except EbsureError as exc:
        return McRecord(
            sample_size=sample_size,
            replicate=replicate,
            status=f"failed:{type(exc).__name__}",
        )


def run_experiment(cfg):
    """Run the full sweep; deterministic given ``cfg.base_seed``."""
    root = np.random.SeedSequence(cfg.base_seed)
    ss_sigma, ss_theta, ss_reps = root.spawn(3)
    Sigma = make_covariance(cfg.n, cfg.cond_target, cfg.lambda1, ss_sigma)
    theta0 = cfg.theta0
    if theta0 is None:
        theta0 = np.random.default_rng(ss_theta).standard_normal(cfg.n)
    family = make_family(cfg.family, cfg.n)

    # limit minimizers do not move with the per-replicate noise variance
    # (it only rescales the sure_y limit), so tune them once
    eta_star_b = tune("limit_eb", family, theta0=theta0).eta
    eta_star_y = tune("limit_sure_y", family, theta0=theta0, Sigma=Sigma).eta

    tasks = []
    children = ss_reps.spawn(len(cfg.N_grid) * cfg.replicates)
    k = 0
    for N in cfg.N_grid:
        for rep in range(cfg.replicates):
            seeds = children[k].generate_state(2, dtype=np.uint64)
            tasks.append((N, rep, int(seeds[0]), int(seeds[1])))
            k += 1

    runner = delayed(_run_replicate)
    jobs = (
        runner(cfg, Sigma, theta0, family, eta_star_b, eta_star_y, *task)
        for task in tasks
    )
    if cfg.n_jobs == 1:
        records = [
            _run_replicate(cfg, Sigma, theta0, family, eta_star_b, eta_star_y, *task)
            for task in tasks
        ]
    else:
        records = Parallel(n_jobs=cfg.n_jobs)(jobs)
    records.sort(key=lambda r: (r.sample_size, r.replicate))

    failed = sum(1 for r in records if r.status != "ok")
    if failed > _MAX_FAILURE_FRACTION * len(records):
        raise ExperimentFailed(
            f"{failed}/{len(records)} replicates failed "
            f"(limit {_MAX_FAILURE_FRACTION:.0%})"
        )
    return McReport(
        config=cfg,
        theta0=theta0,
        Sigma=Sigma,
        eta_star_b=eta_star_b,
        eta_star_y=eta_star_y,
        records=tuple(records),
    )


@dataclass(frozen=True)
class NormalitySummary:
    sample_size: int
    replicates_used: int
    var_emp_eb: np.ndarray
    var_emp_sy: np.ndarray
    var_analytic_eb: np.ndarray
    var_analytic_sy: np.ndarray
    ratio_emp: float
    ratio_reference: float

    @property
    def ratio_vs_reference(self):
        return self.ratio_emp / self.ratio_reference


def normality_diagnostics(report, min_replicates=100):
    """Empirical versus analytic spread of the rescaled tuning errors.

    Uses the largest sample size in the report.  The analytic targets are
    the sandwich covariances at the limit minimizers with the mean realized
    noise variance; the reference ratio is the closed-form ridge expression.
    """
    N_max = report.config.N_grid[-1]
    recs = report.ok_records(N_max)
    if len(recs) < min_replicates:
        raise InsufficientReplicates(
            f"need at least {min_replicates} successful replicates at N={N_max}, "
            f"got {len(recs)}"
        )
    scaled_eb = np.array([r.scaled_eta_eb for r in recs], dtype=float)
    scaled_sy = np.array([r.scaled_eta_sy for r in recs], dtype=float)
    var_emp_eb = scaled_eb.var(axis=0, ddof=1)
    var_emp_sy = scaled_sy.var(axis=0, ddof=1)

    sigma2_bar = float(np.mean([r.sigma2 for r in recs]))
    family = make_family(report.config.family, report.config.n)
    cov_eb = sandwich_eb(family, report.eta_star_b, report.theta0, report.Sigma, sigma2_bar)
    cov_sy = sandwich_sure_y(family, report.eta_star_y, report.theta0, report.Sigma, sigma2_bar)
    return NormalitySummary(
        sample_size=N_max,
        replicates_used=len(recs),
        var_emp_eb=var_emp_eb,
        var_emp_sy=var_emp_sy,
        var_analytic_eb=np.diagonal(cov_eb.covariance).copy(),
        var_analytic_sy=np.diagonal(cov_sy.covariance).copy(),
        ratio_emp=float(var_emp_eb[0] / var_emp_sy[0]),
        ratio_reference=variance_ratio(report.theta0, report.Sigma),
    )


def convergence_slopes(
    report,
    fields=("eta_eb_gap", "eta_sy_gap", "fbar_eb_gap", "fbar_sy_gap"),
):
    """Least-squares slope of log(median gap) against log(sample size)."""
    medians = {f: [] for f in fields}
    sizes = []
    for N in report.config.N_grid:
        recs = report.ok_records(N)
        if not recs:
            continue
        sizes.append(N)
        for f in fields:
            medians[f].append(np.median([getattr(r, f) for r in recs]))
    if len(sizes) < 4:
        raise InsufficientSweep(
            f"need at least 4 sample sizes with successful replicates, got {len(sizes)}"
        )
    log_n = np.log(np.asarray(sizes, dtype=float))
    return {
        f: float(np.polyfit(log_n, np.log(np.asarray(medians[f])), 1)[0])
        for f in fields
    }
