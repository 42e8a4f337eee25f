"""Monte Carlo experiments that check the closed forms against simulation.

Each experiment draws channel realizations, computes an empirical law, and
compares it to the matching closed form point by point.  A grid point
passes when |empirical - analytic| <= max(3 * stderr, 1e-3) with
stderr = sqrt(p (1 - p) / trials) taken at the analytic probability p;
a report aggregates the points and the sup gap.

Determinism and parallelism: every trial gets its own RNG sub-stream,
spawned from the master seed with ``numpy.random.SeedSequence.spawn``
(variant v uses child v of the root, trial t child t of the variant), so
the trial loop can be chunked across threads without changing any result.

Experiments
-----------
run_mse_cdf_experiment : CDF of the rank-S normalized aggregation error
run_participation_experiment : PMF of the participant count
run_port_sweep : full-participation probability vs port count (per trial
    the ports are sampled once at the largest N and prefixes reused; the
    latent-frailty construction is margin-consistent, so the first n ports
    are exactly the n-port law and the empirical sweep is monotone)
run_copula_diagnostics : marginal KS checks, Kendall-tau identity,
    max-gain CDF check, and a Bessel-correlated cross-comparison
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import kendalltau, kstest

from .analytics import (
    AnalyticCurve,
    GainDistribution,
    channel_gain_cdf,
    normalized_mse_cdf,
    participation_pmf_vector,
    qualify_probability,
)
from .channel import (
    Clayton,
    DependenceSpec,
    GaussianJakes,
    Independent,
    PerfectDependence,
    sample_port_gains,
)

__all__ = [
    "PASS_FLOOR",
    "KS_CRIT_1PCT",
    "McPlan",
    "GridPointCheck",
    "ComparisonReport",
    "CopulaDiagnostics",
    "trial_streams",
    "default_variants",
    "run_mse_cdf_experiment",
    "run_participation_experiment",
    "run_port_sweep",
    "run_copula_diagnostics",
]

PASS_FLOOR = 1e-3
# asymptotic Kolmogorov-Smirnov critical coefficient at the 1% level
KS_CRIT_1PCT = 1.6276


def default_variants() -> tuple[tuple[str, DependenceSpec], ...]:
    return (
        ("independent", Independent()),
        ("clayton-1", Clayton(1.0)),
        ("clayton-2", Clayton(2.0)),
        ("fpa", PerfectDependence()),
    )


@dataclass
class McPlan:
    """Experiment sizing, system parameters, grids, and variants."""

    n_users: int = 20
    n_ports: int = 10
    p_max: float = 0.01
    sigma2: float = 1e-3
    tau: float = 0.05
    s_target: int = 15
    trials: int = 10_000
    seed: int = 0
    threads: int = 1
    tau_grid: np.ndarray = field(
        default_factory=lambda: np.logspace(1.0, 4.0, 30)
    )
    n_grid: np.ndarray = field(default_factory=lambda: np.arange(1, 21))
    gain_grid: np.ndarray = field(
        default_factory=lambda: np.linspace(0.05, 6.0, 24)
    )
    variants: tuple = field(default_factory=default_variants)
    diag_betas: tuple = (0.5, 1.0, 2.0, 5.0)
    diag_rows: int = 100_000
    jakes_aperture: float = 0.5

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if not (1 <= self.s_target <= self.n_users):
            raise ValueError("s_target must be in 1..n_users")


@dataclass(frozen=True)
class GridPointCheck:
    x: float
    empirical: float
    analytic: float
    stderr: float
    passed: bool


@dataclass
class ComparisonReport:
    """Per-grid-point empirical-vs-analytic comparison."""

    label: str
    points: list
    meta: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        base = all(p.passed for p in self.points)
        extra = self.meta.get("mean_check")
        if extra is not None:
            return base and bool(extra["passed"])
        return base

    @property
    def sup_gap(self) -> float:
        return max(abs(p.empirical - p.analytic) for p in self.points)

    def failing_points(self) -> list:
        return [p for p in self.points if not p.passed]

    def to_json_dict(self) -> dict:
        return {
            "label": self.label,
            "meta": self.meta,
            "sup_gap": self.sup_gap,
            "all_pass": self.all_pass,
            "points": [
                {
                    "x": p.x,
                    "empirical": p.empirical,
                    "analytic": p.analytic,
                    "stderr": p.stderr,
                    "pass": p.passed,
                }
                for p in self.points
            ],
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "analytic", "empirical", "stderr", "pass"])
            for p in self.points:
                writer.writerow(
                    [
                        repr(float(p.x)),
                        repr(float(p.analytic)),
                        repr(float(p.empirical)),
                        repr(float(p.stderr)),
                        "true" if p.passed else "false",
                    ]
                )


def _check_points(xs, empirical, analytic, trials) -> list:
    points = []
    for x, e, a in zip(xs, empirical, analytic):
        # band width from the analytic probability, so the test is a plain
        # known-null binomial check and never degenerates when the
        # empirical frequency hits exactly 0 or 1
        se = float(np.sqrt(a * (1.0 - a) / trials))
        tol = max(3.0 * se, PASS_FLOOR)
        points.append(
            GridPointCheck(
                x=float(x),
                empirical=float(e),
                analytic=float(a),
                stderr=se,
                passed=bool(abs(e - a) <= tol),
            )
        )
    return points


def trial_streams(seed, trials: int) -> list:
    """One RNG sub-stream per trial: SeedSequence(seed).spawn(trials)."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(trials)


def _for_each_trial(
    streams: Sequence, fn: Callable[[int, np.random.Generator], None], threads: int
) -> None:
    """Run fn(trial_index, generator) for every trial, optionally threaded.

    fn must write only to its own trial's slot, so chunk scheduling cannot
    change results.
    """
    if threads <= 1:
        for i, ss in enumerate(streams):
            fn(i, np.random.default_rng(ss))
        return
    chunks = np.array_split(np.arange(len(streams)), threads * 4)
    def run_chunk(idx):
        for i in idx:
            fn(int(i), np.random.default_rng(streams[int(i)]))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(run_chunk, chunks))


def _closed_form_dist(dep: DependenceSpec, n_ports: int) -> GainDistribution:
    if isinstance(dep, GaussianJakes):
        raise TypeError("no closed form for Gaussian-Jakes dependence")
    return GainDistribution(n_ports=n_ports, dependence=dep)


def _variant_roots(plan: McPlan) -> list:
    return np.random.SeedSequence(plan.seed).spawn(len(plan.variants))


def run_mse_cdf_experiment(plan: McPlan) -> dict:
    """Empirical vs analytic CDF of the rank-S normalized error.

    Returns {variant label: (AnalyticCurve, ComparisonReport)}.
    """
    out = {}
    roots = _variant_roots(plan)
    for (label, dep), root in zip(plan.variants, roots):
        scores = np.empty(plan.trials)

        def one_trial(i, gen, _dep=dep, _scores=scores):
            gains = sample_port_gains(_dep, plan.n_users, plan.n_ports, gen)
            best = gains.gains.max(axis=1)
            theta = 1.0 / (plan.p_max * best)
            _scores[i] = np.partition(theta, plan.s_target - 1)[plan.s_target - 1]

        _for_each_trial(trial_streams(root, plan.trials), one_trial, plan.threads)
        ranked = np.sort(scores)
        empirical = np.searchsorted(ranked, plan.tau_grid, side="left") / plan.trials
        dist = _closed_form_dist(dep, plan.n_ports)
        analytic = normalized_mse_cdf(
            dist, plan.n_users, plan.s_target, plan.p_max, plan.tau_grid
        )
        meta = {
            "experiment": "mse-cdf",
            "variant": label,
            "n_users": plan.n_users,
            "n_ports": plan.n_ports,
            "s_target": plan.s_target,
            "p_max": plan.p_max,
            "trials": plan.trials,
            "seed": plan.seed,
        }
        curve = AnalyticCurve(plan.tau_grid, analytic, dict(meta, kind="analytic"))
        report = ComparisonReport(
            label=label,
            points=_check_points(plan.tau_grid, empirical, analytic, plan.trials),
            meta=meta,
        )
        out[label] = (curve, report)
    return out


def run_participation_experiment(plan: McPlan) -> dict:
    """Empirical vs analytic PMF of the participant count.

    Each report also carries a mean check: the empirical mean count vs
    K * q within 3 standard errors (meta["mean_check"]).
    """
    threshold = plan.sigma2 / (plan.p_max * plan.tau)
    out = {}
    roots = _variant_roots(plan)
    for (label, dep), root in zip(plan.variants, roots):
        counts = np.empty(plan.trials, dtype=np.int64)

        def one_trial(i, gen, _dep=dep, _counts=counts):
            gains = sample_port_gains(_dep, plan.n_users, plan.n_ports, gen)
            best = gains.gains.max(axis=1)
            _counts[i] = int(np.sum(best >= threshold))

        _for_each_trial(trial_streams(root, plan.trials), one_trial, plan.threads)
        hist = np.bincount(counts, minlength=plan.n_users + 1) / plan.trials
        dist = _closed_form_dist(dep, plan.n_ports)
        analytic = participation_pmf_vector(
            dist, plan.n_users, plan.p_max, plan.sigma2, plan.tau
        )
        q = qualify_probability(dist, threshold)
        emp_mean = float(counts.mean())
        mean_se = float(np.sqrt(plan.n_users * q * (1 - q) / plan.trials))
        mean_tol = max(3.0 * mean_se, PASS_FLOOR)
        meta = {
            "experiment": "participation",
            "variant": label,
            "n_users": plan.n_users,
            "n_ports": plan.n_ports,
            "p_max": plan.p_max,
            "sigma2": plan.sigma2,
            "tau": plan.tau,
            "threshold": threshold,
            "trials": plan.trials,
            "seed": plan.seed,
            "mean_check": {
                "empirical_mean": emp_mean,
                "analytic_mean": plan.n_users * q,
                "stderr": mean_se,
                "passed": bool(abs(emp_mean - plan.n_users * q) <= mean_tol),
            },
        }
        report = ComparisonReport(
            label=label,
            points=_check_points(
                np.arange(plan.n_users + 1), hist, analytic, plan.trials
            ),
            meta=meta,
        )
        out[label] = report
    return out


def run_port_sweep(plan: McPlan) -> dict:
    """Full-participation probability q(N)^K vs port count.

    Returns {variant label: (AnalyticCurve, ComparisonReport)}.  Per trial,
    ports are sampled once at max(n_grid) and each grid value n uses the
    first n columns (exact for the margin-consistent copula variants).
    """
    threshold = plan.sigma2 / (plan.p_max * plan.tau)
    n_grid = np.asarray(plan.n_grid, dtype=int)
    n_max = int(n_grid.max())
    out = {}
    roots = _variant_roots(plan)
    for (label, dep), root in zip(plan.variants, roots):
        if isinstance(dep, GaussianJakes):
            raise TypeError("port sweep covers the closed-form variants only")
        full = np.empty((plan.trials, n_grid.size), dtype=bool)

        def one_trial(i, gen, _dep=dep, _full=full):
            gains = sample_port_gains(_dep, plan.n_users, n_max, gen)
            prefix_best = np.maximum.accumulate(gains.gains, axis=1)
            qualified = prefix_best >= threshold
            _full[i] = qualified.all(axis=0)[n_grid - 1]

        _for_each_trial(trial_streams(root, plan.trials), one_trial, plan.threads)
        empirical = full.mean(axis=0)
        analytic = np.array(
            [
                qualify_probability(_closed_form_dist(dep, int(n)), threshold)
                ** plan.n_users
                for n in n_grid
            ]
        )
        meta = {
            "experiment": "port-sweep",
            "variant": label,
            "n_users": plan.n_users,
            "p_max": plan.p_max,
            "sigma2": plan.sigma2,
            "tau": plan.tau,
            "threshold": threshold,
            "trials": plan.trials,
            "seed": plan.seed,
        }
        curve = AnalyticCurve(
            n_grid.astype(float), analytic, dict(meta, kind="analytic")
        )
        report = ComparisonReport(
            label=label,
            points=_check_points(n_grid, empirical, analytic, plan.trials),
            meta=meta,
        )
        out[label] = (curve, report)
    return out


@dataclass
class CopulaDiagnostics:
    """Sampler goodness-of-fit summary.

    marginal_checks / tau_checks: one row per diagnosed beta.
    cdf_reports: max-gain CDF ComparisonReport per beta.
    jakes_gaps: report-only sup gaps between the Bessel-correlated
        empirical max-gain CDF and each closed form (no pass flag; the two
        models are different generative processes).
    """

    marginal_checks: list
    tau_checks: list
    cdf_reports: dict
    jakes_gaps: dict
    meta: dict

    @property
    def all_pass(self) -> bool:
        return (
            all(c["passed"] for c in self.marginal_checks)
            and all(c["passed"] for c in self.tau_checks)
            and all(r.all_pass for r in self.cdf_reports.values())
        )

    def to_json_dict(self) -> dict:
        return {
            "meta": self.meta,
            "all_pass": self.all_pass,
            "marginal_checks": self.marginal_checks,
            "tau_checks": self.tau_checks,
            "cdf_reports": {
                k: v.to_json_dict() for k, v in self.cdf_reports.items()
            },
            "jakes_gaps": self.jakes_gaps,
        }


def run_copula_diagnostics(plan: McPlan) -> CopulaDiagnostics:
    """Check the copula sampler's marginals, rank correlation, and max law."""
    rows = plan.diag_rows
    root = np.random.SeedSequence(plan.seed)
    beta_streams = root.spawn(len(plan.diag_betas) + 1)
    ks_crit = KS_CRIT_1PCT / np.sqrt(rows)
    marginal_checks = []
    tau_checks = []
    cdf_reports = {}
    empirical_max = {}
    for beta, stream in zip(plan.diag_betas, beta_streams[:-1]):
        dep = Clayton(beta)
        gains = sample_port_gains(dep, rows, plan.n_ports, stream).gains
        ks_stats = [
            float(kstest(gains[:, j], "expon").statistic)
            for j in range(plan.n_ports)
        ]
        marginal_checks.append(
            {
                "beta": beta,
                "max_ks_statistic": max(ks_stats),
                "critical_value": float(ks_crit),
                "passed": bool(max(ks_stats) < ks_crit),
            }
        )
        tau_emp = float(kendalltau(gains[:, 0], gains[:, 1]).statistic)
        tau_ref = beta / (beta + 2.0)
        tau_checks.append(
            {
                "beta": beta,
                "empirical_tau": tau_emp,
                "analytic_tau": tau_ref,
                "passed": bool(abs(tau_emp - tau_ref) <= 0.02),
            }
        )
        best = gains.max(axis=1)
        empirical = (best[:, None] < plan.gain_grid).mean(axis=0)
        analytic = channel_gain_cdf(
            GainDistribution(plan.n_ports, dep), plan.gain_grid
        )
        label = f"clayton-{beta:g}"
        empirical_max[label] = empirical
        cdf_reports[label] = ComparisonReport(
            label=label,
            points=_check_points(plan.gain_grid, empirical, analytic, rows),
            meta={"experiment": "copula-max-cdf", "beta": beta, "rows": rows},
        )
    jakes = sample_port_gains(
        GaussianJakes(plan.jakes_aperture), rows, plan.n_ports, beta_streams[-1]
    ).gains
    jakes_cdf = (jakes.max(axis=1)[:, None] < plan.gain_grid).mean(axis=0)
    jakes_gaps = {}
    references = [("independent", Independent()), ("fpa", PerfectDependence())]
    references += [(f"clayton-{b:g}", Clayton(b)) for b in plan.diag_betas]
    for label, dep in references:
        ref = channel_gain_cdf(GainDistribution(plan.n_ports, dep), plan.gain_grid)
        jakes_gaps[label] = float(np.abs(jakes_cdf - ref).max())
    meta = {
        "experiment": "copula-diagnostics",
        "rows": rows,
        "n_ports": plan.n_ports,
        "seed": plan.seed,
        "jakes_aperture": plan.jakes_aperture,
        "note": "jakes_gaps are report-only (different generative model)",
    }
    return CopulaDiagnostics(
        marginal_checks=marginal_checks,
        tau_checks=tau_checks,
        cdf_reports=cdf_reports,
        jakes_gaps=jakes_gaps,
        meta=meta,
    )
