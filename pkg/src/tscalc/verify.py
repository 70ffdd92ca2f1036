"""Statistical and structural verification of sampled ensembles and solves.

Every check condenses to a TestReport whose pass flag means "statistic
within threshold"; thresholds are three standard errors for the Monte Carlo
checks (about a 0.3% false-alarm rate per test, made deterministic in
practice by fixed seeds) and hard numerical tolerances for the structural
checks.  Each check also exposes a self-test knob or a companion drift that
deliberately violates what it verifies, so the suite demonstrably detects
the failures it claims to detect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as scipy_stats

from .cameron_martin import CMPath
from .errors import EnsembleTooSmallError, NotConvergedError
from .sde import (
    DriftFunctional,
    SolutionMap,
    SolveReport,
    drift_matrix,
    inverse_map,
    strong_solution_map,
)
from .wiener import PathEnsemble, paley_wiener

_MIN_PATHS = 1000
_KS_COEFF = 1.63  # asymptotic 1% critical value of sqrt(n) * D_n


@dataclass(frozen=True)
class TestReport:
    """One verification outcome: pass iff statistic within threshold."""

    name: str
    statistic: float
    threshold: float
    sample_size: int
    passed: bool
    seed: int | None = None

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.name} statistic={self.statistic:.6g} "
            f"threshold={self.threshold:.6g} n={self.sample_size} seed={self.seed}"
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "sample_size": self.sample_size,
            "passed": self.passed,
            "seed": self.seed,
        }


def _report(name, statistic, threshold, n, seed) -> TestReport:
    return TestReport(
        name=name,
        statistic=float(statistic),
        threshold=float(threshold),
        sample_size=int(n),
        passed=bool(statistic <= threshold),
        seed=seed,
    )


def _require_size(ensemble: PathEnsemble) -> int:
    n = len(ensemble)
    if n < _MIN_PATHS:
        raise EnsembleTooSmallError(
            f"ensemble too small: {n} paths, statistical checks need >= {_MIN_PATHS}"
        )
    return n


def _cov_pairs(n_nodes: int, count: int = 5) -> list[tuple[int, int]]:
    """Deterministic node-index pairs spread over the grid."""
    qs = sorted(set(np.linspace(1, n_nodes - 1, 5).astype(int).tolist()))
    pairs = []
    for a in range(len(qs)):
        for b in range(a + 1, len(qs)):
            pairs.append((qs[a], qs[b]))
    return pairs[:count] if len(pairs) >= count else pairs


def brownianity_suite(
    ensemble: PathEnsemble, *, lambdas: tuple[float, ...] = (0.5, 1.0, 2.0)
) -> list[TestReport]:
    """Distributional checks that an ensemble is sampled Brownian motion.

    Covers increment means, increment variances against the real-time gaps,
    the covariance min(s, t) at a handful of node pairs, the Gaussian
    characteristic function of the total increment at the given frequencies,
    and Kolmogorov-Smirnov normality of all standardized increments pooled.
    """
    n = _require_size(ensemble)
    seed = ensemble.seed
    w = ensemble.grid.weights
    nodes = ensemble.grid.nodes
    incr = ensemble.increments()
    reports = []

    z_mean = np.abs(incr.mean(axis=0)) / np.sqrt(w / n)
    reports.append(_report("increment-means", z_mean.max(), 3.0, n, seed))

    s2 = incr.var(axis=0, ddof=1)
    z_var = np.abs(s2 - w) / (w * math.sqrt(2.0 / (n - 1)))
    reports.append(_report("increment-variances", z_var.max(), 3.0, n, seed))

    z_cov = []
    for i, j in _cov_pairs(ensemble.grid.n_nodes):
        s, t = nodes[i], nodes[j]
        c_hat = float(np.mean(ensemble.values[:, i] * ensemble.values[:, j]))
        se = math.sqrt((s * t + min(s, t) ** 2) / n)
        z_cov.append(abs(c_hat - min(s, t)) / se)
    reports.append(_report("covariance-min", max(z_cov), 3.0, n, seed))

    z_cf = []
    total = ensemble.values[:, -1]
    span = float(nodes[-1] - nodes[0])
    for lam in lambdas:
        target = math.exp(-span * lam**2 / 2.0)
        cosv, sinv = np.cos(lam * total), np.sin(lam * total)
        z_cf.append(abs(cosv.mean() - target) / (cosv.std(ddof=1) / math.sqrt(n)))
        z_cf.append(abs(sinv.mean() - 0.0) / (sinv.std(ddof=1) / math.sqrt(n)))
    reports.append(_report("char-function", max(z_cf), 3.0, n, seed))

    pooled = (incr / np.sqrt(w)).ravel()
    ks = scipy_stats.kstest(pooled, "norm").statistic
    reports.append(
        _report("ks-normality", ks, _KS_COEFF / math.sqrt(pooled.size), pooled.size, seed)
    )
    return reports


def girsanov_mean_check(
    h: CMPath, ensemble: PathEnsemble, *, drop_compensator: bool = False
) -> TestReport:
    """Mean of the translated-measure density must sit within 3 SE of 1.

    drop_compensator=True is the self-test mode: it omits the -||h||^2/2
    term, which inflates the mean to exp(||h||^2/2) and must fail.
    """
    n = _require_size(ensemble)
    log_d = paley_wiener(h, ensemble)
    if not drop_compensator:
        log_d = log_d - 0.5 * h.norm_sq()
    d = np.exp(log_d)
    se = float(d.std(ddof=1)) / math.sqrt(n)
    return _report("girsanov-mean", abs(float(d.mean()) - 1.0), 3.0 * se, n, ensemble.seed)


def law_equivalence_check(
    drift: DriftFunctional,
    ensemble: PathEnsemble,
    report: SolveReport,
    *,
    n_check_nodes: int = 4,
) -> list[TestReport]:
    """Checks that the solved ensemble's law is a density-tilt of the Wiener law.

    (a) the pathwise exponential weight along the solution is finite and
    strictly positive on every path; (b) reweighting the solution by the
    inverse weight reproduces Brownian first and second moments at a battery
    of nodes; (c) the declared drift bound actually held.
    """
    if not report.converged:
        raise NotConvergedError("law_equivalence_check needs a converged solve")
    n = _require_size(ensemble)
    seed = ensemble.seed
    grid = ensemble.grid
    x = strong_solution_map(drift, ensemble, report).values
    beta = drift_matrix(drift, grid, x)
    dx = np.diff(x, axis=1)
    log_w = (beta * dx).sum(axis=1) - 0.5 * ((beta**2) * grid.weights).sum(axis=1)
    weight_inv = np.exp(-log_w)

    bad = int(np.count_nonzero(~np.isfinite(weight_inv) | (weight_inv <= 0.0)))
    reports = [_report("law-positivity", bad, 0.0, n, seed)]

    ks = sorted(set(np.linspace(1, grid.n_nodes - 1, n_check_nodes).astype(int).tolist()))
    zs = []
    for k in ks:
        t = float(grid.nodes[k])
        for f_vals, target in ((x[:, k], 0.0), (x[:, k] ** 2, t)):
            g = f_vals * weight_inv
            se = float(g.std(ddof=1)) / math.sqrt(n)
            zs.append(abs(float(g.mean()) - target) / se)
    reports.append(_report("law-reweighting", max(zs), 3.0, n, seed))

    excess = float(np.abs(beta).max()) - drift.bound
    reports.append(_report("drift-bound", excess, 0.0, n, seed))
    return reports


def filtration_prefix_check(
    drift: DriftFunctional,
    ensemble: PathEnsemble,
    report: SolveReport,
    probes: int,
    *,
    seed: int = 0,
    tol: float = 1e-12,
) -> TestReport:
    """Perturbation certificate that solution and driver generate each other.

    For each random (path, node k) probe the driving path is perturbed
    strictly after node k and the solution recomputed through the solution
    map: values at nodes <= k must be unchanged.  Symmetrically the solution
    is perturbed after node k and the driver recomputed through the inverse
    map.  A drift that reads ahead of the current node breaks both.
    """
    if not report.converged:
        raise NotConvergedError("filtration_prefix_check needs a converged solve")
    if probes < 1:
        raise ValueError("probes must be >= 1")
    rng = np.random.default_rng(seed)
    grid = ensemble.grid
    m = grid.n_nodes
    f_map = SolutionMap.from_report(drift, report)

    rows = rng.integers(0, len(ensemble), probes)
    cuts = rng.integers(0, m - 1, probes)
    b = ensemble.values[rows].copy()
    x = f_map(b)

    b_pert = b.copy()
    x_pert = x.copy()
    for r in range(probes):
        tail = m - (cuts[r] + 1)
        b_pert[r, cuts[r] + 1 :] += rng.standard_normal(tail)
        x_pert[r, cuts[r] + 1 :] += rng.standard_normal(tail)

    x_from_pert = f_map(b_pert)
    b_back = np.atleast_2d(inverse_map(drift, PathEnsemble(grid, x)).values)
    b_back_pert = np.atleast_2d(inverse_map(drift, PathEnsemble(grid, x_pert)).values)

    worst = 0.0
    for r in range(probes):
        k = cuts[r] + 1
        worst = max(worst, float(np.abs(x_from_pert[r, :k] - x[r, :k]).max()))
        worst = max(worst, float(np.abs(b_back_pert[r, :k] - b_back[r, :k]).max()))
    rep = _report("filtration-prefix", worst, tol, probes, seed)
    return rep
