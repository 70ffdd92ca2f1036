"""Drift functionals and strong-solution solvers for drift SDEs on a grid.

The equation solved is the pathwise recursion

    X(node k) = B(node k) + sum_{cells j < k} beta_j(X-prefix) * weight_j,

the discrete form of adding the running Guseinov integral of an adapted,
bounded drift to a driving path.  Two independent routes produce the same
solution: an explicit forward recursion, and a damped Picard iteration on
the shift u with X = B + u(B), whose update direction is the defect
-h + integral of beta along the h-shifted path.  The iteration accepts a
step size by backtracking from 1, which realizes the weak-contraction
criterion the solver's convergence rests on; for the built-in sinusoidal
delay drift the full step contracts the defect norm by at least its
amplitude, pathwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cameron_martin import CMPath
from .errors import EstimatorUndefinedError, NotConvergedError, SpecParseError
from .grid import DeltaGrid
from .wiener import PathEnsemble, PathLike, SampledPath

_BOUND_SLACK = 1e-12


class DriftFunctional:
    """A bounded, adapted path functional evaluated at cell left nodes.

    Subclasses implement eval_ensemble; adaptedness is structural: the
    evaluator receives a read-only view of the path values at nodes <= k
    only, so reading beyond the current node is impossible.  Self-test
    drifts may declare ``adapted = False`` to receive the full node matrix
    instead (solvers that require adaptedness reject them).

    Attributes
    ----------
    bound : float
        Declared sup of |beta|; checked opportunistically during runs.
    adapted : bool
        Class-level flag, True for every legitimate drift.
    """

    adapted = True
    bound: float = math.inf

    def eval_ensemble(self, grid: DeltaGrid, k: int, values: np.ndarray) -> np.ndarray:
        """Drift at node k for each path; `values` is the (n_paths, k+1) prefix."""
        raise NotImplementedError

    def eval(self, grid: DeltaGrid, k: int, prefix: np.ndarray) -> float:
        """Single-path form of eval_ensemble."""
        return float(self.eval_ensemble(grid, k, np.asarray(prefix)[None, :])[0])

    def describe(self) -> str:
        return type(self).__name__


class ConstantDrift(DriftFunctional):
    """beta identically equal to a constant (degenerate check case)."""

    def __init__(self, c: float):
        self.c = float(c)
        self.bound = abs(self.c)

    def eval_ensemble(self, grid, k, values):
        return np.full(values.shape[0], self.c)

    def describe(self) -> str:
        return f"const:{self.c:g}"


class SinDelayDrift(DriftFunctional):
    """a * sin of the path increment since the backward jump.

    With rho_mode="exact" the backward jump of a left-dense node is the node
    itself, so the drift vanishes there and only scattered nodes contribute;
    rho_mode="mesh" uses the immediately preceding grid node instead.
    """

    def __init__(self, a: float, rho_mode: str = "exact"):
        if rho_mode not in ("exact", "mesh"):
            raise ValueError("rho_mode must be 'exact' or 'mesh'")
        self.a = float(a)
        self.rho_mode = rho_mode
        self.bound = abs(self.a)

    def eval_ensemble(self, grid, k, values):
        r = int(grid.rho_idx[k]) if self.rho_mode == "exact" else max(k - 1, 0)
        return self.a * np.sin(values[:, k] - values[:, r])

    def describe(self) -> str:
        return f"sin:{self.a:g}[{self.rho_mode}]"


class MarkovDrift(DriftFunctional):
    """beta_t(omega) = g(t, omega(t)) for a user-supplied bounded g."""

    def __init__(self, g: Callable[[float, np.ndarray], np.ndarray], bound: float, name: str = "markov"):
        self.g = g
        self.bound = float(bound)
        self.name = name

    def eval_ensemble(self, grid, k, values):
        return np.asarray(self.g(float(grid.nodes[k]), values[:, k]), dtype=float)

    def describe(self) -> str:
        return self.name


class TabulatedPastDrift(DriftFunctional):
    """A bounded function of finitely many past node values.

    `lags` are node offsets looked up at max(k - lag, 0); fn receives the
    node time and the (n_paths, len(lags)) matrix of lagged values.
    """

    def __init__(
        self,
        fn: Callable[[float, np.ndarray], np.ndarray],
        lags: Sequence[int],
        bound: float,
        name: str = "tabulated",
    ):
        if any(lag < 0 for lag in lags):
            raise ValueError("lags must be nonnegative")
        self.fn = fn
        self.lags = tuple(int(lag) for lag in lags)
        self.bound = float(bound)
        self.name = name

    def eval_ensemble(self, grid, k, values):
        past = np.stack([values[:, max(k - lag, 0)] for lag in self.lags], axis=-1)
        return np.asarray(self.fn(float(grid.nodes[k]), past), dtype=float)

    def describe(self) -> str:
        return self.name


class LookaheadSinDrift(DriftFunctional):
    """Deliberately non-adapted drift reading one node AHEAD (self-test only).

    Exists so the filtration prefix check can demonstrate that it detects
    the violation it claims to detect.  Rejected by the forward solver.
    """

    adapted = False

    def __init__(self, a: float):
        self.a = float(a)
        self.bound = abs(self.a)

    def eval_ensemble(self, grid, k, values):
        j = min(k + 1, values.shape[1] - 1)
        return self.a * np.sin(values[:, j] - values[:, k])

    def describe(self) -> str:
        return f"lookahead-sin:{self.a:g}"


def parse_drift(spec: str, *, rho_mode: str = "exact") -> DriftFunctional:
    """Parse a CLI drift description: ``zero``, ``const:<c>`` or ``sin:<a>``."""
    spec = spec.strip()
    try:
        if spec == "zero":
            return ConstantDrift(0.0)
        if spec.startswith("const:"):
            return ConstantDrift(float(spec.split(":", 1)[1]))
        if spec.startswith("sin:"):
            return SinDelayDrift(float(spec.split(":", 1)[1]), rho_mode=rho_mode)
    except ValueError as exc:
        raise SpecParseError(f"bad drift spec {spec!r}: {exc}") from exc
    raise SpecParseError(f"unrecognized drift spec {spec!r}")


# -- drift evaluation over a grid ---------------------------------------------


def _readonly(view: np.ndarray) -> np.ndarray:
    view = view.view()
    view.flags.writeable = False
    return view


def drift_matrix(drift: DriftFunctional, grid: DeltaGrid, values: np.ndarray) -> np.ndarray:
    """beta at every cell left node, (n_paths, n_cells); prefix views enforce adaptedness."""
    values = np.atleast_2d(values)
    out = np.empty((values.shape[0], grid.n_cells))
    full = _readonly(values)
    for j in range(grid.n_cells):
        arg = full[:, : j + 1] if drift.adapted else full
        out[:, j] = drift.eval_ensemble(grid, j, arg)
    return out


def _shift_values(densities: np.ndarray, grid: DeltaGrid) -> np.ndarray:
    """Cumulative path values of per-path densities (0 at the first node)."""
    vals = np.zeros((densities.shape[0], grid.n_nodes))
    np.cumsum(densities * grid.weights, axis=1, out=vals[:, 1:])
    return vals


# -- forward solver -----------------------------------------------------------


def solve_forward(grid: DeltaGrid, drift: DriftFunctional, b: PathLike) -> PathLike:
    """Solve X = B + running drift integral by the explicit prefix recursion.

    Each summand needs X only at strictly earlier nodes, so the recursion is
    exact: on a discrete scale it reproduces the hand recursion
    X(t_n) = B(t_n) + sum_{k<n} beta(t_k, X)(t_{k+1} - t_k).

    Parameters
    ----------
    grid : DeltaGrid
    drift : DriftFunctional
        Must be adapted; a drift-bound violation raises a warning.
    b : SampledPath or PathEnsemble
        Driving path(s) on the grid.

    Returns
    -------
    Same type as b.
    """
    if not drift.adapted:
        raise ValueError("the forward recursion is only defined for adapted drifts")
    grid.require_same(b.grid)
    vals = np.atleast_2d(b.values)
    n, w = vals.shape[0], grid.weights
    x = np.zeros_like(vals)
    acc = np.zeros(n)
    max_beta = 0.0
    xro = _readonly(x)
    for j in range(grid.n_cells):
        beta_j = drift.eval_ensemble(grid, j, xro[:, : j + 1])
        max_beta = max(max_beta, float(np.abs(beta_j).max()))
        acc = acc + beta_j * w[j]
        x[:, j + 1] = vals[:, j + 1] + acc
    if max_beta > drift.bound + _BOUND_SLACK:
        warnings.warn(
            f"drift exceeded its declared bound: |beta| reached {max_beta:g} "
            f"> {drift.bound:g}",
            stacklevel=2,
        )
    if isinstance(b, PathEnsemble):
        return PathEnsemble(grid, x, seed=b.seed)
    return SampledPath(grid, x[0])


def inverse_map(drift: DriftFunctional, x: PathLike) -> PathLike:
    """T(x) = x minus the running drift integral along x itself (prefix reads)."""
    grid = x.grid
    vals = np.atleast_2d(x.values)
    beta = drift_matrix(drift, grid, vals)
    out = vals - _shift_values(beta, grid)
    if isinstance(x, PathEnsemble):
        return PathEnsemble(grid, out, seed=x.seed)
    return SampledPath(grid, out[0])


# -- fixed-point machinery ----------------------------------------------------


def fixed_point_defect(drift: DriftFunctional, h: CMPath, w: SampledPath) -> CMPath:
    """Defect of a candidate shift: density beta(. + h) - h-density.

    Vanishes exactly when h solves the pathwise shift equation, i.e. when
    w + h(w) is the strong solution driven by w.
    """
    h.grid.require_same(w.grid)
    y = w.values + h.values
    beta = drift_matrix(drift, w.grid, y)[0]
    return CMPath(w.grid, beta - h.density)


@dataclass
class SolveReport:
    """Outcome of a fixed-point solve over an ensemble.

    The shift is stored as one density row per path; residuals hold the
    ensemble L2 defect norm of every accepted iterate (the first entry is
    the zero-shift defect), epsilons the step size taken after each.
    """

    converged: bool
    iterations: int
    residuals: list[float]
    epsilons: list[float]
    tol: float
    max_iter: int
    shift_densities: np.ndarray
    grid: DeltaGrid
    drift_desc: str
    drift_bound: float
    max_abs_drift: float
    seed: int | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def bound_violated(self) -> bool:
        return self.max_abs_drift > self.drift_bound + _BOUND_SLACK

    def shift_path(self, i: int) -> CMPath:
        return CMPath(self.grid, self.shift_densities[i])

    def shift_values(self) -> np.ndarray:
        return _shift_values(self.shift_densities, self.grid)

    def to_json_dict(self) -> dict:
        ts = self.grid.timescale
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "residuals": self.residuals,
            "epsilons": self.epsilons,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "n_paths": int(self.shift_densities.shape[0]),
            "drift": self.drift_desc,
            "drift_bound": self.drift_bound,
            "max_abs_drift": self.max_abs_drift,
            "bound_violated": self.bound_violated,
            "seed": self.seed,
            "timescale_spec": ts.spec,
            "mesh": self.grid.mesh,
            "warnings": self.warnings,
        }


def _ensemble_defect(
    drift: DriftFunctional,
    grid: DeltaGrid,
    w_vals: np.ndarray,
    h_dens: np.ndarray,
) -> tuple[np.ndarray, float, float]:
    """Defect densities, ensemble L2 defect norm, and max |beta| observed."""
    y = w_vals + _shift_values(h_dens, grid)
    beta = drift_matrix(drift, grid, y)
    defect = beta - h_dens
    res_sq = (defect**2 * grid.weights).sum(axis=1)
    return defect, math.sqrt(float(res_sq.mean())), float(np.abs(beta).max())


def clarke_solve(
    drift: DriftFunctional,
    ensemble: PathEnsemble,
    tol: float,
    max_iter: int = 100,
    *,
    k_target: float = 0.99,
    max_backtracks: int = 30,
) -> SolveReport:
    """Solve the shift equation u = drift primitive along tau_u, per path.

    Starting from the zero shift, iterates h <- h + eps * defect(h) on every
    path of the ensemble, with eps chosen by backtracking from 1 (halving
    until the ensemble defect norm shrinks by at least sqrt(k_target)), until
    the ensemble L2 defect norm drops below tol.  On convergence each path's
    shifted identity w + u(w) solves the drift equation driven by w.

    Non-convergence is reported, never silent: the report carries the full
    residual history, and the loop stops early if no step size makes
    progress.

    Parameters
    ----------
    drift : DriftFunctional
    ensemble : PathEnsemble
        Monte Carlo substrate; the iteration itself is pathwise.
    tol : float
        Target for sqrt(mean over paths of the squared defect norm).
    max_iter : int
        Maximum number of residual evaluations of accepted iterates.
    k_target : float
        Squared contraction target for accepting a step size.
    max_backtracks : int
        Halvings tried before falling back to the best step seen.

    Returns
    -------
    SolveReport
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not math.isfinite(drift.bound):
        raise ValueError("the drift must declare a finite bound")
    grid = ensemble.grid
    w_vals = ensemble.values
    h = np.zeros((len(ensemble), grid.n_cells))

    defect, res, max_beta = _ensemble_defect(drift, grid, w_vals, h)
    residuals = [res]
    epsilons: list[float] = []
    notes: list[str] = []
    accept_factor = math.sqrt(k_target)

    while residuals[-1] >= tol and len(residuals) < max_iter:
        eps = 1.0
        accepted = best = None
        for _ in range(max_backtracks):
            cand = h + eps * defect
            c_defect, c_res, c_beta = _ensemble_defect(drift, grid, w_vals, cand)
            max_beta = max(max_beta, c_beta)
            if best is None or c_res < best[2]:
                best = (cand, c_defect, c_res, eps)
            if c_res <= accept_factor * residuals[-1]:
                accepted = (cand, c_defect, c_res, eps)
                break
            eps *= 0.5
        if accepted is None:
            if best is not None and best[2] < residuals[-1]:
                accepted = best
            else:
                notes.append(
                    "stopped: no step size reduced the defect norm "
                    f"(residual {residuals[-1]:.3e})"
                )
                break
        h, defect, res, eps = accepted
        residuals.append(res)
        epsilons.append(eps)

    converged = residuals[-1] < tol
    if max_beta > drift.bound + _BOUND_SLACK:
        notes.append(
            f"drift exceeded its declared bound: |beta| reached {max_beta:g} "
            f"> {drift.bound:g}"
        )
        warnings.warn(notes[-1], stacklevel=2)
    return SolveReport(
        converged=converged,
        iterations=len(residuals),
        residuals=residuals,
        epsilons=epsilons,
        tol=tol,
        max_iter=max_iter,
        shift_densities=h,
        grid=grid,
        drift_desc=drift.describe(),
        drift_bound=drift.bound,
        max_abs_drift=max_beta,
        seed=ensemble.seed,
        warnings=notes,
    )


def strong_solution_map(
    drift: DriftFunctional, ensemble: PathEnsemble, report: SolveReport
) -> PathEnsemble:
    """The solved ensemble w + u(w); requires a converged report."""
    if not report.converged:
        raise NotConvergedError("strong_solution_map needs a converged solve")
    report.grid.require_same(ensemble.grid)
    x = ensemble.values + report.shift_values()
    return PathEnsemble(ensemble.grid, x, seed=ensemble.seed)


class SolutionMap:
    """The solution map F(b) = b + u(b) as a function on fresh paths.

    Replays a fixed step-size schedule of the damped Picard iteration from
    the zero shift, which makes evaluation deterministic and, for adapted
    drifts, prefix-faithful: the value at a node is a function of the input
    at nodes up to it.
    """

    def __init__(self, drift: DriftFunctional, grid: DeltaGrid, epsilons: Sequence[float]):
        self.drift = drift
        self.grid = grid
        self.epsilons = tuple(float(e) for e in epsilons)

    @classmethod
    def from_report(cls, drift: DriftFunctional, report: SolveReport) -> "SolutionMap":
        return cls(drift, report.grid, report.epsilons)

    def shift_densities(self, values: np.ndarray) -> np.ndarray:
        vals = np.atleast_2d(np.asarray(values, dtype=float))
        h = np.zeros((vals.shape[0], self.grid.n_cells))
        for eps in self.epsilons:
            y = vals + _shift_values(h, self.grid)
            beta = drift_matrix(self.drift, self.grid, y)
            h = h + eps * (beta - h)
        return h

    def __call__(self, b):
        if isinstance(b, (SampledPath, PathEnsemble)):
            vals = np.atleast_2d(b.values)
            out = vals + _shift_values(self.shift_densities(vals), self.grid)
            if isinstance(b, PathEnsemble):
                return PathEnsemble(self.grid, out, seed=b.seed)
            return SampledPath(self.grid, out[0])
        vals = np.atleast_2d(np.asarray(b, dtype=float))
        out = vals + _shift_values(self.shift_densities(vals), self.grid)
        return out if np.ndim(b) == 2 else out[0]


# -- contraction-constant estimation ------------------------------------------


@dataclass(frozen=True)
class ContractionEstimate:
    """Largest observed defect-contraction ratio over random adapted shifts."""

    k_hat: float
    rows: tuple[tuple[int, float, float, float, float], ...]  # (trial, eps, num, den, ratio)

    def __float__(self) -> float:
        return self.k_hat


def _random_adapted_densities(
    rng: np.random.Generator, grid: DeltaGrid, path_values: np.ndarray, trial: int
) -> np.ndarray:
    """Random bounded densities, adapted: cell j may read the path up to node j."""
    n, m = path_values.shape[0], grid.n_cells
    c0 = rng.uniform(-1.0, 1.0, m)
    if trial % 2 == 0:
        dens = np.tile(c0, (n, 1))
    else:
        c1 = rng.uniform(-1.0, 1.0, m)
        dens = c0 + c1 * np.tanh(path_values[:, :m])
    target = rng.uniform(0.25, 2.0)
    norms = np.sqrt((dens**2 * grid.weights).sum(axis=1))
    peak = float(norms.max())
    if peak > 0:
        dens = dens * (target / peak)
    return dens


def estimate_contraction(
    drift: DriftFunctional,
    ensemble: PathEnsemble,
    trials: int,
    rng: np.random.Generator,
    *,
    epsilons: Sequence[float] = (1.0, 0.5, 0.25),
) -> ContractionEstimate:
    """Monte Carlo upper-bound probe of the solver's contraction constant.

    For each of `trials` random adapted shifts h and each step size eps, the
    ratio compares the drift's response to the damped update against the
    squared defect norm:

        mean_w  integral (beta(. + h + eps*defect) - beta(. + h))^2
        ----------------------------------------------------------
        eps^2 * mean_w  integral (h-density - beta(. + h))^2

    Ratios with a vanishing denominator are skipped; if every denominator
    vanishes the estimator is undefined.

    Returns
    -------
    ContractionEstimate
        k_hat is the max ratio observed; rows hold the per-trial table.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    grid = ensemble.grid
    w_vals = ensemble.values
    w = grid.weights
    rows: list[tuple[int, float, float, float, float]] = []
    usable = False
    for trial in range(trials):
        h_dens = _random_adapted_densities(rng, grid, w_vals, trial)
        h_vals = _shift_values(h_dens, grid)
        beta_h = drift_matrix(drift, grid, w_vals + h_vals)
        den = float((((h_dens - beta_h) ** 2) * w).sum(axis=1).mean())
        if den <= 0.0:
            continue
        usable = True
        prim_vals = _shift_values(beta_h, grid)
        for eps in epsilons:
            he_vals = (1.0 - eps) * h_vals + eps * prim_vals
            beta_eps = drift_matrix(drift, grid, w_vals + he_vals)
            num = float((((beta_eps - beta_h) ** 2) * w).sum(axis=1).mean())
            rows.append((trial, eps, num, den, num / (eps**2 * den)))
    if not usable:
        raise EstimatorUndefinedError(
            "every trial denominator vanished; the contraction ratio is undefined"
        )
    k_hat = max((r[4] for r in rows), default=0.0)
    return ContractionEstimate(k_hat=k_hat, rows=tuple(rows))
