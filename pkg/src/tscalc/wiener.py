"""Sampling of the sampled Wiener measure and its quasi-invariance toolkit.

Paths live at grid nodes; increments between consecutive nodes are
independent centered Gaussians whose variance is the real-time node spacing,
including the gap length across scattered cells.  On top of the sampler the
module provides the Paley-Wiener integral of a Cameron-Martin density
against a path, translation by Cameron-Martin elements, and the
Girsanov/Cameron-Martin density exp(I(h) - ||h||^2 / 2) of the translated
measure, also available in log space.

Ensembles are reproducible: a recorded 64-bit master seed is expanded into
fixed per-chunk substreams, so the sampled matrix is identical regardless of
how many workers fill the chunks.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from typing import TextIO, Union

import numpy as np

from .cameron_martin import CMPath
from .errors import GridMismatchError
from .grid import DeltaGrid
from .timescale import TimeScale

_CHUNK = 4096


class SampledPath:
    """Real values at grid nodes with value 0 at time 0."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: DeltaGrid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n_nodes,):
            raise GridMismatchError(
                f"values have shape {values.shape}, grid has {grid.n_nodes} nodes"
            )
        if values[0] != 0.0:
            raise ValueError("a sampled path must start at 0")
        if not np.isfinite(values).all():
            raise ValueError("a sampled path must be finite everywhere")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("SampledPath is immutable")

    def __repr__(self) -> str:
        return f"SampledPath({self.grid!r})"


class PathEnsemble:
    """A stack of sampled paths over one grid, with its seed record."""

    __slots__ = ("grid", "values", "seed")

    def __init__(self, grid: DeltaGrid, values, seed: int | None = None):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[1] != grid.n_nodes:
            raise GridMismatchError("ensemble values must be (n_paths, n_nodes)")
        if values.shape[0] < 1:
            raise ValueError("an ensemble needs at least one path")
        if (values[:, 0] != 0.0).any():
            raise ValueError("all paths must start at 0")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "seed", seed)

    def __setattr__(self, name, value):
        raise AttributeError("PathEnsemble is immutable")

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, i: int) -> SampledPath:
        return SampledPath(self.grid, self.values[i])

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=1)


def sample_brownian(grid: DeltaGrid, rng: np.random.Generator) -> SampledPath:
    """Draw one path of the sampled Wiener measure on the grid."""
    incr = rng.standard_normal(grid.n_cells) * np.sqrt(grid.weights)
    return SampledPath(grid, np.concatenate(([0.0], np.cumsum(incr))))


def sample_ensemble(
    grid: DeltaGrid,
    n_paths: int,
    seed: int,
    *,
    workers: int = 1,
) -> PathEnsemble:
    """Draw a reproducible ensemble of Brownian paths.

    The master seed is expanded into one substream per fixed-size chunk of
    paths, so the result is byte-identical for any worker count.

    Parameters
    ----------
    grid : DeltaGrid
    n_paths : int
    seed : int
        Recorded master seed.
    workers : int
        Threads filling chunks concurrently; purely a throughput knob.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    sqrtw = np.sqrt(grid.weights)
    values = np.empty((n_paths, grid.n_nodes))
    values[:, 0] = 0.0
    n_chunks = math.ceil(n_paths / _CHUNK)
    streams = np.random.SeedSequence(seed).spawn(n_chunks)

    def fill(i: int) -> None:
        a, b = i * _CHUNK, min(n_paths, (i + 1) * _CHUNK)
        rng = np.random.default_rng(streams[i])
        incr = rng.standard_normal((b - a, grid.n_cells)) * sqrtw
        np.cumsum(incr, axis=1, out=values[a:b, 1:])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, range(n_chunks)))
    else:
        for i in range(n_chunks):
            fill(i)
    values.setflags(write=False)
    return PathEnsemble(grid, values, seed=seed)


PathLike = Union[SampledPath, PathEnsemble]


def paley_wiener(h: CMPath, w: PathLike):
    """Stochastic integral of the density of h against the path increments.

    The left-point sum over cells, exact for piecewise-constant densities;
    for an indicator density over (s, t] on a discrete scale it reproduces
    the increment of the path between the forward jumps of s and t.

    Returns a float for a single path, an array for an ensemble.
    """
    h.grid.require_same(w.grid)
    incr = np.diff(w.values, axis=-1)
    out = incr @ h.density
    return float(out) if np.ndim(out) == 0 else out


def translate(w: PathLike, h: CMPath) -> PathLike:
    """Shift a path (or every path of an ensemble) by a Cameron-Martin element."""
    h.grid.require_same(w.grid)
    if isinstance(w, PathEnsemble):
        return PathEnsemble(w.grid, w.values + h.values, seed=w.seed)
    return SampledPath(w.grid, w.values + h.values)


def girsanov_log_density(h: CMPath, w: PathLike):
    """log of the translated-measure density: I(h) - ||h||^2 / 2."""
    return paley_wiener(h, w) - 0.5 * h.norm_sq()


def girsanov_density(h: CMPath, w: PathLike):
    """Density of the h-translated Wiener measure along w; strictly positive.

    For large ||h|| prefer girsanov_log_density, which cannot overflow.
    """
    return np.exp(girsanov_log_density(h, w))


# -- columnar ensemble I/O ----------------------------------------------------


def write_ensemble(ens: PathEnsemble, fileobj: TextIO) -> None:
    """Node times as the header row, then one path per row ('%.17g' floats)."""
    fileobj.write(",".join("%.17g" % t for t in ens.grid.nodes) + "\n")
    for row in ens.values:
        fileobj.write(",".join("%.17g" % v for v in row) + "\n")


def ensemble_metadata(ens: PathEnsemble) -> dict:
    ts = ens.grid.timescale
    return {
        "seed": ens.seed,
        "n_paths": len(ens),
        "n_nodes": ens.grid.n_nodes,
        "timescale_spec": ts.spec,
        "segments": [list(seg) for seg in ts.segments],
        "mesh": ens.grid.mesh,
    }


def write_ensemble_meta(ens: PathEnsemble, fileobj: TextIO) -> None:
    json.dump(ensemble_metadata(ens), fileobj, indent=2, sort_keys=True)
    fileobj.write("\n")


def read_ensemble(fileobj: TextIO, meta: dict) -> PathEnsemble:
    """Rebuild an ensemble from its columnar file plus metadata sidecar."""
    ts = TimeScale([tuple(seg) for seg in meta["segments"]], spec=meta.get("timescale_spec"))
    header = fileobj.readline().strip()
    nodes = np.array([float(x) for x in header.split(",")])
    grid = DeltaGrid(ts, nodes, mesh=meta.get("mesh"))
    values = np.loadtxt(fileobj, delimiter=",", ndmin=2)
    return PathEnsemble(grid, values, seed=meta.get("seed"))
