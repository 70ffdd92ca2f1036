"""The sampled Cameron-Martin space over a grid.

Elements are stored by their piecewise-constant density per grid cell; the
cumulative values at the nodes are the running weighted sums, so the path
always starts at 0.  The square norm is the weighted sum of squared
densities.  Restriction from the unit-interval space and the isometric
extension back to it are exact on this piecewise-constant class: extension
keeps the same density over the same node set (gaps are filled with the atom
cell's constant), so norms agree identically and restriction recovers the
original densities.
"""

from __future__ import annotations

import math
from typing import Callable, TextIO, Union

import numpy as np

from .errors import GridMismatchError, OffNodeError
from .grid import DeltaGrid


class CMPath:
    """A Cameron-Martin element: per-cell density plus cumulative node values.

    Parameters
    ----------
    grid : DeltaGrid
    density : array_like
        One value per grid cell.
    """

    __slots__ = ("grid", "density", "values")

    def __init__(self, grid: DeltaGrid, density):
        density = np.asarray(density, dtype=float)
        if density.shape != (grid.n_cells,):
            raise GridMismatchError(
                f"density has shape {density.shape}, grid has {grid.n_cells} cells"
            )
        values = np.concatenate(([0.0], np.cumsum(density * grid.weights)))
        density = density.copy()
        for arr in (density, values):
            arr.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "density", density)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("CMPath is immutable")

    def __repr__(self) -> str:
        return f"CMPath({self.grid!r}, norm={self.norm():.6g})"

    def norm_sq(self) -> float:
        return float((self.density**2 * self.grid.weights).sum())

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def __neg__(self) -> "CMPath":
        return CMPath(self.grid, -self.density)

    def __add__(self, other: "CMPath") -> "CMPath":
        self.grid.require_same(other.grid)
        return CMPath(self.grid, self.density + other.density)

    def __sub__(self, other: "CMPath") -> "CMPath":
        self.grid.require_same(other.grid)
        return CMPath(self.grid, self.density - other.density)

    def __mul__(self, c: float) -> "CMPath":
        return CMPath(self.grid, self.density * float(c))

    __rmul__ = __mul__


def zero_path(grid: DeltaGrid) -> CMPath:
    return CMPath(grid, np.zeros(grid.n_cells))


def indicator_path(grid: DeltaGrid, s: float, t: float) -> CMPath:
    """Density 1 on the cells whose left node lies in (s, t], else 0."""
    left = grid.nodes[:-1]
    return CMPath(grid, ((left > s) & (left <= t)).astype(float))


def inner_product(h: CMPath, k: CMPath) -> float:
    """Weighted product of densities; symmetric and bilinear."""
    h.grid.require_same(k.grid)
    return float((h.density * k.density * h.grid.weights).sum())


def evaluate(h: CMPath, t: float) -> float:
    """Value of the path at a grid node; off-node points are an error."""
    try:
        return float(h.values[h.grid.node_index(t)])
    except OffNodeError:
        raise OffNodeError(
            f"{t!r} is not a node of this path's grid; off-node evaluation "
            "is not interpolated"
        ) from None


def extend_isometric(h: CMPath) -> CMPath:
    """Extension to the unit-interval space, norm-preserving by construction.

    Each gap is filled with the constant density of its atom cell, so the
    extension has the same density array over the same nodes, now weighted by
    plain Lebesgue measure: the norm is preserved exactly and restriction
    recovers the input.
    """
    return CMPath(h.grid.with_unit_timescale(), h.density)


def density_from_path(
    g: Union[CMPath, Callable[[float], float]],
    grid: DeltaGrid,
    *,
    subcells: int = 32,
) -> CMPath:
    """Restrict a unit-interval Cameron-Martin element onto a scale grid.

    Within segments the density is copied (as the cell average); at each
    right-scattered point the atom cell receives the difference quotient of
    the cumulative path across the gap, i.e. the gap average of the density.

    Parameters
    ----------
    g : CMPath over a unit-interval grid, or callable
        The element's density on [0, 1].  A CMPath input is integrated
        exactly; a callable is cell-averaged by a midpoint rule with
        `subcells` points per cell (exact when constant per cell).
    grid : DeltaGrid
        Target grid over the scale.

    Returns
    -------
    CMPath
    """
    if isinstance(g, CMPath):
        if len(g.grid.timescale.segments) != 1:
            raise GridMismatchError("restriction input must live over T = [0, 1]")
        density = np.array(
            [
                _pc_integral(g.grid.nodes, g.density, lo, hi) / (hi - lo)
                for lo, hi in zip(grid.nodes[:-1], grid.nodes[1:])
            ]
        )
        return CMPath(grid, density)
    if callable(g):
        density = np.empty(grid.n_cells)
        for j, (lo, hi) in enumerate(zip(grid.nodes[:-1], grid.nodes[1:])):
            step = (hi - lo) / subcells
            mids = lo + (np.arange(subcells) + 0.5) * step
            density[j] = math.fsum(g(x) for x in mids) / subcells
        return CMPath(grid, density)
    raise TypeError("g must be a unit-grid CMPath or a density callable on [0, 1]")


def _pc_integral(nodes: np.ndarray, density: np.ndarray, lo: float, hi: float) -> float:
    """Exact integral of a piecewise-constant density over [lo, hi]."""
    i0 = max(0, int(np.searchsorted(nodes, lo, side="right")) - 1)
    i1 = min(len(density) - 1, int(np.searchsorted(nodes, hi, side="left")) - 1)
    return math.fsum(
        density[p] * (min(hi, nodes[p + 1]) - max(lo, nodes[p]))
        for p in range(i0, i1 + 1)
        if min(hi, nodes[p + 1]) > max(lo, nodes[p])
    )


# -- columnar serialization ---------------------------------------------------


def write_cmpath(h: CMPath, fileobj: TextIO) -> None:
    """Write one row per node: node, cell-weight, density, value (CSV)."""
    fileobj.write("node,weight,density,value\n")
    g = h.grid
    for k in range(g.n_nodes - 1):
        fileobj.write(
            "%.17g,%.17g,%.17g,%.17g\n"
            % (g.nodes[k], g.weights[k], h.density[k], h.values[k])
        )
    fileobj.write("%.17g,nan,nan,%.17g\n" % (g.nodes[-1], h.values[-1]))


def read_cmpath(fileobj: TextIO, grid: DeltaGrid) -> CMPath:
    """Read a path written by write_cmpath back onto its grid."""
    header = fileobj.readline()
    if header.strip() != "node,weight,density,value":
        raise ValueError("not a CMPath file")
    rows = [line.strip().split(",") for line in fileobj if line.strip()]
    nodes = np.array([float(r[0]) for r in rows])
    if len(nodes) != grid.n_nodes or not np.allclose(nodes, grid.nodes, atol=1e-15):
        raise GridMismatchError("file nodes do not match the grid")
    return CMPath(grid, np.array([float(r[2]) for r in rows[:-1]]))
