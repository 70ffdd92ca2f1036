"""Finite node grids refining a time scale, with per-cell Guseinov weights.

A grid's nodes are all segment endpoints of the scale plus a uniform
subdivision of each nondegenerate segment at a requested mesh.  The cell
between consecutive nodes carries the Guseinov mass of the half-open scale
window it covers, which for both in-segment cells and gap (atom) cells is
exactly the node spacing; the cell weights therefore always sum to 1.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import (
    GridMismatchError,
    InvalidTimeScaleError,
    NotInTimeScaleError,
    OffNodeError,
)
from .timescale import MEMBERSHIP_TOL, TimeScale


class DeltaGrid:
    """Node set refining a TimeScale, with cell weights and jump indices.

    Attributes
    ----------
    timescale : TimeScale
    nodes : ndarray
        Strictly increasing node times from 0 to 1, containing every
        segment endpoint of the scale.
    weights : ndarray
        Guseinov mass per cell (= node spacing), length len(nodes) - 1.
    is_atom : ndarray of bool
        True for cells spanning an inter-segment gap; their mass is the
        atom at the right-scattered left node.
    rho_idx : ndarray of int
        Per node, the node index of its backward jump within the scale
        (its own index at left-dense nodes and at 0).
    mesh : float or None
        The mesh the grid was built with, if any.
    """

    __slots__ = ("timescale", "nodes", "weights", "is_atom", "rho_idx", "mesh")

    def __init__(self, timescale: TimeScale, nodes, mesh: float | None = None):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 2:
            raise InvalidTimeScaleError("a grid needs at least the nodes 0 and 1")
        if not (np.diff(nodes) > 0).all():
            raise InvalidTimeScaleError("grid nodes must be strictly increasing")

        starts = [a for a, _ in timescale.segments]
        ends = [b for _, b in timescale.segments]
        endpoint_set = set(starts) | set(ends)
        node_set = set(nodes.tolist())
        if not endpoint_set <= node_set:
            raise InvalidTimeScaleError("grid nodes must include every segment endpoint")

        seg_of = np.empty(len(nodes), dtype=int)
        rho_idx = np.empty(len(nodes), dtype=int)
        for k, t in enumerate(nodes):
            try:
                i, snapped = timescale.locate(t)
            except NotInTimeScaleError as exc:
                raise InvalidTimeScaleError(f"grid node {t!r}: {exc}") from exc
            if snapped != t:
                raise InvalidTimeScaleError(f"grid node {t!r} is not an exact scale point")
            seg_of[k] = i
            rho_idx[k] = k - 1 if (i > 0 and t == starts[i]) else k

        is_atom = np.empty(len(nodes) - 1, dtype=bool)
        for j in range(len(nodes) - 1):
            si, sj = seg_of[j], seg_of[j + 1]
            if si == sj:
                is_atom[j] = False
            elif sj == si + 1 and nodes[j] == ends[si] and nodes[j + 1] == starts[sj]:
                is_atom[j] = True
            else:
                raise InvalidTimeScaleError(
                    f"cell ({nodes[j]}, {nodes[j + 1]}) straddles a segment boundary"
                )

        weights = np.diff(nodes)
        for arr in (nodes, weights, is_atom, rho_idx):
            arr.setflags(write=False)
        object.__setattr__(self, "timescale", timescale)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "is_atom", is_atom)
        object.__setattr__(self, "rho_idx", rho_idx)
        object.__setattr__(self, "mesh", mesh)

    def __setattr__(self, name, value):
        raise AttributeError("DeltaGrid is immutable")

    def __repr__(self) -> str:
        return f"DeltaGrid({self.timescale!r}, {self.n_nodes} nodes)"

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_cells(self) -> int:
        return len(self.weights)

    def total_mass(self) -> float:
        return math.fsum(self.weights.tolist())

    def node_index(self, t: float) -> int:
        """Index of the node at time t, within the membership tolerance."""
        k = int(np.searchsorted(self.nodes, t))
        for j in (k - 1, k):
            if 0 <= j < len(self.nodes) and abs(self.nodes[j] - t) <= MEMBERSHIP_TOL:
                return j
        raise OffNodeError(f"{t!r} is not a grid node")

    def same_nodes(self, other: "DeltaGrid") -> bool:
        return self.nodes.shape == other.nodes.shape and bool(
            (self.nodes == other.nodes).all()
        )

    def require_same(self, other: "DeltaGrid") -> None:
        if not (self.same_nodes(other) and self.timescale == other.timescale):
            raise GridMismatchError("operands live on different grids")

    def with_unit_timescale(self) -> "DeltaGrid":
        """The same node set regarded as a grid over T = [0, 1] (no atoms)."""
        return DeltaGrid(TimeScale.interval(), self.nodes, mesh=self.mesh)


def build_grid(ts: TimeScale, mesh: float) -> DeltaGrid:
    """Build the grid of all segment endpoints plus subdivisions at step <= mesh.

    Parameters
    ----------
    ts : TimeScale
    mesh : float
        Maximum node spacing inside nondegenerate segments.  Gap cells keep
        their full gap length regardless of the mesh.
    """
    if mesh <= 0:
        raise ValueError("mesh must be positive")
    chunks = []
    for a, b in ts.segments:
        if a == b:
            chunks.append(np.array([a]))
        else:
            n = max(1, math.ceil((b - a) / mesh - 1e-9))
            chunks.append(np.linspace(a, b, n + 1))
    return DeltaGrid(ts, np.concatenate(chunks), mesh=mesh)
