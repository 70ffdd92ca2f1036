"""Grid construction: nodes, weights, atom cells, backward-jump indices."""

import numpy as np
import pytest

from tscalc import DeltaGrid, InvalidTimeScaleError, TimeScale, build_grid, parse_timescale

from conftest import random_timescale

THREE = parse_timescale("explicit:[0,0.5,1]")


def test_discrete_scale_nodes_and_weights():
    g = build_grid(THREE, 0.1)
    assert g.nodes.tolist() == [0.0, 0.5, 1.0]
    assert g.weights.tolist() == [0.5, 0.5]
    assert g.is_atom.tolist() == [True, True]


def test_interval_mesh_subdivision():
    g = build_grid(TimeScale.interval(), 0.25)
    assert g.nodes.tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert not g.is_atom.any()


def test_cantor2_endpoint_nodes():
    g = build_grid(TimeScale.cantor(2), 1 / 9)
    assert g.n_nodes == 8  # endpoints only: segments have length exactly 1/9
    assert abs(g.total_mass() - 1.0) <= 1e-12
    finer = build_grid(TimeScale.cantor(2), 1 / 18)
    assert finer.n_nodes == 12
    assert abs(finer.total_mass() - 1.0) <= 1e-12


def test_rho_idx_left_scattered_vs_dense():
    g = build_grid(TimeScale.cantor(1), 1 / 6)
    # nodes: 0, 1/6, 1/3 | 2/3, 5/6, 1 -- only 2/3 is left-scattered
    expect = [0, 1, 2, 2, 4, 5]
    assert g.rho_idx.tolist() == expect


def test_atom_cells_are_the_gaps():
    rng = np.random.default_rng(21)
    for _ in range(40):
        ts = random_timescale(rng)
        g = build_grid(ts, 0.07)
        left = g.nodes[:-1]
        gaps = set(ts.right_scattered_points())
        assert set(left[g.is_atom].tolist()) == gaps
        assert abs(g.total_mass() - 1.0) <= 1e-12


def test_weight_sum_many_scales():
    rng = np.random.default_rng(22)
    for _ in range(100):
        g = build_grid(random_timescale(rng), float(rng.uniform(0.01, 0.5)))
        assert abs(g.total_mass() - 1.0) <= 1e-12


def test_mesh_validation():
    with pytest.raises(ValueError):
        build_grid(THREE, 0.0)
    with pytest.raises(ValueError):
        build_grid(THREE, -1.0)


def test_explicit_nodes_must_cover_endpoints():
    with pytest.raises(InvalidTimeScaleError):
        DeltaGrid(TimeScale.cantor(1), [0.0, 1 / 3, 1.0])  # misses 2/3
    with pytest.raises(InvalidTimeScaleError):
        DeltaGrid(THREE, [0.0, 0.25, 0.5, 1.0])  # 0.25 not in the scale


def test_node_lookup():
    g = build_grid(THREE, 0.1)
    assert g.node_index(0.5) == 1
    assert g.node_index(0.5 + 1e-13) == 1
    from tscalc import OffNodeError

    with pytest.raises(OffNodeError):
        g.node_index(0.25)


def test_unit_view_shares_nodes():
    g = build_grid(TimeScale.cantor(2), 1 / 9)
    u = g.with_unit_timescale()
    assert u.same_nodes(g)
    assert not u.is_atom.any()
    assert u.weights.tolist() == g.weights.tolist()
