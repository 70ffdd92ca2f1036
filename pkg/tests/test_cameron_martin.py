"""Cameron-Martin space: inner product, restriction/extension isometry."""

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tscalc import (
    CMPath,
    GridMismatchError,
    OffNodeError,
    TimeScale,
    build_grid,
    density_from_path,
    evaluate,
    extend_isometric,
    inner_product,
    parse_timescale,
    read_cmpath,
    write_cmpath,
    zero_path,
)

from conftest import random_timescale

THREE_GRID = build_grid(parse_timescale("explicit:[0,0.5,1]"), 1.0)


class TestInnerProduct:
    def test_unit_density_total_mass(self):
        h = CMPath(THREE_GRID, [1.0, 1.0])
        assert inner_product(h, h) == 1.0

    def test_constants_factor_out(self):
        g = build_grid(TimeScale.cantor(2), 1 / 9)
        h = CMPath(g, np.full(g.n_cells, 2.0))
        k = CMPath(g, np.full(g.n_cells, 3.0))
        assert inner_product(h, k) == pytest.approx(6.0, abs=1e-12)

    def test_partial_overlap(self):
        h = CMPath(THREE_GRID, [1.0, 0.0])
        k = CMPath(THREE_GRID, [1.0, 1.0])
        assert inner_product(h, k) == 0.5

    def test_grid_mismatch(self):
        other = build_grid(TimeScale.interval(), 0.5)
        with pytest.raises(GridMismatchError):
            inner_product(CMPath(THREE_GRID, [1, 1]), CMPath(other, [1, 1]))

    def test_cauchy_schwarz_random_pairs(self):
        rng = np.random.default_rng(31)
        for _ in range(1000):
            g = build_grid(random_timescale(rng, max_segments=4), 0.2)
            h = CMPath(g, rng.standard_normal(g.n_cells))
            k = CMPath(g, rng.standard_normal(g.n_cells))
            assert abs(inner_product(h, k)) <= h.norm() * k.norm() + 1e-12


class TestEvaluate:
    def test_starts_at_zero(self):
        assert evaluate(CMPath(THREE_GRID, [3.0, -1.0]), 0.0) == 0.0

    def test_cumulative_values(self):
        h = CMPath(THREE_GRID, [2.0, 0.0])
        assert evaluate(h, 0.5) == 1.0
        assert evaluate(h, 1.0) == 1.0

    def test_off_node_is_an_error(self):
        with pytest.raises(OffNodeError):
            evaluate(CMPath(THREE_GRID, [1.0, 1.0]), 0.25)


class TestRestriction:
    def test_linear_path_difference_quotients(self):
        h = density_from_path(lambda t: 1.0, THREE_GRID)
        assert h.density.tolist() == [1.0, 1.0]
        assert h.values.tolist() == [0.0, 0.5, 1.0]

    def test_zero_function(self):
        h = density_from_path(lambda t: 0.0, THREE_GRID)
        assert h.norm() == 0.0

    def test_identity_on_unit_interval(self):
        g = build_grid(TimeScale.interval(), 0.25)
        src = CMPath(g, [1.0, -2.0, 0.5, 3.0])
        back = density_from_path(extend_isometric(src), g)
        assert np.array_equal(back.density, src.density)

    def test_callable_average_is_exact_for_cellwise_constant(self):
        g = build_grid(TimeScale.cantor(1), 1 / 3)
        f = lambda t: 2.0 if t <= 1 / 3 else -1.0  # constant on every cell
        h = density_from_path(f, g)
        assert h.density.tolist() == [2.0, -1.0, -1.0]


class TestExtension:
    def test_zero_extends_to_zero(self):
        assert extend_isometric(zero_path(THREE_GRID)).norm() == 0.0

    def test_three_point_example(self):
        h = CMPath(THREE_GRID, [1.0, -1.0])
        ext = extend_isometric(h)
        assert ext.density.tolist() == [1.0, -1.0]
        assert ext.norm_sq() == h.norm_sq() == 1.0
        assert len(ext.grid.timescale.segments) == 1

    def test_extension_values_agree_at_scale_nodes(self):
        g = build_grid(TimeScale.cantor(2), 1 / 9)
        rng = np.random.default_rng(32)
        h = CMPath(g, rng.standard_normal(g.n_cells))
        ext = extend_isometric(h)
        assert np.array_equal(ext.values, h.values)

    def test_isometry_and_roundtrip_random(self):
        rng = np.random.default_rng(33)
        for _ in range(200):
            g = build_grid(random_timescale(rng, max_segments=5), 0.15)
            h = CMPath(g, rng.standard_normal(g.n_cells))
            ext = extend_isometric(h)
            assert abs(ext.norm() - h.norm()) <= 1e-12
            back = density_from_path(ext, g)
            assert np.allclose(back.density, h.density, rtol=1e-12, atol=1e-12)

    def test_cantor3_isometry(self):
        g = build_grid(TimeScale.cantor(3), 1 / 27)
        rng = np.random.default_rng(34)
        h = CMPath(g, rng.standard_normal(g.n_cells))
        assert abs(extend_isometric(h).norm() - h.norm()) <= 1e-12

    def test_restriction_from_finer_unit_grid(self):
        # extension evaluated on a finer unit grid still restricts exactly
        g = build_grid(TimeScale.cantor(1), 1 / 3)
        h = CMPath(g, [1.5, -0.5, 2.0])
        fine = build_grid(TimeScale.interval(), 1 / 12)
        ext_fine = density_from_path(
            lambda t, h=h: _step_density(h, t), fine, subcells=8
        )
        back = density_from_path(ext_fine, g)
        assert np.allclose(back.density, h.density, atol=1e-12)


def _step_density(h, t):
    """The gap-filled extension of h as a plain function on [0, 1]."""
    nodes = h.grid.nodes
    j = min(int(np.searchsorted(nodes, t, side="right")) - 1, len(h.density) - 1)
    return float(h.density[max(j, 0)])


class TestClassicalReduction:
    def test_unit_interval_matches_analytic_h1(self):
        g = build_grid(TimeScale.interval(), 1 / 64)
        f = lambda t: math.cos(2 * math.pi * t)
        h = density_from_path(f, g)
        assert h.norm_sq() == pytest.approx(0.5, abs=1e-3)
        for t in (0.25, 0.5, 1.0):
            assert evaluate(h, t) == pytest.approx(
                math.sin(2 * math.pi * t) / (2 * math.pi), abs=1e-3
            )


class TestAlgebraAndIO:
    @given(st.lists(st.floats(-5, 5), min_size=2, max_size=2))
    @settings(max_examples=50, deadline=None)
    def test_linearity(self, dens):
        h = CMPath(THREE_GRID, dens)
        k = CMPath(THREE_GRID, [1.0, 2.0])
        assert inner_product(h + k, k) == pytest.approx(
            inner_product(h, k) + inner_product(k, k), rel=1e-12, abs=1e-12
        )
        assert inner_product(2.0 * h, k) == pytest.approx(
            2.0 * inner_product(h, k), rel=1e-12, abs=1e-12
        )
        assert (-h).norm() == h.norm()

    def test_columnar_roundtrip(self):
        g = build_grid(TimeScale.cantor(2), 1 / 18)
        rng = np.random.default_rng(35)
        h = CMPath(g, rng.standard_normal(g.n_cells))
        buf = io.StringIO()
        write_cmpath(h, buf)
        buf.seek(0)
        back = read_cmpath(buf, g)
        assert np.array_equal(back.density, h.density)
        assert np.array_equal(back.values, h.values)
