"""Sampled Wiener measure: Gaussian law, Paley-Wiener isometry, Girsanov."""

import io
import json
import math

import numpy as np
import pytest

from tscalc import (
    CMPath,
    GridMismatchError,
    SampledPath,
    TimeScale,
    build_grid,
    girsanov_density,
    girsanov_log_density,
    indicator_path,
    paley_wiener,
    parse_timescale,
    read_ensemble,
    sample_brownian,
    sample_ensemble,
    translate,
    write_ensemble,
    write_ensemble_meta,
    zero_path,
)

N = 20_000
THREE_GRID = build_grid(parse_timescale("explicit:[0,0.5,1]"), 1.0)
CANTOR4 = build_grid(TimeScale.cantor(4), 1 / 81)


@pytest.fixture(scope="module")
def cantor_ens():
    return sample_ensemble(CANTOR4, N, seed=101)


class TestSampling:
    def test_paths_start_at_zero(self, cantor_ens):
        assert (cantor_ens.values[:, 0] == 0.0).all()
        path = sample_brownian(CANTOR4, np.random.default_rng(0))
        assert path.values[0] == 0.0

    def test_two_point_scale_unit_variance(self):
        grid = build_grid(parse_timescale("explicit:[0,1]"), 1.0)
        ens = sample_ensemble(grid, N, seed=5)
        v = ens.values[:, 1].var(ddof=1)
        assert abs(v - 1.0) <= 3.0 * math.sqrt(2.0 / (N - 1))

    def test_increment_variances_match_gaps(self, cantor_ens):
        incr = cantor_ens.increments()
        w = CANTOR4.weights
        z = np.abs(incr.var(axis=0, ddof=1) - w) / (w * math.sqrt(2.0 / (N - 1)))
        assert z.max() < 4.0

    def test_covariance_is_min(self, cantor_ens):
        idx = [3, 9, 17, 25, 31]
        for a, b in zip(idx, idx[1:]):
            s, t = CANTOR4.nodes[a], CANTOR4.nodes[b]
            c = np.mean(cantor_ens.values[:, a] * cantor_ens.values[:, b])
            se = math.sqrt((s * t + min(s, t) ** 2) / N)
            assert abs(c - min(s, t)) <= 3.5 * se

    def test_disjoint_increments_uncorrelated(self, cantor_ens):
        incr = cantor_ens.increments()
        pairs = [(0, 10), (5, 20), (12, 30)]
        for i, j in pairs:
            r = np.corrcoef(incr[:, i], incr[:, j])[0, 1]
            assert abs(r) < 4.0 / math.sqrt(N)

    def test_seed_determinism_and_worker_independence(self):
        a = sample_ensemble(CANTOR4, 5000, seed=9, workers=1)
        b = sample_ensemble(CANTOR4, 5000, seed=9, workers=4)
        c = sample_ensemble(CANTOR4, 5000, seed=10)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)
        assert a.seed == 9


class TestPaleyWiener:
    def test_zero_density(self, cantor_ens):
        assert paley_wiener(zero_path(CANTOR4), cantor_ens[0]) == 0.0

    def test_indicator_on_discrete_scale(self):
        grid = build_grid(TimeScale.uniform(8), 1.0)
        rng = np.random.default_rng(42)
        w = sample_brownian(grid, rng)
        for ks, kt in [(0, 4), (2, 7), (5, 5)]:
            s, t = grid.nodes[ks], grid.nodes[kt]
            h = indicator_path(grid, s, t)
            # forward jumps on a purely discrete scale land on the next node
            want = w.values[min(kt + 1, 8)] - w.values[min(ks + 1, 8)]
            assert paley_wiener(h, w) == pytest.approx(want, abs=1e-15)

    def test_indicator_at_right_scattered_cantor_points(self):
        rng = np.random.default_rng(43)
        w = sample_brownian(CANTOR4, rng)
        s = CANTOR4.timescale.segments[2][1]   # a right-scattered endpoint
        t = CANTOR4.timescale.segments[9][1]   # another one
        h = indicator_path(CANTOR4, s, t)
        ks, kt = CANTOR4.node_index(s), CANTOR4.node_index(t)
        want = w.values[kt + 1] - w.values[ks + 1]
        assert paley_wiener(h, w) == pytest.approx(want, abs=1e-15)
        # the next node across the gap is exactly the forward jump
        from tscalc import forward_jump

        assert CANTOR4.nodes[kt + 1] == forward_jump(CANTOR4.timescale, t)

    def test_variance_matches_norm(self, cantor_ens):
        rng = np.random.default_rng(44)
        h = CMPath(CANTOR4, rng.standard_normal(CANTOR4.n_cells))
        sample_var = paley_wiener(h, cantor_ens).var(ddof=1)
        se = h.norm_sq() * math.sqrt(2.0 / (N - 1))
        assert abs(sample_var - h.norm_sq()) <= 3.5 * se

    def test_grid_mismatch(self, cantor_ens):
        h = zero_path(THREE_GRID)
        with pytest.raises(GridMismatchError):
            paley_wiener(h, cantor_ens)


class TestTranslate:
    def test_zero_shift(self, cantor_ens):
        w = cantor_ens[0]
        assert np.array_equal(translate(w, zero_path(CANTOR4)).values, w.values)

    def test_group_inverse(self, cantor_ens):
        rng = np.random.default_rng(45)
        h = CMPath(CANTOR4, rng.standard_normal(CANTOR4.n_cells))
        w = cantor_ens[1]
        back = translate(translate(w, h), -h)
        assert np.allclose(back.values, w.values, atol=1e-15)

    def test_nodewise_sum_example(self):
        w = SampledPath(THREE_GRID, [0.0, 0.2, -0.1])
        h = CMPath(THREE_GRID, [1.0, 1.0])  # values (0, 0.5, 1)
        assert translate(w, h).values.tolist() == [0.0, 0.7, 0.9]


class TestGirsanov:
    def test_zero_shift_density_one(self, cantor_ens):
        assert girsanov_density(zero_path(CANTOR4), cantor_ens[0]) == 1.0

    def test_log_density_at_own_translate(self):
        rng = np.random.default_rng(46)
        h = CMPath(CANTOR4, rng.standard_normal(CANTOR4.n_cells))
        zero = SampledPath(CANTOR4, np.zeros(CANTOR4.n_nodes))
        got = girsanov_log_density(h, translate(zero, h))
        assert got == pytest.approx(0.5 * h.norm_sq(), abs=1e-12)

    def test_martingale_mean(self, cantor_ens):
        h = CMPath(CANTOR4, np.full(CANTOR4.n_cells, 0.5))
        d = girsanov_density(h, cantor_ens)
        se = d.std(ddof=1) / math.sqrt(N)
        assert abs(d.mean() - 1.0) <= 3.5 * se

    def test_change_of_variables(self, cantor_ens):
        rng = np.random.default_rng(47)
        dens = rng.standard_normal(CANTOR4.n_cells)
        h = CMPath(CANTOR4, dens / CMPath(CANTOR4, dens).norm())
        d = girsanov_density(h, cantor_ens)
        k = 17
        for f in (lambda v: v[:, k], lambda v: v[:, k] ** 2):
            diff = f(translate(cantor_ens, h).values) - f(cantor_ens.values) * d
            se = diff.std(ddof=1) / math.sqrt(N)
            assert abs(diff.mean()) <= 3.5 * se


class TestEnsembleIO:
    def test_columnar_roundtrip(self):
        ens = sample_ensemble(CANTOR4, 50, seed=77)
        csv, meta = io.StringIO(), io.StringIO()
        write_ensemble(ens, csv)
        write_ensemble_meta(ens, meta)
        csv.seek(0)
        back = read_ensemble(csv, json.loads(meta.getvalue()))
        assert np.array_equal(back.values, ens.values)
        assert back.grid.same_nodes(ens.grid)
        assert back.seed == 77

    def test_meta_contents(self):
        ens = sample_ensemble(THREE_GRID, 3, seed=1)
        meta = io.StringIO()
        write_ensemble_meta(ens, meta)
        payload = json.loads(meta.getvalue())
        assert payload["timescale_spec"] == "explicit:[0,0.5,1]"
        assert payload["seed"] == 1 and payload["n_paths"] == 3
