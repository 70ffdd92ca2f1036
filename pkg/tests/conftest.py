"""Shared generators and brute-force oracles for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from tscalc import TimeScale

LATTICE = 1024


def random_timescale(rng: np.random.Generator, max_segments: int = 8) -> TimeScale:
    """A random finite union of lattice-aligned intervals and points."""
    k = int(rng.integers(2, max_segments + 1))
    interior = rng.choice(np.arange(1, LATTICE), size=2 * k - 2, replace=False)
    pts = np.sort(np.concatenate(([0], interior, [LATTICE]))) / LATTICE
    segs = []
    for i in range(k):
        a, b = float(pts[2 * i]), float(pts[2 * i + 1])
        if rng.random() < 0.4:
            if i == k - 1:
                a = b
            else:
                b = a
        segs.append((a, b))
    return TimeScale(segs)


def sample_points(ts: TimeScale, rng: np.random.Generator, n_interior: int = 3):
    """Member points to probe: all endpoints plus random segment interiors."""
    pts = []
    for a, b in ts.segments:
        pts.extend([a, b])
        if a < b:
            pts.extend(a + (b - a) * rng.random(n_interior))
    return sorted(set(pts))


# -- brute-force oracles: linear scans over the segment list -------------------


def oracle_forward(segments, t: float) -> float:
    candidates = []
    for a, b in segments:
        if a > t:
            candidates.append(a)
        elif b > t:
            candidates.append(t)
    return min(candidates) if candidates else 1.0


def oracle_backward(segments, t: float) -> float:
    candidates = []
    for a, b in segments:
        if b < t:
            candidates.append(b)
        elif a < t:
            candidates.append(t)
    return max(candidates) if candidates else 0.0


def oracle_classify(segments, t: float):
    mu = oracle_forward(segments, t) - t
    rho = oracle_backward(segments, t)
    return (
        t != 1.0 and mu > 0.0,
        t != 1.0 and mu == 0.0,
        t != 0.0 and rho < t,
        t != 0.0 and rho == t,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
