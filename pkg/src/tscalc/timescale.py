"""Time scales in [0, 1] and their Guseinov measure.

A time scale here is a closed set T with {0, 1} <= T <= [0, 1], represented
exactly as a finite union of disjoint closed intervals (a degenerate interval
encodes an isolated point).  The module computes the jump operators, the
graininess, Hilger's point classification, and the Guseinov measure: its
values on scaled intervals, its Lebesgue decomposition into a continuous part
plus atoms at right-scattered points, and integrals against it.

Infinite scales with an accumulation point (e.g. geometric sequences falling
to 0) are approximated by truncation below a configurable floor; the residual
mass of the tail is absorbed by the atom at 0 so that the total mass stays 1.
"""

from __future__ import annotations

import math
import re
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import (
    IntervalOrderError,
    InvalidTimeScaleError,
    NotInTimeScaleError,
    SpecParseError,
)

#: Points within this distance of the represented set count as members.
MEMBERSHIP_TOL = 1e-12

#: Minimum admissible gap / nondegenerate segment length.  Anything closer
#: would be indistinguishable under the membership tolerance.
MIN_SEPARATION = 1e-11

#: Default truncation floor for sequences accumulating at 0.
DEFAULT_FLOOR = 1e-6

#: Default number of midpoint quadrature cells per continuous segment.
DEFAULT_QUAD_CELLS = 64


@dataclass(frozen=True)
class PointClass:
    """Hilger classification flags of a single point of the scale.

    For interior points exactly one right flag and one left flag is set.
    At t = 0 both left flags are False; at t = 1 both right flags are False.
    """

    right_scattered: bool
    right_dense: bool
    left_scattered: bool
    left_dense: bool


@dataclass(frozen=True)
class MeasureDecomposition:
    """Lebesgue decomposition of the Guseinov measure.

    continuous_segments carries the restriction of Lebesgue measure to the
    nondegenerate segments of the scale; atoms is the list of
    (location, weight) pairs sitting at the right-scattered points.
    """

    continuous_segments: tuple[tuple[float, float], ...]
    atoms: tuple[tuple[float, float], ...]

    def continuous_mass(self) -> float:
        return math.fsum(b - a for a, b in self.continuous_segments)

    def atomic_mass(self) -> float:
        return math.fsum(w for _, w in self.atoms)

    def total_mass(self) -> float:
        return math.fsum(
            [b - a for a, b in self.continuous_segments] + [w for _, w in self.atoms]
        )

    def interval_measure(self, s: float, t: float) -> float:
        """Measure of [s, t] within the scale, recomputed from the parts.

        This is an independent route to the interval values (overlap lengths
        plus contained atoms) used to cross-check the closed formula.
        """
        if s > t:
            raise IntervalOrderError(f"interval endpoints out of order: {s} > {t}")
        pieces = [
            min(b, t) - max(a, s)
            for a, b in self.continuous_segments
            if min(b, t) > max(a, s)
        ]
        pieces += [w for loc, w in self.atoms if s <= loc <= t]
        return math.fsum(pieces)


class TimeScale:
    """A closed subset of [0, 1] containing {0, 1}, as disjoint closed intervals.

    Parameters
    ----------
    segments : sequence of (a, b) pairs
        Closed intervals with a <= b, strictly increasing, first a = 0 and
        last b = 1.  A pair with a == b is an isolated point.
    spec : str, optional
        The mini-language string this scale was parsed from, kept for
        reproducibility metadata.
    """

    __slots__ = ("segments", "spec", "_starts", "_ends")

    def __init__(self, segments: Sequence[tuple[float, float]], spec: str | None = None):
        segs = tuple((float(a), float(b)) for a, b in segments)
        if not segs:
            raise InvalidTimeScaleError("a time scale needs at least one segment")
        for a, b in segs:
            if not (0.0 <= a <= b <= 1.0):
                raise InvalidTimeScaleError(f"segment [{a}, {b}] not within [0, 1]")
            if a != b and b - a < MIN_SEPARATION:
                raise InvalidTimeScaleError(
                    f"segment [{a}, {b}] shorter than the resolvable minimum"
                )
        for (_, b0), (a1, _) in zip(segs, segs[1:]):
            if a1 - b0 < MIN_SEPARATION:
                raise InvalidTimeScaleError(
                    f"segments must be disjoint and sorted; gap ({b0}, {a1}) too small"
                )
        if segs[0][0] != 0.0:
            raise InvalidTimeScaleError("the scale must contain 0 as its left endpoint")
        if segs[-1][1] != 1.0:
            raise InvalidTimeScaleError("the scale must contain 1 as its right endpoint")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "_starts", [a for a, _ in segs])
        object.__setattr__(self, "_ends", [b for _, b in segs])

    def __setattr__(self, name, value):  # immutable after construction
        raise AttributeError("TimeScale is immutable")

    def __repr__(self) -> str:
        if self.spec:
            return f"TimeScale({self.spec!r})"
        return f"TimeScale({list(self.segments)!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, TimeScale) and self.segments == other.segments

    def __hash__(self) -> int:
        return hash(self.segments)

    # -- membership ---------------------------------------------------------

    def locate(self, t: float) -> tuple[int, float]:
        """Return (segment index, snapped point) for a member point.

        Snaps t onto a stored endpoint when within the membership tolerance,
        so that later arithmetic on endpoints is exact.  Raises
        NotInTimeScaleError for non-members.
        """
        t = float(t)
        i = bisect_right(self._starts, t) - 1
        for j in (i, i + 1):
            if 0 <= j < len(self.segments):
                a, b = self.segments[j]
                if a - MEMBERSHIP_TOL <= t <= b + MEMBERSHIP_TOL:
                    if abs(t - a) <= MEMBERSHIP_TOL:
                        return j, a
                    if abs(t - b) <= MEMBERSHIP_TOL:
                        return j, b
                    return j, t
        raise NotInTimeScaleError(f"point {t!r} is not in the time scale")

    def __contains__(self, t: float) -> bool:
        try:
            self.locate(t)
            return True
        except NotInTimeScaleError:
            return False

    # -- structure ----------------------------------------------------------

    @property
    def is_discrete(self) -> bool:
        """True when every segment is an isolated point."""
        return all(a == b for a, b in self.segments)

    def isolated_points(self) -> list[float]:
        return [a for a, b in self.segments if a == b]

    def right_scattered_points(self) -> list[float]:
        """Right endpoints of all segments except the last (which ends at 1)."""
        return self._ends[:-1]

    def left_scattered_points(self) -> list[float]:
        return self._starts[1:]

    # -- constructors -------------------------------------------------------

    @staticmethod
    def interval() -> "TimeScale":
        """The continuous scale T = [0, 1]."""
        return TimeScale([(0.0, 1.0)], spec="interval")

    @staticmethod
    def from_points(points: Sequence[float], spec: str | None = None) -> "TimeScale":
        """A discrete scale made of the given points (must include 0 and 1)."""
        pts = sorted(set(float(p) for p in points))
        return TimeScale([(p, p) for p in pts], spec=spec)

    @staticmethod
    def uniform(n: int) -> "TimeScale":
        """n + 1 equispaced isolated points k/n, k = 0..n."""
        if n < 1:
            raise SpecParseError("uniform scale needs n >= 1")
        return TimeScale.from_points([k / n for k in range(n + 1)], spec=f"uniform:{n}")

    @staticmethod
    def geometric(q: float, n: int, floor: float = DEFAULT_FLOOR) -> "TimeScale":
        """{0} union {q^k : 0 <= k <= n}, truncated below the floor.

        Terms q^k < floor are dropped and the point 0 keeps the whole tail
        mass as its atom weight, so the total Guseinov mass stays 1.
        """
        if not (0.0 < q < 1.0):
            raise SpecParseError("geometric ratio must satisfy 0 < q < 1")
        if n < 1:
            raise SpecParseError("geometric scale needs n >= 1")
        pts = [q**k for k in range(n + 1) if q**k >= floor]
        pts.append(0.0)
        return TimeScale.from_points(pts, spec=f"geometric:{q},{n}")

    @staticmethod
    def cantor(level: int) -> "TimeScale":
        """Level-n middle-thirds construction: 2^n closed intervals of length 3^-n."""
        if level < 0:
            raise SpecParseError("cantor level must be >= 0")
        segs = [(0.0, 1.0)]
        for _ in range(level):
            nxt = []
            for a, b in segs:
                w = (b - a) / 3.0
                nxt.append((a, a + w))
                nxt.append((b - w, b))
            segs = nxt
        return TimeScale(segs, spec=f"cantor:{level}")


# -- jump operators and classification --------------------------------------


def forward_jump(ts: TimeScale, t: float) -> float:
    """Nearest scale point strictly after t (itself when right-dense); 1 at t = 1."""
    i, t = ts.locate(t)
    if t == 1.0:
        return 1.0
    a, b = ts.segments[i]
    if t < b:
        return t
    return ts.segments[i + 1][0]


def backward_jump(ts: TimeScale, t: float) -> float:
    """Nearest scale point strictly before t (itself when left-dense); 0 at t = 0."""
    i, t = ts.locate(t)
    if t == 0.0:
        return 0.0
    a, b = ts.segments[i]
    if t > a:
        return t
    return ts.segments[i - 1][1]


def graininess(ts: TimeScale, t: float) -> float:
    """Forward jump distance; positive exactly at right-scattered points."""
    _, t = ts.locate(t)
    return forward_jump(ts, t) - t


def classify(ts: TimeScale, t: float) -> PointClass:
    """Hilger classification with the boundary conventions at 0 and 1."""
    _, t = ts.locate(t)
    mu = graininess(ts, t)
    rs = t != 1.0 and mu > 0.0
    rd = t != 1.0 and mu == 0.0
    ls = t != 0.0 and backward_jump(ts, t) < t
    ld = t != 0.0 and not ls
    return PointClass(rs, rd, ls, ld)


# -- Guseinov measure --------------------------------------------------------


def measure_of_interval(ts: TimeScale, s: float, t: float) -> float:
    """Guseinov measure of [s, t] within the scale.

    Equals the forward jump of t minus s; in particular the singleton {t}
    carries exactly the graininess of t.

    Parameters
    ----------
    ts : TimeScale
    s, t : float
        Member points with s <= t.
    """
    _, s = ts.locate(s)
    _, t = ts.locate(t)
    if s > t:
        raise IntervalOrderError(f"interval endpoints out of order: {s} > {t}")
    return forward_jump(ts, t) - s


def lebesgue_decomposition(ts: TimeScale) -> MeasureDecomposition:
    """Split the Guseinov measure into Lebesgue-on-scale plus atoms.

    The continuous part restricts Lebesgue measure to the nondegenerate
    segments; each inter-segment gap contributes one atom of that gap's
    length, sitting at the right-scattered point opening it.  Total mass 1.
    """
    continuous = tuple((a, b) for a, b in ts.segments if a < b)
    atoms = tuple(
        (ts.segments[i][1], ts.segments[i + 1][0] - ts.segments[i][1])
        for i in range(len(ts.segments) - 1)
    )
    return MeasureDecomposition(continuous, atoms)


def delta_integral(
    ts: TimeScale,
    f: Callable[[float], float],
    s: float = 0.0,
    t: float = 1.0,
    *,
    quad_cells: int = DEFAULT_QUAD_CELLS,
    closed: bool = False,
) -> float:
    """Integral of f over the window [s, t) of the scale, against the Guseinov measure.

    Atoms contribute their exact weight times f at the atom; the continuous
    part of each overlapping segment is integrated by a composite midpoint
    rule with quad_cells cells per full segment.  With closed=True the atom
    at t (if any) is included; the point 1 never carries mass.

    Parameters
    ----------
    ts : TimeScale
    f : callable
        Evaluable at atom locations and on segment interiors.
    s, t : float
        Window endpoints; member points with s <= t.
    quad_cells : int
        Midpoint cells per full segment (scaled down for partial overlaps).
    closed : bool
        Include the atom at the right endpoint.

    Returns
    -------
    float
    """
    _, s = ts.locate(s)
    _, t = ts.locate(t)
    if s > t:
        raise IntervalOrderError(f"window endpoints out of order: {s} > {t}")
    if quad_cells < 1:
        raise ValueError("quad_cells must be >= 1")

    parts: list[float] = []
    decomp = lebesgue_decomposition(ts)
    for loc, weight in decomp.atoms:
        if (s <= loc < t) or (closed and loc == t):
            parts.append(weight * f(loc))
    for a, b in decomp.continuous_segments:
        lo, hi = max(a, s), min(b, t)
        if hi <= lo:
            continue
        step = (b - a) / quad_cells
        n = max(1, math.ceil((hi - lo) / step - 1e-9))
        h = (hi - lo) / n
        parts.extend(h * f(lo + (k + 0.5) * h) for k in range(n))
    return math.fsum(parts)


# -- mini-language parser -----------------------------------------------------

_EXPLICIT_RE = re.compile(r"^explicit:\[(.*)\]$")


def parse_timescale(spec: str, *, floor: float = DEFAULT_FLOOR) -> TimeScale:
    """Build a TimeScale from its mini-language description.

    Accepted forms: ``interval``, ``uniform:<n>``, ``geometric:<q>,<n>``,
    ``cantor:<level>``, ``explicit:[p0,...,pk]``.  Explicit point lists must
    contain 0 and 1 and stay inside [0, 1].
    """
    spec = spec.strip()
    try:
        if spec == "interval":
            return TimeScale.interval()
        if spec.startswith("uniform:"):
            return TimeScale.uniform(int(spec.split(":", 1)[1]))
        if spec.startswith("geometric:"):
            q_str, n_str = spec.split(":", 1)[1].split(",")
            return TimeScale.geometric(float(q_str), int(n_str), floor=floor)
        if spec.startswith("cantor:"):
            return TimeScale.cantor(int(spec.split(":", 1)[1]))
        m = _EXPLICIT_RE.match(spec)
        if m:
            pts = [float(x) for x in m.group(1).split(",") if x.strip()]
            if not pts:
                raise SpecParseError("explicit scale needs at least the points 0 and 1")
            if min(pts) < 0.0 or max(pts) > 1.0:
                raise SpecParseError("explicit points must lie in [0, 1]")
            if 0.0 not in pts or 1.0 not in pts:
                raise SpecParseError("explicit scale must contain both 0 and 1")
            return TimeScale.from_points(pts, spec=spec)
    except (ValueError, InvalidTimeScaleError) as exc:
        raise SpecParseError(f"bad time-scale spec {spec!r}: {exc}") from exc
    raise SpecParseError(f"unrecognized time-scale spec {spec!r}")
