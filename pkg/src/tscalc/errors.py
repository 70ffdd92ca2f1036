"""Exception types shared across the package."""


class Error(Exception):
    """Base class for all tscalc errors."""


class InvalidTimeScaleError(Error):
    """Segment list does not describe a valid time scale in [0, 1]."""


class NotInTimeScaleError(Error):
    """A point lies outside the time scale (beyond the membership tolerance)."""


class IntervalOrderError(Error):
    """Interval endpoints given in the wrong order."""


class SpecParseError(Error):
    """A time-scale or drift mini-language string failed to parse."""


class GridMismatchError(Error):
    """Two objects that must share a grid were built on different grids."""


class OffNodeError(Error):
    """Path evaluation requested at a point that is not a grid node."""


class EnsembleTooSmallError(Error):
    """A statistical check was asked to run on too few paths."""


class EstimatorUndefinedError(Error):
    """All trial denominators of a ratio estimator vanished."""


class NotConvergedError(Error):
    """An operation that requires a converged solve received a failed report."""
