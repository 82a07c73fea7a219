"""Orthogonal Matching Pursuit with fixed-count, residual and correlation halting."""
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import AllSelected, OrthogonalityViolated
from .sensing import _entries, least_squares

HALT_FIXED = "fixed_iterations"
HALT_L2 = "residual_l2"
HALT_LINF = "correlation_linf"
HALT_MAX = "max_iterations"

#: Relative size (times ||y||) of a correlation with a selected column that
#: still counts as zero.
ORTHO_TOL = 1e-8

#: Relative floor (times ||y||) added to the l2 and correlation thresholds, so
#: that a zero threshold fires on a residual that is zero up to rounding.
HALT_FLOOR = 1e-12


@dataclass(frozen=True)
class SparseSignal:
    """Length-``n`` signal given by its support and nonzero values."""

    n: int
    support: tuple
    values: tuple

    def __post_init__(self):
        support = tuple(int(i) for i in self.support)
        values = tuple(float(v) for v in self.values)
        if len(support) != len(values):
            raise ValueError("support and values differ in length")
        if any(b <= a for a, b in zip(support, support[1:])):
            raise ValueError("support must be strictly increasing")
        if support and (support[0] < 0 or support[-1] >= self.n):
            raise ValueError("support index out of range")
        if any(v == 0.0 for v in values):
            raise ValueError("stored values must be nonzero")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_dense(cls, x):
        x = np.asarray(x, dtype=float).ravel()
        idx = np.flatnonzero(x)
        return cls(x.size, tuple(idx), tuple(x[idx]))

    @property
    def sparsity(self):
        return len(self.support)

    def dense(self):
        x = np.zeros(self.n)
        x[list(self.support)] = self.values
        return x

    def min_magnitude(self):
        return min((abs(v) for v in self.values), default=math.inf)


@dataclass(frozen=True)
class FixedIterations:
    K: int

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("FixedIterations needs K >= 1")

    def spec(self):
        return f"fixed:{self.K}"


@dataclass(frozen=True)
class ResidualL2:
    B2: float

    def __post_init__(self):
        if not self.B2 >= 0:
            raise ValueError("ResidualL2 threshold must be >= 0")

    def spec(self):
        return f"l2:{self.B2!r}"


@dataclass(frozen=True)
class CorrelationLInf:
    Binf: float

    def __post_init__(self):
        if not self.Binf >= 0:
            raise ValueError("CorrelationLInf threshold must be >= 0")

    def spec(self):
        return f"linf:{self.Binf!r}"


def parse_rule(text):
    """Parse ``fixed:K``, ``l2:B2`` or ``linf:Binf``."""
    kind, sep, value = text.partition(":")
    if not sep:
        raise ValueError(f"rule {text!r} is not of the form kind:value")
    kind = kind.strip().lower()
    if kind == "fixed":
        return FixedIterations(int(value))
    if kind == "l2":
        return ResidualL2(float(value))
    if kind == "linf":
        return CorrelationLInf(float(value))
    raise ValueError(f"unknown stopping rule {kind!r}")


@dataclass(frozen=True)
class IterationRecord:
    """One OMP step.

    ``residual_l2`` and ``correlation_linf`` describe the residual left
    after the least-squares refit on the enlarged support.
    """

    selected_index: int
    residual_l2: float
    correlation_linf: float
    coefficients: tuple

    def to_dict(self):
        return {"selected_index": self.selected_index,
                "residual_l2": self.residual_l2,
                "correlation_linf": self.correlation_linf,
                "coefficients": list(self.coefficients)}


@dataclass(frozen=True)
class OmpTrace:
    iterations: tuple
    final_support: tuple
    estimate: np.ndarray
    halt_reason: str
    initial_residual_l2: float
    final_residual: np.ndarray = field(repr=False)

    @property
    def selected(self):
        return [rec.selected_index for rec in self.iterations]

    @property
    def final_residual_l2(self):
        if self.iterations:
            return self.iterations[-1].residual_l2
        return self.initial_residual_l2

    def to_dict(self):
        return {"iterations": [rec.to_dict() for rec in self.iterations],
                "final_support": list(self.final_support),
                "estimate": [float(v) for v in self.estimate],
                "halt_reason": self.halt_reason,
                "initial_residual_l2": self.initial_residual_l2,
                "final_residual_l2": self.final_residual_l2}


def correlations(A, r):
    """Inner products of every column of ``A`` with ``r``."""
    a = _entries(A)
    r = np.asarray(r, dtype=float).ravel()
    if r.shape[0] != a.shape[0]:
        raise ValueError(f"residual has length {r.shape[0]}, expected {a.shape[0]}")
    return a.T @ r


def select_index(c, already_selected=(), tolerance=0.0):
    """Index of the largest ``|c_i|``, smallest index on ties.

    The residual is orthogonal to the selected columns, so the maximiser
    should never be one of them. If it is and its magnitude exceeds
    ``tolerance``, the refit has broken down and
    :class:`OrthogonalityViolated` is raised; below ``tolerance`` (all
    correlations are numerically zero) the best unselected index is used.
    """
    mags = np.abs(np.asarray(c, dtype=float))
    chosen = set(int(i) for i in already_selected)
    if len(chosen) >= mags.size:
        raise AllSelected("every column is already selected")
    best = int(np.argmax(mags))
    if best not in chosen:
        return best
    if mags[best] > tolerance:
        raise OrthogonalityViolated(best, mags[best])
    masked = mags.copy()
    masked[list(chosen)] = -1.0
    return int(np.argmax(masked))


def residual(A, y, support, coeffs):
    """``y - A_support @ coeffs``."""
    y = np.asarray(y, dtype=float).ravel()
    support = list(support)
    if not support:
        return y.copy()
    return y - _entries(A)[:, support] @ np.asarray(coeffs, dtype=float)


def _halts(rule, k, r, c, floor):
    if isinstance(rule, FixedIterations):
        return k >= rule.K
    if isinstance(rule, ResidualL2):
        return float(np.linalg.norm(r)) <= rule.B2 + floor
    if isinstance(rule, CorrelationLInf):
        return float(np.max(np.abs(c))) <= rule.Binf + floor
    raise TypeError(f"unknown stopping rule {rule!r}")


_REASON = {FixedIterations: HALT_FIXED, ResidualL2: HALT_L2,
           CorrelationLInf: HALT_LINF}


def omp_run(A, y, rule, max_iterations=None):
    """Run Orthogonal Matching Pursuit on ``y`` until ``rule`` fires.

    Starts from an empty support with ``r = y``. Each pass evaluates the
    stopping rule on the current residual *before* selecting; if it does not
    fire, the column most correlated with the residual joins the support and
    the coefficients are refit from scratch by least squares on the whole
    support. The l2 and correlation thresholds are compared with a floor of
    ``HALT_FLOOR * ||y||`` added, so zero thresholds work in floating point.
    The loop also ends after ``max_iterations`` selections
    (default ``min(m, n)``), recorded as ``"max_iterations"``.

    Returns an :class:`OmpTrace`; :class:`~omp_sparse.errors.RankDeficient`
    from the refit propagates.
    """
    a = _entries(A)
    m, n = a.shape
    y = np.asarray(y, dtype=float).ravel()
    if max_iterations is None:
        max_iterations = min(m, n)
    if max_iterations < 1 or max_iterations > min(m, n):
        raise ValueError(f"max_iterations must lie in [1, {min(m, n)}]")
    tol = ORTHO_TOL * float(np.linalg.norm(y))
    floor = HALT_FLOOR * float(np.linalg.norm(y))

    support = []
    coeffs = np.zeros(0)
    r = y.copy()
    c = a.T @ r
    records = []
    while True:
        if _halts(rule, len(support), r, c, floor):
            reason = _REASON[type(rule)]
            break
        if len(support) >= max_iterations:
            reason = HALT_MAX
            break
        support.append(select_index(c, support, tol))
        coeffs = least_squares(a, support, y)
        r = residual(a, y, support, coeffs)
        c = a.T @ r
        records.append(IterationRecord(support[-1], float(np.linalg.norm(r)),
                                       float(np.max(np.abs(c))),
                                       tuple(float(v) for v in coeffs)))

    estimate = np.zeros(n)
    estimate[support] = coeffs
    return OmpTrace(tuple(records), tuple(support), estimate, reason,
                    float(np.linalg.norm(y)), r)
