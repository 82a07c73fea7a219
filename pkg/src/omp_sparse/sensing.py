"""Sensing matrices, coherence and exact restricted isometry constants.

Random draws use numpy's ``Generator`` on the PCG64 bit generator seeded
directly with the caller's integer seed; Gaussian entries come from
``Generator.standard_normal``. The pair (PCG64, standard_normal) is the
versioned algorithm that makes seeds reproducible.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy.linalg import solve_triangular

from . import _backend
from .errors import BudgetExceeded, RankDeficient, ZeroColumn

#: Allowed deviation of a column norm from 1.
NORM_TOL = 1e-10
#: Relative pivot size below which a column subset is treated as rank deficient.
RANK_TOL = 1e-12
#: Column norms below this are rejected by :func:`normalize_columns`.
ZERO_COLUMN_TOL = 1e-14
#: Default limit on the number of subsets ``rip_exact`` may enumerate.
DEFAULT_BUDGET = 5_000_000


@dataclass(frozen=True)
class SenseMatrix:
    """Dense ``m x n`` measurement matrix with unit-norm columns.

    The entries are stored read-only; build instances with
    :func:`normalize_columns` or the generators below.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float, order="C")
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2-D array, got shape {a.shape}")
        dev = np.abs(np.linalg.norm(a, axis=0) - 1.0)
        if dev.max() > NORM_TOL:
            j = int(np.argmax(dev))
            raise ValueError(
                f"column {j} has norm deviating from 1 by {dev[j]:.3e}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def m(self):
        return self.entries.shape[0]

    @property
    def n(self):
        return self.entries.shape[1]

    @property
    def T(self):
        return self.entries.T

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)

    def columns(self, support):
        return self.entries[:, list(support)]

    def gram(self):
        return self.entries.T @ self.entries


@dataclass(frozen=True)
class RipCertificate:
    order: int
    delta: float
    subsets_examined: int
    extremal_subset: tuple
    lambda_min: float = 1.0
    lambda_max: float = 1.0

    def to_dict(self):
        return {
            "order": self.order,
            "delta": self.delta,
            "subsets_examined": self.subsets_examined,
            "extremal_subset": list(self.extremal_subset),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(order=int(d["order"]), delta=float(d["delta"]),
                   subsets_examined=int(d["subsets_examined"]),
                   extremal_subset=tuple(int(i) for i in d["extremal_subset"]))


@dataclass(frozen=True)
class CoherenceValue:
    mu: float
    pair: tuple = ()

    def __float__(self):
        return self.mu


def _entries(A):
    if isinstance(A, SenseMatrix):
        return A.entries
    return np.asarray(A, dtype=float)


def normalize_columns(raw):
    """Divide every column of ``raw`` by its Euclidean norm.

    Raises :class:`ZeroColumn` if some column norm is below ``1e-14``.
    """
    a = np.array(raw, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    norms = np.linalg.norm(a, axis=0)
    bad = np.flatnonzero(norms < ZERO_COLUMN_TOL)
    if bad.size:
        raise ZeroColumn(int(bad[0]))
    return SenseMatrix(a / norms)


def gen_gaussian_matrix(m, n, seed):
    """I.i.d. standard normal ``m x n`` matrix with unit-norm columns."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    a = rng.standard_normal((m, n))
    norms = np.linalg.norm(a, axis=0)
    for j in np.flatnonzero(norms < ZERO_COLUMN_TOL):
        while np.linalg.norm(a[:, j]) < ZERO_COLUMN_TOL:
            a[:, j] = rng.standard_normal(m)
    return normalize_columns(a)


def gen_incoherent_matrix(m, n, seed, target_coherence=0.08, iterations=300):
    """Random low-coherence matrix by alternating projection.

    Starts from :func:`gen_gaussian_matrix` and alternates between clipping
    the off-diagonal Gram entries to ``target_coherence`` and projecting
    back onto rank-``m`` positive semidefinite Gram matrices with unit
    diagonal. Stops once the coherence is within 1e-9 of the target. The
    result is still an exact function of ``seed``.

    Gaussian matrices with ``m`` comparable to ``n`` have coherence far
    above what the RIP-based recovery conditions need (for 50 x 60 the
    coherence is about 0.5), so this ensemble is what makes those
    conditions certifiable at small sizes.
    """
    if target_coherence <= 0:
        raise ValueError("target_coherence must be positive")
    a = np.array(gen_gaussian_matrix(m, n, seed).entries)
    if m >= n:
        return SenseMatrix(a)
    for _ in range(iterations):
        g = a.T @ a
        off = np.abs(g - np.diag(np.diag(g)))
        if off.max() <= target_coherence * (1 + 1e-9):
            break
        np.clip(g, -target_coherence, target_coherence, out=g)
        np.fill_diagonal(g, 1.0)
        w, v = np.linalg.eigh(g)
        a = (v[:, -m:] * np.sqrt(np.maximum(w[-m:], 0.0))).T
        a /= np.linalg.norm(a, axis=0)
    return normalize_columns(a)


def mutual_incoherence(A):
    """Largest absolute inner product between two distinct columns."""
    a = _entries(A)
    n = a.shape[1]
    if n < 2:
        raise ValueError("mutual incoherence needs at least two columns")
    g = np.abs(a.T @ a)
    np.fill_diagonal(g, -1.0)
    flat = int(np.argmax(g))
    i, j = divmod(flat, n)
    return CoherenceValue(float(g[i, j]), (min(i, j), max(i, j)))


def rip_exact(A, K, budget=DEFAULT_BUDGET):
    """Exact restricted isometry constant of order ``K``.

    Every ``K``-subset ``T`` of columns is visited in lexicographic order
    and the defect ``max(lambda_max(G_T) - 1, 1 - lambda_min(G_T))`` of its
    Gram block is evaluated; the largest defect is the constant. The first
    subset (lexicographically) reaching it is reported.

    Raises
    ------
    BudgetExceeded
        If ``C(n, K)`` exceeds ``budget``.
    """
    a = _entries(A)
    n = a.shape[1]
    if not 1 <= K <= n:
        raise ValueError(f"order K={K} must satisfy 1 <= K <= n={n}")
    required = math.comb(n, K)
    if required > budget:
        raise BudgetExceeded(required, budget)
    gram = np.ascontiguousarray(a.T @ a)
    delta, subset, count, lmin, lmax = _backend.rip_scan(gram, int(K))
    return RipCertificate(order=int(K), delta=max(float(delta), 0.0),
                          subsets_examined=int(count),
                          extremal_subset=tuple(int(i) for i in subset),
                          lambda_min=float(lmin), lambda_max=float(lmax))


def coherence_rip_bound(mu, K):
    """Upper bound ``K * mu`` on the order-``K`` isometry constant."""
    return K * float(mu)


def gershgorin_rip_bound(mu, K):
    """The tighter Gershgorin bound ``(K - 1) * mu`` (informational)."""
    return (K - 1) * float(mu)


def _qr_on(a, support):
    sub = a[:, list(support)]
    q, r = np.linalg.qr(sub)
    d = np.abs(np.diag(r))
    scale = max(np.linalg.norm(sub, axis=0).max(), 1.0)
    if d.size and d.min() <= RANK_TOL * scale:
        raise RankDeficient(support)
    return q, r


def least_squares(A, support, y):
    """Coefficients ``c`` minimising ``||A_support c - y||_2``.

    Solved through a thin QR factorisation of the selected columns; never
    forms an explicit inverse.
    """
    a = _entries(A)
    y = np.asarray(y, dtype=float).ravel()
    support = list(support)
    if not support:
        return np.zeros(0)
    if len(support) > a.shape[0]:
        raise RankDeficient(support)
    q, r = _qr_on(a, support)
    return solve_triangular(r, q.T @ y)


def project_out(A, support, v):
    """Component of ``v`` orthogonal to the span of the selected columns."""
    a = _entries(A)
    v = np.asarray(v, dtype=float).ravel()
    if not len(support):
        return v.copy()
    q, _ = _qr_on(a, support)
    return v - q @ (q.T @ v)


# CSV persistence: one matrix row per line, 17 significant digits.

def save_csv(path, values):
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    np.savetxt(path, arr, delimiter=",", fmt="%.17g")


def load_matrix_csv(path):
    return np.loadtxt(path, delimiter=",", ndmin=2)


def load_vector_csv(path):
    arr = np.loadtxt(path, delimiter=",", ndmin=2)
    if arr.shape[1] != 1 and arr.shape[0] != 1:
        raise ValueError(f"{path}: expected a single column, got shape {arr.shape}")
    return arr.ravel()
