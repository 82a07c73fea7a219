"""Closed-form sufficient conditions for OMP support recovery under noise.

All conditions are stated in terms of the isometry constant of order
``K + 1`` for a ``K``-sparse signal; :func:`rip_order` is the single place
that fixes this and can be changed to use order ``K`` instead.

``log`` in the Gaussian noise bound is the natural logarithm.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DegenerateDenominator
from .sensing import _entries, project_out


def rip_order(K):
    """Order of the isometry constant the guarantees are stated with."""
    return K + 1


@dataclass(frozen=True)
class L2Ball:
    B2: float

    def __post_init__(self):
        if not self.B2 >= 0:
            raise ValueError("B2 must be >= 0")


@dataclass(frozen=True)
class LInfCorrelation:
    Binf: float

    def __post_init__(self):
        if not self.Binf >= 0:
            raise ValueError("Binf must be >= 0")


@dataclass(frozen=True)
class Gaussian:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")


def noise_to_dict(noise):
    if isinstance(noise, L2Ball):
        return {"type": "l2_ball", "B2": noise.B2}
    if isinstance(noise, LInfCorrelation):
        return {"type": "linf_correlation", "Binf": noise.Binf}
    if isinstance(noise, Gaussian):
        return {"type": "gaussian", "sigma": noise.sigma}
    raise TypeError(f"unknown noise spec {noise!r}")


_NOISE_KEYS = {"l2_ball": ("B2", L2Ball),
               "linf_correlation": ("Binf", LInfCorrelation),
               "gaussian": ("sigma", Gaussian)}


def noise_from_dict(d):
    d = dict(d)
    kind = d.pop("type", None)
    if kind not in _NOISE_KEYS:
        raise ValueError(f"unknown noise type {kind!r}")
    key, cls = _NOISE_KEYS[kind]
    if set(d) != {key}:
        raise ValueError(f"{kind} noise takes exactly the key {key!r}, got {sorted(d)}")
    return cls(float(d[key]))


def parse_noise(text):
    """Parse ``l2:B2``, ``linf:Binf`` or ``gaussian:sigma``."""
    kind, _, value = text.partition(":")
    kind = kind.strip().lower()
    if kind == "l2":
        return L2Ball(float(value))
    if kind == "linf":
        return LInfCorrelation(float(value))
    if kind == "gaussian":
        return Gaussian(float(value))
    raise ValueError(f"unknown noise spec {text!r}")


@dataclass(frozen=True)
class GuaranteeReport:
    """One strict inequality ``lhs > rhs``; ``margin = lhs - rhs``."""

    condition_name: str
    lhs: float
    rhs: float
    satisfied: bool
    margin: float
    inputs_echo: dict = field(default_factory=dict)
    degenerate: bool = False

    def to_dict(self):
        return {"condition_name": self.condition_name, "lhs": self.lhs,
                "rhs": self.rhs, "satisfied": self.satisfied,
                "margin": self.margin, "degenerate": self.degenerate,
                "inputs_echo": dict(self.inputs_echo)}


def _report(name, lhs, rhs, echo):
    margin = lhs - rhs
    return GuaranteeReport(name, float(lhs), float(rhs), bool(margin > 0),
                           float(margin), echo)


def delta_threshold(K):
    """``1 / (sqrt(K) + 3)``."""
    if K < 1:
        raise ValueError("K must be >= 1")
    return 1.0 / (math.sqrt(K) + 3.0)


def lemma31_gap(delta, K):
    """``(1 - delta)^2 - delta (1 + sqrt(K))``, positive below the threshold."""
    return (1.0 - delta) ** 2 - delta * (1.0 + math.sqrt(K))


def _positive_gap(delta, K):
    gap = lemma31_gap(delta, K)
    if not gap > 0:
        raise DegenerateDenominator(gap)
    return gap


def selection_condition_rhs(delta, K, k, E_noise):
    """Smallest remaining-signal norm that forces a correct next selection.

    With ``k`` correct indices already selected from a ``K``-sparse support,
    OMP picks another support index if ``||x off the selected set||_2``
    exceeds ``2 (1-delta) E sqrt(K-k) / ((1-delta)^2 - delta (1 + sqrt(K-k)))``.
    """
    if not 0 <= k < K:
        raise ValueError("need 0 <= k < K")
    rest = K - k
    gap = _positive_gap(delta, rest)
    return 2.0 * (1.0 - delta) * E_noise * math.sqrt(rest) / gap


def noise_projection_E(A, z, support):
    """``||A^T z_k||_inf`` where ``z_k`` is ``z`` minus its projection onto
    the span of the columns in ``support``."""
    a = _entries(A)
    zk = project_out(a, support, z)
    return float(np.max(np.abs(a.T @ zk)))


def thm_l2_min_coeff(delta, K, B2):
    """Coefficient magnitude above which l2-bounded noise allows recovery."""
    return 2.0 * (1.0 - delta) * B2 / _positive_gap(delta, K)


def thm_linf_min_coeff(delta, K, Binf):
    """Coefficient magnitude above which correlation-bounded noise allows recovery."""
    if not 0 <= delta < 1:
        raise ValueError("need 0 <= delta < 1")
    base = 2.0 * (1.0 - delta) * Binf / _positive_gap(delta, K)
    return base * (1.0 + math.sqrt(K) / math.sqrt(1.0 - delta))


def gaussian_l2_bound(m, sigma):
    """``sigma * sqrt(m + 2 sqrt(m ln m))``; exceeded with probability <= 1/m."""
    if m < 2:
        raise ValueError("m must be >= 2")
    return sigma * math.sqrt(m + 2.0 * math.sqrt(m * math.log(m)))


def evaluate_guarantees(A_delta, signal, noise, m, delta_source="exact"):
    """Evaluate every recovery hypothesis that applies to ``noise``.

    Parameters
    ----------
    A_delta : float
        Isometry constant of order ``rip_order(K)``. An upper bound (such as
        ``K * mu``) is also acceptable and conservative; pass
        ``delta_source="upper_bound"`` so the reports say so.
    signal : SparseSignal
    noise : L2Ball, LInfCorrelation or Gaussian
    m : int
        Number of measurements (only used by the Gaussian bound).

    Returns
    -------
    list of GuaranteeReport
        The isometry condition followed by the minimum-coefficient condition
        matching the noise model. A vacuous condition (non-positive
        denominator) is reported unsatisfied with margin ``-inf`` and
        ``degenerate=True``.
    """
    K = signal.sparsity
    delta = float(A_delta)
    echo = {"delta": delta, "delta_order": rip_order(K), "K": K,
            "delta_source": delta_source, "noise": noise_to_dict(noise)}
    thr = delta_threshold(max(K, 1))
    reports = [_report("delta_below_threshold", thr, delta, echo)]

    min_coeff = signal.min_magnitude()
    try:
        if isinstance(noise, L2Ball):
            name = "l2_min_coefficient"
            rhs = thm_l2_min_coeff(delta, K, noise.B2)
        elif isinstance(noise, LInfCorrelation):
            name = "linf_min_coefficient"
            if delta >= 1:
                raise DegenerateDenominator(lemma31_gap(delta, K))
            rhs = thm_linf_min_coeff(delta, K, noise.Binf)
        elif isinstance(noise, Gaussian):
            name = "gaussian_min_coefficient"
            bound = gaussian_l2_bound(m, noise.sigma)
            echo = {**echo, "B2": bound}
            rhs = thm_l2_min_coeff(delta, K, bound)
        else:
            raise TypeError(f"unknown noise spec {noise!r}")
    except DegenerateDenominator:
        reports.append(GuaranteeReport(name, float(min_coeff), math.inf, False,
                                       -math.inf, echo, degenerate=True))
        return reports
    reports.append(_report(name, min_coeff, rhs, echo))
    return reports


def hypotheses_hold(reports):
    return all(rep.satisfied for rep in reports)
