"""Monte Carlo experiments relating recovery hypotheses to observed recovery.

Seeding
-------
Trial ``i`` of an experiment with master seed ``s`` uses
``numpy.random.SeedSequence([s, i])``; its three spawned children give the
64-bit seeds of the matrix, the signal and the noise (first word of
``generate_state(1, uint64)``). A fixed matrix uses ``SeedSequence([s])``
instead. Results therefore do not depend on how trials are scheduled.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
import csv
import io
import json
import os

import numpy as np

from .guarantees import (Gaussian, L2Ball, LInfCorrelation, evaluate_guarantees,
                         gaussian_l2_bound, noise_from_dict, noise_to_dict,
                         rip_order)
from .omp import (CorrelationLInf, ResidualL2, SparseSignal,
                  omp_run, parse_rule)
from .sensing import (_entries, gen_gaussian_matrix, gen_incoherent_matrix,
                      rip_exact)

CSV_HEADER = ("trial_index", "delta_kp1", "thm33_hyp", "thm35_hyp",
              "recovered", "match", "iterations", "residual")
#: Give up on collecting hypothesis-satisfying trials after this many
#: attempts per requested trial.
MAX_ATTEMPT_FACTOR = 50


@dataclass(frozen=True)
class CoeffPolicy:
    """How nonzero coefficient magnitudes are drawn (signs are random).

    ``fixed``: every magnitude equals ``min_magnitude``.
    ``uniform``: uniform on ``[min_magnitude, max_factor * min_magnitude]``.
    ``gaussian``: ``min_magnitude + |N(0, 1)|`` (usable with a zero minimum).
    """

    min_magnitude: float
    magnitude: str = "fixed"
    max_factor: float = 2.0

    def __post_init__(self):
        if not self.min_magnitude >= 0:
            raise ValueError("min_magnitude must be >= 0")
        if self.magnitude not in ("fixed", "uniform", "gaussian"):
            raise ValueError(f"unknown magnitude policy {self.magnitude!r}")
        if self.magnitude != "gaussian" and self.min_magnitude == 0:
            raise ValueError(f"{self.magnitude!r} magnitudes need min_magnitude > 0")
        if self.max_factor < 1:
            raise ValueError("max_factor must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    m: int
    n: int
    K: int
    trials: int
    noise: object
    coeff_policy: CoeffPolicy
    master_seed: int
    stopping: str = "auto"
    certify: bool = True
    matrix_mode: str = "fresh"
    matrix_ensemble: str = "gaussian"
    require_hypotheses: bool = False

    def __post_init__(self):
        if not 0 <= self.K <= self.m <= self.n:
            raise ValueError("need K <= m <= n")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.matrix_mode not in ("fresh", "fixed"):
            raise ValueError(f"matrix_mode must be 'fresh' or 'fixed', got {self.matrix_mode!r}")
        _ensemble(self.matrix_ensemble)
        if self.require_hypotheses and not self.certify:
            raise ValueError("require_hypotheses needs certify = true")
        resolve_stopping(self.stopping, self.noise, self.m)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        d["noise"] = noise_from_dict(d["noise"])
        policy = dict(d["coeff_policy"])
        extra = set(policy) - {f.name for f in fields(CoeffPolicy)}
        if extra:
            raise ValueError(f"unknown coeff_policy keys: {sorted(extra)}")
        d["coeff_policy"] = CoeffPolicy(**policy)
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        d = asdict(self)
        d["noise"] = noise_to_dict(self.noise)
        return d


@dataclass(frozen=True)
class NoiseDraw:
    z: np.ndarray
    realized_l2: float
    realized_corr_inf: float


@dataclass
class TrialRecord:
    trial_index: int
    delta_kp1: float
    hypotheses_satisfied: dict
    recovered_support: tuple
    exact_support_match: bool
    iterations_used: int
    final_residual_l2: float
    halt_reason: str
    trace: object = field(default=None, repr=False, compare=False)
    instance: object = field(default=None, repr=False, compare=False)

    @property
    def all_hypotheses(self):
        vals = [v for v in self.hypotheses_satisfied.values() if v is not None]
        return bool(vals) and all(vals)

    def csv_row(self):
        return [str(self.trial_index), _fmt(self.delta_kp1),
                _fmt(self.hypotheses_satisfied.get("thm33")),
                _fmt(self.hypotheses_satisfied.get("thm35")),
                ";".join(str(i) for i in self.recovered_support),
                _fmt(self.exact_support_match), str(self.iterations_used),
                _fmt(self.final_residual_l2)]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return f"{float(v):.17g}"


def _ensemble(spec):
    kind, _, arg = spec.partition(":")
    if kind == "gaussian" and not arg:
        return gen_gaussian_matrix
    if kind == "incoherent":
        target = float(arg) if arg else 0.08
        return lambda m, n, seed: gen_incoherent_matrix(m, n, seed, target)
    raise ValueError(f"unknown matrix ensemble {spec!r}")


def resolve_stopping(stopping, noise, m):
    """Turn the config's stopping entry into a rule object.

    ``"auto"`` takes the threshold from the noise model: ``B2`` for l2-ball
    noise, ``Binf`` for correlation-bounded noise and the Gaussian l2 bound
    for Gaussian noise. ``"l2"``/``"linf"`` pick the rule type with the
    threshold from the noise model; ``"fixed:K"``, ``"l2:B"``, ``"linf:B"``
    are explicit.
    """
    if stopping == "auto":
        if isinstance(noise, LInfCorrelation):
            return CorrelationLInf(noise.Binf)
        stopping = "l2"
    if stopping == "l2":
        if isinstance(noise, L2Ball):
            return ResidualL2(noise.B2)
        if isinstance(noise, Gaussian):
            return ResidualL2(gaussian_l2_bound(m, noise.sigma))
        raise ValueError("'l2' stopping needs l2_ball or gaussian noise")
    if stopping == "linf":
        if isinstance(noise, LInfCorrelation):
            return CorrelationLInf(noise.Binf)
        raise ValueError("'linf' stopping needs linf_correlation noise")
    return parse_rule(stopping)


def gen_sparse_signal(n, K, coeff_policy, seed):
    """Uniformly random size-``K`` support with random-sign coefficients."""
    if not 0 <= K <= n:
        raise ValueError("need 0 <= K <= n")
    rng = np.random.Generator(np.random.PCG64(seed))
    support = np.sort(rng.choice(n, K, replace=False))
    signs = rng.choice([-1.0, 1.0], K)
    lo = coeff_policy.min_magnitude
    if coeff_policy.magnitude == "fixed":
        mags = np.full(K, lo)
    elif coeff_policy.magnitude == "uniform":
        mags = rng.uniform(lo, coeff_policy.max_factor * lo, K)
    else:
        mags = lo + np.abs(rng.standard_normal(K))
        mags[mags == 0] = np.finfo(float).tiny
    return SparseSignal(n, tuple(support), tuple(signs * mags))


def sample_noise(spec, A, seed):
    """Draw noise for ``spec``.

    l2 ball: Gaussian direction scaled to radius ``u * B2`` with ``u``
    uniform on ``[0, 1)``. Correlation-bounded: i.i.d. ``N(0, Binf^2)``
    entries (so each column correlation has standard deviation ``Binf``),
    rescaled once by ``Binf / (||A^T z||_inf (1 + 1e-9))`` if the bound is
    violated; draws therefore usually sit just inside the constraint.
    Gaussian: i.i.d. ``N(0, sigma^2)``.
    """
    a = _entries(A)
    m = a.shape[0]
    rng = np.random.Generator(np.random.PCG64(seed))
    if isinstance(spec, L2Ball):
        g = rng.standard_normal(m)
        u = rng.random()
        z = g * (u * spec.B2 / np.linalg.norm(g))
    elif isinstance(spec, LInfCorrelation):
        z = rng.standard_normal(m) * spec.Binf
        corr = np.max(np.abs(a.T @ z)) if spec.Binf > 0 else 0.0
        if corr >= spec.Binf and corr > 0:
            z = z * (spec.Binf / (corr * (1.0 + 1e-9)))
    elif isinstance(spec, Gaussian):
        z = rng.standard_normal(m) * spec.sigma
    else:
        raise TypeError(f"unknown noise spec {spec!r}")
    return NoiseDraw(z, float(np.linalg.norm(z)), float(np.max(np.abs(a.T @ z))))


def noise_within_bound(spec, draw):
    """Whether a draw satisfies the strict noise hypothesis (Gaussian: always).

    A zero bound admits only the zero vector.
    """
    if isinstance(spec, L2Ball):
        return draw.realized_l2 < spec.B2 or (spec.B2 == 0 and draw.realized_l2 == 0)
    if isinstance(spec, LInfCorrelation):
        return (draw.realized_corr_inf < spec.Binf
                or (spec.Binf == 0 and draw.realized_corr_inf == 0))
    return True


def trial_seeds(master_seed, trial_index):
    """64-bit seeds for the matrix, signal and noise of one trial."""
    children = np.random.SeedSequence([int(master_seed), int(trial_index)]).spawn(3)
    return tuple(int(c.generate_state(1, np.uint64)[0]) for c in children)


def fixed_matrix(config):
    seed = int(np.random.SeedSequence([int(config.master_seed)])
               .generate_state(1, np.uint64)[0])
    return _ensemble(config.matrix_ensemble)(config.m, config.n, seed)


def _hypothesis_key(noise):
    return "thm35" if isinstance(noise, LInfCorrelation) else "thm33"


def run_trial(config, trial_index, matrix=None, delta_kp1=None, keep_trace=False):
    """Run one trial; ``matrix``/``delta_kp1`` are reused in fixed mode."""
    seed_a, seed_x, seed_z = trial_seeds(config.master_seed, trial_index)
    if matrix is None:
        if config.matrix_mode == "fixed":
            matrix = fixed_matrix(config)
        else:
            matrix = _ensemble(config.matrix_ensemble)(config.m, config.n, seed_a)
    if config.certify and delta_kp1 is None:
        delta_kp1 = rip_exact(matrix, rip_order(config.K)).delta
    signal = gen_sparse_signal(config.n, config.K, config.coeff_policy, seed_x)
    draw = sample_noise(config.noise, matrix, seed_z)
    y = matrix.entries @ signal.dense() + draw.z

    hyps = {"thm33": None, "thm35": None}
    if config.certify:
        reports = evaluate_guarantees(delta_kp1, signal, config.noise, config.m)
        ok = all(r.satisfied for r in reports) and noise_within_bound(config.noise, draw)
        hyps[_hypothesis_key(config.noise)] = ok

    rule = resolve_stopping(config.stopping, config.noise, config.m)
    trace = omp_run(matrix, y, rule)
    recovered = tuple(sorted(trace.final_support))
    return TrialRecord(
        trial_index=int(trial_index), delta_kp1=delta_kp1,
        hypotheses_satisfied=hyps, recovered_support=recovered,
        exact_support_match=recovered == signal.support,
        iterations_used=len(trace.iterations),
        final_residual_l2=trace.final_residual_l2, halt_reason=trace.halt_reason,
        trace=trace if keep_trace else None,
        instance=(matrix, signal, draw, y) if keep_trace else None)


def _workers():
    env = os.environ.get("OMP_SPARSE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def iter_trials(config, keep_trace=False):
    """Yield ``(record, kept)`` in attempt order."""
    matrix = delta = None
    if config.matrix_mode == "fixed":
        matrix = fixed_matrix(config)
        if config.certify:
            delta = rip_exact(matrix, rip_order(config.K)).delta

    def one(i):
        return run_trial(config, i, matrix, delta, keep_trace)

    workers = _workers()
    limit = config.trials * (MAX_ATTEMPT_FACTOR if config.require_hypotheses else 1)
    kept = 0
    start = 0
    with ThreadPoolExecutor(max_workers=workers) as pool:
        while kept < config.trials and start < limit:
            need = config.trials - kept
            batch = range(start, min(start + max(need, workers), limit))
            start = batch.stop
            for rec in pool.map(one, batch):
                if kept >= config.trials:
                    return
                keep = rec.all_hypotheses or not config.require_hypotheses
                kept += keep
                yield rec, keep


def summarize(config, records, attempts, discarded):
    kept = len(records)
    hyp = [r for r in records if r.all_hypotheses]
    matched = sum(r.exact_support_match for r in records)
    matched_hyp = sum(r.exact_support_match for r in hyp)
    return {
        "trials": kept,
        "attempts": attempts,
        "discarded": discarded,
        "recovery_rate_overall": matched / kept if kept else None,
        "recovery_rate_given_hypotheses": (matched_hyp / len(hyp)) if hyp else None,
        # discarded attempts are exactly those failing the hypotheses
        "hypothesis_rate": len(hyp) / attempts if (attempts and config.certify) else None,
        "hypothesis_trials": len(hyp),
        "counterexample_count": len(hyp) - matched_hyp,
        "halt_reasons": _count(r.halt_reason for r in records),
        "complete": kept == config.trials,
        "config": config.to_dict(),
    }


def _count(items):
    out = {}
    for it in items:
        out[it] = out.get(it, 0) + 1
    return dict(sorted(out.items()))


def records_to_csv(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in records:
        writer.writerow(rec.csv_row())
    return buf.getvalue()


def summary_to_json(summary):
    return json.dumps(summary, indent=2, sort_keys=True) + "\n"


def _write(path, text):
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def run_experiment(config, csv_path=None, json_path=None, keep_traces=False):
    """Run every trial of ``config``; optionally write the CSV and summary.

    With ``require_hypotheses`` the run keeps drawing new trials, discarding
    those whose hypotheses fail (for instance an uncertifiable matrix),
    until ``config.trials`` are collected or the attempt cap is reached.

    Returns ``(summary, records)``.
    """
    records = []
    attempts = discarded = 0
    for rec, keep in iter_trials(config, keep_traces):
        attempts += 1
        if keep:
            records.append(rec)
        else:
            discarded += 1
    summary = summarize(config, records, attempts, discarded)
    if csv_path is not None:
        _write(csv_path, records_to_csv(records))
    if json_path is not None:
        _write(json_path, summary_to_json(summary))
    return summary, records
