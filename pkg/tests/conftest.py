import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def orthonormal_columns(m, n, seed=0):
    """``m x n`` matrix (n <= m) with orthonormal columns."""
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((m, n)))
    return q


def trace_invariant_violations(A, y, trace):
    """Names of the OMP trace invariants that ``trace`` breaks (empty if none)."""
    from omp_sparse.omp import residual

    a = np.asarray(A)
    sel = trace.selected
    bad = []
    if len(set(sel)) != len(sel):
        bad.append("repeated index")
    norms = [trace.initial_residual_l2] + [r.residual_l2 for r in trace.iterations]
    if any(b > a_ + 1e-12 for a_, b in zip(norms, norms[1:])):
        bad.append("residual increased")
    if len(trace.final_support) != len(trace.iterations):
        bad.append("support size differs from iteration count")
    scale = 1e-8 * np.linalg.norm(y)
    for k, rec in enumerate(trace.iterations):
        chosen = sel[:k + 1]
        r = residual(a, y, chosen, rec.coefficients)
        if np.max(np.abs(a[:, chosen].T @ r)) > scale:
            bad.append(f"residual not orthogonal after step {k}")
    return bad


#: criterion number -> (passed, one-line detail), filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[num]
        terminalreporter.write_line(
            f"criterion {num:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
