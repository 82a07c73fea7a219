"""Orthogonal Matching Pursuit under noise with exact RIP certification."""
__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import (AllSelected, BudgetExceeded, DegenerateDenominator,
                     OmpSparseError, OrthogonalityViolated, RankDeficient,
                     ZeroColumn)
from .guarantees import (Gaussian, GuaranteeReport, L2Ball, LInfCorrelation,
                         delta_threshold, evaluate_guarantees, gaussian_l2_bound,
                         lemma31_gap, noise_projection_E, rip_order,
                         selection_condition_rhs, thm_l2_min_coeff,
                         thm_linf_min_coeff)
from .harness import (CoeffPolicy, ExperimentConfig, NoiseDraw, TrialRecord,
                      gen_sparse_signal, run_experiment, run_trial, sample_noise)
from .omp import (CorrelationLInf, FixedIterations, OmpTrace, ResidualL2,
                  SparseSignal, correlations, omp_run, residual, select_index)
from .oracle import (exhaustive_best_support, verify_lemma_21, verify_lemma_22,
                     verify_lemma_23, verify_offsupport_correlation)
from .sensing import (CoherenceValue, RipCertificate, SenseMatrix,
                      coherence_rip_bound, gen_gaussian_matrix,
                      gen_incoherent_matrix, gershgorin_rip_bound, least_squares,
                      mutual_incoherence, normalize_columns, rip_exact)
