"""Random birth-death kernels with a prescribed stationary law.

The package samples tridiagonal reversible transition matrices
uniformly from the polytope determined by a stationary distribution,
and measures their mixing behavior: spectral gap, weighted-sum gap
bounds, expected hitting times, total-variation mixing times, and the
product diagnostics that separate cutoff from non-cutoff families.
"""

from .errors import (DomainError, EmptyEnsembleError, FeasibilityError,
                     NonErgodicError, NotMixedError, ParameterError,
                     SpectrumError, StallError)
from .dist import FAMILIES, StationaryDist, make_distribution
from .kernel import (BDKernel, SuperDiagState, check_feasibility,
                     kernel_from_subdiagonal, kernel_from_superdiagonal,
                     metropolis_kernel, subdiagonal_view)
from .sampler import (CoupledTrace, GibbsTrace, SamplerConfig,
                      acceptance_rate, block_update, collect_window,
                      conditional_interval, default_initial_state,
                      greedy_max_state, oracle_sample, oracle_samples,
                      run_coupled_pair, run_gibbs, site_update,
                      stream_fingerprint, substream)
from .analysis import (AnalysisReport, CutoffProduct, DlpWindow,
                       EXACT_TAU_LIMIT, MicloBounds, MixingBoundResult,
                       analyze, cutoff_product, dlp_window,
                       expected_hitting_time, miclo_bounds, mixing_profile,
                       mixing_time, pairwise_distance_profile,
                       sd_mixing_bound, separation_decay_bound,
                       spectral_gap, tv_distance)
from .compare import (ComparisonFunctionals, ComparisonReport,
                      MetropolisReport, XnSelection, build_functionals,
                      comparison_diagnostic, eval_functionals, find_xn,
                      metropolis_report)

__version__ = "0.1.0"

__all__ = [
    "DomainError", "EmptyEnsembleError", "FeasibilityError",
    "NonErgodicError", "NotMixedError", "ParameterError", "SpectrumError",
    "StallError",
    "FAMILIES", "StationaryDist", "make_distribution",
    "BDKernel", "SuperDiagState", "check_feasibility",
    "kernel_from_subdiagonal", "kernel_from_superdiagonal",
    "metropolis_kernel", "subdiagonal_view",
    "CoupledTrace", "GibbsTrace", "SamplerConfig", "acceptance_rate",
    "block_update", "collect_window", "conditional_interval",
    "default_initial_state", "greedy_max_state", "oracle_sample",
    "oracle_samples", "run_coupled_pair", "run_gibbs", "site_update",
    "stream_fingerprint", "substream",
    "AnalysisReport", "CutoffProduct", "DlpWindow", "EXACT_TAU_LIMIT",
    "MicloBounds", "MixingBoundResult", "analyze", "cutoff_product",
    "dlp_window", "expected_hitting_time", "miclo_bounds", "mixing_profile",
    "mixing_time", "pairwise_distance_profile", "sd_mixing_bound",
    "separation_decay_bound", "spectral_gap", "tv_distance",
    "ComparisonFunctionals", "ComparisonReport", "MetropolisReport",
    "XnSelection", "build_functionals", "comparison_diagnostic",
    "eval_functionals", "find_xn", "metropolis_report",
    "__version__",
]
