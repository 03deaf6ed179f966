"""Joint semi-symmetric tensor PCA for paired network populations."""

__version__ = "0.1.0"

from .baselines import TuckerFit, ihooi, ihosvd
from .evaluate import EvalReport, ExperimentConfig, MethodSpec, lambda_sweep, run_experiment
from .linalg import (
    DegenerateSpectrumWarning,
    adjusted_rand_index,
    kmeans,
    sin_theta_subspace,
    sin_theta_vec,
    top_r_symmetric,
)
from .multifactor import FactorStack, deflate, fit_multifactor, variance_explained
from .power import (
    Factor,
    FitError,
    FitOptions,
    FitTrace,
    fit_single,
    fit_single_generalized,
    fit_single_matrix_tensor,
    fit_single_variant,
    spectral_init,
    warm_init,
)
from .selection import BicGrid, bic_score, default_lambda, select_K, select_rank_single
from .simgen import GroundTruth, SimSpec, SpecError, generate
from .tensor import (
    SemiSymTensor,
    matricize_mode3,
    mode3_mult,
    project_out_ones,
    rank_factor_tensor,
    trace_product,
    trace_product_weighted,
)

__all__ = [
    "EvalReport",
    "ExperimentConfig",
    "MethodSpec",
    "lambda_sweep",
    "run_experiment",
    "GroundTruth",
    "SimSpec",
    "SpecError",
    "generate",
    "FactorStack",
    "deflate",
    "fit_multifactor",
    "variance_explained",
    "BicGrid",
    "bic_score",
    "default_lambda",
    "select_K",
    "select_rank_single",
    "DegenerateSpectrumWarning",
    "Factor",
    "FitError",
    "FitOptions",
    "FitTrace",
    "SemiSymTensor",
    "TuckerFit",
    "adjusted_rand_index",
    "fit_single",
    "fit_single_generalized",
    "fit_single_matrix_tensor",
    "fit_single_variant",
    "ihooi",
    "ihosvd",
    "kmeans",
    "matricize_mode3",
    "mode3_mult",
    "project_out_ones",
    "rank_factor_tensor",
    "sin_theta_subspace",
    "sin_theta_vec",
    "spectral_init",
    "top_r_symmetric",
    "trace_product",
    "trace_product_weighted",
    "warm_init",
]
