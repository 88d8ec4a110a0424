"""Modal outer-product-of-gradients dimension reduction."""
from .baselines import SirConfig, mean_opg, sir, sir_slices
from .dataset import Dataset
from .errors import (
    CsvFormatError,
    DegenerateNeighborhoodError,
    DegenerateRegressorError,
    DegenerateResponseError,
    DegenerateSpectrumError,
    DegenerateWeightsError,
    DimensionMismatchError,
    DivergenceError,
    EstimationFailedError,
    InvalidInputError,
    InvariantViolationError,
    MissingColumnError,
    ModalSDRError,
    NearSingularCovarianceError,
    RankDeficientError,
)
from .kernels import Bandwidths, gauss1d, log_gauss1d, log_product_kernel
from .metrics import Subspace, projection_distance, projection_matrix, trace_correlation
from .modal_opg import (
    Basis,
    GradientField,
    LmopgConfig,
    LmopgResult,
    LocalFit,
    choose_dimension,
    eigenvalue_proportions,
    estimate_gradient_field,
    extract_basis,
    kernel_local_fit,
    lmopg,
    log_objective,
    modal_local_fit,
    modal_weights,
)
from .numerics import gram_schmidt, inv_sqrt_sym, sym_eigen, weighted_least_squares
from .pipeline import RegressionReport, ingest_csv, ols_fit, real_data_pipeline, write_csv
from .simulation import McReport, Model, PredDist, SimSpec, generate, run_monte_carlo
from .standardize import Standardizer, fit_standardizer, unwhiten_basis, whiten

__version__ = "0.1.0"
