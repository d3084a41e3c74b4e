"""Balanced urn schemes with lattice-indexed colors.

Exact laws of the sampled color, path simulation, martingale second-moment
recursions, and Gaussian-limit diagnostics, driven by bounded random-walk
increment models on integer and general lattices.
"""

from .colors import (
    ColorPoint,
    Embedding,
    IncrementModel,
    LatticeSpec,
    MomentSummary,
    build_model,
    cf,
    custom_model,
    detect_minimal_lattice,
    detect_span_1d,
    mgf,
    model_from_file,
    model_from_json,
    moments,
    right_shift_model,
    ssrw_model,
    thinned_lattice,
    triangular_model,
)
from .diagnostics import (
    LLTStatistic,
    Standardization,
    StandardizedLaw,
    cf_distance,
    gaussian_cdf_1d,
    gaussian_density,
    ks_distance_1d,
    lattice_gaussian_law,
    llt_statistic,
    random_config_convergence,
    standardize,
)
from .exact_law import (
    SparseLaw,
    brute_force_law,
    exact_law_cf,
    exact_law_dp,
    exact_law_ladder,
    law_moments,
    write_law_csv,
)
from .kernels import BACKEND
from .product_formula import LogComplex, cf_zn, gamma_real, gauss_ratio, mgf_zn, pi_n
from .urn_process import (
    MartingaleTrace,
    UrnPath,
    final_martingale_values,
    l2_bound_scan,
    martingale_trace,
    sample_path,
    sample_path_naive,
    second_moment_exact,
    variance_vanishes,
)

__version__ = "0.1.0"
