"""Regularized determinants of discrete and flat tori."""

from ._core import (
    DiscreteTorus,
    Error,
    FitDegenerateError,
    InputError,
    NumericalError,
    TailModelError,
    check_interchange,
    cjk_coefficient,
    eigenproduct_reglimit,
    em_decompose,
    extract_reglimit,
    fit_expansion,
    integer_geometric_grid,
    interchange_registry,
    log_det,
    log_det_rescaled,
    log_det_zeta,
    logdet_zeta_via_regint,
    main_theorem,
    matrix_tree_check,
    reg_integral,
    resolvent_trace,
    resolvent_trace_continuum,
    spanning_tree_count,
    spectral_zeta,
    spectrum_1d,
    theta_function,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
