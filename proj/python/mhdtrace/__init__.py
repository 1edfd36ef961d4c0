"""Python bindings for the mhdtrace HDG-MHD solver library."""

from ._mhdtrace import (
    ConfigError,
    SparseMatrix,
    __version__,
    bfbt_apply,
    mms_rates,
    picard_metric,
    read_matrix_market,
    resolve_config,
    run,
    run_case,
    solve,
    stabilization,
    write_matrix_market,
)

__all__ = [
    "ConfigError",
    "SparseMatrix",
    "__version__",
    "bfbt_apply",
    "mms_rates",
    "picard_metric",
    "read_matrix_market",
    "resolve_config",
    "run",
    "run_case",
    "solve",
    "stabilization",
    "write_matrix_market",
]
