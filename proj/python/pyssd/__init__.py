"""Python bindings for the ssd core library."""

from ._core import (
    Block,
    ConfigError,
    DegenerateRowError,
    DimensionError,
    attention_linear,
    attention_quadratic,
    cumprodsum,
    materialize_1ss,
    scan_work,
    ssd_blocked,
    ssd_cost,
    ssd_quadratic,
    ssd_recurrent,
    ssm_recurrent,
)

__all__ = [
    "Block",
    "ConfigError",
    "DegenerateRowError",
    "DimensionError",
    "attention_linear",
    "attention_quadratic",
    "cumprodsum",
    "materialize_1ss",
    "scan_work",
    "ssd_blocked",
    "ssd_cost",
    "ssd_quadratic",
    "ssd_recurrent",
    "ssm_recurrent",
]
