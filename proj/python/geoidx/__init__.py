"""Python bindings for the geoidx simulator."""

from ._core import (
    METRICS_HEADER,
    Cluster,
    GeoidxError,
    QueryError,
    ValidationError,
    gen_workload,
    normalize_query,
    run_scenario,
)

__all__ = [
    "METRICS_HEADER",
    "Cluster",
    "GeoidxError",
    "QueryError",
    "ValidationError",
    "gen_workload",
    "normalize_query",
    "run_scenario",
]
