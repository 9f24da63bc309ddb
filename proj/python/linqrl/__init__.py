"""Python bindings for the linqrl simulation library."""

import json as _json

from ._core import (
    Environment,
    GenerationError,
    NumericalIntegrityError,
    ParseError,
    RegretLog,
    UsageError,
    ValidationError,
    compute_beta,
    dp_solve,
    from_json,
    generate,
    load,
    revisit_bound,
    run_experiment,
    save,
)


def summary(log):
    """Summary of a RegretLog as a dict."""
    return _json.loads(log.summary_json())


__all__ = [
    "Environment",
    "GenerationError",
    "NumericalIntegrityError",
    "ParseError",
    "RegretLog",
    "UsageError",
    "ValidationError",
    "compute_beta",
    "dp_solve",
    "from_json",
    "generate",
    "load",
    "revisit_bound",
    "run_experiment",
    "save",
    "summary",
]
