"""Perception-aware NMPC for quadrotors.

Configs are JSON text (see ``default_config``); runs return column arrays
of the closed-loop log and a metrics dict.
"""

import json

from ._core import (
    INPUT_DIM,
    STATE_DIM,
    ConfigInvalid,
    DepthNonPositive,
    Error,
    IoError,
    SimDiverged,
    default_config,
    perception_state,
    read_log_csv,
    resolve_config,
    rk4_step,
    rk4_step_with_jacobians,
    run,
    run_to_directory,
    solve_qp,
    verify,
)

__all__ = [
    "INPUT_DIM",
    "STATE_DIM",
    "ConfigInvalid",
    "DepthNonPositive",
    "Error",
    "IoError",
    "SimDiverged",
    "default_config",
    "load_config",
    "perception_state",
    "read_log_csv",
    "resolve_config",
    "rk4_step",
    "rk4_step_with_jacobians",
    "run",
    "run_to_directory",
    "solve_qp",
    "verify",
]


def load_config(text):
    """Resolved config as a Python dict."""
    return json.loads(resolve_config(text))
