"""Python bindings for the isokam numerics core."""

import json as _json

from ._impl import (  # noqa: F401
    IsokamError,
    __version__,
    approximate_inverse,
    distance,
    exp_so,
    haar_sample,
    lambda_r_mc,
    lambda_r_taylor,
    log_so,
    project_to_group,
    reference_pair,
    spectral_gaps,
    sphere_moments,
    subspace_det,
    wigner_block,
)
from ._impl import run_command as _run_command


def run(command, **params):
    """Run a CLI experiment in-process and return the parsed output."""
    config = dict(params, command=command)
    return _json.loads(_run_command(_json.dumps(config)))
