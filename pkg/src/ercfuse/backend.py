""":mod:`ercfuse` configuration. Artifact locations, numeric precision,
and sweep parallelism are configured in this module at runtime according
to environment variables.

Environment variables should ideally be configured using an ``.env`` file
in the desired working directory. Environment variables assigned in the
``.env`` file are loaded on the :mod:`ercfuse` module's first instantiation.

"""

import os
import pathlib

import numpy as np

root_path = pathlib.Path(os.environ.get("ERCFUSE_ROOT_PATH", pathlib.Path.cwd()))
"""Parent directory of the ``runs`` directory where training and sweep
artifacts are written (unless otherwise configured according to the relevant
environment variables). This can be set with the ``ERCFUSE_ROOT_PATH``
environment variable and defaults to the current working directory.

:meta hide-value:
"""

runs_path = pathlib.Path(os.environ.get("ERCFUSE_RUNS_PATH", root_path / "runs"))
"""Default output directory for checkpoints, histories, and sweep tables.
This can be set with the ``ERCFUSE_RUNS_PATH`` environment variable.

:meta hide-value:
"""

precision = os.environ.get("ERCFUSE_PRECISION", "float64")
"""Name of the floating point type used for tensors created without an
explicit dtype. Either ``"float64"`` (the default and the only precision
suitable for gradient checks) or ``"float32"`` for faster training.

:meta hide-value:
"""

if precision not in ("float32", "float64"):
    raise ValueError(
        f"ERCFUSE_PRECISION must be `float32` or `float64` but got `{precision}`"
    )

dtype = np.dtype(precision)
"""The numpy dtype corresponding to :data:`precision`.

:meta hide-value:
"""

sweep_workers = int(os.environ.get("ERCFUSE_SWEEP_WORKERS", 1))
"""Number of worker threads used by :func:`ercfuse.train.sweep.ablation_sweep`.
Each worker trains one independent model instance. This can be set with the
``ERCFUSE_SWEEP_WORKERS`` environment variable.

:meta hide-value:
"""
