"""Kernel selection.

The compiled extension is preferred when importable; setting the environment
variable ``LMPOLL_PURE_PYTHON=1`` forces the pure-Python implementations.
Both expose the same functions with bit-identical behaviour; `IMPL` reports
which one is active ("c" or "python").

The compiled completion sampler only handles models whose context keys fit
in int64 (`NgramModel.fits_int64`); callers fall back to the Python twin for
the rare huge-vocabulary case.
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("LMPOLL_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    HAVE_C = False
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        HAVE_C = True
    except ImportError:
        _impl = _pykernels
        HAVE_C = False

IMPL = _impl.IMPL
mix64 = _impl.mix64
resample_pos_counts = _impl.resample_pos_counts
make_model = _impl.make_model
sample_completion = _impl.sample_completion

pure_python = _pykernels

