"""Backend selection for the hot kernels.

The compiled extension is preferred; the NumPy fallback is used when the
extension is missing or when ``MODNLS_PURE_PY`` is set in the environment.
"""

import os

from modnls import _pykernels

if os.environ.get("MODNLS_PURE_PY"):
    _impl = _pykernels
else:
    try:
        from modnls import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

tau_correlation = _impl.tau_correlation
vp_dp_batch = _impl.vp_dp_batch
max_partition_sum = _impl.max_partition_sum


def backend_name():
    return "compiled" if _impl is not _pykernels else "pure"
