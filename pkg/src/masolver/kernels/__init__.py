"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; otherwise the
numpy fallback is used.  Set ``MASOLVER_PURE_PYTHON=1`` to force the
fallback (used by the benchmark to compare both).
"""

import os

from . import _fallback

if os.environ.get("MASOLVER_PURE_PYTHON"):
    _impl = _fallback
else:
    try:
        from . import _fast as _impl
    except ImportError:
        _impl = _fallback

BACKEND = _impl.BACKEND
mas_combine = _impl.mas_combine
budget_modes = _impl.budget_modes
budget_combine = _impl.budget_combine
