"""Select the compiled core when importable, else the numpy fallback.

Set ``KME_DECON_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

BACKEND = "python"
gaussian_gram = _fallback.gaussian_gram
herd = _fallback.herd

if os.environ.get("KME_DECON_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "cython"
        gaussian_gram = _core.gaussian_gram
        herd = _core.herd
