"""Build the optional compiled core.

If Cython or a C compiler is unavailable the package still installs and runs
on the numpy fallback in ``kme_decon._fallback``.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("KME_DECON_NO_EXT", "") not in ("1", "true", "yes"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension("kme_decon._core", ["src/kme_decon/_core.pyx"],
                       include_dirs=[np.get_include()],
                       define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")])],
            language_level=3,
        )

setup(ext_modules=ext_modules)
