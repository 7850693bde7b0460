"""Build script: compiles the optional native kernels.

The package is fully functional without the extension (a pure NumPy
fallback is selected at import time), so any failure to build it is
downgraded to a warning.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    extensions = [
        Extension(
            "stenofsi._kernels._native",
            ["src/stenofsi/_kernels/_native.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
    ]
    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"warning: native kernels not built ({exc}); pure fallback will be used",
          file=sys.stderr)

setup(ext_modules=ext_modules)
