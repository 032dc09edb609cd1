"""Build script: compiles the optional dense-kernel extension.

The package works without the extension (a pure-Python implementation of
the same algorithms is selected at import time), so any failure here is
downgraded to a warning. Set STMG_NO_EXT=1 to skip compilation entirely.
"""

import os
import sys

from setuptools import Extension, setup


def extensions():
    if os.environ.get("STMG_NO_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        print(f"stmg: building without compiled kernels ({exc})", file=sys.stderr)
        return []
    ext = Extension(
        "stmg._kernels",
        ["src/stmg/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions())
