"""Build script for the compiled episode kernels.

The package works without the extension (a pure-Python lane is selected at
import time); set BANDITSIM_PURE=1 to skip compilation entirely.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("BANDITSIM_PURE"):
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "banditsim._kernels",
                ["src/banditsim/_kernels.pyx"],
                include_dirs=[np.get_include()],
                library_dirs=[os.path.join(os.path.dirname(np.__file__), "random", "lib")],
                libraries=["npyrandom"],
                # -ffp-contract=off: kernel arithmetic must match CPython
                # float semantics bit-for-bit (no FMA contraction), so the
                # compiled lane reproduces the fallback lane exactly.
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
