"""Build script for the compiled scheduling/contention kernels.

The package works without the extension (a pure-numpy fallback is selected at
import time), so the build degrades gracefully when Cython or a C compiler is
unavailable.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "relaysched.kernels._core",
                ["src/relaysched/kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
