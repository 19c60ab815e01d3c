import os

import numpy as np
from setuptools import Extension, setup

# SHIPPRIOR_NO_EXT=1 installs the pure NumPy path only.
ext_modules = []
if not os.environ.get("SHIPPRIOR_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "shipprior._sse_core",
                ["src/shipprior/_sse_core.pyx"],
                include_dirs=[np.get_include()],
                # no fast-math / FMA: the kernel must reproduce the NumPy path bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
