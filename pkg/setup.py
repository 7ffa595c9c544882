import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; the package falls back at import
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("VIDTOK_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "vidtok._kernels",
                ["src/vidtok/_kernels.pyx"],
                include_dirs=[np.get_include()],
                # no FMA contraction: the numpy fallback must reproduce these sums bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
