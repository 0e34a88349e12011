"""Build script for the compiled kernel core.

The package works without the extension (a numpy/scipy fallback is selected
at import time); building it just makes the inner conjugate-gradient loop
faster.  `pip install -e . --no-build-isolation` compiles it in place.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "singmax.kernels._core",
                ["src/singmax/kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
