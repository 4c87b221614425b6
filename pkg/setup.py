"""Build script: compiles the optional BM25 scoring kernel.

The package is fully functional without the extension; claimcheck._kernels
falls back to a pure-Python implementation at import time.
"""

import warnings

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "claimcheck._kernels._bm25_cy",
                ["src/claimcheck/_kernels/_bm25_cy.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    warnings.warn("Cython not available; installing with the pure-Python scoring kernel only")

setup(ext_modules=ext_modules)
