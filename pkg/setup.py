"""Build the optional Cython GRU kernel.

The package works without it; ``lide.rnn.kernels`` falls back to numpy when
the compiled module is missing.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("LIDE_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "lide.rnn._gru_core",
                    ["src/lide/rnn/_gru_core.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )

setup(ext_modules=ext_modules)
