"""Build script for the optional compiled kernel module.

The package works without it: ``anisonls.kernels`` falls back to numpy
when ``anisonls._kernels`` cannot be imported.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("ANISONLS_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "anisonls._kernels",
                    ["src/anisonls/_kernels.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
