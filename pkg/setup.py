"""Build the optional compiled kernel; the package falls back to numpy without it."""
import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("LIESYNTH_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "liesynth._ckernels",
                    sources=["src/liesynth/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    optional=True,
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
