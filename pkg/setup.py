"""Build the optional compiled motion kernel; the package works without it."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("HARMONIA_NO_EXTENSION", "") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "harmonia._motion",
                    ["src/harmonia/_motion.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
