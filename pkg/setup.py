"""Build script: compiles the optional Cython stepping kernel.

The package works without the extension (a pure-Python kernel is selected
at import time); the build therefore treats the extension as optional and
falls back to a pure install when Cython or a C compiler is unavailable.
"""
import os

from setuptools import Extension, setup

PYX = os.path.join("src", "qsirs", "_core_c.pyx")

ext_modules = []
if os.path.exists(PYX):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "qsirs._core_c",
                    [PYX],
                    extra_compile_args=["-O3"],
                    optional=True,
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
