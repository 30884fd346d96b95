"""Builds the optional compiled packet engine.

Installs without it (pure-Python engine only) when Cython or a C compiler
is unavailable; set RESIDUENET_REQUIRE_EXT=1 to make that a hard error.
"""
import os

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension
except ImportError:
    if os.environ.get("RESIDUENET_REQUIRE_EXT"):
        raise
else:
    ext_modules = cythonize(
        [Extension(
            "residuenet._ckernel",
            ["src/residuenet/_ckernel.pyx"],
            # float results must match the Python engine bit for bit
            extra_compile_args=["-O2", "-ffp-contract=off"],
            optional=not os.environ.get("RESIDUENET_REQUIRE_EXT"),
        )],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
