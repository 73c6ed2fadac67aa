"""Build the optional compiled simulation kernel.

The package works without it: ``leaktwin._backend`` falls back to the
pure-Python kernel when the extension is missing.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("LEAKTWIN_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:  # pragma: no cover
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "leaktwin._ckernel",
                    ["src/leaktwin/_ckernel.pyx"],
                    # no fp contraction: results must match the Python kernel bit for bit
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
