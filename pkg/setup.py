"""Build script. Compiles the optional Cython kernel when a toolchain is present.

The package is fully functional without the extension: kinetic_brw._kernel
falls back to a vectorized numpy implementation at import time.
"""

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


def _extensions():
    if os.environ.get("KINETIC_BRW_PURE"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    ext = Extension(
        "kinetic_brw._kernel._speedups",
        ["src/kinetic_brw/_kernel/_speedups.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


class optional_build_ext(build_ext):
    """Never fail the install over the speedup module."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, broken toolchain
            print(f"warning: skipping compiled kernel ({exc}); using pure-python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: could not build {ext.name} ({exc}); using pure-python fallback")


setup(ext_modules=_extensions(), cmdclass={"build_ext": optional_build_ext})
