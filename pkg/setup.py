"""Build script for the optional compiled kernel.

The package works without the extension (a NumPy fallback is selected at
import time), so compilation failures only cost speed, never correctness.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the Cython kernel if possible, otherwise install pure."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # no compiler / no Cython
            print(f"naviseg: skipping compiled kernel ({exc}); "
                  "falling back to the NumPy backend")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"naviseg: could not build {ext.name} ({exc}); "
                  "falling back to the NumPy backend")


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "naviseg._speedups",
        ["src/naviseg/_speedups.pyx"],
        include_dirs=[numpy.get_include()],
        # fp-contract off keeps the DP bit-identical with the NumPy fallback
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
