"""Build script for the optional compiled kernels.

The package works without the extension: ``strtd.kernels`` falls back to
pure-numpy implementations when ``strtd._kernels`` is missing, so the
extension is marked optional and a failed compile does not fail the install.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    ext = Extension(
        "strtd._kernels",
        sources=["src/strtd/_kernels.pyx"],
        extra_compile_args=["-O3"],
    )
    ext.optional = True
    extensions = cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=extensions)
