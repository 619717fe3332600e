"""Build script for the optional compiled Bradley-Terry kernels.

The package works without the extension: ``hapref.btmodel`` falls back to
the pure-NumPy kernels in ``hapref._btcore_py`` when the compiled module is
missing. Building is therefore best-effort.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "hapref._btcore",
                ["src/hapref/_btcore.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
