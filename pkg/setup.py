import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# The compiled kernel is optional: if Cython or a C compiler is missing the
# package falls back to the numpy implementation selected in bcglab._core.
ext_modules = []
if cythonize is not None:
    ext = Extension(
        "bcglab._core._kernels",
        ["src/bcglab/_core/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
