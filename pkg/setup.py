import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "renewalctl._kernels",
    ["src/renewalctl/_kernels.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O2"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(ext_modules=cythonize([ext], language_level=3))
