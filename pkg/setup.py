"""Build the optional compiled kernels.

The package works without the extension (a pure-Python twin of each kernel
is selected at import time); building it makes the sample-rate loops
roughly two orders of magnitude faster.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize
    import numpy as np

    ext_modules = cythonize(
        "src/dsdrive/_kernels.pyx",
        compiler_directives={"language_level": "3"},
    )
    include_dirs = [np.get_include()]
except ImportError:
    ext_modules = []
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)
