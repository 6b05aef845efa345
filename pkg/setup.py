"""Build hook for the optional compiled jet kernels.

Metadata lives in pyproject.toml. If Cython or a C compiler is missing the
package still installs and falls back to the numpy kernels at import.
"""
from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "gluenn.autodiff._kernels",
                ["src/gluenn/autodiff/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
