import os

import numpy
from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("SDCF_SKIP_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "sdcf._filtercore",
                sources=["src/sdcf/_filtercore.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # package works without the extension (numpy fallback)
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
