import numpy
from setuptools import Extension, setup

# The compiled kernels are optional: torusphase falls back to the numpy
# implementation when the extension is absent.  No -ffast-math: the kernels
# must keep IEEE semantics so both backends agree and output stays
# reproducible across thread counts.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "torusphase._kernels",
                ["src/torusphase/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-fopenmp"],
                extra_link_args=["-fopenmp"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
