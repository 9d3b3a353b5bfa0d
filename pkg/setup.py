from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "multdioph._kernels",
        ["src/multdioph/_kernels.pyx"],
        # no fast-math or FMA contraction: the kernels rely on IEEE rounding
        extra_compile_args=["-O2", "-fno-fast-math", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
