import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "dysonrg._ckernels",
        ["src/dysonrg/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        # no -ffast-math: interval endpoints rely on IEEE rounding
        extra_compile_args=["-O3", "-fopenmp", "-ffp-contract=off"],
        extra_link_args=["-fopenmp"],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
