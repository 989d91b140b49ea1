import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "snrqi._sweep_ext",
        ["src/snrqi/_sweep_ext.pyx"],
        include_dirs=[np.get_include()],
        # no FMA contraction: keeps bitwise agreement with the numpy fallback
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
