from setuptools import Extension, setup

from Cython.Build import cythonize

# The compiled kernel only uses typed memoryviews and libc.math, so no numpy
# headers are needed.
extensions = [
    Extension("snsampler._kernels", ["src/snsampler/_kernels.pyx"]),
]

setup(ext_modules=cythonize(extensions, language_level="3"))
