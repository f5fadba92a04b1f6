"""Build the compiled event loop; the package still works without it."""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("ringkpz.sim._gillespie", ["src/ringkpz/sim/_gillespie.pyx"],
                   include_dirs=[numpy.get_include()],
                   define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")])],
        language_level=3,
    )
except ImportError:  # no Cython: fall back to the pure-Python loop
    pass

setup(ext_modules=ext_modules)
