"""Build the optional compiled kernel; the package works without it."""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # fall back to the pure-Python stepper
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "solitonlab._kernels",
                ["src/solitonlab/_kernels.pyx"],
                extra_compile_args=["-O2"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
