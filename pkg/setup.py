"""Build script: compiles the hot stepping kernels as a C extension when a
toolchain is available.  Installation falls back to the pure-numpy kernels
(gcflab._kernels_py) if the extension cannot be built."""
import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "gcflab._kernels",
                ["src/gcflab/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - toolchain-dependent
    sys.stderr.write(f"gcflab: building without compiled kernels ({exc})\n")

setup(ext_modules=ext_modules)
