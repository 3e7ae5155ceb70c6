"""Build script: compiles the optional fast session kernel.

The compiled extension is a pure speedup; if no C compiler is available the
package falls back to the pure-Python kernel at import time.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Swallow compiler failures so the pure-Python fallback still installs."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        import warnings

        warnings.warn(
            f"building the compiled kernel failed ({exc!r}); "
            "falling back to the pure-Python implementation"
        )


extensions = [
    Extension(
        "arqsec._kernels._fast",
        ["src/arqsec/_kernels/_fast.pyx"],
        extra_compile_args=["-O3"],
    )
]


try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        extensions, compiler_directives={"language_level": "3"}
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
