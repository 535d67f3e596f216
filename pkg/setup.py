"""Build script: compiles the optional Cython traversal kernels.

If Cython or a C compiler is unavailable the install still succeeds and the
package falls back to the pure-Python kernels at import time.
"""

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Never fail the install because the extension would not compile."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: skipping native kernels ({exc}); "
                  f"pure-Python fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to build {ext.name} ({exc}); "
                  f"pure-Python fallback will be used")


ext_modules = []
if os.environ.get("GSKGC_SKIP_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            "src/gskgc/kernels/_cytraversal.pyx",
            language_level=3,
        )
    except ImportError:
        print("warning: Cython not installed; pure-Python kernels only")

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
