"""Build script: compiles the optional split-search extension.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed compile only costs speed, never functionality.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/archprobe/_kernels/_split.pyx",
        language_level=3,
    )
except Exception as exc:  # noqa: BLE001 - any build failure falls back to pure Python
    print(f"archprobe: skipping compiled kernel ({exc!r}); pure-Python fallback will be used")

setup(ext_modules=ext_modules)
