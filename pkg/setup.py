"""Build the optional compiled kernels.

The extension is marked optional: if Cython or a C compiler is unavailable the
package installs anyway and ``reins._backend`` falls back to the pure-Python
kernels.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "reins._kernels",
                ["src/reins/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O2", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
