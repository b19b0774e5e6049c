"""Population-expansion kernel with compiled and pure-python implementations.

The compiled extension is selected at import when available; setting the
environment variable KINETIC_BRW_PURE=1 forces the numpy fallback. Both
implementations consume identical caller-drawn randomness and perform the
same elementwise arithmetic, so simulation output does not depend on which
one is active.
"""

import os

from . import _python

IMPLEMENTATION = "python"
expand_generation = _python.expand_generation

if not os.environ.get("KINETIC_BRW_PURE"):
    try:
        from . import _speedups

        expand_generation = _speedups.expand_generation
        IMPLEMENTATION = "compiled"
    except ImportError:
        pass

__all__ = ["expand_generation", "IMPLEMENTATION"]
