"""Frame-skipping recurrent ensemble for face presentation attack detection.

Submodules are imported lazily so lightweight CLI calls start fast.
"""

import importlib

__version__ = "0.1.0"

_SUBMODULES = ("sampler", "numerics", "models", "trainer", "ensemble",
               "evaluation", "dataio", "cli", "errors")


def __getattr__(name):
    if name in _SUBMODULES:
        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(list(globals()) + list(_SUBMODULES))
