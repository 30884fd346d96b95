"""Pick the packet engine at import time.

``RESIDUENET_BACKEND`` may be ``auto`` (default), ``compiled`` or ``python``.
"""
import os

from ._pykernel import Engine as PythonEngine

try:
    from ._ckernel import Engine as CompiledEngine
except ImportError:  # extension not built
    CompiledEngine = None

ENGINES = {"python": PythonEngine}
if CompiledEngine is not None:
    ENGINES["compiled"] = CompiledEngine


def engine_class(name=None):
    name = name or os.environ.get("RESIDUENET_BACKEND", "auto")
    if name == "auto":
        return CompiledEngine or PythonEngine
    try:
        return ENGINES[name]
    except KeyError:
        if name == "compiled":
            raise ImportError("compiled engine requested but residuenet._ckernel is not built")
        raise ValueError(f"unknown backend {name!r}") from None



def backend_name(cls):
    return "python" if cls is PythonEngine else "compiled"


DEFAULT_BACKEND = backend_name(engine_class())
