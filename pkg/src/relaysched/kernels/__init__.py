"""Hot-loop kernels with a compiled core and a pure-numpy fallback.

The compiled Cython backend is used when built; set RELAYSCHED_BACKEND to
"python" or "compiled" to force one.  Both backends are required to agree
bitwise on identical inputs — all randomness is drawn upstream, so choosing
a backend never changes results, only speed.
"""

import os

from . import pure

try:
    from . import _core
except ImportError:
    _core = None

_choice = os.environ.get("RELAYSCHED_BACKEND", "auto").strip().lower() or "auto"
if _choice == "auto":
    _active = _core if _core is not None else pure
elif _choice in ("compiled", "cython"):
    if _core is None:
        raise ImportError(
            "RELAYSCHED_BACKEND=compiled, but the compiled kernels are not "
            "built; reinstall the package or use RELAYSCHED_BACKEND=python"
        )
    _active = _core
elif _choice in ("python", "pure"):
    _active = pure
else:
    raise ValueError(
        f"unrecognized RELAYSCHED_BACKEND={_choice!r}: use auto, compiled, or python"
    )

BACKEND = "python" if _active is pure else "compiled"

evaluate_schedule_block = _active.evaluate_schedule_block
evaluate_protocol_block = _active.evaluate_protocol_block


def available_backends():
    """Names of importable backends, preferred first."""
    return ("compiled", "python") if _core is not None else ("python",)


def get_backend(name):
    """Fetch a backend module by name ("compiled"/"cython" or "python"/"pure")."""
    if name in ("python", "pure"):
        return pure
    if name in ("compiled", "cython"):
        if _core is None:
            raise ValueError("compiled kernels are not built in this installation")
        return _core
    raise ValueError(f"unknown backend {name!r}")
