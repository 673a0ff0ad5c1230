"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting
``REVLATTICE_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from revlattice import _core_py

BACKEND = "python"
_impl = _core_py

if os.environ.get("REVLATTICE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from revlattice import _core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _core_py

disc_count = _impl.disc_count
disc_counts = _impl.disc_counts
trig_sum = _impl.trig_sum
trig_sums = _impl.trig_sums


def available_backends():
    """Return ``{name: module}`` for every importable backend."""
    out = {"python": _core_py}
    try:
        from revlattice import _core

        out["compiled"] = _core
    except ImportError:
        pass
    return out
