"""Split-search backend selection.

The Gini split scan is the hot inner loop of tree training (and therefore
of recursive feature elimination, which refits forests for every round).
A compiled extension is used when available; a vectorized NumPy fallback
with bit-identical semantics is selected otherwise. Set
``ARCHPROBE_BACKEND=python`` or ``=compiled`` to force a choice.
"""

import os

from . import pysplit

_forced = os.environ.get("ARCHPROBE_BACKEND", "").strip().lower()

if _forced == "python":
    scan_best_split = pysplit.scan_best_split
    BACKEND = "python"
else:
    try:
        from ._split import scan_best_split  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise
        scan_best_split = pysplit.scan_best_split
        BACKEND = "python"


def available_backends():
    """Name -> scan function, for benchmarks and equivalence tests."""
    out = {"python": pysplit.scan_best_split}
    try:
        from ._split import scan_best_split as compiled_scan  # type: ignore[attr-defined]

        out["compiled"] = compiled_scan
    except ImportError:
        pass
    return out
