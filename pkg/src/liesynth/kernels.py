"""Backend selection for the hot kernels.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy versions in ``_pykernels``. Set ``LIESYNTH_PURE=1`` to force the
fallback (the benchmark and the cross-backend tests use both directly).
"""
import os
from contextlib import contextmanager

from . import _pykernels

try:
    if os.environ.get("LIESYNTH_PURE"):
        raise ImportError("compiled kernels disabled by LIESYNTH_PURE")
    from . import _ckernels as _impl

    BACKEND = "compiled"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

expm = _impl.expm
wn_matrix = _impl.wn_matrix
wn_rhs = _impl.wn_rhs
lu_solve_det = _impl.lu_solve_det


def available_backends():
    """Map backend name to kernel module for every backend that imports."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["compiled"] = _ckernels
    except ImportError:
        pass
    return out


@contextmanager
def use_backend(name):
    """Temporarily route every kernel call through one backend."""
    mods = available_backends()
    if name not in mods:
        raise ValueError(f"backend {name!r} not available (have {sorted(mods)})")
    g = globals()
    saved = {k: g[k] for k in ("expm", "wn_matrix", "wn_rhs", "lu_solve_det", "BACKEND")}
    impl = mods[name]
    g.update(expm=impl.expm, wn_matrix=impl.wn_matrix, wn_rhs=impl.wn_rhs,
             lu_solve_det=impl.lu_solve_det, BACKEND=name)
    try:
        yield impl
    finally:
        g.update(saved)
