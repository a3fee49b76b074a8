"""Backend selection for the batched pointwise kernels.

The compiled extension (torusphase._kernels, Cython) fuses the per-point 2x2
pencil arithmetic into single passes; the numpy module (_kernels_py) is the
always-available reference.  The compiled path is preferred when importable.

Environment:
    TORUSPHASE_KERNELS = py | cy   force a backend (cy errors if not built)
    TORUSPHASE_WORKERS = <int>     thread budget for the compiled path

Both backends perform identical IEEE double arithmetic; the compiled path
parallelises only pointwise maps, so results are independent of the thread
count.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py
from .fields import fft_workers

try:
    from . import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None

_forced = os.environ.get("TORUSPHASE_KERNELS")
if _forced not in (None, "py", "cy"):
    raise ValueError(f"TORUSPHASE_KERNELS must be 'py' or 'cy', got {_forced!r}")
if _forced == "cy" and _kernels_cy is None:
    raise ImportError("TORUSPHASE_KERNELS=cy but the compiled kernels are not built")

_active = _kernels_py if _forced == "py" or _kernels_cy is None else _kernels_cy


def backend() -> str:
    """Name of the active kernel backend: 'cy' (compiled) or 'py' (numpy)."""
    return "cy" if _active is _kernels_cy else "py"


def _flat(a, dtype):
    return np.ascontiguousarray(a, dtype=dtype).reshape(-1)


def pencil_phase(f11, f12, f22, ia11, ia12, ia22, inv_det_a):
    """Batched pencil data (re_zeta, im_zeta, theta, v, lam1, lam2), shaped like f11."""
    if _active is _kernels_py:
        return _kernels_py.pencil_phase(f11, f12, f22, ia11, ia12, ia22, inv_det_a)
    shape = np.shape(f11)
    out = _active.pencil_phase(
        _flat(f11, np.float64),
        _flat(f12, np.complex128),
        _flat(f22, np.float64),
        float(ia11),
        complex(ia12),
        float(ia22),
        float(inv_det_a),
        fft_workers(),
    )
    return tuple(o.reshape(shape) for o in out)


def eta_inv(f11, f12, f22, a11, a12, a22, ia11, ia12, ia22):
    """Batched inverse of eta = alpha + f alpha^{-1} f: (e11, e12, e22)."""
    if _active is _kernels_py:
        return _kernels_py.eta_inv(f11, f12, f22, a11, a12, a22, ia11, ia12, ia22)
    shape = np.shape(f11)
    out = _active.eta_inv(
        _flat(f11, np.float64),
        _flat(f12, np.complex128),
        _flat(f22, np.float64),
        float(a11),
        complex(a12),
        float(a22),
        float(ia11),
        complex(ia12),
        float(ia22),
        fft_workers(),
    )
    return tuple(o.reshape(shape) for o in out)


def trace_contract(e11, e12, e22, h11, h12, h22):
    """Batched tr(E H) for Hermitian E, H given by their (11, 12, 22) entries."""
    if _active is _kernels_py:
        return _kernels_py.trace_contract(e11, e12, e22, h11, h12, h22)
    shape = np.shape(h11)
    out = _active.trace_contract(
        _flat(e11, np.float64),
        _flat(e12, np.complex128),
        _flat(e22, np.float64),
        _flat(h11, np.float64),
        _flat(h12, np.complex128),
        _flat(h22, np.float64),
        fft_workers(),
    )
    return out.reshape(shape)


def grad_quadratic(e11, e12, e22, g1, g2):
    """Batched Hermitian quadratic form conj(g)^T E g."""
    if _active is _kernels_py:
        return _kernels_py.grad_quadratic(e11, e12, e22, g1, g2)
    shape = np.shape(g1)
    out = _active.grad_quadratic(
        _flat(e11, np.float64),
        _flat(e12, np.complex128),
        _flat(e22, np.float64),
        _flat(g1, np.complex128),
        _flat(g2, np.complex128),
        fft_workers(),
    )
    return out.reshape(shape)
