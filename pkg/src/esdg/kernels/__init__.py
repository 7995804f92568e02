"""Hot numerical kernels with a numba fast path and a pure-numpy fallback.

The backend is chosen once at import time from the environment variable
``ESDG_KERNELS`` (``"numba"`` or ``"numpy"``).  Without the variable, numba is
used when importable and the numpy fallback otherwise.  ``set_backend`` allows
tests and benchmarks to switch at runtime; both backends implement the same
flat-array function signatures and produce results identical to rounding.
"""

from __future__ import annotations

import os
import warnings

from . import numpy_backend

_FORCED = os.environ.get("ESDG_KERNELS", "").strip().lower()

try:
    from . import numba_backend

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba_backend = None
    _HAVE_NUMBA = False

if _FORCED == "numpy":
    _impl = numpy_backend
elif _FORCED == "numba":
    if not _HAVE_NUMBA:
        raise ImportError("ESDG_KERNELS=numba but numba is not importable")
    _impl = numba_backend
else:
    if not _HAVE_NUMBA:
        warnings.warn("numba unavailable, falling back to numpy kernels")
    _impl = numba_backend if _HAVE_NUMBA else numpy_backend


def backend_name() -> str:
    return "numba" if _impl is numba_backend else "numpy"


def available_backends() -> tuple[str, ...]:
    return ("numba", "numpy") if _HAVE_NUMBA else ("numpy",)


def set_backend(name: str) -> None:
    """Switch the kernel backend at runtime (tests, benchmarks)."""
    global _impl
    if name == "numpy":
        _impl = numpy_backend
    elif name == "numba":
        if not _HAVE_NUMBA:
            raise ValueError("numba backend requested but numba is not importable")
        _impl = numba_backend
    else:
        raise ValueError(f"unknown kernel backend {name!r}")


def _proxy(name):
    def call(*args, **kwargs):
        return getattr(_impl, name)(*args, **kwargs)

    call.__name__ = name
    return call


line_derivative_group = _proxy("line_derivative_group")
ns_state_derived = _proxy("ns_state_derived")
ns_volume_group = _proxy("ns_volume_group")
ns_face_ec_group = _proxy("ns_face_ec_group")
ns_bface_ec_group = _proxy("ns_bface_ec_group")
theta_face_group = _proxy("theta_face_group")
theta_bface_group = _proxy("theta_bface_group")
ns_viscous_flux_all = _proxy("ns_viscous_flux_all")
gdiv_face_group = _proxy("gdiv_face_group")
gdiv_bface_group = _proxy("gdiv_bface_group")
ns_face_ip_group = _proxy("ns_face_ip_group")
ns_bface_ip_group = _proxy("ns_bface_ip_group")
ns_face_diss_group = _proxy("ns_face_diss_group")
ns_bface_diss_group = _proxy("ns_bface_diss_group")
scalar_volume_group = _proxy("scalar_volume_group")
scalar_face_ec_group = _proxy("scalar_face_ec_group")
scalar_bface_ec_group = _proxy("scalar_bface_ec_group")
scalar_viscous_flux_all = _proxy("scalar_viscous_flux_all")
scalar_face_ip_group = _proxy("scalar_face_ip_group")
scalar_bface_ip_group = _proxy("scalar_bface_ip_group")
scalar_face_diss_group = _proxy("scalar_face_diss_group")
scalar_bface_diss_group = _proxy("scalar_bface_diss_group")
shock_profile_solve = _proxy("shock_profile_solve")


def apply_line_derivative(D, u, out, n, axis):
    """Single-element tensor-line derivative (see sbp.apply_tensor_derivative)."""
    line_derivative_group(D, 0, 1, n, u, out, False, axis)
