"""
Backend selection for the per-trial kernels.

The compiled extension is used when it was built; otherwise, or when
``ANCSIM_PURE_PYTHON`` is set to a non-empty value other than ``0``, the
numpy implementation is used. Both return identical results up to
floating-point summation order.
"""

import os

import numpy as np

from . import _fallback
from .errors import DomainError

__all__ = ["BACKEND", "evaluate_destination", "available_backends"]

_impls = {"python": _fallback.evaluate_destination}
try:
    from . import _kernels
except ImportError:  # extension not built
    _kernels = None
else:
    _impls["cython"] = _kernels.evaluate_destination

if os.environ.get("ANCSIM_PURE_PYTHON", "") not in ("", "0") or _kernels is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

DENOMINATOR_FLOOR = 1e-9


def available_backends():
    return sorted(_impls)


def evaluate_destination(topo, alloc, sigma2, h, dest, floor=DENOMINATOR_FLOOR,
                         backend=None):
    """
    Evaluate noise terms and branch SNRs at ``dest`` for a batch of channels.

    Parameters
    ----------
    topo : NetworkTopology
    alloc : PowerAllocation
    sigma2 : NoisePowers
    h : ChannelRealization
        Batched along a single leading axis.
    dest : int
        Zero-based destination index.
    backend : {"cython", "python"}, optional
        Defaults to :data:`BACKEND`.

    Returns
    -------
    dict
        Arrays ``a_f``, ``relay_gain``, ``anc_gain``, ``variance``,
        ``snr_direct``, ``snr_relay`` and the integer ``n_floored``.
    """
    fn = _impls[backend or BACKEND]
    c = np.ascontiguousarray
    out = fn(c(topo.gain_source_dest), c(topo.gain_source_relay),
             c(topo.gain_relay_dest), c(alloc.p_source, dtype=float),
             float(alloc.p_relay), float(sigma2.dest[dest]), float(sigma2.relay),
             c(h.h_source_dest, dtype=complex), c(h.h_source_relay, dtype=complex),
             c(h.h_relay_dest, dtype=complex),
             c(h.triple_source_relay, dtype=complex),
             c(h.triple_relay_dest, dtype=complex), int(dest), float(floor))
    if np.isnan(out[0]).any():
        raise DomainError("amplification factor denominator is zero")
    keys = ("a_f", "relay_gain", "anc_gain", "variance", "snr_direct",
            "snr_relay", "n_floored")
    return dict(zip(keys, out))
