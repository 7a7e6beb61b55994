"""Total-power split between sources and relay, and the AF relay gain."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError

__all__ = ["PowerAllocation", "NoisePowers", "allocate", "amplification_factor",
           "thermal_noise_power"]


@dataclass(frozen=True)
class PowerAllocation:
    p_total: float
    psi: np.ndarray
    p_source: np.ndarray
    p_relay: float

    @property
    def num_pairs(self):
        return self.psi.size


def allocate(p_total, psi):
    """
    Split ``p_total`` so that source ``i`` gets ``psi[i] * p_total`` and the
    relay keeps the remainder.

    ``sum(psi) == 1`` is allowed and leaves the relay silent.
    """
    psi = np.atleast_1d(np.asarray(psi, dtype=float)).copy()
    if not p_total > 0:
        raise ValidationError("p_total must be positive")
    if psi.ndim != 1 or psi.size == 0:
        raise ValidationError("psi must be a non-empty vector")
    if np.any(~(psi > 0)) or np.any(psi > 1):
        raise ValidationError("every psi_i must lie in (0, 1]")
    total = float(psi.sum())
    if total > 1.0 + 1e-12:
        raise ValidationError(f"sum(psi) = {total} exceeds 1")
    p_source = psi * p_total
    p_relay = max(p_total - float(p_source.sum()), 0.0)
    # sum(psi) == 1 up to round-off means non-cooperative operation
    if abs(1.0 - total) <= 1e-12:
        p_relay = 0.0
    psi.flags.writeable = False
    p_source.flags.writeable = False
    return PowerAllocation(float(p_total), psi, p_source, p_relay)


def thermal_noise_power(bandwidth_hz, density_dbm_hz=-174.0, noise_figure_db=0.0):
    """Receiver noise power in watts for a flat noise density over ``bandwidth_hz``."""
    if not bandwidth_hz > 0:
        raise ValidationError("bandwidth must be positive")
    dbm = density_dbm_hz + noise_figure_db + 10.0 * np.log10(bandwidth_hz)
    return 10.0 ** (dbm / 10.0) * 1e-3


@dataclass(frozen=True)
class NoisePowers:
    """AWGN variance at every destination and at the relay, in watts."""
    dest: np.ndarray
    relay: float

    def __post_init__(self):
        dest = np.atleast_1d(np.asarray(self.dest, dtype=float)).copy()
        if np.any(dest < 0) or not self.relay >= 0:
            raise ValidationError("noise powers must be non-negative")
        dest.flags.writeable = False
        object.__setattr__(self, "dest", dest)
        object.__setattr__(self, "relay", float(self.relay))

    @classmethod
    def uniform(cls, sigma2, num_pairs):
        return cls(np.full(num_pairs, float(sigma2)), float(sigma2))


def amplification_factor(alloc, topo, h, sigma2_relay):
    """
    Relay gain that makes the forwarded sum meet the relay power budget.

    ``A_f = sqrt(P_R / (sum_m P_Sm |h_SmR|^2 / d_SmR^alpha + K sigma_R^2))``

    ``h`` may be batched, in which case an array of gains is returned.
    """
    k = topo.num_pairs
    if sigma2_relay < 0:
        raise ValidationError("relay noise power must be non-negative")
    received = alloc.p_source * np.abs(h.h_source_relay) ** 2 / topo.d_source_relay ** topo.alpha
    den = received.sum(axis=-1) + k * sigma2_relay
    if alloc.p_relay == 0:
        out = np.zeros_like(den)
    else:
        if np.any(den <= 0):
            raise DomainError("amplification factor denominator is zero")
        out = np.sqrt(alloc.p_relay / den)
    return float(out) if np.ndim(out) == 0 else out
