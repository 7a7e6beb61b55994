"""Network geometry for K source-destination pairs sharing one relay."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

__all__ = ["NetworkTopology", "SweepConfig", "amplitude_attenuation",
           "build_symmetric_sweep"]


def amplitude_attenuation(d, alpha):
    """
    Amplitude-domain pathloss ``d ** (-alpha / 2)``.

    Parameters
    ----------
    d : float or array_like
        Link distance in meters. Must be strictly positive.
    alpha : float
        Pathloss exponent.

    Returns
    -------
    float or numpy.ndarray
        Attenuation factor applied to the complex amplitude. Square it to
        get the power-domain attenuation.
    """
    d = np.asarray(d, dtype=float)
    if np.any(~(d > 0)):
        raise DomainError("distance must be strictly positive")
    if alpha < 0:
        raise DomainError("pathloss exponent must be non-negative")
    out = d ** (-alpha / 2.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class NetworkTopology:
    """
    Distances between the K sources, K destinations and the relay.

    ``d_source_dest[i, j]`` is the distance from S_i to D_j, so the
    diagonal holds the direct (desired) links.
    """
    num_pairs: int
    d_source_dest: np.ndarray
    d_source_relay: np.ndarray
    d_relay_dest: np.ndarray
    alpha: float = 4.0

    def __post_init__(self):
        k = int(self.num_pairs)
        if k < 1:
            raise ConfigError("num_pairs must be a positive integer")
        sd = np.array(self.d_source_dest, dtype=float)
        sr = np.array(self.d_source_relay, dtype=float).reshape(-1)
        rd = np.array(self.d_relay_dest, dtype=float).reshape(-1)
        if sd.shape != (k, k):
            raise ConfigError(f"d_source_dest must be {k}x{k}, got {sd.shape}")
        if sr.shape != (k,) or rd.shape != (k,):
            raise ConfigError(f"relay distance vectors must have length {k}")
        for name, arr in (("d_source_dest", sd), ("d_source_relay", sr),
                          ("d_relay_dest", rd)):
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise ConfigError(f"{name}: all distances must be strictly positive")
        if not self.alpha >= 2:
            raise ConfigError("alpha must be >= 2")
        for arr in (sd, sr, rd):
            arr.flags.writeable = False
        object.__setattr__(self, "num_pairs", k)
        object.__setattr__(self, "d_source_dest", sd)
        object.__setattr__(self, "d_source_relay", sr)
        object.__setattr__(self, "d_relay_dest", rd)
        object.__setattr__(self, "alpha", float(self.alpha))

    # Amplitude gains d^(-alpha/2); the hot loops only ever need these.
    @property
    def gain_source_dest(self):
        return amplitude_attenuation(self.d_source_dest, self.alpha)

    @property
    def gain_source_relay(self):
        return amplitude_attenuation(self.d_source_relay, self.alpha)

    @property
    def gain_relay_dest(self):
        return amplitude_attenuation(self.d_relay_dest, self.alpha)

    @property
    def reference_distance(self):
        """d_{S2 D1}, the distance the sweeps are plotted against (S1 D1 if K=1)."""
        if self.num_pairs == 1:
            return float(self.d_source_dest[0, 0])
        return float(self.d_source_dest[1, 0])

    @classmethod
    def symmetric(cls, num_pairs, d_direct, d_cross, d_source_relay,
                  d_relay_dest, alpha=4.0):
        """Topology where every direct link, cross link and relay link share a length."""
        sd = np.full((num_pairs, num_pairs), float(d_cross))
        np.fill_diagonal(sd, float(d_direct))
        return cls(num_pairs, sd, np.full(num_pairs, float(d_source_relay)),
                   np.full(num_pairs, float(d_relay_dest)), alpha)


_SWEEP_FIELDS = ("d_direct", "d_cross", "d_source_relay", "d_relay_dest")


@dataclass(frozen=True)
class SweepConfig:
    """
    Index-aligned distance vectors describing a co-sweep.

    Element ``k`` of every vector belongs to sweep point ``k``.
    """
    d_direct: np.ndarray
    d_cross: np.ndarray
    d_source_relay: np.ndarray
    d_relay_dest: np.ndarray
    num_pairs: int = 2
    alpha: float = 4.0

    def __post_init__(self):
        lengths = {}
        for name in _SWEEP_FIELDS:
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if arr.ndim != 1:
                raise ConfigError(f"{name} must be a 1-D vector")
            object.__setattr__(self, name, arr)
            lengths[name] = arr.size
        if len(set(lengths.values())) != 1:
            raise ConfigError(f"sweep vectors must have equal length, got {lengths}")

    def __len__(self):
        return self.d_direct.size

    @classmethod
    def linear(cls, steps, d_direct, d_cross, d_source_relay, d_relay_dest,
               num_pairs=2, alpha=4.0):
        """
        Linear co-sweep between ``(lo, hi)`` endpoints of each distance.

        A scalar instead of a pair holds that distance fixed.
        """
        if steps < 1:
            raise ConfigError("steps must be >= 1")

        def span(r):
            r = np.atleast_1d(np.asarray(r, dtype=float))
            if r.size == 1:
                return np.full(steps, r[0])
            if r.size != 2:
                raise ConfigError("a range must be a scalar or a [lo, hi] pair")
            return np.linspace(r[0], r[1], steps) if steps > 1 else r[:1].copy()

        return cls(span(d_direct), span(d_cross), span(d_source_relay),
                   span(d_relay_dest), num_pairs, alpha)


# Reference distance ranges; the relay range serves both relay links.
REFERENCE_RANGES = {
    "d_direct": (400.0, 3700.0),
    "d_cross": (200.0, 3500.0),
    "d_source_relay": (223.60, 2546.6),
    "d_relay_dest": (223.60, 2546.6),
}


def reference_sweep(steps=34):
    """Reference co-sweep; the default 34 steps put d_{S2 D1} on a 100 m grid."""
    return SweepConfig.linear(steps, **REFERENCE_RANGES, num_pairs=2, alpha=4.0)


def build_symmetric_sweep(config):
    """Expand a :class:`SweepConfig` into one topology per sweep index."""
    return [
        NetworkTopology.symmetric(config.num_pairs, config.d_direct[k],
                                  config.d_cross[k], config.d_source_relay[k],
                                  config.d_relay_dest[k], config.alpha)
        for k in range(len(config))
    ]
