"""
Signal model of one (K+1)-slot cycle, destination-side cancellation and the
closed-form variance of the residual noise.

Slot ``i < K`` carries source ``S_i``; slot ``K`` carries the relay's
amplified sum. Source ``i`` transmits ``sqrt(P_Si) * s_i`` with unit-power
symbols ``s_i``. Noise arrays are indexed by slot:
``NoiseDraws.dest[..., t, j]`` is the AWGN at ``D_j`` during slot ``t``
and ``NoiseDraws.relay[..., t]`` the relay's AWGN during slot ``t``.

Every ``(.)^2`` of a complex gain in the variance expressions is taken as a
squared magnitude.
"""

import re
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import kernels
from .channel import complex_normal
from .errors import ConfigError
from .kernels import DENOMINATOR_FLOOR

__all__ = ["SlotSignals", "NoiseDraws", "NoiseDecomposition", "VarianceTerms",
           "draw_noise", "draw_symbols", "simulate_cycle", "cancellation_coefficient",
           "reconstruct", "decompose", "noise_variance_terms", "noise_variance",
           "noise_variance_two_source", "noise_variance_equal_noise",
           "parse_statistic", "variance_statistic"]


@dataclass(frozen=True)
class SlotSignals:
    y_dest: np.ndarray        # [..., i, j]: S_i heard at D_j
    y_relay: np.ndarray       # [..., i]: S_i heard at R
    x_relay: np.ndarray       # [...]: relay transmission
    y_relay_dest: np.ndarray  # [..., j]: relay heard at D_j


@dataclass(frozen=True)
class NoiseDraws:
    dest: np.ndarray   # [..., K + 1, K]
    relay: np.ndarray  # [..., K]

    @classmethod
    def zeros(cls, num_pairs):
        return cls(np.zeros((num_pairs + 1, num_pairs), complex),
                   np.zeros(num_pairs, complex))


@dataclass(frozen=True)
class NoiseDecomposition:
    desired: np.ndarray
    background: np.ndarray
    anc_residual: np.ndarray

    @property
    def total(self):
        return self.desired + self.background + self.anc_residual


@dataclass(frozen=True)
class VarianceTerms:
    """Additive pieces of the residual-noise variance at one destination."""
    background: np.ndarray
    relay: np.ndarray
    anc: np.ndarray
    n_floored: int

    @property
    def total(self):
        return self.background + self.relay + self.anc


def draw_noise(sigma2, num_pairs, rng, size=None):
    """AWGN for one cycle (or ``size`` cycles) at the given per-node powers."""
    lead = () if size is None else (int(size),)
    dest = complex_normal(rng, lead + (num_pairs + 1, num_pairs)) * np.sqrt(sigma2.dest)
    relay = complex_normal(rng, lead + (num_pairs,)) * np.sqrt(sigma2.relay)
    return NoiseDraws(dest, relay)


def draw_symbols(num_pairs, rng, size=None):
    """Unit-power QPSK symbols."""
    lead = () if size is None else (int(size),)
    bits = rng.integers(0, 2, size=lead + (num_pairs, 2))
    return ((2 * bits[..., 0] - 1) + 1j * (2 * bits[..., 1] - 1)) / np.sqrt(2)


def simulate_cycle(topo, alloc, h, symbols, noise, a_f):
    """
    Received signals of one full cycle.

    ``symbols`` and ``noise`` may carry leading batch dimensions that
    broadcast against ``h`` and ``a_f``.
    """
    k = topo.num_pairs
    x = np.sqrt(alloc.p_source) * np.asarray(symbols, dtype=complex)
    y_dest = topo.gain_source_dest * h.h_source_dest * x[..., :, None] + noise.dest[..., :k, :]
    y_relay = topo.gain_source_relay * h.h_source_relay * x + noise.relay
    x_relay = np.asarray(a_f) * y_relay.sum(axis=-1)
    y_relay_dest = (topo.gain_relay_dest * h.h_relay_dest * x_relay[..., None]
                    + noise.dest[..., k, :])
    return SlotSignals(y_dest, y_relay, x_relay, y_relay_dest)


def _undesired(dest, k, undesired):
    if undesired is None:
        return [i for i in range(k) if i != dest]
    if np.isscalar(undesired):
        undesired = [undesired]
    out = [int(i) for i in undesired]
    if dest in out:
        raise ValueError("the desired source cannot be cancelled")
    return out


def cancellation_coefficient(dest, src, topo, h, a_f, floor=DENOMINATOR_FLOOR):
    """
    Scale applied to the overheard ``S_src -> D_dest`` signal before it is
    subtracted from the relay signal.

    The direct-link coefficient in the denominator has its squared
    magnitude floored at ``floor`` (phase kept). Returns ``(coef, floored)``.
    """
    hd = h.h_source_dest[..., src, dest]
    mag2 = np.abs(hd) ** 2
    floored = mag2 < floor
    safe = np.where(mag2 > 0, hd, 1.0)
    hd = np.where(floored, safe / np.where(mag2 > 0, np.sqrt(mag2), 1.0) * np.sqrt(floor), hd)
    coef = (np.asarray(a_f) * topo.gain_relay_dest[dest] * h.triple_relay_dest[..., src, dest]
            * topo.gain_source_relay[src] * h.triple_source_relay[..., src, dest]
            / (topo.gain_source_dest[src, dest] * hd))
    return coef, floored


def reconstruct(dest, signals, topo, h, a_f, undesired=None, floor=DENOMINATOR_FLOOR):
    """
    Second copy of the desired signal at ``dest``: the relay signal minus the
    scaled overheard transmissions of the ``undesired`` sources (all other
    sources by default).
    """
    out = signals.y_relay_dest[..., dest]
    for i in _undesired(dest, topo.num_pairs, undesired):
        coef, _ = cancellation_coefficient(dest, i, topo, h, a_f, floor)
        out = out - coef * signals.y_dest[..., i, dest]
    return out


def decompose(dest, signals, topo, alloc, h, a_f, noise, symbols, undesired=None,
              floor=DENOMINATOR_FLOOR):
    """
    Split the reconstructed signal into desired signal, background noise and
    ANC residual.

    The residual is assembled term by term from the raw noise draws, not by
    differencing, so ``total`` agreeing with :func:`reconstruct` is a real
    check. It also carries any signal left over when a source is not
    cancelled or when the denominator floor breaks exact cancellation.
    """
    k = topo.num_pairs
    cancel = _undesired(dest, k, undesired)
    path = np.asarray(a_f) * topo.gain_relay_dest[dest] * h.h_relay_dest[..., dest]
    x = np.sqrt(alloc.p_source) * np.asarray(symbols, dtype=complex)

    desired = path * signals.y_relay[..., dest]
    background = noise.dest[..., k, dest]
    residual = np.zeros(np.broadcast(desired, background).shape, dtype=complex)
    for i in range(k):
        if i == dest:
            continue
        through_relay = path * (topo.gain_source_relay[i] * h.h_source_relay[..., i] * x[..., i]
                                + noise.relay[..., i])
        if i in cancel:
            coef, _ = cancellation_coefficient(dest, i, topo, h, a_f, floor)
            overheard = topo.gain_source_dest[i, dest] * h.h_source_dest[..., i, dest] * x[..., i]
            residual = residual + through_relay - coef * (overheard + noise.dest[..., i, dest])
        else:
            residual = residual + through_relay
    return NoiseDecomposition(desired, background, residual)


def noise_variance_terms(dest, topo, alloc, h, a_f, sigma2, floor=DENOMINATOR_FLOOR):
    """
    Closed-form variance of the residual noise at ``dest``, by term.

    ``background`` is the destination's own noise, ``relay`` the forwarded
    relay noise of the K-1 cancelled slots and ``anc`` the destination
    noise of those slots scaled by the cancellation coefficients.
    """
    k = topo.num_pairs
    s_d = sigma2.dest[dest]
    path2 = np.abs(np.asarray(a_f) * topo.gain_relay_dest[dest] * h.h_relay_dest[..., dest]) ** 2
    relay = (k - 1) * sigma2.relay * path2
    anc = 0.0
    floored = False
    for i in range(k):
        if i == dest:
            continue
        coef, hit = cancellation_coefficient(dest, i, topo, h, a_f, floor)
        anc = anc + np.abs(coef) ** 2
        floored = floored | hit
    anc = s_d * np.asarray(anc)
    background = np.full(np.shape(anc), s_d)
    return VarianceTerms(background, relay, anc, int(np.count_nonzero(floored)))


def noise_variance(dest, topo, alloc, h, a_f, sigma2, floor=DENOMINATOR_FLOOR):
    total = noise_variance_terms(dest, topo, alloc, h, a_f, sigma2, floor).total
    return float(total) if np.ndim(total) == 0 else total


def noise_variance_two_source(topo, h, a_f, sigma2, dest=0):
    """Two-pair variance written out literally for ``dest`` and the other source."""
    if topo.num_pairs != 2:
        raise ConfigError("two-source expression requires K = 2")
    j, i = dest, 1 - dest
    a = topo.alpha / 2.0
    d = topo
    h_rd, h_sr, h_sd = h.h_relay_dest[..., j], h.h_source_relay[..., i], h.h_source_dest[..., i, j]
    second = np.abs(a_f * d.d_relay_dest[j] ** -a * h_rd) ** 2
    third = np.abs(a_f * d.d_source_dest[i, j] ** a * h_rd * h_sr
                   / (d.d_relay_dest[j] ** a * d.d_source_relay[i] ** a * h_sd)) ** 2
    return sigma2.dest[j] + sigma2.relay * second + sigma2.dest[j] * third


def noise_variance_equal_noise(topo, h, a_f, sigma2_0, dest=0):
    """Two-pair variance with one noise power everywhere, in factored form."""
    j, i = dest, 1 - dest
    a = topo.alpha / 2.0
    d = topo
    second = np.abs(a_f * d.d_relay_dest[j] ** -a * h.h_relay_dest[..., j]) ** 2
    third = np.abs(a_f * d.d_source_dest[i, j] ** a * h.h_source_relay[..., i]
                   * h.h_relay_dest[..., j]
                   / (d.d_relay_dest[j] ** a * d.d_source_relay[i] ** a
                      * h.h_source_dest[..., i, j])) ** 2
    return sigma2_0 * (1.0 + second + third)


_TRIM = re.compile(r"^trimmed_mean\(\s*([0-9.eE+-]+)\s*(%?)\s*\)$")


def parse_statistic(statistic):
    """
    Turn ``"median"``, ``"trimmed_mean(1%)"`` or ``"trimmed_mean(0.01)"``
    into a callable reducing a 1-D array to a float.
    """
    if callable(statistic):
        return statistic
    s = str(statistic).strip()
    if s == "median":
        return lambda v: float(np.median(v))
    m = _TRIM.match(s)
    if m:
        p = float(m.group(1)) / (100.0 if m.group(2) else 1.0)
        if not 0 <= p < 0.5:
            raise ConfigError(f"trim proportion must be in [0, 0.5), got {p}")
        return lambda v: float(stats.trim_mean(v, p))
    raise ConfigError(f"unknown statistic {statistic!r}; use 'median' or 'trimmed_mean(p)'")


def variance_statistic(ensemble, topo, alloc, sigma2, statistic="median", dest=0,
                       return_terms=False):
    """
    Robust summary of the per-realization residual-noise variance.

    The median is the default: the ANC term involves ``1 / |h|^2`` of a
    Rayleigh coefficient, whose mean does not exist.

    With ``return_terms`` a dict is returned that also summarizes the
    relay-noise and ANC gains (noise powers excluded) with the same
    statistic, plus the floor count.
    """
    reduce = parse_statistic(statistic)
    if len(ensemble) == 0:
        raise ValueError("empty ensemble")
    if not ensemble.batch_shape:
        ensemble = ensemble.as_batch()
    res = kernels.evaluate_destination(topo, alloc, sigma2, ensemble, dest)
    value = reduce(res["variance"])
    if not return_terms:
        return value
    return {"value": value, "second_term": reduce(res["relay_gain"]),
            "third_term": reduce(res["anc_gain"]), "n_floored": res["n_floored"]}

