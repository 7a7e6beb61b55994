"""
Monte Carlo estimation of outage under selection combining, plus the
brute-force signal-path oracles used to validate the closed forms.

Trials are cut into fixed-size blocks. Block ``b`` draws from
``SeedSequence(seed, spawn_key=(b,))``, so a result depends only on
``(seed, n_trials, block_size)`` and never on how blocks are spread over
worker processes.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .anc_core import (draw_noise, draw_symbols, noise_variance, reconstruct,
                       simulate_cycle)
from .channel import ChannelRealization, sample_channels
from .errors import ValidationError
from .power import amplification_factor

__all__ = ["OutageResult", "SnrPair", "outage_events", "snr_pair", "select_branch", "estimate_outage",
           "block_rng", "sample_ensemble", "residual_variance_oracle",
           "empirical_relay_snr", "relay_power_oracle", "DEFAULT_BLOCK_SIZE"]

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 1 << 14
Z95 = 1.959963984540054


@dataclass(frozen=True)
class OutageResult:
    p_out: float
    ci_halfwidth: float
    n_trials: int
    n_floored: int
    seed: int

    @property
    def interval(self):
        """95% interval clipped to [0, 1]."""
        return (max(self.p_out - self.ci_halfwidth, 0.0),
                min(self.p_out + self.ci_halfwidth, 1.0))


@dataclass(frozen=True)
class SnrPair:
    snr_direct: float
    snr_relay: float

    @property
    def selected(self):
        return select_branch(self.snr_direct, self.snr_relay)


def select_branch(snr_direct, snr_relay):
    """Selection combining; ties go to the direct branch."""
    return snr_direct if snr_direct >= snr_relay else snr_relay


def snr_pair(dest, topo, alloc, h, a_f, sigma2):
    """
    Branch SNRs at ``dest`` for a single realization.

    The relay branch's signal is the desired component of the reconstructed
    signal; its noise is the full residual-noise variance.
    """
    j = dest
    s_d = sigma2.dest[j]
    direct = alloc.p_source[j] * topo.gain_source_dest[j, j] ** 2 * abs(h.h_source_dest[j, j]) ** 2
    snr_d = direct / s_d if s_d > 0 else (np.inf if direct > 0 else 0.0)
    desired = (abs(a_f * topo.gain_relay_dest[j] * h.h_relay_dest[j]) ** 2
               * alloc.p_source[j] * topo.gain_source_relay[j] ** 2 * abs(h.h_source_relay[j]) ** 2)
    if desired > 0:
        var = noise_variance(j, topo, alloc, h, a_f, sigma2)
        snr_r = desired / var if var > 0 else np.inf
    else:
        snr_r = 0.0
    return SnrPair(float(snr_d), float(snr_r))


def block_rng(seed, block):
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(block),)))


def _blocks(n_trials, block_size):
    n_blocks = -(-n_trials // block_size)
    return [(b, min(block_size, n_trials - b * block_size)) for b in range(n_blocks)]


def sample_ensemble(spec, n, seed, block_size=DEFAULT_BLOCK_SIZE):
    """``n`` realizations drawn block by block, identical to what the outage engine sees."""
    parts = [sample_channels(spec, block_rng(seed, b), size=m)
             for b, m in _blocks(int(n), block_size)]
    return ChannelRealization(*(np.concatenate([getattr(p, f) for p in parts])
                                for f in ("h_source_dest", "h_source_relay", "h_relay_dest",
                                          "triple_source_relay", "triple_relay_dest")))


def outage_events(topo, alloc, sigma2, h, beta, dest=0, direct_only=False):
    """
    Boolean outage indicator for each realization in the batch ``h``,
    together with the number of realizations that hit the denominator floor.
    """
    res = kernels.evaluate_destination(topo, alloc, sigma2, h.as_batch(), dest)
    snr_d = res["snr_direct"]
    if direct_only:
        snr = snr_d
    else:
        snr = np.where(snr_d >= res["snr_relay"], snr_d, res["snr_relay"])
    return snr < beta, res["n_floored"]


def _outage_block(args):
    topo, alloc, spec, sigma2, beta, seed, block, size, dest, direct_only = args
    h = sample_channels(spec, block_rng(seed, block), size=size)
    events, floored = outage_events(topo, alloc, sigma2, h, beta, dest, direct_only)
    return int(np.count_nonzero(events)), floored


def estimate_outage(topo, alloc, corr_spec, sigma2, beta, n_trials, seed, dest=0,
                    workers=1, block_size=DEFAULT_BLOCK_SIZE, direct_only=False):
    """
    Fraction of correlated-channel draws whose selection-combined SNR at
    ``dest`` falls below ``beta`` (linear).

    Parameters
    ----------
    beta : float
        Linear SNR threshold.
    workers : int
        Process count. Results do not depend on it.
    direct_only : bool
        Ignore the relay branch; used to check that combining helps.
    """
    if n_trials < 1:
        raise ValidationError("n_trials must be >= 1")
    if not beta > 0:
        raise ValidationError("beta must be positive")
    if corr_spec.num_pairs != topo.num_pairs or alloc.num_pairs != topo.num_pairs:
        raise ValidationError("topology, power allocation and correlation disagree on K")
    tasks = [(topo, alloc, corr_spec, sigma2, beta, seed, b, m, dest, direct_only)
             for b, m in _blocks(int(n_trials), block_size)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_outage_block, tasks))
    else:
        results = [_outage_block(t) for t in tasks]
    outages = sum(r[0] for r in results)
    floored = sum(r[1] for r in results)
    p = outages / n_trials
    ci = Z95 * np.sqrt(p * (1.0 - p) / n_trials)
    logger.debug("outage: %d/%d below beta, %d floored", outages, n_trials, floored)
    return OutageResult(float(p), float(ci), int(n_trials), int(floored), int(seed))


def _noise_batches(n, chunk):
    done = 0
    while done < n:
        m = min(chunk, n - done)
        yield m
        done += m


def residual_variance_oracle(dest, undesired, topo, alloc, h, sigma2, n_noise_draws, seed,
                             chunk=1 << 17):
    """
    Empirical variance of ``reconstruct - desired component`` at ``dest``
    with channels and symbols (all ones) held fixed and only the AWGN
    redrawn. ``undesired=None`` cancels every other source.
    """
    k = topo.num_pairs
    rng = np.random.default_rng(seed)
    a_f = amplification_factor(alloc, topo, h, sigma2.relay)
    symbols = np.ones(k, dtype=complex)
    path = a_f * topo.gain_relay_dest[dest] * h.h_relay_dest[dest]
    count, mean, m2 = 0, 0j, 0.0
    for m in _noise_batches(int(n_noise_draws), chunk):
        noise = draw_noise(sigma2, k, rng, size=m)
        sig = simulate_cycle(topo, alloc, h, symbols, noise, a_f)
        r = reconstruct(dest, sig, topo, h, a_f, undesired) - path * sig.y_relay[..., dest]
        # Chan et al. pairwise update of (count, mean, sum of squared deviations)
        b_mean = r.mean()
        b_m2 = float(np.sum(np.abs(r - b_mean) ** 2))
        delta = b_mean - mean
        tot = count + m
        mean = mean + delta * m / tot
        m2 = m2 + b_m2 + abs(delta) ** 2 * count * m / tot
        count = tot
    return m2 / (count - 1) if count > 1 else 0.0


def empirical_relay_snr(dest, topo, alloc, h, sigma2, n_draws, seed, chunk=1 << 17):
    """Sample desired-signal power over sample residual-noise power on the relay branch."""
    k = topo.num_pairs
    rng = np.random.default_rng(seed)
    a_f = amplification_factor(alloc, topo, h, sigma2.relay)
    path = a_f * topo.gain_relay_dest[dest] * h.h_relay_dest[dest]
    sig_pow = noise_pow = 0.0
    for m in _noise_batches(int(n_draws), chunk):
        symbols = draw_symbols(k, rng, size=m)
        noise = draw_noise(sigma2, k, rng, size=m)
        sig = simulate_cycle(topo, alloc, h, symbols, noise, a_f)
        wanted = (path * topo.gain_source_relay[dest] * h.h_source_relay[dest]
                  * np.sqrt(alloc.p_source[dest]) * symbols[..., dest])
        r = reconstruct(dest, sig, topo, h, a_f) - path * sig.y_relay[..., dest]
        sig_pow += float(np.sum(np.abs(wanted) ** 2))
        noise_pow += float(np.sum(np.abs(r) ** 2))
    return sig_pow / noise_pow if noise_pow > 0 else np.inf


def relay_power_oracle(topo, alloc, h, sigma2, n_draws, seed, chunk=1 << 17):
    """Sample mean of ``|X_R|^2`` over random QPSK symbols and relay noise."""
    k = topo.num_pairs
    rng = np.random.default_rng(seed)
    a_f = amplification_factor(alloc, topo, h, sigma2.relay)
    total = 0.0
    for m in _noise_batches(int(n_draws), chunk):
        symbols = draw_symbols(k, rng, size=m)
        noise = draw_noise(sigma2, k, rng, size=m)
        sig = simulate_cycle(topo, alloc, h, symbols, noise, a_f)
        total += float(np.sum(np.abs(sig.x_relay) ** 2))
    return total / n_draws
