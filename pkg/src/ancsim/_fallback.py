"""Vectorized numpy implementation of the per-trial kernels."""

import numpy as np


def evaluate_destination(g_sd, g_sr, g_rd, p_source, p_relay, sigma2_dest,
                         sigma2_relay, h_sd, h_sr, h_rd, t_sr, t_rd, j, floor):
    """
    Per-realization noise terms and branch SNRs at destination ``j``.

    Channel arrays carry a leading batch axis of length ``n``. Returns a
    tuple ``(a_f, relay_gain, anc_gain, variance, snr_direct, snr_relay,
    n_floored)``; ``relay_gain`` already includes the ``K - 1`` factor and
    both gains exclude the noise powers.
    """
    k = g_sr.shape[0]
    den = (np.abs(h_sr) ** 2 * (p_source * g_sr ** 2)).sum(axis=1) + k * sigma2_relay
    if p_relay == 0:
        a_f = np.zeros(den.shape)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            a_f = np.where(den > 0, np.sqrt(p_relay / den), np.nan)

    a2 = a_f * a_f
    relay_path = a2 * g_rd[j] ** 2 * np.abs(h_rd[:, j]) ** 2
    relay_gain = (k - 1) * relay_path

    others = np.array([i for i in range(k) if i != j], dtype=np.intp)
    hd2 = np.abs(h_sd[:, others, j]) ** 2
    hit = hd2 < floor
    hd2 = np.maximum(hd2, floor)
    num = (g_rd[j] ** 2 * np.abs(t_rd[:, others, j]) ** 2
           * g_sr[others] ** 2 * np.abs(t_sr[:, others, j]) ** 2)
    anc_gain = a2 * (num / (g_sd[others, j] ** 2 * hd2)).sum(axis=1)
    n_floored = int(np.count_nonzero(hit.any(axis=1)))

    variance = sigma2_dest * (1.0 + anc_gain) + sigma2_relay * relay_gain
    with np.errstate(divide="ignore", invalid="ignore"):
        snr_direct = p_source[j] * g_sd[j, j] ** 2 * np.abs(h_sd[:, j, j]) ** 2 / sigma2_dest
        desired = relay_path * p_source[j] * g_sr[j] ** 2 * np.abs(h_sr[:, j]) ** 2
        snr_relay = np.where(desired > 0, desired / variance, 0.0)
    snr_direct = np.where(np.isnan(snr_direct), 0.0, snr_direct)
    return a_f, relay_gain, anc_gain, variance, snr_direct, snr_relay, n_floored
