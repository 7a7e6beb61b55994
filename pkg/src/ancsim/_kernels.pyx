# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-trial kernels; same contract as ``ancsim._fallback``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, NAN, INFINITY

cnp.import_array()


cdef inline double abs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


def evaluate_destination(const double[:, ::1] g_sd, const double[::1] g_sr, const double[::1] g_rd,
                         const double[::1] p_source, double p_relay, double sigma2_dest,
                         double sigma2_relay,
                         const double complex[:, :, ::1] h_sd, const double complex[:, ::1] h_sr,
                         const double complex[:, ::1] h_rd,
                         const double complex[:, :, ::1] t_sr, const double complex[:, :, ::1] t_rd,
                         Py_ssize_t j, double floor):
    cdef Py_ssize_t n = h_sd.shape[0]
    cdef Py_ssize_t k = g_sr.shape[0]
    cdef Py_ssize_t t, i
    cdef double den, a2, relay_path, anc, hd2, desired, var, sd
    cdef bint hit
    cdef Py_ssize_t n_floored = 0

    a_f_arr = np.empty(n)
    relay_arr = np.empty(n)
    anc_arr = np.empty(n)
    var_arr = np.empty(n)
    snr_d_arr = np.empty(n)
    snr_r_arr = np.empty(n)
    cdef double[::1] a_f = a_f_arr
    cdef double[::1] relay_gain = relay_arr
    cdef double[::1] anc_gain = anc_arr
    cdef double[::1] variance = var_arr
    cdef double[::1] snr_direct = snr_d_arr
    cdef double[::1] snr_relay = snr_r_arr

    cdef double grd2 = g_rd[j] * g_rd[j]
    cdef double gdir2 = g_sd[j, j] * g_sd[j, j]
    cdef double gsr_j2 = g_sr[j] * g_sr[j]

    with nogil:
        for t in range(n):
            den = k * sigma2_relay
            for i in range(k):
                den = den + p_source[i] * g_sr[i] * g_sr[i] * abs2(h_sr[t, i])
            if p_relay == 0:
                a_f[t] = 0.0
            elif den > 0:
                a_f[t] = sqrt(p_relay / den)
            else:
                a_f[t] = NAN
            a2 = a_f[t] * a_f[t]

            relay_path = a2 * grd2 * abs2(h_rd[t, j])
            relay_gain[t] = (k - 1) * relay_path

            anc = 0.0
            hit = False
            for i in range(k):
                if i == j:
                    continue
                hd2 = abs2(h_sd[t, i, j])
                if hd2 < floor:
                    hd2 = floor
                    hit = True
                anc = anc + (grd2 * abs2(t_rd[t, i, j]) * g_sr[i] * g_sr[i]
                             * abs2(t_sr[t, i, j])) / (g_sd[i, j] * g_sd[i, j] * hd2)
            anc_gain[t] = a2 * anc
            if hit:
                n_floored += 1

            var = sigma2_dest * (1.0 + anc_gain[t]) + sigma2_relay * relay_gain[t]
            variance[t] = var

            sd = p_source[j] * gdir2 * abs2(h_sd[t, j, j])
            if sigma2_dest > 0:
                snr_direct[t] = sd / sigma2_dest
            elif sd > 0:
                snr_direct[t] = INFINITY
            else:
                snr_direct[t] = 0.0

            desired = relay_path * p_source[j] * gsr_j2 * abs2(h_sr[t, j])
            if desired > 0:
                snr_relay[t] = desired / var if var > 0 else INFINITY
            else:
                snr_relay[t] = 0.0

    return (a_f_arr, relay_arr, anc_arr, var_arr, snr_d_arr, snr_r_arr,
            int(n_floored))
