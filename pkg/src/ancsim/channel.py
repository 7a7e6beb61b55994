"""
Spatially correlated Rayleigh channels.

Only the channels that feed the ANC noise at some destination are
correlated: for every ordered pair ``(i, j)`` with ``i != j`` the triple
``(h[S_i D_j], h[S_i R], h[R D_j])`` is drawn jointly with correlation
matrix ``gamma[(i, j)]``. Distinct triples are independent, and the direct
links ``h[S_j D_j]`` are independent CN(0, 1).

The correlation acts on the complex coefficients themselves: a triple is
``z = L @ w`` where ``w`` is i.i.d. CN(0, 1) and ``L @ L.T == gamma``, so
``E[z_a conj(z_b)] = gamma[a, b]``.

For K >= 3 a relay-side channel appears in several triples. Each triple
keeps its own draw (``triple_source_relay``/``triple_relay_dest``) and is
used when that undesired pair is evaluated; the canonical per-node value
comes from the triple ``(i, i+1 mod K)`` for ``h[S_i R]`` and
``(j+1 mod K, j)`` for ``h[R D_j]``. For K = 2 the two triples are
disjoint and both views coincide.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = ["CorrelationSpec", "ChannelRealization", "uniform_gamma",
           "channel_count", "cross_pairs", "sample_channels",
           "complex_normal", "PSD_TOL"]

PSD_TOL = 1e-12


def cross_pairs(num_pairs):
    """Ordered ``(source, destination)`` pairs with ``source != destination``."""
    return [(i, j) for i in range(num_pairs) for j in range(num_pairs) if i != j]


def channel_count(num_pairs):
    """Number of channels that influence the ANC noise, K(K-1) + K + K."""
    k = int(num_pairs)
    return k * (k - 1) + k + k


def _check_gamma(g, where=""):
    g = np.asarray(g, dtype=float)
    if g.shape != (3, 3):
        raise ValidationError(f"correlation matrix{where} must be 3x3, got {g.shape}")
    if not np.all(np.isfinite(g)):
        raise ValidationError(f"correlation matrix{where} has non-finite entries")
    g = 0.5 * (g + g.T)
    if not np.allclose(np.diag(g), 1.0, rtol=0, atol=1e-12):
        raise ValidationError(f"correlation matrix{where} must have a unit diagonal")
    if np.any(np.abs(g) > 1.0 + 1e-12):
        raise ValidationError(f"correlation matrix{where} entries must lie in [-1, 1]")
    if np.linalg.eigvalsh(g).min() < -PSD_TOL:
        raise ValidationError(f"correlation matrix{where} is not positive semi-definite")
    np.fill_diagonal(g, 1.0)
    return g


def _psd_factor(g):
    """Lower-triangular ``L`` with ``L @ L.T == g`` for PSD (possibly singular) ``g``."""
    # Singular matrices (rho = 1 and friends) need a diagonal nudge; the
    # largest one keeps ||L L^T - g|| below 1e-10.
    for jitter in (0.0, 1e-14, 1e-13, 1e-12, 1e-11):
        try:
            return np.linalg.cholesky(g + jitter * np.eye(g.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise ValidationError("correlation matrix is not positive semi-definite")


class CorrelationSpec:
    """
    Per-pair 3x3 correlation matrices.

    Rows and columns of ``gamma[(i, j)]`` are ordered as
    ``[h_{S_i D_j}, h_{S_i R}, h_{R D_j}]``; indices are zero-based.
    """

    def __init__(self, num_pairs, gamma):
        self.num_pairs = int(num_pairs)
        expected = set(cross_pairs(self.num_pairs))
        given = {tuple(int(x) for x in key) for key in gamma}
        if given != expected:
            missing = sorted(expected - given)
            extra = sorted(given - expected)
            raise ValidationError(
                f"gamma keys must be every (i, j) with i != j; missing={missing} extra={extra}")
        self.gamma = {}
        self._factors = {}
        for key, g in gamma.items():
            key = tuple(int(x) for x in key)
            g = _check_gamma(g, f" {key}")
            g.flags.writeable = False
            self.gamma[key] = g
            self._factors[key] = _psd_factor(g)

    def factor(self, i, j):
        return self._factors[(i, j)]

    def __repr__(self):
        return f"CorrelationSpec(num_pairs={self.num_pairs}, pairs={sorted(self.gamma)})"


def uniform_gamma(rho, num_pairs):
    """Every off-diagonal entry of every matrix equal to ``rho``."""
    rho = float(rho)
    # eigenvalues of the uniform 3x3 matrix are 1 + 2 rho and 1 - rho (twice)
    if not (-0.5 <= rho <= 1.0) or 1.0 + 2.0 * rho < -PSD_TOL:
        raise ValidationError(f"rho={rho} gives a non-PSD correlation matrix; need rho in [-0.5, 1]")
    g = np.full((3, 3), rho)
    np.fill_diagonal(g, 1.0)
    return CorrelationSpec(num_pairs, {p: g for p in cross_pairs(num_pairs)})


@dataclass(frozen=True)
class ChannelRealization:
    """
    One draw of every complex channel coefficient, optionally batched.

    Arrays may carry leading batch dimensions; the trailing dimensions are
    ``(K, K)`` for source-destination quantities and ``(K,)`` for relay
    links. The ``triple_*`` arrays hold each correlated triple's own relay
    side draw at ``[..., i, j]``; when omitted they broadcast the canonical
    vectors.
    """
    h_source_dest: np.ndarray
    h_source_relay: np.ndarray
    h_relay_dest: np.ndarray
    triple_source_relay: np.ndarray = None
    triple_relay_dest: np.ndarray = None

    def __post_init__(self):
        sd = np.asarray(self.h_source_dest, dtype=complex)
        sr = np.asarray(self.h_source_relay, dtype=complex)
        rd = np.asarray(self.h_relay_dest, dtype=complex)
        k = sd.shape[-1]
        if sd.ndim < 2 or sd.shape[-2] != k or sr.shape[-1] != k or rd.shape[-1] != k:
            raise ValidationError("inconsistent channel array shapes")
        tsr = self.triple_source_relay
        trd = self.triple_relay_dest
        tsr = (np.broadcast_to(sr[..., :, None], sd.shape) if tsr is None
               else np.asarray(tsr, dtype=complex))
        trd = (np.broadcast_to(rd[..., None, :], sd.shape) if trd is None
               else np.asarray(trd, dtype=complex))
        for name, arr in (("h_source_dest", sd), ("h_source_relay", sr),
                          ("h_relay_dest", rd), ("triple_source_relay", tsr),
                          ("triple_relay_dest", trd)):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} has non-finite entries")
            object.__setattr__(self, name, arr)

    @property
    def num_pairs(self):
        return self.h_source_dest.shape[-1]

    @property
    def batch_shape(self):
        return self.h_source_dest.shape[:-2]

    def __len__(self):
        shape = self.batch_shape
        return shape[0] if shape else 1

    def __getitem__(self, idx):
        """Select realizations along the leading batch axis."""
        if not self.batch_shape:
            raise TypeError("unbatched realization cannot be indexed")
        return ChannelRealization(self.h_source_dest[idx], self.h_source_relay[idx],
                                  self.h_relay_dest[idx], self.triple_source_relay[idx],
                                  self.triple_relay_dest[idx])

    def as_batch(self):
        """A batch of one if unbatched, else ``self``."""
        if self.batch_shape:
            return self
        return ChannelRealization(self.h_source_dest[None], self.h_source_relay[None],
                                  self.h_relay_dest[None], self.triple_source_relay[None],
                                  self.triple_relay_dest[None])

    @classmethod
    def constant(cls, num_pairs, value=1.0):
        """Every coefficient equal to ``value``; handy for noiseless checks."""
        v = complex(value)
        return cls(np.full((num_pairs, num_pairs), v), np.full(num_pairs, v),
                   np.full(num_pairs, v))


def complex_normal(rng, size):
    """I.i.d. CN(0, 1) samples."""
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return (re + 1j * im) * np.sqrt(0.5)


def sample_channels(spec, rng, size=None):
    """
    Draw correlated channel realizations.

    Parameters
    ----------
    spec : CorrelationSpec
    rng : numpy.random.Generator
        The stream is consumed in a fixed order: the K(K-1) triples (row
        major over ``(i, j)``), then the K direct links. Two specs sharing
        a seed therefore share the underlying white noise, which keeps
        comparisons across correlation levels low-variance.
    size : int, optional
        Number of realizations. ``None`` returns a single unbatched draw.

    Returns
    -------
    ChannelRealization
    """
    k = spec.num_pairs
    n = 1 if size is None else int(size)
    pairs = cross_pairs(k)

    h_sd = np.empty((n, k, k), dtype=complex)
    t_sr = np.empty((n, k, k), dtype=complex)
    t_rd = np.empty((n, k, k), dtype=complex)

    if pairs:
        w = complex_normal(rng, (n, len(pairs), 3))
        for p, (i, j) in enumerate(pairs):
            z = w[:, p, :] @ spec.factor(i, j).T
            h_sd[:, i, j] = z[:, 0]
            t_sr[:, i, j] = z[:, 1]
            t_rd[:, i, j] = z[:, 2]
    direct = complex_normal(rng, (n, k))
    idx = np.arange(k)
    h_sd[:, idx, idx] = direct

    if k == 1:
        relay = complex_normal(rng, (n, 2))
        h_sr, h_rd = relay[:, :1], relay[:, 1:]
    else:
        nxt = (idx + 1) % k
        h_sr = t_sr[:, idx, nxt]
        h_rd = t_rd[:, nxt, idx]
    t_sr[:, idx, idx] = h_sr
    t_rd[:, idx, idx] = h_rd

    real = ChannelRealization(h_sd, h_sr, h_rd, t_sr, t_rd)
    return real[0] if size is None else real
