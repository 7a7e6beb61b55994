import os
import subprocess
import sys

import numpy as np
import pytest

from ancsim import (NetworkTopology, NoisePowers, allocate, amplification_factor,
                    noise_variance_terms, sample_channels, uniform_gamma)
from ancsim import kernels
from ancsim.channel import ChannelRealization, CorrelationSpec
from ancsim.outage import snr_pair

BACKENDS = kernels.available_backends()


def random_case(rng, k, n=2000):
    topo = NetworkTopology(k, rng.uniform(100, 3000, (k, k)), rng.uniform(100, 3000, k),
                           rng.uniform(100, 3000, k), 4.0)
    alloc = allocate(2.0, np.full(k, 0.75 / k))
    s2 = NoisePowers(rng.uniform(1e-14, 1e-12, k), rng.uniform(1e-14, 1e-12))
    h = sample_channels(uniform_gamma(float(rng.uniform(0, 0.9)), k), rng, size=n)
    return topo, alloc, s2, h


def test_cython_extension_is_built():
    # the build is part of the package; a missing extension means the fallback is in use
    assert "cython" in BACKENDS, "compiled kernel missing; reinstall with Cython available"


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernel not built")
@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_backends_agree(k):
    rng = np.random.default_rng(40 + k)
    topo, alloc, s2, h = random_case(rng, k)
    for dest in range(k):
        a = kernels.evaluate_destination(topo, alloc, s2, h, dest, backend="cython")
        b = kernels.evaluate_destination(topo, alloc, s2, h, dest, backend="python")
        for key in ("a_f", "relay_gain", "anc_gain", "variance", "snr_direct", "snr_relay"):
            np.testing.assert_allclose(a[key], b[key], rtol=1e-12, atol=0, err_msg=key)
        assert a["n_floored"] == b["n_floored"]


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("k", [2, 3])
def test_kernel_matches_reference_formulas(backend, k):
    rng = np.random.default_rng(50 + k)
    topo, alloc, s2, h = random_case(rng, k, n=300)
    dest = k - 1
    out = kernels.evaluate_destination(topo, alloc, s2, h, dest, backend=backend)
    a_f = amplification_factor(alloc, topo, h, s2.relay)
    np.testing.assert_allclose(out["a_f"], a_f, rtol=1e-13, atol=0)
    terms = noise_variance_terms(dest, topo, alloc, h, a_f, s2)
    np.testing.assert_allclose(out["variance"], terms.total, rtol=1e-12, atol=0)
    np.testing.assert_allclose(out["relay_gain"] * s2.relay, terms.relay, rtol=1e-12, atol=0)
    for t in range(0, 300, 37):
        ref = snr_pair(dest, topo, alloc, h[t], a_f[t], s2)
        assert out["snr_direct"][t] == pytest.approx(ref.snr_direct, rel=1e-12, abs=0)
        assert out["snr_relay"][t] == pytest.approx(ref.snr_relay, rel=1e-12, abs=0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_floor_hits_are_counted(backend):
    topo = NetworkTopology.symmetric(2, 400.0, 200.0, 223.6, 223.6)
    alloc = allocate(2.0, [3 / 8, 3 / 8])
    sd = np.ones((4, 2, 2), complex)
    sd[1, 1, 0] = 0.0
    sd[3, 1, 0] = 1e-6
    h = ChannelRealization(sd, np.ones((4, 2), complex), np.ones((4, 2), complex))
    out = kernels.evaluate_destination(topo, alloc, NoisePowers.uniform(1e-13, 2), h, 0,
                                       backend=backend)
    assert out["n_floored"] == 2
    assert np.all(np.isfinite(out["variance"]))


@pytest.mark.parametrize("backend", BACKENDS)
def test_silent_relay(backend):
    rng = np.random.default_rng(3)
    topo, _, s2, h = random_case(rng, 2, n=50)
    alloc = allocate(2.0, [0.5, 0.5])
    out = kernels.evaluate_destination(topo, alloc, s2, h, 0, backend=backend)
    assert np.all(out["a_f"] == 0)
    np.testing.assert_array_equal(out["variance"], s2.dest[0])
    assert np.all(out["snr_relay"] == 0)


def test_env_var_forces_fallback():
    code = "import ancsim.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, ANCSIM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True)
    assert out.stdout.strip() == "python"
