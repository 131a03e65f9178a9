import os
import subprocess
import sys

import numpy as np
import pytest

from mddsim import _kernels
from mddsim.channel import complex_normal

needs_numba = pytest.mark.skipif(not _kernels.USE_NUMBA, reason="numba disabled")


@needs_numba
def test_ar1_backends_agree():
    rng = np.random.default_rng(0)
    white = complex_normal(rng, (28, 10, 32, 8, 4))
    scale = np.linspace(1, 2, 8)[:, None]
    a = _kernels.ar1_trajectory(white, 0.97, scale, use_numba=True)
    b = _kernels.ar1_trajectory(white, 0.97, scale, use_numba=False)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-15)


@needs_numba
def test_zf_backends_agree():
    rng = np.random.default_rng(1)
    h = complex_normal(rng, (400, 8, 32))
    h_hat = h + complex_normal(rng, h.shape, 0.1)
    h_hat[5, 3] = h_hat[5, 2]                           # rank deficient
    h_hat[9, 1] = h_hat[9, 0] + 1e-12 * h_hat[9, 1]     # beyond the condition limit
    h_hat[11, 4] = h_hat[11, 5] + 1e-4 * h_hat[11, 4]   # ill conditioned but usable
    a = _kernels.zf_gains(h, h_hat, use_numba=True)
    b = _kernels.zf_gains(h, h_hat, use_numba=False)
    np.testing.assert_array_equal(a[2], b[2])
    assert not a[2][5] and not a[2][9] and a[2][11]
    tight = np.ones(400, dtype=bool)
    tight[11] = False
    for k in (0, 1):
        np.testing.assert_allclose(a[k][tight], b[k][tight], rtol=1e-10, atol=1e-12)
        # normal equations lose about cond^2 * eps on the ill-conditioned instance
        np.testing.assert_allclose(a[k][11], b[k][11], rtol=1e-6)


def test_zf_gains_perfect_csi():
    h = complex_normal(np.random.default_rng(2), (50, 8, 32))
    dd, leak, valid = _kernels.zf_gains(h, h)
    assert valid.all()
    assert np.max(leak) < 1e-20
    assert np.max(np.abs(dd.imag)) < 1e-12


def test_mrc_gains():
    h = complex_normal(np.random.default_rng(3), (20, 8, 32))
    sig, inter, norm = _kernels.mrc_gains(h, h)
    np.testing.assert_allclose(sig.real, norm)
    c = np.conj(h[0, 2]) @ h[0].T
    assert inter[0, 2] == pytest.approx(np.sum(np.abs(c) ** 2) - abs(c[2]) ** 2)


def test_env_flag_disables_numba():
    env = dict(os.environ, MDDSIM_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c",
                          "from mddsim import _kernels; print(_kernels.USE_NUMBA)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"
