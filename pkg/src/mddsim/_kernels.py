"""Hot inner loops of the Monte Carlo simulator.

Every kernel has a numba implementation and a pure-numpy one with identical
semantics.  Numba is used when importable unless ``MDDSIM_DISABLE_NUMBA`` is
set to a non-empty value other than ``0``.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_flag = os.environ.get("MDDSIM_DISABLE_NUMBA", "")
USE_NUMBA = numba is not None and _flag in ("", "0")


# ---------------------------------------------------------------------------
# AR(1) tap trajectories


def _ar1_numpy(white, alpha, scale):
    out = np.empty_like(white)
    innov = np.sqrt(1.0 - alpha * alpha)
    out[0] = scale * white[0]
    for t in range(1, white.shape[0]):
        out[t] = alpha * out[t - 1] + innov * scale * white[t]
    return out


def _ar1_loop(white, alpha, scale):
    T, P, D, L = white.shape
    out = np.empty_like(white)
    innov = np.sqrt(1.0 - alpha * alpha)
    for p in range(P):
        for d in range(D):
            s = scale[d]
            for l in range(L):
                out[0, p, d, l] = s * white[0, p, d, l]
                for t in range(1, T):
                    out[t, p, d, l] = alpha * out[t - 1, p, d, l] + innov * s * white[t, p, d, l]
    return out


# ---------------------------------------------------------------------------
# ZF effective gains


ZF_COND_LIMIT = 1e10      # amplitude condition number beyond which ZF is discarded
_WELL_CONDITIONED = 1e12  # bound on cond(Gram) under which normal equations are safe


def _zf_numpy(h_true, h_pred):
    K, D, N = h_true.shape
    g_hat = np.conj(h_pred)
    sv = np.linalg.svd(g_hat, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = sv[:, 0] / sv[:, -1]
    valid = (sv[:, -1] > 0) & (cond <= ZF_COND_LIMIT)
    well = valid & (cond * cond <= _WELL_CONDITIONED)
    # rows of x are the conjugated unnormalized precoder columns
    x = np.zeros_like(g_hat)
    if well.any():
        gram = g_hat[well] @ np.conj(np.swapaxes(g_hat[well], -1, -2))
        x[well] = np.linalg.solve(gram, g_hat[well])
    ill = valid & ~well
    if ill.any():
        x[ill] = np.conj(np.swapaxes(np.linalg.pinv(g_hat[ill]), -1, -2))
    norms = np.linalg.norm(x, axis=-1)
    norms[~valid] = 1.0
    f = np.conj(x) / (np.sqrt(D) * norms[..., None])
    omega = np.conj(h_true) @ np.swapaxes(f, -1, -2)
    dd = np.diagonal(omega, axis1=-2, axis2=-1).copy()
    leak = np.sum(np.abs(omega) ** 2, axis=-1) - np.abs(dd) ** 2
    return dd, leak, valid


def _zf_loop(h_true, h_pred):
    # Cholesky of the Gram matrix when trace(G) * trace(G^-1), an upper bound
    # on cond(G), is small; otherwise an SVD decides and a pseudo-inverse is used.
    K, D, N = h_true.shape
    dd = np.zeros((K, D), dtype=np.complex128)
    leak = np.zeros((K, D))
    valid = np.zeros(K, dtype=np.bool_)
    gram = np.empty((D, D), dtype=np.complex128)
    chol = np.zeros((D, D), dtype=np.complex128)
    linv = np.zeros((D, D), dtype=np.complex128)
    ginv = np.empty((D, D), dtype=np.complex128)
    x = np.empty((D, N), dtype=np.complex128)
    g_hat = np.empty((D, N), dtype=np.complex128)
    for k in range(K):
        tr = 0.0
        for a in range(D):
            for b in range(a, D):
                acc = 0j
                for n in range(N):
                    acc += np.conj(h_pred[k, a, n]) * h_pred[k, b, n]
                gram[a, b] = acc
                gram[b, a] = np.conj(acc)
            tr += gram[a, a].real
        ok = True
        for j in range(D):
            s = gram[j, j].real
            for q in range(j):
                s -= chol[j, q].real ** 2 + chol[j, q].imag ** 2
            if not s > 0.0:
                ok = False
                break
            djj = np.sqrt(s)
            chol[j, j] = djj
            for a in range(j + 1, D):
                acc = gram[a, j]
                for q in range(j):
                    acc -= chol[a, q] * np.conj(chol[j, q])
                chol[a, j] = acc / djj
        if ok:
            for j in range(D):
                for a in range(D):
                    linv[a, j] = 0.0
                linv[j, j] = 1.0 / chol[j, j]
                for a in range(j + 1, D):
                    acc = 0j
                    for q in range(j, a):
                        acc -= chol[a, q] * linv[q, j]
                    linv[a, j] = acc / chol[a, a]
            tr_inv = 0.0
            for a in range(D):
                for b in range(D):
                    acc = 0j
                    for q in range(max(a, b), D):
                        acc += np.conj(linv[q, a]) * linv[q, b]
                    ginv[a, b] = acc
                tr_inv += ginv[a, a].real
            ok = tr * tr_inv <= _WELL_CONDITIONED
        if ok:
            for b in range(D):
                for n in range(N):
                    acc = 0j
                    for a in range(D):
                        acc += ginv[b, a] * np.conj(h_pred[k, a, n])
                    x[b, n] = acc
        else:
            for a in range(D):
                for n in range(N):
                    g_hat[a, n] = np.conj(h_pred[k, a, n])
            sv = np.linalg.svd(g_hat, full_matrices=False)[1]
            if not sv[D - 1] > 0.0 or sv[0] / sv[D - 1] > ZF_COND_LIMIT:
                continue
            pinv = np.linalg.pinv(g_hat)
            for b in range(D):
                for n in range(N):
                    x[b, n] = np.conj(pinv[n, b])
        valid[k] = True
        for b in range(D):
            nrm = 0.0
            for n in range(N):
                nrm += x[b, n].real ** 2 + x[b, n].imag ** 2
            c = 1.0 / np.sqrt(D * nrm)
            for a in range(D):
                acc = 0j
                for n in range(N):
                    acc += np.conj(h_true[k, a, n]) * np.conj(x[b, n])
                w = acc * c
                if a == b:
                    dd[k, a] = w
                else:
                    leak[k, a] += w.real ** 2 + w.imag ** 2
    return dd, leak, valid


if USE_NUMBA:
    _ar1_impl = numba.njit(cache=True)(_ar1_loop)
    _zf_impl = numba.njit(cache=True)(_zf_loop)
else:
    _ar1_impl = None
    _zf_impl = None


def ar1_trajectory(white, alpha, scale, use_numba=None):
    """Run ``g[t] = alpha g[t-1] + sqrt(1 - alpha^2) scale w[t]`` along axis 0.

    ``white`` has shape ``(T, ..., D, L)`` with unit-variance entries and
    ``scale`` broadcasts as ``(D, 1)``; the first slice is ``scale * w[0]``.
    """
    use_numba = USE_NUMBA if use_numba is None else use_numba and USE_NUMBA
    white = np.asarray(white, dtype=np.complex128)
    scale = np.asarray(scale, dtype=float)
    if not use_numba:
        return _ar1_numpy(white, alpha, scale)
    T, D, L = white.shape[0], white.shape[-2], white.shape[-1]
    flat = np.ascontiguousarray(white.reshape(T, -1, D, L))
    out = _ar1_impl(flat, float(alpha), np.ascontiguousarray(scale.reshape(D)))
    return out.reshape(white.shape)


def zf_gains(h_true, h_pred, use_numba=None):
    """Effective gains of normalized ZF precoding built from ``h_pred``.

    Parameters
    ----------
    h_true, h_pred : ndarray, shape (K, D, N)
        True and predicted channel vectors of the ``D`` users for ``K``
        independent instances.  The DL row of user ``d`` is ``h[d].conj()``.

    Returns
    -------
    dd : ndarray (K, D), complex
        ``omega_dd = h_d^H f_d`` with ``||f_d|| = 1/sqrt(D)``.
    leak : ndarray (K, D)
        ``sum_{k != d} |h_d^H f_k|^2``.
    valid : ndarray (K,), bool
        False where the predicted channel matrix is rank deficient or its
        condition number exceeds 1e10; those rows are zero.
    """
    use_numba = USE_NUMBA if use_numba is None else use_numba and USE_NUMBA
    h_true = np.ascontiguousarray(h_true, dtype=np.complex128)
    h_pred = np.ascontiguousarray(h_pred, dtype=np.complex128)
    if use_numba:
        return _zf_impl(h_true, h_pred)
    dd, leak, valid = _zf_numpy(h_true, h_pred)
    dd[~valid] = 0
    leak[~valid] = 0
    return dd, leak, valid


def mrc_gains(h_true, h_pred):
    """MRC statistics with combiner ``w_d = h_pred[d]``.

    Returns ``w_d^H h_d`` (complex), ``sum_{k != d} |w_d^H h_k|^2`` and
    ``||w_d||^2``, each of shape ``(K, D)``.
    """
    c = np.conj(h_pred) @ np.swapaxes(h_true, -1, -2)
    sig = np.diagonal(c, axis1=-2, axis2=-1).copy()
    interf = np.sum(np.abs(c) ** 2, axis=-1) - np.abs(sig) ** 2
    norm = np.sum(np.abs(h_pred) ** 2, axis=-1)
    return sig, interf, norm
