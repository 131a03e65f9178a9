"""Reference implementations written independently of the package.

They share no code with ``mddsim``: covariances are assembled element by
element from the process definitions and solved with scipy.
"""
import mpmath
import numpy as np
import scipy.linalg as sla


def bessel_j0(x: float) -> float:
    return float(mpmath.besselj(0, x))


def unitary_dft(M: int) -> np.ndarray:
    F = np.empty((M, M), dtype=complex)
    for p in range(M):
        for q in range(M):
            F[p, q] = np.exp(-2j * np.pi * p * q / M) / np.sqrt(M)
    return F


def stacked_wp(ages, alpha, tap_var, L, p_ul, gain, noise_var, si=None):
    """Tap-domain LMMSE predictor from the joint covariance of all symbols.

    The unknowns are the taps at the target time and at every observation
    time; observation ``q`` is ``sqrt(p) * gain * g(t_q) + noise``.  Returns
    ``(V, Upsilon)``.
    """
    tau = len(ages)
    si = np.zeros(tau) if si is None else np.asarray(si, dtype=float)
    times = [0] + [-a for a in ages]
    n = len(times)
    C = np.zeros((n * L, n * L))
    for a in range(n):
        for b in range(n):
            C[a * L:(a + 1) * L, b * L:(b + 1) * L] = (
                alpha ** abs(times[a] - times[b]) * tap_var * np.eye(L))
    H = np.zeros((tau * L, n * L))
    for q in range(tau):
        H[q * L:(q + 1) * L, (q + 1) * L:(q + 2) * L] = np.sqrt(p_ul) * gain * np.eye(L)
    Nz = np.diag(np.repeat(gain * (noise_var + si), L))
    Cyy = H @ C @ H.T + Nz
    Cty = C[:L, :] @ H.T
    V = sla.solve(Cyy, Cty.T, assume_a="pos").T
    return V, V @ Cty.T


def wp_mse(V, ages, alpha, tap_var, L, p_ul, gain, noise_var, si=None):
    """Exact MSE ``E||g - V y||^2`` of an arbitrary tap-domain predictor ``V``."""
    tau = len(ages)
    si = np.zeros(tau) if si is None else np.asarray(si, dtype=float)
    Cyy = np.zeros((tau * L, tau * L))
    for a in range(tau):
        for b in range(tau):
            Cyy[a * L:(a + 1) * L, b * L:(b + 1) * L] = (
                p_ul * gain ** 2 * alpha ** abs(ages[a] - ages[b]) * tap_var * np.eye(L))
    Cyy += np.diag(np.repeat(gain * (noise_var + si), L))
    Cgy = np.hstack([np.sqrt(p_ul) * gain * alpha ** a * tap_var * np.eye(L) for a in ages])
    E = tap_var * np.eye(L) - V @ Cgy.conj().T - Cgy @ V.conj().T + V @ Cyy @ V.conj().T
    return float(np.trace(E).real)


def stacked_ddwp(ages, alpha, r_h, symbols, p_ul, noise_var, si=None):
    """Per-subcarrier LMMSE of all users' channels from scalar observations.

    Observation ``q`` is ``sqrt(p) sum_d x_d[q] h_d(t_q) + noise``.
    Returns ``(V, Theta)`` with ``V`` of shape ``(D, tau)``.
    """
    x = np.asarray(symbols)
    D, tau = x.shape
    si = np.zeros(tau) if si is None else np.asarray(si, dtype=float)
    times = [0] + [-a for a in ages]
    n = len(times)
    # unknown vector ordered (time, user)
    C = np.zeros((n * D, n * D))
    for a in range(n):
        for b in range(n):
            for d in range(D):
                C[a * D + d, b * D + d] = alpha ** abs(times[a] - times[b]) * r_h[d]
    H = np.zeros((tau, n * D), dtype=complex)
    for q in range(tau):
        for d in range(D):
            H[q, (q + 1) * D + d] = np.sqrt(p_ul) * x[d, q]
    Cyy = H @ C @ H.conj().T + np.diag(noise_var + si)
    Cty = C[:D, :] @ H.conj().T
    V = sla.solve(Cyy, Cty.conj().T, assume_a="her").conj().T
    return V, V @ Cty.conj().T


def mt_si_mc(xi_mt, p_ul, n_ul, draws, rng):
    """Empirical power of ``sqrt(xi) h_SI sqrt(p) sum_m x_m`` with unit-energy QAM ``x``."""
    lv = np.array([-3, -1, 1, 3]) / np.sqrt(10)
    x = lv[rng.integers(0, 4, (draws, n_ul))] + 1j * lv[rng.integers(0, 4, (draws, n_ul))]
    h = (rng.standard_normal(draws) + 1j * rng.standard_normal(draws)) / np.sqrt(2)
    z = np.sqrt(xi_mt) * h * np.sqrt(p_ul) * x.sum(axis=1)
    return float(np.mean(np.abs(z) ** 2))


def bs_si_mc(xi_bs, p_dl, precoders, draws, rng):
    """Empirical covariance of ``sqrt(xi) H_SI sum_m sqrt(p) F_m s_m``.

    ``precoders`` has shape ``(M, N, D)``; ``H_SI`` is iid CN(0, 1) per draw.
    """
    M, N, D = precoders.shape
    cov = np.zeros((N, N), dtype=complex)
    done = 0
    while done < draws:
        b = min(2000, draws - done)
        s = (rng.standard_normal((b, M, D)) + 1j * rng.standard_normal((b, M, D))) / np.sqrt(2)
        u = np.einsum("mnd,bmd->bn", precoders, s) * np.sqrt(p_dl)
        H = (rng.standard_normal((b, N, N)) + 1j * rng.standard_normal((b, N, N))) / np.sqrt(2)
        z = np.sqrt(xi_bs) * np.einsum("bij,bj->bi", H, u)
        cov += z.T @ z.conj()
        done += b
    return cov / draws
