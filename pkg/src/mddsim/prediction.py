"""Wiener channel predictors.

Two predictors are provided.  The pilot-driven Wiener predictor (WP) works on
the tap-domain observations produced by the pilot projections and forecasts
the taps of a later symbol.  The decision-directed variant (DD-WP) works per
UL subcarrier on received data symbols, treating the transmitted symbols as
known, and forecasts the frequency-domain channel of every user; taps are then
recovered by least squares so the DL subcarriers can be predicted as well.

Observation ages are symbol distances between an observation and the target
symbol, listed most recent first.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import ChannelStats, OfdmOperator

COND_LIMIT = 1e12


class IllConditionedWarning(RuntimeWarning):
    pass


def _check_ages(ages) -> tuple:
    ages = tuple(int(a) for a in ages)
    if not ages:
        raise ValueError("at least one observation is required")
    if any(a < 0 for a in ages) or any(b <= a for a, b in zip(ages, ages[1:])):
        raise ValueError(f"ages must be non-negative and strictly increasing, got {ages}")
    return ages


def _warn_conditioning(mat, what: str):
    c = np.linalg.cond(mat)
    if np.any(~np.isfinite(c)) or np.any(c > COND_LIMIT):
        warnings.warn(f"{what} condition number {np.max(c):.3g} exceeds {COND_LIMIT:.0e}",
                      IllConditionedWarning, stacklevel=3)


def correlation_matrix(ages, alpha: float) -> np.ndarray:
    """``alpha ** |t_p - t_q|`` for every pair of observation ages."""
    t = np.asarray(ages, dtype=float)
    return alpha ** np.abs(t[:, None] - t[None, :])


# ---------------------------------------------------------------------------
# Pilot-driven WP


@dataclass(frozen=True)
class WpWeights:
    """Wiener predictor of every user for one set of observation ages.

    Attributes
    ----------
    ages : tuple of int
        Age of each observation, most recent first.
    weights : ndarray (D, L, L*tau)
        ``V_d`` applied to the stacked projected observations.
    upsilon : ndarray (D, L, L)
        Second moment of the predicted taps.
    r_g : ndarray (D, L, L)
        Tap covariance of every user.
    """

    ages: tuple
    weights: np.ndarray
    upsilon: np.ndarray
    r_g: np.ndarray

    @property
    def order(self) -> int:
        return len(self.ages)

    def error_cov(self) -> np.ndarray:
        return self.r_g - self.upsilon

    def sigma_h(self, op: OfdmOperator, rows=None) -> np.ndarray:
        """Predicted-channel variance ``psi_m Upsilon psi_m^H``, shape ``(D, M_rows)``."""
        psi = op.psi(rows)
        return np.real(np.einsum("ml,dlk,mk->dm", psi, self.upsilon, psi.conj()))

    def sigma_v(self, op: OfdmOperator, rows=None) -> np.ndarray:
        r_h = np.real(np.einsum("ml,dlk,mk->dm", op.psi(rows), self.r_g, op.psi(rows).conj()))
        return r_h - self.sigma_h(op, rows)


def wp_weights(ages, alpha: float, stats: ChannelStats, p_ul: float, pilot_gain: float,
               noise_var: float, si_profile=None) -> WpWeights:
    """Wiener predictor weights for observations of the given ages.

    Parameters
    ----------
    ages : sequence of int
        Strictly increasing ages of the pilot observations.
    alpha : float
        AR(1) coefficient.
    stats : ChannelStats
    p_ul : float
        Pilot power per subcarrier.
    pilot_gain : float
        ``M_ul / M_sum`` of the pilot book.
    noise_var : float
        Noise power per subcarrier.
    si_profile : sequence of float, optional
        Residual SI power per UL subcarrier at each observation.
    """
    ages = _check_ages(ages)
    si = np.zeros(len(ages)) if si_profile is None else np.asarray(si_profile, dtype=float)
    if si.shape != (len(ages),) or np.any(si < 0):
        raise ValueError("si_profile must hold one non-negative entry per observation")
    v, ups = _wp_cached(ages, float(alpha), tuple(stats.tap_variance), stats.n_taps,
                        float(p_ul), float(pilot_gain), float(noise_var), tuple(si))
    eye = np.eye(stats.n_taps)
    r_g = stats.tap_variance[:, None, None] * eye
    return WpWeights(ages, v, ups, r_g)


@lru_cache(maxsize=4096)
def _wp_cached(ages, alpha, tap_var, n_taps, p_ul, gain, noise_var, si):
    tau = len(ages)
    eye = np.eye(n_taps)
    delta = alpha ** np.asarray(ages, dtype=float)
    xi = correlation_matrix(ages, alpha)
    noise = np.diag(np.repeat(gain * (noise_var + np.asarray(si)), n_taps))
    vs, us = [], []
    for var in tap_var:
        r_g = var * eye
        r_gy = np.sqrt(p_ul) * gain * np.kron(delta[None, :], r_g)
        r_y = np.kron(xi, p_ul * gain ** 2 * r_g) + noise
        if var == 0:
            v = np.zeros((n_taps, n_taps * tau))
        else:
            _warn_conditioning(r_y, "observation covariance")
            v = np.linalg.solve(r_y.T, r_gy.T).T
        vs.append(v)
        us.append(v @ r_gy.conj().T)
    v = np.array(vs)
    u = np.array(us)
    u = 0.5 * (u + np.conj(np.swapaxes(u, -1, -2)))
    v.setflags(write=False)
    u.setflags(write=False)
    return v, u


def hold_weights(age: int, alpha: float, stats: ChannelStats, p_ul: float,
                 pilot_gain: float, noise_var: float, si_power: float = 0.0) -> WpWeights:
    """Use the latest MMSE estimate as is, with no prediction.

    ``weights`` is the MMSE gain.  ``upsilon`` describes the part of the
    target channel that the held estimate captures; ZF precoding does not
    depend on the estimate's scale, so this equals the order-1 predictor at
    the same age.
    """
    wp = wp_weights((age,), alpha, stats, p_ul, pilot_gain, noise_var, (si_power,))
    var = stats.tap_variance
    den = p_ul * pilot_gain ** 2 * var + pilot_gain * (noise_var + si_power)
    c = np.where(den > 0, np.sqrt(p_ul) * pilot_gain * var / np.where(den > 0, den, 1.0), 0.0)
    v = c[:, None, None] * np.eye(stats.n_taps)
    return WpWeights((age,), v, wp.upsilon, wp.r_g)


def stack_observations(obs) -> np.ndarray:
    """Stack per-observation arrays ``(..., D, L)`` (most recent first) to ``(..., D, L*tau)``."""
    return np.concatenate(list(obs), axis=-1)


def wp_predict(observations, weights: WpWeights) -> np.ndarray:
    """Apply the predictor to stacked observations ``(..., D, L*tau)``."""
    y = np.asarray(observations)
    if y.shape[-1] != weights.weights.shape[-1] or y.shape[-2] != weights.weights.shape[0]:
        raise ValueError(f"observation stack {y.shape[-2:]} does not match weights "
                         f"{weights.weights.shape[::2]}")
    return (weights.weights @ y[..., None])[..., 0]


# ---------------------------------------------------------------------------
# Decision-directed WP


@dataclass(frozen=True)
class DdWpWeights:
    """DD-WP weights for a batch of UL subcarriers.

    ``weights`` has shape ``(..., D, tau)`` and ``theta`` ``(..., D, D)``;
    leading axes follow the symbol batch passed in.
    """

    ages: tuple
    weights: np.ndarray
    theta: np.ndarray

    @property
    def order(self) -> int:
        return len(self.ages)

    def theta_diag(self) -> np.ndarray:
        return np.real(np.diagonal(self.theta, axis1=-2, axis2=-1))


def ddwp_blocks(ages, alpha: float, r_h, symbols):
    """Building blocks ``A, B, C, Q`` of the DD-WP covariances.

    ``symbols`` is the ``(D, tau)`` matrix of transmitted symbols.  Returns
    ``A = I_D kron delta^T`` (D x D tau), ``B`` (tau x D tau) with
    ``B[q, (d, q)] = x_d[q]``, ``C = I_D kron xi`` and ``Q = diag(R_h) kron I``.
    """
    ages = _check_ages(ages)
    tau = len(ages)
    x = np.asarray(symbols)
    D = x.shape[0]
    delta = alpha ** np.asarray(ages, dtype=float)
    a = np.kron(np.eye(D), delta[None, :])
    b = np.zeros((tau, D * tau), dtype=complex)
    for d in range(D):
        b[:, d * tau:(d + 1) * tau] = np.diag(x[d])
    c = np.kron(np.eye(D), correlation_matrix(ages, alpha))
    q = np.kron(np.diag(np.asarray(r_h, dtype=float)), np.eye(tau))
    return a, b, c, q


def ddwp_reference(ages, alpha: float, r_h, symbols, p_ul: float, noise_var: float,
                   si_profile=None) -> DdWpWeights:
    """Single-subcarrier DD-WP assembled literally from the Kronecker blocks."""
    ages = _check_ages(ages)
    a, b, c, q = ddwp_blocks(ages, alpha, r_h, symbols)
    si = np.zeros(len(ages)) if si_profile is None else np.asarray(si_profile, dtype=float)
    r_hs = np.sqrt(p_ul) * a @ q @ b.conj().T
    r_s = p_ul * b @ c @ q @ b.conj().T + np.diag(noise_var + si)
    _warn_conditioning(r_s, "DD observation covariance")
    v = np.linalg.solve(r_s.T, r_hs.T).T
    return DdWpWeights(ages, v, v @ r_hs.conj().T)


def ddwp_weights(ages, alpha: float, stats: ChannelStats, symbols, p_ul: float,
                 noise_var: float, si_profile=None, check: bool = True) -> DdWpWeights:
    """Batched DD-WP weights.

    Parameters
    ----------
    ages : sequence of int
        Ages of the UL observations, most recent first.
    alpha : float
    stats : ChannelStats
    symbols : ndarray (..., D, tau)
        Unit-energy symbols sent at each observation (pilots or data).
    p_ul : float
    noise_var : float
    si_profile : sequence of float, optional
        Residual SI power at each observation.
    check : bool
        Warn when an observation covariance is ill conditioned.
    """
    ages = _check_ages(ages)
    tau = len(ages)
    x = np.asarray(symbols)
    if x.shape[-1] != tau or x.shape[-2] != stats.n_users:
        raise ValueError(f"symbols must have shape (..., {stats.n_users}, {tau})")
    si = np.zeros(tau) if si_profile is None else np.asarray(si_profile, dtype=float)
    r_h = stats.r_h
    delta = alpha ** np.asarray(ages, dtype=float)
    xi = correlation_matrix(ages, alpha)
    r_hs = np.sqrt(p_ul) * (r_h[:, None] * delta[None, :]) * np.conj(x)
    xr = x * r_h[:, None]
    r_s = p_ul * (np.swapaxes(xr, -1, -2) @ np.conj(x)) * xi
    r_s = r_s + np.diag(noise_var + si)
    if check:
        _warn_conditioning(r_s, "DD observation covariance")
    # V = R_hs R_s^-1  <=>  R_s^H V^H = R_hs^H and R_s is Hermitian
    vh = np.linalg.solve(r_s, np.conj(np.swapaxes(r_hs, -1, -2)))
    v = np.conj(np.swapaxes(vh, -1, -2))
    theta = v @ np.conj(np.swapaxes(r_hs, -1, -2))
    theta = 0.5 * (theta + np.conj(np.swapaxes(theta, -1, -2)))
    return DdWpWeights(ages, v, theta)


def ddwp_predict(observations, weights: DdWpWeights) -> np.ndarray:
    """Predicted UL channels ``(..., N, D)`` from received symbols ``(..., N, tau)``.

    ``weights`` must broadcast against the leading axes of ``observations``
    with the antenna axis removed.
    """
    return np.asarray(observations) @ np.swapaxes(weights.weights, -1, -2)


# ---------------------------------------------------------------------------
# Taps and DL subcarriers from predicted UL subcarriers


def recovery_operator(op: OfdmOperator, ul) -> np.ndarray:
    """Least-squares map ``J`` (L x M_ul) from UL subcarrier channels to taps."""
    a = op.psi(ul)
    if a.shape[0] < op.n_taps:
        raise ValueError(f"{a.shape[0]} UL subcarriers cannot resolve {op.n_taps} taps")
    return np.linalg.solve(a.conj().T @ a, a.conj().T)


def dd_time_domain(h_ul, op: OfdmOperator, ul) -> np.ndarray:
    """Taps ``J h_UL`` from predicted UL subcarrier channels (last axis)."""
    j = recovery_operator(op, ul)
    return np.einsum("lm,...m->...l", j, h_ul)


def gamma_cov(theta_diag, beta: float, op: OfdmOperator, ul) -> np.ndarray:
    """Covariance of one user's predicted UL subcarrier channels.

    ``theta_diag`` holds that user's predicted-channel variance on each UL
    subcarrier (last axis).  Off-diagonal entries are the true channel
    covariance between subcarriers.
    """
    t = np.asarray(theta_diag, dtype=float)
    a = op.psi(ul)
    off = (beta / op.n_taps) * a @ a.conj().T
    g = np.broadcast_to(off, t.shape[:-1] + off.shape).copy()
    idx = np.arange(a.shape[0])
    g[..., idx, idx] = t
    return g


def dd_dl_prediction(g_check, op: OfdmOperator, rows) -> np.ndarray:
    """Channels on subcarriers ``rows`` from recovered taps (last axis)."""
    return np.einsum("ml,...l->...m", op.psi(rows), g_check)


def dd_variance_from_gamma(gamma, op: OfdmOperator, ul, rows) -> np.ndarray:
    """``psi_m J Gamma J^H psi_m^H`` for every subcarrier in ``rows``."""
    pj = op.psi(rows) @ recovery_operator(op, ul)
    return np.real(np.einsum("mk,...kl,ml->...m", pj, gamma, pj.conj()))


def dd_variance(theta_diag, betas, op: OfdmOperator, ul, rows) -> np.ndarray:
    """Same quantity as :func:`dd_variance_from_gamma` without forming Gamma.

    Because ``J`` inverts the UL mapping, the off-diagonal part of Gamma
    contributes ``R_h (1 - sum_k |(psi_m J)_k|^2)`` and the diagonal part a
    weighted sum of the ``theta`` values.  ``theta_diag`` is ``(..., D, M_ul)``.
    """
    pj = op.psi(rows) @ recovery_operator(op, ul)
    w = np.abs(pj) ** 2
    r_h = np.asarray(betas, dtype=float) / op.n_subcarriers
    base = r_h[:, None] * (1.0 - w.sum(axis=1))[None, :]
    return base + np.einsum("mk,...dk->...dm", w, theta_diag)
