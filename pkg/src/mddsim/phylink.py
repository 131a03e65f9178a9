"""ZF/MRC link model, residual self-interference and lower-bound rates.

Conventions: a user's DL channel row is ``h_d^H``, so the effective ZF gain
from precoder column ``f_k`` to user ``d`` is ``omega_dk = h_d^H f_k``.  The
MRC combiner of user ``d`` is its predicted UL channel.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

MIN_MC_SAMPLES = 100


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


@dataclass(frozen=True)
class PowerConfig:
    """Per-subcarrier powers and residual SI ratios.

    Attributes
    ----------
    p_dl, p_ul : float
        Transmit power per DL / UL subcarrier in watts.
    noise_var : float
        Noise power per subcarrier in watts.
    xi_bs, xi_mt : float
        Residual SI after cancellation at the BS and at the MTs (linear).
    n_dl, n_ul : int
        Subcarriers carrying DL and UL signals.
    """

    p_dl: float
    p_ul: float
    noise_var: float
    xi_bs: float
    xi_mt: float
    n_dl: int
    n_ul: int

    def __post_init__(self):
        for name in ("p_dl", "p_ul", "noise_var"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("xi_bs", "xi_mt"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")

    @classmethod
    def from_budget(cls, p_dl_dbm, p_ul_dbm, noise_dbm, sic_bs_db, sic_mt_db,
                    n_dl, n_ul) -> "PowerConfig":
        """Split total powers equally over ``n_dl`` / ``n_ul`` subcarriers."""
        return cls(float(dbm_to_watt(p_dl_dbm)) / n_dl, float(dbm_to_watt(p_ul_dbm)) / n_ul,
                   float(dbm_to_watt(noise_dbm)), float(db_to_linear(-sic_bs_db)),
                   float(db_to_linear(-sic_mt_db)), n_dl, n_ul)

    @property
    def bs_si(self) -> float:
        return bs_si_power(self.xi_bs, self.p_dl, self.n_dl)

    @property
    def mt_si(self) -> float:
        return mt_si_power(self.xi_mt, self.p_ul, self.n_ul)


def mt_si_power(xi_mt: float, p_ul: float, n_ul: int) -> float:
    """Residual SI at an MT: its own UL signal over ``n_ul`` subcarriers times ``xi_mt``."""
    return xi_mt * p_ul * n_ul


def bs_si_power(xi_bs: float, p_dl: float, n_dl: int, precoders=None) -> float:
    """Residual SI per BS antenna and UL subcarrier.

    With unit-Frobenius ZF precoders on each of the ``n_dl`` DL subcarriers the
    SI covariance is ``xi_bs p_dl n_dl I_N``.  When ``precoders`` are given
    their normalization is checked.
    """
    if precoders is not None:
        fro = np.sum(np.abs(precoders) ** 2, axis=(-2, -1))
        if not np.allclose(fro, 1.0, rtol=1e-9):
            raise ValueError("precoders must have unit Frobenius norm")
    return xi_bs * p_dl * n_dl


# ---------------------------------------------------------------------------
# Precoding


class DegenerateChannelError(np.linalg.LinAlgError):
    pass


def zf_precoder(h_pred, cond_limit: float = 1e10) -> np.ndarray:
    """ZF precoder for predicted channels ``(..., D, N)``.

    Returns ``F`` of shape ``(..., N, D)`` with ``H^H F`` diagonal and every
    column of norm ``1/sqrt(D)``.
    """
    h = np.asarray(h_pred)
    D = h.shape[-2]
    hh = np.conj(h)
    if np.any(~(np.linalg.cond(hh) <= cond_limit)):
        raise DegenerateChannelError("predicted channel matrix is rank deficient")
    gram = hh @ np.swapaxes(h, -1, -2)
    x = np.linalg.solve(gram, hh)
    f = np.conj(x) / (np.sqrt(D) * np.linalg.norm(x, axis=-1, keepdims=True))
    return np.swapaxes(f, -1, -2)


# ---------------------------------------------------------------------------
# DL effective gains


@dataclass(frozen=True)
class EffectiveGainMoments:
    """Moments of the ZF effective gains seen by a user.

    ``interference`` is the total over the other users of
    ``E|omega_dk|^2``; ``leakage`` is the per-user value.
    """

    mean: np.ndarray
    variance: np.ndarray
    leakage: np.ndarray
    interference: np.ndarray


def effective_gain_moments(sigma_h, sigma_v, n_antennas: int, n_users: int):
    """Large-array approximation of the ZF gain moments from CSI quality."""
    sigma_h = np.asarray(sigma_h, dtype=float)
    sigma_v = np.asarray(sigma_v, dtype=float)
    N, D = n_antennas, n_users
    mean = np.sqrt((N - D + 1) / D) * np.sqrt(np.maximum(sigma_h, 0.0))
    var = (0.25 * sigma_h + sigma_v) / D
    leak = sigma_v / D
    return EffectiveGainMoments(mean, var, leak, (D - 1) * leak)


def dl_rate_from_moments(moments: EffectiveGainMoments, p_dl: float, noise_var: float,
                         si_power=0.0) -> np.ndarray:
    """Use-and-then-forget DL bound from effective gain moments."""
    sig = p_dl * np.abs(moments.mean) ** 2
    den = p_dl * moments.variance + p_dl * moments.interference + si_power + noise_var
    return np.log2(1.0 + sig / den)


def dl_rate_closed(sigma_h, r_h, n_antennas: int, n_users: int, p_dl: float,
                   noise_var: float, mt_si=0.0) -> np.ndarray:
    """Closed-form DL bound.

    ``mt_si`` is the residual SI power at the MT (zero for TDD).
    """
    sigma_h = np.asarray(sigma_h, dtype=float)
    sigma_v = np.asarray(r_h, dtype=float) - sigma_h
    N, D = n_antennas, n_users
    num = p_dl * (N - D + 1) * sigma_h
    den = 0.25 * p_dl * sigma_h + p_dl * D * sigma_v + D * mt_si + D * noise_var
    return np.log2(1.0 + num / den)


@dataclass
class DlGainSums:
    """Running sums of ZF effective gains, one slot per user."""

    n: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    leak: np.ndarray
    discarded: int = 0

    @classmethod
    def zeros(cls, n_users: int) -> "DlGainSums":
        return cls(np.zeros(n_users, dtype=np.int64), np.zeros(n_users, dtype=complex),
                   np.zeros(n_users), np.zeros(n_users))

    def add(self, h_true, h_pred) -> None:
        """Accumulate instances ``(K, D, N)`` of true and predicted channels."""
        dd, leak, valid = _kernels.zf_gains(h_true, h_pred)
        self.discarded += int(np.count_nonzero(~valid))
        self.n += int(np.count_nonzero(valid))
        self.s1 += dd[valid].sum(axis=0)
        self.s2 += (np.abs(dd[valid]) ** 2).sum(axis=0)
        self.leak += leak[valid].sum(axis=0)

    def merge(self, other: "DlGainSums") -> None:
        self.n += other.n
        self.s1 += other.s1
        self.s2 += other.s2
        self.leak += other.leak
        self.discarded += other.discarded

    def moments(self) -> EffectiveGainMoments:
        if np.any(self.n < MIN_MC_SAMPLES):
            raise ValueError(f"at least {MIN_MC_SAMPLES} Monte Carlo samples are required, "
                             f"got {int(self.n.min())}")
        mean = self.s1 / self.n
        var = np.maximum(self.s2 / self.n - np.abs(mean) ** 2, 0.0)
        inter = self.leak / self.n
        return EffectiveGainMoments(mean, var, inter / max(len(self.n) - 1, 1), inter)


def dl_rate_mc(h_true, h_pred, p_dl: float, noise_var: float, si_power=0.0):
    """Monte Carlo DL bound per user from instances ``(K, D, N)``.

    Returns ``(rates, discarded)``; fewer than 100 usable instances raise.
    A prediction that is identically zero carries no CSI and yields rate 0.
    """
    if not np.any(h_pred):
        return np.zeros(np.shape(h_true)[-2]), 0
    acc = DlGainSums.zeros(np.shape(h_true)[-2])
    acc.add(np.asarray(h_true), np.asarray(h_pred))
    return dl_rate_from_moments(acc.moments(), p_dl, noise_var, si_power), acc.discarded


# ---------------------------------------------------------------------------
# UL with MRC


def ul_rate_closed(theta_dd, betas, n_antennas: int, n_subcarriers: int, p_ul: float,
                   noise_var: float, bs_si=0.0) -> np.ndarray:
    """Closed-form UL bound; ``theta_dd`` has the user axis last."""
    betas = np.asarray(betas, dtype=float)
    inter = p_ul * (betas.sum() - betas) / n_subcarriers
    num = p_ul * n_antennas * np.asarray(theta_dd, dtype=float)
    return np.log2(1.0 + num / (inter + bs_si + noise_var))


@dataclass
class UlGainSums:
    """Running sums of the MRC moments, one slot per user."""

    n: np.ndarray
    sig: np.ndarray
    inter: np.ndarray
    norm: np.ndarray

    @classmethod
    def zeros(cls, n_users: int) -> "UlGainSums":
        return cls(np.zeros(n_users, dtype=np.int64), np.zeros(n_users, dtype=complex),
                   np.zeros(n_users), np.zeros(n_users))

    def add(self, h_true, h_pred) -> None:
        sig, inter, norm = _kernels.mrc_gains(h_true, h_pred)
        self.n += sig.shape[0]
        self.sig += sig.sum(axis=0)
        self.inter += inter.sum(axis=0)
        self.norm += norm.sum(axis=0)

    def merge(self, other: "UlGainSums") -> None:
        self.n += other.n
        self.sig += other.sig
        self.inter += other.inter
        self.norm += other.norm

    def rate(self, p_ul: float, noise_var: float, si_power=0.0) -> np.ndarray:
        if np.any(self.n < MIN_MC_SAMPLES):
            raise ValueError(f"at least {MIN_MC_SAMPLES} Monte Carlo samples are required, "
                             f"got {int(self.n.min())}")
        num = p_ul * np.abs(self.sig / self.n) ** 2
        den = p_ul * self.inter / self.n + (si_power + noise_var) * self.norm / self.n
        with np.errstate(invalid="ignore", divide="ignore"):
            snr = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
        return np.log2(1.0 + snr)


def ul_rate_mc(h_true, h_pred, p_ul: float, noise_var: float, si_power=0.0) -> np.ndarray:
    """Monte Carlo UL bound per user from instances ``(K, D, N)``."""
    acc = UlGainSums.zeros(np.shape(h_true)[-2])
    acc.add(np.asarray(h_true), np.asarray(h_pred))
    return acc.rate(p_ul, noise_var, si_power)


# ---------------------------------------------------------------------------
# Frame averaging


def frame_average(schedule, dl_rates=None, ul_rates=None, n_subcarriers: int = 96,
                  dl_sizes=None, ul_sizes=None) -> float:
    """Sum rate averaged over the frame and the whole band.

    ``dl_rates`` / ``ul_rates`` map a 1-based symbol index to the per-user
    rates (summed over users here) of one subcarrier of that class;
    ``dl_sizes`` / ``ul_sizes`` map the index to the number of subcarriers in
    use.  Every active data symbol must have an entry.
    """
    T = schedule.n_symbols
    if T == 0:
        return 0.0
    dl_rates = dl_rates or {}
    ul_rates = ul_rates or {}
    total = 0.0
    for s in schedule.symbols:
        if s.dl == "data":
            if s.index not in dl_rates:
                raise KeyError(f"missing DL rate at symbol {s.index}")
            total += s.weight * dl_sizes[s.index] * float(np.sum(dl_rates[s.index]))
        if s.ul == "data":
            if s.index not in ul_rates:
                raise KeyError(f"missing UL rate at symbol {s.index}")
            total += s.weight * ul_sizes[s.index] * float(np.sum(ul_rates[s.index]))
    return total / (T * n_subcarriers)
