"""Frequency-domain pilot sequences and MMSE estimation of the tap channels."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelStats, OfdmOperator, SubcarrierPlan


class PilotDesignError(ValueError):
    pass


@dataclass(frozen=True)
class PilotBook:
    """Per-user pilot sequences on a set of UL subcarriers.

    Attributes
    ----------
    subcarriers : ndarray (M_ul,)
        Indices carrying the pilots.
    sequences : ndarray (D, M_ul)
        Unit-modulus pilot of each user.
    spacing : int
        Phase-ramp step ``floor(M_ul / D)``.
    projections : ndarray (D, M_ul, L)
        ``diag(x_d) Phi F Psi`` of each user.
    n_subcarriers : int
        Size of the whole band.
    """

    subcarriers: np.ndarray
    sequences: np.ndarray
    spacing: int
    projections: np.ndarray
    n_subcarriers: int

    @property
    def n_users(self) -> int:
        return self.sequences.shape[0]

    @property
    def n_pilot_subcarriers(self) -> int:
        return self.subcarriers.size

    @property
    def gain(self) -> float:
        """``M_ul / M_sum``, the diagonal of ``P_d^H P_d``."""
        return self.n_pilot_subcarriers / self.n_subcarriers


def pilot_sequences(n_users: int, n_pilot_subcarriers: int) -> tuple:
    """Phase-ramp pilots ``x_d[m] = exp(j 2 pi m (d-1) s / M_ul)`` and ``s``."""
    spacing = n_pilot_subcarriers // n_users
    m = np.arange(n_pilot_subcarriers)
    d = np.arange(n_users)
    seq = np.exp(2j * np.pi * np.outer(d, m) * spacing / n_pilot_subcarriers)
    return seq, spacing


def build_pilot_book(n_users: int, ul, op: OfdmOperator, tol: float = 1e-12) -> PilotBook:
    """Assemble pilots and projection operators on the UL subcarriers ``ul``.

    ``ul`` is a :class:`SubcarrierPlan` (its UL set is used) or an index
    array.  Raises :class:`PilotDesignError` when the users cannot be made
    orthogonal in the tap domain.
    """
    idx = ul.ul if isinstance(ul, SubcarrierPlan) else np.asarray(ul, dtype=int)
    m_ul = idx.size
    if m_ul < n_users * op.n_taps:
        raise PilotDesignError(
            f"{m_ul} UL subcarriers cannot separate {n_users} users x {op.n_taps} taps")
    seq, spacing = pilot_sequences(n_users, m_ul)
    a = op.psi(idx)
    proj = seq[:, :, None] * a[None]
    gram = np.einsum("dml,kmq->dklq", proj.conj(), proj)
    target = np.zeros_like(gram)
    for d in range(n_users):
        target[d, d] = (m_ul / op.n_subcarriers) * np.eye(op.n_taps)
    err = np.max(np.abs(gram - target))
    if err > tol:
        raise PilotDesignError(f"pilot projections not orthogonal (max error {err:.2e}); "
                               "UL subcarriers must be evenly spaced")
    return PilotBook(idx, seq, spacing, proj, op.n_subcarriers)


def pilot_signal(taps, book: PilotBook, p_ul: float, noise=None) -> np.ndarray:
    """Received pilot block ``y_n = sqrt(p_ul) sum_d P_d g_{n,d} + noise``.

    ``taps`` has shape ``(..., N, D, L)``; the result ``(..., N, M_ul)``.
    """
    y = np.sqrt(p_ul) * np.einsum("dml,...ndl->...nm", book.projections, taps)
    if noise is not None:
        y = y + noise
    return y


def project_observation(y, book: PilotBook) -> np.ndarray:
    """Tap-domain observations ``P_d^H y_n`` with shape ``(..., N, D, L)``."""
    y = np.asarray(y)
    D, M, L = book.projections.shape
    proj = book.projections.conj().transpose(1, 0, 2).reshape(M, D * L)
    return (y @ proj).reshape(*y.shape[:-1], D, L)


def mmse_gain(betas, n_taps: int, book_gain: float, p_ul: float, noise_var: float,
              si_power=0.0) -> np.ndarray:
    """Scalar MMSE gain applied to the projected observation of each user.

    ``book_gain`` is ``M_ul / M_sum`` and ``si_power`` the residual SI power
    per UL subcarrier active at the pilot symbol.
    """
    tap_var = np.asarray(betas, dtype=float) / n_taps
    num = np.sqrt(p_ul) * book_gain * tap_var
    den = p_ul * book_gain ** 2 * tap_var + book_gain * (si_power + noise_var)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return out


def mmse_estimate(y_tilde, stats: ChannelStats, book: PilotBook, p_ul: float,
                  noise_var: float, si_power=0.0) -> np.ndarray:
    """MMSE tap estimate from projected observations ``(..., N, D, L)``."""
    c = mmse_gain(stats.betas, stats.n_taps, book.gain, p_ul, noise_var, si_power)
    return c[:, None] * y_tilde


def mmse_error(stats: ChannelStats, book: PilotBook, p_ul: float, noise_var: float,
               si_power=0.0) -> np.ndarray:
    """Analytic ``E||g_hat - g||^2`` per user and antenna."""
    c = mmse_gain(stats.betas, stats.n_taps, book.gain, p_ul, noise_var, si_power)
    return stats.betas * (1.0 - c * np.sqrt(p_ul) * book.gain)
