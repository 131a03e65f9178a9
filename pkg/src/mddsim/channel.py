"""Time-varying multi-tap channels, OFDM mapping and subcarrier plans.

Each BS-antenna/user pair has an ``L``-tap time-domain channel with a uniform
power profile.  Taps evolve symbol by symbol through a first-order
autoregressive process whose coefficient is the Jakes autocorrelation at lag
one, so both descriptions of the fading stay consistent.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special

from . import _kernels

SPEED_OF_LIGHT = 3.0e8

# Beyond this argument the alternating series loses digits to cancellation.
_SERIES_LIMIT = 12.0


def bessel_j0(x):
    """Zeroth-order Bessel function of the first kind.

    Uses the ascending power series for ``|x| <= 12`` (absolute error below
    1e-12 there) and the Cephes rational approximation beyond.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) <= _SERIES_LIMIT
    xs = x[small]
    if xs.size:
        q = -(xs / 2.0) ** 2
        term = np.ones_like(xs)
        acc = np.ones_like(xs)
        for k in range(1, 80):
            term = term * q / (k * k)
            acc = acc + term
            if np.all(np.abs(term) < 1e-18):
                break
        out[small] = acc
    if (~small).any():
        out[~small] = special.j0(x[~small])
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class FadingParams:
    """Carrier, symbol timing and relative velocity of one link.

    ``velocity`` is in m/s; use :meth:`from_kmh` for the usual km/h values.
    """

    carrier_frequency: float
    symbol_duration: float
    velocity: float

    def __post_init__(self):
        if self.symbol_duration <= 0:
            raise ValueError("symbol_duration must be positive")
        if self.velocity < 0 or self.carrier_frequency < 0:
            raise ValueError("velocity and carrier_frequency must be non-negative")

    @classmethod
    def from_kmh(cls, velocity_kmh: float, carrier_frequency: float = 5e9,
                 symbol_duration: float = 66.67e-6) -> "FadingParams":
        return cls(carrier_frequency, symbol_duration, velocity_kmh / 3.6)

    @property
    def doppler(self) -> float:
        return self.velocity * self.carrier_frequency / SPEED_OF_LIGHT

    @property
    def alpha(self) -> float:
        return float(jakes_autocorrelation(1, self))


def jakes_autocorrelation(k, params: FadingParams):
    """Normalized autocorrelation ``J0(2 pi fD Ts |k|)`` at symbol lag ``k``."""
    lag = np.abs(np.asarray(k, dtype=float))
    return bessel_j0(2.0 * np.pi * params.doppler * params.symbol_duration * lag)


def path_gain(distance, exponent: float = 3.8):
    """Large-scale power gain ``distance ** -exponent`` (distance in metres)."""
    return np.asarray(distance, dtype=float) ** (-exponent)


@dataclass(frozen=True)
class ChannelStats:
    """Second-order statistics of the user channels.

    Parameters
    ----------
    betas : array_like
        Large-scale gain of every user (linear power ratio).
    n_taps : int
    n_subcarriers : int
    """

    betas: np.ndarray
    n_taps: int
    n_subcarriers: int

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=float).reshape(-1)
        if np.any(betas < 0):
            raise ValueError("large-scale gains must be non-negative")
        object.__setattr__(self, "betas", betas)

    @property
    def n_users(self) -> int:
        return self.betas.size

    @property
    def tap_variance(self) -> np.ndarray:
        """Per-tap variance ``beta_d / L`` of every user."""
        return self.betas / self.n_taps

    @property
    def r_h(self) -> np.ndarray:
        """Per-subcarrier channel variance ``beta_d / M_sum``."""
        return self.betas / self.n_subcarriers

    def r_g(self, d: int) -> np.ndarray:
        return self.tap_variance[d] * np.eye(self.n_taps)


@dataclass(frozen=True)
class TapState:
    """Time-domain taps of all antenna/user pairs at symbol ``index``.

    ``taps`` has shape ``(..., N, D, L)``; leading axes index independent
    trials.
    """

    index: int
    taps: np.ndarray


class OfdmOperator:
    """Unitary DFT restricted to the first ``L`` delay taps."""

    def __init__(self, n_subcarriers: int, n_taps: int):
        if not 1 <= n_taps <= n_subcarriers:
            raise ValueError("need 1 <= n_taps <= n_subcarriers")
        self.n_subcarriers = n_subcarriers
        self.n_taps = n_taps

    @cached_property
    def fft_matrix(self) -> np.ndarray:
        m = np.arange(self.n_subcarriers)
        return np.exp(-2j * np.pi * np.outer(m, m) / self.n_subcarriers) / np.sqrt(
            self.n_subcarriers)

    @cached_property
    def tap_selector(self) -> np.ndarray:
        return np.eye(self.n_subcarriers, self.n_taps)

    @cached_property
    def freq_response(self) -> np.ndarray:
        """``F @ Psi``; row ``m`` is the functional mapping taps to subcarrier ``m``."""
        return self.fft_matrix[:, : self.n_taps].copy()

    def psi(self, rows=None) -> np.ndarray:
        """Rows of ``F Psi`` for the given subcarrier indices (all by default)."""
        if rows is None:
            return self.freq_response
        return self.freq_response[np.asarray(rows)]


def to_frequency(taps, op: OfdmOperator) -> np.ndarray:
    """Map taps (last axis, length ``L``) to all ``M_sum`` subcarriers."""
    taps = np.asarray(taps)
    if taps.shape[-1] != op.n_taps:
        raise ValueError(f"expected {op.n_taps} taps, got {taps.shape[-1]}")
    return np.fft.fft(taps, n=op.n_subcarriers, axis=-1) / np.sqrt(op.n_subcarriers)


@dataclass(frozen=True)
class SubcarrierPlan:
    """Disjoint DL and UL subcarrier index sets (0-based)."""

    n_subcarriers: int
    dl: np.ndarray
    ul: np.ndarray

    def __post_init__(self):
        dl = np.asarray(self.dl, dtype=int).reshape(-1)
        ul = np.asarray(self.ul, dtype=int).reshape(-1)
        if np.intersect1d(dl, ul).size:
            raise ValueError("DL and UL subcarrier sets overlap")
        if dl.size + ul.size != self.n_subcarriers:
            raise ValueError("DL and UL sets must partition the band")
        both = np.concatenate([dl, ul])
        if both.size and (both.min() < 0 or both.max() >= self.n_subcarriers):
            raise ValueError("subcarrier index out of range")
        object.__setattr__(self, "dl", dl)
        object.__setattr__(self, "ul", ul)

    @classmethod
    def evenly_spaced(cls, n_subcarriers: int, n_ul: int) -> "SubcarrierPlan":
        """UL on every ``M_sum / M_ul``-th subcarrier starting at 0; DL elsewhere."""
        if n_ul == 0:
            return cls(n_subcarriers, np.arange(n_subcarriers), np.array([], dtype=int))
        if n_subcarriers % n_ul:
            raise ValueError("even UL spacing needs n_ul to divide n_subcarriers")
        ul = np.arange(0, n_subcarriers, n_subcarriers // n_ul)
        dl = np.setdiff1d(np.arange(n_subcarriers), ul)
        return cls(n_subcarriers, dl, ul)

    @property
    def is_evenly_spaced(self) -> bool:
        if self.ul.size < 2:
            return True
        gaps = np.diff(np.sort(self.ul))
        return bool(np.all(gaps == gaps[0]) and gaps[0] * self.ul.size == self.n_subcarriers)

    def indices(self, direction: str) -> np.ndarray:
        if direction == "DL":
            return self.dl
        if direction == "UL":
            return self.ul
        if direction == "all":
            return np.arange(self.n_subcarriers)
        raise ValueError(f"unknown direction {direction!r}")


def subcarrier_view(h, plan: SubcarrierPlan, direction: str) -> np.ndarray:
    """Rows of ``h`` (last axis = subcarrier) belonging to ``direction``."""
    return np.asarray(h)[..., plan.indices(direction)]


def complex_normal(rng: np.random.Generator, shape, variance=1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples of the given variance."""
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def init_taps(stats: ChannelStats, n_antennas: int, rng: np.random.Generator,
              batch: tuple = ()) -> TapState:
    """Stationary draw ``g_{n,d} ~ CN(0, beta_d / L I_L)``."""
    shape = (*batch, n_antennas, stats.n_users, stats.n_taps)
    var = stats.tap_variance[:, None]
    return TapState(0, complex_normal(rng, shape, var))


def evolve_ar1(state: TapState, params, stats: ChannelStats,
               rng: np.random.Generator) -> TapState:
    """One AR(1) step ``g[i] = alpha g[i-1] + v[i]``.

    ``params`` is a :class:`FadingParams` or the coefficient ``alpha`` itself.
    """
    alpha = params.alpha if isinstance(params, FadingParams) else float(params)
    if abs(alpha) > 1:
        raise ValueError("|alpha| must not exceed 1")
    var = (1.0 - alpha * alpha) * stats.tap_variance[:, None]
    v = complex_normal(rng, state.taps.shape, var)
    return TapState(state.index + 1, alpha * state.taps + v)


def tap_trajectory(stats: ChannelStats, n_antennas: int, n_symbols: int, alpha: float,
                   rng: np.random.Generator, batch: tuple = ()) -> np.ndarray:
    """Taps for symbols ``1..n_symbols`` stacked on axis 0.

    Output shape is ``(n_symbols, *batch, N, D, L)``.  The first symbol is a
    stationary draw; innovations are drawn in one block so the random stream
    layout does not depend on ``alpha``.
    """
    shape = (*batch, n_antennas, stats.n_users, stats.n_taps)
    white = complex_normal(rng, (n_symbols, *shape))
    scale = np.sqrt(stats.tap_variance)[:, None]
    return _kernels.ar1_trajectory(white, float(alpha), scale)
