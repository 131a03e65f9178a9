"""Monte Carlo engine: run one frame schedule over many channel trajectories.

Every trial draws a fresh frame-long tap trajectory and its own noise and UL
data symbols from a random stream derived from ``(seed, trial)``, so results
do not depend on how trials are grouped into chunks or spread over workers.
Large-scale gains come from one user drop per run and are shared by all
trials, which keeps the Monte Carlo moments conditional on the geometry like
the closed-form expressions.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .channel import OfdmOperator, SubcarrierPlan, complex_normal
from .config import SystemConfig
from .frames import FrameSchedule, build_schedule
from .phylink import (MIN_MC_SAMPLES, DlGainSums, UlGainSums, db_to_linear, dbm_to_watt,
                      dl_rate_closed, dl_rate_from_moments, ul_rate_closed)
from .pilot import build_pilot_book, project_observation
from .prediction import (dd_variance, ddwp_predict, ddwp_weights, hold_weights,
                         recovery_operator, stack_observations, wp_predict, wp_weights)

log = logging.getLogger(__name__)

_QAM_LEVELS = np.array([-3.0, -1.0, 1.0, 3.0]) / np.sqrt(10.0)
_GEOMETRY_KEY = (1,)


def trial_rngs(seed: int, trial: int, n: int = 4) -> list:
    """Independent generators for one trial: taps, noise, UL data, spare."""
    ss = np.random.SeedSequence(seed, spawn_key=(0, trial))
    return [np.random.default_rng(c) for c in ss.spawn(n)]


def geometry_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=_GEOMETRY_KEY))


def qam16(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-energy 16-QAM symbols."""
    idx = rng.integers(0, 4, size=(2, *shape))
    return _QAM_LEVELS[idx[0]] + 1j * _QAM_LEVELS[idx[1]]


@dataclass(frozen=True)
class SymbolLink:
    """Bands, powers and SI levels in force at one symbol."""

    dl_band: np.ndarray | None
    p_dl: float
    mt_si: float
    ul_band: np.ndarray | None
    p_ul: float
    bs_si: float


@dataclass(frozen=True)
class LinkPlan:
    schedule: FrameSchedule
    links: tuple
    ul_band: np.ndarray
    p_ul: float
    noise_var: float


def link_plan(config: SystemConfig, schedule: FrameSchedule) -> LinkPlan:
    """Resolve the subcarriers, per-subcarrier powers and SI of every symbol."""
    M = config.n_subcarriers
    p_dl_total = float(dbm_to_watt(config.p_dl_dbm))
    p_ul_total = float(dbm_to_watt(config.p_ul_dbm))
    noise = float(dbm_to_watt(config.noise_dbm))
    everything = np.arange(M)
    plan = SubcarrierPlan.evenly_spaced(M, config.n_ul)
    sic_bs, sic_mt = config.sic_bs_db, config.sic_mt_db
    if schedule.duplex == "IBFD":
        sic_bs -= config.ibfd_sic_penalty_db
        sic_mt -= config.ibfd_sic_penalty_db
    xi_bs = float(db_to_linear(-sic_bs))
    xi_mt = float(db_to_linear(-sic_mt))
    tdd = schedule.duplex == "TDD"
    ul_band = everything if tdd else plan.ul
    p_ul = p_ul_total / ul_band.size

    links = []
    for s in schedule.symbols:
        dl_band = None
        p_dl = 0.0
        if s.dl != "off":
            dl_band = everything if s.dl_band == "all" else plan.dl
            p_dl = p_dl_total / dl_band.size
        ul_on = s.ul != "off"
        mt_si = 0.0 if tdd or dl_band is None or not ul_on else xi_mt * p_ul * ul_band.size
        bs_si = 0.0 if tdd or dl_band is None or not ul_on else xi_bs * p_dl * dl_band.size
        links.append(SymbolLink(dl_band, p_dl, mt_si, ul_band if ul_on else None, p_ul, bs_si))
    return LinkPlan(schedule, tuple(links), ul_band, p_ul, noise)


@dataclass
class SymbolSums:
    """Per-symbol running sums over trials (one slot per user)."""

    dl: DlGainSums | None = None
    ul: UlGainSums | None = None
    dl_closed: np.ndarray | None = None
    ul_closed: np.ndarray | None = None
    err: np.ndarray | None = None
    power: np.ndarray | None = None
    trials: int = 0

    def merge(self, other: "SymbolSums") -> None:
        for name in ("dl", "ul"):
            mine, theirs = getattr(self, name), getattr(other, name)
            if theirs is not None:
                if mine is None:
                    setattr(self, name, theirs)
                else:
                    mine.merge(theirs)
        for name in ("dl_closed", "ul_closed", "err", "power"):
            mine, theirs = getattr(self, name), getattr(other, name)
            if theirs is not None:
                setattr(self, name, theirs.copy() if mine is None else mine + theirs)
        self.trials += other.trials


@dataclass
class SymbolResult:
    index: int
    weight: float
    n_dl: int
    n_ul: int
    dl_mc: np.ndarray | None = None
    dl_closed: np.ndarray | None = None
    ul_mc: np.ndarray | None = None
    ul_closed: np.ndarray | None = None
    nmse: np.ndarray | None = None

    def sum_rate(self, kind: str, n_subcarriers: int) -> float:
        """Rate summed over users and active subcarriers, per band subcarrier."""
        total = 0.0
        dl = self.dl_mc if kind == "mc" else self.dl_closed
        ul = self.ul_mc if kind == "mc" else self.ul_closed
        if dl is not None:
            total += self.n_dl * float(np.sum(dl))
        if ul is not None:
            total += self.n_ul * float(np.sum(ul))
        return total / n_subcarriers


@dataclass
class SchemeResult:
    scheme: str
    velocity_kmh: float
    frame_length: int
    trials: int
    seed: int
    alpha: float
    betas: np.ndarray
    n_subcarriers: int
    symbols: dict = field(default_factory=dict)
    discarded: int = 0

    def frame_average(self, kind: str = "mc") -> float:
        total = sum(r.weight * r.sum_rate(kind, self.n_subcarriers)
                    for r in self.symbols.values())
        return total / self.frame_length

    def series(self, what: str, users: str = "sum") -> dict:
        """``{i: value}`` for ``rate_mc``/``rate_closed`` sum rates or pooled ``nmse``."""
        out = {}
        for i, r in sorted(self.symbols.items()):
            if what == "rate_mc":
                out[i] = r.sum_rate("mc", self.n_subcarriers)
            elif what == "rate_closed":
                out[i] = r.sum_rate("closed", self.n_subcarriers)
            elif what == "nmse" and r.nmse is not None:
                out[i] = float(np.mean(r.nmse))
        return out


class _Context:
    """Everything a worker needs to simulate a chunk of trials."""

    def __init__(self, config: SystemConfig, schedule: FrameSchedule, alpha: float,
                 betas: np.ndarray, seed: int):
        self.config = config
        self.schedule = schedule
        self.alpha = float(alpha)
        self.seed = int(seed)
        self.stats = config.stats(betas)
        self.op = OfdmOperator(config.n_subcarriers, config.n_taps)
        self.plan = link_plan(config, schedule)
        self.book = build_pilot_book(config.n_users, self.plan.ul_band, self.op)
        self.J = recovery_operator(self.op, self.plan.ul_band)
        self.ul_syms = schedule.ul_active
        self._closed_dl = {}

    def link(self, i: int) -> SymbolLink:
        return self.plan.links[i - 1]

    def si_profile(self, observations) -> tuple:
        return tuple(self.link(j).bs_si for j in observations)

    def wp_for(self, i: int, pred):
        ages = tuple(i - j for j in pred.observations)
        si = self.si_profile(pred.observations)
        gain = self.plan.ul_band.size / self.config.n_subcarriers
        if pred.kind == "hold":
            return hold_weights(ages[0], self.alpha, self.stats, self.plan.p_ul, gain,
                                self.plan.noise_var, si[0])
        return wp_weights(ages, self.alpha, self.stats, self.plan.p_ul, gain,
                          self.plan.noise_var, si)

    def closed_dl_wp(self, i: int, weights) -> np.ndarray:
        if i not in self._closed_dl:
            link = self.link(i)
            sig = weights.sigma_h(self.op, link.dl_band)
            rate = dl_rate_closed(sig, self.stats.r_h[:, None], self.config.n_antennas,
                                  self.config.n_users, link.p_dl, self.plan.noise_var,
                                  link.mt_si)
            self._closed_dl[i] = rate.mean(axis=1)
        return self._closed_dl[i]


def _band_channels(op: OfdmOperator, taps, band) -> np.ndarray:
    """Frequency response ``(B, N, D, M_band)`` of taps ``(B, N, D, L)``."""
    return taps @ op.psi(band).T


def _instances(h) -> np.ndarray:
    """``(B, N, D, M)`` channels to ZF/MRC instances ``(B*M, D, N)``."""
    B, N, D, M = h.shape
    return np.ascontiguousarray(h.transpose(0, 3, 2, 1).reshape(B * M, D, N))


def _simulate_chunk(ctx: _Context, trials) -> dict:
    cfg = ctx.config
    sched = ctx.schedule
    T = sched.n_symbols
    N, D = cfg.n_antennas, cfg.n_users
    ul_band = ctx.plan.ul_band
    Mu = ul_band.size
    B = len(trials)
    p_ul = ctx.plan.p_ul
    noise = ctx.plan.noise_var

    white, noises, datas = [], [], []
    n_ul = len(ctx.ul_syms)
    for t in trials:
        r_taps, r_noise, r_data, _ = trial_rngs(ctx.seed, t)
        white.append(complex_normal(r_taps, (T, N, D, cfg.n_taps)))
        noises.append(complex_normal(r_noise, (n_ul, N, Mu)))
        datas.append(qam16(r_data, (n_ul, D, Mu)))
    white = np.stack(white, axis=1)
    noises = np.stack(noises, axis=1)
    datas = np.stack(datas, axis=1)
    taps = _kernels.ar1_trajectory(white, ctx.alpha, np.sqrt(ctx.stats.tap_variance)[:, None])

    # received UL signals on every UL-active symbol
    symbols, received, projected = {}, {}, {}
    for k, j in enumerate(ctx.ul_syms):
        link = ctx.link(j)
        if sched[j].ul == "pilot":
            x = np.broadcast_to(ctx.book.sequences, (B, D, Mu))
        else:
            x = datas[k]
        h = _band_channels(ctx.op, taps[j - 1], ul_band)
        y = np.sqrt(p_ul) * (h * x[:, None]).sum(axis=2)
        y = y + np.sqrt(noise + link.bs_si) * noises[k]
        symbols[j] = x
        received[j] = y
        if sched[j].ul == "pilot":
            projected[j] = project_observation(y, ctx.book)

    out = {}
    for s in sched.symbols:
        pred = s.predictor
        if pred.kind == "none" or s.weight == 0:
            continue
        i = s.index
        link = ctx.link(i)
        g = taps[i - 1]
        acc = SymbolSums(trials=B)
        if pred.kind in ("wp", "hold"):
            w = ctx.wp_for(i, pred)
            obs = stack_observations(projected[j] for j in pred.observations)
            g_pred = wp_predict(obs, w)
            if s.dl != "off":
                acc.dl_closed = B * ctx.closed_dl_wp(i, w)
        elif pred.kind == "ddwp":
            ages = tuple(i - j for j in pred.observations)
            x = np.stack([symbols[j] for j in pred.observations], axis=-1)      # B D Mu tau
            y = np.stack([received[j] for j in pred.observations], axis=-1)     # B N Mu tau
            w = ddwp_weights(ages, ctx.alpha, ctx.stats, x.transpose(0, 2, 1, 3), p_ul,
                             noise, ctx.si_profile(pred.observations), check=False)
            h_ul = ddwp_predict(y.transpose(0, 2, 1, 3), w)                     # B Mu N D
            g_pred = h_ul.transpose(0, 2, 3, 1) @ ctx.J.T
            theta = w.theta_diag()                                              # B Mu D
            if s.dl != "off":
                sig = dd_variance(theta.transpose(0, 2, 1), ctx.stats.betas, ctx.op,
                                  ul_band, link.dl_band)
                rate = dl_rate_closed(sig, ctx.stats.r_h[:, None], N, D, link.p_dl, noise,
                                      link.mt_si)
                acc.dl_closed = rate.mean(axis=-1).sum(axis=0)
            if s.ul == "data":
                rate = ul_rate_closed(theta, ctx.stats.betas, N, cfg.n_subcarriers, p_ul,
                                      noise, link.bs_si)
                acc.ul_closed = rate.mean(axis=1).sum(axis=0)
                acc.ul = UlGainSums.zeros(D)
                acc.ul.add(_instances(_band_channels(ctx.op, g, ul_band)),
                           np.ascontiguousarray(h_ul.transpose(0, 1, 3, 2).reshape(-1, D, N)))
        else:  # pragma: no cover - schedules only emit the kinds above
            raise ValueError(f"unknown predictor {pred.kind!r}")

        if s.dl != "off":
            acc.dl = DlGainSums.zeros(D)
            acc.dl.add(_instances(_band_channels(ctx.op, g, link.dl_band)),
                       _instances(_band_channels(ctx.op, g_pred, link.dl_band)))
        acc.err = np.sum(np.abs(g_pred - g) ** 2, axis=(0, 1, 3))
        acc.power = np.sum(np.abs(g) ** 2, axis=(0, 1, 3))
        out[i] = acc
    return out


def _run_chunk(args):
    ctx, trials = args
    return _simulate_chunk(ctx, trials)


def simulate_scheme(config: SystemConfig, scheme: str, velocity_kmh: float, trials: int,
                    seed: int = 0, betas=None, chunk: int = 50, workers: int = 1,
                    schedule: FrameSchedule | None = None) -> SchemeResult:
    """Monte Carlo and closed-form rates of one scheme at one velocity.

    Parameters
    ----------
    config : SystemConfig
    scheme : str
        Scheme name accepted by :func:`~mddsim.frames.build_schedule`.
    velocity_kmh : float
    trials : int
        Channel trajectories (frames) to simulate.
    seed : int
        Master seed; trial ``t`` always uses the same random streams.
    betas : array_like, optional
        Large-scale gains; drawn from ``seed`` when omitted.
    chunk : int
        Trials vectorized together.
    workers : int
        Worker processes; results do not depend on this value.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if schedule is None:
        schedule = build_schedule(scheme, config.frame_length, config.n_pilots,
                                  config.n_ul_data, config.kappa)
    if betas is None:
        betas = config.draw_betas(geometry_rng(seed))
    alpha = config.fading(velocity_kmh).alpha
    ctx = _Context(config, schedule, alpha, np.asarray(betas, dtype=float), seed)
    groups = [tuple(range(a, min(a + chunk, trials))) for a in range(0, trials, chunk)]
    if workers > 1 and len(groups) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [(ctx, g) for g in groups]))
    else:
        parts = [_simulate_chunk(ctx, g) for g in groups]

    sums = {}
    for part in parts:
        for i, acc in part.items():
            if i in sums:
                sums[i].merge(acc)
            else:
                sums[i] = acc

    result = SchemeResult(schedule.scheme, float(velocity_kmh), schedule.n_symbols, trials,
                          int(seed), alpha, np.asarray(betas, dtype=float),
                          config.n_subcarriers)
    D = config.n_users
    short = False
    for i, acc in sorted(sums.items()):
        link = ctx.link(i)
        s = schedule[i]
        r = SymbolResult(i, s.weight, 0 if link.dl_band is None else link.dl_band.size,
                         ctx.plan.ul_band.size if s.ul == "data" else 0)
        if acc.dl is not None:
            result.discarded += acc.dl.discarded
            if acc.dl.n.min() >= MIN_MC_SAMPLES:
                r.dl_mc = dl_rate_from_moments(acc.dl.moments(), link.p_dl,
                                               ctx.plan.noise_var, link.mt_si)
            else:
                r.dl_mc = np.full(D, np.nan)
                short = True
            r.dl_closed = acc.dl_closed / acc.trials
        if acc.ul is not None:
            if acc.ul.n.min() >= MIN_MC_SAMPLES:
                r.ul_mc = acc.ul.rate(link.p_ul, ctx.plan.noise_var, link.bs_si)
            else:
                r.ul_mc = np.full(D, np.nan)
                short = True
            r.ul_closed = acc.ul_closed / acc.trials
        r.nmse = acc.err / acc.power
        result.symbols[i] = r
    if short:
        log.warning("%s at %g km/h: fewer than %d Monte Carlo samples per symbol, "
                    "MC rates reported as NaN", schedule.scheme, velocity_kmh, MIN_MC_SAMPLES)
    if result.discarded:
        log.warning("%s at %g km/h: %d degenerate ZF instances discarded",
                    schedule.scheme, velocity_kmh, result.discarded)
    return result
