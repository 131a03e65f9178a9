import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mddsim.channel import (ChannelStats, FadingParams, OfdmOperator, SubcarrierPlan, TapState,
                            bessel_j0, evolve_ar1, init_taps, jakes_autocorrelation,
                            subcarrier_view, tap_trajectory, to_frequency)

from oracles import bessel_j0 as j0_ref, unitary_dft

J0_FIRST_ZERO = 2.404825557695773


@pytest.mark.parametrize("x", [0.0, 1e-3, 0.19395, 1.0, J0_FIRST_ZERO, 5.5, 11.9, 12.5, 30.0])
def test_bessel_matches_mpmath(x):
    assert bessel_j0(x) == pytest.approx(j0_ref(x), abs=1e-10)


def test_jakes_lag_zero_is_one():
    p = FadingParams.from_kmh(250.0)
    assert jakes_autocorrelation(0, p) == 1.0


def test_jakes_first_zero():
    Ts = 66.67e-6
    fd = J0_FIRST_ZERO / (2 * np.pi * Ts)
    p = FadingParams(5e9, Ts, fd * 3e8 / 5e9)
    assert abs(jakes_autocorrelation(1, p)) < 1e-9
    assert jakes_autocorrelation(-1, p) == jakes_autocorrelation(1, p)


def test_table_values_at_100kmh():
    p = FadingParams.from_kmh(100.0)
    assert p.doppler == pytest.approx(463.0, abs=0.1)
    assert p.alpha == pytest.approx(0.99062, abs=1e-4)
    assert p.alpha == pytest.approx(j0_ref(2 * np.pi * p.doppler * 66.67e-6), abs=1e-10)


def test_fading_rejects_bad_values():
    with pytest.raises(ValueError):
        FadingParams(5e9, 0.0, 1.0)
    with pytest.raises(ValueError):
        FadingParams(5e9, 1e-4, -1.0)


def test_channel_stats():
    s = ChannelStats([2.0, 0.5], n_taps=4, n_subcarriers=96)
    np.testing.assert_allclose(s.tap_variance, [0.5, 0.125])
    np.testing.assert_allclose(s.r_h, np.trace(s.r_g(0)) / 96 * np.array([1, 0.25]))
    with pytest.raises(ValueError):
        ChannelStats([-1.0], 4, 96)


def test_operator_against_dft_oracle():
    op = OfdmOperator(96, 4)
    F = unitary_dft(96)
    np.testing.assert_allclose(op.fft_matrix, F, atol=1e-12)
    np.testing.assert_allclose(F.conj().T @ F, np.eye(96), atol=1e-12)
    Psi = op.tap_selector
    np.testing.assert_allclose(Psi.T @ Psi, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(np.sum(np.abs(op.psi()) ** 2, axis=1), 4 / 96, atol=1e-12)
    np.testing.assert_allclose(np.abs(op.psi()), 1 / np.sqrt(96), atol=1e-12)


def test_to_frequency():
    op = OfdmOperator(96, 4)
    c = 0.7 - 0.2j
    h = to_frequency(np.array([c, 0, 0, 0]), op)
    np.testing.assert_allclose(np.abs(h), abs(c) / np.sqrt(96), atol=1e-15)
    assert np.all(to_frequency(np.zeros(4), op) == 0)
    g = np.random.default_rng(1).standard_normal((5, 4)) + 1j
    h = to_frequency(g, op)
    np.testing.assert_allclose(h, g @ op.psi().T, atol=1e-12)
    np.testing.assert_allclose(np.sum(np.abs(h) ** 2, -1) / np.sum(np.abs(g) ** 2, -1), 1.0,
                               atol=1e-12)
    with pytest.raises(ValueError):
        to_frequency(np.zeros(5), op)


def test_subcarrier_plan_views():
    plan = SubcarrierPlan.evenly_spaced(96, 32)
    assert plan.dl.size == 64 and plan.ul.size == 32
    np.testing.assert_array_equal(plan.ul, np.arange(0, 96, 3))
    assert plan.is_evenly_spaced
    h = np.arange(96) + 0j
    dl, ul = subcarrier_view(h, plan, "DL"), subcarrier_view(h, plan, "UL")
    np.testing.assert_array_equal(np.sort(np.concatenate([dl, ul]).real), np.arange(96))
    ind = np.zeros(96)
    ind[plan.dl[0]] = 1
    assert np.all(subcarrier_view(ind, plan, "UL") == 0)
    full = SubcarrierPlan.evenly_spaced(96, 0)
    np.testing.assert_array_equal(subcarrier_view(h, full, "DL"), h)
    with pytest.raises(ValueError):
        subcarrier_view(h, plan, "sideways")
    with pytest.raises(ValueError):
        SubcarrierPlan(4, [0, 1], [1, 2])


def test_init_taps_statistics():
    rng = np.random.default_rng(3)
    s = ChannelStats([1.0, 0.0], 4, 96)
    taps = init_taps(s, 1, rng, batch=(100_000,)).taps
    assert np.mean(np.abs(taps[..., 0, :]) ** 2) == pytest.approx(0.25, rel=0.02)
    assert np.all(taps[..., 1, :] == 0)


def test_init_taps_table_dims():
    betas = np.linspace(0.5, 2.0, 8)
    s = ChannelStats(betas, 4, 96)
    taps = init_taps(s, 32, np.random.default_rng(4), batch=(3200,)).taps
    energy = np.mean(np.sum(np.abs(taps) ** 2, axis=-1), axis=(0, 1))
    np.testing.assert_allclose(energy, betas, rtol=0.02)


def test_evolve_frozen_and_white():
    s = ChannelStats([1.0], 4, 96)
    rng = np.random.default_rng(5)
    st0 = init_taps(s, 1, rng, batch=(100_000,))
    frozen = evolve_ar1(st0, 1.0, s, rng)
    np.testing.assert_array_equal(frozen.taps, st0.taps)
    assert frozen.index == st0.index + 1
    white = evolve_ar1(st0, 0.0, s, rng)
    a, b = st0.taps.ravel(), white.taps.ravel()
    corr = np.mean(a * b.conj()) / 0.25
    assert abs(corr) < 3 * np.sqrt(1 / a.size) * np.sqrt(2)
    with pytest.raises(ValueError):
        evolve_ar1(st0, 1.5, s, rng)


def test_evolve_stationary():
    s = ChannelStats([2.0], 4, 96)
    rng = np.random.default_rng(6)
    state = init_taps(s, 1, rng, batch=(100_000,))
    p = FadingParams.from_kmh(300)
    for _ in range(3):
        state = evolve_ar1(state, p, s, rng)
    var = np.mean(np.abs(state.taps) ** 2)
    se = 0.5 / np.sqrt(state.taps.size)
    assert abs(var - 0.5) < 3 * se


def test_frequency_domain_ar1():
    op = OfdmOperator(96, 4)
    s = ChannelStats([1.0], 4, 96)
    alpha = FadingParams.from_kmh(200).alpha
    rng = np.random.default_rng(7)
    g0 = init_taps(s, 1, rng, batch=(100_000,))
    g1 = evolve_ar1(g0, alpha, s, rng)
    m = 17
    h0 = (g0.taps @ op.psi([m]).T)[..., 0].ravel()
    h1 = (g1.taps @ op.psi([m]).T)[..., 0].ravel()
    coef = np.vdot(h0, h1) / np.vdot(h0, h0)
    assert abs(coef - alpha) < 0.01
    resid = h1 - alpha * h0
    assert np.mean(np.abs(resid) ** 2) == pytest.approx((1 - alpha ** 2) / 96, rel=0.03)


def test_trajectory_autocovariance():
    """Lag-k covariance of the AR(1) taps follows alpha ** k."""
    s = ChannelStats([1.0], 4, 96)
    p = FadingParams.from_kmh(100)
    alpha = p.alpha
    traj = tap_trajectory(s, 1, 12, alpha, np.random.default_rng(8), batch=(25_000,))
    x = traj[..., 0, 0, :].reshape(12, -1)
    for k in range(11):
        prod = x[k] * x[0].conj()
        est = np.mean(prod)
        se = np.std(prod) / np.sqrt(prod.size)
        assert abs(est - alpha ** k * 0.25) < 3 * se
    assert np.max(np.abs(jakes_autocorrelation(1, p) - alpha)) == 0


def test_tapstate_is_plain_data():
    t = TapState(3, np.zeros((2, 1, 4)))
    assert t.index == 3


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 12.0))
def test_bessel_series_property(x):
    assert abs(bessel_j0(x) - j0_ref(x)) < 1e-10
