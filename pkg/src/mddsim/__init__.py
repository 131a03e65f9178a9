"""Link-level simulator for MDD, TDD and IBFD massive-MIMO OFDM over aging channels."""
from .channel import (ChannelStats, FadingParams, OfdmOperator, SubcarrierPlan, TapState,
                      bessel_j0, evolve_ar1, init_taps, jakes_autocorrelation, subcarrier_view,
                      to_frequency)
from .config import ConfigError, RunSpec, SystemConfig, load_config
from .frames import (FrameSchedule, Predictor, ScheduleError, SymbolActivity, build_schedule,
                     validate_schedule)
from .phylink import (EffectiveGainMoments, PowerConfig, bs_si_power, dl_rate_closed, dl_rate_mc,
                      effective_gain_moments, frame_average, mt_si_power, ul_rate_closed,
                      ul_rate_mc, zf_precoder)
from .pilot import PilotBook, build_pilot_book, mmse_estimate, project_observation
from .prediction import (DdWpWeights, WpWeights, dd_dl_prediction, dd_time_domain, ddwp_weights,
                         gamma_cov, wp_predict, wp_weights)
from .simulate import SchemeResult, simulate_scheme
from .sweep import run_sweep

__version__ = "0.1.0"

__all__ = [
    "ChannelStats", "FadingParams", "OfdmOperator", "SubcarrierPlan", "TapState", "bessel_j0",
    "evolve_ar1", "init_taps", "jakes_autocorrelation", "subcarrier_view", "to_frequency",
    "ConfigError", "RunSpec", "SystemConfig", "load_config",
    "FrameSchedule", "Predictor", "ScheduleError", "SymbolActivity", "build_schedule",
    "validate_schedule",
    "EffectiveGainMoments", "PowerConfig", "bs_si_power", "dl_rate_closed", "dl_rate_mc",
    "effective_gain_moments", "frame_average", "mt_si_power", "ul_rate_closed", "ul_rate_mc",
    "zf_precoder",
    "PilotBook", "build_pilot_book", "mmse_estimate", "project_observation",
    "DdWpWeights", "WpWeights", "dd_dl_prediction", "dd_time_domain", "ddwp_weights",
    "gamma_cov", "wp_predict", "wp_weights",
    "SchemeResult", "simulate_scheme", "run_sweep",
]
