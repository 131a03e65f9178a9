import csv
import dataclasses
import io
import math

import numpy as np
import pytest

from mddsim.cli import main, parse_velocities
from mddsim.config import (ConfigError, RunSpec, SystemConfig, config_to_dict, load_config,
                           parse_config)
from mddsim.frames import ScheduleError, build_schedule
from mddsim.simulate import link_plan, qam16, simulate_scheme, trial_rngs
from mddsim.sweep import SYMBOL_FIELDS, frame_average_csv, per_symbol_csv, run_sweep

SMALL = SystemConfig(frame_length=12, n_pilots=3, n_ul_data=3)


def test_empty_file_gives_table_defaults(tmp_path):
    f = tmp_path / "empty.yaml"
    f.write_text("")
    system, run = load_config(f)
    assert system == SystemConfig()
    assert (system.n_antennas, system.n_users, system.n_subcarriers) == (32, 8, 96)
    assert (system.n_dl, system.n_ul, system.n_taps, system.frame_length) == (64, 32, 4, 28)
    assert (system.p_dl_dbm, system.p_ul_dbm, system.noise_dbm) == (30, 20, -94)
    assert (system.sic_bs_db, system.sic_mt_db) == (130, 120)
    assert system.symbol_duration == pytest.approx(66.67e-6)
    assert run.velocities == tuple(range(20, 301, 20))


def test_frame_length_override(tmp_path):
    f = tmp_path / "c.yaml"
    f.write_text("system:\n  frame_length: 56\nrun:\n  trials: 10\n  schemes: [TDD-2]\n")
    system, run = load_config(f)
    assert system.frame_length == 56 and run.trials == 10 and run.schemes == ("TDD-2",)
    assert build_schedule("TDD-2", system.frame_length).n_symbols == 56


@pytest.mark.parametrize("data, field", [
    ({"system": {"n_dl": 60}}, r"n_dl \+ n_ul"),
    ({"system": {"n_antennas": 4}}, "n_antennas"),
    ({"system": {"bogus": 1}}, "bogus"),
    ({"run": {"trials": 0}}, "trials"),
    ({"run": {"schemes": ["XDD"]}}, "schemes"),
    ({"extra": {}}, "extra"),
])
def test_config_errors_name_the_field(data, field):
    with pytest.raises(ConfigError, match=field):
        parse_config(data)


def test_config_round_trip():
    system, run = parse_config({})
    again = parse_config(config_to_dict(system, run))
    assert again == (system, run)


def test_bad_yaml(tmp_path):
    f = tmp_path / "bad.yaml"
    f.write_text("system: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(f)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")


def test_velocity_parsing():
    assert parse_velocities("20,40") == (20, 40)
    assert parse_velocities("20:100:40") == (20, 60, 100)
    assert parse_velocities("12.5") == (12.5,)
    with pytest.raises(ConfigError):
        parse_velocities("fast")


def test_trial_streams_are_fixed():
    a = trial_rngs(5, 3)[0].standard_normal(4)
    b = trial_rngs(5, 3)[0].standard_normal(4)
    c = trial_rngs(5, 4)[0].standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_qam16_is_unit_energy():
    x = qam16(np.random.default_rng(0), (200_000,))
    assert np.mean(np.abs(x) ** 2) == pytest.approx(1.0, rel=0.01)
    assert len(np.unique(np.round(x, 12))) == 16


def test_link_plan_powers_and_si():
    cfg = SystemConfig()
    mdd = link_plan(cfg, build_schedule("MDD-2", 28))
    assert mdd.links[10].p_dl == pytest.approx(1 / 64)
    assert mdd.links[10].p_ul == pytest.approx(0.1 / 32)
    assert mdd.links[10].bs_si == pytest.approx(1e-13)
    assert mdd.links[10].mt_si == pytest.approx(1e-13)
    assert mdd.links[0].bs_si == 0          # pilot only, no DL yet
    tdd = link_plan(cfg, build_schedule("TDD-2", 28))
    assert tdd.links[20].p_dl == pytest.approx(1 / 96)
    assert tdd.p_ul == pytest.approx(0.1 / 96)
    assert all(l.bs_si == 0 and l.mt_si == 0 for l in tdd.links)
    ibfd = link_plan(dataclasses.replace(cfg, ibfd_sic_penalty_db=30),
                     build_schedule("IBFD-1", 28))
    assert ibfd.links[10].p_dl == pytest.approx(1 / 96)
    assert ibfd.links[10].bs_si == pytest.approx(1e-10 * (1 / 96) * 96)
    pa = link_plan(cfg, build_schedule("MDD-1-PA", 28))
    assert pa.links[5].dl_band.size == 96 and pa.links[5].mt_si == 0
    assert pa.links[4].dl_band.size == 64


def test_chunking_and_workers_do_not_change_results():
    a = simulate_scheme(SMALL, "MDD-2", 120, 6, seed=3, chunk=6)
    b = simulate_scheme(SMALL, "MDD-2", 120, 6, seed=3, chunk=2)
    c = simulate_scheme(SMALL, "MDD-2", 120, 6, seed=3, chunk=2, workers=2)
    for i in a.symbols:
        for attr in ("dl_closed", "ul_closed", "nmse"):
            x, y, z = (getattr(r.symbols[i], attr) for r in (a, b, c))
            if x is not None:
                np.testing.assert_allclose(x, y, rtol=1e-12)
                np.testing.assert_array_equal(y, z)


def test_mc_close_to_closed_form_for_wp():
    r = simulate_scheme(SystemConfig(), "MDD-1(7)", 100, 20, seed=1)
    mc, closed = r.series("rate_mc"), r.series("rate_closed")
    for i in mc:
        assert mc[i] == pytest.approx(closed[i], rel=0.1)
    assert all(v > 0 for v in r.series("nmse").values())


def test_run_sweep_writes_csv(tmp_path):
    run = RunSpec(seed=11, trials=4, schemes=("MDD-2", "TDD-1"), velocities=(60,),
                  out_dir=str(tmp_path), emit_plots=True)
    results = run_sweep(SMALL, run)
    rows = list(csv.DictReader(io.StringIO((tmp_path / "per_symbol.csv").read_text())))
    assert tuple(rows[0]) == SYMBOL_FIELDS
    assert {r["metric"] for r in rows} == {"rate_mc_lb", "rate_closed", "nmse"}
    assert {r["subcarrier_class"] for r in rows} == {"DL", "UL", "all"}
    avg = list(csv.DictReader(io.StringIO((tmp_path / "frame_average.csv").read_text())))
    assert len(avg) == 4
    closed = [float(r["value"]) for r in avg if r["metric"] == "rate_closed"]
    assert closed == pytest.approx([res.frame_average("closed") for res in results])
    for name in ("rate_vs_symbol.png", "nmse_vs_symbol.png", "avg_rate_vs_velocity.png"):
        assert (tmp_path / name).stat().st_size > 0
    # both schemes share one user drop
    np.testing.assert_array_equal(results[0].betas, results[1].betas)


def test_single_trial_reports_nan_mc_and_finite_closed():
    r = simulate_scheme(SMALL, "MDD-1(3)", 100, 1)
    assert all(math.isnan(v) for v in r.series("rate_mc").values())
    assert all(math.isfinite(v) and v > 0 for v in r.series("rate_closed").values())


def test_identical_seed_gives_identical_csv(tmp_path):
    texts = []
    for k in range(2):
        out = tmp_path / str(k)
        run = RunSpec(seed=2, trials=1, schemes=("TDD-2", "MDD-1(3)"), velocities=(100,),
                      out_dir=str(out))
        run_sweep(SMALL, run)
        texts.append(((out / "per_symbol.csv").read_bytes(),
                      (out / "frame_average.csv").read_bytes()))
    assert texts[0] == texts[1]


def test_unknown_or_incompatible_scheme():
    with pytest.raises(ScheduleError):
        run_sweep(SystemConfig(frame_length=8), RunSpec(schemes=("TDD-2",)), write=False)


def test_cli_success_and_failure(tmp_path, capsys):
    code = main(["--scheme", "MDD-1(3)", "--velocities", "80", "--trials", "2",
                 "--frame-length", "12", "--out", str(tmp_path)])
    assert code == 0
    assert "MDD-1(3)" in capsys.readouterr().out
    assert (tmp_path / "per_symbol.csv").exists()
    assert main(["--scheme", "NOPE", "--out", str(tmp_path)]) == 2
    assert main(["--trials", "0", "--out", str(tmp_path)]) == 2
    assert main(["--scheme", "TDD-2", "--frame-length", "8", "--trials", "1",
                 "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_csv_helpers_on_empty_input():
    assert per_symbol_csv([]).strip() == ",".join(SYMBOL_FIELDS)
    assert frame_average_csv([]).count("\n") == 1
