"""Tests for seed derivation, Monte Carlo evaluation, and CSV emission."""

import numpy as np
import pytest

from dmarx import (
    ConfigError,
    DesignOptions,
    DigitalCombiner,
    ExperimentPlan,
    ExperimentRecord,
    INFINITE,
    NumericalFailure,
    alternating_design,
    derive_seed,
    desk_profile,
    emit_csv,
    emit_plot_data,
    evaluate_exact_mse,
    make_config,
    make_uniform_quantizer,
    paper_profile,
    parse_csv,
    run_experiment,
    sample_channel,
)
from dmarx import harness


# ====================================================================
# Shared instances
# ====================================================================


def _small_config():
    """Two users on two strips of four elements, 5 dB average SNR,
    lossless waveguide (powers follow the harness units convention)."""
    return make_config(K=2, N_v=2, N_e=4, P_s=10.0 ** 0.5 * 4.0,
                       sigma_n2=4.0, alpha=0.0)


def _designed_instance(bits=INFINITE, channel_seed=3, design_seed=0):
    cfg = _small_config()
    channel = sample_channel(cfg, channel_seed)
    spec = make_uniform_quantizer(bits)
    result = alternating_design(channel, cfg, spec, DesignOptions(),
                                seed=design_seed)
    return cfg, channel, spec, result


def _mini_plan():
    """Three-point SNR sweep small enough to run in under a second."""
    fixed = make_config(K=2, N_v=1, N_e=4, P_s=10.0 ** 0.5 * 4.0,
                        sigma_n2=4.0, alpha=0.0)
    return ExperimentPlan(sweep="snr", sweep_values=(-10.0, 0.0, 10.0),
                          fixed=fixed, bits_list=(1, INFINITE), trials=3,
                          symbols_per_trial=4000, base_seed=1)


@pytest.fixture(scope="module")
def mini_records():
    return run_experiment(_mini_plan())


# ====================================================================
# Seed derivation
# ====================================================================


def test_derive_seed_is_deterministic():
    a = derive_seed(7, -10.0, 3, 0)
    b = derive_seed(7, -10.0, 3, 0)
    assert a == b
    assert isinstance(a, int)
    assert 0 <= a < 2 ** 64


def test_derive_seed_distinguishes_values_and_order():
    seeds = {
        derive_seed(0, 1),
        derive_seed(0, 2),
        derive_seed(1, 1),
        derive_seed(0, 1, 2),
        derive_seed(0, 2, 1),
    }
    assert len(seeds) == 5


def test_derive_seed_distinguishes_types():
    # the integer 1, the float 1.0, and the string "1" are different
    # coordinates and must not collide
    seeds = {derive_seed(0, 1), derive_seed(0, 1.0), derive_seed(0, "1")}
    assert len(seeds) == 3
    # infinity is a legal float component (used for the unquantized curve)
    assert derive_seed(0, INFINITE) != derive_seed(0, 0.0)


def test_derive_seed_accepts_string_suffixes():
    base = derive_seed(5, 0.0, 2, 4)
    assert derive_seed(5, 0.0, 2, 4, "design") != base
    assert derive_seed(5, 0.0, 2, 4, "eval") != base
    assert derive_seed(5, 0.0, 2, 4, "design") != \
        derive_seed(5, 0.0, 2, 4, "eval")


def test_derive_seed_rejects_ambiguous_components():
    with pytest.raises(ConfigError):
        derive_seed(0, True)
    with pytest.raises(ConfigError):
        derive_seed(0, None)


# ====================================================================
# Plan validation and per-point scenarios
# ====================================================================


def test_plan_validation():
    fixed = _small_config()
    good = dict(sweep="snr", sweep_values=(0.0, 5.0), fixed=fixed,
                bits_list=(1,), trials=2, symbols_per_trial=100)
    ExperimentPlan(**good)  # sanity: the template itself is legal
    with pytest.raises(ConfigError):
        ExperimentPlan(**{**good, "sweep": "bandwidth"})
    with pytest.raises(ConfigError):
        ExperimentPlan(**{**good, "sweep_values": ()})
    with pytest.raises(ConfigError):
        ExperimentPlan(**{**good, "sweep_values": (5.0, 0.0)})
    with pytest.raises(ConfigError):
        ExperimentPlan(**{**good, "sweep_values": (0.0, 0.0)})
    with pytest.raises(ConfigError):
        ExperimentPlan(**{**good, "bits_list": ()})
    with pytest.raises(ConfigError):
        ExperimentPlan(**{**good, "bits_list": (0,)})
    with pytest.raises(ConfigError):
        ExperimentPlan(**{**good, "bits_list": (2.5,)})
    with pytest.raises(ConfigError):
        ExperimentPlan(**{**good, "trials": 0})
    with pytest.raises(ConfigError):
        ExperimentPlan(**{**good, "symbols_per_trial": 0})


def test_point_config_snr_sweep_sets_powers():
    fixed = make_config(K=2, N_v=2, N_e=4, P_s=7.0, sigma_n2=2.0,
                        alpha=0.3, beta=1.0, d_e=0.5)
    plan = ExperimentPlan(sweep="snr", sweep_values=(-10.0, 10.0),
                          fixed=fixed, bits_list=(1,))
    cfg = harness._point_config(plan, 10.0)
    # noise power pins to the element count; symbol power carries the
    # swept SNR (10 dB -> ratio 10)
    assert cfg.sigma_n2 == pytest.approx(4.0)
    assert cfg.P_s == pytest.approx(40.0)
    assert cfg.gamma_av == pytest.approx(10.0)
    low = harness._point_config(plan, -10.0)
    assert low.gamma_av == pytest.approx(0.1)
    # geometry and waveguide parameters come from the template
    assert (cfg.K, cfg.N_v, cfg.N_e) == (2, 2, 4)
    assert (cfg.alpha, cfg.beta, cfg.d_e) == (0.3, 1.0, 0.5)


def test_point_config_count_sweeps_preserve_snr():
    fixed = make_config(K=2, N_v=2, N_e=4, P_s=7.0, sigma_n2=2.0)
    nv_plan = ExperimentPlan(sweep="nv", sweep_values=(2, 6), fixed=fixed,
                             bits_list=(1,))
    cfg = harness._point_config(nv_plan, 6)
    assert cfg.N_v == 6 and cfg.N_e == 4
    assert cfg.sigma_n2 == pytest.approx(4.0)
    assert cfg.gamma_av == pytest.approx(fixed.gamma_av)

    ne_plan = ExperimentPlan(sweep="ne", sweep_values=(4, 8), fixed=fixed,
                             bits_list=(1,))
    cfg = harness._point_config(ne_plan, 8)
    # both powers scale with the element count so the ratio is fixed
    assert cfg.N_e == 8 and cfg.N_v == 2
    assert cfg.sigma_n2 == pytest.approx(8.0)
    assert cfg.P_s == pytest.approx(fixed.gamma_av * 8.0)


# ====================================================================
# Monte Carlo evaluation
# ====================================================================


def test_evaluate_matches_analytic_when_unquantized():
    # without quantization the linear-gain model is exact, so the
    # simulated error must agree with the designed objective
    cfg, channel, spec, result = _designed_instance(INFINITE)
    analytic = result.mse_trajectory[-1]
    simulated = evaluate_exact_mse(channel, cfg, spec, result.analog,
                                   result.digital, 100_000, seed=11)
    assert simulated == pytest.approx(analytic, rel=0.015)


def test_evaluate_with_zero_digital_stage():
    # estimating zero leaves the full symbol energy as error
    cfg, channel, spec, result = _designed_instance(INFINITE)
    zero = DigitalCombiner(W=np.zeros((cfg.N_v, cfg.K), dtype=complex))
    simulated = evaluate_exact_mse(channel, cfg, spec, result.analog, zero,
                                   20_000, seed=5)
    assert simulated == pytest.approx(cfg.K * cfg.P_s, rel=0.02)


def test_evaluate_variance_shrinks_with_symbol_count():
    # doubling the symbol count should halve the estimator variance
    cfg, channel, spec, result = _designed_instance(INFINITE)
    args = (channel, cfg, spec, result.analog, result.digital)
    short = [evaluate_exact_mse(*args, 1000, seed=100 + s)
             for s in range(120)]
    long = [evaluate_exact_mse(*args, 2000, seed=400 + s)
            for s in range(120)]
    ratio = np.var(long, ddof=1) / np.var(short, ddof=1)
    assert 0.4 < ratio < 0.6


def test_evaluate_is_deterministic():
    cfg, channel, spec, result = _designed_instance(2)
    kwargs = dict(T=2000, seed=42)
    a = evaluate_exact_mse(channel, cfg, spec, result.analog,
                           result.digital, **kwargs)
    b = evaluate_exact_mse(channel, cfg, spec, result.analog,
                           result.digital, **kwargs)
    assert a == b


# ====================================================================
# Sweep execution
# ====================================================================


def test_run_experiment_record_layout(mini_records):
    plan = _mini_plan()
    records = mini_records
    assert len(records) == len(plan.sweep_values) * len(plan.bits_list)
    # sorted by (sweep value, bits) with all trials surviving
    keys = [(r.sweep_value, r.bits) for r in records]
    assert keys == sorted(keys)
    for r in records:
        assert r.sweep == "snr"
        assert r.trials_used == plan.trials
        assert r.seed == plan.base_seed
        assert len(r.trial_exact) == plan.trials
        assert np.isfinite(r.mse_exact) and r.mse_exact > 0
        assert np.isfinite(r.mse_approx) and r.mse_approx > 0
        assert r.mse_exact == pytest.approx(np.mean(r.trial_exact))


def test_run_experiment_snr_trend(mini_records):
    # normalized error must fall monotonically with SNR for the
    # unquantized receiver, and one-bit must be worse at high SNR
    by_bits = {}
    for r in mini_records:
        by_bits.setdefault(r.bits, []).append((r.sweep_value, r.mse_exact))
    inf_curve = [m for _, m in sorted(by_bits[INFINITE])]
    assert all(a > b for a, b in zip(inf_curve, inf_curve[1:]))
    one_bit = dict(by_bits[1])
    unquantized = dict(by_bits[INFINITE])
    assert one_bit[10.0] > unquantized[10.0]


def test_run_experiment_excludes_failed_trials(monkeypatch):
    plan = _mini_plan()
    plan = ExperimentPlan(sweep=plan.sweep, sweep_values=(0.0,),
                          fixed=plan.fixed, bits_list=(INFINITE,),
                          trials=3, symbols_per_trial=200, base_seed=1)
    original = harness._run_trial

    def flaky(plan, config, value, b, trial):
        if trial == 0:
            raise NumericalFailure("synthetic trial failure")
        return original(plan, config, value, b, trial)

    monkeypatch.setattr(harness, "_run_trial", flaky)
    records = run_experiment(plan)
    assert records[0].trials_used == plan.trials - 1
    assert len(records[0].trial_exact) == plan.trials - 1


def test_run_experiment_raises_when_all_trials_fail(monkeypatch):
    plan = _mini_plan()
    plan = ExperimentPlan(sweep=plan.sweep, sweep_values=(0.0,),
                          fixed=plan.fixed, bits_list=(INFINITE,),
                          trials=2, symbols_per_trial=200, base_seed=1)

    def broken(plan, config, value, b, trial):
        raise NumericalFailure("synthetic trial failure")

    monkeypatch.setattr(harness, "_run_trial", broken)
    with pytest.raises(NumericalFailure):
        run_experiment(plan)


# ====================================================================
# CSV emission and parsing
# ====================================================================


def test_emit_csv_format(tmp_path):
    record = ExperimentRecord(sweep="snr", sweep_value=5.0, bits=INFINITE,
                              mse_exact=1.25, mse_approx=1.5,
                              trials_used=2, seed=9)
    path = tmp_path / "out.csv"
    emit_csv([record], path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode("utf-8").split("\n")
    assert lines[-1] == ""  # trailing LF
    assert len(lines) == 3  # header + one record
    assert lines[0] == "sweep,sweep_value,bits,mse_exact,mse_approx,trials,seed"
    assert lines[1] == "snr,5.0,inf,1.25,1.5,2,9"


def test_csv_round_trip(tmp_path, mini_records):
    path = tmp_path / "sweep.csv"
    emit_csv(mini_records, path)
    parsed = parse_csv(path)
    assert parsed == list(mini_records)


def test_emit_csv_rejects_empty(tmp_path):
    with pytest.raises(ConfigError):
        emit_csv([], tmp_path / "empty.csv")


def test_parse_csv_rejects_malformed_input(tmp_path):
    bad_header = tmp_path / "bad_header.csv"
    bad_header.write_text("a,b,c\n1,2,3\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        parse_csv(bad_header)
    short_row = tmp_path / "short_row.csv"
    short_row.write_text(
        "sweep,sweep_value,bits,mse_exact,mse_approx,trials,seed\nsnr,0.0\n",
        encoding="utf-8")
    with pytest.raises(ConfigError):
        parse_csv(short_row)


# ====================================================================
# Plot data
# ====================================================================


def test_plot_data_layout(tmp_path, mini_records):
    plan = _mini_plan()
    path = tmp_path / "plot.csv"
    emit_plot_data(mini_records, path, users=plan.fixed.K)
    lines = path.read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    assert header == ["sweep", "bits", "x",
                      "exact_mean", "exact_stderr",
                      "approx_mean", "approx_stderr",
                      "exact_mean_per_user", "exact_stderr_per_user",
                      "approx_mean_per_user", "approx_stderr_per_user"]
    rows = [line.split(",") for line in lines[1:]]
    assert len(rows) == len(mini_records)
    # rows grouped by bit depth: the finite curve comes first
    assert [r[1] for r in rows] == ["1"] * 3 + ["inf"] * 3
    for r in rows:
        total = float(r[3])
        per_user = float(r[7])
        assert per_user == pytest.approx(total / plan.fixed.K, rel=1e-12)
        assert float(r[4]) > 0  # three trials give a positive spread


def test_plot_data_single_trial_has_zero_stderr(tmp_path):
    fixed = make_config(K=2, N_v=1, N_e=4, P_s=10.0 ** 0.5 * 4.0,
                        sigma_n2=4.0, alpha=0.0)
    plan = ExperimentPlan(sweep="snr", sweep_values=(0.0,), fixed=fixed,
                          bits_list=(1,), trials=1, symbols_per_trial=500,
                          base_seed=2)
    records = run_experiment(plan)
    path = tmp_path / "single.csv"
    emit_plot_data(records, path, users=fixed.K)
    row = path.read_text(encoding="utf-8").splitlines()[1].split(",")
    assert float(row[4]) == 0.0 and float(row[8]) == 0.0


def test_plot_data_needs_fresh_records(tmp_path, mini_records):
    # records parsed back from a CSV have no per-trial values to
    # aggregate, so plotting from them must fail loudly
    csv_path = tmp_path / "sweep.csv"
    emit_csv(mini_records, csv_path)
    parsed = parse_csv(csv_path)
    with pytest.raises(ConfigError):
        emit_plot_data(parsed, tmp_path / "plot.csv", users=2)
    with pytest.raises(ConfigError):
        emit_plot_data([], tmp_path / "plot.csv", users=2)
    with pytest.raises(ConfigError):
        emit_plot_data(mini_records, tmp_path / "plot.csv", users=0)


# ====================================================================
# Reproducibility
# ====================================================================


def test_rerun_is_byte_identical(tmp_path, mini_records):
    again = run_experiment(_mini_plan())
    first_csv = tmp_path / "a.csv"
    second_csv = tmp_path / "b.csv"
    emit_csv(mini_records, first_csv)
    emit_csv(again, second_csv)
    assert first_csv.read_bytes() == second_csv.read_bytes()
    first_plot = tmp_path / "a.plot.csv"
    second_plot = tmp_path / "b.plot.csv"
    emit_plot_data(mini_records, first_plot, users=2)
    emit_plot_data(again, second_plot, users=2)
    assert first_plot.read_bytes() == second_plot.read_bytes()


# ====================================================================
# Profiles
# ====================================================================


def test_desk_profile_structure():
    plan = desk_profile("snr", trials=5, base_seed=3)
    assert plan.sweep == "snr"
    assert plan.sweep_values == (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0)
    assert plan.bits_list == (1, 2, 3, INFINITE)
    assert plan.trials == 5 and plan.base_seed == 3
    f = plan.fixed
    assert (f.K, f.N_v, f.N_e) == (4, 8, 8)
    # template sits at 5 dB under the units convention
    assert f.sigma_n2 == pytest.approx(8.0)
    assert f.gamma_av == pytest.approx(10.0 ** 0.5)
    assert desk_profile("nv").sweep_values == (2, 4, 6, 8, 10, 12)
    assert desk_profile("ne").sweep_values == (4, 8, 16, 32)


def test_paper_profile_structure():
    plan = paper_profile("nv")
    assert (plan.fixed.K, plan.fixed.N_e) == (50, 20)
    assert plan.sweep_values == (10, 20, 30, 40, 50, 60, 70)
    snr = paper_profile("snr")
    assert (snr.fixed.K, snr.fixed.N_v, snr.fixed.N_e) == (40, 10, 200)
    ne = paper_profile("ne")
    assert (ne.fixed.K, ne.fixed.N_v) == (50, 70)


def test_profiles_reject_unknown_sweep():
    with pytest.raises(ConfigError):
        desk_profile("users")
    with pytest.raises(ConfigError):
        paper_profile("users")
