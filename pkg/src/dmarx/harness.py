"""Seeded Monte Carlo experiments over the combiner design.

Runs sweeps of average SNR, strip count, or per-strip element count,
designing the hybrid combiner per channel draw and recording both the
simulated error through the true nonlinear quantizer and the analytic
scalar-gain-model error.

Units convention
----------------
For every sweep point the noise power is set to the per-strip element
count and the symbol power to ``gamma_av`` times it.  This keeps the
per-strip analog output power at the scale the scalar-gain model
assumes, so designed and simulated statistics are directly comparable.
Recorded MSE values are divided by the symbol power; that equals the
total error of a unit-power-symbol system (the whole chain is
scale-equivariant once the evaluation quantizer is gain-controlled),
which makes numbers comparable across sweep points.

Seeding
-------
Every random draw derives from the plan's ``base_seed`` and the point
coordinates through :func:`derive_seed`; no global RNG state is used,
so identical plans produce byte-identical CSV output.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .model import (ConfigError, NumericalFailure, SystemConfig,
                    make_config, sample_channel, transmit, strip_reduce)
from .quantizer import (INFINITE, QuantizerSpec, make_uniform_quantizer,
                        quantize_complex)
from .design import (AnalogCombiner, DigitalCombiner, DesignOptions,
                     alternating_design)

__all__ = [
    "SWEEP_SNR",
    "SWEEP_NV",
    "SWEEP_NE",
    "ExperimentPlan",
    "ExperimentRecord",
    "derive_seed",
    "evaluate_exact_mse",
    "run_experiment",
    "emit_csv",
    "parse_csv",
    "emit_plot_data",
    "desk_profile",
    "paper_profile",
]

logger = logging.getLogger(__name__)

SWEEP_SNR = "snr"
SWEEP_NV = "nv"
SWEEP_NE = "ne"
_SWEEPS = (SWEEP_SNR, SWEEP_NV, SWEEP_NE)

_CSV_HEADER = ("sweep", "sweep_value", "bits", "mse_exact", "mse_approx",
               "trials", "seed")


# =====================================================================
# Seed derivation
# =====================================================================

def derive_seed(base_seed: int, *components) -> int:
    """Deterministic 64-bit seed from a base seed and coordinates.

    Components may be integers, floats (infinity included; encoded by
    their IEEE-754 bit pattern), or strings.  Every component carries a
    type tag so that, e.g., the integer 2 and the float 2.0 hash
    differently.  Built on ``numpy.random.SeedSequence``.
    """
    words = [0, int(base_seed) & (2 ** 64 - 1)]
    for comp in components:
        if isinstance(comp, (bool, np.bool_)):
            raise ConfigError("boolean seed components are ambiguous")
        if isinstance(comp, (int, np.integer)):
            words.extend((1, int(comp) & (2 ** 64 - 1)))
        elif isinstance(comp, (float, np.floating)):
            words.extend((2, int(np.float64(comp).view(np.uint64))))
        elif isinstance(comp, str):
            raw = comp.encode("utf-8")
            words.extend((3, len(raw), int.from_bytes(raw, "little")))
        else:
            raise ConfigError(f"cannot derive a seed from {type(comp).__name__}")
    seq = np.random.SeedSequence(words)
    return int(seq.generate_state(1, dtype=np.uint64)[0])


# =====================================================================
# Plans and records
# =====================================================================

@dataclass(frozen=True)
class ExperimentPlan:
    """One sweep: which axis varies, over which values, and how hard.

    ``fixed`` is the scenario template; per sweep point the noise and
    symbol powers are rebuilt from the template's ``gamma_av`` under
    the module's units convention, and the swept field is replaced.
    ``design`` carries the alternating-optimization options used for
    every trial.
    """

    sweep: str
    sweep_values: tuple
    fixed: SystemConfig
    bits_list: tuple
    trials: int = 50
    symbols_per_trial: int = 10_000
    base_seed: int = 0
    design: DesignOptions = field(default_factory=DesignOptions)

    def __post_init__(self):
        if self.sweep not in _SWEEPS:
            raise ConfigError(f"sweep must be one of {_SWEEPS}, "
                              f"got {self.sweep!r}")
        values = tuple(self.sweep_values)
        if not values:
            raise ConfigError("sweep_values must be non-empty")
        if any(values[i] >= values[i + 1] for i in range(len(values) - 1)):
            raise ConfigError("sweep_values must be strictly increasing")
        bits = tuple(self.bits_list)
        if not bits:
            raise ConfigError("bits_list must be non-empty")
        for b in bits:
            if b != INFINITE and (not float(b).is_integer() or b < 1):
                raise ConfigError(f"bit depth must be a positive integer or "
                                  f"infinite, got {b!r}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.symbols_per_trial < 1:
            raise ConfigError("symbols_per_trial must be at least 1")
        object.__setattr__(self, "sweep_values", values)
        object.__setattr__(self, "bits_list", bits)


@dataclass(frozen=True)
class ExperimentRecord:
    """Aggregated result at one (sweep value, bit depth) point.

    ``mse_exact`` is the simulated error through the true quantizer,
    ``mse_approx`` the analytic scalar-gain-model error, both averaged
    over trials and divided by the symbol power.  ``wallclock`` and the
    per-trial tuples are diagnostics: they are excluded from equality
    so that a record survives a CSV round trip intact.
    """

    sweep: str
    sweep_value: float
    bits: float
    mse_exact: float
    mse_approx: float
    trials_used: int
    seed: int
    wallclock: float = field(default=0.0, compare=False, repr=False)
    trial_exact: tuple = field(default=(), compare=False, repr=False)
    trial_approx: tuple = field(default=(), compare=False, repr=False)


# =====================================================================
# Evaluation
# =====================================================================

def evaluate_exact_mse(channel, config: SystemConfig, spec: QuantizerSpec,
                       Q: AnalogCombiner, W: DigitalCombiner,
                       T: int, seed: int) -> float:
    """Simulated total error ``mean_t ||s_t - W' z_t||^2`` over ``T`` uses.

    Transmits ``T`` Gaussian symbol vectors through the channel, forms
    the strip outputs, applies the true nonlinear quantizer, and
    estimates with the supplied digital stage.  Returns the raw total
    (un-normalized) error; callers decide the reporting scale.
    """
    batch = transmit(channel, config, T, seed)
    w = np.conj(Q.q_stacked) * channel.a_diag
    y = strip_reduce(w, batch.R, config.N_v, config.N_e)
    z = quantize_complex(spec, y)
    err = batch.S - W.W.conj().T @ z
    return float(np.mean(np.sum(np.abs(err) ** 2, axis=0)))


def _point_config(plan: ExperimentPlan, value) -> SystemConfig:
    """Scenario for one sweep point under the units convention."""
    f = plan.fixed
    gamma = 10.0 ** (float(value) / 10.0) if plan.sweep == SWEEP_SNR \
        else f.gamma_av
    n_elem = int(value) if plan.sweep == SWEEP_NE else f.N_e
    n_strips = int(value) if plan.sweep == SWEEP_NV else f.N_v
    return make_config(K=f.K, N_v=n_strips, N_e=n_elem,
                       P_s=gamma * n_elem, sigma_n2=float(n_elem),
                       alpha=f.alpha, beta=f.beta, d_e=f.d_e)


def run_experiment(plan: ExperimentPlan) -> list:
    """Run the full sweep and aggregate per-point records.

    For every (sweep value, bit depth, trial): draw a channel with seed
    ``derive_seed(base_seed, value, bits, trial)``, design the combiner
    pair, gain-control the evaluation quantizer to the designed
    operating point, and record simulated and analytic errors.  Failed
    trials are logged and excluded; a point with no surviving trial
    raises.  Records are sorted by (sweep value, bits).
    """
    records = []
    for value in plan.sweep_values:
        config = _point_config(plan, value)
        for b in plan.bits_list:
            t0 = time.perf_counter()
            exact_vals = []
            approx_vals = []
            for trial in range(plan.trials):
                try:
                    exact, approx = _run_trial(plan, config, value, b, trial)
                except (NumericalFailure, np.linalg.LinAlgError) as exc:
                    logger.warning("trial %d at %s=%s, bits=%s failed: %s",
                                   trial, plan.sweep, value, b, exc)
                    continue
                exact_vals.append(exact)
                approx_vals.append(approx)
            if not exact_vals:
                raise NumericalFailure(
                    f"all {plan.trials} trials failed at "
                    f"{plan.sweep}={value}, bits={b}")
            records.append(ExperimentRecord(
                sweep=plan.sweep, sweep_value=value, bits=b,
                mse_exact=float(np.mean(exact_vals)),
                mse_approx=float(np.mean(approx_vals)),
                trials_used=len(exact_vals), seed=plan.base_seed,
                wallclock=time.perf_counter() - t0,
                trial_exact=tuple(exact_vals),
                trial_approx=tuple(approx_vals)))
    records.sort(key=lambda r: (r.sweep_value, r.bits))
    return records


def _run_trial(plan: ExperimentPlan, config: SystemConfig, value, b,
               trial: int) -> tuple:
    """One trial: design, gain-control, evaluate.  Returns both MSE
    values divided by the symbol power."""
    channel_seed = derive_seed(plan.base_seed, value, b, trial)
    design_seed = derive_seed(plan.base_seed, value, b, trial, "design")
    eval_seed = derive_seed(plan.base_seed, value, b, trial, "eval")

    channel = sample_channel(config, channel_seed)
    design_spec = make_uniform_quantizer(b)
    result = alternating_design(channel, config, design_spec, plan.design,
                                seed=design_seed)

    if b == INFINITE:
        eval_spec = design_spec
    else:
        # automatic gain control: scale the evaluation quantizer to the
        # designed operating point's true per-strip output power
        level = float(np.mean(result.stats.C_y.diagonal().real))
        eval_spec = make_uniform_quantizer(b, input_std=math.sqrt(level / 2.0))
    exact = evaluate_exact_mse(channel, config, eval_spec, result.analog,
                               result.digital, plan.symbols_per_trial,
                               eval_seed)
    approx = float(result.mse_trajectory[-1])
    return exact / config.P_s, approx / config.P_s


# =====================================================================
# CSV emission and parsing
# =====================================================================

def _format_number(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _format_bits(b) -> str:
    return "inf" if b == INFINITE else str(int(b))


def _parse_number(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def emit_csv(records, path) -> None:
    """Write records as UTF-8 CSV with LF endings.

    Columns: ``sweep,sweep_value,bits,mse_exact,mse_approx,trials,seed``
    with ``bits`` an integer or the literal ``inf`` and floats in
    shortest round-trip form.  Identical records produce byte-identical
    files.
    """
    records = list(records)
    if not records:
        raise ConfigError("emit_csv needs at least one record")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_CSV_HEADER)
        for r in records:
            writer.writerow((
                r.sweep,
                _format_number(r.sweep_value),
                _format_bits(r.bits),
                repr(float(r.mse_exact)),
                repr(float(r.mse_approx)),
                str(int(r.trials_used)),
                str(int(r.seed)),
            ))


def parse_csv(path) -> list:
    """Read back an :func:`emit_csv` file; inverse up to diagnostics.

    Round trip is exact: ``parse_csv`` after ``emit_csv`` reproduces
    records that compare equal (per-trial diagnostics excluded from
    record equality by construction).
    """
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != _CSV_HEADER:
            raise ConfigError(f"unexpected CSV header {header!r} in {path}")
        for row in reader:
            if len(row) != len(_CSV_HEADER):
                raise ConfigError(f"malformed CSV row {row!r} in {path}")
            records.append(ExperimentRecord(
                sweep=row[0],
                sweep_value=_parse_number(row[1]),
                bits=INFINITE if row[2] == "inf" else int(row[2]),
                mse_exact=float(row[3]),
                mse_approx=float(row[4]),
                trials_used=int(row[5]),
                seed=int(row[6])))
    return records


def emit_plot_data(records, path, users: int) -> None:
    """Write per-point means and standard errors for plotting.

    One row per (sweep value, bits) with total and per-user columns for
    both MSE estimates; requires fresh records (the per-trial values a
    CSV does not carry).  Rows are grouped by bit depth.
    """
    records = list(records)
    if not records:
        raise ConfigError("emit_plot_data needs at least one record")
    if users < 1:
        raise ConfigError("users must be at least 1")
    for r in records:
        if not r.trial_exact:
            raise ConfigError("emit_plot_data needs records with per-trial "
                              "values (fresh from run_experiment)")

    def stderr(vals):
        if len(vals) < 2:
            return 0.0
        return float(np.std(vals, ddof=1) / math.sqrt(len(vals)))

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("sweep", "bits", "x",
                         "exact_mean", "exact_stderr",
                         "approx_mean", "approx_stderr",
                         "exact_mean_per_user", "exact_stderr_per_user",
                         "approx_mean_per_user", "approx_stderr_per_user"))
        for r in sorted(records, key=lambda r: (r.bits, r.sweep_value)):
            ex, ap = np.asarray(r.trial_exact), np.asarray(r.trial_approx)
            writer.writerow((
                r.sweep, _format_bits(r.bits), _format_number(r.sweep_value),
                repr(float(ex.mean())), repr(stderr(ex)),
                repr(float(ap.mean())), repr(stderr(ap)),
                repr(float(ex.mean() / users)), repr(stderr(ex / users)),
                repr(float(ap.mean() / users)), repr(stderr(ap / users)),
            ))


# =====================================================================
# Profiles
# =====================================================================

def _profile(sweep, values, K, N_v, N_e, gamma_db, bits_list, trials,
             symbols_per_trial, base_seed, design):
    fixed = make_config(K=K, N_v=N_v, N_e=N_e,
                        P_s=10.0 ** (gamma_db / 10.0) * N_e,
                        sigma_n2=float(N_e))
    return ExperimentPlan(sweep=sweep, sweep_values=tuple(values),
                          fixed=fixed, bits_list=tuple(bits_list),
                          trials=trials, symbols_per_trial=symbols_per_trial,
                          base_seed=base_seed,
                          design=design or DesignOptions())


def desk_profile(sweep: str, bits_list=(1, 2, 3, INFINITE), trials: int = 50,
                 symbols_per_trial: int = 10_000, base_seed: int = 0,
                 design: DesignOptions | None = None) -> ExperimentPlan:
    """Laptop-scale sweep plans (K=4, N_v=8, N_e=8 template).

    The swept axis gets a small representative range; the remaining
    parameters stay at the template values.  Average SNR defaults to
    5 dB off the SNR sweep.
    """
    if sweep == SWEEP_SNR:
        return _profile(sweep, (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0),
                        K=4, N_v=8, N_e=8, gamma_db=5.0, bits_list=bits_list,
                        trials=trials, symbols_per_trial=symbols_per_trial,
                        base_seed=base_seed, design=design)
    if sweep == SWEEP_NV:
        return _profile(sweep, (2, 4, 6, 8, 10, 12),
                        K=4, N_v=8, N_e=8, gamma_db=5.0, bits_list=bits_list,
                        trials=trials, symbols_per_trial=symbols_per_trial,
                        base_seed=base_seed, design=design)
    if sweep == SWEEP_NE:
        return _profile(sweep, (4, 8, 16, 32),
                        K=4, N_v=8, N_e=8, gamma_db=5.0, bits_list=bits_list,
                        trials=trials, symbols_per_trial=symbols_per_trial,
                        base_seed=base_seed, design=design)
    raise ConfigError(f"unknown sweep {sweep!r}")


def paper_profile(sweep: str, bits_list=(1, 2, 3, INFINITE), trials: int = 50,
                  symbols_per_trial: int = 10_000, base_seed: int = 0,
                  design: DesignOptions | None = None) -> ExperimentPlan:
    """Full-scale sweep plans (hundreds of elements; hours of compute).

    Provided for completeness; the desk profile exercises the same code
    paths at tractable sizes.
    """
    if sweep == SWEEP_SNR:
        return _profile(sweep, (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0),
                        K=40, N_v=10, N_e=200, gamma_db=5.0,
                        bits_list=bits_list, trials=trials,
                        symbols_per_trial=symbols_per_trial,
                        base_seed=base_seed, design=design)
    if sweep == SWEEP_NV:
        return _profile(sweep, (10, 20, 30, 40, 50, 60, 70),
                        K=50, N_v=10, N_e=20, gamma_db=5.0,
                        bits_list=bits_list, trials=trials,
                        symbols_per_trial=symbols_per_trial,
                        base_seed=base_seed, design=design)
    if sweep == SWEEP_NE:
        return _profile(sweep, (25, 50, 100, 150, 200),
                        K=50, N_v=70, N_e=25, gamma_db=5.0,
                        bits_list=bits_list, trials=trials,
                        symbols_per_trial=symbols_per_trial,
                        base_seed=base_seed, design=design)
    raise ConfigError(f"unknown sweep {sweep!r}")
