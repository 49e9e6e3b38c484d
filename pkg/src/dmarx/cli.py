"""Command line front end: sweep runner and invariant checker.

Two subcommands are exposed through the ``dmarx`` console script.

``run``
    Builds an experiment plan from a profile (``desk`` or ``paper``),
    applies overrides from a config file and from command line flags,
    executes the sweep, and writes the results CSV plus a companion
    plot-data file at ``<out>.plot.csv``.

``validate``
    Executes a fast suite of internal consistency checks (quantizer
    gain anchors, LMMSE normal equations, relaxation duality gap,
    descent trajectory, seeding and CSV round trips) and prints one
    PASS/FAIL line per property.  Exit status is 0 only if every
    property holds.

Option precedence for ``run`` is: command line flag, then config file
entry, then the ``DMA_SEED`` environment variable (seed only), then
built-in defaults.  The config file is INI-style text parsed with
:mod:`configparser`; keys live in a ``[run]`` section and mirror the
flag names, for example::

    [run]
    sweep = snr
    bits = 1,2,inf
    trials = 20
    out = results.csv
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import os
import sys
import tempfile

import numpy as np

from .design import (
    AnalogCombiner,
    DesignOptions,
    alternating_design,
    analytic_mse,
    digital_combiner,
    quadratic_form,
    quadratic_objective,
)
from .harness import (
    SWEEP_NE,
    SWEEP_NV,
    SWEEP_SNR,
    ExperimentRecord,
    derive_seed,
    desk_profile,
    emit_csv,
    emit_plot_data,
    paper_profile,
    parse_csv,
    run_experiment,
)
from .model import ConfigError, NumericalFailure, make_config, sample_channel
from .quantizer import (
    INFINITE,
    LARGE_K,
    bussgang_stats,
    make_uniform_quantizer,
    quantize_complex,
    rho_b_closed_form,
)
from .sdp import build_sdp_problem, extract_rank_one, phase_objective, solve_sdp

__all__ = ["main"]

_ENV_SEED = "DMA_SEED"


# ====================================================================
# Flag parsing helpers
# ====================================================================


def _parse_bits(text):
    """Parse a comma separated bit list such as ``1,2,3,inf``.

    Parameters
    ----------
    text : str
        Comma separated bit depths; the literal ``inf`` selects the
        unquantized reference chain.

    Returns
    -------
    tuple
        Bit depths as integers, with ``inf`` mapped to ``INFINITE``.
        Duplicates are dropped while preserving order.
    """
    out = []
    for part in text.split(","):
        part = part.strip().lower()
        if not part:
            continue
        if part == "inf":
            value = INFINITE
        else:
            try:
                value = int(part)
            except ValueError:
                raise ConfigError(f"unparseable bit depth {part!r} in {text!r}")
        if value not in out:
            out.append(value)
    if not out:
        raise ConfigError(f"empty bit list {text!r}")
    return tuple(out)


def _parse_float_list(text):
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"unparseable numeric list {text!r}")


def _parse_int_list(text):
    try:
        return tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"unparseable integer list {text!r}")


def _read_config(path):
    """Load the ``[run]`` section of an INI config file as a dict.

    Keys are normalized so that ``snr_db`` and ``snr-db`` are
    interchangeable.  Unknown keys raise ``ConfigError`` rather than
    being silently ignored.
    """
    known = {
        "sweep", "bits", "profile", "trials", "seed", "out",
        "snr-db", "nv", "ne", "iter-max", "tol",
    }
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file {path!r} not found or unreadable")
    if not parser.has_section("run"):
        raise ConfigError(f"config file {path!r} has no [run] section")
    out = {}
    for key, value in parser.items("run"):
        norm = key.strip().lower().replace("_", "-")
        if norm not in known:
            raise ConfigError(f"unknown config key {key!r} in {path!r}")
        out[norm] = value.strip()
    return out


def _merge_option(name, cli_value, config, parse):
    """Resolve one option: CLI flag first, then config file, else None."""
    if cli_value is not None:
        return cli_value
    if name in config:
        raw = config[name]
        return parse(raw) if parse is not None else raw
    return None


# ====================================================================
# run subcommand
# ====================================================================


def _build_plan(args, config):
    """Assemble the experiment plan from merged CLI/config options."""
    sweep = _merge_option("sweep", args.sweep, config, str)
    if sweep is None:
        raise ConfigError("no sweep selected; pass --sweep or set it in the config")
    sweep = sweep.strip().lower()
    if sweep not in (SWEEP_SNR, SWEEP_NV, SWEEP_NE):
        raise ConfigError(f"unknown sweep {sweep!r}; expected snr, nv, or ne")

    profile = _merge_option("profile", args.profile, config, str) or "desk"
    profile = profile.strip().lower()
    if profile not in ("desk", "paper"):
        raise ConfigError(f"unknown profile {profile!r}; expected desk or paper")

    bits = _merge_option("bits", args.bits and _parse_bits(args.bits), config,
                         _parse_bits) or (1, 2, 3, INFINITE)
    trials = _merge_option("trials", args.trials, config, int)
    seed = _merge_option("seed", args.seed, config, int)
    if seed is None and os.environ.get(_ENV_SEED):
        try:
            seed = int(os.environ[_ENV_SEED])
        except ValueError:
            raise ConfigError(
                f"environment variable {_ENV_SEED} is not an integer: "
                f"{os.environ[_ENV_SEED]!r}")
    iter_max = _merge_option("iter-max", args.iter_max, config, int)
    tol = _merge_option("tol", args.tol, config, float)

    design = DesignOptions(
        iter_max=iter_max if iter_max is not None else 20,
        tolerance=tol if tol is not None else 1e-4,
    )
    builder = desk_profile if profile == "desk" else paper_profile
    kwargs = dict(bits_list=bits, design=design)
    if trials is not None:
        kwargs["trials"] = trials
    if seed is not None:
        kwargs["base_seed"] = seed
    plan = builder(sweep, **kwargs)

    # Optional sweep-grid overrides; each list flag is tied to one sweep.
    grids = {
        SWEEP_SNR: _merge_option("snr-db", args.snr_db and _parse_float_list(args.snr_db),
                                 config, _parse_float_list),
        SWEEP_NV: _merge_option("nv", args.nv and _parse_int_list(args.nv),
                                config, _parse_int_list),
        SWEEP_NE: _merge_option("ne", args.ne and _parse_int_list(args.ne),
                                config, _parse_int_list),
    }
    for grid_sweep, values in grids.items():
        if values is None:
            continue
        if grid_sweep != sweep:
            flag = {SWEEP_SNR: "--snr-db", SWEEP_NV: "--nv", SWEEP_NE: "--ne"}[grid_sweep]
            raise ConfigError(f"{flag} applies only to --sweep {grid_sweep}")
        plan = dataclasses.replace(plan, sweep_values=values)
    return plan


def _cmd_run(args):
    config = _read_config(args.config) if args.config else {}
    out_path = _merge_option("out", args.out, config, str)
    if out_path is None:
        raise ConfigError("no output path; pass --out or set it in the config")
    plan = _build_plan(args, config)
    records = run_experiment(plan)
    emit_csv(records, out_path)
    plot_path = out_path + ".plot.csv"
    emit_plot_data(records, plot_path, users=plan.fixed.K)
    print(f"wrote {len(records)} records to {out_path}")
    print(f"wrote plot data to {plot_path}")
    return 0


# ====================================================================
# validate subcommand: fast property suite
# ====================================================================


def _check_quantizer_gain_anchors():
    """One-bit equivalent gain equals 2/pi; gains rise toward one."""
    spec1 = make_uniform_quantizer(1)
    rho1 = rho_b_closed_form(spec1, N_e=8, K=4, gamma_av=2.0)
    if abs(rho1 - 2.0 / np.pi) > 1e-6:
        return f"one-bit gain {rho1:.12f} != 2/pi"
    rhos = [rho_b_closed_form(make_uniform_quantizer(b), 8, 4, 2.0)
            for b in (1, 2, 3, 4)]
    if not all(rhos[i] < rhos[i + 1] for i in range(3)):
        return f"gains not increasing in resolution: {rhos}"
    if not rhos[-1] < 1.0:
        return f"four-bit gain {rhos[-1]} not below one"
    return None


def _check_distortion_orthogonality():
    """Bussgang residual is uncorrelated with the quantizer input."""
    rng = np.random.default_rng(11)
    spec = make_uniform_quantizer(2)
    y = (rng.standard_normal(200_000) + 1j * rng.standard_normal(200_000)) / np.sqrt(2)
    z = quantize_complex(spec, y)
    rho = np.vdot(y, z).real / np.vdot(y, y).real
    d = z - rho * y
    corr = abs(np.vdot(y, d)) / y.size
    if corr > 5e-3:
        return f"residual correlation {corr:.2e} exceeds 5e-3"
    return None


def _check_lmmse_normal_equations():
    """The digital stage satisfies its defining linear system."""
    cfg = make_config(K=3, N_v=4, N_e=4, P_s=2.0, sigma_n2=1.0)
    ch = sample_channel(cfg, seed=5)
    comb = AnalogCombiner.random(cfg.N_v, cfg.N_e, np.random.default_rng(2))
    stats = bussgang_stats(ch, cfg, comb, make_uniform_quantizer(3), LARGE_K)
    W = digital_combiner(stats).W
    resid = np.abs(stats.C_z @ W - stats.C_zs).max()
    scale = max(1.0, np.abs(stats.C_zs).max())
    if resid > 1e-8 * scale:
        return f"normal-equation residual {resid:.2e}"
    return None


def _check_sdp_duality_gap():
    """Solver certificate: small gap, bound dominating the objective."""
    rng = np.random.default_rng(3)
    n = 8
    xi = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Psi = (A @ A.conj().T) / n
    sol = solve_sdp(build_sdp_problem(xi, Psi))
    if not sol.converged:
        return "solver did not converge"
    if sol.gap > 1e-6:
        return f"duality gap {sol.gap:.2e}"
    if sol.bound < sol.objective - 1e-8 * max(1.0, abs(sol.bound)):
        return f"bound {sol.bound:.6f} below objective {sol.objective:.6f}"
    u = extract_rank_one(sol.U, xi, Psi, count=100, rng=7)
    value = phase_objective(xi, Psi, u)
    if value > sol.bound + 1e-6 * max(1.0, abs(sol.bound)):
        return f"extraction {value:.6f} exceeds bound {sol.bound:.6f}"
    return None


def _check_descent_trajectory():
    """Alternating design never increases the analytic objective."""
    cfg = make_config(K=2, N_v=3, N_e=4, P_s=4.0, sigma_n2=2.0)
    ch = sample_channel(cfg, seed=9)
    res = alternating_design(ch, cfg, make_uniform_quantizer(2),
                             DesignOptions(iter_max=8), seed=1)
    diffs = np.diff(res.mse_trajectory)
    if not np.all(diffs <= 1e-10):
        return f"trajectory increased by {diffs.max():.2e}"
    feas = res.analog.feasibility_error()
    if feas > 1e-9:
        return f"final weights off the response circle by {feas:.2e}"
    return None


def _check_surrogate_identity():
    """Analytic MSE and the phase-domain objective differ by a constant."""
    cfg = make_config(K=3, N_v=2, N_e=6, P_s=3.0, sigma_n2=1.5)
    ch = sample_channel(cfg, seed=21)
    rng = np.random.default_rng(4)
    spec = make_uniform_quantizer(2)
    base = AnalogCombiner.random(cfg.N_v, cfg.N_e, rng)
    stats = bussgang_stats(ch, cfg, base, spec, LARGE_K)
    form = quadratic_form(ch, cfg, base, stats)
    from .design import DigitalCombiner
    fixed_w = DigitalCombiner(form.Phi)
    totals = []
    for _ in range(20):
        probe = AnalogCombiner.random(cfg.N_v, cfg.N_e, rng)
        st = bussgang_stats(ch, cfg, probe, spec, LARGE_K)
        totals.append(analytic_mse(st, fixed_w, cfg)
                      + cfg.sigma_n2 * quadratic_objective(form, probe.q_stacked))
    totals = np.asarray(totals)
    spread = (totals.max() - totals.min()) / abs(totals.mean())
    if spread > 1e-10:
        return f"identity drift {spread:.2e}"
    return None


def _check_seed_derivation():
    """Seed hashing is deterministic and type-sensitive."""
    a = derive_seed(7, "snr", 1.0, 3)
    b = derive_seed(7, "snr", 1.0, 3)
    if a != b:
        return "same inputs hashed to different seeds"
    variants = {
        derive_seed(7, 1), derive_seed(7, 1.0), derive_seed(7, "1"),
        derive_seed(7, 1, 0), derive_seed(8, 1),
    }
    if len(variants) != 5:
        return "seed collisions across distinct coordinate tuples"
    return None


def _check_csv_round_trip():
    """emit/parse is the identity on experiment records."""
    records = [
        ExperimentRecord(sweep=SWEEP_SNR, sweep_value=-5.0, bits=1,
                         mse_exact=3.25, mse_approx=3.5, trials_used=4, seed=9),
        ExperimentRecord(sweep=SWEEP_SNR, sweep_value=-5.0, bits=INFINITE,
                         mse_exact=2.0 / 3.0, mse_approx=0.66, trials_used=4, seed=9),
    ]
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "records.csv")
        emit_csv(records, path)
        parsed = parse_csv(path)
    for orig, back in zip(records, parsed):
        same = (orig.sweep == back.sweep and orig.sweep_value == back.sweep_value
                and orig.bits == back.bits and orig.mse_exact == back.mse_exact
                and orig.mse_approx == back.mse_approx
                and orig.trials_used == back.trials_used and orig.seed == back.seed)
        if not same:
            return f"round trip mismatch: {orig} vs {back}"
    return None


_VALIDATORS = (
    ("quantizer-gain-anchors", _check_quantizer_gain_anchors),
    ("distortion-orthogonality", _check_distortion_orthogonality),
    ("lmmse-normal-equations", _check_lmmse_normal_equations),
    ("sdp-duality-gap", _check_sdp_duality_gap),
    ("descent-trajectory", _check_descent_trajectory),
    ("surrogate-identity", _check_surrogate_identity),
    ("seed-derivation", _check_seed_derivation),
    ("csv-round-trip", _check_csv_round_trip),
)


def _cmd_validate(args):
    failures = 0
    for name, check in _VALIDATORS:
        try:
            detail = check()
        except Exception as exc:  # surface, do not abort the suite
            detail = f"{type(exc).__name__}: {exc}"
        if detail is None:
            print(f"PASS {name}")
        else:
            print(f"FAIL {name}: {detail}")
            failures += 1
    if failures:
        print(f"{failures} of {len(_VALIDATORS)} properties failed")
    else:
        print(f"all {len(_VALIDATORS)} properties hold")
    return 1 if failures else 0


# ====================================================================
# Entry point
# ====================================================================


def _make_parser():
    parser = argparse.ArgumentParser(
        prog="dmarx",
        description="Run metasurface receiver design sweeps and checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a sweep and write CSV results")
    run.add_argument("--sweep", choices=(SWEEP_SNR, SWEEP_NV, SWEEP_NE),
                     help="which system parameter to sweep")
    run.add_argument("--bits", help="comma separated ADC resolutions, e.g. 1,2,3,inf")
    run.add_argument("--profile", choices=("desk", "paper"),
                     help="scenario scale (default desk)")
    run.add_argument("--trials", type=int, help="channel realizations per point")
    run.add_argument("--seed", type=int, help="base seed for all randomness")
    run.add_argument("--out", help="output CSV path")
    run.add_argument("--snr-db",
                     help="override SNR grid in dB, e.g. --snr-db=-10,-5,0 "
                          "(the = form is needed for negative values)")
    run.add_argument("--nv", help="override microstrip-count grid, e.g. 2,4,8")
    run.add_argument("--ne", help="override elements-per-strip grid, e.g. 4,8,16")
    run.add_argument("--iter-max", type=int, help="alternating iteration cap")
    run.add_argument("--tol", type=float, help="relative MSE convergence tolerance")
    run.add_argument("--config", help="INI config file with a [run] section")
    run.set_defaults(func=_cmd_run)

    validate = sub.add_parser("validate",
                              help="run the invariant suite and report per property")
    validate.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None):
    """Console entry point; returns a process exit status."""
    parser = _make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
