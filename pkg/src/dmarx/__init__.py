"""Hybrid analog/digital combining design for metasurface-fed receivers
with low-resolution ADCs.

The package is organized bottom-up:

``model``
    scenario configuration, channel draws, waveguide response, symbol
    transmission
``quantizer``
    uniform complex quantizers, their linear-gain (Bussgang) statistics
``sdp``
    diagonal-constrained semidefinite relaxation solver and rank-one
    extraction used by the analog-combiner update
``design``
    LMMSE digital combiner, the phase-domain quadratic surrogate, and
    the alternating optimization loop
``harness``
    seeded Monte Carlo experiments, CSV emission, sweep profiles
"""

from .model import (
    ConfigError,
    UserLoadError,
    SystemConfig,
    ChannelRealization,
    SignalBatch,
    make_config,
    sample_channel,
    transmit,
)
from .quantizer import (
    INFINITE,
    QuantizerSpec,
    BussgangStats,
    make_uniform_quantizer,
    optimal_uniform_step,
    quantize_complex,
    rho_b_closed_form,
    bussgang_stats,
)
from .sdp import (
    SdpProblem,
    SdpSolution,
    SdpOptions,
    build_sdp_problem,
    solve_sdp,
    extract_rank_one,
    phase_objective,
)
from .design import (
    AnalogCombiner,
    DigitalCombiner,
    QuadraticForm,
    DesignOptions,
    DesignResult,
    NumericalFailure,
    digital_combiner,
    analytic_mse,
    quadratic_form,
    update_analog,
    alternating_design,
)
from .harness import (
    ExperimentPlan,
    ExperimentRecord,
    evaluate_exact_mse,
    run_experiment,
    emit_csv,
    parse_csv,
    emit_plot_data,
    derive_seed,
    desk_profile,
    paper_profile,
)

__version__ = "0.1.0"
