"""One hybrid combiner design from start to finish.

Draws a channel, runs the alternating optimization at two-bit
resolution, and checks the analytic objective against a simulation
through the true nonlinear quantizer.
"""

import numpy as np

from dmarx import (
    DesignOptions,
    INFINITE,
    alternating_design,
    evaluate_exact_mse,
    make_config,
    make_uniform_quantizer,
    sample_channel,
)

# ====================================================================
# Scenario: 8 users, 4 microstrips of 4 elements, 5 dB average SNR
# ====================================================================

snr = 10.0 ** (5.0 / 10.0)
cfg = make_config(K=8, N_v=4, N_e=4, P_s=snr * 4.0, sigma_n2=4.0, alpha=0.0)
channel = sample_channel(cfg, seed=42)
print(f"scenario: K={cfg.K} users, N={cfg.N} elements on {cfg.N_v} strips")

# ====================================================================
# Alternating design at b=2
# ====================================================================

options = DesignOptions(iter_max=60)
result = alternating_design(channel, cfg, make_uniform_quantizer(2),
                            options, seed=0)
trajectory = result.mse_trajectory / cfg.P_s
print(f"\ntwo-bit design: {result.iterations} iterations, "
      f"converged={result.converged}")
print(f"  objective: {trajectory[0]:.4f} (random start) -> "
      f"{trajectory[-1]:.4f} (final), monotone per step")

# the analog weights stay on the response circle by construction
print(f"  weight feasibility error: {result.analog.feasibility_error():.2e}")

# ====================================================================
# Simulate both designs through the true receive chain
# ====================================================================

# the evaluation quantizer is scaled to the designed operating point
level = float(np.mean(result.stats.C_y.diagonal().real))
eval_spec = make_uniform_quantizer(2, input_std=np.sqrt(level / 2.0))
simulated = evaluate_exact_mse(channel, cfg, eval_spec, result.analog,
                               result.digital, T=50_000, seed=1)

reference = alternating_design(channel, cfg, make_uniform_quantizer(INFINITE),
                               options, seed=0)
ref_simulated = evaluate_exact_mse(channel, cfg,
                                   make_uniform_quantizer(INFINITE),
                                   reference.analog, reference.digital,
                                   T=50_000, seed=1)

print("\nnormalized total error      analytic   simulated")
print(f"  two-bit ADCs              {trajectory[-1]:8.4f}   "
      f"{simulated / cfg.P_s:9.4f}")
print(f"  unquantized reference     "
      f"{reference.mse_trajectory[-1] / cfg.P_s:8.4f}   "
      f"{ref_simulated / cfg.P_s:9.4f}")
print("\nwithout quantization the model is exact, so those two columns")
print("agree to Monte Carlo noise; at b=2 a small model gap remains")
