"""Uniform complex quantizers and their linearized statistics.

Each microstrip output is digitized by a pair of b-bit ADCs acting
separately on the real and imaginary parts.  For analysis the memoryless
quantizer is replaced by its statistically equivalent linear model

    z = F_b y + g,

where ``F_b`` is the (diagonal, real) linear gain and ``g`` is distortion
uncorrelated with ``y``.  Two regimes are provided: closed forms that
hold when the number of users is large, and exact second-order
statistics driven by the true output covariance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np
from scipy import optimize, special

from .model import ConfigError, NumericalFailure, strip_reduce

if TYPE_CHECKING:  # pragma: no cover - import cycle guard
    from .design import AnalogCombiner
    from .model import ChannelRealization, SystemConfig

__all__ = [
    "INFINITE",
    "LARGE_K",
    "EXACT",
    "QuantizerSpec",
    "BussgangStats",
    "make_uniform_quantizer",
    "optimal_uniform_step",
    "quantize_complex",
    "rho_b_closed_form",
    "bussgang_stats",
]

#: Sentinel resolution for an ideal (unquantized) ADC.
INFINITE = math.inf

#: Statistics modes for :func:`bussgang_stats`.
LARGE_K = "large_k"
EXACT = "exact"


# =====================================================================
# Quantizer construction
# =====================================================================

@dataclass(frozen=True)
class QuantizerSpec:
    """A scalar b-bit quantizer applied per real dimension.

    Attributes
    ----------
    b : int or math.inf
        Resolution in bits; ``INFINITE`` marks the identity quantizer.
    thresholds : ndarray or None
        2^b + 1 decision thresholds, first -inf and last +inf, already
        scaled to ``input_std``.  None for the identity quantizer.
    levels : ndarray or None
        2^b reconstruction levels, likewise pre-scaled.
    input_std : float
        Per-real-dimension standard deviation the quantizer is scaled
        to.  Thresholds and levels are stored in absolute units, i.e.
        already multiplied by this value.
    """

    b: float
    thresholds: np.ndarray | None
    levels: np.ndarray | None
    input_std: float

    @property
    def is_identity(self) -> bool:
        return self.b == INFINITE

    @property
    def n_levels(self) -> int:
        if self.is_identity:
            raise ConfigError("identity quantizer has no level set")
        return int(2 ** self.b)


def _unit_gaussian_step_mse(delta: float, b: int) -> float:
    # E[(x - Q(x))^2] for x ~ N(0,1) through a uniform mid-rise quantizer
    # with step delta, via exact per-bin Gaussian integrals.
    half = 2 ** (b - 1)
    inner = (np.arange(1, 2 * half) - half) * delta
    lev = (np.arange(2 * half) - half + 0.5) * delta
    cdf = np.concatenate(([0.0], special.ndtr(inner), [1.0]))
    pdf = np.concatenate(([0.0], np.exp(-inner ** 2 / 2) / np.sqrt(2 * np.pi),
                          [0.0]))
    tpdf = np.concatenate(([0.0], inner * np.exp(-inner ** 2 / 2)
                           / np.sqrt(2 * np.pi), [0.0]))
    prob = cdf[1:] - cdf[:-1]
    ex = pdf[:-1] - pdf[1:]
    ex2 = prob + tpdf[:-1] - tpdf[1:]
    return float(np.sum(ex2 - 2.0 * lev * ex + lev ** 2 * prob))


@lru_cache(maxsize=None)
def optimal_uniform_step(b: int) -> float:
    """Distortion-minimizing uniform step for a unit-variance Gaussian.

    Runs a coarse scan followed by golden-section refinement of the
    exact quantizer distortion E[(x - Q(x))^2].  Known optima land at
    1.5958, 0.9957, 0.5860, 0.3352 for b = 1..4.

    Notes
    -----
    The distortion integrand has derivative kinks at every threshold,
    which makes fixed-node Gauss-Hermite quadrature too wobbly to
    locate these minima reliably; the per-bin Gaussian integrals used
    here are exact, so the search is limited only by the golden-section
    tolerance.
    """
    if b != int(b) or b < 1:
        raise ConfigError(f"bit depth must be a positive integer, got {b!r}")
    b = int(b)
    grid = np.linspace(0.02, 4.0, 256)
    vals = np.array([_unit_gaussian_step_mse(d, b) for d in grid])
    k = int(np.argmin(vals))
    k = min(max(k, 1), len(grid) - 2)
    res = optimize.minimize_scalar(
        _unit_gaussian_step_mse, bracket=(grid[k - 1], grid[k], grid[k + 1]),
        args=(b,), method="golden", options={"xtol": 1e-12})
    return float(res.x)


def make_uniform_quantizer(b, input_std: float = 1.0) -> QuantizerSpec:
    """Build a symmetric uniform mid-rise quantizer.

    The step is the distortion-optimal step for a unit-variance
    Gaussian times ``input_std``, so the quantizer is matched to an
    input with that per-real-dimension standard deviation.  ``b`` may be
    ``INFINITE`` for the identity quantizer.
    """
    if input_std <= 0 or not np.isfinite(input_std):
        raise ConfigError(f"input_std must be positive, got {input_std!r}")
    if b == INFINITE:
        return QuantizerSpec(b=INFINITE, thresholds=None, levels=None,
                             input_std=float(input_std))
    if b != int(b) or b < 1:
        raise ConfigError(f"bit depth must be a positive integer or "
                          f"INFINITE, got {b!r}")
    b = int(b)
    step = optimal_uniform_step(b) * input_std
    half = 2 ** (b - 1)
    thresholds = np.concatenate(
        ([-np.inf], (np.arange(1, 2 * half) - half) * step, [np.inf]))
    levels = (np.arange(2 * half) - half + 0.5) * step
    return QuantizerSpec(b=b, thresholds=thresholds, levels=levels,
                         input_std=float(input_std))


def quantize_complex(spec: QuantizerSpec, x: np.ndarray) -> np.ndarray:
    """Quantize real and imaginary parts independently.

    The identity spec returns its input unchanged.  Output has the
    shape of ``x``; every output value is ``levels[i] + 1j*levels[k]``
    for some bins i, k.
    """
    x = np.asarray(x, dtype=complex)
    if spec.is_identity:
        return x
    inner = spec.thresholds[1:-1]
    re = spec.levels[np.searchsorted(inner, x.real, side="right")]
    im = spec.levels[np.searchsorted(inner, x.imag, side="right")]
    return re + 1j * im


# =====================================================================
# Linear-gain statistics
# =====================================================================

def _scalar_gain(thresholds, levels, sigma: float) -> float:
    # E[x Q(x)] / sigma^2 for x ~ N(0, sigma^2), one real dimension.
    t = thresholds / sigma
    expo = np.exp(-t ** 2 / 2.0)           # exp(-inf) -> 0 at the ends
    return float(np.sum(levels * (expo[:-1] - expo[1:]))
                 / (sigma * np.sqrt(2.0 * np.pi)))


def _scalar_power(thresholds, levels, sigma: float) -> float:
    # E[Q(x)^2] for x ~ N(0, sigma^2), one real dimension.
    cdf = special.ndtr(thresholds / sigma)
    return float(np.sum(levels ** 2 * (cdf[1:] - cdf[:-1])))


def rho_b_closed_form(spec: QuantizerSpec, N_e: int, K: int,
                      gamma_av: float) -> float:
    """Linear gain of the quantizer under the large-user-count model.

    When many independent user streams add up, each strip output is
    Gaussian with per-strip variance ``N_e * (K * gamma_av + 1) / 2``
    (in noise-normalized units).  The gain is

        rho_b = sum_i l_i * sqrt(2 / (pi c)) *
                (exp(-2 t_i^2 / c) - exp(-2 t_{i+1}^2 / c)),

    with c the doubled per-strip variance and the spec's thresholds and
    levels rescaled to that modeled variance.  The identity quantizer
    gives exactly 1.  Because the rescaling matches the quantizer to
    the modeled input, the result depends only on the bit depth.
    """
    if spec.is_identity:
        return 1.0
    c = float(N_e) * (float(K) * float(gamma_av) + 1.0)
    if not np.isfinite(c) or c <= 0:
        raise ConfigError(f"modeled variance must be positive and finite, "
                          f"got N_e*(K*gamma_av+1) = {c!r}")
    sigma_model = np.sqrt(c) / 2.0       # per real dimension
    scale = sigma_model / spec.input_std
    t = spec.thresholds * scale
    lev = spec.levels * scale
    expo = np.exp(-2.0 * t ** 2 / c)
    rho = float(np.sum(lev * np.sqrt(2.0 / (np.pi * c))
                       * (expo[:-1] - expo[1:])))
    if not np.isfinite(rho):
        raise NumericalFailure("quantizer gain evaluated to a non-finite value")
    return rho


@dataclass(frozen=True)
class BussgangStats:
    """Second-order statistics of the quantized combiner output.

    ``C_y`` is the analog output covariance, ``C_z`` the quantized
    output covariance, ``C_zs`` the cross-covariance with the symbols,
    ``F_b`` the diagonal linear gain, and ``C_g`` the distortion
    covariance, all N_v x N_v (C_zs is N_v x K).
    """

    C_y: np.ndarray
    C_z: np.ndarray
    C_zs: np.ndarray
    F_b: np.ndarray
    C_g: np.ndarray
    rho_b: float
    mode: str


def bussgang_stats(channel: "ChannelRealization", config: "SystemConfig",
                   Q: "AnalogCombiner", spec: QuantizerSpec,
                   mode: str = LARGE_K) -> BussgangStats:
    """Assemble the linear-model statistics for a given analog combiner.

    Parameters
    ----------
    channel, config : the scenario draw and its parameters.
    Q : AnalogCombiner
        Per-strip combining weights (block structure implied).
    spec : QuantizerSpec
    mode : {"large_k", "exact"}
        ``large_k`` uses the scalar gain of :func:`rho_b_closed_form`
        and a white distortion floor with per-entry power
        ``(1 - rho_b^2) * N_e * (K * gamma_av + 1) / 2``.  ``exact``
        evaluates the per-strip Gaussian gain and distortion power from
        the true diagonal of ``C_y``.

    Notes
    -----
    The analog output covariance is always the exact
    ``C_y = Q A (P_s H H' + sigma_n2 I) A' Q'``; the modes differ only
    in how the quantizer gain and distortion are modeled.
    """
    nv, ne = config.N_v, config.N_e
    w = np.conj(Q.q_stacked) * channel.a_diag
    G = strip_reduce(w, channel.H, nv, ne)           # Q A H, N_v x K
    d_noise = np.abs(w).reshape(nv, ne) ** 2
    C_y = config.P_s * (G @ G.conj().T) \
        + config.sigma_n2 * np.diag(d_noise.sum(axis=1))
    C_y = 0.5 * (C_y + C_y.conj().T)
    if not np.all(np.isfinite(C_y)):
        raise NumericalFailure("analog output covariance is not finite")

    if spec.is_identity:
        rho = 1.0
        F_b = np.eye(nv, dtype=complex)
        C_g = np.zeros((nv, nv), dtype=complex)
    elif mode == LARGE_K:
        rho = rho_b_closed_form(spec, ne, config.K, config.gamma_av)
        F_b = rho * np.eye(nv, dtype=complex)
        floor = (1.0 - rho ** 2) * ne * (config.K * config.gamma_av + 1.0) / 2.0
        C_g = floor * np.eye(nv, dtype=complex)
    elif mode == EXACT:
        diag = C_y.diagonal().real
        if np.any(diag <= 0):
            raise NumericalFailure("exact statistics need positive output power"
                                   " on every strip")
        sig = np.sqrt(diag / 2.0)        # per real dimension
        gains = np.array([_scalar_gain(spec.thresholds, spec.levels, s)
                          for s in sig])
        power = np.array([2.0 * _scalar_power(spec.thresholds, spec.levels, s)
                          for s in sig])
        F_b = np.diag(gains).astype(complex)
        C_g = np.diag(power - gains ** 2 * diag).astype(complex)
        rho = float(np.mean(gains))
    else:
        raise ConfigError(f"unknown statistics mode {mode!r}")

    C_zs = F_b @ G * config.P_s
    C_z = F_b @ C_y @ F_b.conj().T + C_g
    C_z = 0.5 * (C_z + C_z.conj().T)
    if not (np.all(np.isfinite(C_z)) and np.all(np.isfinite(C_zs))):
        raise NumericalFailure("quantized output statistics are not finite")
    return BussgangStats(C_y=C_y, C_z=C_z, C_zs=C_zs, F_b=F_b, C_g=C_g,
                         rho_b=float(rho), mode=mode)
