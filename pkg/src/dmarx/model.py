"""Multiuser uplink model for a microstrip-fed metasurface receiver.

The receive array consists of ``N_v`` parallel microstrips with ``N_e``
radiating elements each, for ``N = N_v * N_e`` elements total.  Every
element observes a narrowband superposition of ``K`` single-antenna user
signals plus thermal noise; the signal captured by element ``l`` of strip
``i`` then propagates along the strip to a single output port, picking up
the complex factor stored on the diagonal of the waveguide matrix.

All randomness is driven by explicit integer seeds through
``numpy.random.default_rng`` so that every draw is reproducible.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConfigError",
    "UserLoadError",
    "NumericalFailure",
    "SystemConfig",
    "ChannelRealization",
    "SignalBatch",
    "make_config",
    "sample_channel",
    "transmit",
    "element_index",
    "strip_reduce",
]


class ConfigError(ValueError):
    """Raised when a system configuration value is out of range."""


class UserLoadError(ConfigError):
    """Raised when the user count exceeds the element count."""


class NumericalFailure(RuntimeError):
    """Raised when a numerical routine produces non-finite or singular
    results that cannot be recovered by regularization."""


# =====================================================================
# Configuration
# =====================================================================

@dataclass(frozen=True)
class SystemConfig:
    """Static scenario parameters.

    Attributes
    ----------
    K : int
        Number of single-antenna users.
    N_v : int
        Number of microstrips (one RF chain and ADC pair each).
    N_e : int
        Number of radiating elements per microstrip.
    P_s : float
        Per-user average transmit power.
    sigma_n2 : float
        Thermal noise power at each element.
    alpha : float
        Waveguide attenuation coefficient, nepers per unit length.
    beta : float
        Waveguide wavenumber, radians per unit length.
    d_e : float
        Inter-element spacing along a strip.
    """

    K: int
    N_v: int
    N_e: int
    P_s: float
    sigma_n2: float
    alpha: float
    beta: float
    d_e: float

    @property
    def N(self) -> int:
        """Total element count N_v * N_e (always recomputed)."""
        return self.N_v * self.N_e

    @property
    def gamma_av(self) -> float:
        """Average receive SNR P_s / sigma_n2."""
        return self.P_s / self.sigma_n2


def make_config(K, N_v, N_e, P_s=1.0, sigma_n2=1.0, alpha=0.6,
                beta=2.0 * np.pi, d_e=0.2) -> SystemConfig:
    """Validate raw scenario parameters and freeze them into a config.

    Defaults model a lossy microstrip with one fifth of a guide
    wavelength between elements (beta = 2*pi means unit guide
    wavelength).

    Raises
    ------
    ConfigError
        If a count or physical parameter is out of range.
    UserLoadError
        If K exceeds the total element count N_v * N_e.
    """
    for name, v in (("K", K), ("N_v", N_v), ("N_e", N_e)):
        if int(v) != v or v < 1:
            raise ConfigError(f"{name} must be a positive integer, got {v!r}")
    K, N_v, N_e = int(K), int(N_v), int(N_e)
    if P_s < 0:
        raise ConfigError(f"P_s must be nonnegative, got {P_s!r}")
    if sigma_n2 < 0:
        raise ConfigError(f"sigma_n2 must be nonnegative, got {sigma_n2!r}")
    if alpha < 0:
        raise ConfigError(f"alpha must be nonnegative, got {alpha!r}")
    if d_e <= 0:
        raise ConfigError(f"d_e must be positive, got {d_e!r}")
    N = N_v * N_e
    if K > N:
        raise UserLoadError(f"K={K} users exceed N={N} elements")
    if N < 2 * K:
        # asymptotic combiner statistics assume many more elements than users
        warnings.warn(
            f"element count N={N} is below 2K={2 * K}; large-array "
            f"approximations may be loose", stacklevel=2)
    return SystemConfig(K=K, N_v=N_v, N_e=N_e, P_s=float(P_s),
                        sigma_n2=float(sigma_n2), alpha=float(alpha),
                        beta=float(beta), d_e=float(d_e))


# =====================================================================
# Element indexing
# =====================================================================

def element_index(strip: int, pos: int, n_elem: int) -> int:
    """Flat index of element ``pos`` on microstrip ``strip`` (0-based).

    This strip-major layout is the single source of truth for how
    length-N vectors map onto the (strip, element) grid; every
    ``reshape(N_v, N_e)`` in the package relies on it.
    """
    return strip * n_elem + pos


def strip_reduce(weights: np.ndarray, x: np.ndarray, n_strips: int,
                 n_elem: int) -> np.ndarray:
    """Per-strip weighted sum over elements.

    Computes ``out[i, ...] = sum_l weights[i*n_elem + l] * x[i*n_elem + l, ...]``
    which is how a bank of per-strip combining weights acts on any
    element-indexed array (vectors, matrices, symbol batches).
    """
    w = np.asarray(weights).reshape(n_strips, n_elem)
    xr = np.asarray(x).reshape(n_strips, n_elem, -1)
    out = np.einsum("ie,iet->it", w, xr)
    if x.ndim == 1:
        return out[:, 0]
    return out.reshape((n_strips,) + x.shape[1:])


# =====================================================================
# Channel
# =====================================================================

@dataclass(frozen=True)
class ChannelRealization:
    """One draw of the user channels plus the waveguide response.

    ``H`` has i.i.d. unit-variance circularly symmetric complex Gaussian
    entries.  ``a_diag`` holds the diagonal of the waveguide matrix: the
    element at position l (1-based) on any strip contributes
    ``exp((alpha + j*beta) * l * d_e) / sqrt(N_e)``.
    """

    H: np.ndarray
    a_diag: np.ndarray
    seed: int

    @property
    def A(self) -> np.ndarray:
        """Dense diagonal waveguide matrix (small-N convenience)."""
        return np.diag(self.a_diag)


def sample_channel(config: SystemConfig, seed: int) -> ChannelRealization:
    """Draw an i.i.d. Rayleigh channel and build the waveguide response.

    Parameters
    ----------
    config : SystemConfig
    seed : int
        Seed for ``numpy.random.default_rng``; equal seeds give
        bit-identical realizations.
    """
    rng = np.random.default_rng(seed)
    N, K = config.N, config.K
    H = (rng.standard_normal((N, K)) + 1j * rng.standard_normal((N, K))) \
        / np.sqrt(2.0)
    # propagation distance grows with the element position on its strip
    pos = np.arange(1, config.N_e + 1) * config.d_e
    strip = np.exp((config.alpha + 1j * config.beta) * pos) / np.sqrt(config.N_e)
    a_diag = np.tile(strip, config.N_v)
    return ChannelRealization(H=H, a_diag=a_diag, seed=int(seed))


# =====================================================================
# Transmission
# =====================================================================

@dataclass(frozen=True)
class SignalBatch:
    """A block of transmitted symbols and the signals they induced.

    ``S`` is K x T (user symbols), ``noise`` and ``R`` are N x T; columns
    are independent channel uses of the same channel realization.
    """

    S: np.ndarray
    noise: np.ndarray
    R: np.ndarray


def transmit(channel: ChannelRealization, config: SystemConfig, T: int,
             seed: int) -> SignalBatch:
    """Simulate ``T`` channel uses: r = H s + n per column.

    Symbols are i.i.d. CN(0, P_s); noise is i.i.d. CN(0, sigma_n2).
    """
    if T < 1:
        raise ConfigError(f"T must be a positive integer, got {T!r}")
    rng = np.random.default_rng(seed)
    K, N = config.K, config.N
    S = np.sqrt(config.P_s / 2.0) * (
        rng.standard_normal((K, T)) + 1j * rng.standard_normal((K, T)))
    noise = np.sqrt(config.sigma_n2 / 2.0) * (
        rng.standard_normal((N, T)) + 1j * rng.standard_normal((N, T)))
    R = channel.H @ S + noise
    return SignalBatch(S=S, noise=noise, R=R)
