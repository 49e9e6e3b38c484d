"""Hybrid combiner design for the quantized microstrip receiver.

Two stages are optimized alternately.  The digital stage is the LMMSE
matrix for the linearized quantizer model, available in closed form
from the second-order statistics.  The analog stage consists of one
constrained weight per radiating element; eliminating the digital
stage turns the mean-square error into a quadratic function of the
stacked analog weights, which is maximized (as a surrogate objective)
over the feasible circle by semidefinite relaxation plus rank-one
extraction.

For a fixed digital matrix ``Phi`` the exact algebraic identity

    MSE(q, Phi) = const - sigma_n2 * (2 Re(xi' q) - q' Psi q)

ties the surrogate to the true objective, so every surrogate
improvement with refreshed statistics can only lower the analytic MSE;
the outer loop additionally rejects any candidate that fails to
improve, making the recorded trajectory monotone by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (ConfigError, NumericalFailure, strip_reduce,
                    ChannelRealization, SystemConfig)
from .quantizer import LARGE_K, BussgangStats, QuantizerSpec, bussgang_stats
from .sdp import (SdpOptions, SdpSolution, build_sdp_problem, solve_sdp,
                  extract_rank_one)

__all__ = [
    "AnalogCombiner",
    "DigitalCombiner",
    "QuadraticForm",
    "DesignOptions",
    "DesignResult",
    "NumericalFailure",
    "digital_combiner",
    "analytic_mse",
    "quadratic_form",
    "quadratic_objective",
    "update_analog",
    "alternating_design",
]

# condition number beyond which the normal matrix gets a trace-scaled
# identity bump before solving
_COND_LIMIT = 1e12
_JITTER = 1e-10


# =====================================================================
# Combiner containers
# =====================================================================

@dataclass(frozen=True)
class AnalogCombiner:
    """Per-element analog weights with a resonant (Lorentzian) constraint.

    Every weight lies on the circle of radius one half centered at
    ``j/2``:  ``q = (j + exp(j*theta)) / 2`` for a tunable phase
    ``theta``, the response set of a passive resonant element.  A strip
    output is the sum of its element signals weighted by the complex
    conjugates of these weights; :meth:`as_matrix` and the statistics
    routines share that convention.

    Attributes
    ----------
    q_stacked : (N,) complex ndarray
        Weights in strip-major element order.
    theta : (N,) float ndarray
        The tuning phases generating ``q_stacked``.
    n_strips, n_elem : int
        Grid shape; ``N = n_strips * n_elem``.
    """

    q_stacked: np.ndarray
    theta: np.ndarray
    n_strips: int
    n_elem: int

    @classmethod
    def from_phases(cls, theta, n_strips: int, n_elem: int) -> "AnalogCombiner":
        """Build the combiner realized by tuning phases ``theta``."""
        theta = np.mod(np.asarray(theta, dtype=float).ravel(), 2.0 * np.pi)
        if theta.size != n_strips * n_elem:
            raise ConfigError(f"need {n_strips * n_elem} phases, "
                              f"got {theta.size}")
        q = 0.5 * (1j + np.exp(1j * theta))
        return cls(q_stacked=q, theta=theta, n_strips=int(n_strips),
                   n_elem=int(n_elem))

    @classmethod
    def from_weights(cls, q, n_strips: int, n_elem: int,
                     tol: float = 1e-8) -> "AnalogCombiner":
        """Build from explicit weights, checking they sit on the circle."""
        q = np.asarray(q, dtype=complex).ravel()
        if q.size != n_strips * n_elem:
            raise ConfigError(f"need {n_strips * n_elem} weights, "
                              f"got {q.size}")
        err = np.abs(np.abs(q - 0.5j) - 0.5).max()
        if err > tol:
            raise ConfigError("weights violate the resonant circle "
                              f"constraint by {err:.3e}")
        theta = np.mod(np.angle(2.0 * q - 1j), 2.0 * np.pi)
        return cls(q_stacked=q, theta=theta, n_strips=int(n_strips),
                   n_elem=int(n_elem))

    @classmethod
    def random(cls, n_strips: int, n_elem: int, rng=None) -> "AnalogCombiner":
        """Uniformly random tuning phases (the standard initialization)."""
        rng = np.random.default_rng(rng)
        theta = rng.uniform(0.0, 2.0 * np.pi, n_strips * n_elem)
        return cls.from_phases(theta, n_strips, n_elem)

    def feasibility_error(self) -> float:
        """Largest deviation of any weight from the resonant circle."""
        return float(np.abs(np.abs(self.q_stacked - 0.5j) - 0.5).max())

    def as_matrix(self) -> np.ndarray:
        """Dense N_v x N combining matrix (conjugated weights, one
        block of ``n_elem`` entries per strip row)."""
        nv, ne = self.n_strips, self.n_elem
        mat = np.zeros((nv, nv * ne), dtype=complex)
        w = np.conj(self.q_stacked)
        for i in range(nv):
            mat[i, i * ne:(i + 1) * ne] = w[i * ne:(i + 1) * ne]
        return mat


@dataclass(frozen=True)
class DigitalCombiner:
    """Digital stage: ``W`` is N_v x K, estimates are ``W' z``."""

    W: np.ndarray

    def estimate(self, z: np.ndarray) -> np.ndarray:
        """Symbol estimates for quantized strip outputs ``z`` (N_v x T)."""
        return self.W.conj().T @ z


# =====================================================================
# LMMSE digital stage
# =====================================================================

def _solve_regularized(lhs: np.ndarray, rhs: np.ndarray,
                       what: str) -> np.ndarray:
    """Solve ``lhs x = rhs`` with a trace-scaled identity bump when the
    left-hand side is near-singular."""
    n = lhs.shape[0]
    cond = np.linalg.cond(lhs)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        lhs = lhs + (_JITTER * np.trace(lhs).real / n) * np.eye(n)
    try:
        out = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"{what}: singular system") from exc
    if not np.all(np.isfinite(out)):
        raise NumericalFailure(f"{what}: non-finite solution")
    return out


def digital_combiner(stats: BussgangStats) -> DigitalCombiner:
    """LMMSE digital matrix ``W = C_z^{-1} C_zs`` for given statistics."""
    W = _solve_regularized(stats.C_z, stats.C_zs, "digital combiner")
    return DigitalCombiner(W=W)


def analytic_mse(stats: BussgangStats, combiner: DigitalCombiner,
                 config: SystemConfig) -> float:
    """Model-based total mean-square error ``E||s - W' z||^2``.

    Evaluates ``tr C_s - 2 Re tr(W' C_zs) + tr(W' C_z W)`` under the
    linearized quantizer model; with the LMMSE ``W`` this is the
    minimum over digital stages for the given analog weights.
    """
    W = combiner.W
    cross = 2.0 * np.real(np.vdot(W, stats.C_zs))
    quad = np.real(np.vdot(W, stats.C_z @ W))
    mse = config.K * config.P_s - cross + quad
    if not np.isfinite(mse):
        raise NumericalFailure("analytic MSE is not finite")
    return max(float(mse), 0.0)


# =====================================================================
# Phase-domain quadratic surrogate
# =====================================================================

@dataclass(frozen=True)
class QuadraticForm:
    """Data of the analog-weight surrogate ``2 Re(xi' q) - q' Psi q``.

    ``Phi`` is the eliminated digital stage (equal to the LMMSE matrix
    of the statistics the form was built from), ``Upsilon`` the
    noise-normalized element covariance that generates ``Psi``.
    """

    xi: np.ndarray
    Psi: np.ndarray
    Phi: np.ndarray
    Upsilon: np.ndarray
    n_strips: int
    n_elem: int


def quadratic_objective(form: QuadraticForm, q: np.ndarray) -> float:
    """Surrogate value of stacked weights ``q`` (higher is better)."""
    q = np.asarray(q, dtype=complex).ravel()
    return float(2.0 * np.real(form.xi.conj() @ q)
                 - np.real(q.conj() @ form.Psi @ q))


def quadratic_form(channel: ChannelRealization, config: SystemConfig,
                   combiner: AnalogCombiner,
                   stats: BussgangStats) -> QuadraticForm:
    """Assemble the surrogate quadratic for the current operating point.

    Valid under the scalar-gain statistics mode, where the quantizer
    gain ``rho`` and the distortion floor do not depend on the analog
    weights.  For a fixed digital stage ``Phi`` the analytic MSE is an
    affine, decreasing function of the surrogate, so maximizing the
    surrogate cannot increase the MSE at the operating point.
    """
    if stats.mode != LARGE_K:
        raise ConfigError("the quadratic surrogate requires statistics in "
                          "scalar-gain ('large_k') mode")
    if config.sigma_n2 <= 0.0:
        raise ConfigError("the surrogate needs a positive noise power")
    nv, ne = config.N_v, config.N_e
    gamma = config.gamma_av
    a = channel.a_diag
    q = combiner.q_stacked
    rho = stats.rho_b

    AH = a[:, None] * channel.H                      # waveguide-shaped channel
    Upsilon = gamma * (AH @ AH.conj().T) + np.diag(np.abs(a) ** 2)
    Upsilon = 0.5 * (Upsilon + Upsilon.conj().T)

    # eliminate the digital stage at the current weights
    B1 = strip_reduce(np.conj(q), Upsilon, nv, ne)               # Q Upsilon
    QUQ = strip_reduce(np.conj(q), B1.conj().T, nv, ne).conj().T
    G = strip_reduce(np.conj(q) * a, channel.H, nv, ne)          # Q A H
    lhs = rho ** 2 * QUQ + stats.C_g / config.sigma_n2
    Phi = gamma * _solve_regularized(lhs, rho * G, "surrogate digital stage")

    Phi_rep = np.repeat(Phi, ne, axis=0)
    xi = gamma * rho * np.einsum("mk,mk->m", AH, np.conj(Phi_rep))
    M = np.conj(Phi) @ Phi.T
    Psi = rho ** 2 * np.repeat(np.repeat(M, ne, axis=0), ne, axis=1) * Upsilon
    Psi = 0.5 * (Psi + Psi.conj().T)
    if not (np.all(np.isfinite(xi)) and np.all(np.isfinite(Psi))):
        raise NumericalFailure("surrogate coefficients are not finite")
    return QuadraticForm(xi=xi, Psi=Psi, Phi=Phi, Upsilon=Upsilon,
                         n_strips=nv, n_elem=ne)


# =====================================================================
# Alternating optimization
# =====================================================================

@dataclass(frozen=True)
class DesignOptions:
    """Outer-loop knobs.

    ``iter_max`` caps the alternations, ``tolerance`` is the relative
    MSE change that counts as converged, ``randomizations`` the number
    of Gaussian draws in the rank-one extraction, and ``sdp`` the inner
    solver options.
    """

    iter_max: int = 20
    tolerance: float = 1e-4
    randomizations: int = 200
    sdp: SdpOptions = field(default_factory=SdpOptions)

    def __post_init__(self):
        if self.iter_max < 0:
            raise ConfigError("iter_max must be nonnegative")
        if not self.tolerance > 0.0:
            raise ConfigError("tolerance must be positive")
        if self.randomizations < 0:
            raise ConfigError("randomizations must be nonnegative")


@dataclass(frozen=True)
class DesignResult:
    """Outcome of the alternating design.

    ``mse_trajectory`` holds the analytic MSE after initialization and
    after every outer iteration (non-increasing); ``stats`` are the
    statistics of the accepted design, handy for downstream evaluation.
    """

    analog: AnalogCombiner
    digital: DigitalCombiner
    mse_trajectory: np.ndarray
    iterations: int
    converged: bool
    stats: BussgangStats


def update_analog(form: QuadraticForm, options: DesignOptions | None = None,
                  rng=None, return_solution: bool = False):
    """One analog-weight update: relax, solve, extract, map back.

    Maximizes the surrogate over the unit-modulus phase vector via the
    semidefinite relaxation, then maps the extracted phases through
    ``q = (j + u) / 2`` onto the resonant circle.  Pure function of the
    surrogate data; the accept/reject logic lives in
    :func:`alternating_design`.
    """
    opts = options or DesignOptions()
    problem = build_sdp_problem(form.xi, form.Psi)
    sol = solve_sdp(problem, opts.sdp)
    u = extract_rank_one(sol.U, form.xi, form.Psi,
                         count=opts.randomizations, rng=rng)
    comb = AnalogCombiner.from_phases(np.angle(u), form.n_strips, form.n_elem)
    if return_solution:
        return comb, sol
    return comb


def alternating_design(channel: ChannelRealization, config: SystemConfig,
                       spec: QuantizerSpec,
                       options: DesignOptions | None = None,
                       seed: int = 0) -> DesignResult:
    """Alternate analog and digital updates from a random start.

    Each iteration rebuilds the scalar-gain statistics, refreshes the
    LMMSE digital stage, maximizes the phase-domain surrogate, and
    accepts the new analog weights only if the analytic MSE (with its
    own refreshed digital stage) does not increase.  Stops when the
    relative MSE change drops below ``options.tolerance`` or after
    ``options.iter_max`` iterations.  Deterministic for a fixed seed.
    """
    opts = options or DesignOptions()
    rng = np.random.default_rng(seed)

    comb = AnalogCombiner.random(config.N_v, config.N_e, rng)
    stats = bussgang_stats(channel, config, comb, spec, LARGE_K)
    digital = digital_combiner(stats)
    mse = analytic_mse(stats, digital, config)
    traj = [mse]

    converged = False
    iterations = 0
    for iterations in range(1, opts.iter_max + 1):
        form = quadratic_form(channel, config, comb, stats)
        cand = update_analog(form, opts, rng=rng)
        cand_stats = bussgang_stats(channel, config, cand, spec, LARGE_K)
        cand_digital = digital_combiner(cand_stats)
        cand_mse = analytic_mse(cand_stats, cand_digital, config)
        if cand_mse <= mse:
            comb, stats, digital, mse = cand, cand_stats, cand_digital, cand_mse
        traj.append(mse)

        prev = traj[-2]
        if abs(prev - mse) <= opts.tolerance * max(prev, 1e-300):
            converged = True
            break

    return DesignResult(analog=comb, digital=digital,
                        mse_trajectory=np.asarray(traj),
                        iterations=iterations, converged=converged,
                        stats=stats)
