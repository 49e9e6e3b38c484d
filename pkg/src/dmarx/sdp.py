"""Diagonal-constrained semidefinite relaxation for phase-only design.

The analog-combiner update reduces to maximizing

    Re(c' u) - 0.5 * u' Psi u,      |u_i| = 1,

with ``c = 2 xi - 1j * Psi @ 1``.  Lifting ``U = [u; 1][u; 1]'`` turns
this into the linear SDP

    max tr(U V)   s.t.  diag(U) = 1,  U >= 0,

where ``V`` packs ``-Psi/2`` in the top-left block and ``c/2`` in the
border column.  For rank-one feasible ``U`` the two objectives agree
exactly, so the SDP value upper-bounds every unimodular candidate.

The solver follows the central path of the dual problem

    min 1'y   s.t.  Diag(y) - V >= 0,

taking damped Newton steps on the log-determinant barrier and shrinking
the barrier weight geometrically.  The primal iterate is recovered as
``U = mu * (Diag(y) - V)^{-1}``, which on the central path has unit
diagonal and duality gap exactly ``mu * (N + 1)``; the returned ``bound
= sum(y)`` certifies that no feasible point (rank-one candidates
included) can exceed it.  Each Newton step costs one Cholesky plus one
dense solve in dimension N + 1, so solves are exact-gap-certified at a
few dozen small-matrix factorizations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .model import ConfigError, NumericalFailure

__all__ = [
    "SdpProblem",
    "SdpOptions",
    "SdpSolution",
    "phase_objective",
    "build_sdp_problem",
    "solve_sdp",
    "extract_rank_one",
]


# =====================================================================
# Problem assembly
# =====================================================================

@dataclass(frozen=True)
class SdpProblem:
    """Lifted maximization data: Hermitian ``V`` of size (n+1) x (n+1)."""

    V: np.ndarray
    n: int


@dataclass(frozen=True)
class SdpOptions:
    """Solver knobs.

    ``tol`` is the relative duality-gap target; ``max_iter`` caps the
    total number of Newton steps across all barrier stages.
    """

    max_iter: int = 500
    tol: float = 1e-8

    def __post_init__(self):
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ConfigError(
                f"max_iter must be a positive integer, got {self.max_iter!r}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol!r}")


@dataclass(frozen=True)
class SdpSolution:
    """Solver output.

    ``U`` is exactly feasible (unit diagonal, positive semidefinite),
    ``objective = tr(U V)``, and ``bound`` is the certified dual upper
    bound on the SDP optimum; ``gap`` is their difference relative to
    the objective scale.
    """

    U: np.ndarray
    objective: float
    bound: float
    gap: float
    iterations: int
    converged: bool


def _border_vector(xi: np.ndarray, Psi: np.ndarray) -> np.ndarray:
    ones = np.ones(len(xi), dtype=complex)
    return 2.0 * np.asarray(xi, dtype=complex) - 1j * (Psi @ ones)


def phase_objective(xi: np.ndarray, Psi: np.ndarray, u: np.ndarray) -> float:
    """Surrogate value of a unimodular phase vector.

    Equals ``tr(U V)`` of the lifted rank-one matrix built from ``u``,
    which makes values directly comparable with the SDP optimum.
    """
    c = _border_vector(xi, Psi)
    u = np.asarray(u, dtype=complex)
    return float(np.real(c.conj() @ u)
                 - 0.5 * np.real(u.conj() @ Psi @ u))


def _phase_objective_batch(xi, Psi, U_cols):
    c = _border_vector(xi, Psi)
    lin = np.real(c.conj() @ U_cols)
    quad = np.real(np.einsum("nm,nk,km->m", U_cols.conj(), Psi, U_cols))
    return lin - 0.5 * quad


def build_sdp_problem(xi: np.ndarray, Psi: np.ndarray) -> SdpProblem:
    """Assemble the lifted objective matrix ``V`` from the quadratic data."""
    xi = np.asarray(xi, dtype=complex).ravel()
    Psi = np.asarray(Psi, dtype=complex)
    n = xi.size
    if Psi.shape != (n, n):
        raise ConfigError(f"Psi must be {n}x{n}, got {Psi.shape}")
    herm_gap = np.linalg.norm(Psi - Psi.conj().T)
    if herm_gap > 1e-8 * (1.0 + np.linalg.norm(Psi)):
        raise ConfigError("Psi must be Hermitian")
    c = _border_vector(xi, Psi)
    V = np.zeros((n + 1, n + 1), dtype=complex)
    V[:n, :n] = -0.5 * Psi
    V[:n, n] = 0.5 * c
    V[n, :n] = 0.5 * c.conj()
    V = 0.5 * (V + V.conj().T)
    return SdpProblem(V=V, n=n)


# =====================================================================
# Dual path-following solver
# =====================================================================

def _log_det_cholesky(S: np.ndarray):
    """Cholesky factor and log-determinant, or None if not positive
    definite."""
    try:
        chol = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        return None, None
    return chol, 2.0 * float(np.sum(np.log(chol.diagonal().real)))


def solve_sdp(problem: SdpProblem, options: SdpOptions | None = None) -> SdpSolution:
    """Maximize ``tr(U V)`` over Hermitian PSD ``U`` with unit diagonal.

    Returns a solution whose diagonal is exactly one, whose smallest
    eigenvalue is nonnegative up to machine precision, and whose
    objective sits within ``tol`` (relative) of the certified dual
    bound.  If the Newton-step budget runs out first, the best iterate
    is returned with ``converged=False``.
    """
    opts = options or SdpOptions()
    V = problem.V
    m = V.shape[0]
    if not np.all(np.isfinite(V)):
        raise NumericalFailure("objective matrix contains non-finite entries")

    eigs = np.linalg.eigvalsh(V)
    scale = max(1.0, float(np.abs(eigs).max()))
    y = np.full(m, float(eigs[-1]) + 0.1 * scale)
    S = np.diag(y) - V
    mu = float(np.trace(S).real) / m
    eye = np.eye(m)

    def center(mu: float, budget: int, accuracy: float) -> int:
        """Damped Newton on y at fixed barrier weight; returns steps
        used.  ``accuracy`` bounds the final squared Newton decrement."""
        nonlocal y, S
        chol, logdet = _log_det_cholesky(S)
        if chol is None:
            raise NumericalFailure("dual iterate left the cone")
        for step in range(budget):
            Sinv = cho_solve((chol, True), eye)
            grad = 1.0 / mu - Sinv.diagonal().real
            hess = np.abs(Sinv) ** 2
            try:
                direction = np.linalg.solve(
                    hess + (1e-14 * np.trace(hess) / m) * eye.real, -grad)
            except np.linalg.LinAlgError as exc:
                raise NumericalFailure("singular Newton system") from exc
            decrement2 = float(-grad @ direction)
            if decrement2 <= accuracy:
                return step
            phi = float(y.sum()) / mu - logdet
            t = 1.0 if decrement2 < 0.25 else 1.0 / (1.0 + np.sqrt(decrement2))
            for _ in range(60):
                y_new = y + t * direction
                chol_new, logdet_new = _log_det_cholesky(np.diag(y_new) - V)
                if chol_new is not None and \
                        float(y_new.sum()) / mu - logdet_new \
                        <= phi + 1e-4 * t * float(grad @ direction):
                    break
                t *= 0.5
            else:
                raise NumericalFailure("barrier line search failed")
            y, S = y_new, np.diag(y_new) - V
            chol, logdet = chol_new, logdet_new
        return budget

    used = 0
    converged = False
    while True:
        used += center(mu, opts.max_iter - used, accuracy=1e-10)
        gap = m * mu
        if gap <= opts.tol * max(1.0, abs(float(y.sum()))):
            converged = True
            break
        if used >= opts.max_iter:
            break
        mu *= 0.15

    Sinv = cho_solve(cho_factor(S, lower=True), eye)
    U = mu * Sinv
    diag = U.diagonal().real.copy()
    primal_err = float(np.abs(diag - 1.0).max())
    diag[diag < 1e-300] = 1.0
    root = 1.0 / np.sqrt(diag)
    U = U * root[:, None] * root[None, :]
    U = 0.5 * (U + U.conj().T)
    np.fill_diagonal(U, 1.0)

    objective = float(np.real(np.einsum("ij,ji->", U, V)))
    bound = float(y.sum())
    if not (np.isfinite(objective) and np.isfinite(bound)):
        raise NumericalFailure("solver produced a non-finite objective")
    rel_gap = (bound - objective) / max(1.0, abs(bound))
    return SdpSolution(U=U, objective=objective, bound=bound,
                       gap=float(max(rel_gap, primal_err)),
                       iterations=used, converged=converged)


# =====================================================================
# Rank-one extraction
# =====================================================================

def extract_rank_one(U: np.ndarray, xi: np.ndarray, Psi: np.ndarray,
                     count: int = 200, rng=None) -> np.ndarray:
    """Recover a unimodular phase vector from a lifted solution.

    Draws ``count`` Gaussian vectors with covariance ``U``, rescales
    each so its border coordinate is one, projects the remaining
    coordinates onto the unit circle, and keeps the draw with the best
    surrogate value (ties resolve to the lowest draw index).  The
    leading eigenvector of ``U`` is always evaluated as an extra
    candidate.  For exactly rank-one ``U`` the border normalization
    recovers the underlying vector without any phase ambiguity.
    """
    rng = np.random.default_rng(rng)
    U = np.asarray(U, dtype=complex)
    m = U.shape[0]
    n = m - 1

    vals, vecs = np.linalg.eigh(0.5 * (U + U.conj().T))
    vals = np.clip(vals, 0.0, None)
    root = vecs * np.sqrt(vals)

    cands = []
    if count > 0:
        zr = rng.standard_normal((m, count))
        zi = rng.standard_normal((m, count))
        draws = root @ ((zr + 1j * zi) / np.sqrt(2.0))
        border = draws[n, :]
        safe = np.abs(border) > 1e-12
        draws[:, safe] = draws[:, safe] / border[safe]
        cands.append(draws[:n, :])

    lead = vecs[:, -1]
    if abs(lead[n]) > 1e-9:
        lead = lead / lead[n]
    cands.append(lead[:n, None])

    cols = np.concatenate(cands, axis=1)
    mag = np.abs(cols)
    cols = np.where(mag > 1e-12, cols / np.where(mag > 0, mag, 1.0), 1.0)

    scores = _phase_objective_batch(xi, Psi, cols)
    best = int(np.argmax(scores))
    return cols[:, best].copy()
