"""Tensor completion of partially observed k-space by alternating solvers.

The model seeks a tensor M matching the observations on Omega whose mode
unfoldings are simultaneously low rank, optionally splitting off a component
S that is sparse in a (unitary) transform of image space. Two solvers are
provided: block coordinate descent with exact block minimizers, and a
consensus ADMM with one dual tensor per mode. Both expose the per-mode
low-rank matrices that later drive active sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import SVDFactors, shrink_factors, svt
from .tensors import (
    ObservationSet,
    fft_forward,
    fft_inverse,
    fold,
    scatter_observed,
    unfold,
)


class DivergenceError(RuntimeError):
    """Raised when an iterate turns non-finite (bad parameters or divergence)."""


class IdentityTransform:
    """Unitary sparsifying-transform seam; the default is a no-op.

    Replacements must be unitary so the sparse proximal step stays exact.
    """

    def forward(self, x: np.ndarray) -> np.ndarray:
        return x

    def inverse(self, x: np.ndarray) -> np.ndarray:
        return x


IDENTITY = IdentityTransform()


@dataclass
class ProblemSpec:
    """Completion problem: observations, weights, and solver knobs.

    alpha weights the per-mode nuclear norms (positive, summing to 1);
    lam holds the per-mode quadratic coupling weights of the BCD relaxation;
    rho is the ADMM penalty; lambda_s >= 0 weights the transform-domain
    sparsity of S and 0 disables the sparse component entirely.
    """

    shape: tuple
    omega: ObservationSet
    alpha: np.ndarray = None
    lam: np.ndarray = None
    rho: float = 1.0
    lambda_s: float = 0.0
    transform: object = IDENTITY
    solver: str = "admm"
    max_sweeps: int = 200
    tol: float = 1e-6

    def __post_init__(self):
        self.shape = tuple(int(s) for s in self.shape)
        n = len(self.shape)
        if n < 2:
            raise ValueError("need at least 2 modes")
        if self.omega.shape != self.shape:
            raise ValueError("observation set shape mismatch")
        self.alpha = np.full(n, 1.0 / n) if self.alpha is None else np.asarray(self.alpha, dtype=float)
        self.lam = np.ones(n) if self.lam is None else np.asarray(self.lam, dtype=float)
        if len(self.alpha) != n or len(self.lam) != n:
            raise ValueError("alpha and lam must have one entry per mode")
        if (self.alpha <= 0).any() or abs(self.alpha.sum() - 1.0) > 1e-9:
            raise ValueError("alpha must be positive and sum to 1")
        if (self.lam <= 0).any() or self.rho <= 0 or self.lambda_s < 0:
            raise ValueError("lam and rho must be positive, lambda_s nonnegative")
        if self.solver not in ("bcd", "admm"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.max_sweeps < 1 or self.tol <= 0:
            raise ValueError("max_sweeps must be >= 1 and tol > 0")


@dataclass
class SolverState:
    """Mutable iterate: completion M, sparse part S, per-mode matrices L,
    ADMM duals Y, and the SVD factors of each L cached by the last sweep."""

    M: np.ndarray
    S: np.ndarray
    L: list
    Y: list | None
    sweep: int = 0
    objective_history: list = field(default_factory=list)
    mode_svd: list = field(default_factory=list)


@dataclass
class ModeApproximations:
    """Per-mode completions (each agreeing with the data on Omega) and their
    normalized weights; the committee consumed by the sampling utilities."""

    approx: list
    weights: np.ndarray
    omega: ObservationSet | None = None


def mode_weights(p: ProblemSpec) -> np.ndarray:
    """Committee weights: uniform for ADMM, lam-proportional for BCD."""
    n = len(p.shape)
    if p.solver == "admm":
        return np.full(n, 1.0 / n)
    return p.lam / p.lam.sum()


def init_state(p: ProblemSpec) -> SolverState:
    """Zero-initialized state with the observed entries scattered into M."""
    n = len(p.shape)
    M = scatter_observed(np.zeros(p.shape, dtype=np.complex128), p.omega)
    S = np.zeros(p.shape, dtype=np.complex128)
    L = [unfold(M, i) for i in range(n)]
    Y = [np.zeros(p.shape, dtype=np.complex128) for _ in range(n)] if p.solver == "admm" else None
    return SolverState(M=M, S=S, L=L, Y=Y, mode_svd=[None] * n)


def _sparse_prox(resid: np.ndarray, level: float, transform) -> np.ndarray:
    """Exact minimizer of  0.5||S - resid||_F^2 + level * ||T F^-1 S||_1
    for a unitary transform: threshold in the transformed image domain."""
    from .linalg import soft_threshold

    z = transform.forward(fft_inverse(resid))
    return fft_forward(transform.inverse(soft_threshold(z, level)))


def _check_finite(state: SolverState):
    ok = np.isfinite(state.M).all() and np.isfinite(state.S).all()
    ok = ok and all(np.isfinite(L).all() for L in state.L)
    if not ok:
        raise DivergenceError(f"non-finite iterate after sweep {state.sweep}")


def _svt_step(m, tau, sweep):
    try:
        return svt(m, tau)
    except ValueError as e:
        raise DivergenceError(f"non-finite iterate in sweep {sweep + 1}: {e}") from e


def bcd_sweep(state: SolverState, p: ProblemSpec) -> SolverState:
    """One block coordinate descent sweep (exact minimizer per block)."""
    if p.solver != "bcd":
        raise ValueError("bcd_sweep requires solver='bcd'")
    n = len(p.shape)
    lam_sum = p.lam.sum()
    for i in range(n):
        tau = p.alpha[i] / p.lam[i]
        Z, f = _svt_step(unfold(state.M - state.S, i), tau, state.sweep)
        state.L[i] = Z
        state.mode_svd[i] = shrink_factors(f, tau)
    low = sum(p.lam[i] * fold(state.L[i], i, p.shape) for i in range(n)) / lam_sum
    if p.lambda_s > 0:
        state.S = _sparse_prox(state.M - low, p.lambda_s / lam_sum, p.transform)
    else:
        state.S = np.zeros(p.shape, dtype=np.complex128)
    state.M = scatter_observed(low + state.S, p.omega)
    state.sweep += 1
    state.objective_history.append(objective(state, p))
    _check_finite(state)
    return state


def admm_sweep(state: SolverState, p: ProblemSpec) -> SolverState:
    """One ADMM sweep: L (per mode), S, M, then the dual ascent on each Y."""
    if p.solver != "admm":
        raise ValueError("admm_sweep requires solver='admm'")
    n, rho = len(p.shape), p.rho
    for i in range(n):
        tau = p.alpha[i] / rho
        Z, f = _svt_step(unfold(state.M - state.S, i) + unfold(state.Y[i], i) / rho, tau, state.sweep)
        state.L[i] = Z
        state.mode_svd[i] = shrink_factors(f, tau)
    folds = [fold(state.L[i], i, p.shape) for i in range(n)]
    if p.lambda_s > 0:
        c = state.M - sum(folds[i] / n - state.Y[i] / (n * rho) for i in range(n))
        state.S = _sparse_prox(c, p.lambda_s / (n * rho), p.transform)
    else:
        state.S = np.zeros(p.shape, dtype=np.complex128)
    m_hat = sum(folds[i] + state.S - state.Y[i] / rho for i in range(n)) / n
    state.M = scatter_observed(m_hat, p.omega)
    for i in range(n):
        state.Y[i] = state.Y[i] - rho * (folds[i] + state.S - state.M)
    state.sweep += 1
    state.objective_history.append(objective(state, p))
    _check_finite(state)
    return state


def objective(state: SolverState, p: ProblemSpec) -> float:
    """Objective at the current iterate.

    BCD: weighted nuclear norms + quadratic couplings + sparsity penalty.
    ADMM: the augmented Lagrangian (can be negative once duals are active).
    """
    n = len(p.shape)
    val = 0.0
    for i in range(n):
        val += p.alpha[i] * float(np.linalg.svd(state.L[i], compute_uv=False).sum())
    for i in range(n):
        r = state.L[i] + unfold(state.S, i) - unfold(state.M, i)
        w = p.lam[i] if p.solver == "bcd" else p.rho
        val += 0.5 * w * float(np.linalg.norm(r) ** 2)
    if p.solver == "admm":
        for i in range(n):
            resid = state.M - fold(state.L[i], i, p.shape) - state.S
            val += float(np.real(np.vdot(state.Y[i], resid)))
    if p.lambda_s > 0:
        z = p.transform.forward(fft_inverse(state.S))
        val += p.lambda_s * float(np.abs(z).sum())
    return val


def mode_approximations(state: SolverState, p: ProblemSpec) -> ModeApproximations:
    """Fold each L_i back to a tensor and force the observed entries."""
    approx = [scatter_observed(fold(L, i, p.shape), p.omega) for i, L in enumerate(state.L)]
    return ModeApproximations(approx=approx, weights=mode_weights(p), omega=p.omega)


def solve(p: ProblemSpec, state: SolverState | None = None) -> tuple[SolverState, ModeApproximations]:
    """Run sweeps until the relative change of M drops below tol or the sweep
    budget is spent. Pass a previous state to warm-start; its M is refreshed
    with the (possibly grown) observation set first."""
    if state is None:
        state = init_state(p)
    else:
        state.M = scatter_observed(state.M, p.omega)
        if p.solver == "admm" and state.Y is None:
            state.Y = [np.zeros(p.shape, dtype=np.complex128) for _ in p.shape]
    step = bcd_sweep if p.solver == "bcd" else admm_sweep
    for _ in range(p.max_sweeps):
        m_old = state.M
        step(state, p)
        denom = max(float(np.linalg.norm(np.ravel(m_old))), 1e-15)
        if float(np.linalg.norm(np.ravel(state.M - m_old))) / denom < p.tol:
            break
    return state, mode_approximations(state, p)
