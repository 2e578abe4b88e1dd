"""Active sampling utilities built on the solver's per-mode approximations.

The per-mode completions form a committee: where they disagree the
reconstruction is uncertain, and the disagreement (predictive variance) or
the leverage scores of the per-mode factors score every unobserved element.
Scores are summed over acquisition patterns (single elements or whole
fibers) and the top-scoring patterns are measured next.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import leverage_scores
from .solver import ModeApproximations, SolverState, mode_weights
from .tensors import fold

VARIANCE = "var"
LEVERAGE = "lev"
VAR_PLUS_LEV = "var_plus_lev"
VAR_TIMES_LEV = "var_times_lev"


@dataclass(frozen=True)
class Pattern:
    """An atomically-acquirable group of tensor elements.

    ``elements`` is an ``(m, n)`` array of 0-based multi-indices; a fiber
    pattern varies only in coordinate ``mode``.
    """

    id: int
    elements: np.ndarray
    kind: str = "fiber"
    mode: int | None = None


@dataclass
class UtilityField:
    """Nonnegative real score per tensor element plus the method that made it."""

    field: np.ndarray
    method: str


@dataclass
class LemmaReport:
    """Decomposition of the committee-mean error into per-mode errors minus
    the total committee variance, with the identity's residual."""

    mu_tot: float
    mu_i: np.ndarray
    mu: float
    residual: float


def variance_utility(ma: ModeApproximations) -> UtilityField:
    """Predictive variance of the committee, exactly zero on observed entries.

    Complex disagreement enters as the squared modulus so the field is real
    and nonnegative.
    """
    if len(ma.approx) < 2:
        raise ValueError("need a committee of at least 2 mode approximations")
    shape = ma.approx[0].shape
    if any(a.shape != shape for a in ma.approx):
        raise ValueError("mode approximations must share a shape")
    if abs(float(np.sum(ma.weights)) - 1.0) > 1e-9 or (np.asarray(ma.weights) < 0).any():
        raise ValueError("weights must be nonnegative and sum to 1")
    mean = sum(w * a for w, a in zip(ma.weights, ma.approx))
    v = sum(w * np.abs(a - mean) ** 2 for w, a in zip(ma.weights, ma.approx))
    if ma.omega is not None and len(ma.omega):
        v.reshape(-1)[ma.omega.flat] = 0.0
    return UtilityField(field=v, method=VARIANCE)


def _leverage_field(state: SolverState, weights, rank_tol: float) -> np.ndarray:
    if not state.mode_svd or any(f is None for f in state.mode_svd):
        raise ValueError("mode SVD cache is empty; run at least one sweep first")
    shape = state.M.shape
    out = np.zeros(shape, dtype=float)
    for k, w in enumerate(weights):
        if w == 0:
            continue
        pair = leverage_scores(state.mode_svd[k], rank_tol)
        if pair.rank_used == 0:
            continue
        out += w * fold(np.outer(pair.left, pair.right), k, shape)
    return out


def leverage_utility(state: SolverState, p, rank_tol: float = 1e-6) -> UtilityField:
    """Mode-weighted average of per-element leverage scores.

    Each mode contributes the outer product of the left and right leverage
    scores of its cached low-rank factor, folded back to tensor shape.
    """
    return UtilityField(field=_leverage_field(state, mode_weights(p), rank_tol), method=LEVERAGE)


def combine_utilities(v: UtilityField, l: UtilityField, mode: str) -> UtilityField:
    """Max-normalize both fields, then take their elementwise sum or product."""
    if v.method != VARIANCE or l.method != LEVERAGE:
        raise ValueError("combine expects a variance field and a leverage field")
    if v.field.shape != l.field.shape:
        raise ValueError(f"shape mismatch: {v.field.shape} vs {l.field.shape}")
    a = v.field / v.field.max() if v.field.max() > 0 else np.zeros_like(v.field)
    b = l.field / l.field.max() if l.field.max() > 0 else np.zeros_like(l.field)
    if mode == "sum":
        return UtilityField(field=a + b, method=VAR_PLUS_LEV)
    if mode == "product":
        return UtilityField(field=a * b, method=VAR_TIMES_LEV)
    raise ValueError(f"unknown combination mode {mode!r}")


def pattern_utility(u: UtilityField, pattern: Pattern) -> float:
    """Sum of the field over the pattern's elements."""
    if pattern.elements.size and (
        pattern.elements.min() < 0
        or (pattern.elements >= np.array(u.field.shape)).any()
    ):
        raise ValueError("pattern element out of range")
    return float(u.field[tuple(pattern.elements.T)].sum())


def select_batch(u: UtilityField, patterns: list, count: int) -> list:
    """The ``count`` patterns with the largest summed utility.

    Ties break toward the smallest pattern id, so selection is deterministic.
    """
    if count > len(patterns):
        raise ValueError(f"requested {count} patterns but only {len(patterns)} candidates")
    scored = sorted(patterns, key=lambda pi: (-pattern_utility(u, pi), pi.id))
    return scored[:count]


def random_baseline(patterns: list, count: int, seed: int) -> list:
    """Uniform sample of ``count`` patterns without replacement."""
    if count > len(patterns):
        raise ValueError(f"requested {count} patterns but only {len(patterns)} candidates")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(patterns), size=count, replace=False)
    return [patterns[i] for i in chosen]


def coherence_baseline(state: SolverState, patterns: list, count: int, rank_tol: float = 1e-6) -> list:
    """Selection driven by the first mode's leverage scores alone."""
    w = np.zeros(len(state.L))
    w[0] = 1.0
    u = UtilityField(field=_leverage_field(state, w, rank_tol), method=LEVERAGE)
    return select_batch(u, patterns, count)


def lemma_decomposition(ma: ModeApproximations, truth: np.ndarray) -> LemmaReport:
    """Check that the committee-mean error equals the weighted per-mode errors
    minus the total predictive variance."""
    shape = ma.approx[0].shape
    if truth.shape != shape:
        raise ValueError(f"shape mismatch: {truth.shape} vs {shape}")
    mean = sum(w * a for w, a in zip(ma.weights, ma.approx))
    mu = float(sum(w * np.sum(np.abs(a - mean) ** 2) for w, a in zip(ma.weights, ma.approx)))
    mu_i = np.array([float(np.sum(np.abs(truth - a) ** 2)) for a in ma.approx])
    mu_tot = float(np.sum(np.abs(truth - mean) ** 2))
    residual = abs(mu_tot - (float(np.dot(ma.weights, mu_i)) - mu))
    return LemmaReport(mu_tot=mu_tot, mu_i=mu_i, mu=mu, residual=residual)
