"""Synthetic k-space ground truth, Cartesian line masks, fiber patterns,
simulated acquisition, and the reconstruction quality metrics.

Phantoms are Tucker-random complex image-space tensors (random core
contracted with random orthonormal factors), optionally plus sparse spikes
and white noise; the measured tensor is their unitary FFT. Because the FFT
acts as a unitary matrix per mode, the k-space tensor keeps the image's
mode ranks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sampling import Pattern
from .tensors import ObservationSet, fft_forward, mode_product


@dataclass
class PhantomSpec:
    """Ground-truth generator parameters; everything derives from ``seed``."""

    shape: tuple
    tucker_ranks: tuple
    sparse_fraction: float = 0.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.shape = tuple(int(s) for s in self.shape)
        self.tucker_ranks = tuple(int(r) for r in self.tucker_ranks)
        if len(self.tucker_ranks) != len(self.shape):
            raise ValueError("one Tucker rank per mode required")
        if any(not 1 <= r <= s for r, s in zip(self.tucker_ranks, self.shape)):
            raise ValueError("ranks must satisfy 1 <= rank <= mode size")
        if not 0 <= self.sparse_fraction < 1 or self.noise_sigma < 0:
            raise ValueError("sparse_fraction in [0,1) and noise_sigma >= 0 required")


@dataclass
class MaskSpec:
    """Initial Cartesian mask: a fully sampled centered block of readout
    fibers plus uniformly random extra fibers."""

    shape: tuple
    readout_mode: int = 0
    center_fraction: float = 0.0
    random_line_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.shape = tuple(int(s) for s in self.shape)
        if not 0 <= self.readout_mode < len(self.shape):
            raise ValueError("readout_mode out of range")
        if not 0 <= self.center_fraction <= 1 or not 0 <= self.random_line_fraction <= 1:
            raise ValueError("fractions must lie in [0, 1]")
        if self.center_fraction + self.random_line_fraction > 1:
            raise ValueError("center_fraction + random_line_fraction must be <= 1")


def _complex_normal(rng, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def synth_ground_truth(spec: PhantomSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(image, kspace)`` for a reproducible synthetic phantom."""
    rng = np.random.default_rng(spec.seed)
    image = _complex_normal(rng, spec.tucker_ranks)
    for k, size in enumerate(spec.shape):
        q, _ = np.linalg.qr(_complex_normal(rng, (size, spec.tucker_ranks[k])))
        image = mode_product(image, q, k)
    total = int(np.prod(spec.shape, dtype=np.int64))
    n_spikes = round(spec.sparse_fraction * total)
    if n_spikes:
        where = rng.choice(total, size=n_spikes, replace=False)
        image.reshape(-1)[where] += _complex_normal(rng, n_spikes)
    if spec.noise_sigma > 0:
        image += (spec.noise_sigma / math.sqrt(2.0)) * _complex_normal(rng, spec.shape)
    return image, fft_forward(image)


def _transverse_shape(shape, readout_mode) -> tuple:
    return tuple(s for k, s in enumerate(shape) if k != readout_mode)


def _fiber_elements(shape, readout_mode, transverse) -> np.ndarray:
    """All multi-indices of the fiber at a fixed transverse position."""
    n, size = len(shape), shape[readout_mode]
    out = np.empty((size, n), dtype=np.int64)
    out[:, readout_mode] = np.arange(size)
    rest = [k for k in range(n) if k != readout_mode]
    for pos, k in enumerate(rest):
        out[:, k] = transverse[pos]
    return out


def _centered_line_order(lattice_shape) -> np.ndarray:
    """Flat transverse indices sorted by scaled distance from the lattice
    center, lexicographic index breaking ties. Prefixes of this order are
    centered blocks whose per-mode extents stay proportional to the sizes."""
    centers = [(s - 1) / 2.0 for s in lattice_shape]
    grids = np.indices(lattice_shape)
    dist = np.zeros(lattice_shape)
    for g, c, s in zip(grids, centers, lattice_shape):
        dist = np.maximum(dist, np.abs(g - c) / s)
    flat = dist.reshape(-1)
    return np.lexsort((np.arange(flat.size), flat))


def init_cartesian_mask(m: MaskSpec, truth: np.ndarray) -> ObservationSet:
    """Observation set of whole readout fibers: a centered block holding
    round(center_fraction * lines) fibers, plus round(random_line_fraction *
    remaining) more drawn uniformly by seed. Values are copied from truth."""
    if truth.shape != m.shape:
        raise ValueError(f"truth shape {truth.shape} does not match mask shape {m.shape}")
    lattice = _transverse_shape(m.shape, m.readout_mode)
    total = int(np.prod(lattice, dtype=np.int64))
    n_center = round(m.center_fraction * total)
    order = _centered_line_order(lattice)
    center_lines = order[:n_center]
    remaining = np.setdiff1d(np.arange(total), center_lines)
    n_rand = round(m.random_line_fraction * len(remaining))
    rng = np.random.default_rng(m.seed)
    rand_lines = rng.choice(remaining, size=n_rand, replace=False) if n_rand else np.empty(0, dtype=np.int64)
    lines = np.sort(np.concatenate([center_lines, rand_lines]))
    if len(lines) == 0:
        return ObservationSet.empty(m.shape)
    blocks = [
        _fiber_elements(m.shape, m.readout_mode, np.unravel_index(line, lattice))
        for line in lines
    ]
    indices = np.concatenate(blocks)
    return ObservationSet(m.shape, indices, truth[tuple(indices.T)])


def enumerate_fiber_patterns(shape, readout_mode: int, omega: ObservationSet) -> list:
    """One candidate pattern per fully unobserved readout fiber.

    Fibers touched by any observation are excluded. Pattern ids are the flat
    lexicographic indices of the transverse positions, so they are stable
    across rounds.
    """
    shape = tuple(int(s) for s in shape)
    if not 0 <= readout_mode < len(shape):
        raise ValueError("readout_mode out of range")
    touched = omega.mask().any(axis=readout_mode)
    lattice = _transverse_shape(shape, readout_mode)
    patterns = []
    for line in np.flatnonzero(~touched.reshape(-1)):
        transverse = np.unravel_index(line, lattice)
        patterns.append(
            Pattern(
                id=int(line),
                elements=_fiber_elements(shape, readout_mode, transverse),
                kind="fiber",
                mode=readout_mode,
            )
        )
    return patterns


def acquire(truth: np.ndarray, omega: ObservationSet, batch: list) -> ObservationSet:
    """Grow the observation set by every element of the batch patterns."""
    if not batch:
        return omega
    new_idx = np.concatenate([pi.elements for pi in batch])
    new_flat = np.ravel_multi_index(tuple(new_idx.T), truth.shape)
    if np.intersect1d(new_flat, omega.flat).size:
        raise ValueError("batch overlaps the existing observation set")
    indices = np.concatenate([omega.indices, new_idx])
    values = np.concatenate([omega.values, truth[tuple(new_idx.T)]])
    return ObservationSet(truth.shape, indices, values)


def k_test(recon: np.ndarray, truth: np.ndarray) -> float:
    """Relative mean squared error against the fully sampled k-space data."""
    if recon.shape != truth.shape:
        raise ValueError(f"shape mismatch: {recon.shape} vs {truth.shape}")
    denom = float(np.sum(np.abs(truth) ** 2))
    if denom == 0:
        raise ValueError("reference tensor is zero")
    return float(np.sum(np.abs(recon - truth) ** 2)) / denom


def ser(recon_img: np.ndarray, full_img: np.ndarray) -> float:
    """Signal-to-error ratio in dB: -10 log10 of the (unsquared) ratio of the
    error norm to the reference norm, computed on magnitudes."""
    if recon_img.shape != full_img.shape:
        raise ValueError(f"shape mismatch: {recon_img.shape} vs {full_img.shape}")
    denom = float(np.linalg.norm(np.abs(full_img).ravel()))
    if denom == 0:
        raise ValueError("reference image is zero")
    ratio = float(np.linalg.norm((np.abs(recon_img) - np.abs(full_img)).ravel())) / denom
    if ratio == 0:
        return float("inf")
    return -10.0 * math.log10(ratio)


def psnr(recon_img: np.ndarray, full_img: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB with peak = max reconstructed
    magnitude and MSE over magnitudes."""
    if recon_img.shape != full_img.shape:
        raise ValueError(f"shape mismatch: {recon_img.shape} vs {full_img.shape}")
    mse = float(np.mean((np.abs(recon_img) - np.abs(full_img)) ** 2))
    if mse == 0:
        return float("inf")
    peak = float(np.abs(recon_img).max())
    if peak == 0:
        return float("-inf")
    return 20.0 * math.log10(peak / math.sqrt(mse))
