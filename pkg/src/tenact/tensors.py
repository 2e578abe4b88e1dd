"""Dense complex tensor utilities: mode unfolding, unitary FFT, observation sets.

Tensors are plain numpy ``complex128`` arrays stored in C order, so the last
index varies fastest. Modes are 0-based. Unfolding uses the Kolda-Bader
column convention: the remaining modes are flattened with the earliest mode
varying fastest, which with C-ordered storage means a Fortran-order reshape
after moving the unfold mode to the front.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def as_tensor(data) -> np.ndarray:
    """Coerce ``data`` to a C-contiguous complex128 array."""
    return np.ascontiguousarray(data, dtype=np.complex128)


def _check_mode(t: np.ndarray, mode: int):
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode {mode} out of range for a {t.ndim}-way tensor")


def unfold(t: np.ndarray, mode: int) -> np.ndarray:
    """Mode-``mode`` matricization of ``t``.

    Returns the ``(I_mode, prod of other dims)`` matrix whose column index
    runs over the remaining modes with the earliest mode varying fastest.
    """
    _check_mode(t, mode)
    return np.reshape(np.moveaxis(t, mode, 0), (t.shape[mode], -1), order="F")


def fold(m: np.ndarray, mode: int, shape) -> np.ndarray:
    """Inverse of :func:`unfold` for the same convention."""
    shape = tuple(int(s) for s in shape)
    if not 0 <= mode < len(shape):
        raise ValueError(f"mode {mode} out of range for shape {shape}")
    rest = shape[:mode] + shape[mode + 1 :]
    expected = (shape[mode], int(np.prod(rest, dtype=np.int64)) if rest else 1)
    if m.shape != expected:
        raise ValueError(f"matrix shape {m.shape} does not match unfolding {expected} of {shape}")
    t = np.reshape(m, (shape[mode],) + rest, order="F")
    return np.ascontiguousarray(np.moveaxis(t, 0, mode))


def mode_product(t: np.ndarray, mat: np.ndarray, mode: int) -> np.ndarray:
    """Multiply ``t`` along ``mode`` by ``mat`` (rows replace that mode's size)."""
    _check_mode(t, mode)
    new_shape = list(t.shape)
    new_shape[mode] = mat.shape[0]
    return fold(mat @ unfold(t, mode), mode, new_shape)


def frobenius_norm(t: np.ndarray) -> float:
    """Square root of the sum of squared entry magnitudes."""
    return float(np.linalg.norm(np.ravel(t)))


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise product of two equal-shaped tensors."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def fft_forward(t: np.ndarray) -> np.ndarray:
    """Unitary multidimensional DFT along every mode (image space -> k-space)."""
    return np.fft.fftn(t, norm="ortho")


def fft_inverse(t: np.ndarray) -> np.ndarray:
    """Unitary inverse DFT along every mode (k-space -> image space)."""
    return np.fft.ifftn(t, norm="ortho")


@dataclass
class ObservationSet:
    """Observed multi-indices of a tensor together with their measured values.

    ``indices`` is an ``(m, n)`` integer array of 0-based coordinates in
    insertion order; ``values`` holds the corresponding complex measurements.
    """

    shape: tuple
    indices: np.ndarray
    values: np.ndarray
    flat: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.shape = tuple(int(s) for s in self.shape)
        self.indices = np.asarray(self.indices, dtype=np.int64).reshape(-1, len(self.shape))
        self.values = np.asarray(self.values, dtype=np.complex128).reshape(-1)
        if len(self.values) != len(self.indices):
            raise ValueError("indices and values length mismatch")
        if self.indices.size and (
            self.indices.min() < 0 or (self.indices >= np.array(self.shape)).any()
        ):
            raise ValueError("observation index out of bounds")
        self.flat = np.ravel_multi_index(tuple(self.indices.T), self.shape) if len(self.indices) else np.empty(0, dtype=np.int64)
        if len(np.unique(self.flat)) != len(self.flat):
            raise ValueError("duplicate observation indices")

    @classmethod
    def empty(cls, shape) -> "ObservationSet":
        n = len(shape)
        return cls(tuple(shape), np.empty((0, n), dtype=np.int64), np.empty(0, dtype=np.complex128))

    @classmethod
    def from_mask(cls, t: np.ndarray, mask: np.ndarray) -> "ObservationSet":
        """Observe the entries of ``t`` where ``mask`` is True (lexicographic order)."""
        if mask.shape != t.shape:
            raise ValueError(f"shape mismatch: {mask.shape} vs {t.shape}")
        return cls(t.shape, np.argwhere(mask), t[mask])

    def __len__(self) -> int:
        return len(self.values)

    @property
    def ratio(self) -> float:
        return len(self.values) / float(np.prod(self.shape, dtype=np.int64))

    def mask(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=bool)
        out.reshape(-1)[self.flat] = True
        return out


def scatter_observed(t: np.ndarray, omega: ObservationSet) -> np.ndarray:
    """Copy of ``t`` with the entries at ``omega`` replaced by its values."""
    if omega.shape != t.shape:
        raise ValueError(f"shape mismatch: {omega.shape} vs {t.shape}")
    out = np.array(t, dtype=np.complex128, copy=True, order="C")
    out.reshape(-1)[omega.flat] = omega.values
    return out
