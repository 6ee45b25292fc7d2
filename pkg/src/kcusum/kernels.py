"""Bounded Gaussian-mixture kernels on Euclidean points.

All kernels here are finite mixtures of Gaussian (RBF) components with
positive weights summing to one, so every kernel value lies in (0, 1] and
``k(x, x) == 1``.  Boundedness by one is what the downstream deviation
bounds assume, so the weight normalisation is enforced, not optional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["KernelSpec", "as_points", "compensated_sum", "make_pair"]

_WEIGHT_TOL = 1e-12


def compensated_sum(values) -> float:
    """Sum floats with exact compensation (order-independent result).

    Thin wrapper around :func:`math.fsum` that accepts arrays of any
    shape.  Used wherever a Gram-matrix total feeds a statistic, so the
    result does not depend on summation order or array layout.
    """
    return math.fsum(np.asarray(values, dtype=float).ravel())


def as_points(points, *, name: str = "points") -> np.ndarray:
    """Coerce input to a non-empty ``(n, d)`` float array.

    Accepts a 2-D array-like (rows are points) or a sequence of 1-D
    vectors of equal length.  A single bare vector is not accepted:
    pass ``x[None, :]`` to mean "one point".
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2:
        raise ValueError(
            f"{name} must be a 2-D array of shape (n, d); got ndim={arr.ndim}"
        )
    if arr.shape[0] == 0:
        raise ValueError(f"{name} must contain at least one point")
    if arr.shape[1] == 0:
        raise ValueError(f"{name} must have dimension >= 1")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def make_pair(first, second) -> np.ndarray:
    """Concatenate two d-vectors into a single 2d-vector.

    This is the lifting used to treat one chain transition as a single
    point; distances between lifted points are plain Euclidean distances
    on the concatenation.
    """
    a = np.asarray(first, dtype=float)
    b = np.asarray(second, dtype=float)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError("pair components must be 1-D vectors")
    if a.shape != b.shape:
        raise ValueError(
            f"pair components must have equal dimension; got {a.shape[0]} and {b.shape[0]}"
        )
    if a.shape[0] == 0:
        raise ValueError("pair components must have dimension >= 1")
    return np.concatenate([a, b])


@dataclass(frozen=True)
class KernelSpec:
    """Finite Gaussian mixture kernel.

    k(x, y) = sum_j w_j * exp(-||x - y||^2 / (2 * sigma_j^2))

    Parameters
    ----------
    weights : array
        Positive component weights.  Must sum to one (tolerance 1e-12),
        which pins sup |k| = k(x, x) = 1.
    bandwidths : array
        Positive component scales sigma_j, same length as ``weights``.
    """

    weights: np.ndarray
    bandwidths: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        s = np.asarray(self.bandwidths, dtype=float)
        if w.ndim != 1 or s.ndim != 1:
            raise ValueError("weights and bandwidths must be 1-D")
        if w.shape != s.shape:
            raise ValueError(
                f"weights and bandwidths must have equal length; got {w.shape[0]} and {s.shape[0]}"
            )
        if w.shape[0] == 0:
            raise ValueError("kernel needs at least one component")
        if not np.all(np.isfinite(w)) or not np.all(np.isfinite(s)):
            raise ValueError("weights and bandwidths must be finite")
        if np.any(w <= 0.0):
            raise ValueError("weights must be strictly positive")
        if np.any(s <= 0.0):
            raise ValueError("bandwidths must be strictly positive")
        total = math.fsum(w)
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ValueError(
                f"weights must sum to 1 (got {total!r}); normalise before constructing"
            )
        w = w.copy()
        s = s.copy()
        w.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bandwidths", s)

    @classmethod
    def gaussian(cls, bandwidth: float) -> "KernelSpec":
        """Single Gaussian component with scale ``bandwidth``."""
        return cls(weights=np.array([1.0]), bandwidths=np.array([float(bandwidth)]))

    @classmethod
    def mixture(cls, bandwidths, weights=None) -> "KernelSpec":
        """Mixture over ``bandwidths``; equal weights when ``weights`` is None."""
        s = np.asarray(bandwidths, dtype=float)
        if weights is None:
            if s.ndim != 1 or s.shape[0] == 0:
                raise ValueError("bandwidths must be a non-empty 1-D sequence")
            w = np.full(s.shape[0], 1.0 / s.shape[0])
        else:
            w = np.asarray(weights, dtype=float)
        return cls(weights=w, bandwidths=s)

    @property
    def n_components(self) -> int:
        return int(self.weights.shape[0])

    def eval(self, z1, z2) -> float:
        """Kernel value between two single points (1-D vectors)."""
        a = np.asarray(z1, dtype=float)
        b = np.asarray(z2, dtype=float)
        if a.ndim != 1 or b.ndim != 1:
            raise ValueError("eval takes 1-D vectors; use gram for batches")
        if a.shape != b.shape:
            raise ValueError(
                f"points must have equal dimension; got {a.shape[0]} and {b.shape[0]}"
            )
        d2 = float(np.dot(a - b, a - b))
        return math.fsum(
            w * math.exp(-d2 / (2.0 * s * s))
            for w, s in zip(self.weights, self.bandwidths)
        )

    def gram(self, a, b) -> np.ndarray:
        """Kernel matrix between two point sets, shape ``(len(a), len(b))``.

        Squared distances are computed via the norm expansion
        ``||x||^2 + ||y||^2 - 2 x.y`` and clipped at zero before the
        exponential, so round-off cannot produce values above one.
        """
        A = as_points(a, name="a")
        B = as_points(b, name="b")
        if A.shape[1] != B.shape[1]:
            raise ValueError(
                f"point sets must share dimension; got {A.shape[1]} and {B.shape[1]}"
            )
        sq = (
            np.sum(A * A, axis=1)[:, None]
            + np.sum(B * B, axis=1)[None, :]
            - 2.0 * (A @ B.T)
        )
        np.clip(sq, 0.0, None, out=sq)
        out = np.zeros_like(sq)
        for w, s in zip(self.weights, self.bandwidths):
            out += w * np.exp(sq / (-2.0 * s * s))
        return out

    def gram_sum(self, a, b) -> float:
        """Compensated sum of all entries of ``gram(a, b)``."""
        return compensated_sum(self.gram(a, b))
