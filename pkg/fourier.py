"""
Tensor-product trigonometric basis on [0,1]^d, Sobolev weights and the
closed-form adversarial distance over the unit Sobolev ball.
"""
import math
from typing import Sequence

import numpy as np

from entities import CoefficientTable, MultiIndex, SobolevParams

SQRT2 = math.sqrt(2.0)


def basis_bound(d: int) -> float:
    """B_0 = 2^(d/2), the sup norm of every basis function."""
    return 2.0 ** (d / 2.0)


def basis_table_1d(J: int, t) -> np.ndarray:
    """
    One-dimensional basis values phi_1..phi_J at the points t.

    Returns an array of shape (len(t), J): column 0 is phi_1 = 1, column
    2k-1 is sqrt(2) cos(2 pi k t), column 2k is sqrt(2) sin(2 pi k t).
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty((t.shape[0], int(J)))
    out[:, 0] = 1.0
    if J >= 2:
        k = np.arange(1, J // 2 + 1)
        angle = 2.0 * np.pi * np.outer(t, k)
        out[:, 1::2] = SQRT2 * np.cos(angle)
        if J >= 3:
            out[:, 2::2] = SQRT2 * np.sin(angle[:, : (J - 1) // 2])
    return out


def _check_points(points, d: int) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(1, -1) if points.shape[0] == d else points.reshape(-1, 1)
    if points.shape[1] != d:
        raise ValueError(f"points have dimension {points.shape[1]}, expected {d}")
    if points.size and (points.min() < 0.0 or points.max() > 1.0):
        raise ValueError("points must lie in [0,1]^d")
    return points


def basis_matrix(points, indices) -> np.ndarray:
    """
    Matrix of phi_j(x_i) for every point (rows) and index (columns).

    `indices` is an (m, d) integer array. The per-axis 1-D tables are built
    once and gathered, so the cost is O(n * (sum J_m + m * d)).
    """
    indices = np.asarray(indices, dtype=np.int64)
    if indices.ndim != 2:
        raise ValueError("indices must have shape (m, d)")
    d = indices.shape[1]
    points = _check_points(points, d)
    out = np.ones((points.shape[0], indices.shape[0]))
    if indices.shape[0] == 0:
        return out
    for m in range(d):
        table = basis_table_1d(int(indices[:, m].max()), points[:, m])
        out *= table[:, indices[:, m] - 1]
    return out


def eval_basis(j: Sequence[int], x: Sequence[float]) -> float:
    j = MultiIndex(j)
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != j.d:
        raise ValueError(f"index {tuple(j)} and point {tuple(x)} have different dimensions")
    return float(basis_matrix(x.reshape(1, -1), np.array([j]))[0, 0])


def sobolev_weight(j: Sequence[int], params: SobolevParams) -> float:
    j = MultiIndex(j)
    if j.d != params.d:
        raise ValueError(f"index {tuple(j)} does not match smoothness dimension {params.d}")
    return float(sum(float(jm) ** (2.0 * s) for jm, s in zip(j, params.smoothness)))


def sobolev_weights(indices: np.ndarray, params: SobolevParams) -> np.ndarray:
    """Vectorized sobolev_weight over an (m, d) index array."""
    indices = np.asarray(indices, dtype=float)
    if indices.ndim != 2 or indices.shape[1] != params.d:
        raise ValueError(f"indices must have shape (m, {params.d})")
    exponents = 2.0 * np.asarray(params.smoothness)
    return np.sum(indices ** exponents, axis=1)


def _require_unit_ball(discriminator: SobolevParams):
    if discriminator.radius != 1.0:
        raise ValueError(f"discriminator ball must have radius 1, got {discriminator.radius}")


def adversarial_distance(diff: CoefficientTable, discriminator: SobolevParams) -> float:
    """
    sup over g in W^delta(1) of <diff, g>, in closed form.

    The maximizer is g_j proportional to diff_j / weight_j, which gives
    sqrt(sum diff_j^2 / weight_j).
    """
    _require_unit_ball(discriminator)
    if diff.d != discriminator.d:
        raise ValueError(f"table dimension {diff.d} does not match discriminator dimension {discriminator.d}")
    indices, values = diff.as_arrays()
    if values.size == 0:
        return 0.0
    return float(math.sqrt(np.sum(values ** 2 / sobolev_weights(indices, discriminator))))


def optimal_discriminator(diff: CoefficientTable, discriminator: SobolevParams) -> CoefficientTable:
    """Coefficients of the g attaining adversarial_distance (zero table if diff is zero)."""
    _require_unit_ball(discriminator)
    indices, values = diff.as_arrays()
    if values.size == 0 or not np.any(values):
        return CoefficientTable(diff.d, {}, diff.bound)
    weights = sobolev_weights(indices, discriminator)
    g = values / weights
    g /= math.sqrt(np.sum(weights * g ** 2))
    return CoefficientTable.from_arrays(indices, g, diff.bound)


def eval_density(coeffs: CoefficientTable, x) -> np.ndarray:
    """
    sum_j theta_j phi_j(x) at one point (returns a float) or at an (n, d)
    array of points (returns an array of length n).
    """
    x_arr = np.asarray(x, dtype=float)
    single = x_arr.ndim <= 1 and (x_arr.size == coeffs.d)
    points = _check_points(x_arr.reshape(1, -1) if single else x_arr, coeffs.d)
    indices, values = coeffs.as_arrays()
    out = np.zeros(points.shape[0])
    if values.size:
        # chunked so the basis matrix stays bounded
        step = max(1, 2 ** 22 // max(1, values.size))
        for start in range(0, points.shape[0], step):
            out[start:start + step] = basis_matrix(points[start:start + step], indices) @ values
    return float(out[0]) if single else out


def sobolev_norm_sq(coeffs: CoefficientTable, params: SobolevParams) -> float:
    if coeffs.d != params.d:
        raise ValueError(f"table dimension {coeffs.d} does not match smoothness dimension {params.d}")
    indices, values = coeffs.as_arrays()
    if values.size == 0:
        return 0.0
    return float(np.sum(sobolev_weights(indices, params) * values ** 2))


def analytic_tail_bound(radius: float, J: int, beta: float, delta: float) -> float:
    """Bias of truncating a W^beta(R) density at J, measured in d_{W^delta(1)}: R J^-(beta+delta)."""
    return float(radius) * float(J) ** (-(float(beta) + float(delta)))
