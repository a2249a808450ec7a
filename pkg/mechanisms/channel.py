"""
Channel constants and the per-block sampler of the coordinate block
privacy mechanism.

A block of k basis values phi in [-B_0, B_0]^k is privatized as follows:
each coordinate is first rounded to a random sign v_j (P(+1) = 1/2 +
phi_j / (2 B_0)); then, with probability p_k, the output sign pattern z is
drawn uniformly from the half-space <z, v> > 0 (with probability pi_a) or
<z, v> < 0, and otherwise from the hyperplane <z, v> = 0. The released
values are z * B_k(a).
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.special import expit, gammaln, logsumexp

EXACT_LIMIT = 4096
MAX_BLOCK_SIZE = 2 ** 20
MAX_ENUMERATION = 10


@dataclass(frozen=True)
class ChannelParams:
    k: int
    a: float
    d: int
    b0: float
    gamma: float
    magnitude: float
    pi: float
    p: float


def _log_comb(n: int, m) -> np.ndarray:
    return gammaln(n + 1) - gammaln(np.asarray(m) + 1) - gammaln(n - np.asarray(m) + 1)


@lru_cache(maxsize=None)
def gamma_k(k: int) -> float:
    """Gamma_k = 2^(k-1) / C(k-1, floor((k-1)/2))."""
    if k < 1:
        raise ValueError(f"block size must be >= 1, got {k}")
    m = (k - 1) // 2
    if k <= EXACT_LIMIT:
        return float(Fraction(2 ** (k - 1), math.comb(k - 1, m)))
    return float(np.exp((k - 1) * math.log(2.0) - _log_comb(k - 1, m)))


@lru_cache(maxsize=None)
def p_k(k: int) -> float:
    """Probability of leaving the hyperplane <z, v> = 0: 1 for odd k, 1 - C(k, k/2)/2^k for even k."""
    if k < 1:
        raise ValueError(f"block size must be >= 1, got {k}")
    if k % 2 == 1:
        return 1.0
    if k <= EXACT_LIMIT:
        return float(1 - Fraction(math.comb(k, k // 2), 2 ** k))
    return float(-np.expm1(_log_comb(k, k // 2) - k * math.log(2.0)))


def xi(A: float) -> float:
    """xi_A = A (e^A + 1) / (e^A - 1)."""
    return A / math.tanh(A / 2.0)


def channel_params(k: int, a: float, d: int) -> ChannelParams:
    if not a > 0:
        raise ValueError(f"block budget must be positive, got {a}")
    if k > MAX_BLOCK_SIZE:
        raise ValueError(f"block size {k} exceeds the supported maximum {MAX_BLOCK_SIZE}")
    b0 = 2.0 ** (d / 2.0)
    gamma = gamma_k(int(k))
    return ChannelParams(
        k=int(k),
        a=float(a),
        d=int(d),
        b0=b0,
        gamma=gamma,
        magnitude=b0 / math.tanh(a / 2.0) * gamma,
        pi=float(expit(a)),
        p=p_k(int(k)),
    )


def magnitude_bound(k: int, a: float, d: int, A: float) -> float:
    """Deterministic bound 2 xi_A B_0 sqrt(k) / a on |Z_j|, valid for a <= A."""
    return 2.0 * xi(A) * 2.0 ** (d / 2.0) * math.sqrt(k) / a


@lru_cache(maxsize=64)
def _upper_count_table(k: int) -> Tuple[np.ndarray, np.ndarray]:
    """Agreement counts m > k/2 and their probabilities, proportional to C(k, m)."""
    if k > MAX_BLOCK_SIZE:
        raise ValueError(f"block size {k} exceeds the supported maximum {MAX_BLOCK_SIZE}")
    values = np.arange(k // 2 + 1, k + 1)
    logs = _log_comb(k, values)
    probs = np.exp(logs - logsumexp(logs))
    probs /= probs.sum()
    return values, probs


def _check_phi(phi: np.ndarray, params: ChannelParams) -> np.ndarray:
    if phi.ndim != 2 or phi.shape[1] != params.k:
        raise ValueError(f"phi must have shape (n, {params.k}), got {phi.shape}")
    limit = params.b0 * (1.0 + 1e-12)
    if phi.size and np.max(np.abs(phi)) > limit:
        raise ValueError(f"basis values exceed B_0={params.b0}")
    return np.clip(phi, -params.b0, params.b0)


def sample_block(phi, params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    """
    Privatize n records of one block at once.

    phi has shape (n, k). Returns the (n, k) int8 output signs; the
    released values are signs * params.magnitude. Draw order is fixed
    (v, y, t, m, positions) so a stream reproduces the same output.
    """
    phi = _check_phi(np.asarray(phi, dtype=float), params)
    n, k = phi.shape
    v = np.where(rng.random((n, k)) < 0.5 + phi / (2.0 * params.b0), 1, -1).astype(np.int8)
    y = rng.random(n) < params.p
    t = rng.random(n) < params.pi
    values, probs = _upper_count_table(k)
    m_up = rng.choice(values, size=n, p=probs)
    m = np.where(t, m_up, k - m_up)
    if k % 2 == 0:
        m = np.where(y, m, k // 2)
    # uniform placement of the m agreeing coordinates
    ranks = np.argsort(np.argsort(rng.random((n, k)), axis=1), axis=1)
    agree = ranks < m[:, None]
    return np.where(agree, v, -v).astype(np.int8)


def privatize_block(phi_block, params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    """Single-record form of sample_block; returns the released values."""
    phi = np.asarray(phi_block, dtype=float).reshape(1, -1)
    return sample_block(phi, params, rng)[0].astype(float) * params.magnitude


def sign_patterns(k: int) -> np.ndarray:
    """All 2^k patterns in {-1, +1}^k, bit m of the row number giving coordinate m."""
    rows = np.arange(2 ** k)[:, None]
    return (((rows >> np.arange(k)) & 1) * 2 - 1).astype(np.int64)


def channel_pmf(k: int, params: ChannelParams, phi_block) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exact output distribution for a small block.

    Returns (patterns, probabilities): patterns is (2^k, k) in {-1, +1}
    (multiply by params.magnitude for the released values). The channel
    constants are read from params, so a corrupted params yields the
    corrupted channel.
    """
    if k > MAX_ENUMERATION:
        raise ValueError(f"exact enumeration supports block sizes up to {MAX_ENUMERATION}, got {k}")
    if k != params.k:
        raise ValueError(f"block size {k} does not match channel block size {params.k}")
    patterns = sign_patterns(k)
    return patterns, channel_pmf_batch(params, np.asarray(phi_block, dtype=float).reshape(1, -1))[0]


def channel_pmf_batch(params: ChannelParams, phis) -> np.ndarray:
    """Exact output probabilities for many inputs at once, shape (n_inputs, 2^k)."""
    k = params.k
    if k > MAX_ENUMERATION:
        raise ValueError(f"exact enumeration supports block sizes up to {MAX_ENUMERATION}, got {k}")
    phis = _check_phi(np.asarray(phis, dtype=float), params)
    patterns = sign_patterns(k)
    # P(V = v | x) for every input and pattern
    p_v = np.prod(0.5 + patterns[None, :, :] * phis[:, None, :] / (2.0 * params.b0), axis=2)
    inner = patterns @ patterns.T
    n_plus = int(np.sum(inner[0] > 0))
    n_minus = int(np.sum(inner[0] < 0))
    n_zero = int(np.sum(inner[0] == 0))
    # n_zero is 0 for odd k, where the hyperplane branch never occurs
    cond = np.where(
        inner > 0,
        params.p * params.pi / n_plus,
        np.where(inner < 0, params.p * (1.0 - params.pi) / n_minus, (1.0 - params.p) / max(n_zero, 1)),
    )
    return p_v @ cond.T
