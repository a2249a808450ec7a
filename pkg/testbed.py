"""
Ground-truth densities with known Fourier coefficients.

Bump truths perturb the uniform density on [0,1]^d by localized,
mean-zero bumps G_j(x) = prod_m psi(J x_m - (j_m - 1)) placed on a J^d
grid of cells:

    f_nu = 1 + (gamma / J^beta) * sum_j nu_j G_j,   nu in {0,1}^(J^d)

with psi(t) = exp(-1/(1-(4t-1)^2)) on (0, 1/2) and its negative mirror on
(1/2, 1). Coefficient truths are drawn directly in coefficient space and
cover non-integer smoothness.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate

import streams
from entities import CoefficientTable, SobolevParams
from fourier import basis_bound, eval_density, sobolev_weights

logger = logging.getLogger(__name__)

PSI_SUP = math.exp(-1.0)
NORM_TOL = 1e-12
COEFFICIENT_TOL = 1e-13
FOURIER_CHECK_TOL = 1e-8
FOURIER_GAUSS_ORDER = 800
MAX_DERIVATIVE = 8
NU_PATTERNS = ("dense", "sparse", "random", "empty")


# --- the bump psi and its derivatives ---

@lru_cache(maxsize=None)
def _derivative_polynomial(k: int) -> Polynomial:
    """
    P_k with h^(k)(u) = P_k(u) q^(-2k) exp(-1/q), h(u) = exp(-1/q), q = 1 - u^2.
    P_0 = 1 and P_{k+1} = P_k' q^2 + 4 k u q P_k - 2 u P_k.
    """
    if k == 0:
        return Polynomial([1.0])
    prev = _derivative_polynomial(k - 1)
    u = Polynomial([0.0, 1.0])
    q = Polynomial([1.0, 0.0, -1.0])
    return prev.deriv() * q ** 2 + 4 * (k - 1) * u * q * prev - 2 * u * prev


def _h_derivative(k: int, u: np.ndarray) -> np.ndarray:
    """k-th derivative of exp(-1/(1-u^2)) on (-1, 1), zero outside; log-space near the ends."""
    out = np.zeros_like(u, dtype=float)
    inside = np.abs(u) < 1.0
    if not np.any(inside):
        return out
    ui = u[inside]
    q = 1.0 - ui ** 2
    log_scale = -1.0 / q - 2.0 * k * np.log(q)
    out[inside] = _derivative_polynomial(k)(ui) * np.exp(log_scale)
    return out


def psi_derivative(k: int, t) -> np.ndarray:
    """psi^(k)(t) in closed form; k = 0 gives psi itself. Zero outside (0, 1)."""
    if int(k) != k or k < 0 or k > MAX_DERIVATIVE:
        raise ValueError(f"derivative order must be an integer in [0, {MAX_DERIVATIVE}], got {k}")
    k = int(k)
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.zeros_like(t)
    left = (t > 0.0) & (t < 0.5)
    right = (t > 0.5) & (t < 1.0)
    scale = 4.0 ** k
    out[left] = scale * _h_derivative(k, 4.0 * t[left] - 1.0)
    out[right] = -scale * _h_derivative(k, 4.0 * t[right] - 3.0)
    return float(out[0]) if scalar else out


def psi(t) -> np.ndarray:
    return psi_derivative(0, t)


@dataclass(frozen=True)
class PsiNorms:
    sup: float
    l1: float
    l2_sq: float
    tolerance: float


@lru_cache(maxsize=None)
def derivative_l2_sq(k: int) -> float:
    """||psi^(k)||_2^2 = (16^k / 2) * integral over (-1,1) of h^(k)(u)^2."""
    value, err = integrate.quad(lambda u: _h_derivative(k, np.array([u]))[0] ** 2, -1.0, 1.0,
                                epsabs=NORM_TOL, epsrel=1e-12, limit=200)
    if err > 1e-8 * max(1.0, value):
        raise ValueError(f"quadrature for ||psi^({k})||_2 did not converge (error {err:g})")
    return 16.0 ** k / 2.0 * value


def derivative_l2_sq_gauss(k: int, order: int = 400) -> float:
    """Same norm with fixed-order Gauss-Legendre, as a cross-check."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return 16.0 ** k / 2.0 * float(np.sum(weights * _h_derivative(k, nodes) ** 2))


@lru_cache(maxsize=None)
def psi_norms() -> PsiNorms:
    l1, err = integrate.quad(lambda u: math.exp(-1.0 / (1.0 - u * u)) if abs(u) < 1 else 0.0,
                             -1.0, 1.0, epsabs=NORM_TOL, epsrel=1e-12, limit=200)
    if err > 1e-8:
        raise ValueError(f"quadrature for ||psi||_1 did not converge (error {err:g})")
    return PsiNorms(sup=PSI_SUP, l1=l1 / 2.0, l2_sq=derivative_l2_sq(0), tolerance=1e-8)


def bump_G(j: Sequence[int], x, J: int) -> np.ndarray:
    """G_j(x) = prod_m psi(J x_m - (j_m - 1)), supported on the cell of j."""
    j = np.asarray(j, dtype=int)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    points = x.reshape(1, -1) if single else x
    if points.shape[1] != j.shape[0]:
        raise ValueError(f"index {tuple(j)} and points of dimension {points.shape[1]} disagree")
    if np.any((j < 1) | (j > J)):
        raise ValueError(f"index {tuple(j)} lies outside the {J}^d grid")
    out = np.ones(points.shape[0])
    for m in range(j.shape[0]):
        out *= psi(J * points[:, m] - (j[m] - 1))
    return float(out[0]) if single else out


# --- family constants ---

def _require_integer(value: float, name: str) -> int:
    if int(value) != value or value < 1:
        raise ValueError(f"{name} must be a positive integer for bump families, got {value}")
    return int(value)


def gamma_constant(beta: float, radius: float, d: int) -> float:
    """gamma^2 = min(||psi||_inf^-2d, (R^2 - d) / (d ||psi||_2^(2(d-1)) [||psi||_2^2 + ||psi^(beta)||_2^2]))."""
    beta = _require_integer(beta, "beta")
    if not radius ** 2 > d:
        raise ValueError(f"bump families need R^2 > d, got R={radius}, d={d}")
    norms = psi_norms()
    spread = d * norms.l2_sq ** (d - 1) * (norms.l2_sq + derivative_l2_sq(beta))
    return math.sqrt(min(norms.sup ** (-2 * d), (radius ** 2 - d) / spread))


def eta_constant(delta: float, d: int) -> float:
    """eta^2 = 1 / (d ||psi||_2^(2(d-1)) [||psi||_2^2 + ||psi^(delta)||_2^2])."""
    delta = _require_integer(delta, "delta")
    norms = psi_norms()
    return math.sqrt(1.0 / (d * norms.l2_sq ** (d - 1) * (norms.l2_sq + derivative_l2_sq(delta))))


def family_constants(beta: float, delta: float, radius: float, d: int) -> Tuple[float, float]:
    return gamma_constant(beta, radius, d), eta_constant(delta, d)


def make_nu(d: int, J: int, pattern: str = "dense", rng: Optional[np.random.Generator] = None) -> Tuple[int, ...]:
    """Cell pattern in lexicographic cell order: all ones, checkerboard, random bits or all zeros."""
    cells = list(itertools.product(range(J), repeat=d))
    if pattern == "dense":
        return tuple(1 for _ in cells)
    if pattern == "sparse":
        return tuple(1 if sum(c) % 2 == 0 else 0 for c in cells)
    if pattern == "empty":
        return tuple(0 for _ in cells)
    if pattern == "random":
        if rng is None:
            raise ValueError("random nu pattern needs a generator")
        return tuple(int(b) for b in rng.integers(0, 2, size=len(cells)))
    raise ValueError(f"unknown nu pattern {pattern!r}; expected one of {NU_PATTERNS}")


@lru_cache(maxsize=None)
def _psi_fourier_gauss(omega: float, order: int = FOURIER_GAUSS_ORDER) -> Tuple[float, float]:
    """Fixed-order Gauss-Legendre route for _psi_fourier, on each half in the variable u = 4y - 1 (or 4y - 3)."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    h = weights * _h_derivative(0, nodes) / 4.0
    left = omega * (nodes + 1.0) / 4.0
    right = omega * (nodes + 3.0) / 4.0
    return (float(np.sum(h * (np.cos(left) - np.cos(right)))),
            float(np.sum(h * (np.sin(left) - np.sin(right)))))


@lru_cache(maxsize=None)
def _psi_fourier(omega: float) -> Tuple[float, float]:
    """(integral of psi(y) cos(omega y), integral of psi(y) sin(omega y)) over [0, 1]."""
    values = []
    for weight in ("cos", "sin"):
        total = 0.0
        for a, b in ((0.0, 0.5), (0.5, 1.0)):
            val, _ = integrate.quad(psi, a, b, weight=weight, wvar=omega,
                                    epsabs=COEFFICIENT_TOL, limit=200, maxp1=100)
            total += val
        values.append(total)
    # QAWO error estimates are loose near omega = pi; accept on agreement with Gauss-Legendre
    check = _psi_fourier_gauss(omega)
    gap = max(abs(values[0] - check[0]), abs(values[1] - check[1]))
    if gap > FOURIER_CHECK_TOL:
        raise ValueError(f"oscillatory quadrature disagrees with Gauss-Legendre at omega={omega:g} (gap {gap:g})")
    return values[0], values[1]


@lru_cache(maxsize=32)
def _cell_factors(J: int, J_max: int) -> np.ndarray:
    """F[c, j-1] = integral over [0,1] of psi(J x - c) phi_j(x) dx for cells c = 0..J-1."""
    F = np.zeros((J, J_max))
    cells = np.arange(J)
    sqrt2 = math.sqrt(2.0)
    for j in range(2, J_max + 1):
        k = j // 2
        omega = 2.0 * math.pi * k / J
        ic, is_ = _psi_fourier(omega)
        phase = omega * cells
        if j % 2 == 0:
            F[:, j - 1] = sqrt2 / J * (np.cos(phase) * ic - np.sin(phase) * is_)
        else:
            F[:, j - 1] = sqrt2 / J * (np.cos(phase) * is_ + np.sin(phase) * ic)
    # column j = 1 is exactly zero: every bump integrates to 0
    return F


# --- truths ---

@dataclass(frozen=True)
class BumpFamilySpec:
    """One member f_nu of the bump family, with everything needed to sample it and score estimates."""
    d: int
    J: int
    beta: int
    nu: Tuple[int, ...]
    gamma: float
    radius: float

    def __post_init__(self):
        if len(self.nu) != self.J ** self.d:
            raise ValueError(f"nu has {len(self.nu)} cells, expected J^d = {self.J ** self.d}")
        if any(v not in (0, 1) for v in self.nu):
            raise ValueError("nu entries must be 0 or 1")
        if self.gamma < 0 or self.gamma > PSI_SUP ** (-self.d) * (1.0 + 1e-12):
            raise ValueError(f"gamma={self.gamma} is not a valid density scale (needs gamma <= e^d)")

    @classmethod
    def build(cls, d: int, J: int, beta: int, radius: float, pattern: str = "dense",
              rng: Optional[np.random.Generator] = None) -> "BumpFamilySpec":
        return cls(int(d), int(J), _require_integer(beta, "beta"), make_nu(d, J, pattern, rng),
                   gamma_constant(beta, radius, d), float(radius))

    @property
    def params(self) -> SobolevParams:
        return SobolevParams.isotropic(self.beta, self.d, self.radius)

    @property
    def amplitude(self) -> float:
        return self.gamma / self.J ** self.beta

    @property
    def envelope(self) -> float:
        """M = 1 + gamma ||psi||_inf^d / J^beta."""
        return 1.0 + self.amplitude * PSI_SUP ** self.d

    @property
    def active_cells(self) -> int:
        return int(sum(self.nu))

    def density(self, x) -> np.ndarray:
        points = np.atleast_2d(np.asarray(x, dtype=float))
        cells = np.clip(np.floor(points * self.J).astype(int), 0, self.J - 1)
        flat = np.ravel_multi_index(cells.T, (self.J,) * self.d)
        active = np.asarray(self.nu)[flat]
        bump = np.prod(psi(self.J * points - cells), axis=1)
        return 1.0 + self.amplitude * active * bump

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n i.i.d. points by rejection from the uniform proposal with envelope M."""
        return _rejection_sample(self.density, self.envelope, self.d, n, rng)

    def coefficients(self, J_max: int) -> CoefficientTable:
        return _bump_coefficients(self, int(J_max))

    def parseval_mass(self) -> float:
        """integral of f_nu^2 = 1 + amplitude^2 #nu ||psi||_2^(2d) / J^d."""
        return 1.0 + self.amplitude ** 2 * self.active_cells * psi_norms().l2_sq ** self.d / self.J ** self.d

    def box_mass(self, lower: Sequence[float], upper: Sequence[float]) -> float:
        """P(X in prod [lower_m, upper_m]) by 1-D quadrature of each bump factor."""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        mass = float(np.prod(upper - lower))
        for flat, active in enumerate(self.nu):
            if not active:
                continue
            cell = np.unravel_index(flat, (self.J,) * self.d)
            term = 1.0
            for m, c in enumerate(cell):
                a = max(lower[m], c / self.J)
                b = min(upper[m], (c + 1) / self.J)
                if b <= a:
                    term = 0.0
                    break
                val, _ = integrate.quad(lambda y, c=c: psi(self.J * y - c), a, b, epsabs=1e-13, limit=200)
                term *= val
            mass += self.amplitude * term
        return mass

    def to_json(self) -> dict:
        norms = psi_norms()
        return {
            "kind": "bump",
            "d": self.d,
            "J": self.J,
            "beta": self.beta,
            "nu": "".join(str(v) for v in self.nu),
            "gamma": self.gamma,
            "radius": self.radius,
            "norms": {"sup": norms.sup, "l1": norms.l1, "l2_sq": norms.l2_sq,
                      "beta_l2_sq": derivative_l2_sq(self.beta), "tolerance": norms.tolerance},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BumpFamilySpec":
        return cls(obj["d"], obj["J"], obj["beta"], tuple(int(c) for c in obj["nu"]), obj["gamma"], obj["radius"])


@lru_cache(maxsize=16)
def _bump_coefficients(spec: BumpFamilySpec, J_max: int) -> CoefficientTable:
    F = _cell_factors(spec.J, J_max)
    tensor = np.asarray(spec.nu, dtype=float).reshape((spec.J,) * spec.d)
    for _ in range(spec.d):
        # contracts the leading cell axis and appends the frequency axis
        tensor = np.tensordot(tensor, F, axes=([0], [0]))
    theta = spec.amplitude * tensor
    theta[(0,) * spec.d] = 1.0
    return CoefficientTable.from_dense(theta)


def _rejection_sample(density: Callable, envelope: float, d: int, n: int,
                      rng: np.random.Generator) -> np.ndarray:
    if n < 0:
        raise ValueError(f"sample size must be non-negative, got {n}")
    accepted = []
    remaining = int(n)
    while remaining > 0:
        batch = int(math.ceil(remaining * envelope * 1.1)) + 16
        candidates = rng.random((batch, d))
        keep = rng.random(batch) * envelope <= density(candidates)
        chosen = candidates[keep][:remaining]
        accepted.append(chosen)
        remaining -= chosen.shape[0]
    return np.concatenate(accepted, axis=0) if accepted else np.zeros((0, d))


@dataclass(frozen=True)
class CoefficientTruth:
    """
    A density drawn in coefficient space: theta_(1..1) = 1 and random signs
    on magnitudes weight^-1/2 prod j_m^-1/2 up to `support`, scaled so the
    perturbation uses 90% of the room R^2 - d, unless positivity
    (B_0 sum |theta_j| <= 0.9) forces a smaller scale.
    """
    params: SobolevParams
    support: int
    table: CoefficientTable = field(repr=False)

    @classmethod
    def build(cls, params: SobolevParams, support: int, rng: np.random.Generator) -> "CoefficientTruth":
        params.require_density_class()
        d = params.d
        grid = np.indices((support,) * d).reshape(d, -1).T + 1
        grid = grid[np.any(grid > 1, axis=1)]
        weights = sobolev_weights(grid, params)
        magnitude = weights ** -0.5 * np.prod(grid.astype(float), axis=1) ** -0.5
        signs = rng.choice(np.array([-1.0, 1.0]), size=grid.shape[0])
        room = 0.9 * (params.radius ** 2 - d)
        scale_energy = math.sqrt(room / float(np.sum(weights * magnitude ** 2))) if grid.size else 0.0
        scale_positive = 0.9 / (basis_bound(d) * float(np.sum(magnitude))) if grid.size else 0.0
        scale = min(scale_energy, scale_positive)
        entries = {(1,) * d: 1.0}
        for j, v in zip(grid, scale * signs * magnitude):
            entries[tuple(int(c) for c in j)] = float(v)
        return cls(params, int(support), CoefficientTable(d, entries, (support,) * d))

    @property
    def d(self) -> int:
        return self.params.d

    @property
    def envelope(self) -> float:
        _, values = self.table.as_arrays()
        return 1.0 + basis_bound(self.d) * (float(np.sum(np.abs(values))) - 1.0)

    def density(self, x) -> np.ndarray:
        return eval_density(self.table, np.atleast_2d(np.asarray(x, dtype=float)))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return _rejection_sample(self.density, self.envelope, self.d, n, rng)

    def coefficients(self, J_max: int) -> CoefficientTable:
        if J_max >= self.support:
            return CoefficientTable(self.d, dict(self.table.items()), (int(J_max),) * self.d)
        return self.table.truncate((int(J_max),) * self.d)

    def to_json(self) -> dict:
        return {"kind": "coefficients", "params": self.params.to_json(), "support": self.support,
                "table": self.table.to_json()}


# --- Sobolev membership via the derivative characterization ---

@dataclass(frozen=True)
class SmoothFunction:
    """A periodic function on [0,1]^d with its pure partial derivatives of the needed orders."""
    d: int
    f: Callable[..., float]
    partials: Dict[int, Callable[..., float]]


@dataclass(frozen=True)
class MembershipResult:
    member: bool
    margin: float
    c1_sq: float
    c2_sq: float


def _membership(c1_sq: float, c2_sq: float, d: int, radius: float) -> MembershipResult:
    margin = radius ** 2 - d * (c1_sq + c2_sq)
    return MembershipResult(margin >= 0.0, margin, c1_sq, c2_sq)


def sobolev_membership_check(target: Union[BumpFamilySpec, SmoothFunction], beta: SobolevParams,
                             radius: Optional[float] = None) -> MembershipResult:
    """
    Sufficient condition for f in W^beta(R): d (C1^2 + C2^2) <= R^2 with
    C1^2 = integral of f^2 and C2^2 = max_m integral of (d^beta_m f / dx_m^beta_m)^2.
    """
    radius = beta.radius if radius is None else float(radius)
    orders = [_require_integer(s, "beta") for s in beta.smoothness]
    if isinstance(target, BumpFamilySpec):
        if target.d != beta.d:
            raise ValueError(f"spec dimension {target.d} does not match beta dimension {beta.d}")
        norms = psi_norms()
        share = target.active_cells / target.J ** target.d
        c1_sq = target.parseval_mass()
        c2_sq = max(
            target.gamma ** 2 * share * derivative_l2_sq(k) * norms.l2_sq ** (target.d - 1)
            * target.J ** (2 * (k - target.beta))
            for k in orders
        )
        return _membership(c1_sq, c2_sq, target.d, radius)
    ranges = [(0.0, 1.0)] * target.d
    opts = {"epsabs": 1e-10, "epsrel": 1e-10, "limit": 200}

    def integral(func):
        value, err = integrate.nquad(lambda *x: func(*x) ** 2, ranges, opts=[opts] * target.d)
        if err > 1e-6 * max(1.0, abs(value)):
            raise ValueError(f"quadrature did not converge (error {err:g})")
        return value

    c1_sq = integral(target.f)
    c2_sq = max(integral(target.partials[m]) for m in range(target.d))
    return _membership(c1_sq, c2_sq, target.d, radius)


def discriminator_membership(d: int, J: int, delta: float) -> MembershipResult:
    """g_lambda = (eta / J^delta) sum lambda_j G_j, lambda in {-1,+1}^(J^d), checked against W^delta(1)."""
    k = _require_integer(delta, "delta")
    eta = eta_constant(k, d)
    norms = psi_norms()
    c1_sq = eta ** 2 / J ** (2 * k) * norms.l2_sq ** d
    c2_sq = eta ** 2 * derivative_l2_sq(k) * norms.l2_sq ** (d - 1)
    return _membership(c1_sq, c2_sq, d, 1.0)


def build_truth(kind: str, params: SobolevParams, J: int = 2, pattern: str = "dense",
                root_seed: int = 0, support: int = 127):
    """Truth factory: 'bump', 'uniform' (bump family with nu = 0) or 'coefficients'."""
    if kind in ("bump", "uniform"):
        if not params.is_isotropic:
            raise ValueError(f"bump truths need isotropic smoothness, got {params.smoothness}")
        beta = params.smoothness[0]
        if kind == "uniform":
            return BumpFamilySpec.build(params.d, J, max(1, int(round(beta))), params.radius, "empty")
        rng = streams.derive_stream(root_seed, streams.NU)
        return BumpFamilySpec.build(params.d, J, beta, params.radius, pattern, rng)
    if kind == "coefficients":
        return CoefficientTruth.build(params, support, streams.derive_stream(root_seed, streams.TRUTH))
    raise ValueError(f"unknown truth kind {kind!r}; expected bump, uniform or coefficients")


def truth_from_json(obj: dict):
    if obj["kind"] == "bump":
        return BumpFamilySpec.from_json(obj)
    if obj["kind"] == "coefficients":
        return CoefficientTruth(SobolevParams.from_json(obj["params"]), int(obj["support"]),
                                CoefficientTable.from_json(obj["table"]))
    raise ValueError(f"unknown truth kind {obj['kind']!r}")
