"""
Data-driven choice of the truncation J: pairwise comparison of the
estimates against the variance majorant V(J).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

import streams
from blocks import sigma_closed_form
from config import DEFAULT_CHUNK_SIZE, DEFAULT_KAPPA1, DEFAULT_KAPPA2
from entities import SobolevParams
from estimator import EstimateResult, aggregate, tau, variance_distance
from fourier import sobolev_weights
from mechanisms.block import CoordinateBlockMechanism

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelCollection:
    """J = 2^(L+1) - 1 for 0 <= L <= floor(log2(1 + n alpha^2)) - 1."""
    Js: Tuple[int, ...]
    n: int
    alpha: float

    def __iter__(self):
        return iter(self.Js)

    def __len__(self) -> int:
        return len(self.Js)

    @property
    def largest(self) -> int:
        return self.Js[-1]


def model_collection(n, alpha, max_J=None):
    """
    The dyadic candidates for n alpha^2 >= 2. `max_J` drops the candidates
    above a cap, e.g. the bound of the truth table used to score them.
    """
    n_alpha2 = float(n) * float(alpha) ** 2
    if n_alpha2 < 2.0:
        raise ValueError(f"the model collection needs n*alpha^2 >= 2, got {n_alpha2}")
    size = int(math.floor(math.log2(1.0 + n_alpha2) + 1e-12))
    Js = tuple(2 ** (L + 1) - 1 for L in range(size))
    if max_J is not None:
        Js = tuple(J for J in Js if J <= max_J)
        if not Js:
            raise ValueError(f"no candidate J is <= {max_J}")
    return ModelCollection(Js, int(n), float(alpha))


def penalty_V(schedule, n, alpha, A=1.0):
    """V(J) = sqrt(2) tau Sigma_J sqrt(d log J + 1.5 log(n alpha^2) + log(tau Sigma_J))."""
    if A < 1:
        raise ValueError(f"the penalty needs A >= 1, got {A}")
    schedule.require_allocated()
    d = schedule.d
    n_alpha2 = float(n) * float(alpha) ** 2
    spread = tau(A, d) * sigma_closed_form(schedule, n)
    radicand = d * math.log(schedule.J) + 1.5 * math.log(n_alpha2) + math.log(spread)
    if not radicand > 0:
        raise ValueError(f"penalty radicand is not positive ({radicand}); n*alpha^2 too small")
    return math.sqrt(2.0) * spread * math.sqrt(radicand)


def _tail_distance(estimate, J, delta):
    """d(f-hat_J', f-hat_{J' ^ J}) from one pass: the part of f-hat_J' beyond J on some axis."""
    indices, values = estimate.coefficients.as_arrays()
    beyond = np.any(indices > J, axis=1)
    if not np.any(beyond):
        return 0.0
    weights = sobolev_weights(indices[beyond], delta)
    return float(math.sqrt(np.sum(values[beyond] ** 2 / weights)))


def empirical_bias_A(estimates, J, V, kappa1=DEFAULT_KAPPA1, delta=None):
    """A-hat(J) = max over J' of (d(f-hat_J', f-hat_{J' ^ J}) - kappa1 V(J'))_+."""
    best = 0.0
    for J_prime, est in estimates.items():
        if J_prime not in V:
            raise ValueError(f"no penalty value for J={J_prime}")
        if J_prime <= J:
            continue
        disc = SobolevParams((delta or est.schedule.delta).smoothness, 1.0)
        best = max(best, _tail_distance(est, J, disc) - kappa1 * V[J_prime])
    return best


@dataclass(frozen=True)
class CriterionRow:
    J: int
    V: float
    A: float
    crit: float


@dataclass(frozen=True)
class SelectionResult:
    J_hat: int
    rows: Tuple[CriterionRow, ...]
    estimate: EstimateResult
    kappa1: float
    kappa2: float
    n: int
    alpha: float
    composed_budget: float

    def to_json(self) -> dict:
        return {
            "J_hat": self.J_hat,
            "kappa1": self.kappa1,
            "kappa2": self.kappa2,
            "n": self.n,
            "alpha": self.alpha,
            "composed_budget": self.composed_budget,
            "criterion": [{"J": r.J, "V": r.V, "A": r.A, "crit": r.crit} for r in self.rows],
            "estimate": self.estimate.to_json(),
        }

    def summary(self) -> str:
        lines = [
            "=" * 70,
            f"--- MODEL SELECTION (n={self.n}, alpha={self.alpha:g}, kappa=({self.kappa1:g}, {self.kappa2:g})) ---",
            "=" * 70,
            f"{'J':>8} | {'V(J)':>14} | {'A(J)':>14} | {'Crit(J)':>14} |",
            "-" * 70,
        ]
        for r in self.rows:
            mark = "<-" if r.J == self.J_hat else ""
            lines.append(f"{r.J:>8} | {r.V:>14.6g} | {r.A:>14.6g} | {r.crit:>14.6g} | {mark}")
        lines.append("-" * 70)
        lines.append(f"Selected J = {self.J_hat}; composed budget over all passes = {self.composed_budget:g}")
        return "\n".join(lines)


def _require_isotropic(delta):
    if not delta.is_isotropic:
        raise ValueError(f"adaptive selection runs on isotropic dyadic schedules only, got delta={delta.smoothness}")


def select(estimates, kappa1=DEFAULT_KAPPA1, kappa2=DEFAULT_KAPPA2, A=1.0, warn=True):
    """
    J-hat = argmin A-hat(J) + kappa2 V(J), ties going to the smallest J.
    Each entry must come from its own privatization pass over the data.
    """
    if not estimates:
        raise ValueError("the model collection is empty")

    # 1. Aggregate raw datasets and check they form one collection
    built = {
        int(J): (e if isinstance(e, EstimateResult) else aggregate(e)) for J, e in estimates.items()
    }
    for J, est in built.items():
        if est.schedule.J != J:
            raise ValueError(f"estimate filed under J={J} was built with J={est.schedule.J}")
        _require_isotropic(est.schedule.delta)
    first = built[min(built)]
    n, alpha = first.n, first.schedule.alpha
    if any(e.n != n or e.schedule.alpha != alpha for e in built.values()):
        raise ValueError("estimates disagree on n or alpha")

    # 2. Penalty and empirical bias for every candidate
    V = {J: penalty_V(e.schedule, n, alpha, A) for J, e in built.items()}
    rows = []
    for J in sorted(built):
        a_hat = empirical_bias_A(built, J, V, kappa1)
        rows.append(CriterionRow(J, V[J], a_hat, a_hat + kappa2 * V[J]))

    # 3. Minimize the criterion; strict < keeps the smallest J on ties
    best = rows[0]
    for r in rows[1:]:
        if r.crit < best.crit:
            best = r

    composed = len(built) * alpha
    if warn and len(built) > 1:
        logger.warning(
            "adaptive selection privatized the data %d times; naive composed budget is %.4g (per-pass alpha=%.4g)",
            len(built), composed, alpha,
        )
    return SelectionResult(best.J, tuple(rows), built[best.J], float(kappa1), float(kappa2), n, alpha, composed)


def build_estimates(points, collection, alpha, delta, root_seed, key=(), chunk_size=DEFAULT_CHUNK_SIZE):
    """One independent privatization pass per J, each aggregated on the fly."""
    _require_isotropic(delta)
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    out = {}
    for J in collection:
        mech = CoordinateBlockMechanism.build(int(J), delta.d, alpha, delta)
        out[int(J)] = aggregate(mech.privatize_sums(points, root_seed, (*key, int(J)), chunk_size))
    return out


def tail_probability_bound(schedule, n, alpha, t, A=1.0):
    """P(d(f-hat_J, f_J) >= V(J) + t) <= (n alpha^2)^-1.5 (2 / (tau Sigma)) exp(-t^2 / (2 (tau Sigma)^2))."""
    spread = tau(A, schedule.d) * sigma_closed_form(schedule, n)
    n_alpha2 = float(n) * float(alpha) ** 2
    return n_alpha2 ** -1.5 * 2.0 / spread * math.exp(-t ** 2 / (2.0 * spread ** 2))


@dataclass(frozen=True)
class TailRow:
    t: float
    frequency: float
    bound: float
    se: float

    @property
    def vacuous(self) -> bool:
        return self.bound >= 1.0

    @property
    def passed(self) -> bool:
        return self.frequency <= min(self.bound, 1.0) + 3.0 * self.se


@dataclass(frozen=True)
class ConcentrationReport:
    J: int
    n: int
    alpha: float
    replications: int
    V: float
    rows: Tuple[TailRow, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def summary(self) -> str:
        lines = [
            "=" * 70,
            f"--- CONCENTRATION (J={self.J}, n={self.n}, alpha={self.alpha:g}, R={self.replications}) ---",
            "=" * 70,
            f"{'t':>12} | {'frequency':>12} | {'bound':>12} | {'3 SE':>10} | result",
            "-" * 70,
        ]
        for r in self.rows:
            status = "vacuous" if r.vacuous else ("pass" if r.passed else "FAIL")
            lines.append(f"{r.t:>12.5g} | {r.frequency:>12.5g} | {r.bound:>12.5g} | {3 * r.se:>10.3g} | {status}")
        return "\n".join(lines)


def concentration_check(schedule, n, alpha, truth, replications, root_seed=0, A=1.0,
                        t_multiples=(0.0, 1.0, 2.0), chunk_size=DEFAULT_CHUNK_SIZE):
    """
    Empirical exceedance frequency of d(f-hat_J, f_J) >= V(J) + t over
    independent datasets, against the tail bound at t = c * tau Sigma_J.
    `truth` provides sample(n, rng) and coefficients(J_max).
    """
    if replications < 1:
        raise ValueError(f"replications must be >= 1, got {replications}")

    # 1. Fixed channel, truth table and threshold V(J)
    mech = CoordinateBlockMechanism(schedule)
    table = truth.coefficients(max(schedule.bounds))
    V = penalty_V(schedule, n, alpha, A)
    spread = tau(A, schedule.d) * sigma_closed_form(schedule, n)

    # 2. One fresh dataset per replication, each on its own sample stream
    distances = np.empty(replications)
    for rep in range(replications):
        rng = streams.derive_stream(root_seed, streams.SAMPLE, rep)
        points = truth.sample(n, rng)
        est = aggregate(mech.privatize_sums(points, root_seed, (rep,), chunk_size))
        distances[rep] = variance_distance(est, table)

    # 3. Exceedance frequency against the bound at each offset t
    rows = []
    for c in t_multiples:
        t = float(c) * spread
        bound = tail_probability_bound(schedule, n, alpha, t, A)
        freq = float(np.mean(distances >= V + t))
        b = min(bound, 1.0)
        rows.append(TailRow(t, freq, bound, math.sqrt(b * (1.0 - b) / replications)))
    return ConcentrationReport(schedule.J, int(n), float(alpha), int(replications), V, tuple(rows))
