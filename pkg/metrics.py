import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from blocks import regime
from entities import SobolevParams

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 4
TRANSIENT_SE_SHARE = 0.25
REGRESSORS = ("plain", "log", "log^d", "log^4d", "log^4d+1")


def regressor_values(n_alpha2, regressor: str, d: int) -> np.ndarray:
    """x = log(n alpha^2 / log(n alpha^2)^p) for the log power p the regressor names."""
    u = np.log(np.asarray(n_alpha2, dtype=float))
    powers = {"plain": 0, "log": 1, "log^d": d, "log^4d": 4 * d, "log^4d+1": 4 * d + 1}
    if regressor not in powers:
        raise ValueError(f"unknown regressor {regressor!r}; expected one of {REGRESSORS}")
    p = powers[regressor]
    if p and np.any(u <= 0):
        raise ValueError("log-corrected regressors need n*alpha^2 > 1")
    return u - p * np.log(u) if p else u


def theoretical_rate(mechanism: str, selector: str, beta: SobolevParams,
                     delta: SobolevParams) -> Tuple[float, str, str]:
    """
    (exponent, regime, regressor) of the risk decay in n alpha^2.

    Block mechanism with a fixed J: -(b+s)/(2b+2d) below delta = d, -1/2 at
    and above it (with log^4d at delta = d). The adaptive estimator pays
    one more log factor. The global mechanism switches at delta = d/2 and
    tops out at -(b+s)/(2b+2s+d).
    """
    d = beta.d
    b, s = beta.effective, delta.effective
    if mechanism == "global":
        tag = regime(delta, d / 2.0)
        eff = tag if tag != "mixed" else regime(SobolevParams.isotropic(s, d), d / 2.0)
        if eff == "sub":
            return -(b + s) / (2 * b + 2 * d), tag, "plain"
        return -(b + s) / (2 * b + 2 * s + d), tag, ("log^d" if eff == "critical" else "plain")
    if mechanism != "block":
        raise ValueError(f"unknown mechanism {mechanism!r}")
    tag = regime(delta, float(d))
    eff = tag if tag != "mixed" else regime(SobolevParams.isotropic(s, d), float(d))
    adaptive = selector == "adaptive"
    if eff == "sub":
        return -(b + s) / (2 * b + 2 * d), tag, ("log" if adaptive else "plain")
    if eff == "critical":
        return -0.5, tag, ("log^4d+1" if adaptive else "log^4d")
    return -0.5, tag, ("log" if adaptive else "plain")


@dataclass(frozen=True)
class RateFitResult:
    n_alpha2: Tuple[float, ...]
    x: Tuple[float, ...]
    y: Tuple[float, ...]
    se: Tuple[float, ...]
    slope: float
    intercept: float
    slope_se: float
    theoretical: float
    regime: str
    regressor: str
    dropped: Tuple[float, ...] = ()
    companion: Optional["RateFitResult"] = field(default=None, compare=False)

    @property
    def deviation(self) -> float:
        return abs(self.slope - self.theoretical)

    def within(self, tolerance: float) -> bool:
        return self.deviation <= tolerance

    def to_json(self) -> dict:
        out = {
            "points": [
                {"n_alpha2": n, "x": x, "log_risk": y, "se": s}
                for n, x, y, s in zip(self.n_alpha2, self.x, self.y, self.se)
            ],
            "slope": self.slope,
            "intercept": self.intercept,
            "slope_se": self.slope_se,
            "theoretical": self.theoretical,
            "deviation": self.deviation,
            "regime": self.regime,
            "regressor": self.regressor,
            "dropped": list(self.dropped),
        }
        if self.companion is not None:
            out["companion"] = self.companion.to_json()
        return out

    def summary(self) -> str:
        lines = [
            f"Regressor: {self.regressor:<10} Regime: {self.regime}",
            f"Fitted slope: {self.slope:+.4f} (SE {self.slope_se:.4f})   "
            f"Theoretical: {self.theoretical:+.4f}   |diff| = {self.deviation:.4f}",
        ]
        if self.dropped:
            lines.append(f"Dropped transient grid points (SE > {TRANSIENT_SE_SHARE:.0%} of mean): "
                         + ", ".join(f"{v:g}" for v in self.dropped))
        if self.companion is not None:
            lines.append("Companion fit against the (n alpha^2)^-1/2 lower bound:")
            lines.extend("  " + line for line in self.companion.summary().splitlines())
        return "\n".join(lines)


def fit_power_law(n_alpha2: Sequence[float], mean_risk: Sequence[float], se: Sequence[float],
                  theoretical: float, regime_tag: str = "sub", regressor: str = "plain", d: int = 1,
                  drop_transient: bool = True) -> RateFitResult:
    """
    Least squares of log(mean risk) on the regressor. The smallest grid
    point is dropped when its SE exceeds 25% of its mean and at least 4
    points remain.
    """
    n_alpha2 = np.asarray(n_alpha2, dtype=float)
    mean_risk = np.asarray(mean_risk, dtype=float)
    se = np.asarray(se, dtype=float)
    if not (n_alpha2.shape == mean_risk.shape == se.shape):
        raise ValueError("grid, mean risk and SE must have the same length")
    order = np.argsort(n_alpha2)
    n_alpha2, mean_risk, se = n_alpha2[order], mean_risk[order], se[order]
    dropped = ()
    if drop_transient and n_alpha2.size > MIN_FIT_POINTS and se[0] > TRANSIENT_SE_SHARE * mean_risk[0]:
        dropped = (float(n_alpha2[0]),)
        n_alpha2, mean_risk, se = n_alpha2[1:], mean_risk[1:], se[1:]
    if n_alpha2.size < MIN_FIT_POINTS:
        raise ValueError(f"a rate fit needs at least {MIN_FIT_POINTS} grid points, got {n_alpha2.size}")
    if np.unique(n_alpha2).size < 2:
        raise ValueError("degenerate grid: all n*alpha^2 values are equal")
    if np.any(mean_risk <= 0):
        raise ValueError("mean risks must be positive to fit on a log scale")
    x = regressor_values(n_alpha2, regressor, d)
    y = np.log(mean_risk)
    fit = stats.linregress(x, y)
    if not math.isfinite(fit.slope):
        raise ValueError("rate fit produced a non-finite slope")
    logger.debug("rate fit (%s): slope %.4f vs %.4f", regressor, fit.slope, theoretical)
    return RateFitResult(
        n_alpha2=tuple(float(v) for v in n_alpha2),
        x=tuple(float(v) for v in x),
        y=tuple(float(v) for v in y),
        se=tuple(float(v) for v in se / mean_risk),
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        slope_se=float(fit.stderr),
        theoretical=float(theoretical),
        regime=regime_tag,
        regressor=regressor,
        dropped=dropped,
    )


def print_rate_fit(title: str, fit: RateFitResult):
    print("\n" + "=" * 70)
    print(f"--- {title} ---")
    print("=" * 70)
    print(f"{'n*alpha^2':>14} | {'regressor':>12} | {'log risk':>12} | {'rel. SE':>10}")
    print("-" * 70)
    for n, x, y, s in zip(fit.n_alpha2, fit.x, fit.y, fit.se):
        print(f"{n:>14.6g} | {x:>12.5f} | {y:>12.5f} | {s:>10.4f}")
    print("-" * 70)
    print(fit.summary())


def print_grid_summary(title: str, rows):
    """rows: GridPoint-like objects with n, J, mean_head, mean_tail, mean_risk, se."""
    print("\n" + "=" * 90)
    print(f"--- {title} ---")
    print("=" * 90)
    print(f"{'n':>10} | {'J':>10} | {'head':>12} | {'tail':>12} | {'risk':>12} | {'SE':>10} | {'oracle':>8}")
    print("-" * 90)
    for r in rows:
        oracle = f"{r.oracle_ratio:.3f}" if r.oracle_ratio is not None else "-"
        print(f"{r.n:>10} | {r.J_label:>10} | {r.mean_head:>12.5g} | {r.mean_tail:>12.5g} | "
              f"{r.mean_risk:>12.5g} | {r.se:>10.3g} | {oracle:>8}")


def print_comparison(report):
    """Block vs global mean risk per n, as a side-by-side table."""
    print("\n" + "=" * 100)
    print("--- MECHANISM COMPARISON (block vs global) ---")
    print("=" * 100)
    print(f"{'n':>10} | {'block risk':>12} | {'block SE':>10} | {'global risk':>12} | {'global SE':>10} | "
          f"{'gap / SE':>9} | {'separated':>9}")
    print("-" * 100)
    for r in report.rows:
        print(f"{r.n:>10} | {r.block_risk:>12.5g} | {r.block_se:>10.3g} | {r.global_risk:>12.5g} | "
              f"{r.global_se:>10.3g} | {r.gap_in_se:>9.2f} | {str(r.separated):>9}")
    print("-" * 100)
    print("Block fit:")
    print("  " + report.block_fit.summary().replace("\n", "\n  "))
    print("Global fit:")
    print("  " + report.global_fit.summary().replace("\n", "\n  "))
