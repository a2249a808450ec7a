"""
Seeded Monte Carlo experiments: risk of the private projection estimator
across a grid of sample sizes, for a fixed rate-optimal J or the adaptive
choice, under the block or the global mechanism.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

import config
import streams
import testbed
from adaptive import build_estimates, model_collection, select
from blocks import (allocate_budget, anisotropic_partition, dyadic_partition, global_theoretical_J,
                    single_block, theoretical_J)
from entities import CoefficientTable, SobolevParams
from estimator import aggregate, private_risk
from mechanisms import CoordinateBlockMechanism, CoordinateGlobalMechanism
from metrics import RateFitResult, fit_power_law, theoretical_rate

logger = logging.getLogger(__name__)

RECORD_FIELDS = ["n", "n_alpha2", "replication", "J", "head", "tail", "risk"]
SEPARATION_SIGMAS = 2.0
ORACLE_FACTOR = 3.0


@dataclass(frozen=True)
class ExperimentSpec:
    d: int
    beta: Tuple[float, ...]
    delta: Tuple[float, ...]
    radius: float
    A: float
    alpha: float
    n_grid: Tuple[int, ...]
    mechanism: str
    selector: str
    replications: int
    root_seed: int
    truth: Dict = field(default_factory=lambda: dict(config.DEFAULT_TRUTH), compare=False)
    truth_J_max: int = config.DEFAULT_TRUTH_J_MAX
    kappa1: float = config.DEFAULT_KAPPA1
    kappa2: float = config.DEFAULT_KAPPA2
    chunk_size: int = config.DEFAULT_CHUNK_SIZE
    workers: int = config.DEFAULT_WORKERS
    output: Optional[str] = None

    @classmethod
    def from_params(cls, params: dict) -> "ExperimentSpec":
        config.validate_params(params)
        if params.get("SEED") is None:
            raise ValueError("a root seed is mandatory for experiments (--seed)")
        return cls(
            d=int(params["D"]),
            beta=config.smoothness_of(params, "BETA"),
            delta=config.smoothness_of(params, "DELTA"),
            radius=float(params["RADIUS"]),
            A=float(params["A"]),
            alpha=float(params["ALPHA"]),
            n_grid=tuple(sorted(int(n) for n in params["N_GRID"])),
            mechanism=params["MECHANISM"],
            selector=params["SELECTOR"],
            replications=int(params["REPLICATIONS"]),
            root_seed=int(params["SEED"]),
            truth=dict(params["TRUTH"]),
            truth_J_max=int(params["TRUTH_J_MAX"]),
            kappa1=float(params["KAPPA1"]),
            kappa2=float(params["KAPPA2"]),
            chunk_size=int(params["CHUNK_SIZE"]),
            workers=int(params["WORKERS"]),
            output=params.get("OUTPUT"),
        )

    def to_params(self) -> dict:
        return {
            "D": self.d,
            "BETA": list(self.beta),
            "DELTA": list(self.delta),
            "RADIUS": self.radius,
            "A": self.A,
            "ALPHA": self.alpha,
            "N_GRID": list(self.n_grid),
            "REPLICATIONS": self.replications,
            "MECHANISM": self.mechanism,
            "SELECTOR": self.selector,
            "KAPPA1": self.kappa1,
            "KAPPA2": self.kappa2,
            "TRUTH": dict(self.truth),
            "TRUTH_J_MAX": self.truth_J_max,
            "CHUNK_SIZE": self.chunk_size,
            "WORKERS": self.workers,
            "SEED": self.root_seed,
            "OUTPUT": self.output,
        }

    @property
    def beta_params(self) -> SobolevParams:
        return SobolevParams(self.beta, self.radius)

    @property
    def delta_params(self) -> SobolevParams:
        return SobolevParams(self.delta, 1.0)


def build_truth(spec):
    truth = spec.truth
    return testbed.build_truth(
        truth.get("kind", "bump"), spec.beta_params, J=int(truth.get("J", 2)),
        pattern=truth.get("nu", "dense"), root_seed=spec.root_seed, support=spec.truth_J_max,
    )


def fixed_mechanism(spec, n):
    """The mechanism at the rate-optimal J for this n."""
    beta, delta = spec.beta_params, spec.delta_params
    if spec.mechanism == "global":
        J, _ = global_theoretical_J(n, spec.alpha, beta, delta)
        return CoordinateGlobalMechanism(single_block((J,) * spec.d, spec.alpha, delta))
    J, _ = theoretical_J(n, spec.alpha, beta, delta)
    partition = dyadic_partition(J, spec.d) if beta.is_isotropic else anisotropic_partition(J, beta, delta)
    return CoordinateBlockMechanism(allocate_budget(partition, spec.alpha, delta))


# --- worker side ---

_WORKER = {}


def _init_worker(spec, truth_json, table_json):
    _WORKER["spec"] = spec
    _WORKER["truth"] = testbed.truth_from_json(truth_json)
    _WORKER["table"] = CoefficientTable.from_json(table_json)


def _J_label(bounds):
    return str(bounds[0]) if len(set(bounds)) == 1 else "x".join(str(b) for b in bounds)


def replicate(spec, truth, table, grid_index, n, rep):
    """One dataset at one grid point: sample, privatize, estimate, score."""
    # 1. Sample the dataset from its own stream
    points = truth.sample(n, streams.derive_stream(spec.root_seed, streams.SAMPLE, grid_index, rep))
    key = (grid_index, rep)
    beta, delta = spec.beta_params, spec.delta_params
    record = {"n": n, "n_alpha2": n * spec.alpha ** 2, "replication": rep}

    if spec.selector == "adaptive":
        # 2a. One privatization pass per candidate J, then the data-driven choice
        collection = model_collection(n, spec.alpha, max_J=min(table.bound))
        estimates = build_estimates(points, collection, spec.alpha, delta, spec.root_seed, key, spec.chunk_size)
        selection = select(estimates, spec.kappa1, spec.kappa2, spec.A, warn=False)

        # 3a. Score every candidate so the oracle J can be read off afterwards
        per_J = {J: private_risk(est, table, beta, delta) for J, est in estimates.items()}
        chosen = per_J[selection.J_hat]
        record.update(J=str(selection.J_hat), head=chosen.head, tail=chosen.tail, risk=chosen.midpoint,
                      per_J={J: r.midpoint for J, r in per_J.items()})
        return record

    # 2b. Privatize at the rate-optimal J and aggregate the sign sums
    mech = fixed_mechanism(spec, n)
    estimate = aggregate(mech.privatize_sums(points, spec.root_seed, key, spec.chunk_size))

    # 3b. Score against the truth table
    risk = private_risk(estimate, table, beta, delta)
    record.update(J=_J_label(mech.schedule.bounds), head=risk.head, tail=risk.tail, risk=risk.midpoint)
    return record


def _run_task(task):
    grid_index, n, rep = task
    return replicate(_WORKER["spec"], _WORKER["truth"], _WORKER["table"], grid_index, n, rep)


# --- results ---

@dataclass(frozen=True)
class GridPoint:
    n: int
    n_alpha2: float
    J_label: str
    mean_head: float
    mean_tail: float
    mean_risk: float
    se: float
    mean_J_hat: Optional[float] = None
    per_J_mean: Optional[Dict[int, float]] = None

    @property
    def oracle_ratio(self) -> Optional[float]:
        """Adaptive mean risk over the best fixed-J mean risk, from the same replications."""
        if not self.per_J_mean:
            return None
        return self.mean_risk / min(self.per_J_mean.values())

    def to_json(self) -> dict:
        out = {
            "n": self.n,
            "n_alpha2": self.n_alpha2,
            "J": self.J_label,
            "mean_head": self.mean_head,
            "mean_tail": self.mean_tail,
            "mean_risk": self.mean_risk,
            "se": self.se,
        }
        if self.per_J_mean is not None:
            out["mean_J_hat"] = self.mean_J_hat
            out["per_J_mean"] = [{"J": J, "mean_risk": v} for J, v in sorted(self.per_J_mean.items())]
            out["oracle_ratio"] = self.oracle_ratio
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "GridPoint":
        per_J = obj.get("per_J_mean")
        return cls(
            n=int(obj["n"]), n_alpha2=float(obj["n_alpha2"]), J_label=str(obj["J"]),
            mean_head=float(obj["mean_head"]), mean_tail=float(obj["mean_tail"]),
            mean_risk=float(obj["mean_risk"]), se=float(obj["se"]),
            mean_J_hat=obj.get("mean_J_hat"),
            per_J_mean={int(e["J"]): float(e["mean_risk"]) for e in per_J} if per_J is not None else None,
        )


@dataclass
class RunResult:
    spec: ExperimentSpec
    points: Tuple[GridPoint, ...]
    records: List[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "type": "run",
            "spec": self.spec.to_params(),
            "points": [p.to_json() for p in self.points],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RunResult":
        params = config.get_default_params()
        params.update(obj["spec"])
        return cls(ExperimentSpec.from_params(params), tuple(GridPoint.from_json(p) for p in obj["points"]))

    def csv_fields(self) -> List[str]:
        if self.spec.selector != "adaptive":
            return list(RECORD_FIELDS)
        Js = sorted({J for r in self.records for J in r.get("per_J", {})})
        return list(RECORD_FIELDS) + [f"risk_J{J}" for J in Js]

    def csv_rows(self) -> List[dict]:
        rows = []
        for r in self.records:
            row = {k: r[k] for k in RECORD_FIELDS}
            for J, v in r.get("per_J", {}).items():
                row[f"risk_J{J}"] = v
            rows.append(row)
        return rows


def _summarize(spec, records):
    points = []
    for n in spec.n_grid:
        group = [r for r in records if r["n"] == n]
        risk = np.array([r["risk"] for r in group])
        se = float(np.std(risk, ddof=1) / math.sqrt(risk.size)) if risk.size > 1 else 0.0
        per_J, mean_J_hat = None, None
        if spec.selector == "adaptive":
            Js = sorted(group[0]["per_J"])
            per_J = {J: float(np.mean([r["per_J"][J] for r in group])) for J in Js}
            mean_J_hat = float(np.mean([int(r["J"]) for r in group]))
            label = f"{mean_J_hat:.1f}"
        else:
            label = group[0]["J"]
        points.append(GridPoint(
            n=n, n_alpha2=n * spec.alpha ** 2, J_label=label,
            mean_head=float(np.mean([r["head"] for r in group])),
            mean_tail=float(np.mean([r["tail"] for r in group])),
            mean_risk=float(np.mean(risk)), se=se,
            mean_J_hat=mean_J_hat, per_J_mean=per_J,
        ))
    return tuple(points)


def _as_spec(spec):
    """Experiments take an ExperimentSpec or a params dict as built by config.get_default_params()."""
    return spec if isinstance(spec, ExperimentSpec) else ExperimentSpec.from_params(spec)


def run(spec):
    """
    All (grid point, replication) tasks, in a process pool when
    spec.workers > 1. Every task draws from streams keyed by its own
    (grid index, replication), so the result does not depend on workers.
    """
    spec = _as_spec(spec)

    # 1. Truth and its coefficient table, shared by every task
    truth = build_truth(spec)
    table = truth.coefficients(spec.truth_J_max)
    tasks = [(g, n, rep) for g, n in enumerate(spec.n_grid) for rep in range(spec.replications)]
    logger.info("running %d tasks (%s mechanism, %s selector, %d workers)",
                len(tasks), spec.mechanism, spec.selector, spec.workers)

    # 2. Composed-budget warning, once per grid point
    if spec.selector == "adaptive":
        for n in spec.n_grid:
            passes = len(model_collection(n, spec.alpha, max_J=min(table.bound)))
            logger.warning("n=%d: %d privatization passes per dataset; naive composed budget %.4g",
                           n, passes, passes * spec.alpha)

    # 3. Replications, serial or in a pool (workers rebuild the truth from JSON)
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers, initializer=_init_worker,
                                 initargs=(spec, truth.to_json(), table.to_json())) as pool:
            records = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * spec.workers))))
    else:
        records = [replicate(spec, truth, table, g, n, rep) for g, n, rep in tasks]

    # 4. Per-grid-point summary
    records.sort(key=lambda r: (r["n"], r["replication"]))
    return RunResult(spec, _summarize(spec, records), records)


def fit_rate(result, drop_transient=True):
    """
    Log-log fit of the mean exact head distance against n alpha^2 with the
    regime's regressor and exponent. The truth-table tail is the same
    constant at every n, so it is left out of the fit.
    """
    spec = result.spec
    exponent, tag, regressor = theoretical_rate(spec.mechanism, spec.selector, spec.beta_params, spec.delta_params)
    n_alpha2 = [p.n_alpha2 for p in result.points]
    mean = [p.mean_head for p in result.points]
    se = [p.se for p in result.points]
    fit = fit_power_law(n_alpha2, mean, se, exponent, tag, regressor, spec.d, drop_transient)
    if spec.mechanism == "block" and regressor in ("log^4d", "log^4d+1"):
        # delta = d: also report against the (n alpha^2)^-1/2 lower bound
        lower = fit_power_law(n_alpha2, mean, se, -0.5, tag, "plain", spec.d, drop_transient)
        fit = replace(fit, companion=lower)
    return fit


@dataclass(frozen=True)
class ComparisonRow:
    n: int
    block_risk: float
    block_se: float
    global_risk: float
    global_se: float

    @property
    def gap_in_se(self) -> float:
        spread = math.hypot(self.block_se, self.global_se)
        gap = self.global_risk - self.block_risk
        return gap / spread if spread > 0 else math.copysign(math.inf, gap) if gap else 0.0

    @property
    def separated(self) -> bool:
        return self.gap_in_se > SEPARATION_SIGMAS


@dataclass
class ComparisonReport:
    block: RunResult
    global_: RunResult
    block_fit: RateFitResult
    global_fit: RateFitResult
    rows: Tuple[ComparisonRow, ...]

    def separated_from(self, n_min: int) -> bool:
        return all(r.separated for r in self.rows if r.n >= n_min)

    def to_json(self) -> dict:
        return {
            "type": "comparison",
            "block": self.block.to_json(),
            "global": self.global_.to_json(),
            "block_fit": self.block_fit.to_json(),
            "global_fit": self.global_fit.to_json(),
            "rows": [
                {"n": r.n, "block_risk": r.block_risk, "block_se": r.block_se, "global_risk": r.global_risk,
                 "global_se": r.global_se, "gap_in_se": r.gap_in_se, "separated": r.separated}
                for r in self.rows
            ],
        }


def compare_mechanisms(spec):
    """Same data streams under both mechanisms, each at its own rate-optimal J."""
    spec = _as_spec(spec)
    block = run(replace(spec, mechanism="block", selector="fixed"))
    global_ = run(replace(spec, mechanism="global", selector="fixed"))
    rows = tuple(
        ComparisonRow(b.n, b.mean_risk, b.se, g.mean_risk, g.se)
        for b, g in zip(block.points, global_.points)
    )
    return ComparisonReport(block, global_, fit_rate(block), fit_rate(global_), rows)


@dataclass
class AdaptiveCheck:
    run: RunResult
    fit: Optional[RateFitResult]

    @property
    def oracle_ratios(self) -> Dict[int, float]:
        return {p.n: p.oracle_ratio for p in self.run.points}

    def oracle_passed(self, factor: float = ORACLE_FACTOR) -> bool:
        return all(r <= factor for r in self.oracle_ratios.values())


def adaptive_rate_check(spec):
    """Adaptive run, its oracle ratios and, with enough grid points, the log-corrected rate fit."""
    spec = _as_spec(spec)
    if spec.A < 1:
        raise ValueError(f"the adaptive selector needs A >= 1, got A={spec.A}")
    if min(spec.n_grid) * spec.alpha ** 2 < 2:
        raise ValueError("the adaptive selector needs n*alpha^2 >= 2 on every grid point")
    result = run(replace(spec, selector="adaptive", mechanism="block"))
    fit = fit_rate(result) if len(result.points) >= 4 else None
    return AdaptiveCheck(result, fit)
