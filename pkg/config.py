import json
import logging
import math

logger = logging.getLogger(__name__)

# --- Default Experiment Parameters ---
DEFAULT_D = 1
DEFAULT_BETA = 1.0
DEFAULT_DELTA = 0.5
DEFAULT_RADIUS = 2.0
DEFAULT_A = 1.0
DEFAULT_ALPHA = 1.0
DEFAULT_N_GRID = [2 ** k for k in range(10, 19)]
DEFAULT_REPLICATIONS = 100
DEFAULT_MECHANISM = "block"   # block | global
DEFAULT_SELECTOR = "fixed"    # fixed | adaptive
DEFAULT_KAPPA1 = 2.0
DEFAULT_KAPPA2 = 2.0
DEFAULT_TRUTH = {"kind": "bump", "J": 2, "nu": "dense"}
DEFAULT_TRUTH_J_MAX = 127
DEFAULT_CHUNK_SIZE = 1024
DEFAULT_WORKERS = 1
DEFAULT_SCHEMA_VERSION = 1

MECHANISM_NAMES = ("block", "global")
SELECTOR_NAMES = ("fixed", "adaptive")
TRUTH_KINDS = ("bump", "uniform", "coefficients")
TAIL_SHARE = 0.05


def get_default_params():
    """Returns a dictionary of the default parameters."""
    return {
        "D": DEFAULT_D,
        "BETA": DEFAULT_BETA,
        "DELTA": DEFAULT_DELTA,
        "RADIUS": DEFAULT_RADIUS,
        "A": DEFAULT_A,
        "ALPHA": DEFAULT_ALPHA,
        "N_GRID": list(DEFAULT_N_GRID),
        "REPLICATIONS": DEFAULT_REPLICATIONS,
        "MECHANISM": DEFAULT_MECHANISM,
        "SELECTOR": DEFAULT_SELECTOR,
        "KAPPA1": DEFAULT_KAPPA1,
        "KAPPA2": DEFAULT_KAPPA2,
        "TRUTH": dict(DEFAULT_TRUTH),
        "TRUTH_J_MAX": DEFAULT_TRUTH_J_MAX,
        "CHUNK_SIZE": DEFAULT_CHUNK_SIZE,
        "WORKERS": DEFAULT_WORKERS,
        "SEED": None,
        "OUTPUT": None,
    }


def load_config(path):
    """Defaults overlaid with a JSON file; keys are matched case-insensitively."""
    params = get_default_params()
    with open(path, "r", encoding="utf-8") as fh:
        overrides = json.load(fh)
    if not isinstance(overrides, dict):
        raise ValueError(f"config file {path} must hold a JSON object")
    for key, value in overrides.items():
        name = key.upper()
        if name not in params:
            raise ValueError(f"unknown config key {key!r}")
        params[name] = value
    logger.info("loaded %d config overrides from %s", len(overrides), path)
    return params


def _as_tuple(value, d, name):
    values = tuple(float(v) for v in value) if isinstance(value, (list, tuple)) else (float(value),) * d
    if len(values) != d:
        raise ValueError(f"{name} has {len(values)} entries, expected d={d}")
    if min(values) <= 0:
        raise ValueError(f"{name} must be positive, got {values}")
    return values


def smoothness_of(params, name):
    """BETA / DELTA as a per-axis tuple (a scalar is repeated d times)."""
    return _as_tuple(params[name], int(params["D"]), name)


def validate_params(params):
    """Raises ValueError naming the first parameter that breaks an experiment invariant."""
    d = params["D"]
    if int(d) != d or d < 1:
        raise ValueError(f"D must be a positive integer, got {d}")
    beta = smoothness_of(params, "BETA")
    delta = smoothness_of(params, "DELTA")
    radius, A, alpha = float(params["RADIUS"]), float(params["A"]), float(params["ALPHA"])
    if not radius ** 2 > d:
        raise ValueError(f"RADIUS={radius} needs R^2 > d={d}")
    if not alpha > 0:
        raise ValueError(f"ALPHA must be positive, got {alpha}")
    if alpha > A:
        raise ValueError(f"ALPHA={alpha} exceeds A={A}")
    if params["MECHANISM"] not in MECHANISM_NAMES:
        raise ValueError(f"unknown MECHANISM {params['MECHANISM']!r}; expected one of {MECHANISM_NAMES}")
    if params["SELECTOR"] not in SELECTOR_NAMES:
        raise ValueError(f"unknown SELECTOR {params['SELECTOR']!r}; expected one of {SELECTOR_NAMES}")
    if params["SELECTOR"] == "adaptive":
        if A < 1:
            raise ValueError(f"the adaptive selector needs A >= 1, got A={A}")
        if params["MECHANISM"] != "block":
            raise ValueError("the adaptive selector runs on the block mechanism only")
        if len(set(delta)) != 1:
            raise ValueError(f"the adaptive selector needs an isotropic DELTA, got {delta}")
    truth = params["TRUTH"]
    kind = truth.get("kind")
    if kind not in TRUTH_KINDS:
        raise ValueError(f"unknown TRUTH kind {kind!r}; expected one of {TRUTH_KINDS}")
    if kind == "bump" and (len(set(beta)) != 1 or int(beta[0]) != beta[0]):
        raise ValueError(f"bump truths need one integer BETA, got {beta}")
    if int(params["REPLICATIONS"]) < 1:
        raise ValueError(f"REPLICATIONS must be >= 1, got {params['REPLICATIONS']}")
    grid = [int(n) for n in params["N_GRID"]]
    if not grid:
        raise ValueError("N_GRID is empty")
    for n in grid:
        if not n * alpha ** 2 > 1:
            raise ValueError(f"n*alpha^2 must exceed 1 on every grid point, got {n * alpha ** 2} at n={n}")
        if params["SELECTOR"] == "adaptive" and n * alpha ** 2 < 2:
            raise ValueError(f"the adaptive selector needs n*alpha^2 >= 2, got {n * alpha ** 2} at n={n}")
    if int(params["CHUNK_SIZE"]) < 1 or int(params["WORKERS"]) < 1:
        raise ValueError("CHUNK_SIZE and WORKERS must be >= 1")
    _check_tail_share(params, beta, delta, max(grid))
    return params


def _check_tail_share(params, beta, delta, n_max):
    """
    The reported tail R J_max^-(beta+delta) must stay within TAIL_SHARE of
    the smallest risk the grid can reach, proxied by the variance majorant
    at the largest n.
    """
    from blocks import allocate_budget, dyadic_partition, sigma_closed_form, theoretical_J
    from entities import SobolevParams
    from estimator import tau

    d = int(params["D"])
    beta_p = SobolevParams(beta, float(params["RADIUS"]))
    delta_p = SobolevParams(delta, 1.0)
    J_max = int(params["TRUTH_J_MAX"])
    J, _ = theoretical_J(n_max, float(params["ALPHA"]), beta_p, delta_p)
    if J_max < J:
        raise ValueError(f"TRUTH_J_MAX={J_max} is below the largest fixed J={J}")
    schedule = allocate_budget(dyadic_partition(J, d), float(params["ALPHA"]), delta_p)
    floor = tau(float(params["A"]), d) * sigma_closed_form(schedule, n_max)
    tail = float(params["RADIUS"]) * J_max ** (-(beta_p.effective + delta_p.effective))
    if tail > TAIL_SHARE * floor:
        needed = math.ceil((float(params["RADIUS"]) / (TAIL_SHARE * floor)) ** (1.0 / (beta_p.effective + delta_p.effective)))
        raise ValueError(
            f"TRUTH_J_MAX={J_max} leaves a tail {tail:.3g} above {TAIL_SHARE:.0%} of the risk floor {floor:.3g}; "
            f"use at least {needed}"
        )
