"""Synthetic data generators and the replication harness.

Three settings share one exposure/covariate/mediator layer and differ
in the outcome model:

- ``linear``: outcome linear in the mediators,
- ``interaction``: outcome driven purely by products of disjoint
  consecutive mediator pairs (no main effects),
- ``cosine``: outcome additive in elementwise-cosined mediators.

Coefficient templates are fixed apart from the two signal scales ``a``
(exposure side) and ``b`` (outcome side), so the set of true mediators
is known and empirical FDR/power can be measured exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from ._util import keyed_rng
from .pipeline import GkmsConfig, GkmsResult, gkms
from .statistics import Dataset

SETTING_LINEAR = "linear"
SETTING_INTERACTION = "interaction"
SETTING_COSINE = "cosine"
_SETTINGS = (SETTING_LINEAR, SETTING_INTERACTION, SETTING_COSINE)

# substream key for data generation, disjoint from the pipeline's keys
_KEY_DATA = 9

REPLICATION_COLUMNS = [
    "setting", "n", "p", "rho", "a", "b", "method",
    "fdp", "power_fraction", "n_selected", "seed",
]
AGGREGATE_COLUMNS = [
    "setting", "n", "p", "rho", "a", "b", "method",
    "fdr", "power", "replications",
]


@dataclass
class SimulationConfig:
    n: int
    p: int
    rho: float
    a: float
    b: float
    setting: str = SETTING_LINEAR
    replications: int = 1
    seed: int = 0
    gamma: float = 1.0
    sigma_noise: float = 0.4

    def __post_init__(self):
        if self.setting not in _SETTINGS:
            raise ValueError(f"unknown setting {self.setting!r}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must be in [0, 1), got {self.rho}")
        if self.p < 40:
            raise ValueError("coefficient templates need p >= 40")
        if self.setting == SETTING_INTERACTION and self.p % 2 != 0:
            raise ValueError("interaction setting needs an even p")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")


@dataclass
class GroundTruth:
    """True mediator set implied by the coefficient templates."""

    true_mediators: np.ndarray  # 0-based indices
    alpha: np.ndarray
    beta_or_delta: np.ndarray


@dataclass
class ReplicationRecord:
    replication: int
    seed: int
    selected: np.ndarray
    fdp: float
    power: float
    n_selected: int
    error: str | None = None


@dataclass
class EmpiricalMetrics:
    fdr: float
    power: float
    per_replication: list = field(default_factory=list)


def _linear_alpha(p: int, a: float) -> np.ndarray:
    return np.concatenate([np.full(9, a), np.full(21, 0.7 * a), np.zeros(p - 30)])


def _true_set(alpha: np.ndarray, pathb_active: np.ndarray) -> np.ndarray:
    return np.flatnonzero((alpha != 0) & pathb_active)


def _draw_exposure_covariate(n: int, rng: np.random.Generator):
    z = rng.standard_normal((n, 2))
    x = z[:, 0]
    v = 0.5 * z[:, 0] + np.sqrt(0.75) * z[:, 1]
    return x, v


def _compound_symmetry_noise(n: int, p: int, rho: float, rng: np.random.Generator):
    z = rng.standard_normal((n, p))
    shared = rng.standard_normal((n, 1))
    return np.sqrt(1.0 - rho) * z + np.sqrt(rho) * shared


def _mediators(x, v, alpha, eta1, rho, rng):
    eps1 = _compound_symmetry_noise(x.shape[0], alpha.shape[0], rho, rng)
    return np.outer(x, alpha) + np.outer(v, eta1) + eps1


def gen_linear(config: SimulationConfig, rng: np.random.Generator) -> tuple[Dataset, GroundTruth]:
    """Linear outcome model; true mediators are templates 10..30 (1-based)."""
    p = config.p
    alpha = _linear_alpha(p, config.a)
    beta = np.concatenate([
        np.zeros(9), np.full(21, 0.7 * config.b), np.full(10, config.b), np.zeros(p - 40),
    ])
    x, v = _draw_exposure_covariate(config.n, rng)
    m = _mediators(x, v, alpha, np.ones(p), config.rho, rng)
    y = (
        config.gamma * x + m @ beta + v
        + config.sigma_noise * rng.standard_normal(config.n)
    )
    truth = GroundTruth(
        true_mediators=_true_set(alpha, beta != 0), alpha=alpha, beta_or_delta=beta
    )
    return Dataset(x=x, v=v[:, None], m=m, y=y), truth


def gen_interaction(config: SimulationConfig, rng: np.random.Generator) -> tuple[Dataset, GroundTruth]:
    """Outcome driven only by products of disjoint consecutive mediator pairs.

    Interaction column k is M_{2k} * M_{2k+1} (0-based pairing starting at
    the first mediator); its coefficient template is zero for the first 4
    pairs, the signal value for the next 15, and zero afterwards.
    """
    p = config.p
    alpha = np.concatenate([
        np.full(9, 0.5 * config.a), np.full(21, config.a), np.zeros(p - 30),
    ])
    delta = np.concatenate([np.zeros(4), np.full(15, config.b), np.zeros(p // 2 - 19)])
    x, v = _draw_exposure_covariate(config.n, rng)
    m = _mediators(x, v, alpha, np.zeros(p), config.rho, rng)
    z_int = m[:, 0::2] * m[:, 1::2]
    y = (
        config.gamma * x + z_int @ delta
        + config.sigma_noise * rng.standard_normal(config.n)
    )
    pathb_active = np.repeat(delta != 0, 2)
    truth = GroundTruth(
        true_mediators=_true_set(alpha, pathb_active), alpha=alpha, beta_or_delta=delta
    )
    return Dataset(x=x, v=v[:, None], m=m, y=y), truth


def gen_cosine(config: SimulationConfig, rng: np.random.Generator) -> tuple[Dataset, GroundTruth]:
    """Outcome additive in cos(M_j); true mediators are templates 10..30 (1-based)."""
    p = config.p
    alpha = _linear_alpha(p, config.a)
    beta = np.concatenate([
        np.zeros(9), np.full(21, config.b), np.full(9, 0.7 * config.b), np.zeros(p - 39),
    ])
    x, v = _draw_exposure_covariate(config.n, rng)
    m = _mediators(x, v, alpha, np.zeros(p), config.rho, rng)
    y = (
        config.gamma * x + np.cos(m) @ beta
        + config.sigma_noise * rng.standard_normal(config.n)
    )
    truth = GroundTruth(
        true_mediators=_true_set(alpha, beta != 0), alpha=alpha, beta_or_delta=beta
    )
    return Dataset(x=x, v=v[:, None], m=m, y=y), truth


_GENERATORS = {
    SETTING_LINEAR: gen_linear,
    SETTING_INTERACTION: gen_interaction,
    SETTING_COSINE: gen_cosine,
}


def generate(config: SimulationConfig, rng: np.random.Generator) -> tuple[Dataset, GroundTruth]:
    return _GENERATORS[config.setting](config, rng)


def score_selection(selected: np.ndarray, truth: GroundTruth, p: int) -> tuple[float, float]:
    """(false discovery proportion, true-positive fraction) of one selection."""
    true = set(truth.true_mediators.tolist())
    sel = set(np.asarray(selected).tolist())
    n_false = len(sel - true)
    fdp = n_false / max(len(sel), 1)
    power = len(sel & true) / len(true) if true else 0.0
    return fdp, power


def _one_replication(sim: SimulationConfig, gkms_config: GkmsConfig, i: int) -> ReplicationRecord:
    rep_seed = sim.seed + i
    try:
        data, truth = generate(sim, keyed_rng(rep_seed, _KEY_DATA))
        result: GkmsResult = gkms(data, replace(gkms_config, seed=rep_seed))
        fdp, power = score_selection(result.report.selected, truth, sim.p)
        return ReplicationRecord(
            replication=i, seed=rep_seed, selected=result.report.selected,
            fdp=fdp, power=power, n_selected=int(result.report.selected.size),
        )
    except Exception as exc:  # recorded, not fatal: one bad draw must not kill a grid
        return ReplicationRecord(
            replication=i, seed=rep_seed, selected=np.array([], dtype=int),
            fdp=float("nan"), power=float("nan"), n_selected=0, error=str(exc),
        )


def run_replications(
    sim: SimulationConfig, gkms_config: GkmsConfig, n_jobs: int = 1
) -> EmpiricalMetrics:
    """Repeat generate-and-select ``sim.replications`` times and aggregate.

    Replication i runs with seed ``sim.seed + i`` for both the generator
    and the pipeline, so results do not depend on worker count or order.
    """
    records = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_one_replication)(sim, gkms_config, i)
        for i in range(sim.replications)
    )
    ok = [r for r in records if r.error is None]
    fdr = float(np.mean([r.fdp for r in ok])) if ok else float("nan")
    power = float(np.mean([r.power for r in ok])) if ok else float("nan")
    return EmpiricalMetrics(fdr=fdr, power=power, per_replication=list(records))


def replication_rows(sim: SimulationConfig, gkms_config: GkmsConfig, metrics: EmpiricalMetrics) -> list[dict]:
    rows = []
    for rec in metrics.per_replication:
        rows.append({
            "setting": sim.setting, "n": sim.n, "p": sim.p, "rho": sim.rho,
            "a": sim.a, "b": sim.b, "method": gkms_config.pathb_method,
            "fdp": rec.fdp, "power_fraction": rec.power,
            "n_selected": rec.n_selected, "seed": rec.seed,
        })
    return rows


def aggregate_row(sim: SimulationConfig, gkms_config: GkmsConfig, metrics: EmpiricalMetrics) -> dict:
    return {
        "setting": sim.setting, "n": sim.n, "p": sim.p, "rho": sim.rho,
        "a": sim.a, "b": sim.b, "method": gkms_config.pathb_method,
        "fdr": metrics.fdr, "power": metrics.power,
        "replications": sim.replications,
    }


def write_csv(path, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
