"""
Synthetic three-group panels with AR(1) errors, and Monte Carlo power.

Every (replication, group, unit) cell draws from its own
``SeedSequence`` child keyed on those indices, so results do not depend on
how replications are scheduled across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .design import COLUMNS, DesignSpec, _regressors
from .estimator import fit
from .exceptions import DDDITSAError, SimulationError, SpecificationError
from .inference import catalog_combinations, lincom
from .panel import ROLES, PanelSeries

__all__ = [
    "SimulationSpec",
    "PowerResult",
    "simulate_panel",
    "simulation_design_spec",
    "power_analysis",
    "ar1_errors",
]

MAX_FAILURE_RATE = 0.01


@dataclass(frozen=True)
class SimulationSpec:
    """
    Data-generating process for one simulated three-group panel.

    ``intervention_index`` is the zero-based position of the first
    post-intervention period (equivalently, the number of pre periods).
    ``units_per_group`` is ordered (treatment, control 1, control 2).
    """

    beta_true: tuple[float, ...] = (0.0,) * 12
    rho: float = 0.0
    sigma: float = 1.0
    n_periods: int = 31
    intervention_index: int = 19
    units_per_group: tuple[int, int, int] = (1, 1, 1)
    unit_noise_sd: float = 0.0
    replications: int = 1000
    seed: int = 0
    hac_lag: int = 1
    interaction_origin: int = 0

    def __post_init__(self):
        beta = tuple(float(b) for b in self.beta_true)
        if len(beta) != 12:
            raise SimulationError(f"beta_true must have 12 entries, got {len(beta)}")
        if not abs(self.rho) < 1:
            raise SimulationError(f"AR(1) coefficient must satisfy |rho| < 1, got {self.rho}")
        if self.sigma < 0 or self.unit_noise_sd < 0:
            raise SimulationError("sigma and unit_noise_sd must be non-negative")
        if self.n_periods < 4:
            raise SimulationError("n_periods must be at least 4")
        if not 2 <= self.intervention_index <= self.n_periods - 2:
            raise SimulationError(
                f"intervention_index must be in [2, {self.n_periods - 2}] "
                "to leave 2 pre and 2 post periods"
            )
        units = tuple(int(u) for u in self.units_per_group)
        if len(units) != 3 or min(units) < 1:
            raise SimulationError("units_per_group must be three positive integers")
        if self.replications < 1:
            raise SimulationError("replications must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise SimulationError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "beta_true", beta)
        object.__setattr__(self, "units_per_group", units)

    def replace(self, **changes) -> "SimulationSpec":
        d = asdict(self)
        d.update(changes)
        return SimulationSpec(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["beta_true"] = list(self.beta_true)
        d["units_per_group"] = list(self.units_per_group)
        return d


_ROLE_ORDER = ("treatment", "control1", "control2")


def _unit_ids(spec: SimulationSpec) -> dict[str, list[str]]:
    prefix = {"treatment": "T", "control1": "C1", "control2": "C2"}
    return {
        role: [f"{prefix[role]}_{i}" for i in range(m)]
        for role, m in zip(_ROLE_ORDER, spec.units_per_group)
    }


def simulation_design_spec(spec: SimulationSpec) -> DesignSpec:
    """The :class:`DesignSpec` that analyses panels from ``spec``."""
    ids = _unit_ids(spec)
    return DesignSpec(
        treat_unit=tuple(ids["treatment"]),
        control1_units=ids["control1"],
        control2_units=ids["control2"],
        intervention_time=spec.intervention_index + 1,
        hac_lag=spec.hac_lag,
        interaction_origin=spec.interaction_origin,
    )


def ar1_errors(rng: np.random.Generator, n: int, rho: float, sigma: float) -> np.ndarray:
    """AR(1) path started from its stationary distribution N(0, sigma^2 / (1 - rho^2))."""
    u = rng.standard_normal(n) * sigma
    eps = np.empty(n)
    eps[0] = u[0] / math.sqrt(1.0 - rho * rho)
    for t in range(1, n):
        eps[t] = rho * eps[t - 1] + u[t]
    return eps


def _unit_rng(seed: int, replication: int, group: int, unit: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replication), group, unit))
    return np.random.Generator(np.random.PCG64(ss))


def group_means(spec: SimulationSpec) -> dict[str, np.ndarray]:
    """Noise-free mean path of each group under ``beta_true``."""
    T = np.arange(spec.n_periods)
    beta = np.asarray(spec.beta_true)
    return {
        role: _regressors("DDD", role, T, spec.intervention_index, spec.interaction_origin) @ beta
        for role in ROLES
    }


def simulate_panel(spec: SimulationSpec, replication_index: int = 0) -> PanelSeries:
    """
    One synthetic panel; times are ``1..n_periods``.

    Each unit's outcome is its group's mean path plus a unit offset
    (sd ``unit_noise_sd``) plus an AR(1) error with innovation sd
    ``sigma``.
    """
    if replication_index < 0:
        raise SimulationError("replication_index must be non-negative")
    means = group_means(spec)
    ids = _unit_ids(spec)
    units, rows = [], []
    for g, role in enumerate(_ROLE_ORDER):
        for i, uid in enumerate(ids[role]):
            rng = _unit_rng(spec.seed, replication_index, g, i)
            offset = rng.standard_normal() * spec.unit_noise_sd
            eps = ar1_errors(rng, spec.n_periods, spec.rho, spec.sigma)
            units.append(uid)
            rows.append(means[role] + offset + eps)
    return PanelSeries(tuple(units), np.arange(1, spec.n_periods + 1), np.vstack(rows))


@dataclass(frozen=True)
class PowerResult:
    estimand_label: str
    rejection_rate: float
    mean_estimate: float
    mean_se: float
    replications: int
    completed: int
    failures: int
    alpha: float
    spec_echo: SimulationSpec = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "estimand_label": self.estimand_label,
            "rejection_rate": self.rejection_rate,
            "mean_estimate": self.mean_estimate,
            "mean_se": self.mean_se,
            "replications": self.replications,
            "completed": self.completed,
            "failures": self.failures,
            "alpha": self.alpha,
            "spec": self.spec_echo.to_dict(),
        }

    def summary(self) -> str:
        return (
            f"{self.estimand_label}: rejection rate {self.rejection_rate:.4f} at alpha "
            f"{self.alpha:g} over {self.completed}/{self.replications} replications "
            f"(mean estimate {self.mean_estimate:.4f}, mean SE {self.mean_se:.4f})"
        )


def _resolve_target(target: str):
    combos = catalog_combinations("DDD")
    if target in combos:
        return combos[target]
    if target in COLUMNS:
        j = COLUMNS.index(target)
    elif target.startswith("b") and target[1:].isdigit() and int(target[1:]) < 12:
        j = int(target[1:])
    else:
        raise SpecificationError(
            f"unknown target {target!r}; use a catalog key (e.g. ddd_trend) or b0..b11"
        )
    w = np.zeros(12)
    w[j] = 1.0
    from .inference import LinearCombination

    return LinearCombination(w, label=f"b{j}", family="did", key=f"b{j}")


def _one_replication(spec: SimulationSpec, dspec: DesignSpec, comb, r: int):
    try:
        res = lincom(fit(simulate_panel(spec, r), dspec), comb)
    except (DDDITSAError, np.linalg.LinAlgError, FloatingPointError):
        return None
    return res.estimate, res.se, res.p


def power_analysis(
    spec: SimulationSpec,
    target: str = "ddd_trend",
    alpha: float = 0.05,
    workers: int = 1,
) -> PowerResult:
    """
    Fraction of replications whose Wald test of ``target`` has ``p < alpha``.

    Failed replications (for example rank-deficient designs) are excluded
    from the denominator; more than 1% failures raises
    :class:`SimulationError`. ``workers > 1`` runs replications in a
    thread pool with identical results.
    """
    if not 0 < alpha < 1:
        raise SpecificationError("alpha must lie in (0, 1)")
    comb = _resolve_target(target)
    dspec = simulation_design_spec(spec)
    reps = range(spec.replications)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(lambda r: _one_replication(spec, dspec, comb, r), reps))
    else:
        out = [_one_replication(spec, dspec, comb, r) for r in reps]
    done = [o for o in out if o is not None]
    failures = len(out) - len(done)
    if failures > MAX_FAILURE_RATE * len(out):
        raise SimulationError(
            f"{failures} of {len(out)} replications failed (limit {MAX_FAILURE_RATE:.0%})"
        )
    if not done:
        raise SimulationError("no replication completed")
    rejections = sum(1 for _, _, p in done if p < alpha)
    return PowerResult(
        estimand_label=comb.label or target,
        rejection_rate=rejections / len(done),
        mean_estimate=math.fsum(e for e, _, _ in done) / len(done),
        mean_se=math.fsum(s for _, s, _ in done) / len(done),
        replications=len(out),
        completed=len(done),
        failures=failures,
        alpha=alpha,
        spec_echo=spec,
    )
