"""
Segmented-regression design for single-, two- and three-group ITSA.

Column order follows the canonical 12-term model::

    const, T, X, XT, Z1, Z1T, Z1X, Z1XT, Z2, Z2T, Z2X, Z2XT

``T`` counts periods from 0 at the first observed time, ``X`` switches on
at the intervention period and ``XT = X * (T - T_I + origin)``. Control
group 1 is the omitted category.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import DesignError, SpecificationError
from .panel import ROLES, GroupedSeries, _normalize_unit

__all__ = [
    "DesignSpec",
    "DesignMatrix",
    "COLUMNS",
    "build_design",
    "coefficient_names",
    "stata_names",
    "intervention_index",
]

COLUMNS = ("const", "T", "X", "XT", "Z1", "Z1T", "Z1X", "Z1XT", "Z2", "Z2T", "Z2X", "Z2XT")

_MEANINGS = (
    "control 1 intercept (level at T = 0)",
    "control 1 pre-intervention trend",
    "control 1 level change at the intervention",
    "control 1 post-vs-pre trend change",
    "treatment vs control 1, pre-intervention level difference",
    "treatment vs control 1, pre-intervention trend difference",
    "treatment vs control 1, level change difference at the intervention",
    "treatment vs control 1, post-vs-pre trend difference",
    "control 2 vs control 1, pre-intervention level difference",
    "control 2 vs control 1, pre-intervention trend difference",
    "control 2 vs control 1, level change difference at the intervention",
    "control 2 vs control 1, post-vs-pre trend difference",
)

_SG_MEANINGS = (
    "intercept (level at T = 0)",
    "pre-intervention trend",
    "level change at the intervention",
    "post-vs-pre trend change",
)

_ROLE_Z = {"control1": (0, 0), "treatment": (1, 0), "control2": (0, 1)}

_RANK_TOL = 1e-8


def _as_units(values) -> tuple[str, ...]:
    if values is None:
        return ()
    if isinstance(values, (str, int, np.integer)):
        values = (values,)
    return tuple(_normalize_unit(v) for v in values)


@dataclass(frozen=True)
class DesignSpec:
    """
    Analysis definition: who is treated, who the controls are, and when.

    An empty ``control2_units`` gives the two-group (MG) model; empty
    control sets on both sides give the single-group model. ``pool=True``
    stacks member units as separate blocks instead of averaging them.
    """

    treat_unit: object
    control1_units: Sequence = ()
    control2_units: Sequence = ()
    intervention_time: float = 0
    hac_lag: int = 0
    interaction_origin: int = 0
    confidence_level: float = 0.95
    pool: bool = False
    treat_units: tuple[str, ...] = field(init=False, repr=False)

    def __post_init__(self):
        treat = _as_units(self.treat_unit)
        if not treat:
            raise SpecificationError("a treated unit is required")
        c1 = _as_units(self.control1_units)
        c2 = _as_units(self.control2_units)
        if c2 and not c1:
            raise SpecificationError("control2 requires a non-empty control1 group")
        if int(self.hac_lag) != self.hac_lag or self.hac_lag < 0:
            raise SpecificationError(f"hac_lag must be a non-negative integer, got {self.hac_lag}")
        if not 0.0 < self.confidence_level < 1.0:
            raise SpecificationError("confidence_level must lie in (0, 1)")
        object.__setattr__(self, "treat_unit", treat[0] if len(treat) == 1 else treat)
        object.__setattr__(self, "treat_units", treat)
        object.__setattr__(self, "control1_units", c1)
        object.__setattr__(self, "control2_units", c2)
        object.__setattr__(self, "hac_lag", int(self.hac_lag))
        object.__setattr__(self, "interaction_origin", int(self.interaction_origin))

    @property
    def kind(self) -> str:
        if self.control2_units:
            return "DDD"
        if self.control1_units:
            return "MG"
        return "SG"

    @property
    def n_coef(self) -> int:
        return {"SG": 4, "MG": 8, "DDD": 12}[self.kind]

    @property
    def roles(self) -> tuple[str, ...]:
        return {"SG": ("treatment",), "MG": ("control1", "treatment"), "DDD": ROLES}[self.kind]

    def replace(self, **changes) -> "DesignSpec":
        params = {
            "treat_unit": self.treat_units,
            "control1_units": self.control1_units,
            "control2_units": self.control2_units,
            "intervention_time": self.intervention_time,
            "hac_lag": self.hac_lag,
            "interaction_origin": self.interaction_origin,
            "confidence_level": self.confidence_level,
            "pool": self.pool,
        }
        params.update(changes)
        return DesignSpec(**params)

    def to_dict(self) -> dict:
        t = self.intervention_time
        return {
            "treat_units": list(self.treat_units),
            "control1_units": list(self.control1_units),
            "control2_units": list(self.control2_units),
            "intervention_time": t.item() if hasattr(t, "item") else t,
            "hac_lag": self.hac_lag,
            "interaction_origin": self.interaction_origin,
            "confidence_level": self.confidence_level,
            "pool": self.pool,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DesignSpec":
        d = dict(d)
        d["treat_unit"] = d.pop("treat_units")
        return cls(**d)


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Stacked regressors and response, one row per (block, time) cell."""

    X: np.ndarray
    y: np.ndarray
    columns: tuple[str, ...]
    roles: np.ndarray
    blocks: np.ndarray
    times: np.ndarray
    time_index: np.ndarray
    intervention_index: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.X.shape

    def to_csv(self, dest=None) -> str | None:
        """Column-labelled CSV of the response and regressors."""
        import pandas as pd

        df = pd.DataFrame(self.X, columns=self.columns)
        df.insert(0, "y", self.y)
        df.insert(0, "time", self.times)
        df.insert(0, "block", self.blocks)
        df.insert(0, "role", self.roles)
        if dest is None:
            buf = io.StringIO()
            df.to_csv(buf, index=False)
            return buf.getvalue()
        df.to_csv(dest, index=False)
        return None


def _fmt(t) -> str:
    t = float(t)
    return str(int(t)) if t.is_integer() else f"{t:g}"


def intervention_index(times: np.ndarray, intervention_time) -> int:
    """Position of the first post-intervention period, with range checks."""
    times = np.asarray(times)
    lo, hi = times[2], times[-2]
    hits = np.flatnonzero(np.isclose(times, float(intervention_time), rtol=0, atol=1e-9))
    if hits.size == 0:
        raise SpecificationError(
            f"intervention time {_fmt(intervention_time)} is not an observed period; "
            f"valid range is {lo} to {hi} (at least 2 pre and 2 post periods)"
        )
    idx = int(hits[0])
    if idx < 2 or times.size - idx < 2:
        raise SpecificationError(
            f"intervention time {_fmt(intervention_time)} leaves fewer than 2 pre or 2 post "
            f"periods; valid range is {lo} to {hi}"
        )
    return idx


def _regressors(kind: str, role: str, T: np.ndarray, idx: int, origin: int) -> np.ndarray:
    x = (T >= idx).astype(float)
    xt = x * (T - idx + origin)
    base = [np.ones_like(x), T.astype(float), x, xt]
    z1, z2 = _ROLE_Z[role]
    cols = list(base)
    if kind in ("MG", "DDD"):
        cols += [z1 * c for c in base]
    if kind == "DDD":
        cols += [z2 * c for c in base]
    return np.column_stack(cols)


def build_design(groups: Sequence[GroupedSeries | None], spec: DesignSpec) -> DesignMatrix:
    """
    Stack group series into the regression design.

    ``groups`` holds one :class:`GroupedSeries` per block; ``None`` entries
    are dropped. Blocks are ordered control 1, treatment, control 2,
    keeping the given order within a role.
    """
    groups = [g for g in groups if g is not None]
    kind = spec.kind
    present = {g.role for g in groups}
    needed = set(spec.roles)
    if present != needed:
        raise SpecificationError(
            f"{kind} design needs groups {sorted(needed)}, got {sorted(present)}"
        )
    times = groups[0].times
    for g in groups[1:]:
        if not np.array_equal(g.times, times):
            raise SpecificationError("all group series must share one time index")
    idx = intervention_index(times, spec.intervention_time)
    T = np.arange(times.size)

    ordered = sorted(enumerate(groups), key=lambda p: (ROLES.index(p[1].role), p[0]))
    X_parts, y_parts, roles, blocks = [], [], [], []
    for b, (_, g) in enumerate(ordered):
        X_parts.append(_regressors(kind, g.role, T, idx, spec.interaction_origin))
        y_parts.append(np.asarray(g.series, dtype=float))
        roles += [g.role] * times.size
        blocks += [b] * times.size
    X = np.vstack(X_parts)
    cols = COLUMNS[: spec.n_coef]
    _check_rank(X, cols)
    return DesignMatrix(
        X=X,
        y=np.concatenate(y_parts),
        columns=cols,
        roles=np.array(roles),
        blocks=np.array(blocks),
        times=np.tile(times, len(ordered)),
        time_index=times,
        intervention_index=idx,
    )


def _check_rank(X: np.ndarray, columns: Sequence[str]) -> None:
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0):
        dead = tuple(c for c, n in zip(columns, norms) if n == 0)
        raise DesignError(f"design has all-zero columns: {', '.join(dead)}", dead)
    _, s, vt = np.linalg.svd(X / norms, full_matrices=False)
    if s[-1] <= _RANK_TOL * s[0]:
        v = vt[-1]
        dep = tuple(c for c, w in zip(columns, v) if abs(w) > 1e-6)
        raise DesignError(
            f"design is rank deficient; linearly dependent columns: {', '.join(dep)}", dep
        )


def coefficient_names(spec: DesignSpec) -> list[tuple[str, str]]:
    """``[(key, meaning), ...]`` for each coefficient, keys ``b0``, ``b1``..."""
    if spec.kind == "SG":
        return [(f"b{j}", m) for j, m in enumerate(_SG_MEANINGS)]
    return [(f"b{j}", _MEANINGS[j]) for j in range(spec.n_coef)]


def stata_names(spec: DesignSpec) -> list[str]:
    """Variable names used by the Stata ``itsa`` command for each column."""
    t = spec.intervention_time
    t = int(t) if float(t).is_integer() else t
    base = ["_cons", "_t", f"_x{t}", f"_x_t{t}"]
    names = list(base)
    for z in ("_z1", "_z2")[: {"SG": 0, "MG": 1, "DDD": 2}[spec.kind]]:
        names += [z, f"{z}_t", f"{z}_x{t}", f"{z}_x_t{t}"]
    return names
