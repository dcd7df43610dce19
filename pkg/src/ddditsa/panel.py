"""
Long-format panel ingestion and group aggregation.

A :class:`PanelSeries` stores a balanced, gapless panel as a dense
``(unit x time)`` outcome matrix. Pass-through columns (prices, income and
so on) ride along in ``extras`` but never enter the regression.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterator, Mapping, NamedTuple

import numpy as np
import pandas as pd

from .exceptions import (
    ParseError,
    PanelValidationError,
    SpecificationError,
    StructuralError,
    UnknownUnitError,
)

if TYPE_CHECKING:
    from .design import DesignSpec

__all__ = [
    "ColumnSchema",
    "Observation",
    "PanelSeries",
    "GroupedSeries",
    "ROLES",
    "load_csv",
    "write_csv",
    "aggregate_groups",
    "unit_blocks",
]

ROLES = ("control1", "treatment", "control2")


class Observation(NamedTuple):
    unit: str
    time: float
    outcome: float
    extras: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class ColumnSchema:
    """Names of the identifying columns in a long-format CSV."""

    unit: str = "unit"
    time: str = "time"
    outcome: str = "outcome"
    label: str | None = None

    @classmethod
    def coerce(cls, schema: "ColumnSchema | Mapping[str, str] | None") -> "ColumnSchema":
        if schema is None:
            return cls()
        if isinstance(schema, ColumnSchema):
            return schema
        return cls(**dict(schema))


def _normalize_unit(u) -> str:
    if isinstance(u, (float, np.floating)) and float(u).is_integer():
        u = int(u)
    return str(u)


@dataclass(frozen=True, eq=False)
class PanelSeries:
    """
    Balanced panel of one outcome over a common, equally spaced time index.

    Parameters
    ----------
    units : sequence of str
        Unit identifiers, one per row of ``outcomes``.
    times : array_like
        Strictly increasing, equally spaced time values.
    outcomes : array_like
        ``(len(units), len(times))`` matrix of finite outcome values.
    extras : mapping of str to array_like, optional
        Pass-through columns with the same shape as ``outcomes``. Missing
        values are allowed here.
    unit_labels : mapping, optional
        Human-readable names keyed by unit id.
    """

    units: tuple[str, ...]
    times: np.ndarray
    outcomes: np.ndarray
    extras: Mapping[str, np.ndarray] = field(default_factory=dict)
    unit_labels: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        units = tuple(_normalize_unit(u) for u in self.units)
        if len(set(units)) != len(units):
            raise StructuralError("duplicate unit identifiers in panel")
        times = np.asarray(self.times)
        if times.dtype.kind not in "iuf":
            raise PanelValidationError("time values must be numeric")
        if times.dtype.kind == "f" and np.all(np.mod(times, 1) == 0):
            times = times.astype(np.int64)
        outcomes = np.array(self.outcomes, dtype=float)
        if outcomes.ndim == 1 and len(units) == 1:
            outcomes = outcomes[None, :]
        if outcomes.shape != (len(units), times.size):
            raise StructuralError(
                f"outcome matrix has shape {outcomes.shape}, expected "
                f"({len(units)}, {times.size})"
            )
        if times.size < 3:
            raise PanelValidationError(
                f"panel needs at least 3 time points, got {times.size}"
            )
        steps = np.diff(times)
        if np.any(steps <= 0):
            raise PanelValidationError("time values must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=0, atol=1e-9 * max(1.0, abs(steps[0]))):
            j = int(np.argmax(~np.isclose(steps, steps[0])))
            raise PanelValidationError(
                f"unequal spacing: gap of {steps[j]} between {times[j]} and "
                f"{times[j + 1]} (expected {steps[0]})"
            )
        if not np.all(np.isfinite(outcomes)):
            i, t = np.argwhere(~np.isfinite(outcomes))[0]
            raise StructuralError(
                f"missing outcome for unit {units[i]} at time {times[t]}",
                unit=units[i],
                time=times[t],
            )
        extras = {}
        for name, values in dict(self.extras).items():
            arr = np.array(values, dtype=float)
            if arr.ndim == 1 and len(units) == 1:
                arr = arr[None, :]
            if arr.shape != outcomes.shape:
                raise StructuralError(f"extra column {name!r} has shape {arr.shape}")
            arr.setflags(write=False)
            extras[name] = arr
        times.setflags(write=False)
        outcomes.setflags(write=False)
        labels = {_normalize_unit(k): str(v) for k, v in dict(self.unit_labels).items()}
        object.__setattr__(self, "units", units)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "extras", extras)
        object.__setattr__(self, "unit_labels", labels)

    @property
    def time_index(self) -> np.ndarray:
        return self.times

    @property
    def n_periods(self) -> int:
        return int(self.times.size)

    def series(self, unit) -> np.ndarray:
        """Outcome series of a single unit."""
        return self.outcomes[self._row(unit)]

    def _row(self, unit) -> int:
        key = _normalize_unit(unit)
        try:
            return self.units.index(key)
        except ValueError:
            raise UnknownUnitError(f"unknown unit id {key!r}") from None

    def observations(self) -> Iterator[Observation]:
        names = list(self.extras)
        for i, u in enumerate(self.units):
            for j, t in enumerate(self.times):
                ex = tuple((n, float(self.extras[n][i, j])) for n in names)
                yield Observation(u, t.item(), float(self.outcomes[i, j]), ex)

    def to_frame(self, schema: ColumnSchema | Mapping[str, str] | None = None) -> pd.DataFrame:
        """Long-format frame with one row per (unit, time)."""
        schema = ColumnSchema.coerce(schema)
        n_u, n_t = self.outcomes.shape
        data = {
            schema.unit: np.repeat(np.array(self.units, dtype=object), n_t),
        }
        if schema.label is not None:
            data[schema.label] = [self.unit_labels.get(u, "") for u in data[schema.unit]]
        data[schema.time] = np.tile(self.times, n_u)
        data[schema.outcome] = self.outcomes.ravel()
        for name, arr in self.extras.items():
            data[name] = arr.ravel()
        return pd.DataFrame(data)

    def equals(self, other: "PanelSeries") -> bool:
        """Exact equality of units, times, outcomes and extras (NaN-aware)."""
        if self.units != other.units or set(self.extras) != set(other.extras):
            return False
        if not np.array_equal(self.times, other.times):
            return False
        if not np.array_equal(self.outcomes, other.outcomes):
            return False
        return all(
            np.array_equal(self.extras[k], other.extras[k], equal_nan=True)
            for k in self.extras
        )


@dataclass(frozen=True, eq=False)
class GroupedSeries:
    """One analysis series (a group's outcome over the common time index)."""

    role: str
    times: np.ndarray
    series: np.ndarray
    member_units: tuple[str, ...]
    aggregation: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise SpecificationError(f"unknown group role {self.role!r}")
        if len(self.series) != len(self.times):
            raise SpecificationError("series length must equal the time index length")


def load_csv(source, schema: ColumnSchema | Mapping[str, str] | None = None) -> PanelSeries:
    """
    Read a long-format CSV into a validated :class:`PanelSeries`.

    ``source`` may be a path or a binary/text stream. Row order is
    irrelevant. Numeric columns other than unit, time and outcome become
    ``extras``; other text columns are ignored unless named as the label.
    """
    schema = ColumnSchema.coerce(schema)
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    if isinstance(source, (str, os.PathLike)) and not os.path.exists(source):
        raise FileNotFoundError(f"data file not found: {source}")
    df = pd.read_csv(
        source, dtype={schema.unit: str}, encoding="utf-8", float_precision="round_trip"
    )
    df.columns = [str(c).strip() for c in df.columns]
    for col in (schema.unit, schema.time, schema.outcome):
        if col not in df.columns:
            raise ParseError(f"column {col!r} not found; available: {list(df.columns)}")

    # header is line 1 of the file
    line_no = np.arange(len(df)) + 2
    outcome = pd.to_numeric(df[schema.outcome], errors="coerce")
    bad = outcome.isna().to_numpy() | ~np.isfinite(outcome.to_numpy(dtype=float, na_value=np.nan))
    if bad.any():
        r = int(np.argmax(bad))
        raise ParseError(
            f"non-numeric outcome {df[schema.outcome].iloc[r]!r} in row {line_no[r]}",
            row=int(line_no[r]),
        )
    time = pd.to_numeric(df[schema.time], errors="coerce")
    if time.isna().any():
        r = int(np.argmax(time.isna().to_numpy()))
        raise ParseError(
            f"non-numeric time {df[schema.time].iloc[r]!r} in row {line_no[r]}",
            row=int(line_no[r]),
        )
    if df[schema.unit].isna().any():
        r = int(np.argmax(df[schema.unit].isna().to_numpy()))
        raise ParseError(f"missing unit id in row {line_no[r]}", row=int(line_no[r]))
    units_col = df[schema.unit].str.strip()
    tidy = pd.DataFrame({"unit": units_col, "time": time, "outcome": outcome})

    dup = tidy.duplicated(["unit", "time"], keep="first")
    if dup.any():
        r = int(np.argmax(dup.to_numpy()))
        u, t = tidy.iloc[r]["unit"], tidy.iloc[r]["time"]
        raise StructuralError(
            f"duplicate observation for unit {u} at time {_fmt_time(t)} (row {line_no[r]})",
            unit=u,
            time=t,
        )

    units = list(dict.fromkeys(sorted(tidy["unit"].unique(), key=_unit_sort_key)))
    times = np.sort(tidy["time"].unique())
    wide = tidy.pivot(index="unit", columns="time", values="outcome").reindex(
        index=units, columns=times
    )
    missing = np.argwhere(wide.isna().to_numpy())
    if missing.size:
        i, j = missing[0]
        raise StructuralError(
            f"missing observation for unit {units[i]} at time {_fmt_time(times[j])}",
            unit=units[i],
            time=times[j],
        )

    skip = {schema.unit, schema.time, schema.outcome, schema.label}
    extras = {}
    for col in df.columns:
        if col in skip or not pd.api.types.is_numeric_dtype(df[col]):
            continue
        vals = pd.DataFrame({"unit": units_col, "time": time, "v": df[col].astype(float)})
        extras[col] = (
            vals.pivot(index="unit", columns="time", values="v")
            .reindex(index=units, columns=times)
            .to_numpy()
        )
    labels = {}
    if schema.label is not None and schema.label in df.columns:
        labels = dict(zip(units_col, df[schema.label].astype(str)))
    return PanelSeries(tuple(units), times, wide.to_numpy(), extras, labels)


def write_csv(
    panel: PanelSeries, dest, schema: ColumnSchema | Mapping[str, str] | None = None
) -> None:
    """Write ``panel`` in long format; floats are written at full precision."""
    panel.to_frame(schema).to_csv(dest, index=False)


def _fmt_time(t) -> str:
    t = float(t)
    return str(int(t)) if t.is_integer() else repr(t)


def _unit_sort_key(u: str):
    try:
        return (0, float(u), u)
    except ValueError:
        return (1, 0.0, u)


def _role_members(spec: "DesignSpec") -> dict[str, tuple[str, ...]]:
    members = {
        "treatment": tuple(_normalize_unit(u) for u in spec.treat_units),
        "control1": tuple(_normalize_unit(u) for u in spec.control1_units),
        "control2": tuple(_normalize_unit(u) for u in spec.control2_units),
    }
    seen: dict[str, str] = {}
    for role, units in members.items():
        if len(set(units)) != len(units):
            raise SpecificationError(f"unit listed twice in {role}")
        for u in units:
            if u in seen:
                raise SpecificationError(
                    f"unit {u} is assigned to both {seen[u]} and {role}"
                )
            seen[u] = role
    return members


def aggregate_groups(
    panel: PanelSeries, spec: "DesignSpec"
) -> tuple[GroupedSeries | None, GroupedSeries | None, GroupedSeries | None]:
    """
    Collapse each role's member units into one series by per-period mean.

    Returns ``(treatment, control1, control2)``; roles without members
    (single- or two-group designs) come back as ``None``. Member order does
    not affect the result.
    """
    members = _role_members(spec)
    out = {}
    for role, units in members.items():
        if not units:
            out[role] = None
            continue
        rows = [panel._row(u) for u in units]
        if len(rows) == 1:
            series = panel.outcomes[rows[0]].copy()
            how = "identity"
        else:
            # sort rows so floating-point summation order is independent of listing order
            series = panel.outcomes[sorted(rows)].mean(axis=0)
            how = "mean"
        out[role] = GroupedSeries(role, panel.times, series, tuple(sorted(units)), how)
    return out["treatment"], out["control1"], out["control2"]


def unit_blocks(panel: PanelSeries, spec: "DesignSpec") -> list[GroupedSeries]:
    """One un-aggregated series per member unit, for the pooled design."""
    members = _role_members(spec)
    blocks = []
    for role in ROLES:
        for u in sorted(members[role], key=_unit_sort_key):
            blocks.append(
                GroupedSeries(role, panel.times, panel.series(u).copy(), (u,), "none")
            )
    return blocks
