"""
Locate and load the Proposition 99 cigarette-sales panel.

The loader accepts the common distributions of this dataset: the
Abadie-Diamond-Hainmueller ``smoking`` table (numeric or named ``state``
column, ``cigsale``), and the semicolon-separated ``State;Year;PacksPerCapita``
layout. Files are looked up in this order: an explicit path, the directory
in ``$DDDITSA_DATA_DIR``, then ``ddditsa/data`` inside the package.
"""

from __future__ import annotations

import io
import os
from pathlib import Path

import pandas as pd

from .panel import ColumnSchema, PanelSeries, load_csv

__all__ = ["PROP99_STATES", "PROP99_SCHEMA", "find_prop99", "load_prop99", "DATA_ENV"]

DATA_ENV = "DDDITSA_DATA_DIR"
FILENAMES = ("prop99.csv", "smoking.csv", "cigsales.csv", "california_prop99.csv")

# state numbering used by the Stata example (California = 3, Colorado = 4, ...)
PROP99_STATES = {
    1: "Alabama", 2: "Arkansas", 3: "California", 4: "Colorado", 5: "Connecticut",
    6: "Delaware", 7: "Georgia", 8: "Idaho", 9: "Illinois", 10: "Indiana",
    11: "Iowa", 12: "Kansas", 13: "Kentucky", 14: "Louisiana", 15: "Maine",
    16: "Minnesota", 17: "Mississippi", 18: "Missouri", 19: "Montana", 20: "Nebraska",
    21: "Nevada", 22: "New Hampshire", 23: "New Mexico", 24: "North Carolina",
    25: "North Dakota", 26: "Ohio", 27: "Oklahoma", 28: "Pennsylvania",
    29: "Rhode Island", 30: "South Carolina", 31: "South Dakota", 32: "Tennessee",
    33: "Texas", 34: "Utah", 35: "Vermont", 36: "Virginia", 37: "West Virginia",
    38: "Wisconsin", 39: "Wyoming",
}
_IDS = {name.lower(): i for i, name in PROP99_STATES.items()}

PROP99_SCHEMA = ColumnSchema(unit="state", time="year", outcome="cigsale", label="state_name")

_RENAME = {
    "State": "state",
    "Year": "year",
    "PacksPerCapita": "cigsale",
    "statename": "state_name",
    "state name": "state_name",
}


def find_prop99(path=None) -> Path:
    """Resolve the dataset location or raise ``FileNotFoundError`` with guidance."""
    candidates = []
    if path is not None:
        candidates.append(Path(path))
    env = os.environ.get(DATA_ENV)
    if env:
        candidates += [Path(env) / f for f in FILENAMES]
    pkg = Path(__file__).parent / "data"
    candidates += [pkg / f for f in FILENAMES]
    for c in candidates:
        if c.is_file():
            return c
    raise FileNotFoundError(
        "Proposition 99 dataset not found. Place the 39-state, 1970-2000 cigarette "
        f"sales file as one of {', '.join(FILENAMES)} in ${DATA_ENV} or "
        f"{pkg}, or pass its path explicitly. Searched: "
        + ", ".join(str(c) for c in candidates)
    )


def _normalize(df: pd.DataFrame) -> pd.DataFrame:
    df = df.rename(columns={c: _RENAME.get(c.strip(), c.strip()) for c in df.columns})
    if "state" not in df.columns or "year" not in df.columns or "cigsale" not in df.columns:
        raise ValueError(f"unrecognised Proposition 99 layout: columns {list(df.columns)}")
    numeric = pd.to_numeric(df["state"], errors="coerce")
    if numeric.isna().any():
        names = df["state"].astype(str).str.strip()
        unknown = sorted(set(n for n in names if n.lower() not in _IDS))
        if unknown:
            raise ValueError(f"unknown state names: {unknown}")
        df = df.assign(state_name=names, state=[_IDS[n.lower()] for n in names])
    elif "state_name" not in df.columns:
        df = df.assign(state_name=[PROP99_STATES.get(int(s), "") for s in numeric])
    return df.drop(columns=[c for c in ("treated",) if c in df.columns])


def load_prop99(path=None) -> PanelSeries:
    """Load the Proposition 99 panel keyed by the numeric state ids above."""
    where = find_prop99(path)
    text = where.read_text(encoding="utf-8")
    sep = ";" if text.split("\n", 1)[0].count(";") > text.split("\n", 1)[0].count(",") else ","
    df = _normalize(pd.read_csv(io.StringIO(text), sep=sep))
    buf = io.StringIO()
    df.to_csv(buf, index=False)
    return load_csv(io.BytesIO(buf.getvalue().encode("utf-8")), PROP99_SCHEMA)
