"""
Wald inference on linear combinations of fitted coefficients.

The estimand catalog covers every by-group trend and level (pre, post and
change), the between-group differences in those changes, the two
triple-difference contrasts and the six baseline balance contrasts.
"""

from __future__ import annotations

import ast
import math
import re
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import stats

from .design import COLUMNS, stata_names
from .estimator import FitResult
from .exceptions import CovarianceError, SpecificationError

__all__ = [
    "LinearCombination",
    "EstimandResult",
    "BalanceReport",
    "lincom",
    "parse_expression",
    "estimand_catalog",
    "catalog_combinations",
    "balance_report",
    "posttrend",
    "critical_value",
    "FAMILIES",
]

FAMILIES = ("trend", "level", "balance", "did", "ddd")


@dataclass(frozen=True, eq=False)
class LinearCombination:
    weights: np.ndarray
    label: str = ""
    family: str = "did"
    key: str = ""

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1:
            raise SpecificationError("weights must be a vector")
        if not np.any(w != 0):
            raise SpecificationError("weight vector is all zero")
        if self.family not in FAMILIES:
            raise SpecificationError(f"unknown estimand family {self.family!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def expression(self) -> str:
        """Readable form such as ``b7 - b11``."""
        parts = []
        for j, w in enumerate(self.weights):
            if w == 0:
                continue
            sign = "-" if w < 0 else "+"
            mag = abs(w)
            term = f"b{j}" if mag == 1 else f"{mag:g}*b{j}"
            parts.append((sign, term))
        text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, term in parts[1:]:
            text += f" {sign} {term}"
        return text


@dataclass(frozen=True)
class EstimandResult:
    estimate: float
    se: float
    z: float
    p: float
    ci_low: float
    ci_high: float
    level: float
    combination: LinearCombination = field(repr=False)
    distribution: str = "normal"

    @property
    def label(self) -> str:
        return self.combination.label

    def to_dict(self) -> dict:
        return {
            "key": self.combination.key,
            "label": self.combination.label,
            "family": self.combination.family,
            "expression": self.combination.expression(),
            "estimate": self.estimate,
            "se": self.se,
            "z": self.z,
            "p": self.p,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "level": self.level,
            "distribution": self.distribution,
        }


def critical_value(level: float, df: int | None = None) -> float:
    """Two-sided critical value: normal quantile, or Student t when ``df`` is given."""
    q = 0.5 + level / 2.0
    return float(stats.norm.ppf(q) if df is None else stats.t.ppf(q, df))


def _coerce_weights(fit: FitResult, c) -> LinearCombination:
    if isinstance(c, LinearCombination):
        comb = c
    elif isinstance(c, str):
        comb = LinearCombination(parse_expression(c, fit), label=c, key=c)
    elif isinstance(c, Mapping):
        w = np.zeros(fit.k)
        for name, val in c.items():
            w[_resolve_name(name, fit)] += val
        comb = LinearCombination(w)
    else:
        comb = LinearCombination(np.asarray(c, dtype=float))
    if comb.weights.size != fit.k:
        raise SpecificationError(
            f"weight vector has length {comb.weights.size}, fit has {fit.k} coefficients"
        )
    return comb


def lincom(fit: FitResult, c, level: float | None = None) -> EstimandResult:
    """
    Estimate, standard error and Wald test of ``c' beta``.

    ``c`` may be a :class:`LinearCombination`, a weight vector, a mapping
    of coefficient names to weights, or an expression such as
    ``"b7 - b11"`` or ``"_b[_z1_x_t1989] - _b[_z2_x_t1989]"``.
    """
    comb = _coerce_weights(fit, c)
    level = fit.spec.confidence_level if level is None else float(level)
    if not 0.0 < level < 1.0:
        raise SpecificationError("confidence level must lie in (0, 1)")
    w = comb.weights
    estimate = float(w @ fit.beta)
    var = float(w @ (fit.cov @ w))
    tol = 1e-10 * float(np.abs(w) @ np.sqrt(np.abs(np.diag(fit.cov)))) ** 2
    if var < -tol:
        raise CovarianceError(f"negative variance {var:.3g} for {comb.expression()}")
    se = math.sqrt(max(var, 0.0))
    if se > 0:
        z = estimate / se
    else:
        z = 0.0 if estimate == 0 else math.copysign(math.inf, estimate)
    df = fit.df_resid if fit.use_t else None
    dist = stats.norm if df is None else stats.t(df)
    p = float(min(1.0, 2.0 * dist.sf(abs(z))))
    half = critical_value(level, df) * se
    return EstimandResult(
        estimate=estimate,
        se=se,
        z=float(z),
        p=p,
        ci_low=estimate - half,
        ci_high=estimate + half,
        level=level,
        combination=comb,
        distribution="normal" if df is None else f"t({df})",
    )


_B_BRACKET = re.compile(r"_b\s*\[\s*([^\]\s]+)\s*\]")


def _resolve_name(name: str, fit: FitResult) -> int:
    name = name.strip()
    m = re.fullmatch(r"b(\d+)", name)
    if m and int(m.group(1)) < fit.k:
        return int(m.group(1))
    cols = COLUMNS[: fit.k]
    if name in cols:
        return cols.index(name)
    aliases = stata_names(fit.spec)
    if name in aliases:
        return aliases.index(name)
    valid = ", ".join([f"b0..b{fit.k - 1}", *cols, *aliases])
    raise SpecificationError(f"unknown coefficient {name!r}; valid names: {valid}")


def parse_expression(expr: str, fit: FitResult) -> np.ndarray:
    """
    Turn a linear expression over coefficient names into a weight vector.

    Accepts ``b0``..``b11``, design column names (``Z1XT``), Stata-style
    names (``_z1_x_t1989``) and ``_b[...]`` wrappers. Constants may scale
    terms; a free constant term is rejected.
    """
    text = _B_BRACKET.sub(lambda m: m.group(1), expr)
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise SpecificationError(f"cannot parse expression {expr!r}: {exc.msg}") from None

    def ev(node) -> tuple[np.ndarray, float]:
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return np.zeros(fit.k), float(node.value)
        if isinstance(node, ast.Name):
            w = np.zeros(fit.k)
            w[_resolve_name(node.id, fit)] = 1.0
            return w, 0.0
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            w, c = ev(node.operand)
            return (-w, -c) if isinstance(node.op, ast.USub) else (w, c)
        if isinstance(node, ast.BinOp):
            lw, lc = ev(node.left)
            rw, rc = ev(node.right)
            if isinstance(node.op, ast.Add):
                return lw + rw, lc + rc
            if isinstance(node.op, ast.Sub):
                return lw - rw, lc - rc
            if isinstance(node.op, ast.Mult):
                if not lw.any():
                    return lc * rw, lc * rc
                if not rw.any():
                    return rc * lw, rc * lc
                raise SpecificationError("expression is not linear in the coefficients")
            if isinstance(node.op, ast.Div):
                if rw.any() or rc == 0:
                    raise SpecificationError("can only divide by a non-zero constant")
                return lw / rc, lc / rc
        raise SpecificationError(f"unsupported syntax in expression {expr!r}")

    w, const = ev(tree)
    if const != 0:
        raise SpecificationError("expression has a constant term; only c'b is supported")
    if not w.any():
        raise SpecificationError(f"expression {expr!r} has all-zero weights")
    return w


# (key, label, family, {coef index: weight}, minimum kind)
_CATALOG = (
    ("trend_pre_control1", "Control 1 pre-treatment trend", "trend", {1: 1}, "MG"),
    ("trend_pre_treatment", "Treatment pre-treatment trend", "trend", {1: 1, 5: 1}, "MG"),
    ("trend_pre_control2", "Control 2 pre-treatment trend", "trend", {1: 1, 9: 1}, "DDD"),
    ("trend_post_control1", "Control 1 post-treatment trend", "trend", {1: 1, 3: 1}, "MG"),
    ("trend_post_treatment", "Treatment post-treatment trend", "trend", {1: 1, 3: 1, 5: 1, 7: 1}, "MG"),
    ("trend_post_control2", "Control 2 post-treatment trend", "trend", {1: 1, 3: 1, 9: 1, 11: 1}, "DDD"),
    ("trend_change_control1", "Control 1 pre-post trend change", "trend", {3: 1}, "MG"),
    ("trend_change_treatment", "Treatment pre-post trend change", "trend", {3: 1, 7: 1}, "MG"),
    ("trend_change_control2", "Control 2 pre-post trend change", "trend", {3: 1, 11: 1}, "DDD"),
    ("trend_did_treatment_vs_control1", "Treatment vs Control 1, trend DiD", "did", {7: 1}, "MG"),
    ("trend_did_control2_vs_control1", "Control 2 vs Control 1, trend DiD", "did", {11: 1}, "DDD"),
    ("trend_did_treatment_vs_control2", "Treatment vs Control 2, trend DiD", "did", {7: 1, 11: -1}, "DDD"),
    ("level_pre_control1", "Control 1 pre-treatment level", "level", {0: 1}, "MG"),
    ("level_pre_treatment", "Treatment pre-treatment level", "level", {0: 1, 4: 1}, "MG"),
    ("level_pre_control2", "Control 2 pre-treatment level", "level", {0: 1, 8: 1}, "DDD"),
    ("level_post_control1", "Control 1 post-treatment level", "level", {0: 1, 2: 1}, "MG"),
    ("level_post_treatment", "Treatment post-treatment level", "level", {0: 1, 2: 1, 4: 1, 6: 1}, "MG"),
    ("level_post_control2", "Control 2 post-treatment level", "level", {0: 1, 2: 1, 8: 1, 10: 1}, "DDD"),
    ("level_change_control1", "Control 1 pre-post level change", "level", {2: 1}, "MG"),
    ("level_change_treatment", "Treatment pre-post level change", "level", {2: 1, 6: 1}, "MG"),
    ("level_change_control2", "Control 2 pre-post level change", "level", {2: 1, 10: 1}, "DDD"),
    ("level_did_treatment_vs_control1", "Treatment vs Control 1, level DiD", "did", {6: 1}, "MG"),
    ("level_did_control2_vs_control1", "Control 2 vs Control 1, level DiD", "did", {10: 1}, "DDD"),
    ("level_did_treatment_vs_control2", "Treatment vs Control 2, level DiD", "did", {6: 1, 10: -1}, "DDD"),
    ("ddd_trend", "Triple difference, trend (b7 - b11)", "ddd", {7: 1, 11: -1}, "DDD"),
    ("ddd_level", "Triple difference, level (b6 - b10)", "ddd", {6: 1, 10: -1}, "DDD"),
)

_SG_CATALOG = (
    ("trend_pre_treatment", "Treatment pre-treatment trend", "trend", {1: 1}),
    ("trend_post_treatment", "Treatment post-treatment trend", "trend", {1: 1, 3: 1}),
    ("trend_change_treatment", "Treatment pre-post trend change", "trend", {3: 1}),
    ("level_pre_treatment", "Treatment pre-treatment level", "level", {0: 1}),
    ("level_post_treatment", "Treatment post-treatment level", "level", {0: 1, 2: 1}),
    ("level_change_treatment", "Treatment pre-post level change", "level", {2: 1}),
)

_BALANCE = (
    ("balance_level_treatment_vs_control1", "Baseline level, treatment vs control 1 (b4)", {4: 1}),
    ("balance_trend_treatment_vs_control1", "Baseline trend, treatment vs control 1 (b5)", {5: 1}),
    ("balance_level_control2_vs_control1", "Baseline level, control 2 vs control 1 (b8)", {8: 1}),
    ("balance_trend_control2_vs_control1", "Baseline trend, control 2 vs control 1 (b9)", {9: 1}),
    ("balance_level_treatment_vs_control2", "Baseline level, treatment vs control 2 (b4 - b8)", {4: 1, 8: -1}),
    ("balance_trend_treatment_vs_control2", "Baseline trend, treatment vs control 2 (b5 - b9)", {5: 1, 9: -1}),
)

_KIND_RANK = {"SG": 0, "MG": 1, "DDD": 2}


def _combo(k: int, terms: Mapping[int, float], label: str, family: str, key: str):
    w = np.zeros(k)
    for j, v in terms.items():
        w[j] = v
    return LinearCombination(w, label=label, family=family, key=key)


def catalog_combinations(kind: str) -> dict[str, LinearCombination]:
    """The catalog's weight vectors for a design of the given kind."""
    k = {"SG": 4, "MG": 8, "DDD": 12}[kind]
    if kind == "SG":
        return {key: _combo(k, t, lab, fam, key) for key, lab, fam, t in _SG_CATALOG}
    out = {}
    for key, lab, fam, terms, need in _CATALOG:
        if _KIND_RANK[kind] >= _KIND_RANK[need]:
            out[key] = _combo(k, terms, lab, fam, key)
    return out


def estimand_catalog(fit: FitResult, level: float | None = None) -> dict[str, EstimandResult]:
    """Evaluate every catalog estimand available for the fit's design."""
    return {
        key: lincom(fit, comb, level)
        for key, comb in catalog_combinations(fit.kind).items()
    }


def posttrend(fit: FitResult, level: float | None = None) -> dict[str, EstimandResult]:
    """Post-treatment trend of each group."""
    cat = catalog_combinations(fit.kind)
    return {k: lincom(fit, c, level) for k, c in cat.items() if k.startswith("trend_post_")}


@dataclass(frozen=True)
class BalanceReport:
    results: dict[str, EstimandResult]
    passed: dict[str, bool]
    alpha: float

    @property
    def all_pass(self) -> bool:
        return all(self.passed.values())

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "all_pass": self.all_pass,
            "contrasts": [
                dict(r.to_dict(), passed=self.passed[k]) for k, r in self.results.items()
            ],
        }


def balance_report(
    fit: FitResult, alpha: float = 0.05, level: float | None = None
) -> BalanceReport:
    """
    Baseline level and trend contrasts between every pair of groups.

    A contrast passes when its p-value exceeds ``alpha``.
    """
    if fit.kind != "DDD":
        raise SpecificationError("balance_report needs a three-group fit")
    results, passed = {}, {}
    for key, label, terms in _BALANCE:
        r = lincom(fit, _combo(fit.k, terms, label, "balance", key), level)
        results[key] = r
        passed[key] = bool(r.p > alpha)
    return BalanceReport(results, passed, alpha)
