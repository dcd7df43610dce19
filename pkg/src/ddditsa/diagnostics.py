"""
Residual autocorrelation diagnostics used to choose the HAC lag.

All statistics respect block boundaries: residuals of different groups are
never treated as neighbours in time.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .estimator import FitResult, ols_fit
from .exceptions import SpecificationError

__all__ = [
    "AutocorrReport",
    "LMTest",
    "acf",
    "pacf_durbin_levinson",
    "residual_acf_pacf",
    "autocorr_lm_test",
    "suggest_lag",
    "autocorr_report",
]


def acf(x: np.ndarray, max_lag: int) -> np.ndarray:
    """
    Sample autocorrelations ``r_0..r_max_lag`` with the biased (1/n) denominator.

    A series with zero variance returns all zeros.
    """
    x = np.asarray(x, dtype=float)
    d = x - x.mean()
    denom = d @ d
    if denom == 0:
        return np.zeros(max_lag + 1)
    return np.array([d[j:] @ d[: d.size - j] for j in range(max_lag + 1)]) / denom


def pacf_durbin_levinson(r: np.ndarray) -> np.ndarray:
    """Partial autocorrelations for lags ``1..len(r)-1`` from ``r_0..r_L``."""
    L = len(r) - 1
    out = np.zeros(L)
    if L == 0 or r[0] == 0:
        return out
    phi = np.zeros(L + 1)
    v = 1.0
    for k in range(1, L + 1):
        if v <= 0:
            break
        a = (r[k] - phi[1:k] @ r[k - 1 : 0 : -1]) / v
        new = phi.copy()
        new[k] = a
        new[1:k] = phi[1:k] - a * phi[k - 1 : 0 : -1]
        phi = new
        v *= 1.0 - a * a
        out[k - 1] = a
    return out


@dataclass(frozen=True)
class LMTest:
    order: int
    statistic: float
    df: int
    p: float


@dataclass(frozen=True)
class AutocorrReport:
    """
    ACF/PACF per residual block plus Breusch-Godfrey tests.

    ``acf[b][j-1]`` is the lag-``j`` autocorrelation of block ``b``;
    ``mean_acf`` averages blocks.
    """

    lags: np.ndarray
    acf: np.ndarray = field(repr=False)
    pacf: np.ndarray = field(repr=False)
    mean_acf: np.ndarray = field(default=None)
    mean_pacf: np.ndarray = field(default=None)
    lm_tests: tuple[LMTest, ...] = ()
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "lags": self.lags.tolist(),
            "acf": self.acf.tolist(),
            "pacf": self.pacf.tolist(),
            "mean_acf": self.mean_acf.tolist(),
            "mean_pacf": self.mean_pacf.tolist(),
            "lm_tests": [
                {"order": t.order, "statistic": t.statistic, "df": t.df, "p": t.p}
                for t in self.lm_tests
            ],
            "degenerate": self.degenerate,
        }


def _outcome_scale(fit: FitResult) -> float:
    if fit.design is not None:
        return max(1.0, float(np.abs(fit.design.y).max()))
    return 1.0


def residual_acf_pacf(fit: FitResult, max_lag: int) -> AutocorrReport:
    """Per-block sample ACF and Durbin-Levinson PACF of the fit's residuals."""
    blocks = fit.block_residuals()
    shortest = min(b.size for b in blocks)
    if max_lag < 1 or max_lag >= shortest:
        raise SpecificationError(
            f"max_lag must be between 1 and {shortest - 1} (per-group length {shortest})"
        )
    acfs, pacfs = [], []
    degenerate = False
    # round-off residuals of an exact fit count as zero
    floor = 1e-10 * _outcome_scale(fit)
    for e in blocks:
        if np.abs(e - e.mean()).max() <= floor:
            degenerate = True
            e = np.zeros_like(e)
        r = acf(e, max_lag)
        acfs.append(r[1:])
        pacfs.append(pacf_durbin_levinson(r))
    if degenerate:
        warnings.warn(
            "residual variance is zero in at least one block; its autocorrelations are reported as 0",
            RuntimeWarning,
            stacklevel=2,
        )
    acfs, pacfs = np.array(acfs), np.array(pacfs)
    return AutocorrReport(
        lags=np.arange(1, max_lag + 1),
        acf=acfs,
        pacf=pacfs,
        mean_acf=acfs.mean(axis=0),
        mean_pacf=pacfs.mean(axis=0),
        degenerate=degenerate,
    )


def _lagged_within_blocks(e: np.ndarray, blocks: np.ndarray, q: int) -> np.ndarray:
    out = np.zeros((e.size, q))
    for j in range(1, q + 1):
        same = np.zeros(e.size, dtype=bool)
        same[j:] = blocks[j:] == blocks[:-j]
        col = np.zeros(e.size)
        col[j:] = e[:-j]
        out[:, j - 1] = np.where(same, col, 0.0)
    return out


def autocorr_lm_test(fit: FitResult, max_order: int) -> tuple[LMTest, ...]:
    """
    Breusch-Godfrey LM tests of orders ``1..max_order``.

    The residuals are regressed on the original regressors and ``q`` of
    their own lags (zero before each block start); ``n R^2`` is compared
    with chi-square on ``q`` degrees of freedom.
    """
    if fit.design is None:
        raise SpecificationError("LM test needs the design matrix; refit instead of loading JSON")
    X = fit.design.X
    e = np.asarray(fit.residuals)
    n, k = X.shape
    shortest = min(b.size for b in fit.block_residuals())
    if max_order < 1:
        raise SpecificationError("max_order must be at least 1")
    if max_order >= shortest or n - k - max_order < 1:
        raise SpecificationError(
            f"max_order {max_order} leaves too few rows for the auxiliary regression"
        )
    sst = float(((e - e.mean()) ** 2).sum())
    if sst <= n * (1e-10 * _outcome_scale(fit)) ** 2:
        warnings.warn(
            "residuals are identically zero; LM statistics set to 0",
            RuntimeWarning,
            stacklevel=2,
        )
        return tuple(LMTest(q, 0.0, q, 1.0) for q in range(1, max_order + 1))
    lagged = _lagged_within_blocks(e, np.asarray(fit.blocks), max_order)
    tests = []
    for q in range(1, max_order + 1):
        Z = np.hstack([X, lagged[:, :q]])
        _, u = ols_fit(Z, e)
        r2 = max(0.0, 1.0 - float(u @ u) / sst)
        stat = n * r2
        tests.append(LMTest(q, stat, q, float(stats.chi2.sf(stat, q))))
    return tuple(tests)


def suggest_lag(tests, alpha: float = 0.05) -> int:
    """Smallest ``q`` such that no test of order greater than ``q`` rejects."""
    orders = sorted(tests, key=lambda t: t.order)
    q = 0
    for t in orders:
        if t.p < alpha:
            q = t.order
    return q


def autocorr_report(fit: FitResult, max_lag: int) -> AutocorrReport:
    """ACF, PACF and LM tests up to ``max_lag`` in one report."""
    base = residual_acf_pacf(fit, max_lag)
    n, k = fit.n, fit.k
    order = min(max_lag, n - k - 1)
    tests = autocorr_lm_test(fit, order) if fit.design is not None else ()
    return AutocorrReport(
        lags=base.lags,
        acf=base.acf,
        pacf=base.pacf,
        mean_acf=base.mean_acf,
        mean_pacf=base.mean_pacf,
        lm_tests=tests,
        degenerate=base.degenerate,
    )
