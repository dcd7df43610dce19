"""
Least-squares fitting and Newey-West (Bartlett kernel) HAC covariance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .design import DesignMatrix, DesignSpec, build_design, coefficient_names
from .exceptions import CovarianceError, DesignError, SpecificationError
from .panel import GroupedSeries, PanelSeries, aggregate_groups, unit_blocks

__all__ = ["FitResult", "ols_fit", "newey_west_cov", "fit", "bartlett_weights"]


def _as_arrays(X, y=None) -> tuple[np.ndarray, np.ndarray | None]:
    if isinstance(X, DesignMatrix):
        return X.X, X.y if y is None else np.asarray(y, dtype=float)
    return np.asarray(X, dtype=float), None if y is None else np.asarray(y, dtype=float)


def ols_fit(X, y=None) -> tuple[np.ndarray, np.ndarray]:
    """
    Least squares by Householder QR.

    Parameters
    ----------
    X : DesignMatrix or ndarray
        Regressors. A :class:`DesignMatrix` carries its own response.
    y : ndarray, optional
        Response, required when ``X`` is a bare array.

    Returns
    -------
    beta : ndarray
    residuals : ndarray
    """
    Xa, ya = _as_arrays(X, y)
    if ya is None:
        raise ValueError("a response vector is required with a bare regressor array")
    n, k = Xa.shape
    if n < k:
        raise DesignError(f"{n} rows cannot identify {k} coefficients")
    Q, R = np.linalg.qr(Xa, mode="reduced")
    d = np.abs(np.diag(R))
    if d.min() <= 1e-12 * d.max():
        raise DesignError("regressor matrix is rank deficient")
    beta = solve_triangular(R, Q.T @ ya)
    return beta, ya - Xa @ beta


def bartlett_weights(lag: int) -> np.ndarray:
    """Weights ``1 - j / (lag + 1)`` for ``j = 1..lag``."""
    j = np.arange(1, lag + 1)
    return 1.0 - j / (lag + 1.0)


def _block_lengths(blocks: np.ndarray) -> np.ndarray:
    _, counts = np.unique(blocks, return_counts=True)
    return counts


def newey_west_cov(
    X,
    residuals,
    lag: int,
    dof_adjust: bool = True,
    blocks: Sequence | None = None,
) -> np.ndarray:
    r"""
    Newey-West covariance of OLS coefficients.

    .. math::

        V = (X'X)^{-1} S (X'X)^{-1}, \quad
        S = \Sigma_0 + \sum_{j=1}^{L} w_j (\Sigma_j + \Sigma_j')

    with :math:`\Sigma_j = \sum_t e_t e_{t-j} x_t x_{t-j}'` and Bartlett
    weights. Lag pairs are formed only between rows of the same block, so
    stacked independent series never borrow each other's residuals. Rows
    inside a block must be in time order.

    Parameters
    ----------
    X : DesignMatrix or ndarray
    residuals : ndarray
    lag : int
        Number of autocovariance lags. ``0`` gives the HC0 sandwich.
    dof_adjust : bool
        Scale ``S`` by ``n / (n - k)``.
    blocks : sequence, optional
        Block label per row; defaults to the design's blocks, or a single
        block for a bare array.
    """
    if isinstance(X, DesignMatrix) and blocks is None:
        blocks = X.blocks
    Xa, _ = _as_arrays(X)
    e = np.asarray(residuals, dtype=float)
    n, k = Xa.shape
    if e.shape != (n,):
        raise ValueError(f"residuals must have shape ({n},)")
    blocks = np.zeros(n, dtype=int) if blocks is None else np.asarray(blocks)
    if int(lag) != lag or lag < 0:
        raise SpecificationError(f"lag must be a non-negative integer, got {lag}")
    lag = int(lag)
    shortest = int(_block_lengths(blocks).min())
    if lag >= shortest:
        raise SpecificationError(
            f"lag {lag} must be smaller than the per-group series length {shortest}"
        )

    u = Xa * e[:, None]
    S = u.T @ u
    for j, w in zip(range(1, lag + 1), bartlett_weights(lag)):
        same = blocks[j:] == blocks[:-j]
        G = u[j:][same].T @ u[:-j][same]
        S += w * (G + G.T)
    if dof_adjust and n > k:
        # an exactly identified fit has zero residuals, so S is already 0
        S *= n / (n - k)

    _, R = np.linalg.qr(Xa, mode="reduced")
    R_inv = solve_triangular(R, np.eye(k))
    bread = R_inv @ R_inv.T
    V = bread @ S @ bread
    return 0.5 * (V + V.T)


@dataclass(frozen=True, eq=False)
class FitResult:
    """
    Fitted model with HAC covariance.

    ``design`` and ``groups`` are present for fits computed in this
    process and ``None`` for fits restored from JSON.
    """

    beta: np.ndarray
    cov: np.ndarray
    residuals: np.ndarray
    n: int
    k: int
    hac_lag: int
    spec: DesignSpec
    blocks: np.ndarray
    roles: np.ndarray
    times: np.ndarray
    use_t: bool = False
    dof_adjust: bool = True
    design: DesignMatrix | None = field(default=None, repr=False)
    groups: tuple[GroupedSeries, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("beta", "cov", "residuals", "blocks", "roles", "times"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def names(self) -> list[str]:
        return [key for key, _ in coefficient_names(self.spec)]

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))

    @property
    def df_resid(self) -> int:
        return self.n - self.k

    @property
    def kind(self) -> str:
        return self.spec.kind

    def coef(self, key: str) -> float:
        return float(self.beta[self.names.index(key)])

    def block_residuals(self) -> list[np.ndarray]:
        """Residuals split by block, each in time order."""
        return [self.residuals[self.blocks == b] for b in np.unique(self.blocks)]

    def to_dict(self) -> dict:
        names = self.names
        return {
            "coefficients": {k: float(b) for k, b in zip(names, self.beta)},
            "std_errors": {k: float(s) for k, s in zip(names, self.se)},
            "names": names,
            "cov": {"labels": names, "values": self.cov.tolist()},
            "hac_lag": self.hac_lag,
            "n": self.n,
            "k": self.k,
            "use_t": self.use_t,
            "dof_adjust": self.dof_adjust,
            "spec": self.spec.to_dict(),
            "residuals": self.residuals.tolist(),
            "blocks": self.blocks.tolist(),
            "roles": self.roles.tolist(),
            "times": self.times.tolist(),
        }

    def to_json(self, path=None, indent: int = 2) -> str:
        text = json.dumps(self.to_dict(), indent=indent)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        names = d["names"]
        if d["cov"]["labels"] != names:
            raise CovarianceError("covariance labels do not match coefficient names")
        return cls(
            beta=np.array([d["coefficients"][k] for k in names], dtype=float),
            cov=np.array(d["cov"]["values"], dtype=float),
            residuals=np.array(d["residuals"], dtype=float),
            n=int(d["n"]),
            k=int(d["k"]),
            hac_lag=int(d["hac_lag"]),
            spec=DesignSpec.from_dict(d["spec"]),
            blocks=np.array(d["blocks"]),
            roles=np.array(d["roles"]),
            times=np.array(d["times"]),
            use_t=bool(d.get("use_t", False)),
            dof_adjust=bool(d.get("dof_adjust", True)),
        )

    @classmethod
    def from_json(cls, source) -> "FitResult":
        if hasattr(source, "read"):
            return cls.from_dict(json.load(source))
        with open(source, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _check_normal_equations(X: np.ndarray, y: np.ndarray, e: np.ndarray) -> None:
    score = np.abs(X.T @ e).max()
    scale = max(np.abs(X.T @ y).max(), np.abs(X).sum(axis=0).max() * np.abs(y).max(), 1.0)
    if score > 1e-8 * scale:
        raise DesignError(
            f"least-squares residuals fail orthogonality (max |X'e| = {score:.3g})"
        )


def fit_design(
    design: DesignMatrix,
    spec: DesignSpec,
    *,
    use_t: bool = False,
    dof_adjust: bool = True,
    groups: tuple[GroupedSeries, ...] | None = None,
) -> FitResult:
    beta, resid = ols_fit(design)
    _check_normal_equations(design.X, design.y, resid)
    cov = newey_west_cov(design, resid, spec.hac_lag, dof_adjust=dof_adjust)
    n, k = design.shape
    return FitResult(
        beta=beta,
        cov=cov,
        residuals=resid,
        n=n,
        k=k,
        hac_lag=spec.hac_lag,
        spec=spec,
        blocks=design.blocks,
        roles=design.roles,
        times=design.times,
        use_t=use_t,
        dof_adjust=dof_adjust,
        design=design,
        groups=groups,
    )


def fit(
    panel: PanelSeries,
    spec: DesignSpec,
    *,
    use_t: bool = False,
    dof_adjust: bool = True,
) -> FitResult:
    """
    Aggregate, build the design, fit by OLS and attach the HAC covariance.

    With ``spec.pool`` the member units are stacked as separate blocks
    rather than averaged into one series per group.
    """
    if spec.hac_lag >= panel.n_periods:
        raise SpecificationError(
            f"lag {spec.hac_lag} must be smaller than the series length {panel.n_periods}"
        )
    if spec.pool:
        groups = tuple(unit_blocks(panel, spec))
    else:
        groups = tuple(g for g in aggregate_groups(panel, spec) if g is not None)
    design = build_design(groups, spec)
    return fit_design(design, spec, use_t=use_t, dof_adjust=dof_adjust, groups=groups)
