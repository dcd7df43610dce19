"""Single-, two- and three-group interrupted time series analysis."""

from .design import DesignMatrix, DesignSpec, build_design, coefficient_names
from .diagnostics import autocorr_lm_test, autocorr_report, residual_acf_pacf, suggest_lag
from .estimator import FitResult, fit, newey_west_cov, ols_fit
from .exceptions import (
    CovarianceError,
    DDDITSAError,
    DesignError,
    ParseError,
    PanelValidationError,
    SimulationError,
    SpecificationError,
    StructuralError,
    UnknownUnitError,
)
from .inference import (
    EstimandResult,
    LinearCombination,
    balance_report,
    estimand_catalog,
    lincom,
    posttrend,
)
from .panel import ColumnSchema, GroupedSeries, PanelSeries, aggregate_groups, load_csv, write_csv
from .simulate import PowerResult, SimulationSpec, power_analysis, simulate_panel

__version__ = "0.1.0"
