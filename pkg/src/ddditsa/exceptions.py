"""Exception hierarchy shared by every module in the package."""

from __future__ import annotations


class DDDITSAError(Exception):
    """Base class for all errors raised by ddditsa."""


class PanelError(DDDITSAError):
    """Problem with the input panel (parse, structure, spacing)."""


class StructuralError(PanelError):
    """Missing or duplicated (unit, time) cell."""

    def __init__(self, message: str, unit=None, time=None):
        super().__init__(message)
        self.unit = unit
        self.time = time


class ParseError(PanelError):
    """Non-numeric or missing outcome value."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class PanelValidationError(PanelError):
    """Unequal spacing, too few periods, non-finite outcomes."""


class SpecificationError(DDDITSAError):
    """Invalid analysis definition (overlapping groups, bad intervention time...)."""


class UnknownUnitError(SpecificationError, LookupError):
    """A unit id named in the design does not exist in the panel."""


class DesignError(DDDITSAError):
    """The regressor matrix is rank deficient."""

    def __init__(self, message: str, columns: tuple[str, ...] = ()):
        super().__init__(message)
        self.columns = columns


class CovarianceError(DDDITSAError):
    """Covariance matrix is unusable for the requested contrast."""


class SimulationError(DDDITSAError):
    """Invalid simulation spec or too many failed replications."""
