"""Centroaffine invariants of parametrized hypersurfaces from order-4 Taylor jets."""

from ._kernels import BACKEND
from .analysis import (
    EjiriBasis,
    Tolerances,
    classify_point,
    classify_surface,
    ejiri_basis,
    identities_at,
)
from .catalog import catalog_entries, get as get_surface
from .dsl import load_surface, parse_surface
from .errors import (
    CentroaffineError,
    DomainError,
    NotCentroaffineError,
    NotConvexError,
    OptimizerError,
    ParseError,
    SingularJetError,
    SingularSystemError,
    UnknownSurfaceError,
)
from .geometry import CentroaffineData, centroaffine_data
from .jets import JetSpace, TaylorJet

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CentroaffineData",
    "CentroaffineError",
    "DomainError",
    "EjiriBasis",
    "JetSpace",
    "NotCentroaffineError",
    "NotConvexError",
    "OptimizerError",
    "ParseError",
    "SingularJetError",
    "SingularSystemError",
    "TaylorJet",
    "Tolerances",
    "UnknownSurfaceError",
    "catalog_entries",
    "centroaffine_data",
    "classify_point",
    "classify_surface",
    "ejiri_basis",
    "get_surface",
    "identities_at",
    "load_surface",
    "parse_surface",
]
