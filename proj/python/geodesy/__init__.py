"""Geodesics of the metrics attached to u'' + h u = 0 and reconstruction of solution bases."""

from ._core import (
    Expression,
    ExplicitGeodesic,
    Family,
    GeodesyError,
    GeometrySpec,
    Mode,
    SolutionBasis,
    Termination,
    curvature,
    family_from_name,
    family_name,
    integrate_explicit,
    integrate_explicit_path,
    invert_to_geodesic,
    kn_geodesic_split,
    max_geodesic_residual,
    metric,
    parse,
    path_independence,
    reconstruct_basis,
    riccati_geodesic,
)

__all__ = [
    "Expression",
    "ExplicitGeodesic",
    "Family",
    "GeodesyError",
    "GeometrySpec",
    "Mode",
    "SolutionBasis",
    "Termination",
    "curvature",
    "family_from_name",
    "family_name",
    "integrate_explicit",
    "integrate_explicit_path",
    "invert_to_geodesic",
    "kn_geodesic_split",
    "max_geodesic_residual",
    "metric",
    "parse",
    "path_independence",
    "reconstruct_basis",
    "riccati_geodesic",
]
