"""Lattices in R^n: exterior algebra, HN filtrations, and diagonal orbit searches."""

__version__ = "0.1.0"

from .errors import BudgetExhausted, HNOrbitError, IntegrityError, PreconditionError, ResourceError
from .exterior import KVector, MeasuredSubspace, support_by_projection, support_of_subspace, wedge
from .lattice import (
    Lattice,
    NormSpec,
    Sublattice,
    covolume,
    enumerate_short_vectors,
    minimal_covolume_sublattice,
    saturate,
    successive_minima,
)
from .filtration import (
    MeasuredFlag,
    flag_norm_bound_check,
    flag_support_permutation,
    grayson_profile,
    hn_filtration,
    is_stable,
    minkowski_flag,
)
from .orbit import (
    DiagCoord,
    SearchOptions,
    SearchResult,
    active_sublattices,
    apply_diag,
    find_stable,
    find_well_rounded,
    stability_margin,
    wr_margin,
)
from .convex import Polyhedron, cover_condition_check, deg, escape_functional, invdim

__all__ = [
    "__version__",
    "BudgetExhausted",
    "DiagCoord",
    "HNOrbitError",
    "IntegrityError",
    "KVector",
    "Lattice",
    "MeasuredFlag",
    "MeasuredSubspace",
    "NormSpec",
    "Polyhedron",
    "PreconditionError",
    "ResourceError",
    "SearchOptions",
    "SearchResult",
    "Sublattice",
    "active_sublattices",
    "apply_diag",
    "cover_condition_check",
    "covolume",
    "deg",
    "enumerate_short_vectors",
    "escape_functional",
    "find_stable",
    "find_well_rounded",
    "flag_norm_bound_check",
    "flag_support_permutation",
    "grayson_profile",
    "hn_filtration",
    "invdim",
    "is_stable",
    "minimal_covolume_sublattice",
    "minkowski_flag",
    "saturate",
    "stability_margin",
    "successive_minima",
    "support_by_projection",
    "support_of_subspace",
    "wedge",
    "wr_margin",
]
