"""Localized steady Euler flows around a helix.

The pipeline is: Puiseux series of the profile pair at the singular point
(:mod:`.puiseux`), numerical continuation (:mod:`.profile`), the
cross-section chart ``(x, t) <-> (x, y)`` (:mod:`.section`), 3D field
evaluators (:mod:`.field`), residual suites (:mod:`.verify`) and the
command-line front end (:mod:`.cli`).
"""

from .config import HelixConfig
from .field import (
    BeltramiSample,
    CutoffSpec,
    FieldArrays,
    FlowField,
    FlowSample,
    build_flow_field,
    helical_coordinates,
    sample_beltrami,
    sample_cutoff,
    sample_raw,
)
from .profile import ProfileCurve, ProfileRangeError, continue_profile, profile_at
from .puiseux import (
    SeriesError,
    SeriesPair,
    eval_profile_series,
    expand_profile_series,
    series_ode_residual,
)
from .section import CrossSectionMap, SectionRangeError, section_coefficients, t_from_y, y_from_t
from .verify import (
    GridSpec,
    ResidualReport,
    asymptotic_and_symmetry_check,
    beltrami_gs_residuals,
    cylindrical_fd_residuals,
    reduced_euler_residuals,
    vector_identity_residuals,
)

__version__ = "0.1.0"

__all__ = [
    "BeltramiSample",
    "CrossSectionMap",
    "CutoffSpec",
    "FieldArrays",
    "FlowField",
    "FlowSample",
    "GridSpec",
    "HelixConfig",
    "ProfileCurve",
    "ProfileRangeError",
    "ResidualReport",
    "SectionRangeError",
    "SeriesError",
    "SeriesPair",
    "asymptotic_and_symmetry_check",
    "beltrami_gs_residuals",
    "build_flow_field",
    "continue_profile",
    "cylindrical_fd_residuals",
    "eval_profile_series",
    "expand_profile_series",
    "helical_coordinates",
    "profile_at",
    "reduced_euler_residuals",
    "sample_beltrami",
    "sample_cutoff",
    "sample_raw",
    "section_coefficients",
    "series_ode_residual",
    "t_from_y",
    "vector_identity_residuals",
    "y_from_t",
]
