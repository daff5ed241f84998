"""Classical and semiclassical reflection in sharp-turn waveguides."""

from .errors import ConfigError, DomainError, SharpTurnError, SolverError
from .geometry import Frame, ModelParams, smooth_profile, transform_frame
from .one_turn import nu_critical, solve_matching, suppression, suppression_closed_form
from .two_turn_boundary import critical_boundary, ncr_global
from .two_turn_tunneling import suppression_curve

__all__ = [
    "ConfigError", "DomainError", "Frame", "ModelParams", "SharpTurnError",
    "SolverError", "critical_boundary", "ncr_global", "nu_critical", "smooth_profile",
    "solve_matching", "suppression", "suppression_closed_form", "suppression_curve",
    "transform_frame",
]
