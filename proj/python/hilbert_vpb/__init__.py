"""Python access to the Hilbert expansion lab (grids, Maxwellians, fluid and trajectory tools)."""

from ._core import (
    VelocityGrid,
    build_velocity_grid,
    collision_frequency,
    fit_loglog,
    free_streaming_window,
    growth_factors,
    integrate_v,
    local_maxwellian,
    moments,
    parse_config,
    plasma_frequency,
    standing_wave_frequency,
    version,
)

__all__ = [
    "VelocityGrid",
    "build_velocity_grid",
    "collision_frequency",
    "fit_loglog",
    "free_streaming_window",
    "growth_factors",
    "integrate_v",
    "local_maxwellian",
    "moments",
    "parse_config",
    "plasma_frequency",
    "standing_wave_frequency",
    "version",
]
