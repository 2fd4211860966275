"""Toolkit for the particle-antiparticle-hole exclusion process: exact
hydrodynamic flux, closed-form Riemann solutions with six-way phase
classification, event-driven kinetic Monte Carlo simulation, and a Godunov
finite-volume oracle."""

from .flux import (
    ConvexityClass,
    FluxSpecialPoints,
    ModelParams,
    StationaryMarginal,
    convexity_class,
    density_of_theta,
    flux_G,
    flux_G_deriv,
    flux_H,
    flux_H_deriv,
    is_attractive,
    marginal,
    max_abs_characteristic_speed,
    special_points,
    theta_of_density,
)
from .envelope import (
    Envelope,
    Orientation,
    Piece,
    PieceKind,
    concave_envelope,
    convex_envelope,
)
from .riemann import (
    PhaseLabel,
    RiemannProblem,
    Wave,
    WaveKind,
    WaveStructure,
    classify,
    entropy_profile,
    entropy_solution,
    phase_diagram_grid,
    serialize_waves,
    wave_structure,
)
from .simulator import (
    InfluenceConeBreachError,
    LatticeState,
    SimConfig,
    SimResult,
    run,
)
from .fvm import FvmConfig, fvm_solve, godunov_flux

__version__ = "0.1.0"
