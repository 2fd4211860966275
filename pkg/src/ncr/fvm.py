"""First-order Godunov finite-volume oracle for the scalar conservation law
with the exact symmetric flux.

The numerical flux uses the exact-Riemann form valid for non-convex fluxes:
max of G over [u_right, u_left] when u_left >= u_right, min over
[u_left, u_right] otherwise. Interval extrema come from the analytic
critical points of G (0 and +-v_max), not from scanning.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flux import (
    ConvexityClass,
    ModelParams,
    convexity_class,
    flux_G,
    max_abs_characteristic_speed,
    special_points,
)

__all__ = ["FvmConfig", "godunov_flux", "fvm_solve"]


@dataclass(frozen=True)
class FvmConfig:
    cell_count: int
    domain_halfwidth: float
    t_end: float
    params: ModelParams
    u_minus: float
    u_plus: float
    cfl_number: float = 0.8

    def __post_init__(self):
        if self.cell_count < 2:
            raise ValueError("cell_count must be >= 2")
        if not (0.0 < self.cfl_number <= 0.9):
            raise ValueError(f"cfl_number must lie in (0, 0.9], got {self.cfl_number}")
        if not (self.t_end > 0):
            raise ValueError("t_end must be positive")
        s_max = max_abs_characteristic_speed(self.params)
        if self.domain_halfwidth <= s_max * self.t_end:
            raise ValueError(
                f"domain half-width {self.domain_halfwidth} does not contain "
                f"the fastest wave ({s_max * self.t_end:.3f})"
            )


def _critical_points(params: ModelParams) -> np.ndarray:
    """Interior critical points of G on [-1, 1]: 0 always (G'(0)=0), and
    +-v_max in the mixed-convexity regime."""
    if convexity_class(params) is ConvexityClass.MIXED:
        vm = special_points(params).v_max
        return np.array([-vm, 0.0, vm])
    return np.array([0.0])


def godunov_flux(u_left, u_right, params: ModelParams):
    """Exact-Riemann numerical flux, vectorized over cell interfaces."""
    ul = np.asarray(u_left, dtype=float)
    ur = np.asarray(u_right, dtype=float)
    lo = np.minimum(ul, ur)
    hi = np.maximum(ul, ur)
    g_l = flux_G(ul, params)
    g_r = flux_G(ur, params)
    g_max = np.maximum(g_l, g_r)
    g_min = np.minimum(g_l, g_r)
    for vc in _critical_points(params):
        inside = (lo <= vc) & (vc <= hi)
        g_c = flux_G(vc, params)
        g_max = np.where(inside, np.maximum(g_max, g_c), g_max)
        g_min = np.where(inside, np.minimum(g_min, g_c), g_min)
    out = np.where(ul >= ur, g_max, g_min)
    return float(out) if out.ndim == 0 else out


def fvm_solve(config: FvmConfig):
    """Explicit conservative update to t_end.

    Returns (cell_centers, cell_averages). Outflow (copy) ghost cells; the
    domain is sized so waves never reach the boundary.
    """
    params = config.params
    n = config.cell_count
    X = config.domain_halfwidth
    dx = 2.0 * X / n
    centers = -X + dx * (np.arange(n) + 0.5)
    u = np.where(centers <= 0.0, config.u_minus, config.u_plus).astype(float)

    s_max = max_abs_characteristic_speed(params)
    dt = config.cfl_number * dx / s_max
    t = 0.0
    while t < config.t_end - 1e-14:
        step = min(dt, config.t_end - t)
        ul = np.concatenate(([u[0]], u))    # left state at each interface
        ur = np.concatenate((u, [u[-1]]))   # right state
        f = godunov_flux(ul, ur, params)
        u = u - (step / dx) * (f[1:] - f[:-1])
        t += step
    return centers, u
