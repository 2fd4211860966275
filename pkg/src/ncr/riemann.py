"""Closed-form entropy solution of the Riemann problem for the symmetric
flux, wave-structure extraction and the six-way phase classification.

For left/right step densities u_minus > u_plus the solution is driven by the
upper concave envelope of the flux over [u_plus, u_minus]; for
u_minus < u_plus by the lower convex envelope. Every LINEAR envelope piece
maps to a shock (speed = chord slope), every flux-following piece to a
rarefaction fan. The phase label (S, R, RS, SR, RSR, SRS) is read off the
wave sequence; the envelope construction is the ground truth for
classification, including points on region boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .envelope import (
    DEGENERATE_TOL,
    Envelope,
    Orientation,
    PieceKind,
    concave_envelope,
    convex_envelope,
)
from .flux import ModelParams, flux_G, flux_G_deriv

__all__ = [
    "RiemannProblem",
    "Wave",
    "WaveKind",
    "WaveStructure",
    "PhaseLabel",
    "wave_structure",
    "classify",
    "entropy_solution",
    "entropy_profile",
    "phase_diagram_grid",
    "serialize_waves",
]


class WaveKind(Enum):
    SHOCK = "SHOCK"
    FAN = "FAN"


class PhaseLabel(Enum):
    S = "S"
    R = "R"
    RS = "RS"
    SR = "SR"
    RSR = "RSR"
    SRS = "SRS"
    NONE = "NONE"


@dataclass(frozen=True)
class RiemannProblem:
    """Step initial condition: density u_minus for x <= 0, u_plus for x > 0."""

    u_minus: float
    u_plus: float
    params: ModelParams

    def __post_init__(self):
        for name, u in (("u_minus", self.u_minus), ("u_plus", self.u_plus)):
            if not (-1.0 <= u <= 1.0):
                raise ValueError(f"{name} must lie in [-1, 1], got {u}")
        if abs(self.u_minus - self.u_plus) < DEGENERATE_TOL:
            raise ValueError("Riemann problem requires u_minus != u_plus")


@dataclass(frozen=True)
class Wave:
    """A single wave, in Eulerian (macroscopic) units.

    SHOCK: moving discontinuity at Rankine-Hugoniot speed, densities
    left_density -> right_density in spatial order.
    FAN: self-similar rarefaction over speeds [speed_lo, speed_hi]; the
    density at interior speed xi solves G'(v) = xi.
    """

    kind: WaveKind
    left_density: float
    right_density: float
    speed: float = 0.0       # SHOCK only
    speed_lo: float = 0.0    # FAN only
    speed_hi: float = 0.0    # FAN only
    params: ModelParams = field(default=None, compare=False)

    def density_at(self, xi):
        """Fan density at characteristic speed(s) xi (scalar or array)."""
        if self.kind is not WaveKind.FAN:
            raise ValueError("density_at is defined for FAN waves only")
        return _invert_characteristic(
            xi, self.left_density, self.right_density, self.params
        )


@dataclass(frozen=True)
class WaveStructure:
    """Ordered waves (speeds non-decreasing, left to right) and their label."""

    waves: tuple
    label: PhaseLabel
    u_minus: float
    u_plus: float
    params: ModelParams
    envelope: Envelope = field(compare=False, default=None)


def _invert_characteristic(xi, v_a, v_b, params):
    """Solve G'(v) = xi for v between v_a and v_b by vectorized bisection.

    G' is monotone over any single fan's density range.
    """
    xi = np.asarray(xi, dtype=float)
    lo = np.full(xi.shape, min(v_a, v_b))
    hi = np.full(xi.shape, max(v_a, v_b))
    g_lo = flux_G_deriv(min(v_a, v_b), params, 1)
    g_hi = flux_G_deriv(max(v_a, v_b), params, 1)
    asc = g_hi >= g_lo
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        g_mid = flux_G_deriv(mid, params, 1)
        if asc:
            take_hi = g_mid < xi
        else:
            take_hi = g_mid > xi
        lo = np.where(take_hi, mid, lo)
        hi = np.where(take_hi, hi, mid)
    out = 0.5 * (lo + hi)
    return float(out) if out.ndim == 0 else out


def _require_symmetric(params):
    if params.d != 0.0:
        raise ValueError("Riemann classification is defined for d = 0 only")


def wave_structure(prob: RiemannProblem) -> WaveStructure:
    """Extract the ordered shock/fan sequence of the entropy solution."""
    _require_symmetric(prob.params)
    params = prob.params
    um, up = prob.u_minus, prob.u_plus

    if um > up:
        env = concave_envelope(up, um, params)
        # envelope pieces ascend in density; space ascends as density falls
        ordered = [(p, p.hi, p.lo) for p in reversed(env.pieces)]
    else:
        env = convex_envelope(um, up, params)
        ordered = [(p, p.lo, p.hi) for p in env.pieces]

    waves = []
    for piece, left, right in ordered:
        if piece.kind is PieceKind.LINEAR:
            waves.append(
                Wave(
                    kind=WaveKind.SHOCK,
                    left_density=left,
                    right_density=right,
                    speed=piece.slope,
                    params=params,
                )
            )
        else:
            waves.append(
                Wave(
                    kind=WaveKind.FAN,
                    left_density=left,
                    right_density=right,
                    speed_lo=flux_G_deriv(left, params, 1),
                    speed_hi=flux_G_deriv(right, params, 1),
                    params=params,
                )
            )

    waves = _prune_and_merge(waves, params)
    label = PhaseLabel("".join(
        "S" if w.kind is WaveKind.SHOCK else "R" for w in waves
    ))
    return WaveStructure(
        waves=tuple(waves), label=label, u_minus=um, u_plus=up,
        params=params, envelope=env,
    )


def _prune_and_merge(waves, params):
    """Drop zero-width waves, then merge adjacent waves of equal kind."""
    kept = []
    for w in waves:
        if w.kind is WaveKind.SHOCK:
            if abs(w.left_density - w.right_density) < DEGENERATE_TOL:
                continue
        else:
            if w.speed_hi - w.speed_lo < DEGENERATE_TOL:
                continue
        kept.append(w)
    if not kept:
        # all pieces degenerate (cannot happen for u_minus != u_plus); keep
        # the widest original wave as a safeguard
        kept = [max(waves, key=lambda w: abs(w.left_density - w.right_density))]
    merged = [kept[0]]
    for w in kept[1:]:
        prev = merged[-1]
        if w.kind is prev.kind:
            if w.kind is WaveKind.SHOCK:
                ld, rd = prev.left_density, w.right_density
                speed = (flux_G(ld, params) - flux_G(rd, params)) / (ld - rd)
                merged[-1] = Wave(WaveKind.SHOCK, ld, rd, speed=speed,
                                  params=params)
            else:
                merged[-1] = Wave(
                    WaveKind.FAN, prev.left_density, w.right_density,
                    speed_lo=prev.speed_lo, speed_hi=w.speed_hi, params=params,
                )
        else:
            merged.append(w)
    return merged


def classify(prob: RiemannProblem) -> PhaseLabel:
    """Phase label of the Riemann problem, derived from the wave structure."""
    return wave_structure(prob).label


def entropy_solution(prob: RiemannProblem, x: float, t: float) -> float:
    """Pointwise entropy solution u(x, t), t > 0.

    Depends on (x, t) only through the similarity variable x/t.
    """
    if not (t > 0.0):
        raise ValueError(f"time must be positive, got {t}")
    ws = wave_structure(prob)
    return _eval_similarity(ws, x / t)


def _eval_similarity(ws: WaveStructure, s: float) -> float:
    for w in ws.waves:
        if w.kind is WaveKind.SHOCK:
            if s <= w.speed:
                return w.left_density
        else:
            if s <= w.speed_lo:
                return w.left_density
            if s <= w.speed_hi:
                return float(w.density_at(s))
    return ws.u_plus


def entropy_profile(prob: RiemannProblem, xs, t: float) -> np.ndarray:
    """Vectorized entropy solution over an array of positions."""
    if not (t > 0.0):
        raise ValueError(f"time must be positive, got {t}")
    ws = wave_structure(prob)
    s = np.asarray(xs, dtype=float) / t
    out = np.full(s.shape, float(ws.u_plus))
    remaining = np.ones(s.shape, dtype=bool)
    for w in ws.waves:
        if w.kind is WaveKind.SHOCK:
            m = remaining & (s <= w.speed)
            out[m] = w.left_density
            remaining &= ~m
        else:
            m_flat = remaining & (s <= w.speed_lo)
            out[m_flat] = w.left_density
            m_fan = remaining & ~m_flat & (s <= w.speed_hi)
            if np.any(m_fan):
                out[m_fan] = w.density_at(s[m_fan])
            remaining &= ~(m_flat | m_fan)
    return out


def phase_diagram_grid(params: ModelParams, resolution: int):
    """Classify a uniform (u_minus, u_plus) grid over [-1, 1]^2.

    Returns (densities, labels) where labels[i, j] is the label string for
    u_minus = densities[i], u_plus = densities[j]; the diagonal is "NONE".
    """
    _require_symmetric(params)
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    densities = np.linspace(-1.0, 1.0, resolution)
    labels = np.empty((resolution, resolution), dtype="<U4")
    for i, um in enumerate(densities):
        for j, up in enumerate(densities):
            if abs(um - up) < DEGENERATE_TOL:
                labels[i, j] = PhaseLabel.NONE.value
            else:
                labels[i, j] = classify(
                    RiemannProblem(u_minus=um, u_plus=up, params=params)
                ).value
    return densities, labels


def serialize_waves(ws: WaveStructure) -> str:
    """One wave per line: `SHOCK speed left right` or `FAN speed_lo speed_hi`,
    12 significant digits."""
    lines = []
    for w in ws.waves:
        if w.kind is WaveKind.SHOCK:
            lines.append(
                f"SHOCK {w.speed:.12g} {w.left_density:.12g} {w.right_density:.12g}"
            )
        else:
            lines.append(f"FAN {w.speed_lo:.12g} {w.speed_hi:.12g}")
    return "\n".join(lines)
