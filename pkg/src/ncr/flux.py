"""Stationary measures and the exact hydrodynamic flux of the
particle-antiparticle-hole exclusion process.

Sites carry occupations in {-1, 0, +1}. The process has annihilation rate 1
(after rescaling time), pair-creation rate c and a drift asymmetry d for the
hop rates. The one-site stationary marginal is parametrized either by the
chemical potential theta or, equivalently, by the signed density v in (-1, 1).

Everything here is a closed-form, pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "ModelParams",
    "StationaryMarginal",
    "FluxSpecialPoints",
    "ConvexityClass",
    "params_from_c",
    "c_from_b",
    "is_attractive",
    "marginal",
    "density_of_theta",
    "theta_of_density",
    "flux_H",
    "flux_H_deriv",
    "flux_G",
    "flux_G_deriv",
    "convexity_class",
    "special_points",
]

# b = 1/6 separates concave from mixed-convexity flux; classification must be
# deterministic for floating-point inputs.
B_THRESHOLD = 1.0 / 6.0
B_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Model rates: pair creation c > 0 and drift asymmetry d in (-1, 1).

    The annihilation rate is fixed to 1 by a rescaling of time. The
    stationary-measure parameter b = 1/(2 + c^{-1/2}) is derived from c and
    never set independently.
    """

    c: float
    d: float = 0.0

    def __post_init__(self):
        if not (self.c > 0.0) or not math.isfinite(self.c):
            raise ValueError(f"pair-creation rate c must be positive, got {self.c}")
        if not (abs(self.d) < 1.0):
            raise ValueError(f"drift asymmetry d must lie in (-1, 1), got {self.d}")

    @property
    def b(self) -> float:
        return 1.0 / (2.0 + 1.0 / math.sqrt(self.c))

    @classmethod
    def from_b(cls, b: float, d: float = 0.0) -> "ModelParams":
        return cls(c=c_from_b(b), d=d)


@dataclass(frozen=True)
class StationaryMarginal:
    """One-site stationary probabilities (p_minus, p_zero, p_plus) and the
    partition sum z = 1 + 2b(cosh(theta) - 1)."""

    p_minus: float
    p_zero: float
    p_plus: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p_minus, self.p_zero, self.p_plus])


@dataclass(frozen=True)
class FluxSpecialPoints:
    """Analytic landmarks of the symmetric flux for b < 1/6.

    v_infl  -- positive inflection point,
    v_max   -- positive global maximizer,
    v_zero  -- positive abscissa where the horizontal tangent at 0 (height b)
               meets the flux graph again,
    g_max   -- flux value at +-v_max,
    g_min_local -- flux value at 0 (equals b).
    """

    v_infl: float
    v_max: float
    v_zero: float
    g_max: float
    g_min_local: float


class ConvexityClass(Enum):
    STRICTLY_CONCAVE = "STRICTLY_CONCAVE"
    MARGINALLY_CONCAVE = "MARGINALLY_CONCAVE"
    MIXED = "MIXED"


def params_from_c(c: float, d: float = 0.0) -> ModelParams:
    """Build model parameters from the pair-creation rate c and drift d."""
    return ModelParams(c=c, d=d)


def c_from_b(b: float) -> float:
    """Invert b = 1/(2 + c^{-1/2}); requires b in (0, 1/2)."""
    if not (0.0 < b < 0.5):
        raise ValueError(f"b must lie in (0, 1/2), got {b}")
    return (b / (1.0 - 2.0 * b)) ** 2


def is_attractive(params: ModelParams) -> bool:
    """The dynamics preserves the coordinate-wise order iff c <= (1-|d|)/2."""
    return params.c <= (1.0 - abs(params.d)) / 2.0


def marginal(theta: float, params: ModelParams) -> StationaryMarginal:
    """One-site stationary marginal at chemical potential theta.

    Probabilities are (b e^-theta, 1-2b, b e^theta)/Z with
    Z = 1 + 2b(cosh(theta) - 1). Computed in a form that stays finite for
    large |theta| (the naive Z overflows around |theta| ~ 710).
    """
    if not math.isfinite(theta):
        raise ValueError(f"theta must be finite, got {theta}")
    b = params.b
    # Divide numerators and Z by e^{|theta|} so every exponential is <= 1.
    a = abs(theta)
    em = math.exp(-a)        # e^{-|theta|}
    em2 = math.exp(-2.0 * a)  # e^{-2|theta|}
    denom = (1.0 - 2.0 * b) * em + b + b * em2
    p_big = b / denom                      # probability of sign(theta)
    p_small = b * em2 / denom              # probability of -sign(theta)
    p_zero = (1.0 - 2.0 * b) * em / denom
    if theta >= 0.0:
        p_minus, p_plus = p_small, p_big
    else:
        p_minus, p_plus = p_big, p_small
    z = 1.0 + 2.0 * b * (math.cosh(theta) - 1.0) if a < 700 else math.inf
    return StationaryMarginal(p_minus=p_minus, p_zero=p_zero, p_plus=p_plus, z=z)


def density_of_theta(theta: float, params: ModelParams) -> float:
    """Signed density v(theta) = 2b sinh(theta) / (1 + 2b(cosh(theta)-1))."""
    m = marginal(theta, params)
    return m.p_plus - m.p_minus


def theta_of_density(v: float, params: ModelParams) -> float:
    """Chemical potential of a given signed density v in (-1, 1).

    theta(v) = log(((1-2b) v + sqrt(4b^2 + (1-4b) v^2)) / (2b (1-v)))
    """
    if not (abs(v) < 1.0):
        raise ValueError(f"density must lie in (-1, 1), got {v}")
    if v < 0.0:
        # theta is odd in v; the v > 0 branch avoids the cancellation in
        # (1-2b)v + sqrt(...) that occurs for v near -1
        return -theta_of_density(-v, params)
    b = params.b
    num = (1.0 - 2.0 * b) * v + math.sqrt(4.0 * b * b + (1.0 - 4.0 * b) * v * v)
    return math.log(num / (2.0 * b * (1.0 - v)))


def _ADR(v, b):
    """Shared building blocks of the flux: A, D and the root R.

    R(v) = sqrt(4b^2 + (1-4b) v^2)
    A(v) = 4b^2 + (1-2b)^2 v^2
    D(v) = 4b^2 + (1-2b) R(v)
    """
    v = np.asarray(v, dtype=float)
    r = np.sqrt(4.0 * b * b + (1.0 - 4.0 * b) * v * v)
    a = 4.0 * b * b + (1.0 - 2.0 * b) ** 2 * v * v
    d = 4.0 * b * b + (1.0 - 2.0 * b) * r
    return a, d, r


def flux_H(v, params: ModelParams):
    """Hydrodynamic flux for general drift d.

    H(v) = v(d-v)/2 + (1-dv)(4b^2+(1-2b)^2 v^2) / (2(4b^2+(1-2b)R(v))).

    Accepts scalars or arrays; |v| = 1 is evaluated by the simplified limit
    (H(+-1) = 0 exactly) to avoid cancellation noise.
    """
    b, d = params.b, params.d
    v = np.asarray(v, dtype=float)
    a, den, _ = _ADR(v, b)
    out = v * (d - v) / 2.0 + (1.0 - d * v) * a / (2.0 * den)
    out = np.where(v * v == 1.0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def flux_G(v, params: ModelParams):
    """Symmetric flux (drift d = 0).

    G(v) = -v^2/2 + (4b^2+(1-2b)^2 v^2) / (2(4b^2+(1-2b)R(v))).
    """
    b = params.b
    v = np.asarray(v, dtype=float)
    a, den, _ = _ADR(v, b)
    out = -v * v / 2.0 + a / (2.0 * den)
    out = np.where(v * v == 1.0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def flux_G_deriv(v, params: ModelParams, order: int = 1):
    """Closed-form first or second derivative of the symmetric flux.

    Hand-differentiated (no numerical differentiation): with
    A' = 2(1-2b)^2 v, A'' = 2(1-2b)^2, D' = (1-2b)(1-4b) v / R and
    D'' = 4 b^2 (1-2b)(1-4b) / R^3,

        G'  = -v + (A'D - AD') / (2 D^2)
        G'' = -1 + (A''D - AD'') / (2 D^2) - D'(A'D - AD') / D^3.

    G' is odd and G'' even; G'(0) = 0.
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    b = params.b
    v = np.asarray(v, dtype=float)
    a, den, r = _ADR(v, b)
    ap = 2.0 * (1.0 - 2.0 * b) ** 2 * v
    dp = (1.0 - 2.0 * b) * (1.0 - 4.0 * b) * v / r
    num1 = ap * den - a * dp
    if order == 1:
        out = -v + num1 / (2.0 * den * den)
    else:
        app = 2.0 * (1.0 - 2.0 * b) ** 2
        dpp = 4.0 * b * b * (1.0 - 2.0 * b) * (1.0 - 4.0 * b) / r**3
        out = -1.0 + (app * den - a * dpp) / (2.0 * den * den) - dp * num1 / den**3
    return float(out) if out.ndim == 0 else out


def flux_H_deriv(v, params: ModelParams, order: int = 1):
    """Closed-form first or second derivative of the general-d flux.

    Writing H = v(d-v)/2 + (1-dv) K with K = A/(2D):

        H'  = (d-2v)/2 - d K + (1-dv) K'
        H'' = -1 - 2d K' + (1-dv) K''.

    Reduces to flux_G_deriv at d = 0.
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    b, d = params.b, params.d
    v = np.asarray(v, dtype=float)
    a, den, r = _ADR(v, b)
    k = a / (2.0 * den)
    ap = 2.0 * (1.0 - 2.0 * b) ** 2 * v
    dp = (1.0 - 2.0 * b) * (1.0 - 4.0 * b) * v / r
    kp = (ap * den - a * dp) / (2.0 * den * den)
    if order == 1:
        out = (d - 2.0 * v) / 2.0 - d * k + (1.0 - d * v) * kp
    else:
        app = 2.0 * (1.0 - 2.0 * b) ** 2
        dpp = 4.0 * b * b * (1.0 - 2.0 * b) * (1.0 - 4.0 * b) / r**3
        kpp = (app * den - a * dpp) / (2.0 * den * den) - dp * (
            ap * den - a * dp
        ) / den**3
        out = -1.0 - 2.0 * d * kp + (1.0 - d * v) * kpp
    return float(out) if out.ndim == 0 else out


def convexity_class(params: ModelParams) -> ConvexityClass:
    """Shape of the symmetric flux: concave for b > 1/6, marginally concave at
    b = 1/6 (within 1e-12), otherwise of mixed convexity."""
    b = params.b
    if abs(b - B_THRESHOLD) <= B_TOL:
        return ConvexityClass.MARGINALLY_CONCAVE
    if b > B_THRESHOLD:
        return ConvexityClass.STRICTLY_CONCAVE
    return ConvexityClass.MIXED


def special_points(params: ModelParams) -> FluxSpecialPoints:
    """Closed-form landmarks of the symmetric flux, defined for b < 1/6."""
    b = params.b
    if not (b < B_THRESHOLD - B_TOL):
        raise ValueError(
            f"special points require b < 1/6 (mixed-convexity flux), got b={b}"
        )
    v_infl = math.sqrt(
        ((2.0 * b * b * (1.0 - 2.0 * b)) ** (2.0 / 3.0) - 4.0 * b * b)
        / (1.0 - 4.0 * b)
    )
    v_max = 0.5 * math.sqrt((1.0 + 2.0 * b) * (1.0 - 6.0 * b) / (1.0 - 4.0 * b))
    v_zero = math.sqrt((1.0 - 2.0 * b) * (1.0 - 6.0 * b) / (1.0 - 4.0 * b))
    g_max = (1.0 - 2.0 * b) ** 2 / (8.0 - 32.0 * b)
    return FluxSpecialPoints(
        v_infl=v_infl, v_max=v_max, v_zero=v_zero, g_max=g_max, g_min_local=b
    )


def max_abs_characteristic_speed(params: ModelParams) -> float:
    """Upper bound on max |G'| over [-1, 1], used for CFL and lattice sizing.

    Scans a fine grid of the closed-form derivative and pads by 1%.
    """
    v = np.linspace(-1.0, 1.0, 4001)
    return 1.01 * float(np.max(np.abs(flux_G_deriv(v, params, order=1))))
