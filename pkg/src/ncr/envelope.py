"""Tangent constructions and concave/convex envelopes of the symmetric flux.

The symmetric flux (drift d = 0) with b < 1/6 has exactly two inflection
points +-v_infl: it is concave on [-1, -v_infl] and [v_infl, 1] and convex in
between. Envelope construction exploits this: candidate piece layouts (pure
flux arcs, a single bridging chord, tangent-anchored segments) are enumerated
analytically, their boundaries refined by bisection, and the winner selected
by the extremal-envelope property. A discrete-hull construction on a dense
sample serves as a fallback when no analytic layout validates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq, fsolve

from .flux import (
    B_THRESHOLD,
    B_TOL,
    ModelParams,
    convexity_class,
    ConvexityClass,
    flux_G,
    flux_G_deriv,
    special_points,
)

__all__ = [
    "PieceKind",
    "Orientation",
    "Piece",
    "Envelope",
    "TangentSolution",
    "TangentPoints",
    "tangent_intersections",
    "tangent_points_from",
    "concave_envelope",
    "convex_envelope",
    "envelope_derivative_inverse",
]

# Residual tolerance for tangency and touching conditions.
TANGENT_TOL = 1e-10
# Minimum admissible interval width for an envelope / Riemann problem.
DEGENERATE_TOL = 1e-12


class PieceKind(Enum):
    FOLLOWS_FLUX = "FOLLOWS_FLUX"
    LINEAR = "LINEAR"


class Orientation(Enum):
    CONCAVE_UPPER = "CONCAVE_UPPER"
    CONVEX_LOWER = "CONVEX_LOWER"


@dataclass(frozen=True)
class Piece:
    """One envelope segment over [lo, hi].

    FOLLOWS_FLUX pieces coincide with the flux; LINEAR pieces are the line
    slope*v + intercept (a chord or tangent segment).
    """

    kind: PieceKind
    lo: float
    hi: float
    slope: float = 0.0
    intercept: float = 0.0


@dataclass(frozen=True)
class TangentSolution:
    """Intersections of the tangent line at v_e with the flux graph.

    -inf / +inf mark a missing intersection on that side.
    """

    v_m_minus: float
    v_m_plus: float


@dataclass(frozen=True)
class TangentPoints:
    """Tangency points of lines drawn from a fixed point of the flux graph,
    ordered by distance (near first, equal when unique)."""

    v_e_near: float
    v_e_far: float


@dataclass(frozen=True)
class Envelope:
    """Piecewise envelope of the flux over [lo, hi].

    pieces partition [lo, hi] left to right; the envelope derivative is
    non-increasing across pieces for CONCAVE_UPPER and non-decreasing for
    CONVEX_LOWER.
    """

    lo: float
    hi: float
    orientation: Orientation
    pieces: tuple
    params: ModelParams

    def value(self, v):
        v = np.asarray(v, dtype=float)
        out = np.empty_like(v)
        idx = self._piece_index(v)
        for k, p in enumerate(self.pieces):
            m = idx == k
            if not np.any(m):
                continue
            if p.kind is PieceKind.FOLLOWS_FLUX:
                out[m] = flux_G(v[m], self.params)
            else:
                out[m] = p.slope * v[m] + p.intercept
        return float(out) if out.ndim == 0 else out

    def derivative(self, v):
        v = np.asarray(v, dtype=float)
        out = np.empty_like(v)
        idx = self._piece_index(v)
        for k, p in enumerate(self.pieces):
            m = idx == k
            if not np.any(m):
                continue
            if p.kind is PieceKind.FOLLOWS_FLUX:
                out[m] = flux_G_deriv(v[m], self.params, order=1)
            else:
                out[m] = p.slope
        return float(out) if out.ndim == 0 else out

    def _piece_index(self, v):
        bounds = np.array([p.hi for p in self.pieces[:-1]])
        return np.searchsorted(bounds, np.atleast_1d(v)).reshape(np.shape(v))

    def derivative_range(self):
        """(min, max) of the envelope derivative over the interval."""
        d_lo = self.derivative(self.lo)
        d_hi = self.derivative(self.hi)
        return (min(d_lo, d_hi), max(d_lo, d_hi))


# ---------------------------------------------------------------------------
# root finding helpers

def _scan_roots(f, a, b, n=4001, exclude=None, exclude_radius=1e-7):
    """Roots of f on [a, b]: sign changes on a uniform n-point grid refined by
    bisection (brentq), plus grid points where |f| is already below 1e-13.

    Points within exclude_radius of `exclude` are dropped (used to skip the
    trivial double root at the tangency point itself).
    """
    xs = np.linspace(a, b, n)
    ys = np.array([f(x) for x in xs])
    roots = []
    for i in range(n - 1):
        y0, y1 = ys[i], ys[i + 1]
        if y0 == 0.0:
            roots.append(xs[i])
        elif y0 * y1 < 0.0:
            roots.append(brentq(f, xs[i], xs[i + 1], xtol=1e-13))
    if ys[-1] == 0.0:
        roots.append(xs[-1])
    # near-zero grid values catch tangential (even-multiplicity) roots
    for i in range(n):
        if abs(ys[i]) < 1e-13 and all(abs(xs[i] - r) > 1e-6 for r in roots):
            roots.append(xs[i])
    roots.sort()
    out = []
    for r in roots:
        if exclude is not None and abs(r - exclude) <= exclude_radius:
            continue
        if out and abs(r - out[-1]) <= 1e-9:
            continue
        out.append(r)
    return out


def _require_symmetric(params: ModelParams):
    if params.d != 0.0:
        raise ValueError("envelope constructions are defined for d = 0 only")


def tangent_intersections(v_e: float, params: ModelParams) -> TangentSolution:
    """Where the tangent line at (v_e, G(v_e)) meets the flux graph again.

    Returns the nearest crossing on each side of v_e; -inf/+inf when the
    tangent stays clear of the graph on that side.
    """
    _require_symmetric(params)
    if not (-1.0 <= v_e <= 1.0):
        raise ValueError(f"v_e must lie in [-1, 1], got {v_e}")
    g_e = flux_G(v_e, params)
    gp_e = flux_G_deriv(v_e, params, order=1)

    def resid(v):
        return flux_G(v, params) - g_e - gp_e * (v - v_e)

    roots = _scan_roots(resid, -1.0, 1.0, exclude=v_e)
    # tangential touches (double roots, no sign change): stationary points of
    # the residual where it also vanishes
    for w in _scan_roots(
        lambda v: flux_G_deriv(v, params, order=1) - gp_e, -1.0, 1.0,
        exclude=v_e, exclude_radius=1e-6,
    ):
        if abs(resid(w)) < 1e-9 and all(abs(w - r) > 1e-7 for r in roots):
            roots.append(w)
    roots.sort()
    left = [r for r in roots if r < v_e]
    right = [r for r in roots if r > v_e]
    return TangentSolution(
        v_m_minus=left[-1] if left else -math.inf,
        v_m_plus=right[0] if right else math.inf,
    )


def tangent_points_from(v: float, params: ModelParams):
    """Tangency points v_e of lines drawn through (v, G(v)).

    Returns TangentPoints ordered near/far from v, or None when no tangent
    from that point touches the graph elsewhere.
    """
    _require_symmetric(params)
    if not (-1.0 <= v <= 1.0):
        raise ValueError(f"v must lie in [-1, 1], got {v}")
    g_v = flux_G(v, params)

    def resid(w):
        return (
            flux_G(w, params)
            + flux_G_deriv(w, params, order=1) * (v - w)
            - g_v
        )

    roots = _scan_roots(resid, -1.0, 1.0, exclude=v, exclude_radius=1e-6)
    if not roots:
        return None
    roots.sort(key=lambda w: abs(w - v))
    return TangentPoints(v_e_near=roots[0], v_e_far=roots[-1])


def _tangency_anchored(x0, y0, a, b, params):
    """Tangency point w in [a, b] of the line through (x0, y0):
    solve G(w) + G'(w)(x0 - w) = y0 by bisection.

    The bracket is chosen inside a single-curvature branch, where the residual
    is monotone; returns None when no root is bracketed.
    """
    if b - a < 1e-14:
        return None

    def f(w):
        return flux_G(w, params) + flux_G_deriv(w, params, order=1) * (x0 - w) - y0

    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        return None
    return brentq(f, a, b, xtol=1e-13)


# ---------------------------------------------------------------------------
# envelope construction

def _line_through(p, q, params):
    """(slope, intercept) of the chord of G between densities p and q."""
    gp_, gq_ = flux_G(p, params), flux_G(q, params)
    slope = (gq_ - gp_) / (q - p)
    return slope, gp_ - slope * p


def _tangent_line(w, params):
    slope = flux_G_deriv(w, params, order=1)
    return slope, flux_G(w, params) - slope * w


def _make_pieces(lo, hi, linear_segments, params):
    """Assemble alternating FOLLOWS/LINEAR pieces from bridging segments.

    linear_segments: sorted list of (p, q, slope, intercept) with
    lo <= p < q <= hi and disjoint interiors.
    """
    pieces = []
    cur = lo
    for (p, q, s, c0) in linear_segments:
        if p - cur > DEGENERATE_TOL:
            pieces.append(Piece(PieceKind.FOLLOWS_FLUX, cur, p))
        pieces.append(Piece(PieceKind.LINEAR, max(cur, p), q, s, c0))
        cur = q
    if hi - cur > DEGENERATE_TOL:
        pieces.append(Piece(PieceKind.FOLLOWS_FLUX, cur, hi))
    return tuple(pieces)


def _validate(env: Envelope, n=801, tol=1e-9):
    """Check the defining envelope properties on a sample grid."""
    sign = 1.0 if env.orientation is Orientation.CONCAVE_UPPER else -1.0
    v = np.linspace(env.lo, env.hi, n)
    slack = sign * (env.value(v) - flux_G(v, env.params))
    if np.min(slack) < -tol:
        return False
    # linear endpoints must touch the flux
    for p in env.pieces:
        if p.kind is PieceKind.LINEAR:
            for e in (p.lo, p.hi):
                if abs(p.slope * e + p.intercept - flux_G(e, env.params)) > tol:
                    return False
            # the grid above can step over a dip narrower than its spacing;
            # check the slack exactly at the stationary points of line - G
            # (roots of G' = slope), where any interior dip is deepest
            if not _linear_piece_dominates(p, env.params, sign, tol):
                return False
    # derivative monotone across piece joints
    prev = None
    for p in env.pieces:
        d_lo = p.slope if p.kind is PieceKind.LINEAR else flux_G_deriv(p.lo, env.params, 1)
        d_hi = p.slope if p.kind is PieceKind.LINEAR else flux_G_deriv(p.hi, env.params, 1)
        if sign * (d_lo - d_hi) < -tol:
            return False
        if prev is not None and sign * (prev - d_lo) < -tol:
            return False
        prev = d_hi
    return True


def _linear_piece_dominates(p, params, sign, tol):
    """True when the linear piece stays on the correct side of the flux at
    every stationary point of (line - G) inside (p.lo, p.hi)."""
    if p.hi - p.lo < 1e-12:
        return True
    vs = np.linspace(p.lo, p.hi, 257)
    resid = flux_G_deriv(vs, params, order=1) - p.slope
    for i in np.flatnonzero(np.sign(resid[:-1]) * np.sign(resid[1:]) < 0):
        w = brentq(
            lambda v: flux_G_deriv(v, params, order=1) - p.slope,
            vs[i], vs[i + 1], xtol=1e-13,
        )
        slack = sign * (p.slope * w + p.intercept - flux_G(w, params))
        if slack < -tol:
            return False
    return True


def _hull_fallback(lo, hi, params, orientation, n=4001):
    """Discrete upper-hull construction with tangency refinement.

    Works on -G for the convex orientation. Guarantees a usable envelope when
    the analytic layout enumeration fails to validate.
    """
    sign = 1.0 if orientation is Orientation.CONCAVE_UPPER else -1.0

    def g(v):
        return sign * flux_G(v, params)

    def gp(v):
        return sign * flux_G_deriv(v, params, order=1)

    xs = np.linspace(lo, hi, n)
    ys = np.array([g(x) for x in xs])
    # Andrew monotone chain, upper hull
    hull = []
    for i in range(n):
        while len(hull) >= 2:
            i1, i2 = hull[-2], hull[-1]
            cross = (xs[i2] - xs[i1]) * (ys[i] - ys[i1]) - (ys[i2] - ys[i1]) * (
                xs[i] - xs[i1]
            )
            if cross >= 0.0:
                hull.pop()
            else:
                break
        hull.append(i)
    # gaps in hull indices are linear bridges; refine their endpoints
    segments = []
    for a_idx, b_idx in zip(hull[:-1], hull[1:]):
        if b_idx - a_idx <= 1:
            continue
        p, q = xs[a_idx], xs[b_idx]
        p_interior = a_idx > 0
        q_interior = b_idx < n - 1
        dx = xs[1] - xs[0]
        if p_interior and q_interior:
            def eqs(z):
                pp, qq = z
                s = (g(qq) - g(pp)) / (qq - pp)
                return [gp(pp) - s, gp(qq) - s]

            sol, info, ok, _ = fsolve(eqs, [p, q], full_output=True)
            if ok == 1 and sol[0] < sol[1]:
                p, q = float(sol[0]), float(sol[1])
        elif p_interior:
            r = _brent_tangency(g, gp, q, g(q), max(lo, p - 4 * dx),
                                min(q, p + 4 * dx))
            if r is not None:
                p = r
        elif q_interior:
            r = _brent_tangency(g, gp, p, g(p), max(p, q - 4 * dx),
                                min(hi, q + 4 * dx))
            if r is not None:
                q = r
        s = (g(q) - g(p)) / (q - p)
        segments.append((p, q, sign * s, sign * (g(p) - s * p)))
    pieces = _make_pieces(lo, hi, segments, params)
    return Envelope(lo=lo, hi=hi, orientation=orientation, pieces=pieces,
                    params=params)


def _brent_tangency(g, gp, x0, y0, a, b):
    def f(w):
        return g(w) + gp(w) * (x0 - w) - y0

    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        return None
    return brentq(f, a, b, xtol=1e-13)


def _check_interval(lo, hi):
    if not (lo < hi):
        raise ValueError(f"interval must satisfy lo < hi, got [{lo}, {hi}]")
    if hi - lo < DEGENERATE_TOL:
        raise ValueError(f"degenerate interval [{lo}, {hi}]")
    if lo < -1.0 or hi > 1.0:
        raise ValueError(f"interval must lie within [-1, 1], got [{lo}, {hi}]")


def _select(candidates, lo, hi, params, orientation):
    """Among validated candidate envelopes, pick the extremal one:
    smallest for the concave upper envelope, largest for the convex lower."""
    sign = 1.0 if orientation is Orientation.CONCAVE_UPPER else -1.0
    vs = np.linspace(lo, hi, 257)
    best, best_area = None, None
    for pieces in candidates:
        env = Envelope(lo=lo, hi=hi, orientation=orientation, pieces=pieces,
                       params=params)
        if not _validate(env):
            continue
        area = sign * float(np.sum(env.value(vs)))
        if best is None or area < best_area:
            best, best_area = env, area
    return best


def concave_envelope(lo: float, hi: float, params: ModelParams) -> Envelope:
    """Upper concave envelope of the symmetric flux over [lo, hi]: the
    smallest concave function that dominates G there."""
    _require_symmetric(params)
    _check_interval(lo, hi)
    orientation = Orientation.CONCAVE_UPPER

    if convexity_class(params) is not ConvexityClass.MIXED:
        # concave flux: the envelope is the flux itself
        pieces = (Piece(PieceKind.FOLLOWS_FLUX, lo, hi),)
        return Envelope(lo, hi, orientation, pieces, params)

    sp = special_points(params)
    vi, vm = sp.v_infl, sp.v_max
    if hi <= -vi or lo >= vi:
        # interval inside a concave branch
        pieces = (Piece(PieceKind.FOLLOWS_FLUX, lo, hi),)
        return Envelope(lo, hi, orientation, pieces, params)
    if lo >= -vi and hi <= vi:
        # interval inside the convex well: the chord
        s, c0 = _line_through(lo, hi, params)
        pieces = (Piece(PieceKind.LINEAR, lo, hi, s, c0),)
        return Envelope(lo, hi, orientation, pieces, params)

    # interval straddles the well: one linear bridge, contacts tangent or
    # anchored at the interval ends
    candidates = []
    if lo <= -vm and hi >= vm:
        # horizontal double tangent between the two maxima
        candidates.append(_make_pieces(lo, hi, [(-vm, vm, 0.0, sp.g_max)], params))
    if lo < -vi:
        # left contact tangent, right end anchored at hi
        p = _tangency_anchored(hi, flux_G(hi, params), lo, min(-vi, hi), params)
        if p is not None:
            s, c0 = _tangent_line(p, params)
            candidates.append(_make_pieces(lo, hi, [(p, hi, s, c0)], params))
    if hi > vi:
        # left end anchored at lo, right contact tangent
        q = _tangency_anchored(lo, flux_G(lo, params), max(vi, lo), hi, params)
        if q is not None:
            s, c0 = _tangent_line(q, params)
            candidates.append(_make_pieces(lo, hi, [(lo, q, s, c0)], params))
    s, c0 = _line_through(lo, hi, params)
    candidates.append((Piece(PieceKind.LINEAR, lo, hi, s, c0),))

    env = _select(candidates, lo, hi, params, orientation)
    if env is None:
        env = _hull_fallback(lo, hi, params, orientation)
    return env


def convex_envelope(lo: float, hi: float, params: ModelParams) -> Envelope:
    """Lower convex envelope of the symmetric flux over [lo, hi]: the largest
    convex function dominated by G there. Equals the reflection of the upper
    concave envelope of -G."""
    _require_symmetric(params)
    _check_interval(lo, hi)
    orientation = Orientation.CONVEX_LOWER

    if convexity_class(params) is not ConvexityClass.MIXED:
        # concave flux: the convex envelope is the chord
        s, c0 = _line_through(lo, hi, params)
        pieces = (Piece(PieceKind.LINEAR, lo, hi, s, c0),)
        return Envelope(lo, hi, orientation, pieces, params)

    sp = special_points(params)
    vi = sp.v_infl
    if lo >= -vi and hi <= vi:
        # interval inside the convex well
        pieces = (Piece(PieceKind.FOLLOWS_FLUX, lo, hi),)
        return Envelope(lo, hi, orientation, pieces, params)
    if hi <= -vi or lo >= vi:
        # interval inside a concave branch: the chord
        s, c0 = _line_through(lo, hi, params)
        pieces = (Piece(PieceKind.LINEAR, lo, hi, s, c0),)
        return Envelope(lo, hi, orientation, pieces, params)

    # linear bridges are always anchored at an interval end (a line cannot be
    # tangent from below at two points of a single convex region)
    candidates = []
    q1 = q2 = None
    if lo < -vi:
        q1 = _tangency_anchored(lo, flux_G(lo, params), -vi, min(vi, hi), params)
    if hi > vi:
        q2 = _tangency_anchored(hi, flux_G(hi, params), max(-vi, lo), vi, params)
    if lo < -vi and hi <= vi and q1 is not None:
        s, c0 = _tangent_line(q1, params)
        candidates.append(_make_pieces(lo, hi, [(lo, q1, s, c0)], params))
    if lo >= -vi and hi > vi and q2 is not None:
        s, c0 = _tangent_line(q2, params)
        candidates.append(_make_pieces(lo, hi, [(q2, hi, s, c0)], params))
    if lo < -vi and hi > vi and q1 is not None and q2 is not None and q1 < q2:
        s1, c1 = _tangent_line(q1, params)
        s2, c2 = _tangent_line(q2, params)
        candidates.append(
            _make_pieces(lo, hi, [(lo, q1, s1, c1), (q2, hi, s2, c2)], params)
        )
    s, c0 = _line_through(lo, hi, params)
    candidates.append((Piece(PieceKind.LINEAR, lo, hi, s, c0),))

    env = _select(candidates, lo, hi, params, orientation)
    if env is None:
        env = _hull_fallback(lo, hi, params, orientation)
    return env


def envelope_derivative_inverse(env: Envelope, slope: float) -> float:
    """Density in [env.lo, env.hi] where the envelope derivative equals slope.

    On LINEAR pieces (where the derivative is constant) the returned endpoint
    is the one on the spatial left of the induced discontinuity: the upper
    density end for the concave orientation, the lower one for the convex.
    """
    d_lo, d_hi = env.derivative_range()
    if slope < d_lo - 1e-9 or slope > d_hi + 1e-9:
        raise ValueError(
            f"slope {slope} outside envelope derivative range [{d_lo}, {d_hi}]"
        )
    slope = min(max(slope, d_lo), d_hi)
    concave = env.orientation is Orientation.CONCAVE_UPPER
    # scan from the spatial-left side so that a slope matching at a piece
    # joint resolves to the left limit of the induced profile: for the
    # concave orientation space ascends as density falls, so scan high to low
    pieces = reversed(env.pieces) if concave else env.pieces
    for p in pieces:
        if p.kind is PieceKind.LINEAR:
            lo_s = hi_s = p.slope
        else:
            lo_s = flux_G_deriv(p.lo, env.params, 1)
            hi_s = flux_G_deriv(p.hi, env.params, 1)
        s_min, s_max = (min(lo_s, hi_s), max(lo_s, hi_s))
        if s_min - 1e-12 <= slope <= s_max + 1e-12:
            if p.kind is PieceKind.LINEAR:
                return p.hi if concave else p.lo
            if abs(hi_s - lo_s) < 1e-14:
                return p.lo
            f = lambda v: flux_G_deriv(v, env.params, 1) - slope
            fa, fb = f(p.lo), f(p.hi)
            if fa * fb > 0.0:
                return p.lo if abs(fa) < abs(fb) else p.hi
            return brentq(f, p.lo, p.hi, xtol=1e-13)
    # numerical corner: clamp to the matching interval end
    return env.lo if abs(slope - env.derivative(env.lo)) < abs(
        slope - env.derivative(env.hi)
    ) else env.hi
