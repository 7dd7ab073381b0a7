"""Parametric curve solver for the forced curve-shortening flow and its rotated-graph form.

The evolution moves each point by u''(x) (kappa + (n-1) xi) along the left
normal e^{i pi/2} gamma'; for graphs it reduces to the graph flow, and after
swapping x and y an invertible graph obeys the same equation with u''
composed with the height function. Curvature comes from the circumscribed
circle of point triples and xi from the exact discrete rate of the polar
angle, so neither quantity suffers branch cuts or vertical-slope overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import PchipInterpolator
from shapely.geometry import LineString

from .errors import (DegenerateStencilError, NonfiniteStateError,
                     SelfIntersectionError)
from .geometry import KahlerData, PotentialProfile
from .graph_flow import CFL_DIFFUSIVE, full_gradient

CURVE_CFL = 0.2


# ---------------------------------------------------------------------------
# discrete differential geometry (shared with the stationary-curve residuals)
# ---------------------------------------------------------------------------

def tangents_nonuniform(pts: np.ndarray) -> np.ndarray:
    """Unit tangents at interior points, second order on non-uniform spacing."""
    d1 = pts[1:-1] - pts[:-2]
    d2 = pts[2:] - pts[1:-1]
    h1 = np.hypot(d1[:, 0], d1[:, 1])[:, None]
    h2 = np.hypot(d2[:, 0], d2[:, 1])[:, None]
    if np.any(h1 == 0) or np.any(h2 == 0):
        raise DegenerateStencilError("coincident consecutive points")
    t = h1 * h1 * d2 / h2 + h2 * h2 * d1 / h1
    norm = np.hypot(t[:, 0], t[:, 1])[:, None]
    if np.any(norm == 0):
        raise DegenerateStencilError("degenerate three-point stencil")
    return t / norm


def menger_curvature(pts: np.ndarray) -> np.ndarray:
    """Signed curvature at interior points from the circumscribed circle.

    Positive for left turns, matching d/ds arctan(gamma') with the left
    normal convention; exact on circles regardless of spacing.
    """
    e1 = pts[1:-1] - pts[:-2]
    e2 = pts[2:] - pts[1:-1]
    e3 = pts[2:] - pts[:-2]
    l1 = np.hypot(e1[:, 0], e1[:, 1])
    l2 = np.hypot(e2[:, 0], e2[:, 1])
    l3 = np.hypot(e3[:, 0], e3[:, 1])
    if np.any(l1 == 0) or np.any(l2 == 0) or np.any(l3 == 0):
        raise DegenerateStencilError("coincident points in curvature stencil")
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    return 2.0 * cross / (l1 * l2 * l3)


def polar_angle_rate(pts: np.ndarray) -> np.ndarray:
    """xi = d/ds arctan(y/x) at interior points, via the exact cross-product form.

    Computed as (x t_y - y t_x)/(x^2 + y^2) with t the unit tangent, which
    avoids differencing arctan values across the branch cut at the x-axis.
    """
    t = tangents_nonuniform(pts)
    x, y = pts[1:-1, 0], pts[1:-1, 1]
    return (x * t[:, 1] - y * t[:, 0]) / (x * x + y * y)


def curvature_and_xi(pts: np.ndarray, i: int) -> tuple:
    """(kappa, xi) at one interior index of a polyline."""
    if not 0 < i < len(pts) - 1:
        raise IndexError("curvature needs an interior index")
    window = pts[i - 1:i + 2]
    return float(menger_curvature(window)[0]), float(polar_angle_rate(window)[0])


def polyline_is_simple(pts: np.ndarray) -> bool:
    return LineString(pts).is_simple


def enclosed_area(pts: np.ndarray) -> float:
    """Shoelace area of the polyline closed by the chord between its endpoints."""
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


# ---------------------------------------------------------------------------
# curve states
# ---------------------------------------------------------------------------

@dataclass
class CurveState:
    """Open polyline in the strip 1 <= x <= a with pinned endpoints."""

    pts: np.ndarray
    t: float
    kd: KahlerData
    profile: PotentialProfile
    closed: bool = False
    target_spacing: float = field(default=None)

    def __post_init__(self):
        self.pts = np.ascontiguousarray(self.pts, dtype=float)
        if self.pts.ndim != 2 or self.pts.shape[1] != 2 or self.pts.shape[0] < 3:
            raise ValueError("pts must be (M, 2) with M >= 3")
        if self.closed:
            raise ValueError("closed curves are out of scope here")
        seg = np.hypot(*np.diff(self.pts, axis=0).T)
        if np.any(seg == 0):
            raise ValueError("consecutive points must be distinct")
        if self.target_spacing is None:
            self.target_spacing = float(np.mean(seg))

    def audit_simple(self):
        if not polyline_is_simple(self.pts):
            raise SelfIntersectionError(f"polyline self-intersects at t={self.t}")
        return True

    def arc_lengths(self) -> np.ndarray:
        seg = np.hypot(*np.diff(self.pts, axis=0).T)
        return np.concatenate([[0.0], np.cumsum(seg)])


def curve_from_graph(state_or_xs, f=None, kd=None, profile=None, t=0.0) -> CurveState:
    """Sample a graph state (or raw arrays) into a CurveState."""
    if f is None:
        g = state_or_xs
        pts = np.column_stack([g.xs, g.f])
        return CurveState(pts=pts, t=g.t, kd=g.kd, profile=g.profile)
    pts = np.column_stack([np.asarray(state_or_xs, float), np.asarray(f, float)])
    return CurveState(pts=pts, t=t, kd=kd, profile=profile)


def curve_cfl_dt(state: CurveState, c: float = CURVE_CFL) -> float:
    """Largest safe step from the minimum spacing and the largest diffusion weight."""
    seg = np.hypot(*np.diff(state.pts, axis=0).T)
    max_uxx = float(np.max(state.profile(np.clip(state.pts[:, 0], 1.0, state.kd.a))))
    if max_uxx <= 0:
        return np.inf
    return c * float(seg.min()) ** 2 / max_uxx


def normal_velocity(state: CurveState):
    """(speeds, normals) of the forced flow at interior points."""
    pts = state.pts
    kappa = menger_curvature(pts)
    xi = polar_angle_rate(pts)
    tang = tangents_nonuniform(pts)
    normals = np.column_stack([-tang[:, 1], tang[:, 0]])  # e^{i pi/2} gamma'
    uxx = state.profile(np.clip(pts[1:-1, 0], 1.0, state.kd.a))
    return uxx * (kappa + (state.kd.n - 1) * xi), normals


def resample_arclength(pts: np.ndarray, target_spacing: float,
                       min_factor: float = 0.5, max_factor: float = 2.0) -> np.ndarray:
    """Re-equalize arc length with monotone-cubic interpolation, adapting node count.

    Pure reparametrization: endpoints are kept exactly and normal motion is
    untouched to the interpolation order.
    """
    seg = np.hypot(*np.diff(pts, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    m = int(np.clip(round(total / target_spacing) + 1, 3, None))
    spacing = total / (m - 1)
    if spacing < min_factor * target_spacing:
        m = int(total / (min_factor * target_spacing)) + 1
    elif spacing > max_factor * target_spacing:
        m = int(total / (max_factor * target_spacing)) + 1
    m = max(m, 3)
    s_new = np.linspace(0.0, total, m)
    fx = PchipInterpolator(s, pts[:, 0])
    fy = PchipInterpolator(s, pts[:, 1])
    out = np.column_stack([fx(s_new), fy(s_new)])
    out[0], out[-1] = pts[0], pts[-1]
    return out


def step_curve(state: CurveState, dt: float, resample: bool = True) -> CurveState:
    """One forward-Euler move along the normal followed by tangential redistribution."""
    if dt > curve_cfl_dt(state) * (1 + 1e-12):
        raise ValueError(f"dt={dt} exceeds the CFL limit {curve_cfl_dt(state)}")
    speeds, normals = normal_velocity(state)
    pts = state.pts.copy()
    pts[1:-1] += dt * speeds[:, None] * normals
    if not np.all(np.isfinite(pts)):
        raise NonfiniteStateError(state.t + dt)
    seg = np.hypot(*np.diff(pts, axis=0).T)
    if resample or np.any(seg < 0.1 * state.target_spacing):
        pts = resample_arclength(pts, state.target_spacing)
    return replace(state, pts=pts, t=state.t + dt)


def run_curve(state: CurveState, t_end: float, audit_every: int = 50) -> CurveState:
    """Advance to t_end with CFL-limited steps and periodic simplicity audits."""
    k = 0
    while state.t < t_end - 1e-15:
        dt = min(curve_cfl_dt(state), t_end - state.t)
        state = step_curve(state, dt)
        k += 1
        if audit_every and k % audit_every == 0:
            state.audit_simple()
    state.audit_simple()
    return state


# ---------------------------------------------------------------------------
# rotated graphs x = h(y)
# ---------------------------------------------------------------------------

@dataclass
class RotatedGraphState:
    """Graph x = h(y) over a y-window, evolving by the x<->y swapped equation."""

    ys: np.ndarray
    h: np.ndarray
    t: float
    kd: KahlerData
    profile: PotentialProfile

    def __post_init__(self):
        self.ys = np.ascontiguousarray(self.ys, dtype=float)
        self.h = np.ascontiguousarray(self.h, dtype=float)
        dy = np.diff(self.ys)
        if np.any(dy <= 0) or abs(dy.max() - dy.min()) > 1e-9 * dy.mean():
            raise ValueError("y-grid must be uniform and increasing")
        if np.any(self.h < 1.0 - 1e-9) or np.any(self.h > self.kd.a + 1e-9):
            raise ValueError("h must stay inside [1, a]")

    @property
    def dy(self) -> float:
        return float(self.ys[1] - self.ys[0])


def rotated_rhs_core(h: np.ndarray, ys: np.ndarray, profile, n: int, dy: float) -> np.ndarray:
    """u''(h) (h''/(1+h'^2) + (n-1)(y h' - h)/(y^2+h^2)); endpoints move only if u''(h)>0 there."""
    out = np.zeros_like(h)
    hi = h[..., 1:-1]
    yi = ys[1:-1]
    hp = (h[..., 2:] - h[..., :-2]) / (2.0 * dy)
    hpp = (h[..., 2:] - 2.0 * hi + h[..., :-2]) / (dy * dy)
    uxx = profile(np.clip(hi, 1.0, profile.a))
    out[..., 1:-1] = uxx * (hpp / (1.0 + hp * hp)
                            + (n - 1) * (yi * hp - hi) / (yi * yi + hi * hi))
    return out


def rotated_stable_dt(state: RotatedGraphState, c: float = CFL_DIFFUSIVE) -> float:
    hp = full_gradient(state.h, state.dy)
    uxx = state.profile(np.clip(state.h, 1.0, state.kd.a))
    max_uxx = float(np.max(uxx))
    if max_uxx <= 0:
        return np.inf
    dt = c * state.dy**2 * (1.0 + float(np.min(hp * hp))) / max_uxx
    speed = float(np.max(uxx * (state.kd.n - 1) * np.abs(state.ys) /
                         (state.ys**2 + state.h**2)))
    if speed > 0:
        dt = min(dt, 0.5 * state.dy / speed)
    return dt


def step_rotated(state: RotatedGraphState, dt: float) -> RotatedGraphState:
    """RK4 step of the rotated equation with Dirichlet window ends."""
    if dt > rotated_stable_dt(state) * (1 + 1e-12):
        raise ValueError("dt exceeds the rotated CFL limit")
    ys, dy, n, prof = state.ys, state.dy, state.kd.n, state.profile
    h0, hN = state.h[0], state.h[-1]

    def rhs(h):
        return rotated_rhs_core(h, ys, prof, n, dy)

    h = state.h
    k1 = rhs(h)
    h1 = h + 0.5 * dt * k1
    h1[0], h1[-1] = h0, hN
    k2 = rhs(h1)
    h2 = h + 0.5 * dt * k2
    h2[0], h2[-1] = h0, hN
    k3 = rhs(h2)
    h3 = h + dt * k3
    h3[0], h3[-1] = h0, hN
    k4 = rhs(h3)
    out = h + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    out[0], out[-1] = h0, hN
    if not np.all(np.isfinite(out)):
        raise NonfiniteStateError(state.t + dt)
    return replace(state, h=out, t=state.t + dt)


def run_rotated(state: RotatedGraphState, t_end: float) -> RotatedGraphState:
    while state.t < t_end - 1e-15:
        dt = min(rotated_stable_dt(state), t_end - state.t)
        state = step_rotated(state, dt)
    return state
