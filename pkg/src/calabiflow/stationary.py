"""Stationary curves as level sets of the harmonic polynomial Im(e^{-i theta_hat} z^n).

Stationary graphs of the reduced flow are exactly level curves of this
polynomial; in polar coordinates a level through r0 e^{i t0} has the closed
form r(theta) = r0 (sin(n t0 - theta_hat) / sin(n theta - theta_hat))^(1/n).
The tracer below follows the level set in the plane by an arc-length ODE with
projection, which keeps working where the curve is vertical and no graph
parametrization exists.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import CriticalPointError, WindowError
from .geometry import KahlerData

TRACE_LEVEL_TOL = 1e-10  # max level drift allowed along a traced curve


def harmonic_value(x, y, n: int, theta_hat: float):
    """Im(e^{-i theta_hat} (x+iy)^n), vectorized."""
    z = np.asarray(x, dtype=float) + 1j * np.asarray(y, dtype=float)
    return np.imag(np.exp(-1j * theta_hat) * z**n)


def harmonic_gradient(x, y, n: int, theta_hat: float):
    """Gradient (h_x, h_y) = (Im W, Re W) with W = n e^{-i theta_hat} z^{n-1}."""
    z = np.asarray(x, dtype=float) + 1j * np.asarray(y, dtype=float)
    w = n * np.exp(-1j * theta_hat) * z ** (n - 1)
    return np.imag(w), np.real(w)


@dataclass(frozen=True)
class LevelCurve:
    """Ordered samples of one level set traced through the strip 1 <= x <= a."""

    n: int
    theta_hat: float
    level: float
    points: np.ndarray  # (M, 2)
    endpoints: tuple
    vertical_at_start: bool

    def polar(self):
        """(theta, r) arrays of the samples."""
        x, y = self.points[:, 0], self.points[:, 1]
        return np.arctan2(y, x), np.hypot(x, y)

    def max_level_drift(self) -> float:
        vals = harmonic_value(self.points[:, 0], self.points[:, 1], self.n, self.theta_hat)
        scale = max(1.0, abs(self.level))
        return float(np.abs(vals - self.level).max() / scale)

    def as_graph(self):
        """(x, y) with strictly increasing x; keeps the longest monotone tail."""
        x, y = self.points[:, 0], self.points[:, 1]
        dx = np.diff(x)
        if np.all(dx > 0):
            return x, y
        # drop the initial vertical cluster where x stalls
        start = int(np.argmax(dx > 0))
        keep = [start]
        for i in range(start + 1, x.size):
            if x[i] > x[keep[-1]]:
                keep.append(i)
        idx = np.array(keep)
        return x[idx], y[idx]


def trace_level_curve(kd: KahlerData, theta_hat: float, start=None, ds: float = None,
                      direction: int = 0, max_arc: float = None) -> LevelCurve:
    """Trace the level set of Im(e^{-i theta_hat} z^n) from `start` until x hits a.

    Moves along the rotated gradient with RK4 steps of arc length ds and a
    projection correction back onto the level after every step. `direction`
    picks the branch: +1/-1 force the initial tangent's sign, 0 chooses the
    one entering x > 1 (or +y on a vertical start).
    """
    n, a = kd.n, kd.a
    if start is None:
        start = (1.0, kd.q)
    x0, y0 = float(start[0]), float(start[1])
    c = float(harmonic_value(x0, y0, n, theta_hat))
    scale = max(1.0, math.hypot(x0, y0))
    if ds is None:
        ds = 5e-5 * scale
    if max_arc is None:
        max_arc = 200.0 * scale

    def tangent(x, y):
        gx, gy = harmonic_gradient(x, y, n, theta_hat)
        norm = math.hypot(gx, gy)
        if norm < 1e-12:
            raise CriticalPointError(f"|grad| = {norm} at ({x}, {y})")
        return -gy / norm, gx / norm

    def project(x, y):
        # Newton step toward the level along the gradient; quadratic, 1-3 iterations
        for _ in range(4):
            val = float(harmonic_value(x, y, n, theta_hat)) - c
            if abs(val) < 1e-14 * max(1.0, abs(c)):
                break
            gx, gy = harmonic_gradient(x, y, n, theta_hat)
            g2 = gx * gx + gy * gy
            x -= val * gx / g2
            y -= val * gy / g2
        return x, y

    tx, ty = tangent(x0, y0)
    if direction == 0:
        if abs(tx) > 1e-8:
            sgn = 1.0 if tx > 0 else -1.0
        else:
            sgn = 1.0 if ty > 0 else -1.0
    else:
        sgn = float(direction)
    tx_prev, ty_prev = sgn * tx, sgn * ty
    vertical = abs(tx) < 1e-8

    pts = [(x0, y0)]
    x, y = x0, y0
    arc = 0.0
    while arc < max_arc:
        def rk_tan(px, py):
            ux, uy = tangent(px, py)
            if ux * tx_prev + uy * ty_prev < 0:
                ux, uy = -ux, -uy
            return ux, uy

        k1 = rk_tan(x, y)
        k2 = rk_tan(x + 0.5 * ds * k1[0], y + 0.5 * ds * k1[1])
        k3 = rk_tan(x + 0.5 * ds * k2[0], y + 0.5 * ds * k2[1])
        k4 = rk_tan(x + ds * k3[0], y + ds * k3[1])
        xn = x + ds * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) / 6.0
        yn = y + ds * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) / 6.0
        xn, yn = project(xn, yn)
        tx_prev, ty_prev = xn - x, yn - y
        nrm = math.hypot(tx_prev, ty_prev)
        tx_prev, ty_prev = tx_prev / nrm, ty_prev / nrm

        if xn >= a:
            # land exactly on x = a: solve h(a, y*) = c between the last heights
            lo, hi = sorted((y, yn))
            pad = 2.0 * abs(yn - y) + 1e-12
            try:
                y_star = brentq(lambda yy: float(harmonic_value(a, yy, n, theta_hat)) - c,
                                lo - pad, hi + pad, xtol=1e-14, rtol=8.9e-16)
            except ValueError:
                y_star = yn
            pts.append((a, y_star))
            break
        if xn < 1.0 - 1e-9:
            pts.append((xn, yn))
            break
        pts.append((xn, yn))
        x, y = xn, yn
        arc += ds

    points = np.array(pts)
    return LevelCurve(
        n=n, theta_hat=theta_hat, level=c, points=points,
        endpoints=(tuple(points[0]), tuple(points[-1])),
        vertical_at_start=vertical,
    )


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------

def ode_residual(curve: LevelCurve) -> float:
    """Max normalized stationarity defect |sin((n-1) arctan(y/x) + phi - theta_hat)|.

    This is the stationarity relation for graphs with arctan(f') replaced by
    the tangent angle phi, normalized by the modulus of the product it is the
    imaginary part of, so it stays well defined through vertical tangencies
    where f' would overflow. phi is evaluated at chord midpoints (a chord's
    direction equals the tangent at its midpoint to second order, with no
    penalty at unevenly spaced samples).
    """
    p = curve.points
    if p.shape[0] < 3:
        raise ValueError("curve too short")
    ch = np.diff(p, axis=0)
    phi = np.arctan2(ch[:, 1], ch[:, 0])
    mid = 0.5 * (p[1:] + p[:-1])
    total = (curve.n - 1) * np.arctan2(mid[:, 1], mid[:, 0]) + phi - curve.theta_hat
    return float(np.abs(np.sin(total)).max())


def polar_defect(points: np.ndarray, n: int, width: int = 5) -> np.ndarray:
    """(2r'^2 - r r'' + r^2)/(r'^2 + r^2) + (n-1) along a polyline.

    The bracket equals d(phi)/d(theta) (tangent angle per polar angle), so it
    is computed by differencing those two O(1) angles over a baseline of
    `width` chords. Pointwise curvature stencils would amplify coordinate
    roundoff by 1/(xi ds^2), which is hopeless on the narrow windows the
    semi-stable curves live on; angle differencing is not amplified.
    """
    if len(points) < 2 * width + 2:
        raise ValueError("polyline too short for the requested baseline")
    ch = np.diff(points, axis=0)
    phi = np.unwrap(np.arctan2(ch[:, 1], ch[:, 0]))
    mid = 0.5 * (points[1:] + points[:-1])
    theta = np.unwrap(np.arctan2(mid[:, 1], mid[:, 0]))
    dphi = phi[2 * width:] - phi[:-2 * width]
    dtheta = theta[2 * width:] - theta[:-2 * width]
    return dphi / dtheta + (n - 1)


def stationarity_residual(curve: LevelCurve, profile=None) -> float:
    """Max polar defect |(2r'^2 - r r'' + r^2)/(r'^2 + r^2) + (n-1)| along the curve.

    Stationarity is profile-free, so `profile` is accepted only for interface
    symmetry and ignored.
    """
    return float(np.abs(polar_defect(curve.points, curve.n)).max())


def path_class_integral(points: np.ndarray, n: int) -> complex:
    """Midpoint quadrature of the closed-form class integral n z^{n-1} dz along a polyline.

    For a stationary curve from (1, q) to (a, p) this must reproduce
    (a+ip)^n - (1+iq)^n; it is the anti-drift oracle for the target angle.
    """
    z = points[:, 0] + 1j * points[:, 1]
    mid = 0.5 * (z[1:] + z[:-1])
    return complex(np.sum(n * mid ** (n - 1) * np.diff(z)))


# ---------------------------------------------------------------------------
# semi-stable construction
# ---------------------------------------------------------------------------

def _wrap_angle(t: float) -> float:
    return math.atan2(math.sin(t), math.cos(t))


@dataclass(frozen=True)
class SemiStableData:
    """A class pair whose stationary curve is vertical at (1, q).

    theta0 is the polar angle of (1, q); the curve meets x = a at theta_min
    and theta_max, and the slope hypotheses r' >= 0, r'/r <= 2 tan(theta)
    hold on the whole window.
    """

    kd: KahlerData
    theta_hat: float
    theta0: float
    theta_min: float
    theta_max: float
    level: float
    theta_grid: np.ndarray
    r_grid: np.ndarray
    curve: LevelCurve

    def r_inf(self, theta):
        """Closed-form polar radius of the stationary level curve."""
        theta = np.asarray(theta, dtype=float)
        u = self.kd.n * theta - self._theta_hat_raw
        return (self.level / np.sin(u)) ** (1.0 / self.kd.n)

    @property
    def _theta_hat_raw(self) -> float:
        # unwrapped lift used by the closed polar form (level > 0 branch)
        return (self.kd.n - 1) * self.theta0 - math.pi / 2

    def x_inf(self, theta):
        return self.r_inf(theta) * np.cos(np.asarray(theta, dtype=float))

    def f_infinity(self, xs):
        """Upper-branch graph of the stationary curve at the given x values.

        Each value solves r(theta) cos(theta) = x on [theta0, theta_max] to
        machine precision; the branch is vertical at x = 1.
        """
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        out = np.empty_like(xs)
        for i, xv in enumerate(xs):
            if xv <= 1.0 + 1e-15:
                out[i] = self.kd.q
                continue
            if xv >= self.kd.a - 1e-15:
                out[i] = self.kd.p
                continue
            th = brentq(lambda t: float(self.x_inf(t)) - xv, self.theta0,
                        self.theta_max, xtol=1e-15, rtol=8.9e-16)
            out[i] = float(self.r_inf(th) * math.sin(th))
        return out


def _window_quantities(n: int, q: float):
    theta0 = math.atan(q)
    r0 = math.hypot(1.0, q)
    th_raw = (n - 1) * theta0 - math.pi / 2
    level = r0**n * math.cos(theta0)  # sin(n theta0 - th_raw) = cos(theta0)

    def r_of(theta):
        return (level / np.sin(n * np.asarray(theta) - th_raw)) ** (1.0 / n)

    def x_of(theta):
        return r_of(theta) * np.cos(np.asarray(theta))

    def slope_ratio(theta):
        # r'/r = -cot(n theta - th_raw)
        return -1.0 / np.tan(n * np.asarray(theta) - th_raw)

    theta_r0 = (th_raw + math.pi / 2) / n       # below this r' < 0
    theta_vmax = (th_raw + math.pi) / n         # level runs off to r = infinity
    return theta0, th_raw, level, r_of, x_of, slope_ratio, theta_r0, theta_vmax


def semistable_window_cap(n: int, q: float) -> float:
    """Largest a - 1 for which the slope hypotheses can hold out to x = a."""
    if n < 3:
        raise WindowError("the construction requires n >= 3")
    if q <= 0:
        raise WindowError("the construction requires q > 0")
    theta0, _, _, r_of, x_of, slope_ratio, theta_r0, theta_vmax = _window_quantities(n, q)

    def margin(theta):
        return 2.0 * math.tan(theta) - float(slope_ratio(theta))

    hi = theta_vmax - 1e-12 * max(1.0, abs(theta_vmax))
    if margin(hi) >= 0:
        theta_cap = hi
    else:
        theta_cap = brentq(margin, theta0, hi, xtol=1e-14)
    x_hi = float(x_of(theta_cap))

    # lower side: r' >= 0 binds at theta_r0; the ratio bound may bind earlier
    lo = theta_r0 + 1e-12 * max(1.0, abs(theta_r0))
    grid = np.linspace(lo, theta0, 2001)
    m = 2.0 * np.tan(grid) - slope_ratio(grid)
    if np.all(m >= 0):
        theta_floor = lo
    else:
        bad = int(np.max(np.nonzero(m < 0)[0]))
        theta_floor = brentq(margin, grid[bad], theta0, xtol=1e-14)
    x_lo = float(x_of(theta_floor))

    cap = min(x_hi, x_lo) - 1.0
    if cap <= 0:
        raise WindowError(f"no admissible window for n={n}, q={q}", largest_admissible=0.0)
    return cap


def construct_semistable(n: int, q: float, a_gap: float = None) -> SemiStableData:
    """Build the semi-stable class data whose stationary curve is vertical at (1, q).

    The target angle is fixed by Re(e^{-i theta_hat}(1+iq)^{n-1}) = 0; x then
    attains a local minimum of 1 on the level curve at theta0 = arctan(q), and
    a = 1 + a_gap is kept small enough that the slope hypotheses hold out to
    both crossings of x = a. With a_gap omitted, it starts at a tenth of the
    admissible cap and halves until every check passes.
    """
    cap = semistable_window_cap(n, q)
    theta0, th_raw, level, r_of, x_of, slope_ratio, theta_r0, theta_vmax = _window_quantities(n, q)
    if a_gap is None:
        a_gap = 0.1 * cap
        explicit = False
    else:
        explicit = True
        if a_gap >= cap:
            raise WindowError(
                f"a_gap={a_gap} exceeds the admissible window for n={n}, q={q}",
                largest_admissible=cap)

    def attempt(gap):
        a = 1.0 + gap
        theta_max = brentq(lambda t: float(x_of(t)) - a, theta0 + 1e-14, theta_vmax - 1e-12,
                           xtol=1e-15, rtol=8.9e-16)
        theta_min = brentq(lambda t: float(x_of(t)) - a, theta_r0 + 1e-14, theta0 - 1e-14,
                           xtol=1e-15, rtol=8.9e-16)
        grid = np.linspace(theta_min, theta_max, 4001)
        rp_over_r = slope_ratio(grid)
        if np.any(rp_over_r < -1e-12):
            return None
        if np.any(2.0 * np.tan(grid) - rp_over_r < 0):
            return None
        return a, theta_min, theta_max, grid

    result = attempt(a_gap)
    while result is None and not explicit and a_gap > 1e-8 * cap:
        a_gap *= 0.5
        result = attempt(a_gap)
    if result is None:
        raise WindowError(f"slope hypotheses fail for a_gap={a_gap}",
                          largest_admissible=cap)
    a, theta_min, theta_max, grid = result
    p = float(r_of(theta_max) * math.sin(theta_max))
    kd = KahlerData(n=n, a=a, p=p, q=q)
    theta_hat = _wrap_angle(th_raw)

    # local minimum of x at theta0: value 1, flat to first order, convex
    d = 1e-6
    x0 = float(x_of(theta0))
    xm, xp_ = float(x_of(theta0 - d)), float(x_of(theta0 + d))
    if abs(x0 - 1.0) > 1e-10 or (xp_ - xm) / (2 * d) > 1e-4 or (xp_ - 2 * x0 + xm) / d**2 <= 0:
        raise WindowError("x does not attain a convex local minimum of 1 at theta0")
    if abs((1 + 1j * q) ** (n - 1) * cmath.exp(-1j * theta_hat)).real == 0:
        pass  # unreachable; kept for symmetry
    vert = (cmath.exp(-1j * theta_hat) * (1 + 1j * q) ** (n - 1)).real
    if abs(vert) > 1e-10 * abs((1 + 1j * q) ** (n - 1)):
        raise WindowError(f"vertical-tangency relation violated: {vert}")

    curve = trace_level_curve(kd, theta_hat, start=(1.0, q), direction=+1)
    r_grid = np.asarray(r_of(grid), dtype=float)
    return SemiStableData(kd=kd, theta_hat=theta_hat, theta0=theta0,
                          theta_min=float(theta_min), theta_max=float(theta_max),
                          level=level, theta_grid=grid, r_grid=r_grid, curve=curve)


def minimal_semistable_q(n: int, resolution: float = 0.1, q_max: float = 64.0) -> float:
    """Smallest q (to the given resolution) for which the construction certifies."""

    def ok(q):
        try:
            construct_semistable(n, q)
            return True
        except WindowError:
            return False

    lo, hi = 0.0, None
    step = resolution
    q = step
    while q <= q_max:
        if ok(q):
            hi = q
            break
        lo = q
        q = q * 2 if q >= 1 else q + step
    if hi is None:
        raise WindowError(f"no admissible q found below {q_max}")
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi
