"""Explicit barrier families with their time laws and numerical certificates.

Three families confine the evolving graphs: traveling hyperbolas x = g_t(y)
(rotated-graph subsolutions driving the finite-time pinch), shrinking circles
(strict supersolutions from above), and polar interpolants sweeping out to a
stationary curve (the infinite-time squeeze from below). Each family carries
a `verify_*` operation that certifies its differential inequality on a finite
grid; certification is numerical, not symbolic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import ExpiredBarrierError, ProfileError
from .geometry import PotentialProfile

HYPERBOLA_VARIANTS = ("ivp", "proof")
CERT_GRID_DEFAULT = 512
HYPERBOLA_CERT_FLOOR = -1e-10


@dataclass(frozen=True)
class CertReport:
    """Outcome of one grid certification of a differential inequality."""

    kind: str
    params: dict
    min_residual: float
    argmin: tuple
    grid: tuple
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "params": self.params,
            "min_residual": self.min_residual,
            "argmin": list(self.argmin),
            "grid": list(self.grid),
            "pass": self.passed,
            **({"extra": self.extra} if self.extra else {}),
        }


# ---------------------------------------------------------------------------
# traveling hyperbolas
# ---------------------------------------------------------------------------

def _implicit_b_relation(b, b_inf):
    """Antiderivative of db / ((b - b_inf) b^3), the separable closed form."""
    return (b_inf**2 + 2 * b**2 * np.log(b - b_inf) + 2 * b_inf * b
            - 2 * b**2 * np.log(b)) / (2 * b_inf**3 * b**2)


@dataclass
class HyperbolaBarrier:
    """Family g_t(y) = sqrt(m y^2 + b(t)^2), m = (a^2-b^2)/(a^2-b_inf^2).

    b decreases from b0 toward the asymptote b_inf under
    db/dt = -C1 (b - b_inf) b^3. Two readings of the rate constant's
    denominator exist (see `variant`); both are computed exactly from
    (k, a, b0, b_inf) with no free constant.
    """

    a: float
    k: float
    n: int
    b_inf: float
    b0: float
    variant: str = "ivp"
    _sol: object = field(default=None, repr=False, compare=False)
    _t_hi: float = field(default=0.0, repr=False, compare=False)

    def __post_init__(self):
        if not 1.0 < self.b_inf < self.b0 < self.a:
            raise ValueError(
                f"need 1 < b_inf < b0 < a, got ({self.b_inf}, {self.b0}, {self.a})")
        if self.variant not in HYPERBOLA_VARIANTS:
            raise ValueError(f"variant must be one of {HYPERBOLA_VARIANTS}")
        if self.k <= 0:
            raise ValueError("k must be positive")

    @property
    def C1(self) -> float:
        a, bi = self.a, self.b_inf
        num = self.k * bi * (bi - 1.0) * (a * a - self.b0**2)
        if self.variant == "ivp":
            den = a * (a * a - bi * bi) * (2 * a * a - bi * bi) ** 2
        else:
            den = a * (a * a - bi * bi) ** 2 * (2 * a * a - bi * bi)
        return num / den

    @property
    def C0(self) -> float:
        return float(_implicit_b_relation(self.b0, self.b_inf))

    @property
    def y_edge(self) -> float:
        return math.sqrt(self.a**2 - self.b_inf**2)

    def _rhs(self, t, b):
        return -self.C1 * (b - self.b_inf) * b**3

    def _ensure_solved(self, t_hi: float):
        if self._sol is not None and t_hi <= self._t_hi:
            return
        t_hi = max(t_hi * 2.0, 1.0)
        sol = solve_ivp(self._rhs, (0.0, t_hi), [self.b0], method="RK45",
                        rtol=1e-12, atol=1e-13 * self.b0, dense_output=True)
        if not sol.success:
            raise RuntimeError(f"b(t) integration failed: {sol.message}")
        self._sol = sol.sol
        self._t_hi = t_hi

    def b_of_t(self, t):
        """b(t) by adaptive RK integration of the rate law."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("t must be nonnegative")
        self._ensure_solved(float(np.max(t)) if t.size else 0.0)
        return self._sol(np.atleast_1d(t))[0].reshape(t.shape)

    def closed_form_residual(self, t):
        """|(-C1 t + C0) - F(b(t))| along the trajectory; the RK oracle."""
        t = np.asarray(t, dtype=float)
        b = self.b_of_t(t)
        return np.abs((-self.C1 * t + self.C0) - _implicit_b_relation(b, self.b_inf))

    def hitting_time_closed(self, b_target: float) -> float:
        """Time with b(T) = b_target from the separable closed form."""
        if not self.b_inf < b_target <= self.b0:
            raise ValueError("target must lie in (b_inf, b0]")
        return (self.C0 - float(_implicit_b_relation(b_target, self.b_inf))) / self.C1

    def hitting_time_rk(self, b_target: float) -> float:
        """Time with b(T) = b_target located by the RK event machinery."""
        t_guess = self.hitting_time_closed(b_target)

        def event(t, b):
            return b[0] - b_target

        event.terminal = True
        sol = solve_ivp(self._rhs, (0.0, 4.0 * t_guess + 1.0), [self.b0],
                        method="RK45", rtol=1e-12, atol=1e-13 * self.b0,
                        events=event, dense_output=True)
        if not sol.t_events[0].size:
            raise RuntimeError("hitting event not reached")
        return float(sol.t_events[0][0])

    def m_of_b(self, b):
        return (self.a**2 - np.asarray(b, float) ** 2) / (self.a**2 - self.b_inf**2)

    def g(self, y, b):
        return np.sqrt(self.m_of_b(b) * np.asarray(y, float) ** 2 + b * b)

    def g_derivatives(self, y, b):
        """(g, g', g'') from the exact algebra g' = m y / g, g'' = m b^2 / g^3."""
        y = np.asarray(y, dtype=float)
        m = self.m_of_b(b)
        g = np.sqrt(m * y * y + b * b)
        return g, m * y / g, m * b * b / g**3

    def g_dot(self, y, b):
        """Time derivative of g at fixed y, via the rate law for b."""
        y = np.asarray(y, dtype=float)
        bdot = -self.C1 * (b - self.b_inf) * b**3
        g = self.g(y, b)
        return b * bdot * (self.a**2 - self.b_inf**2 - y * y) / (g * (self.a**2 - self.b_inf**2))


def solve_b_ivp(hb: HyperbolaBarrier, t) -> np.ndarray:
    """b(t) for the hyperbola rate law (module-level convenience)."""
    return hb.b_of_t(t)


def hyperbola_residual_field(hb: HyperbolaBarrier, profile: PotentialProfile,
                             t_grid, y_grid):
    """g_dot - L(g) on a (t, y) grid, with L the rotated-graph operator."""
    t_grid = np.asarray(t_grid, dtype=float)
    y_grid = np.asarray(y_grid, dtype=float)
    bs = hb.b_of_t(t_grid)
    y = y_grid[None, :]
    out = np.empty((t_grid.size, y_grid.size))
    n = hb.n
    for i, b in enumerate(bs):
        g, gp, gpp = hb.g_derivatives(y_grid, float(b))
        uxx = profile(np.clip(g, 1.0, profile.a))
        lg = uxx * (gpp / (1.0 + gp * gp) + (n - 1) * (y_grid * gp - g) / (y_grid**2 + g * g))
        out[i] = hb.g_dot(y_grid, float(b)) - lg
    return out


def verify_hyperbola_subsolution(hb: HyperbolaBarrier, profile: PotentialProfile,
                                 n_t: int = CERT_GRID_DEFAULT, n_y: int = CERT_GRID_DEFAULT,
                                 t_max: float = None, refine: bool = True) -> CertReport:
    """Certify g_dot - L(g) >= 0 on [0, t_max] x [-y_edge, y_edge].

    t_max defaults to the push-out time b(T) = 2 b_inf. The profile must
    dominate k (x-1)(a-x); the certificate passes when the grid minimum stays
    above -1e-10, and one grid doubling is run to confirm the minimum is
    stable rather than grid-resonant.
    """
    if abs(profile.a - hb.a) > 1e-12:
        raise ValueError("profile and barrier must share the endpoint a")
    if profile.k < hb.k * (1 - 1e-12):
        raise ProfileError("profile lower constant is weaker than the barrier's k")
    if t_max is None:
        t_max = hb.hitting_time_closed(2.0 * hb.b_inf)

    def min_on(nt, ny):
        ts = np.linspace(0.0, t_max, nt)
        ys = np.linspace(-hb.y_edge, hb.y_edge, ny)
        res = hyperbola_residual_field(hb, profile, ts, ys)
        ij = np.unravel_index(np.argmin(res), res.shape)
        return float(res[ij]), (float(ts[ij[0]]), float(ys[ij[1]]))

    m1, arg1 = min_on(n_t, n_y)
    extra = {"variant": hb.variant, "t_max": t_max}
    if refine:
        m2, _ = min_on(2 * n_t, 2 * n_y)
        extra["min_residual_refined"] = m2
        passed = m1 >= HYPERBOLA_CERT_FLOOR and m2 >= HYPERBOLA_CERT_FLOOR
    else:
        passed = m1 >= HYPERBOLA_CERT_FLOOR
    return CertReport(
        kind="hyperbola_subsolution",
        params={"a": hb.a, "k": hb.k, "n": hb.n, "b_inf": hb.b_inf, "b0": hb.b0,
                "variant": hb.variant},
        min_residual=m1, argmin=arg1, grid=(n_t, n_y), passed=passed, extra=extra)


def hyperbola_gap(hb: HyperbolaBarrier, xs, f, t: float) -> float:
    """Horizontal clearance min(g_t(f_i) - x_i) over nodes inside the arc's heights.

    Positive means the graph stays on the small-x side of the arc; measured
    horizontally because the comparison runs in the rotated-graph frame.
    """
    xs = np.asarray(xs, float)
    f = np.asarray(f, float)
    b = float(hb.b_of_t(t))
    mask = np.abs(f) <= hb.y_edge
    if not mask.any():
        return float("inf")
    return float(np.min(hb.g(f[mask], b) - xs[mask]))


# ---------------------------------------------------------------------------
# shrinking circles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CircleBarrier:
    """Ball of initial radius R centered at (3R, y0), shrinking as sqrt(R^2 - 4Rt)."""

    R: float
    y0: float

    def __post_init__(self):
        if self.R <= 1:
            raise ValueError("R must exceed 1")

    @property
    def center(self):
        return (3.0 * self.R, self.y0)

    @property
    def lifetime(self) -> float:
        return self.R / 4.0

    def radius(self, t: float) -> float:
        if t >= self.lifetime:
            raise ExpiredBarrierError(f"circle barrier expired at t = R/4 = {self.lifetime}")
        return math.sqrt(self.R**2 - 4.0 * self.R * t)


def circle_boundary_gap(cb: CircleBarrier, state) -> float:
    """Min over nodes of distance-to-center minus the current radius."""
    r = cb.radius(state.t)
    d = np.hypot(state.xs - cb.center[0], state.f - cb.center[1])
    return float(d.min() - r)


def circle_residual_field(cb: CircleBarrier, profile: PotentialProfile, n: int,
                          t_grid, rel_x, y0: float = None):
    """phi_dot - L(phi) for the lower semicircle on a (t, x-fraction) grid.

    rel_x parametrizes the chord as x = 3R + rel_x * r(t) with |rel_x| < 1,
    so every time slice uses the same relative clustering.
    """
    R = cb.R
    if y0 is None:
        y0 = cb.y0
    out = np.empty((len(t_grid), len(rel_x)))
    for i, t in enumerate(t_grid):
        r = cb.radius(float(t))
        x = 3.0 * R + np.asarray(rel_x) * r
        s = np.sqrt(r * r - (x - 3.0 * R) ** 2)
        phi = y0 - s
        phip = (x - 3.0 * R) / s
        phipp = r * r / s**3
        uxx = profile(np.clip(x, 1.0, profile.a))
        phidot = 2.0 * R / s
        lphi = uxx * (phipp / (1.0 + phip**2)
                      + (n - 1) * (x * phip - phi) / (x * x + phi * phi))
        out[i] = phidot - lphi
    return out


def verify_circle_pde_inequality(cb: CircleBarrier, profile: PotentialProfile, n: int,
                                 y0: float = None, n_t: int = CERT_GRID_DEFAULT,
                                 n_x: int = CERT_GRID_DEFAULT, find_max_y0: bool = True,
                                 edge_clip: float = 1e-3) -> CertReport:
    """Certify that the lower semicircle is a strict supersolution for this y0.

    Requires sup u'' < R. If the given y0 fails and `find_max_y0` is set, a
    bisection locates the largest admissible center height, reported in
    `extra['max_admissible_y0']`.
    """
    R = cb.R
    xs_audit = np.linspace(1.0, profile.a, 4096)
    if float(np.max(profile(xs_audit))) >= R:
        raise ProfileError(f"circle certificate needs sup u'' < R = {R}")
    if y0 is None:
        y0 = cb.y0
    ts = np.linspace(0.0, cb.lifetime * (1.0 - edge_clip), n_t)
    rel = np.cos(np.linspace(math.pi * (1 - 0.5 * edge_clip), math.pi * 0.5 * edge_clip, n_x))

    def min_for(y0_val):
        res = circle_residual_field(cb, profile, n, ts, rel, y0=y0_val)
        ij = np.unravel_index(np.argmin(res), res.shape)
        return float(res[ij]), (float(ts[ij[0]]), float(3 * R + rel[ij[1]] * cb.radius(float(ts[ij[0]])))),

    m, arg = min_for(y0)
    passed = m > 0.0
    extra = {}
    if not passed and find_max_y0:
        lo = y0
        while min_for(lo)[0] <= 0 and lo > -1e6 * R:
            lo *= 4.0 if lo < 0 else -1.0
            if lo == 0:
                lo = -R
        hi = 0.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if min_for(mid)[0] > 0:
                lo = mid
            else:
                hi = mid
        extra["max_admissible_y0"] = lo
    return CertReport(
        kind="circle_supersolution",
        params={"R": R, "y0": y0, "n": n},
        min_residual=m, argmin=arg, grid=(n_t, n_x), passed=passed, extra=extra)


def certify_circle_y0(R: float, profile: PotentialProfile, n: int,
                      n_t: int = 128, n_x: int = 128, margin: float = 1.25) -> float:
    """Admissible center height by bisection, padded by `margin` toward -infinity."""
    cb = CircleBarrier(R=R, y0=-2.0 * R)
    rep = verify_circle_pde_inequality(cb, profile, n, y0=-2.0 * R,
                                       n_t=n_t, n_x=n_x, find_max_y0=True)
    if rep.passed:
        return -2.0 * R * margin
    y_adm = rep.extra.get("max_admissible_y0")
    if y_adm is None or y_adm >= 0:
        raise RuntimeError("no admissible y0 found for the circle barrier")
    return float(y_adm * margin)


# ---------------------------------------------------------------------------
# polar interpolants sweeping to a stationary curve
# ---------------------------------------------------------------------------

@dataclass
class PolarInterpolant:
    """Family 1/r_t^2 = (b/r_inf^2 + cos^2(theta)/a^2)/(1+b), b increasing.

    At b = 0 the curve is the vertical segment x = a; as b grows it sweeps
    monotonically out to the stationary profile r_inf. The rate law for b is
    built from numerically estimated constants (C1, C2, C3 and the u''
    lower-bound function C(b)); `verify_polar_subsolution` then certifies the
    resulting inequality directly and reports the smallest certified b.
    """

    theta: np.ndarray
    r_inf: np.ndarray
    a: float
    n: int
    profile: PotentialProfile
    b0: float
    constants: dict
    b_min: float = None
    _r_interp: object = field(default=None, repr=False, compare=False)
    _sol: object = field(default=None, repr=False, compare=False)
    _t_hi: float = field(default=0.0, repr=False, compare=False)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.r_inf = np.asarray(self.r_inf, dtype=float)
        self._r_interp = PchipInterpolator(self.theta, self.r_inf)

    def r_inf_deriv(self, theta):
        return self._r_interp.derivative()(theta)

    def r(self, theta, b):
        theta = np.asarray(theta, dtype=float)
        rinf = self._r_interp(theta)
        return np.sqrt((1.0 + b) / (b / rinf**2 + np.cos(theta) ** 2 / self.a**2))

    def c_of_b(self, b):
        """Lower bound for u'' along the curve: k_lin (sqrt((1+b)/(b+1/a)) - 1)."""
        k_lin = self.constants["k_lin"]
        return k_lin * (np.sqrt((1.0 + b) / (b + 1.0 / self.a)) - 1.0)

    def b_rate(self, b):
        c = self.constants
        return 2.0 / (1.0 + 1.0 / self.c_of_b(b)) * (c["C1"] / (c["C2"] * c["C3"])) * b

    def _ensure_solved(self, t_hi):
        if self._sol is not None and t_hi <= self._t_hi:
            return
        t_hi = max(2.0 * t_hi, 1.0)
        sol = solve_ivp(lambda t, b: self.b_rate(b[0]), (0.0, t_hi), [self.b0],
                        method="RK45", rtol=1e-10, atol=1e-12 * self.b0,
                        dense_output=True)
        if not sol.success:
            raise RuntimeError(f"b(t) integration failed: {sol.message}")
        self._sol = sol.sol
        self._t_hi = t_hi

    def b_of_t(self, t):
        t = np.asarray(t, dtype=float)
        self._ensure_solved(float(np.max(t)) if t.size else 0.0)
        return self._sol(np.atleast_1d(t))[0].reshape(t.shape)

    def bracket(self, theta, b):
        """(2r'^2 - r r'' + r^2)/(r'^2+r^2) + (n-1) via the interpolation algebra.

        Uses the A, B combinations in which the stationary relation has
        already absorbed r_inf''; only r_inf and r_inf' enter.
        """
        theta = np.asarray(theta, dtype=float)
        rinf = self._r_interp(theta)
        rinfp = self.r_inf_deriv(theta)
        n, a = self.n, self.a
        A = b * rinfp / rinf**3 + np.sin(2 * theta) / (2 * a * a)
        B = b / rinf**2 + np.cos(theta) ** 2 / a**2
        main = ((n - 1) * B * np.cos(theta) ** 2 + B * np.sin(theta) ** 2) / (a * a)
        main = main + (n - 2) * np.sin(2 * theta) ** 2 / (4 * a**4)
        main = main + (n - 2) * (b * rinfp * np.sin(2 * theta) / (a * a * rinf**3)
                                 - b * rinfp**2 * np.cos(theta) ** 2 / (a * a * rinf**4))
        return main / (A * A + B * B)

    def r_rdot(self, theta, b):
        """r * dr/dt from the rate law: (cos^2/a^2 - 1/r_inf^2) B^{-2} b_dot / 2."""
        theta = np.asarray(theta, dtype=float)
        rinf = self._r_interp(theta)
        B = b / rinf**2 + np.cos(theta) ** 2 / self.a**2
        bdot = self.b_rate(b)
        return 0.5 * (np.cos(theta) ** 2 / self.a**2 - 1.0 / rinf**2) * bdot / B**2

    def residual(self, theta, b):
        """(1/u'') r r_dot + bracket; nonnegative means subsolution."""
        x = self.r(theta, b) * np.cos(np.asarray(theta, dtype=float))
        uxx = self.profile(np.clip(x, 1.0, self.a))
        return self.r_rdot(theta, b) / uxx + self.bracket(theta, b)

    def upper_branch(self, b, m: int = 4001):
        """(x, y) samples of the graph part from the leftmost point up to (a, p)."""
        th = np.linspace(self.theta[0], self.theta[-1], m)
        r = self.r(th, b)
        x, y = r * np.cos(th), r * np.sin(th)
        i0 = int(np.argmin(x))
        xx, yy = x[i0:], y[i0:]
        keep = np.concatenate([[True], np.diff(xx) > 0])
        return xx[keep], yy[keep]


def estimate_interpolant_constants(theta, r_inf, a: float, n: int,
                                   profile: PotentialProfile,
                                   b_probe=None) -> dict:
    """Estimate (C1, C2, C3, k_lin) from grid minima over large-b rows.

    C1 floors b * bracket, C2 caps b^2 times the r_dot prefactor, C3 bounds
    the split infima of (r_inf x - r a), with the near-a part weighted by
    1/u''. k_lin is the largest constant with u'' >= k_lin (x-1) on
    [1, a - eps], measured from the profile itself.
    """
    theta = np.asarray(theta, dtype=float)
    r_inf = np.asarray(r_inf, dtype=float)
    if b_probe is None:
        b_probe = np.geomspace(1e2, 1e6, 9)
    eps = profile.eps if profile.eps is not None else 0.25 * (a - 1.0)
    xs = np.linspace(1.0 + 1e-9, a - eps, 2048)
    k_lin = float(np.min(profile(xs) / (xs - 1.0)))
    if k_lin <= 0:
        raise ProfileError("profile admits no linear lower bound u'' >= k (x-1)")

    tmp = PolarInterpolant(theta=theta, r_inf=r_inf, a=a, n=n, profile=profile,
                           b0=1.0, constants={"C1": 1, "C2": 1, "C3": 1, "k_lin": k_lin})
    th_in = theta[2:-2]
    rinf_in = r_inf[2:-2]
    c1 = min(float(np.min(b * tmp.bracket(th_in, b))) for b in b_probe)
    if c1 <= 0:
        raise ValueError("bracket lower bound C1/b not positive; hypotheses violated")

    c2 = 0.0
    c3 = 0.0
    for b in b_probe:
        rb = tmp.r(th_in, b)
        B = b / rinf_in**2 + np.cos(th_in) ** 2 / a**2
        factor = (rinf_in * rb * np.cos(th_in) + rb * a) / (a * a * rb**2 * rinf_in**2) / B**2
        c2 = max(c2, float(np.max(b * b * factor)))
        x = rb * np.cos(th_in)
        diff = rinf_in * x - rb * a
        near_a = x >= a - eps
        inf1 = float(np.min(diff[near_a] / tmp.profile(np.clip(x[near_a], 1.0, a)))) if near_a.any() else 0.0
        inf2 = float(np.min(diff))
        c3 = max(c3, -(inf1 + inf2))
    if c3 <= 0:
        c3 = 1e-12
    return {"C1": c1, "C2": c2, "C3": c3, "k_lin": k_lin}


def build_polar_interpolant(theta, r_inf, a: float, n: int, profile: PotentialProfile,
                            b0: float = None, stationarity_tol: float = 1e-6) -> PolarInterpolant:
    """Validate the sampled stationary profile and assemble the sweeping family.

    Checks the slope hypotheses r_inf' >= 0 and r_inf'/r_inf <= 2 tan(theta),
    and the polar stationarity relation to `stationarity_tol`; estimates the
    rate-law constants; then certifies the subsolution inequality and pins
    b_min. b0 defaults to b_min (the certified start).
    """
    from .stationary import polar_defect

    theta = np.asarray(theta, dtype=float)
    r_inf = np.asarray(r_inf, dtype=float)
    constants = estimate_interpolant_constants(theta, r_inf, a, n, profile)
    pi = PolarInterpolant(theta=theta, r_inf=r_inf, a=a, n=n, profile=profile,
                          b0=1.0, constants=constants)
    rp = pi.r_inf_deriv(theta)
    if np.any(rp < -1e-10):
        bad = theta[rp < -1e-10]
        raise ValueError(f"hypothesis r_inf' >= 0 fails at theta={bad[:5]}")
    ratio_margin = 2.0 * np.tan(theta) - rp / r_inf
    if np.any(ratio_margin < 0):
        bad = theta[ratio_margin < 0]
        raise ValueError(f"hypothesis r_inf'/r_inf <= 2 tan(theta) fails at theta={bad[:5]}")
    pts = np.column_stack([r_inf * np.cos(theta), r_inf * np.sin(theta)])
    stat = float(np.abs(polar_defect(pts, n)).max())
    if stat >= stationarity_tol:
        raise ValueError(f"stationarity residual {stat} exceeds {stationarity_tol}")
    rep = verify_polar_subsolution(pi)
    pi.b_min = rep.extra["b_min"]
    if pi.b_min is None:
        raise ValueError("no b row certifies the subsolution inequality")
    if b0 is None:
        b0 = pi.b_min
    elif b0 < pi.b_min:
        raise ValueError(f"b0={b0} below the certified b_min={pi.b_min}")
    pi.b0 = float(b0)
    pi._sol = None
    return pi


def verify_polar_subsolution(pi: PolarInterpolant, b_grid=None,
                             n_theta: int = CERT_GRID_DEFAULT,
                             refine: bool = True) -> CertReport:
    """Evaluate (1/u'') r r_dot + bracket over a (b, theta) grid.

    Reports the global minimum and b_min, the smallest grid b above which
    every theta row is nonnegative.
    """
    if b_grid is None:
        b_grid = np.geomspace(1.0, 1e6, CERT_GRID_DEFAULT)
    th_lo, th_hi = pi.theta[0], pi.theta[-1]
    clip = 1e-4 * (th_hi - th_lo)

    def scan(nb_grid, ntheta):
        th = np.linspace(th_lo + clip, th_hi - clip, ntheta)
        mins = np.array([float(np.min(pi.residual(th, float(b)))) for b in nb_grid])
        return mins

    mins = scan(b_grid, n_theta)
    i_min = int(np.argmin(mins))
    ok = mins >= 0
    b_min = None
    if ok.any():
        # smallest b from which every larger row stays certified
        idx = len(ok) - 1
        while idx >= 0 and ok[idx]:
            idx -= 1
        if idx < len(ok) - 1:
            b_min = float(b_grid[idx + 1])
    extra = {"b_min": b_min}
    passed = b_min is not None
    if refine and passed:
        mins2 = scan(np.geomspace(b_min, b_grid[-1], 2 * len(b_grid)), 2 * n_theta)
        extra["min_residual_refined_above_b_min"] = float(mins2.min())
        passed = passed and mins2.min() >= -1e-12
    return CertReport(
        kind="polar_subsolution",
        params={"a": pi.a, "n": pi.n, "constants": {k: float(v) for k, v in pi.constants.items()}},
        min_residual=float(mins[i_min]), argmin=(float(b_grid[i_min]),),
        grid=(len(b_grid), n_theta), passed=passed, extra=extra)


def interpolant_gap(pi: PolarInterpolant, xs, f, b, margin_nodes: int = 1) -> float:
    """Min of f - (upper-branch height of the b-curve) over the x-overlap.

    The pinned common endpoint (a, p) is excluded: every family member passes
    through it, so the gap tends to zero there by construction.
    """
    xs = np.asarray(xs, float)
    f = np.asarray(f, float)
    xb, yb = pi.upper_branch(b)
    interp = PchipInterpolator(xb, yb)
    mask = (xs >= xb[0]) & (xs < xs[-1])
    if margin_nodes:
        mask[-1 - margin_nodes:] = False
    if not mask.any():
        return float("inf")
    return float(np.min(f[mask] - interp(xs[mask])))


def reference_gap(f_ref, xs, f, exclude_ends: int = 1) -> float:
    """Min of f_ref(x) - f over interior nodes (clearance below a fixed graph)."""
    xs = np.asarray(xs, float)
    f = np.asarray(f, float)
    ref = f_ref(xs) if callable(f_ref) else np.asarray(f_ref, float)
    sl = slice(exclude_ends, len(xs) - exclude_ends if exclude_ends else None)
    return float(np.min(ref[sl] - f[sl]))


# ---------------------------------------------------------------------------
# the push-out race
# ---------------------------------------------------------------------------

def push_time(R: float, k: float, variant: str = "ivp") -> float:
    """Closed-form time for the canonical hyperbola (b_inf=R, b0=5R, a=6R) to reach b=2R."""
    hb = HyperbolaBarrier(a=6.0 * R, k=k, n=3, b_inf=R, b0=5.0 * R, variant=variant)
    return hb.hitting_time_closed(2.0 * R)


def profile_consistent_k(R: float, cap_fraction: float = 0.9) -> float:
    """Largest quadratic-profile constant keeping u'' < R on [1, 6R]."""
    a = 6.0 * R
    return cap_fraction * 4.0 * R / (a - 1.0) ** 2


def minimal_push_radius(k: float = None, R_max: float = 1e9,
                        variant: str = "ivp") -> float:
    """Smallest R with push time T < R/4, found by bisection.

    With a fixed constant k the threshold exists and is returned. With
    k = None, k is tied to the profile cap u'' < R (k = 0.9*4R/(6R-1)^2),
    and the race is lost at every R: T/R then grows without bound, so the
    function returns inf to record the infeasibility rather than a radius.
    """

    def wins(R):
        kk = profile_consistent_k(R) if k is None else k
        return push_time(R, kk, variant=variant) < R / 4.0

    if k is None:
        # T/(R/4) is monotone increasing in R here; check the small-R end
        for R in np.geomspace(1.0 + 1e-6, R_max, 64):
            if R > 1 and wins(R):
                break
        else:
            return math.inf
    lo = 1.0 + 1e-9
    hi = 2.0
    while not wins(hi):
        hi *= 2.0
        if hi > R_max:
            return math.inf
    while hi - lo > 1e-6 * hi:
        mid = 0.5 * (lo + hi)
        if wins(mid):
            hi = mid
        else:
            lo = mid
    return hi
