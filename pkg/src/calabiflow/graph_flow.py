"""Explicit solver for the reduced graph flow f_t = u'' * d/dx(Theta) on [1, a].

States are graphs over a uniform grid with Dirichlet data pinned exactly at
both ends (u'' vanishes there, so the continuum flow fixes them too). Time
stepping is classical RK4 under a CFL bound; all operators broadcast over a
leading batch axis so sweeps and pairwise comparisons run vectorized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NonfiniteStateError, RegimeError
from .geometry import KahlerData, PotentialProfile, phase

CFL_DIFFUSIVE = 0.2
CFL_ADVECTIVE = 0.5
GRAD_BLOWUP_DEFAULT = 1e3  # arctan(f') is then within 1e-3 of pi/2


@dataclass
class GraphFlowState:
    """Nodal values of f over a uniform grid in [1, a] at time t."""

    xs: np.ndarray
    f: np.ndarray
    t: float
    kd: KahlerData
    profile: PotentialProfile
    uxx: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.xs = np.ascontiguousarray(self.xs, dtype=float)
        self.f = np.ascontiguousarray(self.f, dtype=float)
        if self.xs.ndim != 1 or self.xs.size < 3:
            raise ValueError("grid must be 1D with at least 3 nodes")
        dx = np.diff(self.xs)
        if np.any(dx <= 0) or abs(dx.max() - dx.min()) > 1e-9 * dx.mean():
            raise ValueError("grid must be uniform and strictly increasing")
        if abs(self.xs[0] - 1.0) > 1e-12 or abs(self.xs[-1] - self.kd.a) > 1e-9:
            raise ValueError("grid must span [1, a] exactly")
        if self.f.shape != self.xs.shape:
            raise ValueError("f and xs must have matching shape")
        if not np.all(np.isfinite(self.f)):
            raise NonfiniteStateError(self.t)
        if abs(self.f[0] - self.kd.q) > 1e-12 or abs(self.f[-1] - self.kd.p) > 1e-12:
            raise ValueError("boundary values must match f(1)=q, f(a)=p")
        if self.uxx is None:
            self.uxx = np.asarray(self.profile(self.xs), dtype=float)

    @property
    def dx(self) -> float:
        return float(self.xs[1] - self.xs[0])

    @property
    def n_nodes(self) -> int:
        return self.xs.size

    def copy(self) -> "GraphFlowState":
        return replace(self, f=self.f.copy())


def make_state(kd: KahlerData, profile: PotentialProfile, n_nodes: int, f0) -> GraphFlowState:
    """Sample f0 (callable or array) on a uniform grid, pinning the boundary data."""
    xs = np.linspace(1.0, kd.a, n_nodes)
    f = np.asarray(f0(xs) if callable(f0) else f0, dtype=float).copy()
    f[0], f[-1] = kd.q, kd.p
    return GraphFlowState(xs=xs, f=f, t=0.0, kd=kd, profile=profile)


# ---------------------------------------------------------------------------
# spatial operators (broadcast over leading axes)
# ---------------------------------------------------------------------------

def full_gradient(f: np.ndarray, dx: float) -> np.ndarray:
    """Second-order derivative: centered inside, one-sided at both ends."""
    fp = np.empty_like(f)
    fp[..., 1:-1] = (f[..., 2:] - f[..., :-2]) / (2.0 * dx)
    fp[..., 0] = (-3.0 * f[..., 0] + 4.0 * f[..., 1] - f[..., 2]) / (2.0 * dx)
    fp[..., -1] = (3.0 * f[..., -1] - 4.0 * f[..., -2] + f[..., -3]) / (2.0 * dx)
    return fp


def rhs_core(f: np.ndarray, xs: np.ndarray, uxx: np.ndarray, n: int, dx: float) -> np.ndarray:
    """u'' (f''/(1+f'^2) + (n-1)(x f' - f)/(x^2+f^2)), zero at the endpoints."""
    out = np.zeros_like(f)
    fi = f[..., 1:-1]
    xi = xs[1:-1]
    fp = (f[..., 2:] - f[..., :-2]) / (2.0 * dx)
    fpp = (f[..., 2:] - 2.0 * fi + f[..., :-2]) / (dx * dx)
    out[..., 1:-1] = uxx[1:-1] * (fpp / (1.0 + fp * fp)
                                  + (n - 1) * (xi * fp - fi) / (xi * xi + fi * fi))
    return out


def evaluate_rhs(state: GraphFlowState) -> np.ndarray:
    """Flow velocity at every node of the state."""
    return rhs_core(state.f, state.xs, state.uxx, state.kd.n, state.dx)


def evaluate_rhs_theta_form(state: GraphFlowState) -> np.ndarray:
    """Equivalent form u'' * dTheta/dx via differenced nodal angles (cross-validation)."""
    fp = full_gradient(state.f, state.dx)
    theta = phase(state.xs, state.f, fp, state.kd.n)
    out = np.zeros_like(state.f)
    out[1:-1] = state.uxx[1:-1] * (theta[2:] - theta[:-2]) / (2.0 * state.dx)
    return out


def stable_dt(f: np.ndarray, xs: np.ndarray, uxx: np.ndarray, n: int, dx: float,
              c_cfl: float = CFL_DIFFUSIVE, c_adv: float = CFL_ADVECTIVE) -> float:
    """CFL bound: diffusive limit scaled by the least-steep node, plus an advective limit."""
    fp = full_gradient(f, dx)
    min_fp2 = float(np.min(fp * fp))
    max_uxx = float(np.max(uxx))
    dt = c_cfl * dx * dx * (1.0 + min_fp2) / max_uxx
    speed = float(np.max(uxx * (n - 1) * xs / (xs * xs + f * f)))
    if speed > 0:
        dt = min(dt, c_adv * dx / speed)
    return dt


def _rk4_once(f, xs, uxx, n, dx, dt, q, p):
    k1 = rhs_core(f, xs, uxx, n, dx)
    f1 = f + (0.5 * dt) * k1
    f1[..., 0], f1[..., -1] = q, p
    k2 = rhs_core(f1, xs, uxx, n, dx)
    f2 = f + (0.5 * dt) * k2
    f2[..., 0], f2[..., -1] = q, p
    k3 = rhs_core(f2, xs, uxx, n, dx)
    f3 = f + dt * k3
    f3[..., 0], f3[..., -1] = q, p
    k4 = rhs_core(f3, xs, uxx, n, dx)
    out = f + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out[..., 0], out[..., -1] = q, p
    return out


def step(state: GraphFlowState, dt_max: float) -> GraphFlowState:
    """Advance one RK4 step of size min(dt_max, CFL bound); boundary reasserted exactly."""
    if dt_max <= 0:
        raise ValueError("dt_max must be positive")
    dt = min(dt_max, stable_dt(state.f, state.xs, state.uxx, state.kd.n, state.dx))
    f_new = _rk4_once(state.f, state.xs, state.uxx, state.kd.n, state.dx, dt,
                      state.kd.q, state.kd.p)
    if not np.all(np.isfinite(f_new)):
        bad = np.flatnonzero(~np.isfinite(f_new))
        raise NonfiniteStateError(state.t + dt, location=float(state.xs[bad[0]]))
    return replace(state, f=f_new, t=state.t + dt)


# ---------------------------------------------------------------------------
# monitors and runs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonitorReport:
    t: float
    sup_fp: float
    boundary_fp: tuple
    lambda_max: float
    theta_min: float
    theta_max: float
    min_f: float
    min_fp: float
    argmax_fp_location: float


def monitor(state: GraphFlowState) -> MonitorReport:
    """Snapshot of the quantities the long-time estimates are phrased in."""
    fp = full_gradient(state.f, state.dx)
    theta = phase(state.xs, state.f, fp, state.kd.n)
    i_max = int(np.argmax(np.abs(fp)))
    lam = np.maximum(state.f / state.xs, fp)
    return MonitorReport(
        t=state.t,
        sup_fp=float(np.abs(fp).max()),
        boundary_fp=(float(fp[0]), float(fp[-1])),
        lambda_max=float(lam.max()),
        theta_min=float(theta.min()),
        theta_max=float(theta.max()),
        min_f=float(state.f.min()),
        min_fp=float(fp.min()),
        argmax_fp_location=float(state.xs[i_max]),
    )


@dataclass(frozen=True)
class StopRule:
    grad_threshold: float = GRAD_BLOWUP_DEFAULT


@dataclass(frozen=True)
class StopCause:
    kind: str  # 'time_reached' | 'gradient_blowup' | 'nonfinite'
    t: float
    x_star: float | None = None
    sup_fp: float | None = None


def _sup_fp_and_loc(state: GraphFlowState):
    fp = full_gradient(state.f, state.dx)
    i = int(np.argmax(np.abs(fp)))
    return float(abs(fp[i])), float(state.xs[i])


def run_until(state: GraphFlowState, t_end: float, stop: StopRule = StopRule(),
              snapshot_dt: float | None = None, n_snapshots: int = 50,
              on_snapshot=None):
    """Integrate to t_end with monitor snapshots at a fixed cadence.

    Returns (final state, monitor reports, stop cause). The stop rule fires on
    sup|f'| exceeding its threshold (vertical-tangency proxy), on reaching
    t_end, or on a nonfinite nodal value; the gradient check runs every step
    so the reported stopping time is one step sharp.
    """
    if not t_end > state.t:
        raise ValueError("t_end must exceed the current time")
    if snapshot_dt is None:
        snapshot_dt = (t_end - state.t) / max(1, n_snapshots)
    reports = [monitor(state)]
    if on_snapshot is not None:
        on_snapshot(state)
    next_snap = state.t + snapshot_dt
    sup0, loc0 = _sup_fp_and_loc(state)
    if sup0 > stop.grad_threshold:
        return state, reports, StopCause("gradient_blowup", state.t, loc0, sup0)
    while state.t < t_end:
        horizon = min(next_snap, t_end)
        try:
            state = step(state, horizon - state.t)
        except NonfiniteStateError as err:
            reports.append(monitor_safe(state))
            return state, reports, StopCause("nonfinite", err.t, err.location)
        sup_fp, loc = _sup_fp_and_loc(state)
        if sup_fp > stop.grad_threshold:
            reports.append(monitor(state))
            if on_snapshot is not None:
                on_snapshot(state)
            return state, reports, StopCause("gradient_blowup", state.t, loc, sup_fp)
        if state.t >= next_snap - 1e-14:
            reports.append(monitor(state))
            if on_snapshot is not None:
                on_snapshot(state)
            next_snap += snapshot_dt
    if abs(reports[-1].t - state.t) > 1e-14:
        reports.append(monitor(state))
        if on_snapshot is not None:
            on_snapshot(state)
    sup_fp, _ = _sup_fp_and_loc(state)
    return state, reports, StopCause("time_reached", state.t, None, sup_fp)


def monitor_safe(state: GraphFlowState) -> MonitorReport:
    """Monitor that tolerates nonfinite values (for post-mortem reports)."""
    f = np.where(np.isfinite(state.f), state.f, 0.0)
    tmp = replace(state, f=f)
    tmp.f[0], tmp.f[-1] = state.kd.q, state.kd.p
    return monitor(tmp)


# ---------------------------------------------------------------------------
# comparison principle
# ---------------------------------------------------------------------------

def comparison_test(low: GraphFlowState, high: GraphFlowState, t_end: float,
                    stop: StopRule = StopRule(), n_checks: int = 20) -> bool:
    """Evolve a pointwise-ordered pair in lockstep; True iff ordering persists.

    The tolerance is 10*dx^2, the discrete slack the maximum principle leaves
    a second-order scheme. Both states must share grid and profile; boundary
    data may differ as long as it is ordered.
    """
    if low.xs.shape != high.xs.shape or np.any(low.xs != high.xs):
        raise ValueError("states must share one grid")
    if np.any(low.f > high.f):
        raise ValueError("initial data must satisfy low <= high everywhere")
    dx = low.dx
    tol = 10.0 * dx * dx
    n = low.kd.n
    xs, uxx = low.xs, low.uxx
    fs = np.stack([low.f, high.f])
    qp = np.array([[low.kd.q, low.kd.p], [high.kd.q, high.kd.p]])
    t = min(low.t, high.t)
    check_at = t + (t_end - t) * np.arange(1, n_checks + 1) / n_checks
    for target in check_at:
        while t < target:
            dt = min(target - t,
                     stable_dt(fs[0], xs, uxx, n, dx),
                     stable_dt(fs[1], xs, uxx, n, dx))
            k1 = rhs_core(fs, xs, uxx, n, dx)
            f1 = fs + (0.5 * dt) * k1
            f1[:, 0], f1[:, -1] = qp[:, 0], qp[:, 1]
            k2 = rhs_core(f1, xs, uxx, n, dx)
            f2 = fs + (0.5 * dt) * k2
            f2[:, 0], f2[:, -1] = qp[:, 0], qp[:, 1]
            k3 = rhs_core(f2, xs, uxx, n, dx)
            f3 = fs + dt * k3
            f3[:, 0], f3[:, -1] = qp[:, 0], qp[:, 1]
            k4 = rhs_core(f3, xs, uxx, n, dx)
            fs = fs + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            fs[:, 0], fs[:, -1] = qp[:, 0], qp[:, 1]
            t += dt
            if not np.all(np.isfinite(fs)):
                return bool(np.all(fs[0] <= fs[1] + tol))
            sup_fp = max(np.abs(full_gradient(fs[0], dx)).max(),
                         np.abs(full_gradient(fs[1], dx)).max())
            if sup_fp > stop.grad_threshold:
                return bool(np.all(fs[0] <= fs[1] + tol))
        if np.any(fs[0] > fs[1] + tol):
            return False
    return True


# ---------------------------------------------------------------------------
# long-time monitor audit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Section4Audit:
    phase_floor_ok: bool
    positivity_ok: bool
    gradient_floor_ok: bool
    boundary_growth_rate: float
    passed: bool
    worst_phase_drift: float
    min_f_overall: float
    worst_gradient_drop: float


def monitor_section4(reports, n: int, delta_theta: float = 1e-5,
                     grad_drop_tol: float = 1e-4) -> Section4Audit:
    """Audit a supercritical run against the preserved-quantity estimates.

    Checks: (i) the phase floor never drops faster than delta_theta per unit
    time, (ii) f stays positive, (iii) the gradient floor never drops below
    its initial value minus grad_drop_tol, (iv) the boundary derivatives grow
    at most exponentially (the fitted log-growth slope is reported, not
    compared to any particular constant).
    """
    if len(reports) < 2:
        raise ValueError("need at least two monitor reports")
    if n < 3:
        raise RegimeError("the long-time audit requires n >= 3")
    if reports[0].theta_min <= (n - 2) * math.pi / 2:
        raise RegimeError(
            f"initial phase floor {reports[0].theta_min} is not supercritical "
            f"(needs > {(n - 2) * math.pi / 2})")
    ts = np.array([r.t for r in reports])
    th = np.array([r.theta_min for r in reports])
    drift = th[1:] - th[:-1] + delta_theta * np.diff(ts)
    worst_drift = float(drift.min())
    phase_ok = bool(np.all(drift >= 0))
    min_f = float(min(r.min_f for r in reports))
    positivity_ok = min_f > 0
    floor0 = reports[0].min_fp
    worst_drop = float(floor0 - min(r.min_fp for r in reports))
    gradient_ok = worst_drop <= grad_drop_tol
    b = np.array([abs(r.boundary_fp[0]) + abs(r.boundary_fp[1]) for r in reports])
    slope = float(np.polyfit(ts, np.log(np.maximum(b, 1e-300)), 1)[0])
    growth_ok = math.isfinite(slope)
    return Section4Audit(
        phase_floor_ok=phase_ok,
        positivity_ok=positivity_ok,
        gradient_floor_ok=gradient_ok,
        boundary_growth_rate=slope,
        passed=phase_ok and positivity_ok and gradient_ok and growth_ok,
        worst_phase_drift=worst_drift,
        min_f_overall=min_f,
        worst_gradient_drop=worst_drop,
    )
