"""Class data, diffusion profiles, eigenvalue/phase formulas, central charges.

Everything here is pure: the cohomology classes on the blowup of projective
space are encoded by four numbers (n, a, p, q), the background metric enters
only through the diffusion weight u''(x) on [1, a], and stability is decided
by arguments of two complex intersection numbers.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DegenerateClassError, ProfileError, RegimeError

STABILITY_TOL = 1e-9  # semi-stability is codimension one; exact equality is unattainable in floats


@dataclass(frozen=True)
class KahlerData:
    """Class parameters: [omega] = a H - E, [alpha] = p H - q E on the blowup.

    n is the complex dimension, a > 1 the right endpoint of the Legendre
    variable x = u'(rho), and (q, p) the boundary values f(1), f(a).
    """

    n: int
    a: float
    p: float
    q: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        if not self.a > 1:
            raise ValueError(f"a must exceed 1, got {self.a}")
        for name in ("a", "p", "q"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        object.__setattr__(self, "n", int(self.n))


@dataclass(frozen=True)
class PotentialProfile:
    """Diffusion weight u'' as a function of x in [1, a], with structural bounds.

    eval vanishes at both endpoints (the flow fixes boundary values), is
    positive inside, dominates k (x-1)(a-x) everywhere, stays under R_cap if
    one is set, and dominates k (x-1) on [1, a-eps] when the long-time
    scenario asks for it.
    """

    a: float
    eval: object  # vectorized callable x -> u''(x)
    k: float
    R_cap: float | None = None
    eps: float | None = None

    def __call__(self, x):
        return self.eval(x)

    def audit(self, npts: int = 10_000, check_linear_lower: bool = False):
        """Check every structural bound on a dense grid; raise ProfileError on failure."""
        xs = np.linspace(1.0, self.a, npts)
        vals = np.asarray(self.eval(xs), dtype=float)
        if abs(vals[0]) > 1e-12 or abs(vals[-1]) > 1e-12:
            raise ProfileError("u'' must vanish at x=1 and x=a")
        if np.any(vals[1:-1] <= 0):
            bad = xs[1:-1][vals[1:-1] <= 0]
            raise ProfileError(f"u'' must be positive on (1,a); fails near x={bad[0]}")
        lower = self.k * (xs - 1.0) * (self.a - xs)
        if np.any(vals < lower - 1e-12 * np.maximum(1.0, lower)):
            bad = xs[vals < lower - 1e-12 * np.maximum(1.0, lower)]
            raise ProfileError(f"u'' < k(x-1)(a-x) near x={bad[0]}")
        if self.R_cap is not None and np.any(vals >= self.R_cap):
            bad = xs[vals >= self.R_cap]
            raise ProfileError(f"u'' >= R_cap={self.R_cap} near x={bad[0]}")
        if check_linear_lower:
            if self.eps is None or not (0 < self.eps < self.a - 1):
                raise ProfileError("eps in (0, a-1) required for the linear lower bound check")
            mask = xs <= self.a - self.eps
            lin = self.k * (xs[mask] - 1.0)
            if np.any(vals[mask] < lin - 1e-12 * np.maximum(1.0, lin)):
                raise ProfileError("u'' < k(x-1) on [1, a-eps]")
        return True


def make_quadratic_profile(kd: KahlerData, kappa: float, eps: float | None = None) -> PotentialProfile:
    """Canonical profile u''(x) = kappa (x-1)(a-x); k = kappa, R_cap just above the max."""
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    a = kd.a
    if not a > 1:
        raise ValueError(f"a must exceed 1, got {a}")
    peak = kappa * (a - 1.0) ** 2 / 4.0
    if eps is None:
        eps = 0.25 * (a - 1.0)

    def _eval(x, _k=kappa, _a=a):
        x = np.asarray(x, dtype=float)
        return _k * (x - 1.0) * (_a - x)

    return PotentialProfile(a=a, eval=_eval, k=kappa, R_cap=peak * (1.0 + 1e-9) + 1e-300, eps=eps)


def profile_from_table(xs, vals, a: float | None = None, k: float | None = None,
                       R_cap: float | None = None, eps: float | None = None) -> PotentialProfile:
    """Profile from sampled (x, u'') pairs with monotone-cubic interpolation.

    k defaults to the largest constant consistent with the samples. The
    result is audited before being returned.
    """
    xs = np.asarray(xs, dtype=float)
    vals = np.asarray(vals, dtype=float)
    if xs.ndim != 1 or xs.shape != vals.shape or xs.size < 4:
        raise ProfileError("need matching 1D x and u'' columns with at least 4 samples")
    if np.any(np.diff(xs) <= 0):
        raise ProfileError("x samples must be strictly increasing")
    if a is None:
        a = float(xs[-1])
    if abs(xs[0] - 1.0) > 1e-12 or abs(xs[-1] - a) > 1e-12:
        raise ProfileError("samples must cover [1, a] exactly")
    interp = PchipInterpolator(xs, vals, extrapolate=False)

    def _eval(x, _f=interp, _a=a):
        x = np.asarray(x, dtype=float)
        out = _f(np.clip(x, 1.0, _a))
        return np.asarray(out, dtype=float)

    if k is None:
        inner = (xs > 1.0) & (xs < a)
        ratios = vals[inner] / ((xs[inner] - 1.0) * (a - xs[inner]))
        k = float(0.999 * ratios.min())
        if k <= 0:
            raise ProfileError("samples admit no positive lower constant k")
    if eps is None:
        eps = 0.25 * (a - 1.0)
    prof = PotentialProfile(a=a, eval=_eval, k=k, R_cap=R_cap, eps=eps)
    prof.audit()
    return prof


def profile_from_csv(path, **kwargs) -> PotentialProfile:
    """Load a two-column CSV (x, u''(x)) and build an audited profile."""
    data = np.loadtxt(path, delimiter=",", comments="#")
    if data.ndim != 2 or data.shape[1] < 2:
        raise ProfileError(f"{path}: expected two columns x, u''(x)")
    return profile_from_table(data[:, 0], data[:, 1], **kwargs)


# ---------------------------------------------------------------------------
# eigenvalues and the Lagrangian angle
# ---------------------------------------------------------------------------

def eigenvalues(x: float, f: float, fp: float, n: int) -> list:
    """Eigenvalues of omega^{-1} alpha at one point: f/x repeated n-1 times, then f'."""
    return [f / x] * (n - 1) + [fp]


def phase(x, f, fp, n: int):
    """Lagrangian angle Theta = (n-1) arctan(f/x) + arctan(f'). Broadcasts over arrays."""
    x = np.asarray(x, dtype=float)
    return (n - 1) * np.arctan(np.asarray(f, dtype=float) / x) + np.arctan(np.asarray(fp, dtype=float))


@dataclass(frozen=True)
class PhaseField:
    """Grid of Lagrangian angles together with the eigenvalue sheets behind them."""

    theta_hat: float
    theta: np.ndarray
    lambda_sheet: tuple  # (f/x values with multiplicity n-1, f' values)
    n: int

    @classmethod
    def from_grid(cls, xs, f, fp, n: int, theta_hat: float) -> "PhaseField":
        xs = np.asarray(xs, dtype=float)
        f = np.asarray(f, dtype=float)
        fp = np.asarray(fp, dtype=float)
        theta = phase(xs, f, fp, n)
        bound = n * math.pi / 2
        if np.any(np.abs(theta) >= bound):
            raise ValueError("Theta left (-n pi/2, n pi/2); inputs are inconsistent")
        return cls(theta_hat=theta_hat, theta=theta, lambda_sheet=(f / xs, fp), n=n)


def lifted_angle(kd: KahlerData) -> float:
    """Principal-branch target angle arg((a+ip)^n - (1+iq)^n).

    Callers needing a different lift add integer multiples of 2*pi (or pi for
    the level-set family, which only sees the angle mod pi) explicitly.
    """
    diff = (kd.a + 1j * kd.p) ** kd.n - (1 + 1j * kd.q) ** kd.n
    if diff == 0:
        raise DegenerateClassError(f"(a+ip)^n == (1+iq)^n for {kd}; no target angle")
    return cmath.phase(diff)


# ---------------------------------------------------------------------------
# central charges and stability
# ---------------------------------------------------------------------------

SUBVARIETY_TAGS = ("X", "E")


@dataclass(frozen=True)
class CentralCharge:
    subvariety: str
    value: complex
    argument: float


def central_charge(kd: KahlerData, subvariety: str) -> CentralCharge:
    """Central charge of the whole space X or the exceptional divisor E.

    Only the term of degree dim(V) contributes: on X this is
    -((p-ia)^n - (q-i)^n)/n!, on E it is -(q-i)^(n-1)/(n-1)!, both coming
    from H^n = 1, E^n = (-1)^(n-1), H.E = 0 on the blowup.
    """
    if subvariety not in SUBVARIETY_TAGS:
        raise ValueError(f"subvariety must be one of {SUBVARIETY_TAGS}, got {subvariety!r}")
    n = kd.n
    if subvariety == "X":
        value = -((kd.p - 1j * kd.a) ** n - (kd.q - 1j) ** n) / math.factorial(n)
    else:
        value = -((kd.q - 1j) ** (n - 1)) / math.factorial(n - 1)
    if value == 0:
        raise DegenerateClassError(f"central charge of {subvariety} vanishes for {kd}")
    return CentralCharge(subvariety=subvariety, value=value, argument=cmath.phase(value))


def check_stability(kd: KahlerData, tol: float = STABILITY_TOL) -> str:
    """Classify the pair of classes against the only test subvariety E.

    Returns 'stable' when arg Z_E > arg Z_X + tol, 'semistable' within tol,
    'unstable' otherwise. Requires the supercritical regime arg Z_X in (0, pi).
    """
    zx = central_charge(kd, "X")
    ze = central_charge(kd, "E")
    if not (0.0 < zx.argument < math.pi):
        raise RegimeError(f"arg Z_X = {zx.argument} outside (0, pi); not supercritical")
    gap = ze.argument - zx.argument
    if gap > tol:
        return "stable"
    if gap >= -tol:
        return "semistable"
    return "unstable"


def classification_record(kd: KahlerData, tol: float = STABILITY_TOL) -> dict:
    """JSON-ready record {n, a, p, q, argZX, argZE, class}."""
    zx = central_charge(kd, "X")
    ze = central_charge(kd, "E")
    return {
        "n": kd.n,
        "a": kd.a,
        "p": kd.p,
        "q": kd.q,
        "argZX": zx.argument,
        "argZE": ze.argument,
        "class": check_stability(kd, tol=tol),
    }
