"""Classical dynamics of screened central-force systems in gnomonic coordinates.

The Hamiltonian on a sphere of curvature lam, written in the gnomonic
chart with canonical coordinates (x1, x2, p1, p2), is

    H = pi**2/2 + (lam/2)*Lz**2 + V(r)
      = (1 + lam*r**2) * (p**2 + lam*(x.p)**2) / 2 + V(r),

where pi_i = p_i + lam*x_i*(x.p) is the curvature-corrected momentum and
Lz = x1*p2 - x2*p1.  The two screened potentials are

    coulomb:     V(r) = -1/r    - k/r**2
    oscillator:  V(r) = r**2/2  - k/r**2

Bound orbits obey closed forms controlled by alpha = sqrt(1 - 2k/Lz**2)
and the shifted energy Et = E - (lam/2)*Lz**2:

    coulomb:     1/r    = [1  + sqrt(1 + 2*Et*Lz**2*alpha**2)  * cos(alpha*(theta - theta0))]   / (Lz**2 * alpha**2)
    oscillator:  1/r**2 = [Et + sqrt(Et**2 - Lz**2*alpha**2)   * cos(2*alpha*(theta - theta0))] / (Lz**2 * alpha**2)

Curvature enters the projected orbit only through Et, so a spherical
trajectory traces the same (r, theta) curve as the flat trajectory with
energy Et.  For rational alpha = p/q the orbit closes; the radial period
in theta is 2*pi/alpha (coulomb) or pi/alpha (oscillator, doubled angle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, least_squares

from .errors import (
    AccuracyError,
    CurvatureError,
    ImaginaryAlphaError,
    NoTurningPointError,
    OrbitDomainError,
    RadiusError,
    SingularOrbitError,
    StiffnessError,
)

TWO_PI = 2.0 * math.pi

R_MIN_GUARD = 1e-8          # terminate near-collision orbits
RATIONAL_TOL = 1e-9         # |alpha - p/q| below this counts as rational
MAX_DENOMINATOR = 64        # continued-fraction denominator cap
TURNING_RDOT_TOL = 1e-10    # refined |rdot| bound at a turning point


class SystemKind(str, Enum):
    COULOMB = "coulomb"
    OSCILLATOR = "oscillator"


@dataclass(frozen=True)
class SystemParams:
    """System selector: potential kind, curvature lam >= 0, screening k >= 0."""

    kind: SystemKind
    lam: float = 0.0
    k: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.lam) or self.lam < 0.0:
            raise CurvatureError(f"curvature must be finite and >= 0, got {self.lam}")
        if not math.isfinite(self.k) or self.k < 0.0:
            raise ValueError(f"screening strength must be finite and >= 0, got {self.k}")


@dataclass(frozen=True)
class PhaseState:
    """Gnomonic phase-space point (x1, x2, p1, p2)."""

    x1: float
    x2: float
    p1: float
    p2: float

    @property
    def r(self) -> float:
        return math.hypot(self.x1, self.x2)

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.p1, self.p2])

    @classmethod
    def from_array(cls, y) -> "PhaseState":
        return cls(float(y[0]), float(y[1]), float(y[2]), float(y[3]))


class TurningKind(str, Enum):
    APHELION = "aphelion"
    PERIHELION = "perihelion"


@dataclass(frozen=True)
class TurningPoint:
    """Point with rdot = 0: local maximum (aphelion) or minimum (perihelion) of r."""

    t: float
    state: PhaseState
    kind: TurningKind
    r: float
    theta: float


# --- potentials and Hamiltonian -----------------------------------------

def potential(r, params: SystemParams):
    """V(r) for the given system; r must be positive (singular at r = 0)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise RadiusError("potential requires r > 0")
    if params.kind is SystemKind.COULOMB:
        v = -1.0 / r - params.k / r**2
    else:
        v = 0.5 * r**2 - params.k / r**2
    return float(v) if v.ndim == 0 else v


def potential_derivative(r, params: SystemParams):
    """dV/dr, used by the equations of motion."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise RadiusError("potential requires r > 0")
    if params.kind is SystemKind.COULOMB:
        dv = 1.0 / r**2 + 2.0 * params.k / r**3
    else:
        dv = r + 2.0 * params.k / r**3
    return float(dv) if dv.ndim == 0 else dv


def pi_vector(state: PhaseState, lam: float) -> tuple[float, float]:
    """Curvature-corrected momentum pi_i = p_i + lam*x_i*(x.p).

    Reduces to the canonical momentum at the origin or in the flat limit.
    """
    s = state.x1 * state.p1 + state.x2 * state.p2
    return (state.p1 + lam * s * state.x1, state.p2 + lam * s * state.x2)


def _h_arrays(x1, x2, p1, p2, params: SystemParams):
    """Hamiltonian on (broadcast) component arrays."""
    r2 = x1 * x1 + x2 * x2
    s = x1 * p1 + x2 * p2
    psq = p1 * p1 + p2 * p2
    return 0.5 * (1.0 + params.lam * r2) * (psq + params.lam * s * s) + potential(
        np.sqrt(r2), params
    )


def _lz_arrays(x1, x2, p1, p2):
    return x1 * p2 - x2 * p1


def hamiltonian(state: PhaseState, params: SystemParams) -> float:
    """Total energy H = pi**2/2 + (lam/2)*Lz**2 + V(r)."""
    if state.r <= 0.0:
        raise RadiusError("hamiltonian requires r > 0")
    return float(_h_arrays(state.x1, state.x2, state.p1, state.p2, params))


def equations_of_motion(
    state: PhaseState, params: SystemParams
) -> tuple[float, float, float, float]:
    """Hamilton's equations (x1dot, x2dot, p1dot, p2dot) from analytic gradients."""
    if state.r <= 0.0:
        raise RadiusError("equations of motion require r > 0")
    d = _rhs(0.0, state.as_array(), params)
    return (float(d[0]), float(d[1]), float(d[2]), float(d[3]))


def _rhs(t, y, params: SystemParams):
    x1, x2, p1, p2 = y
    lam = params.lam
    r2 = x1 * x1 + x2 * x2
    r = np.sqrt(r2)
    s = x1 * p1 + x2 * p2
    a = 1.0 + lam * r2
    psq = p1 * p1 + p2 * p2
    dvdr = (
        1.0 / r2 + 2.0 * params.k / (r2 * r)
        if params.kind is SystemKind.COULOMB
        else r + 2.0 * params.k / (r2 * r)
    )
    # dH/dx_i = lam*x_i*(p**2 + lam*s**2) + a*lam*s*p_i + V'(r)*x_i/r
    common = lam * (psq + lam * s * s)
    radial = dvdr / r
    return np.array(
        [
            a * (p1 + lam * s * x1),
            a * (p2 + lam * s * x2),
            -x1 * common - a * lam * s * p1 - radial * x1,
            -x2 * common - a * lam * s * p2 - radial * x2,
        ]
    )


# --- trajectories --------------------------------------------------------

@dataclass
class Trajectory:
    """Time-ordered samples of an integrated orbit plus derived scalars.

    theta is unwrapped (cumulative) so closure angles beyond 2*pi stay
    measurable; normalize at presentation boundaries only.  The dense
    interpolant of the integrator is kept for event refinement.
    """

    t: np.ndarray
    states: np.ndarray            # (n, 4) rows (x1, x2, p1, p2)
    r: np.ndarray
    theta: np.ndarray             # unwrapped
    H: np.ndarray
    Lz: np.ndarray
    params: SystemParams
    rel_tol: float
    dense: Callable[[float], np.ndarray]
    turning_points: list[TurningPoint] = field(default_factory=list)
    circular: bool = False
    _scanned: bool = field(default=False, repr=False)

    def state_at(self, t: float) -> PhaseState:
        return PhaseState.from_array(self.dense(t))

    def theta_at(self, t: float) -> float:
        """Unwrapped theta at arbitrary time, pinned to the sampled branch."""
        y = self.dense(t)
        raw = math.atan2(y[1], y[0])
        approx = float(np.interp(t, self.t, self.theta))
        return raw + TWO_PI * round((approx - raw) / TWO_PI)

    def rdot(self, t) -> np.ndarray:
        """Radial velocity rdot = (x.p) * (1 + lam*r**2)**2 / r along the orbit."""
        y = self.dense(np.asarray(t, dtype=float))
        x1, x2, p1, p2 = y
        r2 = x1 * x1 + x2 * x2
        s = x1 * p1 + x2 * p2
        return s * (1.0 + self.params.lam * r2) ** 2 / np.sqrt(r2)

    def to_csv(self) -> str:
        """CSV export, header ``t,x1,x2,p1,p2,r,theta,H,Lz``, 17 significant digits."""
        lines = ["t,x1,x2,p1,p2,r,theta,H,Lz"]
        for i in range(len(self.t)):
            row = (
                self.t[i],
                *self.states[i],
                self.r[i],
                self.theta[i],
                self.H[i],
                self.Lz[i],
            )
            lines.append(",".join(f"{v:.17g}" for v in row))
        return "\n".join(lines) + "\n"


def turning_points_json(points: list[TurningPoint]) -> list[dict]:
    """JSON-ready rows ``{t, r, theta, kind}`` for detected turning points."""
    return [
        {"t": p.t, "r": p.r, "theta": p.theta, "kind": p.kind.value} for p in points
    ]


def integrate(
    state0: PhaseState,
    params: SystemParams,
    t_end: float,
    rel_tol: float = 1e-10,
    n_samples: int = 2001,
    r_min_guard: float = R_MIN_GUARD,
) -> Trajectory:
    """Integrate Hamilton's equations with an adaptive Dormand-Prince scheme.

    Uses DOP853 with dense output.  Raises
    :class:`~screened_sphere.errors.SingularOrbitError` if the orbit falls
    below ``r_min_guard`` (both potentials are singular at r = 0) and
    :class:`~screened_sphere.errors.AccuracyError` if energy or angular
    momentum drift beyond 10x the requested tolerance.
    """
    if state0.r <= 0.0:
        raise RadiusError("initial state must have r > 0")
    if not 1e-13 <= rel_tol <= 1e-6:
        raise ValueError(f"rel_tol must lie in [1e-13, 1e-6], got {rel_tol}")
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")

    def hit_guard(t, y, _params):
        return math.hypot(y[0], y[1]) - r_min_guard

    hit_guard.terminal = True
    hit_guard.direction = -1

    # Local truncation errors accumulate to a few tens of the solver
    # tolerance over long spans; integrating two decades tighter keeps the
    # 10x drift contract on the returned trajectory with margin.
    rtol_eff = max(rel_tol * 1e-2, 2.5e-14)
    sol = solve_ivp(
        _rhs,
        (0.0, t_end),
        state0.as_array(),
        method="DOP853",
        rtol=rtol_eff,
        atol=rtol_eff * 1e-2,
        dense_output=True,
        events=hit_guard,
        args=(params,),
    )
    if sol.status == 1:
        raise SingularOrbitError(
            f"orbit collapsed to r <= {r_min_guard:g} at t = {sol.t_events[0][0]:.6g}"
        )
    if not sol.success:
        # step-size underflow at vanishing radius is the collapse itself:
        # the time to the singularity drops below float spacing before the
        # radius event can fire
        r_final = math.hypot(sol.y[0, -1], sol.y[1, -1])
        if r_final <= max(1e-5, 1e3 * r_min_guard):
            raise SingularOrbitError(
                f"orbit collapsed to r = {r_final:.3g} at t = {sol.t[-1]:.6g}"
            )
        raise StiffnessError(f"integrator failed: {sol.message}")

    t = np.linspace(0.0, t_end, n_samples)
    y = sol.sol(t)
    x1, x2, p1, p2 = y
    r = np.hypot(x1, x2)
    theta = np.unwrap(np.arctan2(x2, x1))
    h = _h_arrays(x1, x2, p1, p2, params)
    lz = _lz_arrays(x1, x2, p1, p2)

    bound = 10.0 * rel_tol
    h_drift = float(np.max(np.abs(h - h[0]))) / max(1.0, abs(float(h[0])))
    lz_drift = float(np.max(np.abs(lz - lz[0])))
    if h_drift > bound or lz_drift > bound:
        raise AccuracyError(
            f"conservation drift exceeds 10x tolerance: "
            f"dH = {h_drift:.3e}, dLz = {lz_drift:.3e}, bound = {bound:.3e}"
        )

    return Trajectory(
        t=t,
        states=y.T.copy(),
        r=r,
        theta=theta,
        H=h,
        Lz=lz,
        params=params,
        rel_tol=rel_tol,
        dense=sol.sol,
    )


# --- turning points -------------------------------------------------------

def find_turning_points(traj: Trajectory) -> list[TurningPoint]:
    """Locate all rdot = 0 points by bracketing sign changes of x.p.

    Roots are refined with Brent's method on the dense output and
    classified by the sign change (rdot -/+ is a perihelion, +/- an
    aphelion).  A trajectory with rdot = 0 everywhere sets the
    ``circular`` flag instead of reporting discrete points.  Results are
    cached on the trajectory.
    """
    if traj._scanned:
        return traj.turning_points

    n_det = int(min(max(4 * len(traj.t), 20000), 200000))
    tg = np.linspace(traj.t[0], traj.t[-1], n_det)
    y = traj.dense(tg)
    s = y[0] * y[2] + y[1] * y[3]  # x.p, same zeros as rdot
    speed = float(np.max(np.hypot(y[2], y[3])))
    s_scale = float(np.max(np.abs(s)))

    if s_scale <= 1e-8 * max(1.0, speed * float(np.max(traj.r))):
        traj.circular = True
        traj._scanned = True
        return traj.turning_points

    def s_of(t: float) -> float:
        yy = traj.dense(t)
        return float(yy[0] * yy[2] + yy[1] * yy[3])

    points: list[TurningPoint] = []

    def add_point(t_star: float, rising: bool) -> None:
        st = traj.state_at(t_star)
        rdot = float(traj.rdot(t_star))
        if abs(rdot) > TURNING_RDOT_TOL:
            raise AccuracyError(f"turning-point refinement left |rdot| = {rdot:.3e}")
        kind = TurningKind.PERIHELION if rising else TurningKind.APHELION
        points.append(
            TurningPoint(
                t=t_star, state=st, kind=kind, r=st.r, theta=traj.theta_at(t_star)
            )
        )

    # The initial sample may itself be a turning point (launches at
    # perihelion/aphelion are common); sign-change bracketing misses it.
    if abs(s[0]) <= 1e-12 * max(1.0, s_scale):
        add_point(tg[0], rising=bool(s[np.argmax(np.abs(s) > 1e-9 * s_scale)] > 0))

    sign = np.sign(s)
    for i in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
        t_star = brentq(s_of, tg[i], tg[i + 1], xtol=1e-13, rtol=8.9e-16)
        add_point(float(t_star), rising=bool(s[i] < 0))

    points.sort(key=lambda p: p.t)
    traj.turning_points = points
    traj._scanned = True
    return points


# --- closed-form orbits ---------------------------------------------------

@dataclass(frozen=True)
class OrbitShape:
    """Constants of a closed-form orbit: energy, Lz, alpha, phase offset."""

    E: float
    lz: float
    alpha: float
    theta0: float = 0.0

    @classmethod
    def from_state(
        cls, state: PhaseState, params: SystemParams, theta0: float = 0.0
    ) -> "OrbitShape":
        lz = _lz_arrays(state.x1, state.x2, state.p1, state.p2)
        return cls(
            E=hamiltonian(state, params),
            lz=float(lz),
            alpha=orbit_alpha(params, float(lz)),
            theta0=theta0,
        )

    def shifted_energy(self, params: SystemParams) -> float:
        """Et = E - (lam/2)*Lz**2, the only combination curvature enters."""
        return self.E - 0.5 * params.lam * self.lz**2


def orbit_alpha(params: SystemParams, lz: float) -> float:
    """Frequency ratio alpha = sqrt(1 - 2k/Lz**2); requires 2k < Lz**2."""
    lz2 = lz * lz
    if 2.0 * params.k >= lz2:
        raise ImaginaryAlphaError(
            f"2k = {2 * params.k:g} >= Lz**2 = {lz2:g}: alpha is imaginary"
        )
    return math.sqrt(1.0 - 2.0 * params.k / lz2)


def closed_form_radius(theta, shape: OrbitShape, params: SystemParams):
    """r(theta) from the closed-form orbit equation for the given system.

    Raises :class:`~screened_sphere.errors.OrbitDomainError` where the
    bracket is nonpositive (angles outside the bound range).
    """
    theta = np.asarray(theta, dtype=float)
    et = shape.shifted_energy(params)
    la2 = shape.lz**2 * shape.alpha**2
    if params.kind is SystemKind.COULOMB:
        disc = 1.0 + 2.0 * et * la2
        if disc < 0.0:
            raise OrbitDomainError(f"coulomb orbit discriminant negative: {disc:g}")
        u = (1.0 + math.sqrt(disc) * np.cos(shape.alpha * (theta - shape.theta0))) / la2
        if np.any(u <= 0.0):
            raise OrbitDomainError("1/r nonpositive: angle outside the bound range")
        r = 1.0 / u
    else:
        disc = et * et - la2
        if disc < 0.0:
            raise OrbitDomainError(f"oscillator orbit discriminant negative: {disc:g}")
        w = (et + math.sqrt(disc) * np.cos(2.0 * shape.alpha * (theta - shape.theta0))) / la2
        if np.any(w <= 0.0):
            raise OrbitDomainError("1/r**2 nonpositive: angle outside the bound range")
        r = 1.0 / np.sqrt(w)
    return float(r) if r.ndim == 0 else r


def radial_theta_period(params: SystemParams, alpha: float) -> float:
    """Period of the radial oscillation in theta: 2*pi/alpha, halved for the oscillator."""
    return (TWO_PI if params.kind is SystemKind.COULOMB else math.pi) / alpha


def fit_theta0(traj: Trajectory, params: SystemParams) -> float:
    """Phase offset theta0 aligning the closed form with the trajectory.

    Anchors a closed-form perihelion on the first detected perihelion,
    then refines by least squares over one radial period.  A circular
    orbit accepts any phase; returns 0 by convention.
    """
    points = find_turning_points(traj)
    if traj.circular:
        return 0.0
    if not points:
        raise NoTurningPointError("trajectory has no detected turning point")

    perihelia = [p for p in points if p.kind is TurningKind.PERIHELION]
    anchor = perihelia[0] if perihelia else points[0]
    shape0 = OrbitShape.from_state(traj.state_at(0.0), params)
    period = radial_theta_period(params, shape0.alpha)
    theta_p = anchor.theta
    if anchor.kind is TurningKind.APHELION:
        # aphelion sits half a radial period from the nearest perihelion
        theta_p -= 0.5 * period

    window = (traj.theta >= theta_p - 0.5 * period) & (
        traj.theta <= theta_p + 0.5 * period
    )
    if int(np.count_nonzero(window)) < 10:
        window = np.ones_like(traj.theta, dtype=bool)
    th = traj.theta[window]
    rr = traj.r[window]

    def resid(v):
        shape = OrbitShape(shape0.E, shape0.lz, shape0.alpha, theta0=float(v[0]))
        return closed_form_radius(th, shape, params) - rr

    fit = least_squares(resid, x0=[theta_p], method="lm")
    return float(fit.x[0])


def orbit_residual(
    traj: Trajectory,
    params: SystemParams,
    shape: Optional[OrbitShape] = None,
) -> tuple[float, float]:
    """(max closed-form deviation, max orbit-relation residual) over samples.

    The first is max |r - r_closed(theta)| / r with theta0 fitted unless a
    shape is supplied.  The second is the pointwise residual of

        (Lz**2/2) * [(dr/dtheta)**2 / r**4 + 1/r**2] + V(r) - (E - lam*Lz**2/2),

    with dr/dtheta evaluated analytically along the dense output as
    (x.p) * r * (1 + lam*r**2) / Lz.
    """
    if shape is None:
        theta0 = fit_theta0(traj, params)
        shape = OrbitShape.from_state(traj.state_at(0.0), params, theta0=theta0)

    r_cf = closed_form_radius(traj.theta, shape, params)
    dev_cf = float(np.max(np.abs(traj.r - r_cf) / traj.r))

    x1, x2, p1, p2 = traj.states.T
    s = x1 * p1 + x2 * p2
    lz = traj.Lz
    r = traj.r
    dr_dtheta = s * r * (1.0 + params.lam * r**2) / lz
    lhs = 0.5 * lz**2 * (dr_dtheta**2 / r**4 + 1.0 / r**2) + potential(r, params)
    rhs = traj.H - 0.5 * params.lam * lz**2
    dev_ode = float(np.max(np.abs(lhs - rhs)))
    return dev_cf, dev_ode


# --- closure --------------------------------------------------------------

@dataclass(frozen=True)
class ClosureResult:
    """Rational-alpha closure analysis for given system and angular momentum."""

    alpha: float
    closed: bool
    p: Optional[int] = None
    q: Optional[int] = None
    closure_angle: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "closed": self.closed,
            "p": self.p,
            "q": self.q,
            "closure_angle": self.closure_angle,
        }


def closure_analysis(params: SystemParams, lz: float) -> ClosureResult:
    """Detect rational alpha = p/q (q <= 64) and the phase-closure angle.

    The orbit returns to its initial phase point once the unwrapped
    azimuth advances by a common multiple of 2*pi and the radial period
    in theta.  For alpha = p/q in lowest terms that is 2*pi*q for the
    coulomb system; the oscillator's doubled angle halves it to pi*q
    when q is even.
    """
    alpha = orbit_alpha(params, lz)
    frac = Fraction(alpha).limit_denominator(MAX_DENOMINATOR)
    if abs(alpha - float(frac)) > RATIONAL_TOL:
        return ClosureResult(alpha=alpha, closed=False)
    p, q = frac.numerator, frac.denominator
    if params.kind is SystemKind.COULOMB:
        angle = TWO_PI * q
    else:
        angle = math.pi * q if q % 2 == 0 else TWO_PI * q
    return ClosureResult(alpha=alpha, closed=True, p=p, q=q, closure_angle=angle)


def state_at_theta(traj: Trajectory, theta_target: float) -> PhaseState:
    """Dense-output state where the unwrapped azimuth crosses theta_target."""
    sign = 1.0 if traj.theta[-1] >= traj.theta[0] else -1.0  # Lz < 0 runs clockwise
    th = sign * traj.theta
    target = sign * theta_target
    if not th[0] <= target <= th[-1]:
        raise ValueError(
            f"theta_target {theta_target:g} outside trajectory range "
            f"[{traj.theta[0]:g}, {traj.theta[-1]:g}]"
        )
    idx = int(np.searchsorted(th, target))
    if idx == 0:
        return traj.state_at(traj.t[0])
    t_star = brentq(
        lambda t: sign * traj.theta_at(t) - target,
        traj.t[idx - 1],
        traj.t[idx],
        xtol=1e-13,
        rtol=8.9e-16,
    )
    return traj.state_at(float(t_star))
