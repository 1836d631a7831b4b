"""Extended conserved quantities and the Poisson-bracket engine.

For the screened coulomb system the extended Runge-Lenz components (with
pi the curvature-corrected momentum) are

    R'x =  pi_y*Lz - (1 + 2k/r) * x/r
    R'y = -pi_x*Lz - (1 + 2k/r) * y/r

and for the screened oscillator the Fradkin-type quantities are

    Q'xy = (1 + 2k/r**4)*x*y + pi_x*pi_y
    Q'1  = [(1 + 2k/r**4)*(x**2 - y**2) + pi_x**2 - pi_y**2] / 2.

For k > 0 these are conserved only where rdot = 0 (aphelia/perihelia);
together with Lz they close into a polynomial deformation of SO(3)/SU(2)
(a Higgs algebra) whose classical bracket identities are

    {R'x, Lz} = -R'y          {Q'xy, Lz} =  2*Q'1
    {R'y, Lz} =  R'x          {Q'1,  Lz} = -2*Q'xy
    {R'x, R'y} = (-2H + 2*lam*Lz**2 - 2*k*lam) * Lz
    {Q'xy, Q'1} = -(2 + lam*(2H - lam*Lz**2)) * Lz

The quadratic identities drop the quantum operator-ordering constant
(+lam/4 in the coulomb commutator); the finite-difference bracket mode
exists to pin those constants independently of the analytic gradients.

Every observable carries an analytic phase-space gradient; brackets are

    {f, g} = sum_i (df/dx_i * dg/dp_i - df/dp_i * dg/dx_i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dynamics import (
    PhaseState,
    SystemKind,
    SystemParams,
    Trajectory,
    find_turning_points,
    hamiltonian,
    potential_derivative,
)
from .errors import NoTurningPointError, RadiusError

_FD_STEP = 6.0e-6  # ~cbrt(eps): optimal central-difference step on unit scales

Gradient = np.ndarray  # (d/dx1, d/dx2, d/dp1, d/dp2)


@dataclass(frozen=True)
class Observable:
    """Named phase-space function with an analytic gradient."""

    name: str
    value: Callable[[PhaseState, SystemParams], float]
    gradient: Callable[[PhaseState, SystemParams], Gradient]


@dataclass(frozen=True)
class BracketReport:
    """Residual summary of one bracket identity over sampled states."""

    identity: str
    n_samples: int
    max_abs_residual: float
    mean_abs_residual: float

    def to_dict(self) -> dict:
        return {
            "identity": self.identity,
            "n_samples": self.n_samples,
            "max_abs_residual": self.max_abs_residual,
            "mean_abs_residual": self.mean_abs_residual,
        }


# --- scalar evaluators ----------------------------------------------------

def angular_momentum(state: PhaseState) -> float:
    """Lz = x1*p2 - x2*p1, exactly conserved for any radial potential."""
    return state.x1 * state.p2 - state.x2 * state.p1


def _pi(state: PhaseState, lam: float) -> tuple[float, float]:
    s = state.x1 * state.p1 + state.x2 * state.p2
    return state.p1 + lam * s * state.x1, state.p2 + lam * s * state.x2


def runge_lenz(state: PhaseState, params: SystemParams) -> tuple[float, float]:
    """Extended Runge-Lenz components (R'x, R'y) for the coulomb system."""
    if params.kind is not SystemKind.COULOMB:
        raise ValueError("runge_lenz is defined for the coulomb system")
    r = state.r
    if r <= 0.0:
        raise RadiusError("runge_lenz requires r > 0")
    lz = angular_momentum(state)
    pix, piy = _pi(state, params.lam)
    screen = 1.0 + 2.0 * params.k / r
    return (piy * lz - screen * state.x1 / r, -pix * lz - screen * state.x2 / r)


def fradkin_quantities(state: PhaseState, params: SystemParams) -> tuple[float, float]:
    """Fradkin-type quantities (Q'xy, Q'1) for the oscillator system."""
    if params.kind is not SystemKind.OSCILLATOR:
        raise ValueError("fradkin_quantities is defined for the oscillator system")
    r = state.r
    if r <= 0.0:
        raise RadiusError("fradkin_quantities requires r > 0")
    pix, piy = _pi(state, params.lam)
    screen = 1.0 + 2.0 * params.k / r**4
    qxy = screen * state.x1 * state.x2 + pix * piy
    q1 = 0.5 * (screen * (state.x1**2 - state.x2**2) + pix**2 - piy**2)
    return qxy, q1


# --- analytic gradients ---------------------------------------------------

def _grad_lz(state: PhaseState, params: SystemParams) -> Gradient:
    return np.array([state.p2, -state.p1, -state.x2, state.x1])


def _grad_h(state: PhaseState, params: SystemParams) -> Gradient:
    x, y, px, py = state.x1, state.x2, state.p1, state.p2
    lam = params.lam
    r2 = x * x + y * y
    r = math.sqrt(r2)
    s = x * px + y * py
    a = 1.0 + lam * r2
    psq = px * px + py * py
    dvdr = potential_derivative(r, params)
    common = lam * (psq + lam * s * s)
    return np.array(
        [
            x * common + a * lam * s * px + dvdr * x / r,
            y * common + a * lam * s * py + dvdr * y / r,
            a * (px + lam * s * x),
            a * (py + lam * s * y),
        ]
    )


def _grad_runge_x(state: PhaseState, params: SystemParams) -> Gradient:
    x, y, px, py = state.x1, state.x2, state.p1, state.p2
    lam, k = params.lam, params.k
    r2 = x * x + y * y
    r = math.sqrt(r2)
    r3, r4 = r2 * r, r2 * r2
    s = x * px + y * py
    lz = x * py - y * px
    _, piy = _pi(state, lam)
    return np.array(
        [
            lam * px * y * lz + piy * py
            - (1.0 / r - x * x / r3) - 2.0 * k * (1.0 / r2 - 2.0 * x * x / r4),
            lam * (py * y + s) * lz - piy * px + x * y / r3 + 4.0 * k * x * y / r4,
            lam * x * y * lz - piy * y,
            (1.0 + lam * y * y) * lz + piy * x,
        ]
    )


def _grad_runge_y(state: PhaseState, params: SystemParams) -> Gradient:
    x, y, px, py = state.x1, state.x2, state.p1, state.p2
    lam, k = params.lam, params.k
    r2 = x * x + y * y
    r = math.sqrt(r2)
    r3, r4 = r2 * r, r2 * r2
    s = x * px + y * py
    lz = x * py - y * px
    pix, _ = _pi(state, lam)
    return np.array(
        [
            -lam * (px * x + s) * lz - pix * py + x * y / r3 + 4.0 * k * x * y / r4,
            -lam * py * x * lz + pix * px
            - (1.0 / r - y * y / r3) - 2.0 * k * (1.0 / r2 - 2.0 * y * y / r4),
            -(1.0 + lam * x * x) * lz + pix * y,
            -lam * x * y * lz - pix * x,
        ]
    )


def _grad_fradkin_xy(state: PhaseState, params: SystemParams) -> Gradient:
    x, y, px, py = state.x1, state.x2, state.p1, state.p2
    lam, k = params.lam, params.k
    r2 = x * x + y * y
    r4, r6 = r2 * r2, r2 * r2 * r2
    s = x * px + y * py
    pix, piy = _pi(state, lam)
    screen = 1.0 + 2.0 * k / r4
    return np.array(
        [
            screen * y - 8.0 * k * x * x * y / r6
            + lam * (px * x + s) * piy + lam * px * y * pix,
            screen * x - 8.0 * k * x * y * y / r6
            + lam * py * x * piy + lam * (py * y + s) * pix,
            (1.0 + lam * x * x) * piy + lam * x * y * pix,
            lam * x * y * piy + (1.0 + lam * y * y) * pix,
        ]
    )


def _grad_fradkin_1(state: PhaseState, params: SystemParams) -> Gradient:
    x, y, px, py = state.x1, state.x2, state.p1, state.p2
    lam, k = params.lam, params.k
    r2 = x * x + y * y
    r4, r6 = r2 * r2, r2 * r2 * r2
    s = x * px + y * py
    diff = x * x - y * y
    pix, piy = _pi(state, lam)
    screen = 1.0 + 2.0 * k / r4
    return np.array(
        [
            -4.0 * k * x * diff / r6 + screen * x
            + lam * (px * x + s) * pix - lam * px * y * piy,
            -4.0 * k * y * diff / r6 - screen * y
            + lam * py * x * pix - lam * (py * y + s) * piy,
            (1.0 + lam * x * x) * pix - lam * x * y * piy,
            lam * x * y * pix - (1.0 + lam * y * y) * piy,
        ]
    )


LZ = Observable("Lz", lambda st, pr: angular_momentum(st), _grad_lz)
HAMILTONIAN = Observable("H", hamiltonian, _grad_h)
RUNGE_LENZ_X = Observable("R'x", lambda st, pr: runge_lenz(st, pr)[0], _grad_runge_x)
RUNGE_LENZ_Y = Observable("R'y", lambda st, pr: runge_lenz(st, pr)[1], _grad_runge_y)
FRADKIN_XY = Observable("Q'xy", lambda st, pr: fradkin_quantities(st, pr)[0], _grad_fradkin_xy)
FRADKIN_1 = Observable("Q'1", lambda st, pr: fradkin_quantities(st, pr)[1], _grad_fradkin_1)


def extended_quantities(params: SystemParams) -> tuple[Observable, Observable]:
    """The pair of turning-point-conserved observables for the system."""
    if params.kind is SystemKind.COULOMB:
        return RUNGE_LENZ_X, RUNGE_LENZ_Y
    return FRADKIN_XY, FRADKIN_1


# --- bracket engine ---------------------------------------------------------

def finite_difference_gradient(
    func: Callable[[PhaseState, SystemParams], float],
    state: PhaseState,
    params: SystemParams,
    rel_step: float = _FD_STEP,
) -> Gradient:
    """Central-difference phase-space gradient, the oracle for analytic ones."""
    z = state.as_array()
    grad = np.empty(4)
    for i in range(4):
        h = rel_step * max(1.0, abs(z[i]))
        zp, zm = z.copy(), z.copy()
        zp[i] += h
        zm[i] -= h
        grad[i] = (
            func(PhaseState.from_array(zp), params)
            - func(PhaseState.from_array(zm), params)
        ) / (2.0 * h)
    return grad


def poisson_bracket(
    f: Observable,
    g: Observable,
    state: PhaseState,
    params: SystemParams,
    method: str = "analytic",
) -> float:
    """{f, g} at a state, from analytic or finite-difference gradients."""
    if method == "analytic":
        gf = f.gradient(state, params)
        gg = g.gradient(state, params)
    elif method == "fd":
        gf = finite_difference_gradient(f.value, state, params)
        gg = finite_difference_gradient(g.value, state, params)
    else:
        raise ValueError(f"unknown bracket method {method!r}")
    return float(gf[0] * gg[2] + gf[1] * gg[3] - gf[2] * gg[0] - gf[3] * gg[1])


def product_observable(f: Observable, g: Observable) -> Observable:
    """Product f*g with the product-rule gradient (for Leibniz checks)."""
    return Observable(
        name=f"{f.name}*{g.name}",
        value=lambda st, pr: f.value(st, pr) * g.value(st, pr),
        gradient=lambda st, pr: (
            f.gradient(st, pr) * g.value(st, pr) + g.gradient(st, pr) * f.value(st, pr)
        ),
    )


def sample_states(
    params: SystemParams, n: int, seed: int = 0, rng: np.random.Generator | None = None
) -> list[PhaseState]:
    """Well-conditioned random phase states for bracket verification.

    Positions are uniform over the annulus 0.3 <= r <= 3 (area measure),
    momenta uniform over [-2, 2]**2; states with 2k >= Lz**2 are rejected
    so orbit quantities stay real.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    states: list[PhaseState] = []
    while len(states) < n:
        u = rng.uniform(0.0, 1.0)
        r = math.sqrt(0.3**2 + u * (3.0**2 - 0.3**2))
        phi = rng.uniform(0.0, 2.0 * math.pi)
        p1, p2 = rng.uniform(-2.0, 2.0, size=2)
        st = PhaseState(r * math.cos(phi), r * math.sin(phi), float(p1), float(p2))
        if 2.0 * params.k >= angular_momentum(st) ** 2:
            continue
        states.append(st)
    return states


def _identity_report(
    name: str,
    residual: Callable[[PhaseState], float],
    states: Sequence[PhaseState],
) -> BracketReport:
    res = np.array([abs(residual(st)) for st in states])
    return BracketReport(
        identity=name,
        n_samples=len(states),
        max_abs_residual=float(res.max()),
        mean_abs_residual=float(res.mean()),
    )


def verify_coulomb_algebra(
    params: SystemParams,
    n_samples: int = 1000,
    seed: int = 0,
    method: str = "analytic",
) -> list[BracketReport]:
    """Residuals of the coulomb Higgs-algebra identities over random states."""
    if params.kind is not SystemKind.COULOMB:
        raise ValueError("verify_coulomb_algebra needs coulomb params")
    states = sample_states(params, n_samples, seed=seed)
    lam = params.lam

    def lin_x(st: PhaseState) -> float:
        return poisson_bracket(RUNGE_LENZ_X, LZ, st, params, method) + runge_lenz(st, params)[1]

    def lin_y(st: PhaseState) -> float:
        return poisson_bracket(RUNGE_LENZ_Y, LZ, st, params, method) - runge_lenz(st, params)[0]

    def quad(st: PhaseState) -> float:
        lz = angular_momentum(st)
        target = (-2.0 * hamiltonian(st, params) + 2.0 * lam * lz**2 - 2.0 * params.k * lam) * lz
        return poisson_bracket(RUNGE_LENZ_X, RUNGE_LENZ_Y, st, params, method) - target

    return [
        _identity_report("{R'x,Lz}+R'y", lin_x, states),
        _identity_report("{R'y,Lz}-R'x", lin_y, states),
        _identity_report("{R'x,R'y}-(-2H+2*lam*Lz^2-2*k*lam)*Lz", quad, states),
    ]


def verify_oscillator_algebra(
    params: SystemParams,
    n_samples: int = 1000,
    seed: int = 0,
    method: str = "analytic",
) -> list[BracketReport]:
    """Residuals of the oscillator Higgs-algebra identities over random states."""
    if params.kind is not SystemKind.OSCILLATOR:
        raise ValueError("verify_oscillator_algebra needs oscillator params")
    states = sample_states(params, n_samples, seed=seed)
    lam = params.lam

    def lin_xy(st: PhaseState) -> float:
        return poisson_bracket(FRADKIN_XY, LZ, st, params, method) - 2.0 * fradkin_quantities(st, params)[1]

    def lin_1(st: PhaseState) -> float:
        return poisson_bracket(FRADKIN_1, LZ, st, params, method) + 2.0 * fradkin_quantities(st, params)[0]

    def quad(st: PhaseState) -> float:
        lz = angular_momentum(st)
        target = -(2.0 + lam * (2.0 * hamiltonian(st, params) - lam * lz**2)) * lz
        return poisson_bracket(FRADKIN_XY, FRADKIN_1, st, params, method) - target

    return [
        _identity_report("{Q'xy,Lz}-2Q'1", lin_xy, states),
        _identity_report("{Q'1,Lz}+2Q'xy", lin_1, states),
        _identity_report("{Q'xy,Q'1}+(2+lam*(2H-lam*Lz^2))*Lz", quad, states),
    ]


# --- turning-point conservation ---------------------------------------------

@dataclass(frozen=True)
class TurningConservationReport:
    """|{quantity, H}| at turning points versus generic points of one orbit.

    For k > 0 the extended quantities are conserved only where rdot = 0:
    the turning-point maximum should sit at root-finder noise while the
    generic maximum stays finite.  ``values_at_turning`` holds the
    quantities themselves, which agree across successive same-kind
    turning points.
    """

    quantity_names: tuple[str, str]
    n_turning_points: int
    bracket_at_turning: np.ndarray   # (n_turning, 2)
    values_at_turning: np.ndarray    # (n_turning, 2)
    turning_kinds: tuple[str, ...]
    max_abs_at_turning: float
    generic_max: float

    def to_dict(self) -> dict:
        return {
            "quantities": list(self.quantity_names),
            "n_turning_points": self.n_turning_points,
            "max_abs_bracket_at_turning": self.max_abs_at_turning,
            "generic_max_abs_bracket": self.generic_max,
            "bracket_at_turning": [list(row) for row in self.bracket_at_turning],
            "values_at_turning": [list(row) for row in self.values_at_turning],
            "turning_kinds": list(self.turning_kinds),
        }


def turning_point_conservation(
    traj: Trajectory, params: SystemParams
) -> TurningConservationReport:
    """Evaluate {quantity, H} along a trajectory at and away from rdot = 0."""
    obs_a, obs_b = extended_quantities(params)
    points = find_turning_points(traj)
    if not points:
        raise NoTurningPointError(
            "no turning points detected"
            + (" (orbit is circular)" if traj.circular else "")
        )

    at_turning = np.array(
        [
            [
                poisson_bracket(obs_a, HAMILTONIAN, p.state, params),
                poisson_bracket(obs_b, HAMILTONIAN, p.state, params),
            ]
            for p in points
        ]
    )
    values = np.array(
        [
            [obs_a.value(p.state, params), obs_b.value(p.state, params)]
            for p in points
        ]
    )
    generic = max(
        max(
            abs(poisson_bracket(obs_a, HAMILTONIAN, st, params)),
            abs(poisson_bracket(obs_b, HAMILTONIAN, st, params)),
        )
        for st in (PhaseState.from_array(row) for row in traj.states)
    )
    return TurningConservationReport(
        quantity_names=(obs_a.name, obs_b.name),
        n_turning_points=len(points),
        bracket_at_turning=at_turning,
        values_at_turning=values,
        turning_kinds=tuple(p.kind.value for p in points),
        max_abs_at_turning=float(np.max(np.abs(at_turning))),
        generic_max=float(generic),
    )
