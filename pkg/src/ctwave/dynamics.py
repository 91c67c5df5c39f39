"""Hamiltonian trajectory integration, complex initial data included.

The propagated state is the trajectory (X, P) together with the scaled
tangent matrix m, the running action S = int (P Xdot - H) dt and the
continuously unwrapped phase of m_qq + i m_qp (used downstream to pick
square-root branches).  The variational system is integrated jointly with
the trajectory:

    dm/dt = A(t) m,   A = [[0, omega], [-V''(X)/(mu omega), 0]]

in the (dx/b, dp/c) basis of the coherent-state scales.

Free particle and harmonic potentials are dispatched to closed-form
trajectories; everything else goes through an adaptive Dormand-Prince 8(5,3)
integration (scipy's DOP853) with the complex state handled as pairs of
reals.  ``batch_endpoints`` provides a vectorised fixed-step endpoint map for
exploratory scans over many initial conditions; converged roots are always
re-verified with the adaptive path.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from ._format import fmt
from .model import CoherentState, TangentMatrix, TrajectoryRecord
from .potentials import FreeParticle, Harmonic

__all__ = [
    "IntegratorSettings",
    "PropagationStatus",
    "PropagationResult",
    "CentralEndpoint",
    "WallTrajectory",
    "propagate",
    "central_endpoint",
    "wall_trajectories",
    "batch_endpoints",
    "write_trajectory_csv",
]


@dataclass(frozen=True)
class IntegratorSettings:
    """Tolerances and sampling controls for trajectory integration."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    dense_output_stride: Optional[float] = None  # None: ~64 samples per run
    escape_factor: float = 1e3                   # escape radius in units of b
    use_closed_form: bool = True                 # analytic free/harmonic paths

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.dense_output_stride is not None and self.dense_output_stride <= 0:
            raise ValueError("dense_output_stride must be positive")

    def lean(self) -> "IntegratorSettings":
        """Same tolerances, endpoint-only sampling (for root-search loops)."""
        return replace(self, dense_output_stride=math.inf)


class PropagationStatus(enum.Enum):
    COMPLETED = "completed"
    ESCAPED = "escaped"
    STEP_FAILURE = "step_failure"


@dataclass(frozen=True)
class PropagationResult:
    trajectory: TrajectoryRecord
    status: PropagationStatus

    @property
    def completed(self) -> bool:
        return self.status is PropagationStatus.COMPLETED


@dataclass(frozen=True)
class CentralEndpoint:
    """Endpoint data of the real central trajectory started at (q, p)."""

    q_T: float
    p_T: float
    S: float
    m: TangentMatrix
    theta: float                  # unwrapped phase of m_qq + i m_qp
    record: TrajectoryRecord


@dataclass(frozen=True)
class WallTrajectory:
    """One classical path from x_i to x_f in a hard-wall scenario."""

    S: float
    p_i: float
    p_f: float
    kind: str  # "direct" | "reflected"


DEFAULT_SETTINGS = IntegratorSettings()


def _sample_times(T: float, stride: Optional[float]) -> np.ndarray:
    if T == 0.0:
        return np.array([0.0])
    if stride is None:
        stride = T / 64.0
    n = max(1, int(math.ceil(T / stride - 1e-12)))
    return np.linspace(0.0, T, n + 1)


def _record_from_arrays(t, X, P, mqq, mqp, mpq, mpp, S, theta, energy0):
    n = len(t)
    tangents = np.empty((n, 2, 2), dtype=complex)
    tangents[:, 0, 0] = mqq
    tangents[:, 0, 1] = mqp
    tangents[:, 1, 0] = mpq
    tangents[:, 1, 1] = mpp
    return TrajectoryRecord(
        times=np.asarray(t, dtype=float),
        positions=np.asarray(X, dtype=complex),
        momenta=np.asarray(P, dtype=complex),
        actions=np.asarray(S, dtype=complex),
        tangents=tangents,
        branch_phases=np.asarray(theta, dtype=float),
        energy0=complex(energy0),
    )


def _closed_form_free(X0, P0, T, state, stride):
    t = _sample_times(T, stride)
    mu, om = state.mu, state.omega
    X = X0 + P0 * t / mu
    P = np.full_like(X, P0)
    S = (X * P - X0 * P0) / 2.0
    one = np.ones_like(t)
    theta = np.arctan2(om * t, 1.0)
    return _record_from_arrays(t, X, P, one, om * t, 0.0 * t, one, S, theta,
                               P0 * P0 / (2.0 * mu))


def _closed_form_harmonic(model, X0, P0, T, state, stride):
    t = _sample_times(T, stride)
    mu, om = state.mu, state.omega
    Omega = model.omega * math.sqrt(model.mass / mu)
    cos, sin = np.cos(Omega * t), np.sin(Omega * t)
    X = X0 * cos + P0 / (mu * Omega) * sin
    P = P0 * cos - mu * Omega * X0 * sin
    S = (X * P - X0 * P0) / 2.0
    mqq = cos
    mqp = (om / Omega) * sin
    mpq = -(Omega / om) * sin
    mpp = cos
    # unwrapped phase of m_+ = cos + i (om/Omega) sin: it winds monotonically,
    # passing k*pi exactly when Omega t = k*pi
    k = np.floor(Omega * t / math.pi)
    theta = k * math.pi + np.angle((mqq + 1j * mqp) * np.power(-1.0, k))
    energy0 = P0 * P0 / (2.0 * mu) + model.v(X0)
    return _record_from_arrays(t, X, P, mqq, mqp, mpq, mpp, S, theta, energy0)


def _trivial_record(model, X0, P0, state):
    e0 = P0 * P0 / (2.0 * state.mu) + model.v(X0)
    return _record_from_arrays([0.0], [X0], [P0], [1.0 + 0j], [0j], [0j],
                               [1.0 + 0j], [0j], [0.0], e0)


def _ode_rhs(model, mu, omega):
    def rhs(t, y):
        z = y[:14].view(np.complex128)
        X, P, mqq, mqp, mpq, mpp = z[0], z[1], z[2], z[3], z[4], z[5]
        out = np.empty(15)
        dz = out[:14].view(np.complex128)
        kap = model.d2v(X) / (mu * omega)
        dz[0] = P / mu
        dz[1] = -model.dv(X)
        dz[2] = omega * mpq
        dz[3] = omega * mpp
        dz[4] = -kap * mqq
        dz[5] = -kap * mqp
        dz[6] = P * P / (2.0 * mu) - model.v(X)
        out[14] = (omega * (mpq + 1j * mpp) / (mqq + 1j * mqp)).imag
        return out

    return rhs


def propagate(model, X0, P0, T: float, state: CoherentState,
              settings: Optional[IntegratorSettings] = None) -> PropagationResult:
    """Integrate Hamilton's equations from (X0, P0) for time T.

    Complex initial data is allowed; the tangent matrix and action evolve
    alongside the trajectory.  Free and harmonic models use closed forms
    unless ``settings.use_closed_form`` is off.

    Returns
    -------
    PropagationResult
        ``status`` is ESCAPED when |X| exceeded ``escape_factor * b`` (the
        record then ends at the escape time), STEP_FAILURE if the integrator
        could not meet its tolerances, COMPLETED otherwise.
    """
    if settings is None:
        settings = DEFAULT_SETTINGS
    if T < 0:
        raise ValueError("T must be non-negative")
    X0 = complex(X0)
    P0 = complex(P0)

    if T == 0.0:
        return PropagationResult(_trivial_record(model, X0, P0, state),
                                 PropagationStatus.COMPLETED)

    stride = settings.dense_output_stride
    if settings.use_closed_form:
        if isinstance(model, FreeParticle):
            return PropagationResult(
                _closed_form_free(X0, P0, T, state, stride),
                PropagationStatus.COMPLETED)
        if isinstance(model, Harmonic):
            return PropagationResult(
                _closed_form_harmonic(model, X0, P0, T, state, stride),
                PropagationStatus.COMPLETED)

    y0 = np.empty(15)
    z0 = y0[:14].view(np.complex128)
    z0[0] = X0
    z0[1] = P0
    z0[2] = 1.0
    z0[3] = 0.0
    z0[4] = 0.0
    z0[5] = 1.0
    z0[6] = 0.0
    y0[14] = 0.0

    radius = settings.escape_factor * state.b

    def escaped(t, y):
        return y[0] * y[0] + y[1] * y[1] - radius * radius

    escaped.terminal = True

    sol = solve_ivp(_ode_rhs(model, state.mu, state.omega), (0.0, T), y0,
                    method="DOP853", rtol=settings.rel_tol,
                    atol=settings.abs_tol, max_step=settings.max_step,
                    t_eval=_sample_times(T, stride), events=escaped)

    t = sol.t
    rows = sol.y
    if sol.status == 1 and sol.t_events[0].size:
        t = np.append(t, sol.t_events[0][0])
        rows = np.hstack([rows, sol.y_events[0][0][:, None]])
    if t.size == 0 or t[0] != 0.0:  # keep the initial sample in any outcome
        t = np.concatenate([[0.0], t])
        rows = np.hstack([y0[:, None], rows])

    z = rows[:14].T.copy().view(np.complex128)
    energy0 = P0 * P0 / (2.0 * state.mu) + model.v(X0)
    record = _record_from_arrays(t, z[:, 0], z[:, 1], z[:, 2], z[:, 3],
                                 z[:, 4], z[:, 5], z[:, 6], rows[14], energy0)
    if sol.status == 1:
        status = PropagationStatus.ESCAPED
    elif sol.status == 0:
        status = PropagationStatus.COMPLETED
    else:
        status = PropagationStatus.STEP_FAILURE
    return PropagationResult(record, status)


def central_endpoint(model, state: CoherentState, T: float,
                     settings: Optional[IntegratorSettings] = None) -> CentralEndpoint:
    """Propagate the packet centre (q, p); all outputs are real."""
    result = propagate(model, state.q, state.p, T, state, settings)
    if not result.completed:
        raise RuntimeError("central trajectory did not complete: %s"
                           % result.status.value)
    rec = result.trajectory
    return CentralEndpoint(q_T=rec.X_T.real, p_T=rec.P_T.real, S=rec.S.real,
                           m=rec.m, theta=rec.branch_phase, record=rec)


def wall_trajectories(x_i: float, x_f: float, T: float, mu: float) -> list:
    """The two classical paths x_i -> x_f beside a hard wall at the origin.

    The direct path is free; the reflected one has the wall-image action
    mu (x_f + x_i)^2 / 2T with p_i = -p_f.
    """
    if x_i <= 0 or x_f <= 0 or T <= 0:
        raise ValueError("wall trajectories need x_i, x_f, T > 0")
    p_direct = mu * (x_f - x_i) / T
    p_refl = mu * (x_f + x_i) / T
    return [
        WallTrajectory(S=mu * (x_f - x_i) ** 2 / (2.0 * T),
                       p_i=p_direct, p_f=p_direct, kind="direct"),
        WallTrajectory(S=mu * (x_f + x_i) ** 2 / (2.0 * T),
                       p_i=-p_refl, p_f=p_refl, kind="reflected"),
    ]


def batch_endpoints(model, state: CoherentState, X0, P0, T: float, *,
                    dt: float = 0.008, escape_radius: Optional[float] = None):
    """Vectorised endpoint map over many initial conditions (fixed-step RK4).

    Exploration-grade integration used by w-plane scans and shooting
    bracketing.  Entries whose position leaves the escape radius (or go
    non-finite) are frozen at their last good value and flagged.

    Returns
    -------
    (X_T, P_T, (m_qq, m_qp, m_pq, m_pp), S, escaped)
    """
    mu, om = state.mu, state.omega
    if escape_radius is None:
        escape_radius = DEFAULT_SETTINGS.escape_factor * state.b
    Xb, Pb = np.broadcast_arrays(np.asarray(X0, dtype=complex),
                                 np.asarray(P0, dtype=complex))
    X = Xb.astype(complex).copy()
    P = Pb.astype(complex).copy()
    one = np.ones(X.shape, dtype=complex)
    zero = np.zeros(X.shape, dtype=complex)
    y = [X, P, one.copy(), zero.copy(), zero.copy(), one.copy(), zero.copy()]
    alive = np.ones(X.shape, dtype=bool)
    if T == 0.0:
        return y[0], y[1], (y[2], y[3], y[4], y[5]), y[6], ~alive

    def deriv(s):
        X, P, mqq, mqp, mpq, mpp, _ = s
        kap = model.d2v(X) / (mu * om)
        return (P / mu, -model.dv(X), om * mpq, om * mpp,
                -kap * mqq, -kap * mqp, P * P / (2.0 * mu) - model.v(X))

    n = max(1, int(math.ceil(T / dt - 1e-12)))
    h = T / n
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        for _ in range(n):
            k1 = deriv(y)
            k2 = deriv([a + 0.5 * h * k for a, k in zip(y, k1)])
            k3 = deriv([a + 0.5 * h * k for a, k in zip(y, k2)])
            k4 = deriv([a + h * k for a, k in zip(y, k3)])
            ynext = [a + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
                     for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)]
            bad = np.zeros(X.shape, dtype=bool)
            for comp in ynext:
                bad |= ~np.isfinite(comp)
            bad |= np.abs(ynext[0]) > escape_radius
            alive &= ~bad
            y = [np.where(alive, comp_next, comp)
                 for comp, comp_next in zip(y, ynext)]
    return y[0], y[1], (y[2], y[3], y[4], y[5]), y[6], ~alive


def write_trajectory_csv(record: TrajectoryRecord, path) -> None:
    """Dump a trajectory record as CSV (time, phase space, action, tangents)."""
    cols = ("t,Re X,Im X,Re P,Im P,Re S,Im S,"
            "Re m_qq,Im m_qq,Re m_qp,Im m_qp,Re m_pq,Im m_pq,Re m_pp,Im m_pp")
    with open(path, "w") as fh:
        fh.write(cols + "\n")
        for i, t in enumerate(record.times):
            m = record.tangents[i]
            vals = [t,
                    record.positions[i].real, record.positions[i].imag,
                    record.momenta[i].real, record.momenta[i].imag,
                    record.actions[i].real, record.actions[i].imag,
                    m[0, 0].real, m[0, 0].imag, m[0, 1].real, m[0, 1].imag,
                    m[1, 0].real, m[1, 0].imag, m[1, 1].real, m[1, 1].imag]
            fh.write(",".join(fmt(v) for v in vals) + "\n")
