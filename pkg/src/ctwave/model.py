"""Core domain types: coherent-state parameters, complex phase-space points,
tangent matrices and trajectory records.

Conventions used throughout the package:

* The initial packet is a minimum-uncertainty Gaussian centred at ``(q, p)``
  with position width ``b/sqrt(2)``.  It is the coherent state of a reference
  harmonic oscillator of mass ``mu`` and frequency ``omega``, with length and
  momentum scales ``b = sqrt(hbar/(mu*omega))`` and ``c = hbar/b``.
* Tangent (monodromy) matrices are stored dimensionless in the scaled basis
  ``(dx/b, dp/c)``; their determinant is 1 for any Hamiltonian flow.
* Trajectories may carry complex positions and momenta; all records keep the
  running action and tangent matrix alongside the phase-space path.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import FocalPointError

_SQRT2 = math.sqrt(2.0)

__all__ = [
    "CoherentState",
    "ComplexPhasePoint",
    "TangentMatrix",
    "TrajectoryRecord",
    "coherent_overlap",
    "to_uv",
    "from_uv",
    "stationarity_residual",
    "action_second_derivatives",
]


@dataclass(frozen=True)
class CoherentState:
    """Gaussian packet centred at ``(q, p)`` with scales set by ``(hbar, mu, omega)``.

    ``b`` and ``c`` are derived, not free, so that ``b * c == hbar`` holds
    exactly.  The complex label is ``z = (q/b + i p/c) / sqrt(2)``.
    """

    q: float
    p: float
    hbar: float = 1.0
    mu: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.omega <= 0:
            raise ValueError("omega must be positive")

    @classmethod
    def from_width(cls, q: float, p: float, b: float,
                   hbar: float = 1.0, mu: float = 1.0) -> "CoherentState":
        """Build a state from its length scale ``b`` instead of ``omega``."""
        if b <= 0:
            raise ValueError("b must be positive")
        return cls(q=q, p=p, hbar=hbar, mu=mu, omega=hbar / (mu * b * b))

    @property
    def b(self) -> float:
        """Length scale, sqrt(hbar / (mu * omega))."""
        return math.sqrt(self.hbar / (self.mu * self.omega))

    @property
    def c(self) -> float:
        """Momentum scale; defined as hbar / b so that b * c == hbar exactly."""
        return self.hbar / self.b

    @property
    def z(self) -> complex:
        """Complex coherent-state label (q/b + i p/c) / sqrt(2)."""
        return (self.q / self.b + 1j * self.p / self.c) / _SQRT2


@dataclass(frozen=True)
class ComplexPhasePoint:
    """A point (X, P) of the complexified phase space at time t."""

    X: complex
    P: complex
    t: float = 0.0

    def __post_init__(self):
        if not (cmath.isfinite(self.X) and cmath.isfinite(self.P)
                and math.isfinite(self.t)):
            raise ValueError("phase-space point has non-finite components")


@dataclass(frozen=True)
class TangentMatrix:
    """2x2 linearized flow map in the scaled basis (dx/b, dp/c).

    Maps initial displacements to final ones:
    ``(dx_f/b, dp_f/c) = m . (dx_i/b, dp_i/c)``.  Entries are dimensionless
    and complex along complex trajectories; det(m) = 1 always.
    """

    m_qq: complex
    m_qp: complex
    m_pq: complex
    m_pp: complex

    @classmethod
    def identity(cls) -> "TangentMatrix":
        return cls(1.0 + 0.0j, 0.0j, 0.0j, 1.0 + 0.0j)

    @classmethod
    def from_array(cls, a) -> "TangentMatrix":
        return cls(complex(a[0, 0]), complex(a[0, 1]),
                   complex(a[1, 0]), complex(a[1, 1]))

    def as_array(self) -> np.ndarray:
        return np.array([[self.m_qq, self.m_qp], [self.m_pq, self.m_pp]],
                        dtype=complex)

    @property
    def det(self) -> complex:
        return self.m_qq * self.m_pp - self.m_qp * self.m_pq

    @property
    def m_plus(self) -> complex:
        """The combination m_qq + i m_qp entering every prefactor."""
        return self.m_qq + 1j * self.m_qp


@dataclass(frozen=True)
class TrajectoryRecord:
    """A (possibly complex) trajectory with action and tangent-matrix history.

    Arrays are aligned on the sample times, which increase strictly from 0 to
    the final time.  ``branch_phases`` holds the continuously unwrapped phase
    of m_qq + i m_qp, starting at 0 for the identity matrix; prefactor square
    roots take their branch from it.
    """

    times: np.ndarray          # (n,) real
    positions: np.ndarray      # (n,) complex X(t)
    momenta: np.ndarray        # (n,) complex P(t)
    actions: np.ndarray        # (n,) complex S(t), S(0) = 0
    tangents: np.ndarray       # (n, 2, 2) complex, identity at t = 0
    branch_phases: np.ndarray  # (n,) real, unwrapped arg(m_qq + i m_qp)
    energy0: complex

    @property
    def samples(self) -> tuple:
        """Ordered phase-space samples along the trajectory."""
        return tuple(ComplexPhasePoint(complex(X), complex(P), float(t))
                     for t, X, P in zip(self.times, self.positions,
                                        self.momenta))

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def x0(self) -> complex:
        return complex(self.positions[0])

    @property
    def p0(self) -> complex:
        return complex(self.momenta[0])

    @property
    def X_T(self) -> complex:
        return complex(self.positions[-1])

    @property
    def P_T(self) -> complex:
        return complex(self.momenta[-1])

    @property
    def S(self) -> complex:
        """Accumulated action at the final time."""
        return complex(self.actions[-1])

    @property
    def m(self) -> TangentMatrix:
        """Tangent matrix at the final time."""
        return TangentMatrix.from_array(self.tangents[-1])

    @property
    def branch_phase(self) -> float:
        """Unwrapped phase of m_qq + i m_qp at the final time."""
        return float(self.branch_phases[-1])


def coherent_overlap(state: CoherentState, x):
    """Position amplitude <x|z> of the packet; works on scalars and arrays.

    Equals pi^(-1/4) b^(-1/2) exp(-(x-q)^2 / 2b^2) exp(i p (x - q/2) / hbar).
    """
    b = state.b
    gauss = np.exp(-((x - state.q) ** 2) / (2.0 * b * b))
    phase = np.exp(1j * state.p * (x - state.q / 2.0) / state.hbar)
    return math.pi ** -0.25 * b ** -0.5 * gauss * phase


def to_uv(point: ComplexPhasePoint, state: CoherentState) -> tuple[complex, complex]:
    """Holomorphic coordinates u = (X/b + iP/c)/sqrt2, v = (X/b - iP/c)/sqrt2.

    For complex (X, P) the pair is independent: v != conj(u) in general.
    """
    xs = point.X / state.b
    ps = 1j * point.P / state.c
    return (xs + ps) / _SQRT2, (xs - ps) / _SQRT2


def from_uv(u: complex, v: complex, state: CoherentState) -> tuple[complex, complex]:
    """Inverse of :func:`to_uv`; returns the phase-space pair (X, P)."""
    X = state.b * (u + v) / _SQRT2
    P = state.c * (u - v) / (1j * _SQRT2)
    return X, P


def stationarity_residual(x0: complex, p0: complex, state: CoherentState) -> complex:
    """Residual (x0-q)/b + i (p0-p)/c of the saddle condition u(0) = z.

    Vanishes exactly when the initial point is the stationary point of the
    overlap integral; linear in (x0, p0).
    """
    return (x0 - state.q) / state.b + 1j * (p0 - state.p) / state.c


def action_second_derivatives(m: TangentMatrix, state: CoherentState
                              ) -> tuple[complex, complex, complex]:
    """Second derivatives (S_ii, S_if, S_ff) of the action from the tangent matrix.

    S_ii = (c/b) m_qq/m_qp,  S_if = -(c/b)/m_qp,  S_ff = (c/b) m_pp/m_qp.

    Raises
    ------
    FocalPointError
        If |m_qp| < 1e-12: the trajectory is at a focal point, where the
        coordinate-space (Van Vleck) prefactor diverges.
    """
    if abs(m.m_qp) < 1e-12:
        raise FocalPointError(
            "m_qp = %r: focal point, action derivatives diverge" % (m.m_qp,))
    r = state.c / state.b
    return (r * m.m_qq / m.m_qp, -r / m.m_qp, r * m.m_pp / m.m_qp)
