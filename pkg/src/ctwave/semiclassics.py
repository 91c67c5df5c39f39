"""The four semiclassical wavefunctions and their assembly into sweeps.

All formulas share the prefactor b^(-1/2) pi^(-1/4) / sqrt(m_qq + i m_qp)
with the square-root branch following the phase of m_qq + i m_qp
continuously from its t = 0 value 1 (positive root).  They differ in which
trajectory supplies the action and tangent matrix:

* complex-trajectory value: the complex root with u(0) = z, X(T) = x_f;
  exponent (i/hbar) F with F = S + p (x0 - q/2) + i hbar (x0 - q)^2 / 2 b^2;
* thawed-Gaussian value: the real central trajectory (q, p), quadratic
  exponent in x_f - q_T;
* (x_f, q) value: real trajectory q -> x_f with initial momentum p_i,
  Gaussian damping in (p - p_i)/c;
* (x_f, p) value: real trajectory with initial momentum p from q_i,
  Gaussian damping in (q - q_i)/b.

``assemble`` drives the root searches and sums contributions per final
position, applying the non-contributing-trajectory rules for secondary
families: (a) drop members with Im F < 0, (b) drop members whose Im F lies
below the main family's, (c) place the actual cut inside the (b)-to-(a) band
where the removed amplitude, and hence the jump in the wavefunction, is
smallest.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rootsearch
from .dynamics import central_endpoint, propagate
from .errors import (CausticDivergenceError, BranchContinuityError,
                     DomainError, MissingMainFamilyError, NoTrajectoryError)
from .model import CoherentState, TangentMatrix, TrajectoryRecord
from .potentials import FreeParticle, Harmonic
from .rootsearch import (MomentumShootingMap, MomentumShot,
                         PositionShootingMap, PositionShot, klauder_start)

__all__ = [
    "BranchTracker",
    "WavefunctionSample",
    "exponent_F",
    "exponent_F_values",
    "psi_ct",
    "psi_tga",
    "psi_xfq",
    "psi_xfp",
    "filter_families",
    "assemble",
]

_CAUSTIC_EPS = 1e-10
_NEAR_CAUSTIC = 1e-3


class BranchTracker:
    """Continuity tracker for the phase of m_qq + i m_qp.

    Feed it consecutive values along a sweep (in time, or along a family);
    it accumulates the unwrapped phase and returns the branch-consistent
    square root.  Consecutive inputs must differ in phase by less than
    pi/2 (the sampling-density contract); the tracker starts at 1 + 0i,
    the identity-matrix value.
    """

    def __init__(self, initial: complex = 1.0 + 0.0j):
        self._value = complex(initial)
        self._theta = cmath.phase(self._value)

    @property
    def value(self) -> complex:
        return self._value

    @property
    def theta(self) -> float:
        """Accumulated (unwrapped) phase."""
        return self._theta

    @property
    def winding(self) -> int:
        """Accumulated winding in half-turns."""
        return int(round((self._theta - cmath.phase(self._value)) / math.pi))

    def update(self, value: complex) -> complex:
        """Advance to ``value``; returns the branch-continuous sqrt(value)."""
        value = complex(value)
        if value == 0:
            raise CausticDivergenceError("m_qq + i m_qp vanished in a sweep")
        step = cmath.phase(value / self._value)
        if abs(step) >= math.pi / 2:
            raise BranchContinuityError(
                "phase jumped by %.3f rad >= pi/2; sample the sweep more densely"
                % step)
        self._theta += step
        self._value = value
        return math.sqrt(abs(value)) * cmath.exp(0.5j * self._theta)


@dataclass(frozen=True)
class WavefunctionSample:
    """One evaluated wavefunction value with its per-trajectory breakdown."""

    x_f: float
    psi: complex
    contributions: tuple       # ((label, complex value), ...)
    formula: str               # "CT" | "QP" | "XFQ" | "XFP"
    flags: tuple = ()


def _prefactor(state: CoherentState) -> float:
    return state.b ** -0.5 * math.pi ** -0.25


def _branch_sqrt(m_plus: complex, theta: float) -> complex:
    """sqrt(m_plus) on the branch fixed by the unwrapped phase theta."""
    return math.sqrt(abs(m_plus)) * cmath.exp(0.5j * theta)


def exponent_F(trajectory: TrajectoryRecord, state: CoherentState) -> complex:
    """Exponent F = S + p (x0 - q/2) + i hbar (x0 - q)^2 / (2 b^2).

    The complex-trajectory wavefunction is proportional to
    exp(i F / hbar); Im F >= 0 is required of contributing trajectories
    (it vanishes exactly on the real central trajectory).
    """
    x0 = trajectory.x0
    return (trajectory.S + state.p * (x0 - state.q / 2.0)
            + 1j * state.hbar * (x0 - state.q) ** 2 / (2.0 * state.b ** 2))


def exponent_F_values(S, x0, state: CoherentState):
    """Vectorised :func:`exponent_F` over arrays of actions and start points."""
    return (S + state.p * (x0 - state.q / 2.0)
            + 1j * state.hbar * (x0 - state.q) ** 2 / (2.0 * state.b ** 2))


def psi_ct(member, state: CoherentState,
           tracker: Optional[BranchTracker] = None) -> complex:
    """Complex-trajectory wavefunction value for one converged root.

    ``member`` may be anything carrying a ``trajectory`` record (WPoint,
    FamilyMember) or a record itself.  The square-root branch comes from the
    record's own integrated phase history unless an explicit tracker is
    supplied (useful for externally ordered sweeps).
    """
    rec = getattr(member, "trajectory", member)
    m_plus = rec.m.m_plus
    if abs(m_plus) <= _CAUSTIC_EPS:
        raise CausticDivergenceError(
            "prefactor pole: |m_qq + i m_qp| = %.3g" % abs(m_plus))
    root = tracker.update(m_plus) if tracker is not None \
        else _branch_sqrt(m_plus, rec.branch_phase)
    F = exponent_F(rec, state)
    return _prefactor(state) / root * complex(np.exp(1j * F / state.hbar))


def psi_tga(state: CoherentState, central, x_f):
    """Thawed-Gaussian value from the real central trajectory.

    ``central`` is a :class:`~ctwave.dynamics.CentralEndpoint`; x_f may be a
    scalar or an array.  Exact for quadratic Hamiltonians, a single Gaussian
    always.
    """
    m = central.m
    m_plus = m.m_plus
    if abs(m_plus) <= _CAUSTIC_EPS:
        raise CausticDivergenceError(
            "prefactor pole: |m_qq + i m_qp| = %.3g" % abs(m_plus))
    width = (m.m_pp - 1j * m.m_pq) / m_plus
    dx = (np.asarray(x_f) - central.q_T) / state.b
    expo = (1j / state.hbar * central.S
            + 1j * state.p * state.q / (2.0 * state.hbar)
            + 1j / state.hbar * central.p_T * (np.asarray(x_f) - central.q_T)
            - 0.5 * width * dx * dx)
    vals = _prefactor(state) / _branch_sqrt(m_plus, central.theta) * np.exp(expo)
    return vals if np.ndim(x_f) else complex(vals)


def psi_xfq(state: CoherentState, shot: MomentumShot, x_f: float) -> complex:
    """Mixed-boundary value from the real trajectory q -> x_f.

    Carries a Gaussian damping in the mismatch between the trajectory's
    initial momentum p_i and the packet momentum p.
    """
    rec = shot.trajectory
    m = rec.m
    m_plus = m.m_plus
    if abs(m_plus) <= _CAUSTIC_EPS:
        raise CausticDivergenceError(
            "prefactor pole: |m_qq + i m_qp| = %.3g" % abs(m_plus))
    dp = (state.p - shot.p_i) / state.c
    expo = (1j / state.hbar * rec.S
            + 1j * state.p * state.q / (2.0 * state.hbar)
            - 0.5 * (1j * m.m_qp / m_plus) * dp * dp)
    return _prefactor(state) / _branch_sqrt(m_plus, rec.branch_phase) \
        * complex(np.exp(expo))


def psi_xfp(state: CoherentState, shot: PositionShot, x_f: float) -> complex:
    """Mixed-boundary value from the real trajectory with momentum p to x_f.

    Damped in the mismatch between the trajectory's initial position q_i and
    the packet centre q.
    """
    rec = shot.trajectory
    m = rec.m
    m_plus = m.m_plus
    if abs(m_plus) <= _CAUSTIC_EPS:
        raise CausticDivergenceError(
            "prefactor pole: |m_qq + i m_qp| = %.3g" % abs(m_plus))
    dq = (state.q - shot.q_i) / state.b
    expo = (1j / state.hbar * rec.S
            + 1j * state.p * state.q / (2.0 * state.hbar)
            + 1j / state.hbar * state.p * (shot.q_i - state.q)
            - 0.5 * (m.m_qq / m_plus) * dq * dq)
    return _prefactor(state) / _branch_sqrt(m_plus, rec.branch_phase) \
        * complex(np.exp(expo))


def _xfq_damping(state: CoherentState, shot: MomentumShot) -> float:
    m = shot.trajectory.m
    dp = (state.p - shot.p_i) / state.c
    return float((0.5 * (1j * m.m_qp / m.m_plus) * dp * dp).real)


def _xfp_damping(state: CoherentState, shot: PositionShot) -> float:
    m = shot.trajectory.m
    dq = (state.q - shot.q_i) / state.b
    return float((0.5 * (m.m_qq / m.m_plus) * dq * dq).real)


def _gaussian_saddle_invalid(m: TangentMatrix, state: CoherentState) -> bool:
    """True when Im(dp_i/dx_i) >= hbar/b^2, outside Gaussian-integral validity."""
    if abs(m.m_qp) < 1e-12:
        return False
    S_ii = (state.c / state.b) * m.m_qq / m.m_qp
    return (-S_ii).imag >= state.c / state.b


def _member_amplitude(member, state) -> float:
    try:
        return abs(psi_ct(member, state))
    except CausticDivergenceError:
        return math.inf


def filter_families(families, state: CoherentState):
    """Assign contributing/cut statuses using the secondary-family rules.

    The main family is never cut.  For each secondary, members with
    Im F < 0 are marked bad (rule a), members beaten by the main family's
    Im F at the same x_f are marked bad (rule b), and the cut boundary is
    then placed inside the band between the first (b)-violation and the
    first (a)-violation at the member whose removed amplitude is smallest
    (rule c, the Stokes-cut heuristic).  Mutates and returns ``families``.
    """
    mains = [f for f in families if f.is_main]
    if len(mains) != 1 or not mains[0].contains_w0(1e-6):
        raise MissingMainFamilyError(
            "expected exactly one family containing the w = 0 trajectory")
    main = mains[0]
    main_imF = {m.grid_index: m.F.imag for m in main.members
                if m.grid_index is not None}

    for fam in families:
        for m in fam.members:
            m.status = "contributing"
        if fam.is_main:
            continue
        ms = [m for m in fam.members if m.grid_index is not None]
        if not ms:
            continue
        bad_a = [m.F.imag < 0 for m in ms]
        bad = []
        for m, ba in zip(ms, bad_a):
            if ba:
                bad.append(True)
                continue
            ref = main_imF.get(m.grid_index)
            bad.append(ref is not None and m.F.imag < ref)

        runs = []
        start = None
        for i, flag in enumerate(bad + [True]):
            if not flag and start is None:
                start = i
            if flag and start is not None:
                runs.append((start, i - 1))
                start = None
        if not runs:
            for m in fam.members:
                m.status = "cut"
            continue
        s, e = max(runs, key=lambda r: r[1] - r[0])

        if s > 0:
            ja = 0
            for i in range(s - 1, -1, -1):
                if bad_a[i]:
                    ja = i
                    break
            k = min(range(ja, s), key=lambda i: _member_amplitude(ms[i], state))
            for i in range(0, k + 1):
                ms[i].status = "cut"
        if e < len(ms) - 1:
            jb = len(ms) - 1
            for i in range(e + 1, len(ms)):
                if bad_a[i]:
                    jb = i
                    break
            k = min(range(e + 1, jb + 1),
                    key=lambda i: _member_amplitude(ms[i], state))
            for i in range(k, len(ms)):
                ms[i].status = "cut"
    return families


# ---------------------------------------------------------------------------
# closed-form free-particle evaluators (building blocks of the wall scenario)

def _free_ct_value(state: CoherentState, x: float, T: float) -> complex:
    free = FreeParticle()
    om = state.omega
    w = (x - state.q - state.p * T / state.mu) / (1.0 + 1j * om * T)
    X0, P0 = klauder_start(state, w)
    rec = propagate(free, X0, P0, T, state).trajectory
    return psi_ct(rec, state)


def _free_xfq_value(state: CoherentState, x: float, T: float) -> complex:
    p_i = state.mu * (x - state.q) / T
    rec = propagate(FreeParticle(), state.q, p_i, T, state).trajectory
    return psi_xfq(state, MomentumShot(p_i=p_i, trajectory=rec), x)


def _free_xfp_value(state: CoherentState, x: float, T: float) -> complex:
    q_i = x - state.p * T / state.mu
    rec = propagate(FreeParticle(), q_i, state.p, T, state).trajectory
    return psi_xfp(state, PositionShot(q_i=q_i, trajectory=rec), x)


def _assemble_wall(formula: str, state: CoherentState, grid, T: float):
    """Hard-wall sweep by the method of images; analytic, no ODE runs.

    Every formula evaluates its free-particle expression at x_f and at the
    mirror point -x_f; the mirror term enters with an explicit reflection
    sign -1.  The thawed Gaussian follows the bounced central trajectory
    instead: one term only, so no interference ever.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0.0):
        raise DomainError("hard-wall scenario is defined for x_f > 0 only")
    if T <= 0:
        raise DomainError("wall propagation needs T > 0")
    if not (state.q > 0 and state.p < 0):
        raise DomainError("wall scenario expects q > 0, p < 0 (packet moving in)")

    samples = []
    if formula == "QP":
        t_reflect = state.q * state.mu / abs(state.p)
        ce = central_endpoint(FreeParticle(), state, T)
        if T <= t_reflect:
            vals = psi_tga(state, ce, grid)
            contribs = [(("direct", complex(v)),) for v in np.atleast_1d(vals)]
        else:
            vals = -psi_tga(state, ce, -grid)
            contribs = [(("reflected", complex(v)),) for v in np.atleast_1d(vals)]
        for x, v, cb in zip(grid, np.atleast_1d(vals), contribs):
            samples.append(WavefunctionSample(float(x), complex(v), cb, "QP"))
        return samples

    evaluator = {"CT": _free_ct_value, "XFQ": _free_xfq_value,
                 "XFP": _free_xfp_value}[formula]
    for x in grid:
        direct = evaluator(state, float(x), T)
        reflected = -evaluator(state, float(-x), T)
        samples.append(WavefunctionSample(
            float(x), direct + reflected,
            (("direct", direct), ("reflected", reflected)), formula))
    return samples


def _assemble_qp(model, state: CoherentState, grid, T: float):
    ce = central_endpoint(model, state, T)
    vals = psi_tga(state, ce, grid)
    flags = ()
    if abs(ce.m.m_plus) < _NEAR_CAUSTIC:
        flags = ("near_caustic",)
    return [WavefunctionSample(float(x), complex(v), (("central", complex(v)),),
                               "QP", flags)
            for x, v in zip(grid, np.atleast_1d(vals))]


def _assemble_ct(model, state: CoherentState, grid, T: float, search):
    disc = rootsearch.discover_families(model, state, T, grid, search)
    filter_families(disc.families, state)
    fam_maps = [(fam.label, fam.by_grid_index()) for fam in disc.families]
    dx = grid[1] - grid[0] if grid.size > 1 else state.b
    caustic_xfs = [ca.X_T.real for ca in disc.caustics
                   if abs(ca.X_T.imag) <= search.caustic_im_xf_max * state.b]

    samples = []
    for i, x in enumerate(grid):
        contribs = []
        flags = set()
        for label, members in fam_maps:
            mem = members.get(i)
            if mem is None or mem.status != "contributing":
                continue
            try:
                val = psi_ct(mem, state)
            except CausticDivergenceError:
                flags.add("caustic_divergence")
                continue
            contribs.append((label, val))
            if abs(mem.trajectory.m.m_plus) < _NEAR_CAUSTIC:
                flags.add("near_caustic")
            if _gaussian_saddle_invalid(mem.trajectory.m, state):
                flags.add("gaussian_invalid")
        if any(abs(x - cx) <= search.near_caustic_grid_pts * dx
               for cx in caustic_xfs):
            flags.add("near_caustic")
        if not contribs:
            flags.add("no_trajectory")
        samples.append(WavefunctionSample(
            float(x), sum(v for _, v in contribs) if contribs else 0.0j,
            tuple(contribs), "CT", tuple(sorted(flags))))
    return samples


def _assemble_shooting(formula: str, model, state: CoherentState, grid,
                       T: float, search):
    if formula == "XFQ":
        shooting = MomentumShootingMap(model, state, T, search=search)
        value_of, damping_of = psi_xfq, _xfq_damping
    else:
        shooting = PositionShootingMap(model, state, T, search=search)
        value_of, damping_of = psi_xfp, _xfp_damping

    # degenerate focus of the linear flow: x_f no longer determines the
    # trajectory; the formula's continuous limit is the (exact) thawed
    # Gaussian of the same quadratic system
    if isinstance(model, (FreeParticle, Harmonic)) and shooting.degenerate:
        ce = central_endpoint(model, state, T)
        vals = psi_tga(state, ce, grid)
        return [WavefunctionSample(float(x), complex(v),
                                   (("central-limit", complex(v)),),
                                   formula, ("degenerate_focus",))
                for x, v in zip(grid, np.atleast_1d(vals))]

    roots_per = [shooting.solve(float(x)) for x in grid]
    significant = [[s for s in roots if damping_of(state, s) <= search.damping_skip]
                   for roots in roots_per]

    # trim a margin at interior ends of the covered x_f ranges: the formulas
    # blow up where shooting branches fold, so the sweep is cut slightly
    # before the end points
    n = grid.size
    covered = np.array([len(s) > 0 for s in significant])
    trimmed = np.zeros(n, dtype=bool)
    i = 0
    while i < n:
        if not covered[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and covered[j + 1]:
            j += 1
        margin = search.cut_margin * (grid[j] - grid[i])
        if i > 0:
            trimmed |= covered & (grid < grid[i] + margin)
        if j < n - 1:
            trimmed |= covered & (grid > grid[j] - margin)
        i = j + 1

    samples = []
    for i, x in enumerate(grid):
        flags = set()
        contribs = []
        if not roots_per[i]:
            flags.add("no_trajectory")
        elif trimmed[i]:
            flags.add("branch_end_trimmed")
        else:
            for k, shot in enumerate(significant[i]):
                try:
                    val = value_of(state, shot, float(x))
                except CausticDivergenceError:
                    flags.add("caustic_divergence")
                    continue
                contribs.append(("branch-%d" % k, val))
            if not contribs and not flags:
                flags.add("all_damped")
        samples.append(WavefunctionSample(
            float(x), sum(v for _, v in contribs) if contribs else 0.0j,
            tuple(contribs), formula, tuple(sorted(flags))))
    return samples


def assemble(formula: str, scenario, x_f_grid, T: float):
    """Evaluate one formula over a final-position grid at time T.

    ``scenario`` carries the model, the state, the hard-wall flag and the
    search settings.  Per-point trouble (escapes, empty shooting lists,
    caustic poles) is recorded in sample flags rather than raised, so a
    sweep always completes.
    """
    formula = formula.upper()
    if formula not in ("CT", "QP", "XFQ", "XFP"):
        raise ValueError("unknown formula %r" % formula)
    grid = np.asarray(x_f_grid, dtype=float)
    state = scenario.state
    if getattr(scenario, "hard_wall", False):
        return _assemble_wall(formula, state, grid, T)
    model = scenario.model
    if formula == "QP":
        return _assemble_qp(model, state, grid, T)
    if formula == "CT":
        return _assemble_ct(model, state, grid, T, scenario.search)
    return _assemble_shooting(formula, model, state, grid, T, scenario.search)


def samples_array(samples) -> np.ndarray:
    """Stack sample values into a complex array (helper for comparisons)."""
    return np.array([s.psi for s in samples], dtype=complex)


def sum_branches(state: CoherentState, shots, x_f: float, formula: str) -> complex:
    """Coherent sum of shooting branches; raises when there is none.

    Small helper mirroring the per-sample behaviour of ``assemble`` for
    callers that want the error instead of a flagged zero sample.
    """
    if not shots:
        raise NoTrajectoryError("no real trajectory reaches x_f = %g" % x_f)
    value_of = psi_xfq if formula.upper() == "XFQ" else psi_xfp
    return sum(value_of(state, s, x_f) for s in shots)
