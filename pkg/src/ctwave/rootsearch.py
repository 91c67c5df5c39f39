"""Finding the classical trajectories each wavefunction formula needs.

Three kinds of searches live here:

* real shooting over the initial momentum (trajectories q -> x_f) or the
  initial position (trajectories with fixed initial momentum p reaching x_f);
* the complex search over w for trajectories started at

      X(0) = q + w,      P(0) = p + i (c/b) w,

  which satisfy the coherent-state saddle condition automatically for every
  complex w.  Propagating them defines an analytic endpoint map
  X_T = X_T(w); the trajectories a final position x_f needs are the roots of
  X_T(w) = x_f.  The complex derivative of the map is m_qq + i m_qp, so
  Newton steps come for free with the integrated tangent matrix;
* detection of the map's critical points (phase-space caustics,
  dX_T/dw = 0), where the map turns two-to-one and new root families appear.

Roots found on one final-position grid point are continued to neighbouring
ones, forming families parameterized by x_f.  The family containing w = 0
(the packet's real central trajectory) is labelled "main".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from typing import Optional

import numpy as np

from .dynamics import (DEFAULT_SETTINGS, IntegratorSettings, PropagationStatus,
                       batch_endpoints, propagate)
from .errors import NearCausticError, NoConvergenceError
from .model import CoherentState, TrajectoryRecord
from .potentials import FreeParticle, Harmonic

__all__ = [
    "SearchSettings",
    "WPoint",
    "CausticPoint",
    "FamilyMember",
    "TrajectoryFamily",
    "WMapField",
    "Discovery",
    "MomentumShot",
    "PositionShot",
    "MomentumShootingMap",
    "PositionShootingMap",
    "klauder_start",
    "wpoint",
    "wmap_scan",
    "refine_w",
    "trace_family",
    "detect_caustics",
    "discover_families",
    "shoot_q_to_xf",
    "shoot_p_to_xf",
    "cauchy_riemann_residual",
]


@dataclass(frozen=True)
class SearchSettings:
    """Knobs for the root searches; lengths are in units of the packet scales."""

    w_window: float = 4.0        # half-width of the w lattice, units of b
    w_step: float = 0.05         # lattice spacing, units of b
    scan_dt: float = 0.008       # RK4 step for exploratory scans
    families: str = "auto"       # "auto" | "main-only"
    p_window: float = 8.0        # momentum-shooting half window, units of c
    p_count: int = 1601
    q_window: float = 8.0        # position-shooting half window, units of b
    q_count: int = 1601
    newton_max_iter: int = 50
    continuation_max_jump: float = 0.5   # units of b, per x_f grid step
    caustic_threshold: float = 0.8       # |dX_T/dw| local-min cut for refinement
    caustic_max_count: int = 12
    caustic_im_xf_max: float = 2.0       # seed secondaries only when |Im X_T(w_c)| below this (units of b)
    secondary_max_count: int = 6
    cut_margin: float = 0.02             # branch fraction trimmed at fold ends
    damping_skip: float = 40.0           # drop shooting branches damped below e^-40
    near_caustic_grid_pts: int = 3       # flag samples this close to a caustic
    escape_radius_factor: float = 1e3    # units of b, scan escape bound

    def __post_init__(self):
        if self.families not in ("auto", "main-only"):
            raise ValueError("families must be 'auto' or 'main-only'")


DEFAULT_SEARCH = SearchSettings()
_LEAN = DEFAULT_SETTINGS.lean()


def klauder_start(state: CoherentState, w: complex) -> tuple[complex, complex]:
    """Initial condition X(0) = q + w, P(0) = p + i (c/b) w."""
    return state.q + w, state.p + 1j * (state.c / state.b) * w


@dataclass(frozen=True)
class WPoint:
    """A complex search point w with its propagated trajectory."""

    w: complex
    trajectory: TrajectoryRecord
    status: PropagationStatus

    @property
    def X_T(self) -> complex:
        return self.trajectory.X_T

    @property
    def m_plus(self) -> complex:
        """dX_T/dw along the search direction (1, i c/b) = m_qq + i m_qp."""
        return self.trajectory.m.m_plus


@dataclass(frozen=True)
class CausticPoint:
    """Critical point of the w map: dX_T/dw = 0 (phase-space caustic)."""

    w: complex
    X_T: complex
    residual: float  # |dX_T/dw| at the accepted point


@dataclass
class FamilyMember:
    x_f: float
    w: complex
    trajectory: TrajectoryRecord
    F: complex                     # exponent of the complex-trajectory formula
    grid_index: Optional[int]      # None for the off-grid seed member
    status: str = "contributing"   # "contributing" | "cut"


@dataclass
class TrajectoryFamily:
    """A continuum of complex-trajectory roots parameterized by x_f."""

    label: str                     # "main" | "secondary-<k>"
    members: list = dataclass_field(default_factory=list)  # sorted by x_f

    def __post_init__(self):
        self.members.sort(key=lambda m: m.x_f)

    @property
    def is_main(self) -> bool:
        return self.label == "main"

    def contains_w0(self, tol: float = 1e-6) -> bool:
        return any(abs(m.w) < tol for m in self.members)

    def by_grid_index(self) -> dict:
        return {m.grid_index: m for m in self.members
                if m.grid_index is not None}

    @property
    def x_f_values(self) -> np.ndarray:
        return np.array([m.x_f for m in self.members])

    @property
    def im_F(self) -> np.ndarray:
        return np.array([m.F.imag for m in self.members])


@dataclass(frozen=True)
class WMapField:
    """Endpoint map X_T(w) sampled on a rectangular alpha x beta lattice."""

    model: object
    state: CoherentState
    T: float
    search: SearchSettings
    alphas: np.ndarray        # (na,) real parts of w
    betas: np.ndarray         # (nb,) imaginary parts of w
    W: np.ndarray             # (na, nb) complex lattice
    X_T: np.ndarray           # (na, nb)
    P_T: np.ndarray
    m_plus: np.ndarray        # (na, nb) dX_T/dw
    S: np.ndarray             # (na, nb) accumulated actions
    escaped: np.ndarray       # (na, nb) bool

    @property
    def x0(self) -> np.ndarray:
        return self.state.q + self.W


@dataclass(frozen=True)
class Discovery:
    """Families plus the scan artefacts they were found with."""

    families: list
    caustics: list
    field: Optional[WMapField]

    @property
    def main(self) -> TrajectoryFamily:
        for fam in self.families:
            if fam.is_main:
                return fam
        raise LookupError("no main family present")


def wpoint(model, state: CoherentState, T: float, w: complex,
           settings: Optional[IntegratorSettings] = None) -> WPoint:
    """Propagate the trajectory attached to the search parameter w."""
    X0, P0 = klauder_start(state, complex(w))
    result = propagate(model, X0, P0, T, state, settings or _LEAN)
    return WPoint(w=complex(w), trajectory=result.trajectory,
                  status=result.status)


def refine_w(model, state: CoherentState, T: float, x_f: float,
             w_guess: complex, search: Optional[SearchSettings] = None,
             settings: Optional[IntegratorSettings] = None) -> WPoint:
    """Newton-refine w so that X_T(w) = x_f, using the tangent-matrix derivative.

    Raises NearCausticError when |dX_T/dw| < 1e-8 (Newton is ill-posed at a
    phase-space caustic) and NoConvergenceError after the iteration budget or
    if a trial trajectory escapes.
    """
    search = search or DEFAULT_SEARCH
    tol = 1e-10 * state.b
    w = complex(w_guess)
    for _ in range(search.newton_max_iter):
        pt = wpoint(model, state, T, w, settings)
        if pt.status is not PropagationStatus.COMPLETED:
            raise NoConvergenceError(
                "trajectory %s while refining w near %s"
                % (pt.status.value, w))
        g = pt.X_T - x_f
        if abs(g) < tol:
            return pt
        deriv = pt.m_plus
        if abs(deriv) < 1e-8:
            raise NearCausticError(
                "|dX_T/dw| = %.3g at w = %s" % (abs(deriv), w))
        w = w - g / deriv
    raise NoConvergenceError(
        "no root of X_T(w) = %.6g within %d iterations" %
        (x_f, search.newton_max_iter))


def wmap_scan(model, state: CoherentState, T: float,
              search: Optional[SearchSettings] = None,
              alphas=None, betas=None) -> WMapField:
    """Sample the endpoint map X_T(w) on a rectangular lattice.

    Default window is +-w_window*b at spacing w_step*b.  Nodes whose
    trajectory escapes are flagged and excluded from downstream detection.
    """
    search = search or DEFAULT_SEARCH
    b = state.b
    if alphas is None:
        half, step = search.w_window * b, search.w_step * b
        n = int(round(2.0 * half / step)) + 1
        alphas = np.linspace(-half, half, n)
    if betas is None:
        half, step = search.w_window * b, search.w_step * b
        n = int(round(2.0 * half / step)) + 1
        betas = np.linspace(-half, half, n)
    alphas = np.asarray(alphas, dtype=float)
    betas = np.asarray(betas, dtype=float)
    W = alphas[:, None] + 1j * betas[None, :]
    X0, P0 = klauder_start(state, W)
    X_T, P_T, m4, S, escaped = batch_endpoints(
        model, state, X0, P0, T, dt=search.scan_dt,
        escape_radius=search.escape_radius_factor * b)
    return WMapField(model=model, state=state, T=T, search=search,
                     alphas=alphas, betas=betas, W=W, X_T=X_T, P_T=P_T,
                     m_plus=m4[0] + 1j * m4[1], S=S, escaped=escaped)


def cauchy_riemann_residual(field: WMapField) -> np.ndarray:
    """Normalized finite-difference Cauchy-Riemann residual of X_T(w).

    For an analytic map the beta-derivative equals i times the
    alpha-derivative; the residual is their mismatch over the local
    derivative magnitude.  Border nodes and neighbourhoods of escaped nodes
    are NaN.
    """
    res = np.full(field.X_T.shape, np.nan)
    da = field.alphas[1] - field.alphas[0]
    db = field.betas[1] - field.betas[0]
    X = field.X_T
    dXa = (X[2:, 1:-1] - X[:-2, 1:-1]) / (2.0 * da)
    dXb = (X[1:-1, 2:] - X[1:-1, :-2]) / (2.0 * db)
    bad = (field.escaped[2:, 1:-1] | field.escaped[:-2, 1:-1]
           | field.escaped[1:-1, 2:] | field.escaped[1:-1, :-2]
           | field.escaped[1:-1, 1:-1])
    inner = np.abs(dXb - 1j * dXa) / (np.abs(dXa) + np.abs(dXb) + 1e-300)
    inner[bad] = np.nan
    res[1:-1, 1:-1] = inner
    return res


def _map_derivative_fd(model, state, T, w, h=None):
    """Complex second derivative data: returns (m_plus(w), dm_plus/dw)."""
    if h is None:
        h = 1e-5 * state.b
    pt0 = wpoint(model, state, T, w)
    ptp = wpoint(model, state, T, w + h)
    ptm = wpoint(model, state, T, w - h)
    for pt in (pt0, ptp, ptm):
        if pt.status is not PropagationStatus.COMPLETED:
            raise NoConvergenceError("escape while differentiating the map")
    return pt0.m_plus, (ptp.m_plus - ptm.m_plus) / (2.0 * h)


def detect_caustics(field: WMapField) -> list:
    """Locate phase-space caustics from a scan field.

    Lattice nodes where |dX_T/dw| is a local minimum below the threshold are
    polished by a Newton iteration on the map derivative; accepted points
    have residual |dX_T/dw| < 1e-6.  Returns an empty list when the map has
    no critical point in the window (free particle, harmonic oscillator).
    """
    search = field.search
    state, model, T = field.state, field.model, field.T
    am = np.abs(field.m_plus).copy()
    am[field.escaped] = np.inf
    cands = []
    for i in range(1, am.shape[0] - 1):
        for j in range(1, am.shape[1] - 1):
            v = am[i, j]
            if v < search.caustic_threshold and v == am[i - 1:i + 2, j - 1:j + 2].min():
                cands.append((v, field.W[i, j]))
    cands.sort(key=lambda t: t[0])
    cands = cands[:search.caustic_max_count]

    b = state.b
    half = search.w_window * b * 1.2
    accepted = []
    for _, w0 in cands:
        w = w0
        ok = False
        try:
            for _ in range(30):
                mp, dmp = _map_derivative_fd(model, state, T, w)
                if abs(mp) < 1e-9:
                    ok = True
                    break
                if dmp == 0:
                    break
                w = w - mp / dmp
        except NoConvergenceError:
            continue
        if not ok or abs(mp) >= 1e-6:
            continue
        if abs(w.real) > half or abs(w.imag) > half:
            continue
        if any(abs(w - c.w) < 1e-3 * b for c in accepted):
            continue
        pt = wpoint(model, state, T, w)
        accepted.append(CausticPoint(w=w, X_T=pt.X_T, residual=abs(mp)))
    accepted.sort(key=lambda c: (round(c.w.real, 9), round(c.w.imag, 9)))
    return accepted


def trace_family(model, state: CoherentState, T: float, x_f_grid,
                 seed: WPoint, search: Optional[SearchSettings] = None,
                 label: str = "family",
                 settings: Optional[IntegratorSettings] = None) -> TrajectoryFamily:
    """Continue a converged root across an ordered x_f grid.

    Neighbouring grid points are seeded with a first-order prediction
    w + dx_f/(dX_T/dw); the trace stops where refinement fails, comes too
    close to a caustic, or the root jumps by more than the continuation
    bound (a sign we hopped onto a different family).  A truncated family is
    still returned.
    """
    from . import semiclassics  # deferred: semiclassics imports this module

    search = search or DEFAULT_SEARCH
    grid = np.asarray(x_f_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("x_f_grid must be strictly increasing")
    max_jump = search.continuation_max_jump * state.b

    def member(pt, x_f, idx):
        return FamilyMember(x_f=float(x_f), w=pt.w, trajectory=pt.trajectory,
                            F=semiclassics.exponent_F(pt.trajectory, state),
                            grid_index=idx)

    members = []
    seed_xf = seed.X_T.real
    i0 = int(np.argmin(np.abs(grid - seed_xf)))
    on_grid = abs(grid[i0] - seed_xf) < 1e-12
    if not on_grid:
        members.append(member(seed, seed_xf, None))

    # walk onto the grid, then outward in both directions
    try:
        first = refine_w(model, state, T, grid[i0],
                         seed.w + (grid[i0] - seed_xf) /
                         (seed.m_plus if abs(seed.m_plus) > 1e-8 else 1.0),
                         search, settings)
    except (NoConvergenceError, NearCausticError):
        return TrajectoryFamily(label=label, members=members)
    if abs(first.w - seed.w) > max(max_jump, 2.0 * abs(grid[i0] - seed_xf) + max_jump):
        return TrajectoryFamily(label=label, members=members)
    members.append(member(first, grid[i0], i0))

    for direction in (1, -1):
        prev = first
        i = i0 + direction
        while 0 <= i < grid.size:
            dx = grid[i] - prev.X_T.real
            guess = prev.w + (dx / prev.m_plus if abs(prev.m_plus) > 1e-8
                              else 0.0)
            try:
                pt = refine_w(model, state, T, grid[i], guess, search, settings)
            except (NoConvergenceError, NearCausticError):
                break
            if abs(pt.w - prev.w) > max_jump:
                break
            members.append(member(pt, grid[i], i))
            prev = pt
            i += direction

    return TrajectoryFamily(label=label, members=members)


def _family_duplicates(fam: TrajectoryFamily, existing, tol: float) -> bool:
    by_idx = fam.by_grid_index()
    for other in existing:
        shared = [(m.w, o.w) for idx, m in by_idx.items()
                  for o in [other.by_grid_index().get(idx)] if o is not None]
        if shared and np.median([abs(a - b) for a, b in shared]) < tol:
            return True
    return False


def discover_families(model, state: CoherentState, T: float, x_f_grid,
                      search: Optional[SearchSettings] = None,
                      settings: Optional[IntegratorSettings] = None) -> Discovery:
    """Find the main family and caustic-seeded secondary families.

    The main family is seeded at w = 0 (its endpoint is the real central
    point q_T).  With ``families="auto"`` a lattice scan locates caustics;
    each near-real caustic seeds one candidate family on either side via the
    local quadratic model of the map.  Duplicates of already-known families
    are dropped.
    """
    search = search or DEFAULT_SEARCH
    grid = np.asarray(x_f_grid, dtype=float)
    b = state.b

    seed_main = wpoint(model, state, T, 0.0j, settings)
    main = trace_family(model, state, T, grid, seed_main, search, "main",
                        settings)
    families = [main]
    if search.families == "main-only":
        return Discovery(families=families, caustics=[], field=None)

    field = wmap_scan(model, state, T, search)
    caustics = detect_caustics(field)
    k = 0
    for ca in caustics:
        if k >= search.secondary_max_count:
            break
        if abs(ca.X_T.imag) > search.caustic_im_xf_max * b:
            continue
        if not (grid[0] <= ca.X_T.real <= grid[-1]):
            continue
        try:
            _, ddm = _map_derivative_fd(model, state, T, ca.w)
        except NoConvergenceError:
            continue
        if ddm == 0:
            continue
        i_near = int(np.argmin(np.abs(grid - ca.X_T.real)))
        x_target = grid[i_near]
        root = np.sqrt(2.0 * (x_target - ca.X_T) / ddm)
        for sgn in (1.0, -1.0):
            try:
                pt = refine_w(model, state, T, x_target, ca.w + sgn * root,
                              search, settings)
            except (NoConvergenceError, NearCausticError):
                continue
            known = False
            for fam in families:
                at = fam.by_grid_index().get(i_near)
                if at is not None and abs(at.w - pt.w) < 1e-4 * b:
                    known = True
                    break
            if known:
                continue
            fam = trace_family(model, state, T, grid, pt, search,
                               "secondary-%d" % k, settings)
            if len(fam.by_grid_index()) < 2:
                continue
            if _family_duplicates(fam, families, 1e-5 * b):
                continue
            families.append(fam)
            k += 1
            if k >= search.secondary_max_count:
                break
    return Discovery(families=families, caustics=caustics, field=field)


@dataclass(frozen=True)
class MomentumShot:
    """A real trajectory q -> x_f with the initial momentum that achieves it."""

    p_i: float
    trajectory: TrajectoryRecord


@dataclass(frozen=True)
class PositionShot:
    """A real trajectory with fixed initial momentum p reaching x_f."""

    q_i: float
    trajectory: TrajectoryRecord


class _ScanShootingMap:
    """Shared bracketing/refinement over a scanned one-parameter endpoint map."""

    def __init__(self, model, state, T, values, search, settings):
        self.model = model
        self.state = state
        self.T = float(T)
        self.search = search or DEFAULT_SEARCH
        self.settings = settings or _LEAN
        self.values = np.asarray(values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 2:
            raise ValueError("scan grid must be a 1-D range of values")
        X0, P0 = self._start(self.values)
        X_T, _, _, _, escaped = batch_endpoints(
            model, state, X0.astype(complex), P0.astype(complex), self.T,
            dt=self.search.scan_dt,
            escape_radius=self.search.escape_radius_factor * state.b)
        self.X_scan = X_T.real
        self.valid = ~escaped

    # subclasses define the swept parameter
    def _start(self, v):
        raise NotImplementedError

    def _derivative(self, record) -> float:
        raise NotImplementedError

    def _shot(self, v, record):
        raise NotImplementedError

    def _propagate(self, v):
        X0, P0 = self._start(v)
        return propagate(self.model, X0, P0, self.T, self.state, self.settings)

    def solve(self, x_f: float) -> list:
        """All real solutions reaching x_f, refined to 1e-9 * b."""
        g = self.X_scan - x_f
        # nudge exact node zeros so each crossing yields exactly one bracket
        g = np.where(g == 0.0, 1e-300, g)
        roots = []
        for i in range(self.values.size - 1):
            if not (self.valid[i] and self.valid[i + 1]):
                continue
            if (g[i] > 0) == (g[i + 1] > 0):
                continue
            try:
                roots.append(self._refine(self.values[i], self.values[i + 1],
                                          g[i], g[i + 1], x_f))
            except NoConvergenceError:
                continue
        roots.sort(key=lambda s: self._root_value(s))
        return roots

    def _root_value(self, shot):
        raise NotImplementedError

    def _refine(self, lo, hi, glo, ghi, x_f):
        tol = 1e-9 * self.state.b
        a, bb, ga, gb = lo, hi, glo, ghi
        v = 0.5 * (a + bb) if gb == ga else a + (bb - a) * (-ga) / (gb - ga)
        for _ in range(60):
            res = self._propagate(v)
            if not res.completed:
                raise NoConvergenceError("trajectory failed during shooting")
            gv = res.trajectory.X_T.real - x_f
            if abs(gv) < tol:
                return self._shot(v, res.trajectory)
            if (gv > 0) == (ga > 0):
                a, ga = v, gv
            else:
                bb, gb = v, gv
            deriv = self._derivative(res.trajectory)
            v_newton = v - gv / deriv if deriv != 0.0 else None
            if v_newton is not None and min(a, bb) < v_newton < max(a, bb):
                v = v_newton
            else:
                v = 0.5 * (a + bb)
        raise NoConvergenceError("shooting did not converge to x_f = %g" % x_f)


class MomentumShootingMap(_ScanShootingMap):
    """X(T) as a function of the initial momentum at fixed initial position q."""

    def __init__(self, model, state, T, p_values=None,
                 search: Optional[SearchSettings] = None,
                 settings: Optional[IntegratorSettings] = None):
        search = search or DEFAULT_SEARCH
        self._linear = isinstance(model, (FreeParticle, Harmonic))
        if p_values is None:
            half = search.p_window * state.c
            p_values = np.linspace(state.p - half, state.p + half,
                                   search.p_count)
        if self._linear:
            self.model, self.state, self.T = model, state, float(T)
            self.search, self.settings = search, settings or _LEAN
            self.values = np.asarray(p_values, dtype=float)
            self._coeffs = _linear_flow_coefficients(model, state, self.T)
        else:
            super().__init__(model, state, T, p_values, search, settings)

    @property
    def degenerate(self) -> bool:
        """True when X(T) does not depend on p_i (focus of the linear flow)."""
        return self._linear and abs(self._coeffs[1]) < 1e-12

    def _start(self, v):
        return np.full_like(np.asarray(v, dtype=float), self.state.q), v

    def _derivative(self, record) -> float:
        # dX_T/dp_i = (b/c) m_qp
        return (self.state.b / self.state.c * record.m.m_qp).real

    def _shot(self, v, record):
        return MomentumShot(p_i=float(v), trajectory=record)

    def _root_value(self, shot):
        return shot.p_i

    def solve(self, x_f: float) -> list:
        if not self._linear:
            return super().solve(x_f)
        alpha, beta = self._coeffs
        if self.degenerate:
            return []  # every p_i focuses on the same point: no isolated root
        p_i = (x_f - alpha * self.state.q) / beta
        if not (self.values[0] <= p_i <= self.values[-1]):
            return []
        res = self._propagate(p_i)
        return [self._shot(p_i, res.trajectory)]


class PositionShootingMap(_ScanShootingMap):
    """X(T) as a function of the initial position at fixed initial momentum p."""

    def __init__(self, model, state, T, q_values=None,
                 search: Optional[SearchSettings] = None,
                 settings: Optional[IntegratorSettings] = None):
        search = search or DEFAULT_SEARCH
        self._linear = isinstance(model, (FreeParticle, Harmonic))
        if q_values is None:
            half = search.q_window * state.b
            q_values = np.linspace(state.q - half, state.q + half,
                                   search.q_count)
        if self._linear:
            self.model, self.state, self.T = model, state, float(T)
            self.search, self.settings = search, settings or _LEAN
            self.values = np.asarray(q_values, dtype=float)
            self._coeffs = _linear_flow_coefficients(model, state, self.T)
        else:
            super().__init__(model, state, T, q_values, search, settings)

    @property
    def degenerate(self) -> bool:
        """True when X(T) does not depend on q_i (quarter-period focusing)."""
        return self._linear and abs(self._coeffs[0]) < 1e-12

    def _start(self, v):
        return v, np.full_like(np.asarray(v, dtype=float), self.state.p)

    def _derivative(self, record) -> float:
        # dX_T/dq_i = m_qq
        return record.m.m_qq.real

    def _shot(self, v, record):
        return PositionShot(q_i=float(v), trajectory=record)

    def _root_value(self, shot):
        return shot.q_i

    def solve(self, x_f: float) -> list:
        if not self._linear:
            return super().solve(x_f)
        alpha, beta = self._coeffs
        if self.degenerate:
            return []
        q_i = (x_f - beta * self.state.p) / alpha
        if not (self.values[0] <= q_i <= self.values[-1]):
            return []
        res = self._propagate(q_i)
        return [self._shot(q_i, res.trajectory)]


def _linear_flow_coefficients(model, state, T):
    """(alpha, beta) with X(T) = alpha x_i + beta p_i for linear dynamics."""
    if isinstance(model, FreeParticle):
        return 1.0, T / state.mu
    Omega = model.omega * math.sqrt(model.mass / state.mu)
    return math.cos(Omega * T), math.sin(Omega * T) / (state.mu * Omega)


def shoot_q_to_xf(model, state: CoherentState, x_f: float, T: float,
                  p_grid=None, search: Optional[SearchSettings] = None) -> list:
    """All real trajectories from q reaching x_f in time T.

    Roots of X(T; q, p_i) = x_f over the momentum window, located by
    sign-change bracketing of the scanned endpoint map and polished with
    derivative-assisted iteration.  An empty list is a legitimate outcome:
    the branch structure may not cover x_f.
    """
    return MomentumShootingMap(model, state, T, p_grid, search).solve(x_f)


def shoot_p_to_xf(model, state: CoherentState, x_f: float, T: float,
                  q_grid=None, search: Optional[SearchSettings] = None) -> list:
    """Mirror of shoot_q_to_xf with initial position swept instead."""
    return PositionShootingMap(model, state, T, q_grid, search).solve(x_f)
