"""Semiclassical propagation of Gaussian wavepackets.

One complex-trajectory formula plus three real-trajectory approximations
(thawed Gaussian and two mixed-boundary variants), validated against a
grid-based quantum propagator and analytic solutions.
"""

from importlib import resources

from .errors import (BoundaryLeakError, BranchContinuityError,
                     CausticDivergenceError, ConfigError, CtwaveError,
                     DomainError, FocalPointError, GridMismatchError,
                     MissingMainFamilyError, NearCausticError,
                     NoConvergenceError, NotConvergedError, NoTrajectoryError)
from .model import (CoherentState, ComplexPhasePoint, TangentMatrix,
                    TrajectoryRecord, action_second_derivatives,
                    coherent_overlap, from_uv, stationarity_residual, to_uv)
from .potentials import (FreeParticle, HardWallScenario, Harmonic,
                         InvertedGaussian, Quartic, evaluate, hamiltonian)
from .dynamics import (CentralEndpoint, IntegratorSettings, PropagationResult,
                       PropagationStatus, WallTrajectory, batch_endpoints,
                       central_endpoint, propagate, wall_trajectories,
                       write_trajectory_csv)
from .rootsearch import (CausticPoint, Discovery, FamilyMember,
                         MomentumShootingMap, MomentumShot,
                         PositionShootingMap, PositionShot, SearchSettings,
                         TrajectoryFamily, WMapField, WPoint,
                         cauchy_riemann_residual, detect_caustics,
                         discover_families, klauder_start, refine_w,
                         shoot_p_to_xf, shoot_q_to_xf, trace_family,
                         wmap_scan, wpoint)
from .semiclassics import (BranchTracker, WavefunctionSample, assemble,
                           exponent_F, exponent_F_values, filter_families,
                           psi_ct, psi_tga, psi_xfp, psi_xfq)
from .exactref import (Grid, GridWavefunction, eigenvalues, exact_free,
                       exact_harmonic, exact_wall, propagate_grid)
from .cli import (ComparisonEntry, ComparisonReport, Scenario, compare,
                  compare_values, emit_map_data, load_scenario, parse_config,
                  run_scenario, scenario_from_config)

__version__ = "0.1.0"


def scenarios_dir():
    """Path to the bundled scenario configs."""
    return resources.files(__name__) / "scenarios"
