"""Potential-energy models evaluable at complex positions.

Every model is an entire function of X (polynomial or Gaussian), so the
analytic continuation is obtained by simply feeding complex arguments to the
same expressions.  All methods accept scalars or numpy arrays and preserve
realness for real input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FreeParticle",
    "Harmonic",
    "InvertedGaussian",
    "Quartic",
    "HardWallScenario",
    "POTENTIAL_KINDS",
    "evaluate",
    "hamiltonian",
]


@dataclass(frozen=True)
class FreeParticle:
    """V(X) = 0."""

    kind = "free"

    def v(self, x):
        return 0.0 * x

    def dv(self, x):
        return 0.0 * x

    def d2v(self, x):
        return 0.0 * x


@dataclass(frozen=True)
class Harmonic:
    """V(X) = (1/2) mass * omega^2 * X^2."""

    mass: float = 1.0
    omega: float = 1.0

    kind = "harmonic"

    def __post_init__(self):
        if self.mass <= 0 or self.omega <= 0:
            raise ValueError("harmonic mass and omega must be positive")

    def v(self, x):
        return 0.5 * self.mass * self.omega ** 2 * x * x

    def dv(self, x):
        return self.mass * self.omega ** 2 * x

    def d2v(self, x):
        return self.mass * self.omega ** 2 + 0.0 * x


@dataclass(frozen=True)
class InvertedGaussian:
    """Attractive well V(X) = -exp(-X^2), depth 1, width 1."""

    kind = "inverted_gaussian"

    def v(self, x):
        return -np.exp(-x * x)

    def dv(self, x):
        return 2.0 * x * np.exp(-x * x)

    def d2v(self, x):
        return (2.0 - 4.0 * x * x) * np.exp(-x * x)


@dataclass(frozen=True)
class Quartic:
    """Bound quartic well V(X) = A X^2 + B X^4."""

    A: float = 0.5
    B: float = 0.1

    kind = "quartic"

    def __post_init__(self):
        if self.B <= 0:
            raise ValueError("quartic B must be positive")

    def v(self, x):
        x2 = x * x
        return self.A * x2 + self.B * x2 * x2

    def dv(self, x):
        return 2.0 * self.A * x + 4.0 * self.B * x * x * x

    def d2v(self, x):
        return 2.0 * self.A + 12.0 * self.B * x * x


@dataclass(frozen=True)
class HardWallScenario:
    """Elastic wall at the origin; physical domain x > 0 only.

    This is a scenario flag, not a potential: trajectories, actions and the
    exact solution are all built analytically by the method of images, never
    by integrating a steep potential.
    """

    wall_position = 0.0


POTENTIAL_KINDS = {
    "free": FreeParticle,
    "harmonic": Harmonic,
    "inverted_gaussian": InvertedGaussian,
    "quartic": Quartic,
}


def evaluate(model, X):
    """Return the triple (V, V', V'') at X (complex allowed)."""
    return model.v(X), model.dv(X), model.d2v(X)


def hamiltonian(model, point, mu: float):
    """Complex energy H = P^2 / (2 mu) + V(X) at a phase-space point."""
    return point.P * point.P / (2.0 * mu) + model.v(point.X)
