"""Circular contours in a slice plane C_J with trapezoidal nodes and weights."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

from .clifford import DIM, NMAX, Multivector, Paravector, UnitImaginary


@dataclass(frozen=True, eq=False)
class Contour:
    """Circle center + radius * exp(J theta), theta = 2 pi k / N.

    The measure ds_J = ds (-J) turns into the node weight
    radius * (cos theta + J sin theta) * 2 pi / N, so
    ``sum_k g(s_k) w_k h(s_k)`` approximates the integral of g ds_J h.
    ``orientation = -1`` traverses the circle clockwise (inner boundary of an
    annulus).
    """

    center: float
    radius: float
    J: UnitImaginary
    nodes: int = 256
    orientation: int = 1

    def __post_init__(self):
        if self.nodes < 8 or self.nodes % 2:
            raise ValueError(f"node count must be even and >= 8, got {self.nodes}")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")

    @cached_property
    def theta(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.nodes) / self.nodes

    @cached_property
    def node_array(self) -> np.ndarray:
        """(N, 32) coefficient array of the nodes."""
        out = np.zeros((self.nodes, DIM))
        out[:, 0] = self.center + self.radius * np.cos(self.theta)
        out[:, 1 : NMAX + 1] = self.radius * np.sin(self.theta)[:, None] * self.J.direction
        return out

    @cached_property
    def weight_array(self) -> np.ndarray:
        """(N, 32) coefficient array of the weights (already times 2 pi / N)."""
        h = self.orientation * 2.0 * np.pi / self.nodes
        out = np.zeros((self.nodes, DIM))
        out[:, 0] = h * self.radius * np.cos(self.theta)
        out[:, 1 : NMAX + 1] = h * self.radius * np.sin(self.theta)[:, None] * self.J.direction
        return out

    def points(self) -> list[Paravector]:
        return [
            Paravector(self.center + self.radius * np.cos(t), self.radius * np.sin(t) * self.J.direction, self.J.n)
            for t in self.theta
        ]

    def weights(self) -> list[Multivector]:
        return [Multivector(w, self.J.n) for w in self.weight_array]

    def half_plane_nodes(self) -> np.ndarray:
        """(N, 2) node coordinates (Re, |Im|)."""
        return np.stack(
            [self.center + self.radius * np.cos(self.theta), np.abs(self.radius * np.sin(self.theta))], axis=1
        )

    def encloses(self, u: float, v: float) -> bool:
        """Whether u + J v lies inside the circle (v taken as |Im| >= 0)."""
        return bool(np.hypot(u - self.center, v) < self.radius)

    def with_nodes(self, nodes: int) -> Contour:
        return Contour(self.center, self.radius, self.J, nodes, self.orientation)

    def with_J(self, J: UnitImaginary) -> Contour:
        return Contour(self.center, self.radius, J, self.nodes, self.orientation)

    def scaled(self, factor: float) -> Contour:
        return Contour(self.center, self.radius * factor, self.J, self.nodes, self.orientation)

    def key(self) -> tuple:
        return (self.center, self.radius, self.J.direction.tobytes(), self.nodes, self.orientation)


ContourLike = Union[Contour, Sequence[Contour]]


def as_boundary(c: ContourLike) -> list[Contour]:
    """A boundary is a list of oriented circles (one circle, or an annulus)."""
    if isinstance(c, Contour):
        return [c]
    return list(c)


def annulus(center: float, r_inner: float, r_outer: float, J: UnitImaginary, nodes: int = 256) -> list[Contour]:
    if not 0 < r_inner < r_outer:
        raise ValueError("need 0 < r_inner < r_outer")
    return [Contour(center, r_outer, J, nodes, 1), Contour(center, r_inner, J, nodes, -1)]


def boundary_encloses(boundary: Iterable[Contour], u: float, v: float) -> bool:
    """Winding-number style test for a union of oriented circles."""
    winding = sum(c.orientation for c in boundary if c.encloses(u, v))
    return winding == 1
