"""Schlesinger flow: residue matrices responding to pole motion.

The right-hand side is the classical Schlesinger system (L. Schlesinger,
J. reine angew. Math. 141, 1912):

    dA_i/du_j = [A_j, A_i] / (u_j - u_i)          for j != i,
    dA_i/du_i = -sum_{j != i} [A_j, A_i] / (u_j - u_i),

contracted here with prescribed pole velocities.  Integrating it along a
pole motion transports the residues isomonodromically: the conjugacy class
of the monodromy representation stays constant, which is verified
numerically by ``isomonodromy_drift``.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from . import paths
from .continuation import (
    DEFAULT_ABS_TOL,
    DEFAULT_REL_TOL,
    IntegrationStats,
    adaptive_rk45,
)
from .errors import CollisionError
from .fuchsian import FuchsianSystem
from .monodromy import class_distance, monodromy_tuple

DEFAULT_COLLISION_MARGIN = 1e-3


def schlesinger_rhs(residues, poles, velocities, collision_margin: float = DEFAULT_COLLISION_MARGIN):
    """Residue velocities dA_i/dtau for the given pole velocities."""
    residues = np.asarray(residues, dtype=complex)
    poles = np.asarray(poles, dtype=complex).ravel()
    velocities = np.asarray(velocities, dtype=complex).ravel()
    n = poles.size
    if n > 1:
        diff = poles[:, None] - poles[None, :]
        np.fill_diagonal(diff, np.inf)
        if np.min(np.abs(diff)) < collision_margin:
            raise CollisionError(
                f"pole separation fell below the collision margin {collision_margin:.1e}"
            )
    out = np.zeros_like(residues)
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            comm = residues[j] @ residues[i] - residues[i] @ residues[j]
            out[i] += comm * ((velocities[j] - velocities[i]) / (poles[j] - poles[i]))
    return out


@dataclass(frozen=True)
class PolePath:
    """Simultaneous pole motion: one Path per pole over a common tau in [0, 1].

    Each pole traverses its own path proportionally to arc length; a pole
    with a zero-length path stays put.  Pairwise separation is checked
    against the collision margin on a tau grid at construction.
    """

    pole_paths: tuple
    collision_margin: float = DEFAULT_COLLISION_MARGIN
    lengths: tuple = field(default=(), compare=False)

    def __post_init__(self):
        pole_paths = tuple(self.pole_paths)
        lengths = tuple(p.length for p in pole_paths)
        object.__setattr__(self, "pole_paths", pole_paths)
        object.__setattr__(self, "lengths", lengths)
        for tau in np.linspace(0.0, 1.0, 257):
            pos = self.positions(tau)
            if pos.size > 1:
                diff = pos[:, None] - pos[None, :]
                np.fill_diagonal(diff, np.inf)
                if np.min(np.abs(diff)) < self.collision_margin:
                    raise CollisionError(
                        f"poles collide at tau = {tau:.4f} "
                        f"(margin {self.collision_margin:.1e})"
                    )

    @property
    def n(self) -> int:
        return len(self.pole_paths)

    @property
    def total_motion(self) -> float:
        return float(sum(self.lengths))

    def positions(self, tau: float) -> np.ndarray:
        return np.array(
            [p.point(tau * L) for p, L in zip(self.pole_paths, self.lengths)],
            dtype=complex,
        )

    def velocities(self, tau: float) -> np.ndarray:
        out = np.zeros(self.n, dtype=complex)
        for k, (p, L) in enumerate(zip(self.pole_paths, self.lengths)):
            if L == 0.0:
                continue
            s = min(max(tau * L, 0.0), L)
            i = min(bisect.bisect_right(p._offsets, s) - 1, len(p.pieces) - 1)
            out[k] = L * p.pieces[i].tangent(s - p._offsets[i])
        return out

    def breakpoints(self) -> np.ndarray:
        """Tau values where some pole path switches pieces (velocity kinks)."""
        taus = {0.0, 1.0}
        for p, L in zip(self.pole_paths, self.lengths):
            if L == 0.0:
                continue
            taus.update(off / L for off in p._offsets[1:-1])
        return np.array(sorted(taus))

    @classmethod
    def stationary(cls, poles, collision_margin: float = DEFAULT_COLLISION_MARGIN) -> "PolePath":
        return cls(
            tuple(paths.Path([paths.Segment(complex(u), complex(u))]) for u in poles),
            collision_margin,
        )

    @classmethod
    def single_pole_segment(cls, poles, index: int, target: complex,
                            collision_margin: float = DEFAULT_COLLISION_MARGIN) -> "PolePath":
        """Move one pole along a straight segment, others stationary."""
        pole_paths = []
        for k, u in enumerate(poles):
            end = complex(target) if k == index else complex(u)
            pole_paths.append(paths.Path([paths.Segment(complex(u), end)]))
        return cls(tuple(pole_paths), collision_margin)


def flow(system: FuchsianSystem, pole_path: PolePath,
         rel_tol: float = DEFAULT_REL_TOL, abs_tol: float = DEFAULT_ABS_TOL) -> FuchsianSystem:
    """Integrate the Schlesinger system along the pole motion."""
    if pole_path.n != system.n:
        raise ValueError("pole path and system have different pole counts")
    start = pole_path.positions(0.0)
    if np.max(np.abs(start - system.poles)) > 1e-9:
        raise ValueError("pole path does not start at the system's poles")
    if pole_path.total_motion == 0.0:
        return system

    margin = pole_path.collision_margin

    def f(tau, a):
        return schlesinger_rhs(a, pole_path.positions(tau), pole_path.velocities(tau), margin)

    y = system.residues.copy()
    stats = IntegrationStats()
    h = 1e-2
    taus = pole_path.breakpoints()
    for t0, t1 in zip(taus[:-1], taus[1:]):
        if t1 <= t0:
            continue

        def f_local(s, a, t0=t0):
            return f(t0 + s, a)

        y, h = adaptive_rk45(f_local, t1 - t0, y, rel_tol, abs_tol, h, stats, 1e-13)
    return FuchsianSystem(pole_path.positions(1.0), y)


def isomonodromy_drift(system: FuchsianSystem, pole_path: PolePath,
                       rel_tol: float = DEFAULT_REL_TOL, radius_factor: float = 0.4,
                       basepoint: complex | None = None) -> float:
    """Class distance between the monodromy before and after the flow.

    Loops around the final poles keep the initial ordering, tracked by pole
    index along the motion; valid as long as no pole crosses another's
    lasso.  The basepoint defaults to a point outside the convex hull of
    every sampled pole position.
    """
    flowed = flow(system, pole_path, rel_tol)
    if basepoint is None:
        cloud = np.concatenate([pole_path.positions(t) for t in np.linspace(0.0, 1.0, 33)])
        basepoint = paths.default_basepoint(cloud)
    ls0 = paths.canonical_generators(basepoint, system.poles, radius_factor)
    ls1 = paths.loops_in_order(basepoint, flowed.poles, ls0.order, radius_factor)
    t0 = monodromy_tuple(system, ls0, rel_tol)
    t1 = monodromy_tuple(flowed, ls1, rel_tol)
    return class_distance(t0, t1)
