"""Piecewise-analytic paths and pole-encircling loop systems in the plane.

Paths are chains of straight segments and circular arcs, parametrized by
arc length.  Loop systems realize a deterministic generator choice for the
fundamental group of the punctured plane: one lasso per pole, ordered by
the argument of (pole - basepoint).
"""

from __future__ import annotations

import bisect
import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateConfigurationError,
    InvalidBasepointError,
    IsofolError,
)

CONTINUITY_TOL = 1e-12


@dataclass(frozen=True)
class Segment:
    start: complex
    end: complex

    @property
    def length(self) -> float:
        return abs(self.end - self.start)

    def point(self, s: float) -> complex:
        length = self.length
        if length == 0.0:
            return self.start
        return self.start + (self.end - self.start) * (s / length)

    def tangent(self, s: float) -> complex:
        length = self.length
        if length == 0.0:
            return 0j
        return (self.end - self.start) / length

    def reversed(self) -> "Segment":
        return Segment(self.end, self.start)


@dataclass(frozen=True)
class Arc:
    """Circular arc; counterclockwise iff angle1 > angle0 (radians)."""

    center: complex
    radius: float
    angle0: float
    angle1: float

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("arc radius must be positive")

    @property
    def length(self) -> float:
        return self.radius * abs(self.angle1 - self.angle0)

    def _angle(self, s: float) -> float:
        if self.angle1 == self.angle0:
            return self.angle0
        sigma = 1.0 if self.angle1 > self.angle0 else -1.0
        return self.angle0 + sigma * s / self.radius

    def point(self, s: float) -> complex:
        return self.center + self.radius * cmath.exp(1j * self._angle(s))

    def tangent(self, s: float) -> complex:
        sigma = 1.0 if self.angle1 >= self.angle0 else -1.0
        return 1j * sigma * cmath.exp(1j * self._angle(s))

    def reversed(self) -> "Arc":
        return Arc(self.center, self.radius, self.angle1, self.angle0)


class Path:
    """Endpoint-continuous chain of segments and arcs."""

    __slots__ = ("pieces", "length", "_offsets")

    def __init__(self, pieces):
        pieces = tuple(pieces)
        if not pieces:
            raise ValueError("a path needs at least one piece")
        for prev, nxt in zip(pieces, pieces[1:]):
            gap = abs(prev.point(prev.length) - nxt.point(0.0))
            if gap > CONTINUITY_TOL:
                raise ValueError(f"path pieces are not endpoint-continuous (gap {gap:.3e})")
        self.pieces = pieces
        offsets = [0.0]
        for p in pieces:
            offsets.append(offsets[-1] + p.length)
        self._offsets = offsets
        self.length = offsets[-1]

    @property
    def start(self) -> complex:
        return self.pieces[0].point(0.0)

    @property
    def end(self) -> complex:
        last = self.pieces[-1]
        return last.point(last.length)

    @property
    def is_loop(self) -> bool:
        return abs(self.start - self.end) <= CONTINUITY_TOL

    def point(self, s: float) -> complex:
        s = min(max(s, 0.0), self.length)
        i = bisect.bisect_right(self._offsets, s) - 1
        i = min(i, len(self.pieces) - 1)
        return self.pieces[i].point(s - self._offsets[i])

    def reversed(self) -> "Path":
        return Path([p.reversed() for p in reversed(self.pieces)])

    def concat(self, other: "Path") -> "Path":
        return Path(self.pieces + other.pieces)

    def __add__(self, other: "Path") -> "Path":
        return self.concat(other)

    def sample(self, max_step: float) -> np.ndarray:
        """Points along the path with spacing at most max_step per piece."""
        pts = [self.start]
        for p in self.pieces:
            if p.length == 0.0:
                continue
            n = max(2, int(math.ceil(p.length / max_step)) + 1)
            ss = np.linspace(0.0, p.length, n)
            pts.extend(p.point(s) for s in ss[1:])
        return np.asarray(pts, dtype=complex)

    def min_distance(self, z: complex) -> float:
        return min(_piece_distance(p, z) for p in self.pieces)


def _piece_distance(piece, z: complex) -> float:
    if isinstance(piece, Segment):
        v = piece.end - piece.start
        w = z - piece.start
        if piece.length == 0.0:
            return abs(w)
        t = (w.real * v.real + w.imag * v.imag) / (piece.length ** 2)
        t = min(max(t, 0.0), 1.0)
        return abs(w - t * v)
    # arc
    dc = z - piece.center
    rho = abs(dc)
    lo, hi = sorted((piece.angle0, piece.angle1))
    if rho == 0.0:
        return piece.radius
    phi = cmath.phase(dc)
    if (phi - lo) % (2 * math.pi) <= (hi - lo):
        return abs(rho - piece.radius)
    ends = (piece.point(0.0), piece.point(piece.length))
    return min(abs(z - e) for e in ends)


def winding_number(path: Path, z: complex) -> int:
    """Winding of a closed path about z via cumulative argument tracking."""
    d = path.min_distance(z)
    if d < 1e-9:
        raise IsofolError("winding number undefined: point lies on the path")
    total = 0.0
    for piece in path.pieces:
        if piece.length == 0.0:
            continue
        n = max(2, int(math.ceil(piece.length / (d / 8.0))) + 1)
        ss = np.linspace(0.0, piece.length, n)
        pts = np.array([piece.point(s) for s in ss]) - z
        total += float(np.sum(np.angle(pts[1:] / pts[:-1])))
    return int(round(total / (2 * math.pi)))


@dataclass(frozen=True)
class LoopSystem:
    """Per-pole lassos sharing a basepoint, ordered by argument.

    ``order[k]`` is the pole index encircled by ``loops[k]``.  ``degraded``
    flags a basepoint inside the convex hull of the poles, where the
    argument ordering may not be a standard generator system.
    """

    basepoint: complex
    loops: tuple
    order: tuple
    r_min: float
    degraded: bool = False

    @property
    def n(self) -> int:
        return len(self.loops)


def _validate_poles(poles, basepoint=None):
    poles = np.asarray(poles, dtype=complex).ravel()
    if poles.size == 0:
        raise DegenerateConfigurationError("at least one pole required")
    if poles.size > 1:
        diff = poles[:, None] - poles[None, :]
        np.fill_diagonal(diff, np.inf)
        if np.min(np.abs(diff)) <= CONTINUITY_TOL:
            raise DegenerateConfigurationError("poles are not pairwise distinct")
    if basepoint is not None and np.min(np.abs(poles - basepoint)) <= CONTINUITY_TOL:
        raise InvalidBasepointError("basepoint coincides with a pole")
    return poles


def _exclusion_radius(poles, basepoint, index, radius_factor) -> float:
    others = np.abs(np.delete(poles, index) - poles[index])
    d = float(others.min()) if others.size else math.inf
    d = min(d, abs(poles[index] - basepoint))
    return radius_factor * d


def _detour_arc(pole, radius, z1, z2, near_point) -> Arc:
    """Arc from z1 to z2 about the pole through the side of near_point.

    Bulging to the side where the straight chord already passes keeps the
    detoured run homotopic to the straight one in the complement of the
    pole; sweeping the far side would change the loop class and break the
    generator product relation.  Exact pass-through (no near side) falls
    back to counterclockwise for determinism.
    """
    ang1 = cmath.phase(z1 - pole)
    ang2 = cmath.phase(z2 - pole)
    ccw_sweep = (ang2 - ang1) % (2 * math.pi)
    if abs(near_point - pole) < 1e-12 * radius:
        return Arc(pole, radius, ang1, ang1 + ccw_sweep)
    ang_near = cmath.phase(near_point - pole)
    if (ang_near - ang1) % (2 * math.pi) <= ccw_sweep:
        return Arc(pole, radius, ang1, ang1 + ccw_sweep)
    return Arc(pole, radius, ang1, ang1 - (2 * math.pi - ccw_sweep))


def _segment_with_detours(a, b, poles, basepoint, skip, radius_factor):
    """Straight run from a to b, arcing around blocking poles' disks."""
    v = b - a
    chord = abs(v)
    if chord == 0.0:
        return [Segment(a, b)]
    events = []
    for j in range(len(poles)):
        if j == skip:
            continue
        rj = _exclusion_radius(poles, basepoint, j, radius_factor)
        w = poles[j] - a
        # solve |t v - w| = rj for t
        t_mid = (w.real * v.real + w.imag * v.imag) / (chord ** 2)
        h2 = abs(w - t_mid * v) ** 2
        if h2 >= rj ** 2:
            continue
        dt = math.sqrt(rj ** 2 - h2) / chord
        t1, t2 = t_mid - dt, t_mid + dt
        if t2 <= 0.0 or t1 >= 1.0:
            continue
        if t1 <= 0.0 or t2 >= 1.0:
            raise DegenerateConfigurationError(
                "segment endpoint falls inside a pole exclusion disk"
            )
        events.append((t1, t2, j, rj, a + t_mid * v))
    events.sort(key=lambda e: e[0])
    pieces = []
    cursor, t_cursor = a, 0.0
    for t1, t2, j, rj, closest in events:
        if t1 < t_cursor:
            raise DegenerateConfigurationError("overlapping pole exclusion disks on a segment")
        z1 = a + t1 * v
        z2 = a + t2 * v
        if abs(z1 - cursor) > CONTINUITY_TOL:
            pieces.append(Segment(cursor, z1))
        pieces.append(_detour_arc(poles[j], rj, z1, z2, closest))
        cursor, t_cursor = z2, t2
    pieces.append(Segment(cursor, b))
    return pieces


def pole_loop(basepoint: complex, pole_index: int, poles, radius_factor: float = 0.4) -> Path:
    """Lasso around one pole: inbound run, counterclockwise circle, reverse run.

    The circle radius is radius_factor times the distance from the target
    pole to the nearest other pole or to the basepoint.  The inbound run
    detours around any other pole's exclusion disk on the side the straight
    run already passes (counterclockwise on exact ties), which keeps each
    lasso in the homotopy class of its thin straight-tailed model.
    """
    if not 0.0 < radius_factor < 1.0:
        raise ValueError("radius_factor must lie in (0, 1)")
    poles = _validate_poles(poles, basepoint)
    target = poles[pole_index]
    r = _exclusion_radius(poles, basepoint, pole_index, radius_factor)
    direction = (basepoint - target) / abs(basepoint - target)
    entry = target + r * direction
    inbound = _segment_with_detours(basepoint, entry, poles, basepoint, pole_index, radius_factor)
    a0 = cmath.phase(entry - target)
    circle = Arc(target, r, a0, a0 + 2 * math.pi)
    outbound = [p.reversed() for p in reversed(inbound)]
    return Path(inbound + [circle] + outbound)


def _outside_convex_hull(basepoint, poles) -> bool:
    # all directions (pole - basepoint) fit in an open half-plane iff the
    # largest cyclic gap between their arguments exceeds pi
    args = np.sort(np.angle(np.asarray(poles) - basepoint))
    if args.size == 1:
        return True
    gaps = np.diff(args)
    wrap = args[0] + 2 * math.pi - args[-1]
    return max(float(gaps.max(initial=0.0)), float(wrap)) > math.pi + 1e-12


def _argument_order(basepoint, poles):
    keys = []
    for i, u in enumerate(poles):
        d = u - basepoint
        keys.append((cmath.phase(d), abs(d), i))
    keys.sort()
    return tuple(k[2] for k in keys)


def _build_loop_system(basepoint, poles, order, radius_factor) -> LoopSystem:
    loops = tuple(pole_loop(basepoint, i, poles, radius_factor) for i in order)
    for k, loop in enumerate(loops):
        for j, u in enumerate(poles):
            expected = 1 if j == order[k] else 0
            w = winding_number(loop, u)
            if w != expected:
                raise IsofolError(
                    f"loop {k} winds pole {j} {w} times, expected {expected}"
                )
    r_min = min(loop.min_distance(u) for loop in loops for u in poles)
    degraded = not _outside_convex_hull(basepoint, poles)
    return LoopSystem(complex(basepoint), loops, tuple(order), float(r_min), degraded)


def canonical_generators(basepoint: complex, poles, radius_factor: float = 0.4) -> LoopSystem:
    """Loop system ordered by increasing argument of (pole - basepoint).

    Ties are broken by increasing distance, then by index.  The winding
    matrix (loop k versus pole j) is verified to be a permutation identity.
    """
    poles = _validate_poles(poles, basepoint)
    order = _argument_order(basepoint, poles)
    return _build_loop_system(basepoint, poles, order, radius_factor)


def loops_in_order(basepoint: complex, poles, order, radius_factor: float = 0.4) -> LoopSystem:
    """Loop system with an externally prescribed pole ordering.

    Used to carry a generator framing across a pole motion: the ordering
    is the one tracked from the initial configuration, not re-sorted.
    """
    poles = _validate_poles(poles, basepoint)
    if sorted(order) != list(range(len(poles))):
        raise ValueError("order must be a permutation of pole indices")
    return _build_loop_system(basepoint, poles, tuple(order), radius_factor)


def enclosing_circle(basepoint: complex, poles) -> Path:
    """Counterclockwise circle through the basepoint around all poles."""
    poles = _validate_poles(poles, basepoint)
    center = complex(poles.mean())
    radius = abs(basepoint - center)
    clearance = radius - float(np.max(np.abs(poles - center)))
    if clearance < max(1e-6, 1e-3 * radius):
        raise DegenerateConfigurationError(
            "basepoint circle around the pole centroid does not enclose all poles"
        )
    a0 = cmath.phase(basepoint - center)
    return Path([Arc(center, radius, a0, a0 + 2 * math.pi)])


def default_basepoint(points, spread_factor: float = 2.5, min_radius: float = 2.0) -> complex:
    """Deterministic basepoint well outside the convex hull of the points.

    Placed below the centroid, tilted slightly off the vertical so that
    argument ties are avoided for configurations aligned with the axes.
    """
    pts = np.asarray(points, dtype=complex).ravel()
    center = complex(pts.mean())
    radius = max(spread_factor * float(np.max(np.abs(pts - center))), min_radius)
    return center + radius * cmath.exp(1j * (-math.pi / 2 + 0.1))
