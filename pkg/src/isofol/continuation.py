"""Analytic continuation of fundamental solutions along paths.

The integrator is an explicit Dormand-Prince 5(4) embedded pair with PI
step-size control, run over the arc-length parametrization of each path
piece.  The state is a complex matrix, dY/ds = z'(s) A(z(s)) Y with
Y(start) = I, so the result of a path is the transport matrix M with
Y(end) = M.  Transports compose right-to-left: the transport of a
concatenation (first gamma1, then gamma2) is M2 @ M1.

A deterministic fixed-step mode integrates many systems along one frozen
path simultaneously.  Fixed step counts make the numerical transport an
analytic function of the system data, which is what downstream
finite-difference Jacobians need: the integration error then varies
smoothly with the parameters instead of jittering at the tolerance level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PoleProximityError, StiffnessError
from .fuchsian import FuchsianSystem
from .paths import Arc, Path, Segment

REL_TOL_RANGE = (1e-14, 1e-4)
DEFAULT_REL_TOL = 1e-10
DEFAULT_ABS_TOL = 1e-13
PATH_CLEARANCE = 1e-6
MAX_REJECTED = 10_000

# Dormand-Prince 5(4) tableau; the quadrature row equals the last stage row
# (FSAL), and the fifth-order weights put zero weight on the last stage.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
# fifth-order minus embedded fourth-order weights (7 stages)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


@dataclass(frozen=True)
class TransportResult:
    """Transport matrix with integrator diagnostics."""

    matrix: np.ndarray
    steps: int
    max_error_estimate: float
    rejected: int
    piece_steps: tuple = ()

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if not np.all(np.isfinite(m.view(float))):
            raise StiffnessError("transport produced non-finite entries")
        if m.shape == (2, 2) and abs(np.linalg.det(m)) == 0.0:
            raise StiffnessError("transport matrix is singular")
        object.__setattr__(self, "matrix", m)


class IntegrationStats:
    """Mutable step accounting shared across the pieces of one path."""

    __slots__ = ("steps", "rejected", "max_error")

    def __init__(self):
        self.steps = 0
        self.rejected = 0
        self.max_error = 0.0


def _dp_stages(f, s, y, h, k1):
    k = [k1]
    for i in range(1, 6):
        acc = _A[i][0] * k[0]
        for j in range(1, i):
            acc = acc + _A[i][j] * k[j]
        k.append(f(s + _C[i] * h, y + h * acc))
    y5 = y + h * (
        _B5[0] * k[0] + _B5[2] * k[2] + _B5[3] * k[3] + _B5[4] * k[4] + _B5[5] * k[5]
    )
    return y5, k


def adaptive_rk45(f, length, y, rel_tol, abs_tol, h, stats, min_step, max_rejected=MAX_REJECTED):
    """Integrate dy/ds = f(s, y) over s in [0, length]; returns (y, h_next)."""
    if length == 0.0:
        return y, h
    s = 0.0
    k1 = f(0.0, y)
    err_prev = 1e-4
    while s < length:
        h = min(h, length - s)
        if h < min_step:
            raise StiffnessError(
                f"step size underflow ({h:.3e}) at s = {s:.6g}",
                steps=stats.steps, rejected=stats.rejected, position=s,
            )
        y5, k = _dp_stages(f, s, y, h, k1)
        k7 = f(s + h, y5)
        err_vec = h * (
            _E[0] * k[0] + _E[2] * k[2] + _E[3] * k[3]
            + _E[4] * k[4] + _E[5] * k[5] + _E[6] * k7
        )
        scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y5))
        enorm = float(np.sqrt(np.mean(np.abs(err_vec / scale) ** 2)))
        if enorm <= 1.0:
            s += h
            y = y5
            k1 = k7
            stats.steps += 1
            stats.max_error = max(stats.max_error, float(np.max(np.abs(err_vec))))
            fac = 0.9 * max(enorm, 1e-16) ** -0.14 * max(err_prev, 1e-16) ** 0.08
            err_prev = enorm
            h *= min(5.0, max(0.2, fac))
        else:
            stats.rejected += 1
            if stats.rejected > max_rejected:
                raise StiffnessError(
                    "too many rejected steps",
                    steps=stats.steps, rejected=stats.rejected, position=s,
                )
            h *= max(0.2, 0.9 * enorm ** -0.2)
    return y, h


def fixed_rk45(f, length, y, n_steps):
    """Fixed-step fifth-order run; deterministic and analytic in the inputs."""
    h = length / n_steps
    for i in range(n_steps):
        y, _ = _dp_stages(f, i * h, y, h, f(i * h, y))
    return y


def _piece_rhs(poles, residues, piece):
    """Right-hand side z'(s) A(z(s)) Y on one piece; broadcasts over a batch."""
    if isinstance(piece, Segment):
        z0 = piece.start
        direction = (piece.end - z0) / piece.length

        def f(s, y):
            w = 1.0 / ((z0 + direction * s) - poles)
            a = np.einsum("...n,...nij->...ij", w, residues)
            return direction * (a @ y)

        return f
    if isinstance(piece, Arc):
        sigma = 1.0 if piece.angle1 >= piece.angle0 else -1.0
        center, radius, a0 = piece.center, piece.radius, piece.angle0

        def f(s, y):
            e = np.exp(1j * (a0 + sigma * s / radius))
            w = 1.0 / ((center + radius * e) - poles)
            a = np.einsum("...n,...nij->...ij", w, residues)
            return (1j * sigma * e) * (a @ y)

        return f
    raise TypeError(f"unknown path piece {piece!r}")


def check_clearance(system: FuchsianSystem, path: Path, clearance: float = PATH_CLEARANCE):
    for u in system.poles:
        d = path.min_distance(u)
        if d < clearance:
            raise PoleProximityError(
                f"path passes within {d:.3e} of pole {u} (minimum {clearance:.1e})"
            )


def transport(
    system: FuchsianSystem,
    path: Path,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
) -> TransportResult:
    """Transport matrix of dY/dz = A(z) Y along the path, Y(start) = I."""
    if not REL_TOL_RANGE[0] <= rel_tol <= REL_TOL_RANGE[1]:
        raise ValueError(f"rel_tol must lie in {REL_TOL_RANGE}")
    check_clearance(system, path)
    y = np.eye(2, dtype=complex)
    if path.length == 0.0:
        return TransportResult(y, 0, 0.0, 0)
    stats = IntegrationStats()
    h = path.length / 100.0
    min_step = 1e-13 * path.length
    piece_steps = []
    for piece in path.pieces:
        if piece.length == 0.0:
            piece_steps.append(0)
            continue
        before = stats.steps
        f = _piece_rhs(system.poles, system.residues, piece)
        y, h = adaptive_rk45(f, piece.length, y, rel_tol, abs_tol, h, stats, min_step)
        piece_steps.append(stats.steps - before)
    return TransportResult(y, stats.steps, stats.max_error, stats.rejected, tuple(piece_steps))


def calibrate_steps(
    system: FuchsianSystem,
    path: Path,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    margin: float = 1.6,
    floor: int = 8,
) -> tuple:
    """Per-piece fixed step counts matching an adaptive pilot run."""
    pilot = transport(system, path, rel_tol, abs_tol)
    return tuple(
        max(floor, int(math.ceil(margin * c))) if piece.length > 0.0 else 0
        for c, piece in zip(pilot.piece_steps, path.pieces)
    )


def transport_fixed(system: FuchsianSystem, path: Path, steps_per_piece) -> np.ndarray:
    """Deterministic fixed-step transport matrix (diagnostics-free)."""
    check_clearance(system, path)
    y = np.eye(2, dtype=complex)
    for piece, n in zip(path.pieces, steps_per_piece):
        if piece.length == 0.0 or n == 0:
            continue
        f = _piece_rhs(system.poles, system.residues, piece)
        y = fixed_rk45(f, piece.length, y, n)
    return y


def transport_many(poles_batch, residues_batch, path: Path, steps_per_piece) -> np.ndarray:
    """Fixed-step transports of a batch of systems along one shared path.

    poles_batch has shape (K, n), residues_batch (K, n, 2, 2); the result
    is the (K, 2, 2) stack of transport matrices.  All members share the
    step grid, so the map (poles, residues) -> matrices is analytic.
    """
    poles_batch = np.asarray(poles_batch, dtype=complex)
    residues_batch = np.asarray(residues_batch, dtype=complex)
    k = poles_batch.shape[0]
    y = np.broadcast_to(np.eye(2, dtype=complex), (k, 2, 2)).copy()
    for piece, n in zip(path.pieces, steps_per_piece):
        if piece.length == 0.0 or n == 0:
            continue
        f = _piece_rhs(poles_batch, residues_batch, piece)
        y = fixed_rk45(f, piece.length, y, n)
    return y
