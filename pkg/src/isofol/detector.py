"""Kernel detection for parameter-to-monodromy maps.

A ParameterFamily evaluates monodromy tuples as a function of real
parameters (complex parameters split into (re, im) pairs).  The detector
differentiates the realified framed-monodromy map by central differences,
extracts numerical kernels by SVD thresholding, and offers two modes:

* framed  -- directions along which the raw monodromy tuple is constant;
* class   -- directions along which the tuple moves only inside one
  symmetry-group orbit, computed via the projector off the orbit image
  (normal forms of unipotent tuples are discontinuous; the projector is
  numerically stable).

Rank decisions are the scientific output, so every report carries the full
singular spectrum and the gap ratio for threshold audits.  Kernels are
pointwise; a constant generic rank over a scan is the numerical shadow of
a foliation of that dimension, and rank-drop points are reported as
exceptional-locus candidates rather than folded into a global claim.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import paths
from .continuation import (
    DEFAULT_REL_TOL,
    calibrate_steps,
    transport_fixed,
    transport_many,
)
from .errors import (
    BoundaryError,
    FamilyEvaluationError,
    InvalidJacobianError,
    PoleProximityError,
    RankInstabilityError,
    ScanError,
)
from .fuchsian import nilpotent_family
from .monodromy import (
    KIND_AFFINE,
    KIND_LINEAR,
    MonodromyTuple,
    adjoint_orbit_matrix,
    class_distance,
)
from .util import multiply_by_i, realify

DEFAULT_FD_STEP = 1e-5
DEFAULT_RANK_EPS = 1e-6


@dataclass
class ParameterFamily:
    """Map from q real coordinates to monodromy tuples.

    ``evaluate`` must be deterministic.  ``evaluate_many`` is an optional
    batched evaluator used to amortize Jacobian stencils.  ``admissible``
    is an optional cheap predicate used by rejection sampling.
    """

    dimension: int
    evaluate: Callable[[np.ndarray], MonodromyTuple]
    coordinate_names: tuple
    complex_pairs: tuple
    orbit_matrix: Optional[Callable[[np.ndarray], np.ndarray]] = None
    evaluate_many: Optional[Callable[[list], list]] = None
    admissible: Optional[Callable[[np.ndarray], bool]] = None

    def __post_init__(self):
        if len(self.coordinate_names) != self.dimension:
            raise ValueError("need one name per coordinate")
        if self.orbit_matrix is None:
            self.orbit_matrix = lambda tau: adjoint_orbit_matrix(self.evaluate(tau))


@dataclass(frozen=True)
class KernelReport:
    """Numerical kernel of the parameter-to-monodromy differential at one point."""

    tau: np.ndarray
    mode: str
    singular_values: np.ndarray
    rank: int
    kernel_basis: np.ndarray
    gap_ratio: float
    complex_structure: Optional[bool] = None

    @property
    def kernel_dim(self) -> int:
        return self.kernel_basis.shape[1]


def realify_tuple(tup: MonodromyTuple) -> np.ndarray:
    """Realified framed data: 8n reals (linear) or 2n reals (affine)."""
    return realify(tup.matrices)


def framed_map(family: ParameterFamily, tau) -> np.ndarray:
    """Realified framed monodromy at tau; failures carry the point."""
    tau = np.asarray(tau, dtype=float)
    try:
        return realify_tuple(family.evaluate(tau))
    except Exception as exc:
        raise FamilyEvaluationError(f"evaluation failed at tau={tau.tolist()}: {exc}",
                                    tau=tau) from exc


def _stencil_steps(tau, h):
    return h * np.maximum(1.0, np.abs(tau))


def jacobian(family: ParameterFamily, tau, h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Central-difference Jacobian of the framed map, column by column.

    The step for coordinate k is h * max(1, |tau_k|).  Central differences
    are exact on maps of degree <= 2 in each coordinate.
    """
    if h <= 0.0:
        raise ValueError("fd step h must be positive")
    tau = np.asarray(tau, dtype=float)
    q = family.dimension
    if tau.shape != (q,):
        raise ValueError(f"tau must have shape ({q},)")
    hk = _stencil_steps(tau, h)
    points = []
    for k in range(q):
        for sign in (+1.0, -1.0):
            p = tau.copy()
            p[k] += sign * hk[k]
            points.append(p)

    if family.evaluate_many is not None:
        try:
            tuples = family.evaluate_many(points)
        except Exception as exc:
            coord = getattr(exc, "coordinate", None)
            raise BoundaryError(f"jacobian stencil failed: {exc}", coordinate=coord) from exc
        values = [realify_tuple(t) for t in tuples]
    else:
        values = []
        for idx, p in enumerate(points):
            try:
                values.append(framed_map(family, p))
            except Exception as exc:
                name = family.coordinate_names[idx // 2]
                raise BoundaryError(
                    f"stencil point inadmissible along coordinate {name!r}: {exc}",
                    coordinate=name,
                ) from exc
    cols = [(values[2 * k] - values[2 * k + 1]) / (2.0 * hk[k]) for k in range(q)]
    return np.column_stack(cols)


def framed_kernel(j_matrix, rank_eps: float = DEFAULT_RANK_EPS, tau=None,
                  mode: str = "framed") -> KernelReport:
    """SVD kernel of a realified Jacobian with relative thresholding."""
    if not 0.0 < rank_eps < 1.0:
        raise ValueError("rank_eps must lie in (0, 1)")
    j_matrix = np.asarray(j_matrix, dtype=float)
    if not np.all(np.isfinite(j_matrix)):
        raise InvalidJacobianError("jacobian contains non-finite entries")
    q = j_matrix.shape[1]
    _, sigma, vh = np.linalg.svd(j_matrix, full_matrices=True)
    smax = sigma[0] if sigma.size else 0.0
    if smax == 0.0:
        rank = 0
    else:
        rank = int(np.sum(sigma >= rank_eps * smax))
    basis = vh[rank:].T
    if rank == 0 or rank == q:
        gap = np.inf
    elif rank < sigma.size:
        gap = float(sigma[rank - 1] / sigma[rank]) if sigma[rank] > 0.0 else np.inf
    else:
        gap = np.inf
    return KernelReport(
        tau=None if tau is None else np.asarray(tau, dtype=float),
        mode=mode,
        singular_values=sigma,
        rank=rank,
        kernel_basis=basis,
        gap_ratio=gap,
    )


def class_kernel(j_matrix, orbit_matrix, rank_eps: float = DEFAULT_RANK_EPS,
                 tau=None) -> KernelReport:
    """Kernel of the Jacobian modulo the symmetry-orbit image.

    A direction w is kept iff J w is absorbable by the infinitesimal group
    action, i.e. lies in the column span of the orbit matrix; computed as
    the framed kernel of (I - K K^+) J.
    """
    j_matrix = np.asarray(j_matrix, dtype=float)
    k_matrix = np.asarray(orbit_matrix, dtype=float)
    if j_matrix.shape[0] != k_matrix.shape[0]:
        raise ValueError("jacobian and orbit matrix must have equal row counts")
    projector = np.eye(j_matrix.shape[0]) - k_matrix @ np.linalg.pinv(k_matrix, rcond=rank_eps)
    return framed_kernel(projector @ j_matrix, rank_eps, tau=tau, mode="class")


def kernel_report(family: ParameterFamily, tau, mode: str = "framed",
                  h: float = DEFAULT_FD_STEP, rank_eps: float = DEFAULT_RANK_EPS) -> KernelReport:
    """Jacobian plus kernel extraction at one parameter point."""
    tau = np.asarray(tau, dtype=float)
    j_matrix = jacobian(family, tau, h)
    if mode == "framed":
        return framed_kernel(j_matrix, rank_eps, tau=tau)
    if mode == "class":
        return class_kernel(j_matrix, family.orbit_matrix(tau), rank_eps, tau=tau)
    raise ValueError(f"unknown mode {mode!r} (use 'framed' or 'class')")


@dataclass(frozen=True)
class RankMap:
    """Per-sample ranks of a scan, with modal generic rank and drop candidates."""

    taus: tuple
    reports: tuple
    failures: tuple
    generic_rank: int
    drops: tuple  # (sample index, rank, kernel surplus) for rank < generic

    @property
    def ranks(self) -> list:
        return [r.rank if r is not None else None for r in self.reports]


def rank_scan(family: ParameterFamily, samples, mode: str = "framed",
              h: float = DEFAULT_FD_STEP, rank_eps: float = DEFAULT_RANK_EPS) -> RankMap:
    """Kernel reports over sample points; failures are recorded, not fatal.

    The generic rank is the modal rank; samples of smaller rank are
    flagged as exceptional-locus candidates together with their kernel
    surplus.  More than half the samples failing aborts the scan.
    """
    samples = [np.asarray(t, dtype=float) for t in samples]
    if not samples:
        raise ValueError("rank_scan needs at least one sample point")
    reports, failures = [], []
    for idx, tau in enumerate(samples):
        try:
            reports.append(kernel_report(family, tau, mode, h, rank_eps))
        except Exception as exc:  # recorded per point
            reports.append(None)
            failures.append((idx, f"{type(exc).__name__}: {exc}"))
    if len(failures) * 2 >= len(samples) and failures:
        raise ScanError(
            f"{len(failures)} of {len(samples)} samples failed: {failures[:3]}"
        )
    ranks = [r.rank for r in reports if r is not None]
    values, counts = np.unique(ranks, return_counts=True)
    generic = int(values[np.argmax(counts)])
    drops = tuple(
        (idx, r.rank, generic - r.rank)
        for idx, r in enumerate(reports)
        if r is not None and r.rank < generic
    )
    return RankMap(tuple(samples), tuple(reports), tuple(failures), generic, drops)


def _projector(report: KernelReport) -> np.ndarray:
    v = report.kernel_basis
    return v @ v.T


def frobenius_residual(family: ParameterFamily, tau, mode: str = "framed",
                       h: float = 1e-3,
                       rank_eps: float = DEFAULT_RANK_EPS) -> float:
    """Worst bracket defect of the detected kernel distribution at tau.

    For kernel fields V_k(x) = P(x) v_k built from the orthogonal kernel
    projector P, the bracket [V_i, V_j](tau) is estimated by central
    differences of P along the basis directions; the residual is the
    largest component of any bracket outside the kernel.  Zero (to O(h^2))
    iff the distribution is involutive near tau.

    The default step is larger than the Jacobian default: this is a second
    difference, and its noise floor scales like roundoff / h^2, so probing
    the projector field below h ~ 1e-4 drowns flat distributions in
    floating-point noise.
    """
    tau = np.asarray(tau, dtype=float)
    base = kernel_report(family, tau, mode, h, rank_eps)
    d = base.kernel_dim
    if d == 0:
        raise RankInstabilityError("kernel at tau is zero-dimensional")
    if d == 1:
        return 0.0
    q = family.dimension
    if d == q:
        return 0.0
    v = base.kernel_basis
    p0 = _projector(base)
    probes = np.empty((d, 2), dtype=object)
    for i in range(d):
        for s, sign in enumerate((+1.0, -1.0)):
            rep = kernel_report(family, tau + sign * h * v[:, i], mode, h, rank_eps)
            if rep.kernel_dim != d:
                raise RankInstabilityError(
                    f"kernel dimension changed from {d} to {rep.kernel_dim} at a "
                    "probe point; tau is near a rank-drop locus"
                )
            probes[i, s] = _projector(rep)
    off = np.eye(q) - p0
    worst = 0.0
    for i in range(d):
        for j in range(i + 1, d):
            dvj = (probes[i, 0] @ v[:, j] - probes[i, 1] @ v[:, j]) / (2.0 * h)
            dvi = (probes[j, 0] @ v[:, i] - probes[j, 1] @ v[:, i]) / (2.0 * h)
            worst = max(worst, float(np.linalg.norm(off @ (dvj - dvi))))
    return worst


@dataclass(frozen=True)
class LeafTrace:
    """Points visited along a leaf with per-point invariant drift."""

    points: np.ndarray
    drifts: np.ndarray
    terminated_early: bool
    message: str = ""


def leaf_trace(family: ParameterFamily, tau0, step: float = 1e-3, n_steps: int = 100,
               mode: str = "framed", h: float = DEFAULT_FD_STEP,
               rank_eps: float = DEFAULT_RANK_EPS,
               direction_selector: Optional[Callable] = None) -> LeafTrace:
    """Follow the detected kernel distribution by projected Euler steps.

    Each step walks along a unit kernel vector, then re-evaluates the
    kernel at the new point and re-projects the direction.  The default
    selector starts from the most-null singular direction and afterwards
    keeps maximal overlap with the previous direction.  Drift is the
    framed-map displacement (framed mode) or the class distance (class
    mode) from the starting point; a rank change terminates the trace
    early with the partial result.

    Projected Euler is deliberate: each kernel evaluation costs a full
    Jacobian, and drift is measured independently, so cheap stepping with
    an audit beats expensive stepping without one.
    """
    tau = np.asarray(tau0, dtype=float).copy()
    base = kernel_report(family, tau, mode, h, rank_eps)
    if base.kernel_dim == 0:
        raise RankInstabilityError("kernel at the starting point is zero-dimensional")
    rank0 = base.rank

    if direction_selector is None:
        def direction_selector(report, previous):
            if previous is None:
                return report.kernel_basis[:, -1]
            w = _projector(report) @ previous
            norm = np.linalg.norm(w)
            if norm < 0.5:
                raise RankInstabilityError("kernel turned away from the trace direction")
            return w / norm

    ref_tuple = family.evaluate(tau)
    ref_framed = realify_tuple(ref_tuple)

    def drift_of(t):
        if mode == "class":
            return class_distance(family.evaluate(t), ref_tuple)
        return float(np.linalg.norm(realify_tuple(family.evaluate(t)) - ref_framed))

    points = [tau.copy()]
    drifts = [0.0]
    previous = None
    terminated = False
    message = ""
    report = base
    for k in range(n_steps):
        if report.rank != rank0:
            terminated = True
            message = (f"rank changed from {rank0} to {report.rank} "
                       f"after {k} steps; returning partial trace")
            break
        direction = direction_selector(report, previous)
        direction = np.asarray(direction, dtype=float)
        direction = direction / np.linalg.norm(direction)
        if previous is not None and float(direction @ previous) < 0.0:
            direction = -direction
        tau = tau + step * direction
        points.append(tau.copy())
        drifts.append(drift_of(tau))
        previous = direction
        if k < n_steps - 1:
            report = kernel_report(family, tau, mode, h, rank_eps)
    return LeafTrace(np.asarray(points), np.asarray(drifts), terminated, message)


def complex_structure_check(report: KernelReport, pairs, tol: float = 1e-8) -> bool:
    """True iff the kernel span is closed under multiplication by i.

    ``pairs`` lists the (re, im) coordinate index pairs; each kernel basis
    vector is rotated by i pairwise and tested against the kernel span.
    """
    v = report.kernel_basis
    if v.shape[1] == 0:
        return True
    covered = sorted(i for p in pairs for i in p)
    if covered != list(range(v.shape[0])):
        raise ValueError("pairing must cover every coordinate exactly once")
    proj = v @ v.T
    q = v.shape[0]
    for col in range(v.shape[1]):
        rotated = multiply_by_i(v[:, col], pairs)
        if np.linalg.norm(rotated - proj @ rotated) > tol:
            return False
    return True


# ---------------------------------------------------------------------------
# Built-in family: three-pole nilpotent systems
# ---------------------------------------------------------------------------

def nilpotent_parameter_family(a, u, basepoint: complex | None = None,
                               radius_factor: float = 0.4,
                               rel_tol: float = DEFAULT_REL_TOL,
                               step_margin: float = 1.6) -> ParameterFamily:
    """Family of nilpotent three-pole systems over 12 real coordinates.

    Coordinates are (Re a_1, Im a_1, ..., Im a_3, Re u_1, ..., Im u_3).
    The loop system and the fixed per-piece step counts are frozen at the
    reference configuration (a, u): evaluations anywhere nearby integrate
    along the same paths with the same step grids, which keeps the
    numerical monodromy analytic in the parameters.  Evaluations whose
    poles drift onto the frozen paths raise a proximity error.
    """
    a = np.asarray(a, dtype=complex).ravel()
    u = np.asarray(u, dtype=complex).ravel()
    if a.size != 3 or u.size != 3:
        raise ValueError("the built-in family has three poles")
    reference = nilpotent_family(a, u)
    if basepoint is None:
        basepoint = paths.default_basepoint(u)
    loop_system = paths.canonical_generators(basepoint, u, radius_factor)
    steps = [calibrate_steps(reference, loop, rel_tol) for loop in loop_system.loops]
    sep_floor = max(1e-3, 0.05 * reference.min_separation)
    clearance = 1e-4

    def split(tau):
        tau = np.asarray(tau, dtype=float)
        av = tau[0:6:2] + 1j * tau[1:6:2]
        uv = tau[6:12:2] + 1j * tau[7:12:2]
        return av, uv

    def check_poles(uv):
        diff = uv[:, None] - uv[None, :]
        np.fill_diagonal(diff, np.inf)
        if np.min(np.abs(diff)) < sep_floor:
            raise PoleProximityError("poles too close together for the frozen loops")
        for loop in loop_system.loops:
            for pole in uv:
                if loop.min_distance(pole) < clearance:
                    raise PoleProximityError("a pole drifted onto a frozen loop path")

    def evaluate(tau):
        av, uv = split(tau)
        check_poles(uv)
        system = nilpotent_family(av, uv)
        mats = np.stack([
            transport_fixed(system, loop, counts)
            for loop, counts in zip(loop_system.loops, steps)
        ])
        return MonodromyTuple(basepoint, mats, KIND_LINEAR, loop_system.order)

    def evaluate_many(taus):
        split_vals = [split(t) for t in taus]
        for _, uv in split_vals:
            check_poles(uv)
        poles_batch = np.stack([uv for _, uv in split_vals])
        residues_batch = np.stack([
            av[:, None, None] * np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
            for av, _ in split_vals
        ])
        per_loop = [
            transport_many(poles_batch, residues_batch, loop, counts)
            for loop, counts in zip(loop_system.loops, steps)
        ]
        return [
            MonodromyTuple(basepoint, np.stack([m[i] for m in per_loop]),
                           KIND_LINEAR, loop_system.order)
            for i in range(len(taus))
        ]

    def admissible(tau):
        try:
            check_poles(split(tau)[1])
        except PoleProximityError:
            return False
        return True

    names = tuple(
        f"{sym}{i}.{part}" for sym in ("a", "u") for i in (1, 2, 3) for part in ("re", "im")
    )
    pairs = tuple((2 * k, 2 * k + 1) for k in range(6))
    return ParameterFamily(
        dimension=12,
        evaluate=evaluate,
        coordinate_names=names,
        complex_pairs=pairs,
        evaluate_many=evaluate_many,
        admissible=admissible,
    )


def nilpotent_reference_tau(a, u) -> np.ndarray:
    """Realified coordinates of a configuration of the built-in family."""
    return realify(np.concatenate([np.asarray(a, complex).ravel(),
                                   np.asarray(u, complex).ravel()]))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def report_to_json_dict(report: KernelReport) -> dict:
    return {
        "tau": None if report.tau is None else [float(x) for x in report.tau],
        "mode": report.mode,
        "singular_values": [float(s) for s in report.singular_values],
        "rank": int(report.rank),
        "kernel_dim": int(report.kernel_dim),
        "kernel_basis": [[float(x) for x in col] for col in report.kernel_basis.T],
        "gap_ratio": float(report.gap_ratio),
        "complex_structure": report.complex_structure,
    }


def rank_map_to_json_dict(rank_map: RankMap) -> dict:
    return {
        "generic_rank": rank_map.generic_rank,
        "ranks": rank_map.ranks,
        "drops": [list(d) for d in rank_map.drops],
        "failures": [list(f) for f in rank_map.failures],
        "reports": [
            None if r is None else report_to_json_dict(r) for r in rank_map.reports
        ],
    }


def rank_map_to_csv(rank_map: RankMap) -> str:
    """Plot-ready CSV: coordinates, rank, min kept and max dropped sigma."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    q = len(rank_map.taus[0]) if rank_map.taus else 0
    writer.writerow(
        ["index"] + [f"coord_{k}" for k in range(q)]
        + ["rank", "min_kept_sigma", "max_dropped_sigma"]
    )
    for idx, (tau, rep) in enumerate(zip(rank_map.taus, rank_map.reports)):
        if rep is None:
            writer.writerow([idx] + [repr(float(x)) for x in tau] + ["failed", "", ""])
            continue
        sigma = rep.singular_values
        min_kept = sigma[rep.rank - 1] if rep.rank > 0 else ""
        max_dropped = sigma[rep.rank] if rep.rank < sigma.size else ""
        writer.writerow(
            [idx] + [repr(float(x)) for x in tau]
            + [rep.rank, min_kept, max_dropped]
        )
    return buf.getvalue()
