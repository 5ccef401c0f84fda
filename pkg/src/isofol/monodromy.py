"""Framed monodromy tuples, adjoint-orbit structure, and class distance.

A monodromy tuple collects the transport matrices of the lassos of a loop
system, framed by Y(basepoint) = I.  Two group kinds are supported:
ordinary 2x2 linear monodromy, and affine translation monodromy where each
"matrix" is a complex translation length (the torus example).

Class structure is handled through the orbit map xi -> ([xi, M_1], ...,
[xi, M_n]) rather than trace coordinates: on families of unipotent
matrices every trace is identically 2, so traces cannot separate classes,
while the orbit map can.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import paths
from .continuation import DEFAULT_REL_TOL, transport
from .errors import IsofolError
from .fuchsian import FuchsianSystem
from .util import pair, pair_array, realify, unpair, unpair_array, unrealify

KIND_LINEAR = "linear-2x2"
KIND_AFFINE = "affine-translation"


@dataclass(frozen=True)
class MonodromyTuple:
    """Ordered monodromy data at a shared basepoint.

    ``matrices`` holds (n, 2, 2) complex matrices for the linear kind and a
    length-n complex vector of translation lengths for the affine kind.
    ``order[k]`` names the pole (or lattice generator) of entry k.
    """

    basepoint: complex
    matrices: np.ndarray
    kind: str
    order: tuple
    flags: tuple = ()

    def __post_init__(self):
        m = np.asarray(self.matrices, dtype=complex)
        if self.kind == KIND_LINEAR:
            if m.ndim != 3 or m.shape[1:] != (2, 2):
                raise ValueError("linear tuples need shape (n, 2, 2)")
            if np.any(np.abs(np.linalg.det(m)) == 0.0):
                raise ValueError("monodromy matrices must be invertible")
        elif self.kind == KIND_AFFINE:
            m = m.ravel()
        else:
            raise ValueError(f"unknown tuple kind {self.kind!r}")
        if len(self.order) != m.shape[0]:
            raise ValueError("order length must match the number of entries")
        object.__setattr__(self, "matrices", m)
        object.__setattr__(self, "order", tuple(self.order))
        object.__setattr__(self, "flags", tuple(self.flags))

    @property
    def n(self) -> int:
        return self.matrices.shape[0]

    @property
    def translations(self) -> np.ndarray:
        if self.kind != KIND_AFFINE:
            raise ValueError("translations are only defined for affine tuples")
        return self.matrices


def loop_transports(system: FuchsianSystem, loop_system: paths.LoopSystem,
                    rel_tol: float = DEFAULT_REL_TOL) -> list:
    """Transport results for every lasso, errors annotated with the loop."""
    results = []
    for k, loop in enumerate(loop_system.loops):
        try:
            results.append(transport(system, loop, rel_tol))
        except IsofolError as exc:
            raise type(exc)(
                f"loop {k} (pole index {loop_system.order[k]}): {exc}"
            ) from exc
    return results


def monodromy_tuple(system: FuchsianSystem, loop_system: paths.LoopSystem,
                    rel_tol: float = DEFAULT_REL_TOL) -> MonodromyTuple:
    """Framed monodromy matrices along the loop system, Y(basepoint) = I."""
    if loop_system.n != system.n:
        raise ValueError("loop system and system have different pole counts")
    results = loop_transports(system, loop_system, rel_tol)
    matrices = np.stack([r.matrix for r in results])
    return MonodromyTuple(loop_system.basepoint, matrices, KIND_LINEAR, loop_system.order)


def product_defect(tup: MonodromyTuple, system: FuchsianSystem,
                   loop_system: paths.LoopSystem, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Norm gap between the big-circle transport and the ordered product.

    Compares the transport around one counterclockwise circle enclosing all
    poles with M_n ... M_2 M_1 in loop order.  A small value certifies that
    the implemented generator ordering composes to the boundary loop.
    """
    if tup.kind != KIND_LINEAR:
        raise ValueError("product defect is defined for linear tuples")
    circle = paths.enclosing_circle(loop_system.basepoint, system.poles)
    big = transport(system, circle, rel_tol).matrix
    prod = np.eye(2, dtype=complex)
    for m in tup.matrices:
        prod = m @ prod
    return float(np.linalg.norm(big - prod))


def trace_invariants(tup: MonodromyTuple) -> np.ndarray:
    """Realified classical conjugation invariants.

    Single traces for every entry, pairwise product traces for i < j, and
    the triple product trace when the tuple has exactly three entries.
    """
    if tup.kind != KIND_LINEAR:
        raise ValueError("trace invariants are defined for linear tuples")
    m = tup.matrices
    values = [np.trace(mi) for mi in m]
    for i in range(tup.n):
        for j in range(i + 1, tup.n):
            values.append(np.trace(m[i] @ m[j]))
    if tup.n == 3:
        values.append(np.trace(m[0] @ m[1] @ m[2]))
    return realify(np.asarray(values))


_XI_BASIS = [unrealify(col, (2, 2)) for col in np.eye(8)]


def adjoint_orbit_matrix(tup: MonodromyTuple) -> np.ndarray:
    """Realified tangent map of the symmetry-group action on the tuple.

    Linear kind: xi -> ([xi, M_1], ..., [xi, M_n]) for xi in the 8 real
    dimensions of complex 2x2 matrices; the image spans the tangent of the
    simultaneous-conjugation orbit.  Affine kind: s -> (s t_1, ..., s t_n)
    for one complex scale s, the derivative of y -> a y + b acting on
    translation lengths.
    """
    if tup.kind == KIND_AFFINE:
        t = tup.matrices
        return np.column_stack([realify(t), realify(1j * t)])
    m = tup.matrices
    cols = []
    for xi in _XI_BASIS:
        cols.append(realify(np.stack([xi @ mi - mi @ xi for mi in m])))
    return np.column_stack(cols)


def _conjugation_residual(g, g_inv, m1, m2):
    return np.stack([g @ mi @ g_inv for mi in m1]) - m2


def _affine_class_distance(t1, t2):
    t, tp = t1.matrices, t2.matrices
    denom = float(np.sum(np.abs(t) ** 2))
    if denom == 0.0:
        return float(np.linalg.norm(tp))
    a = np.vdot(t, tp) / denom
    return float(np.linalg.norm(a * t - tp))


def class_distance(t1: MonodromyTuple, t2: MonodromyTuple, max_iter: int = 200) -> float:
    """Distance between conjugacy classes of two tuples.

    Minimizes the summed squared Frobenius gap over the symmetry group by
    Levenberg-damped Gauss-Newton from the identity, with det(g) = 1
    renormalization for the linear kind; the affine problem is linear in
    the scale and solved exactly.  Returns the square root of the attained
    minimum.
    """
    if t1.kind != t2.kind or t1.n != t2.n:
        raise ValueError("tuples must share kind and length")
    if t1.kind == KIND_AFFINE:
        return _affine_class_distance(t1, t2)

    m1, m2 = t1.matrices, t2.matrices
    g = np.eye(2, dtype=complex)
    g_inv = np.eye(2, dtype=complex)
    res = _conjugation_residual(g, g_inv, m1, m2)
    best = float(np.sum(np.abs(res) ** 2))
    if best == 0.0:
        return 0.0
    lam = 1e-3
    converged = False
    for _ in range(max_iter):
        conj = np.stack([g @ mi @ g_inv for mi in m1])
        b = np.stack([mi @ g_inv for mi in m1])
        jac = np.column_stack([
            realify(np.stack([xi @ bi - ci @ (xi @ g_inv) for bi, ci in zip(b, conj)]))
            for xi in _XI_BASIS
        ])
        r = realify(res)
        jtj = jac.T @ jac
        jtr = jac.T @ r
        accepted = False
        for _ in range(30):
            try:
                delta = np.linalg.solve(jtj + lam * np.eye(8), -jtr)
            except np.linalg.LinAlgError:
                lam *= 4.0
                continue
            g_new = g + unrealify(delta, (2, 2))
            det = np.linalg.det(g_new)
            if abs(det) < 1e-12:
                lam *= 4.0
                continue
            g_new = g_new / np.sqrt(det)
            g_new_inv = np.linalg.inv(g_new)
            res_new = _conjugation_residual(g_new, g_new_inv, m1, m2)
            val = float(np.sum(np.abs(res_new) ** 2))
            if val < best:
                improvement = best - val
                g, g_inv, res, best = g_new, g_new_inv, res_new, val
                lam = max(lam * 0.5, 1e-14)
                accepted = True
                if improvement < 1e-16 * (1.0 + best) or np.linalg.norm(delta) < 1e-13:
                    converged = True
                break
            lam *= 4.0
        if not accepted or converged or best < 1e-28:
            converged = converged or best < 1e-28 or not accepted
            break
    if not converged:
        warnings.warn("class_distance: Gauss-Newton hit the iteration cap; "
                      "returning the best value found", stacklevel=2)
    return float(np.sqrt(best))


def tuple_to_json_dict(tup: MonodromyTuple) -> dict:
    return {
        "basepoint": pair(tup.basepoint),
        "kind": tup.kind,
        "order": list(tup.order),
        "matrices": pair_array(tup.matrices),
        "flags": list(tup.flags),
    }


def tuple_from_json_dict(data: dict) -> MonodromyTuple:
    return MonodromyTuple(
        basepoint=unpair(data["basepoint"]),
        matrices=unpair_array(data["matrices"]),
        kind=data["kind"],
        order=tuple(data["order"]),
        flags=tuple(data.get("flags", ())),
    )
