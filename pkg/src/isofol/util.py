"""Realification conventions and small linear-algebra helpers.

Complex data is flattened row-major with each entry contributing an
(re, im) pair.  Every module uses this one convention.
"""

from __future__ import annotations

import numpy as np


def realify(values) -> np.ndarray:
    """Flatten a complex array to interleaved (re, im) real coordinates."""
    a = np.asarray(values, dtype=complex).ravel()
    out = np.empty(2 * a.size, dtype=float)
    out[0::2] = a.real
    out[1::2] = a.imag
    return out


def unrealify(vec, shape) -> np.ndarray:
    """Inverse of :func:`realify` for the given complex shape."""
    v = np.asarray(vec, dtype=float)
    if v.size % 2:
        raise ValueError("realified vector must have even length")
    c = v[0::2] + 1j * v[1::2]
    return c.reshape(shape)


def realify_complex_matrix(m) -> np.ndarray:
    """Realify a complex matrix as a real linear map.

    A complex p-by-q matrix acting on realified coordinates becomes the
    2p-by-2q real matrix with 2x2 blocks [[re, -im], [im, re]].
    """
    m = np.asarray(m, dtype=complex)
    p, q = m.shape
    out = np.zeros((2 * p, 2 * q))
    out[0::2, 0::2] = m.real
    out[0::2, 1::2] = -m.imag
    out[1::2, 0::2] = m.imag
    out[1::2, 1::2] = m.real
    return out


def multiply_by_i(vec, pairs) -> np.ndarray:
    """Apply the complex structure (re, im) -> (-im, re) pairwise."""
    v = np.asarray(vec, dtype=float)
    out = np.empty_like(v)
    for re_idx, im_idx in pairs:
        out[re_idx] = -v[im_idx]
        out[im_idx] = v[re_idx]
    return out


def _orthonormal_columns(a) -> np.ndarray:
    # SVD, not plain QR: unpivoted QR of a rank-deficient matrix fills the
    # trailing columns with arbitrary orthonormal directions outside the span
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[1] == 0:
        return a
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return a[:, :0]
    return u[:, s > 1e-12 * s[0]]


def principal_angles(a, b) -> np.ndarray:
    """Principal angles (ascending, radians) between two column spans."""
    qa = _orthonormal_columns(a)
    qb = _orthonormal_columns(b)
    if qa.shape[1] == 0 or qb.shape[1] == 0:
        return np.zeros(0)
    s = np.linalg.svd(qa.T @ qb, compute_uv=False)
    s = np.clip(s, -1.0, 1.0)
    return np.sort(np.arccos(s))


def containment_angle(a, b) -> float:
    """Largest angle by which span(a) sticks out of span(b); 0 iff a within b.

    Uses the sine formulation, accurate down to machine precision for
    nearly-contained subspaces where arccos of a Gram singular value
    saturates around 1e-8.
    """
    qa = _orthonormal_columns(a)
    qb = _orthonormal_columns(b)
    if qa.shape[1] == 0:
        return 0.0
    if qb.shape[1] == 0 or qa.shape[1] > qb.shape[1]:
        return np.pi / 2
    residual = qa - qb @ (qb.T @ qa)
    s = np.linalg.svd(residual, compute_uv=False)
    return float(np.arcsin(np.clip(s.max(), 0.0, 1.0)))


def subspace_distance(a, b) -> float:
    """Symmetric max principal-angle distance between equal-dim spans."""
    return max(containment_angle(a, b), containment_angle(b, a))


def pair(z) -> list:
    """Complex scalar -> [re, im] for JSON serialization."""
    z = complex(z)
    return [z.real, z.imag]


def unpair(p) -> complex:
    if not (isinstance(p, (list, tuple)) and len(p) == 2):
        raise ValueError(f"expected [re, im] pair, got {p!r}")
    return complex(float(p[0]), float(p[1]))


def pair_array(a) -> list:
    """Nested [re, im] representation of a complex ndarray."""
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        return pair(a[()])
    return [pair_array(x) for x in a]


def unpair_array(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise ValueError("expected nested [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]
