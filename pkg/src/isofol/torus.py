"""Linear foliations on 2-dimensional complex tori.

A torus C^2 / Lambda with lattice basis e_1..e_4 carries the linear
foliation of the closed form dx + alpha dy.  Its monodromy on the
transversal x = 0 is by translations y -> y + e_i1 + e_i2 alpha, so
everything here is closed form: translation lengths, the first integrals
t_1 / t_i whose level sets are the integrable leaves in parameter space,
and the analytic kernel of those integrals.  This is the exact oracle used
to cross-validate the finite-difference detector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detector import ParameterFamily
from .errors import DegenerateLatticeError, IndeterminateIntegralError
from .monodromy import KIND_AFFINE, MonodromyTuple
from .util import (
    pair_array,
    realify,
    realify_complex_matrix,
    unpair_array,
)

DET_THRESHOLD = 1e-10
ALPHA_INFINITY_TOL = 1e-14


@dataclass(frozen=True)
class TorusFoliation:
    """Lattice basis (4 vectors in C^2) plus a projective slope.

    ``lattice[i] = (e_i1, e_i2)``; ``alpha`` is stored as a projective pair
    (alpha0 : alpha1) normalized to max-norm 1.  The 4x4 real matrix with
    columns (Re e_i, Im e_i) must be invertible for the lattice to span.
    """

    lattice: np.ndarray
    alpha: tuple

    def __post_init__(self):
        lattice = np.asarray(self.lattice, dtype=complex)
        if lattice.shape != (4, 2):
            raise ValueError("lattice must consist of four vectors in C^2")
        a0, a1 = complex(self.alpha[0]), complex(self.alpha[1])
        norm = max(abs(a0), abs(a1))
        if norm == 0.0:
            raise ValueError("projective slope (0 : 0) is not a point")
        object.__setattr__(self, "lattice", lattice)
        object.__setattr__(self, "alpha", (a0 / norm, a1 / norm))
        if abs(self.real_determinant()) <= DET_THRESHOLD:
            raise DegenerateLatticeError(
                "lattice vectors are not R-linearly independent"
            )

    def real_matrix(self) -> np.ndarray:
        m = np.empty((4, 4))
        m[0:2, :] = self.lattice.T.real
        m[2:4, :] = self.lattice.T.imag
        return m

    def real_determinant(self) -> float:
        return float(np.linalg.det(self.real_matrix()))

    @property
    def alpha_is_finite(self) -> bool:
        return abs(self.alpha[1]) > ALPHA_INFINITY_TOL

    @property
    def alpha_value(self) -> complex:
        if not self.alpha_is_finite:
            raise ValueError("slope is at infinity")
        return self.alpha[0] / self.alpha[1]


def torus_family(lattice, alpha) -> TorusFoliation:
    """Validated torus foliation; ``alpha`` is a scalar or projective pair."""
    if np.isscalar(alpha) or isinstance(alpha, complex):
        alpha = (complex(alpha), 1.0 + 0j)
    return TorusFoliation(np.asarray(lattice, dtype=complex), tuple(alpha))


def translation_monodromy(torus: TorusFoliation) -> MonodromyTuple:
    """Translation lengths t_i = e_i1 + e_i2 alpha as an affine tuple.

    At alpha = infinity the rescaled form is used instead, t_i = e_i2,
    and the tuple is flagged.
    """
    if torus.alpha_is_finite:
        t = torus.lattice[:, 0] + torus.lattice[:, 1] * torus.alpha_value
        flags = ()
    else:
        t = torus.lattice[:, 1].copy()
        flags = ("alpha-at-infinity",)
    return MonodromyTuple(0j, t, KIND_AFFINE, (0, 1, 2, 3), flags)


def first_integrals(torus: TorusFoliation) -> np.ndarray:
    """The three quotients t_1 / t_i, i = 2, 3, 4.

    Their common level sets in (lattice, slope) space are exactly the
    directions along which the translation monodromy stays in one orbit of
    y -> a y + b.
    """
    t = translation_monodromy(torus).translations
    for i in (1, 2, 3):
        if abs(t[i]) <= 1e-12:
            raise IndeterminateIntegralError(
                f"translation length t_{i + 1} vanishes", index=i + 1
            )
    return np.array([t[0] / t[1], t[0] / t[2], t[0] / t[3]])


def first_integral_jacobian(torus: TorusFoliation) -> np.ndarray:
    """Closed-form complex Jacobian of the first integrals.

    Rows are (f_2, f_3, f_4); columns are the nine complex parameters
    (e_11, e_12, e_21, ..., e_42, alpha) in the finite-slope chart.
    """
    alpha = torus.alpha_value
    t = translation_monodromy(torus).translations
    jac = np.zeros((3, 9), dtype=complex)
    for row, i in enumerate((1, 2, 3)):
        ti = t[i]
        jac[row, 0] = 1.0 / ti                     # d/d e_11
        jac[row, 1] = alpha / ti                   # d/d e_12
        jac[row, 2 * i] = -t[0] / ti ** 2          # d/d e_{i1}
        jac[row, 2 * i + 1] = -t[0] * alpha / ti ** 2
        jac[row, 8] = (torus.lattice[0, 1] * ti - t[0] * torus.lattice[i, 1]) / ti ** 2
    return jac


def analytic_kernel(torus: TorusFoliation, rank_eps: float = 1e-9) -> np.ndarray:
    """Orthonormal null-space basis of the realified first-integral Jacobian.

    18 real coordinates (eight lattice entries plus the finite slope); the
    kernel has real dimension 12 wherever the integrals are defined.
    """
    jac = realify_complex_matrix(first_integral_jacobian(torus))
    _, sigma, vh = np.linalg.svd(jac, full_matrices=True)
    rank = int(np.sum(sigma >= rank_eps * sigma[0])) if sigma.size and sigma[0] > 0 else 0
    return vh[rank:].T


def torus_tau(torus: TorusFoliation) -> np.ndarray:
    """Realified parameter coordinates of a torus in the finite chart."""
    return realify(np.concatenate([torus.lattice.ravel(), [torus.alpha_value]]))


def parameter_family(chart: str = "finite") -> ParameterFamily:
    """The 18-real-coordinate family of torus foliations for the detector.

    Coordinates are the realified lattice entries followed by the slope in
    the finite chart.  The framed map is the realified translation tuple;
    the orbit map is the affine scaling action.
    """
    if chart != "finite":
        raise ValueError("only the finite-slope chart supports detector work")

    def evaluate(tau):
        tau = np.asarray(tau, dtype=float)
        if tau.shape != (18,):
            raise ValueError("torus family has 18 real coordinates")
        lattice = (tau[0:16:2] + 1j * tau[1:16:2]).reshape(4, 2)
        alpha = complex(tau[16], tau[17])
        return translation_monodromy(torus_family(lattice, alpha))

    def admissible(tau):
        try:
            torus = torus_family(
                (np.asarray(tau)[0:16:2] + 1j * np.asarray(tau)[1:16:2]).reshape(4, 2),
                complex(tau[16], tau[17]),
            )
            first_integrals(torus)
        except (DegenerateLatticeError, IndeterminateIntegralError, ValueError):
            return False
        return True

    names = tuple(
        f"e{i}{j}.{part}" for i in (1, 2, 3, 4) for j in (1, 2) for part in ("re", "im")
    ) + ("alpha.re", "alpha.im")
    pairs = tuple((2 * k, 2 * k + 1) for k in range(9))
    return ParameterFamily(
        dimension=18,
        evaluate=evaluate,
        coordinate_names=names,
        complex_pairs=pairs,
        admissible=admissible,
    )


def torus_to_json_dict(torus: TorusFoliation) -> dict:
    return {
        "lattice": pair_array(torus.lattice),
        "alpha": pair_array(np.asarray(torus.alpha)),
    }


def torus_from_json_dict(data: dict) -> TorusFoliation:
    alpha = unpair_array(data["alpha"])
    return TorusFoliation(unpair_array(data["lattice"]), (alpha[0], alpha[1]))
