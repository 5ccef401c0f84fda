"""Fuchsian systems d/dz = sum_i A_i / (z - u_i) with 2x2 residues."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfigurationError, PoleEvaluationError
from .util import pair_array, unpair_array

POLE_TOL = 1e-12

#: strictly upper-triangular nilpotent generator
NILPOTENT = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)


@dataclass(frozen=True)
class FuchsianSystem:
    """Simple poles and constant 2x2 residue matrices on the punctured sphere."""

    poles: np.ndarray
    residues: np.ndarray
    min_separation: float = 0.0

    def __post_init__(self):
        poles = np.asarray(self.poles, dtype=complex).ravel()
        residues = np.asarray(self.residues, dtype=complex)
        if poles.size < 1:
            raise DegenerateConfigurationError("at least one pole required")
        if residues.shape != (poles.size, 2, 2):
            raise ValueError(
                f"residues must have shape ({poles.size}, 2, 2), got {residues.shape}"
            )
        if poles.size > 1:
            diff = poles[:, None] - poles[None, :]
            np.fill_diagonal(diff, np.inf)
            sep = float(np.min(np.abs(diff)))
        else:
            sep = np.inf
        if sep <= POLE_TOL:
            raise DegenerateConfigurationError("poles are not pairwise distinct")
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "residues", residues)
        object.__setattr__(self, "min_separation", sep)

    @property
    def n(self) -> int:
        return self.poles.size


def connection_eval(system: FuchsianSystem, z: complex) -> np.ndarray:
    """Value sum_i A_i / (z - u_i) of the connection matrix at z."""
    dz = z - system.poles
    if np.min(np.abs(dz)) < POLE_TOL:
        raise PoleEvaluationError(f"z = {z} lies on a pole")
    return np.tensordot(1.0 / dz, system.residues, axes=1)


def nilpotent_family(a, u) -> FuchsianSystem:
    """Three-pole family with commuting residues a_i * N, N strictly upper."""
    a = np.asarray(a, dtype=complex).ravel()
    u = np.asarray(u, dtype=complex).ravel()
    if a.size != u.size:
        raise ValueError("need one coefficient per pole")
    residues = a[:, None, None] * NILPOTENT
    return FuchsianSystem(u, residues)


def residue_at_infinity(system: FuchsianSystem) -> np.ndarray:
    """Residue at z = infinity, minus the sum of the finite residues."""
    return -system.residues.sum(axis=0)


def system_to_json_dict(system: FuchsianSystem) -> dict:
    return {
        "poles": pair_array(system.poles),
        "residues": pair_array(system.residues),
    }


def system_from_json_dict(data: dict) -> FuchsianSystem:
    return FuchsianSystem(unpair_array(data["poles"]), unpair_array(data["residues"]))
