import numpy as np
import pytest

from isofol import (
    FuchsianSystem,
    Path,
    PolePath,
    Segment,
    flow,
    isomonodromy_drift,
    nilpotent_family,
    schlesinger_rhs,
)
from isofol.errors import CollisionError

REL_TOL = 1e-10


def motion_clears_lassos(poles, index, target, margin=0.05):
    """Moving pole must not cross the straight runs to the other poles.

    A pole crossing another pole's lasso tail braids the generator system;
    index-tracked loop comparison is only meaningful without crossings.
    Near misses are fine: the loop construction detours on the near side,
    which preserves the loop classes.
    """
    from isofol import Path, default_basepoint

    cloud = np.concatenate([poles, [target]])
    b = default_basepoint(cloud)
    corridor = Path([Segment(complex(poles[index]), complex(target))])
    for j, u in enumerate(poles):
        if j == index:
            continue
        tail = Path([Segment(b, complex(u))])
        samples = corridor.sample(0.01)
        if min(tail.min_distance(z) for z in samples) < margin:
            return False
    return True


def random_traceless_system(rng, scale=0.35, motion=None):
    while True:
        residues = rng.normal(0, scale, (3, 2, 2)) + 1j * rng.normal(0, scale, (3, 2, 2))
        for i in range(3):
            residues[i] -= np.trace(residues[i]) / 2 * np.eye(2)
        u = np.array([0.0, 1.8 + 0.2j, -0.5 + 1.7j])
        u += rng.uniform(-0.15, 0.15, 3) + 1j * rng.uniform(-0.15, 0.15, 3)
        if motion is None or motion_clears_lassos(u, 0, u[0] + motion):
            return FuchsianSystem(u, residues)


def test_rhs_commuting_residues_vanish():
    system = nilpotent_family([1.0, 2.0, 3.0], [0.0, 1.0, -1.0])
    out = schlesinger_rhs(system.residues, system.poles, [0.3 + 1j, -0.2, 0.7j])
    assert np.abs(out).max() <= 1e-14


def test_rhs_hand_commutator():
    a1 = np.array([[0, 1], [0, 0]], dtype=complex)
    a2 = np.array([[0, 0], [1, 0]], dtype=complex)
    out = schlesinger_rhs([a1, a2], [0.0, 1.0], [0.0, 1.0])
    # dA_1 = [A_2, A_1] / (u_2 - u_1) * (v_2 - v_1) = diag(-1, 1)
    assert np.allclose(out[0], np.diag([-1.0, 1.0]))
    assert np.allclose(out[1], np.diag([1.0, -1.0]))


def test_rhs_zero_residues():
    out = schlesinger_rhs(np.zeros((2, 2, 2)), [0.0, 1.0], [1.0, 0.0])
    assert np.all(out == 0)


def test_rhs_collision_guard():
    with pytest.raises(CollisionError):
        schlesinger_rhs(np.zeros((2, 2, 2)), [0.0, 1e-6], [1.0, 0.0])


def test_pole_path_positions_velocities():
    pp = PolePath.single_pole_segment([0j, 2.0 + 0j], 0, 0.5 + 0.5j)
    assert np.allclose(pp.positions(0.0), [0j, 2.0 + 0j])
    assert np.allclose(pp.positions(1.0), [0.5 + 0.5j, 2.0 + 0j])
    v = pp.velocities(0.5)
    assert abs(v[0] - (0.5 + 0.5j)) < 1e-14  # unit-time traversal of the segment
    assert v[1] == 0


def test_pole_path_collision_rejected():
    with pytest.raises(CollisionError):
        PolePath.single_pole_segment([0j, 1.0 + 0j], 0, 1.0 + 0j)


def test_flow_commuting_residues_constant():
    system = nilpotent_family([1.0, 2.0, 3.0], [0.0, 1.0, -1.0])
    pp = PolePath.single_pole_segment(system.poles, 0, 0.5 + 0j)
    flowed = flow(system, pp, REL_TOL)
    assert np.allclose(flowed.poles, [0.5, 1.0, -1.0])
    assert np.abs(flowed.residues - system.residues).max() < 10 * REL_TOL


def test_flow_zero_length_returns_input():
    system = nilpotent_family([1.0, 2.0, 3.0], [0.0, 1.0, -1.0])
    flowed = flow(system, PolePath.stationary(system.poles), REL_TOL)
    assert flowed is system


def test_flow_conserves_residue_invariants():
    rng = np.random.default_rng(10)
    system = random_traceless_system(rng)
    pp = PolePath.single_pole_segment(system.poles, 0, system.poles[0] + 0.4 - 0.2j)
    flowed = flow(system, pp, REL_TOL)
    tr0 = np.trace(system.residues, axis1=1, axis2=2)
    tr1 = np.trace(flowed.residues, axis1=1, axis2=2)
    assert np.abs(tr1 - tr0).max() < 10 * REL_TOL
    # tr(A^2) = tr(A)^2 - 2 det(A) for 2x2: determinants conserved too
    assert np.abs(np.linalg.det(flowed.residues) - np.linalg.det(system.residues)).max() < 10 * REL_TOL


def test_flow_reversible():
    rng = np.random.default_rng(21)
    system = random_traceless_system(rng)
    target = system.poles[0] + 0.45
    out = flow(system, PolePath.single_pole_segment(system.poles, 0, target), REL_TOL)
    back = flow(out, PolePath.single_pole_segment(out.poles, 0, system.poles[0]), REL_TOL)
    assert np.abs(back.residues - system.residues).max() < 100 * REL_TOL


def test_flow_requires_matching_start():
    system = nilpotent_family([1.0, 2.0, 3.0], [0.0, 1.0, -1.0])
    pp = PolePath.single_pole_segment([0.1 + 0j, 1.0 + 0j, -1.0 + 0j], 0, 0.4)
    with pytest.raises(ValueError):
        flow(system, pp)


def test_isomonodromy_drift_commuting():
    system = nilpotent_family([1.0, 2.0, 3.0], [0.0, 1.0, -1.0])
    pp = PolePath.single_pole_segment(system.poles, 0, 0.5 + 0.2j)
    assert isomonodromy_drift(system, pp, REL_TOL) < 1e-6


def test_isomonodromy_drift_zero_length():
    system = nilpotent_family([1.0, 2.0, 3.0], [0.0, 1.0, -1.0])
    assert isomonodromy_drift(system, PolePath.stationary(system.poles), REL_TOL) == 0.0


def test_isomonodromy_drift_generic_traceless():
    rng = np.random.default_rng(33)
    system = random_traceless_system(rng)
    pp = PolePath.single_pole_segment(system.poles, 0, system.poles[0] + 0.5)
    assert isomonodromy_drift(system, pp, REL_TOL) < 1e-6


def test_flow_multi_piece_pole_path():
    system = nilpotent_family([1.0, 2.0, 3.0], [0.0, 1.0, -1.0])
    leg = Path([Segment(0j, 0.2 + 0.2j), Segment(0.2 + 0.2j, 0.5 + 0j)])
    hold1 = Path([Segment(1.0 + 0j, 1.0 + 0j)])
    hold2 = Path([Segment(-1.0 + 0j, -1.0 + 0j)])
    pp = PolePath((leg, hold1, hold2))
    flowed = flow(system, pp, REL_TOL)
    assert np.allclose(flowed.poles, [0.5, 1.0, -1.0])
    assert np.abs(flowed.residues - system.residues).max() < 10 * REL_TOL
