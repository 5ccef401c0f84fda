"""Torus foliation tests against hand-computed values.

Standard sample: lattice e_1 = (1,0), e_2 = (i,0), e_3 = (0,1),
e_4 = (0,i) with slope 1 gives translations t = (1, i, 1, i) and first
integrals (1/i, 1/1, 1/i) = (-i, 1, -i).
"""

import numpy as np
import pytest

from isofol import (
    analytic_kernel,
    class_kernel,
    first_integral_jacobian,
    first_integrals,
    jacobian,
    kernel_report,
    rank_scan,
    torus_family,
    torus_parameter_family,
    torus_tau,
    translation_monodromy,
)
from isofol.cli import DomainSpec, seeded_samples
from isofol.errors import DegenerateLatticeError, IndeterminateIntegralError
from isofol.monodromy import KIND_AFFINE
from isofol.util import containment_angle, realify, subspace_distance

STANDARD_LATTICE = np.array([[1, 0], [1j, 0], [0, 1], [0, 1j]], dtype=complex)


@pytest.fixture(scope="module")
def standard():
    return torus_family(STANDARD_LATTICE, 1.0)


@pytest.fixture(scope="module")
def family():
    return torus_parameter_family()


def torus_from_tau(tau):
    lattice = (np.asarray(tau)[0:16:2] + 1j * np.asarray(tau)[1:16:2]).reshape(4, 2)
    return torus_family(lattice, complex(tau[16], tau[17]))


def random_admissible(count, seed):
    fam = torus_parameter_family()
    boxes = np.tile([[-1.2, 1.2]], (18, 1))
    return seeded_samples(DomainSpec(boxes, fam.admissible), count, seed)


def test_standard_sample_valid(standard):
    assert abs(abs(standard.real_determinant()) - 1.0) < 1e-14


def test_degenerate_lattice_rejected():
    lattice = STANDARD_LATTICE.copy()
    lattice[1] = lattice[0]
    with pytest.raises(DegenerateLatticeError):
        torus_family(lattice, 1.0)


def test_random_lattices_valid_after_rejection():
    rng = np.random.default_rng(4)
    accepted = 0
    for _ in range(20):
        lattice = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
        try:
            torus_family(lattice, 0.5 + 0.5j)
            accepted += 1
        except DegenerateLatticeError:
            continue
    assert accepted >= 19  # degeneracy has measure zero


def test_translation_monodromy_standard(standard):
    tup = translation_monodromy(standard)
    assert tup.kind == KIND_AFFINE
    assert np.array_equal(tup.translations, np.array([1, 1j, 1, 1j]))


def test_translation_monodromy_zero_slope():
    torus = torus_family(STANDARD_LATTICE, 0.0)
    assert np.array_equal(translation_monodromy(torus).translations,
                          STANDARD_LATTICE[:, 0])


def test_translation_monodromy_slope_independent_lattice():
    lattice = np.array([[1, 0], [1j, 0], [2, 0], [0.5j, 0]], dtype=complex)
    with pytest.raises(DegenerateLatticeError):
        # e_{i2} = 0 for all i degenerates the real lattice matrix
        torus_family(lattice, 1.0)
    # slope independence instead on the first two generators only
    t1 = translation_monodromy(torus_family(STANDARD_LATTICE, 2.0)).translations
    t2 = translation_monodromy(torus_family(STANDARD_LATTICE, 3.0)).translations
    assert t1[0] == t2[0] and t1[1] == t2[1]  # e_12 = e_22 = 0 there


def test_translation_monodromy_at_infinity():
    torus = torus_family(STANDARD_LATTICE, (1.0, 0.0))
    tup = translation_monodromy(torus)
    assert "alpha-at-infinity" in tup.flags
    assert np.array_equal(tup.translations, STANDARD_LATTICE[:, 1])


def test_first_integrals_standard(standard):
    f = first_integrals(standard)
    assert f[0] == -1j
    assert f[1] == 1.0 + 0j
    assert f[2] == -1j


def test_first_integrals_zero_numerator():
    # t_1 = e_11 + e_12 alpha = 0 at alpha = 0 while t_2, t_3, t_4 stay away
    lattice = np.array([[0, 1], [1j, 0], [1, 2j], [2j, 1j]], dtype=complex)
    torus = torus_family(lattice, 0.0)
    assert np.array_equal(first_integrals(torus), np.zeros(3))


def test_first_integrals_vanishing_denominator():
    lattice = np.array([[1, 0], [0, 1], [1j, 0], [0, 1j]], dtype=complex)
    torus = torus_family(lattice, 0.0)  # t_2 = 0 + 0*0 = 0
    with pytest.raises(IndeterminateIntegralError) as info:
        first_integrals(torus)
    assert info.value.index == 2


def test_first_integrals_scale_invariant():
    rng = np.random.default_rng(9)
    for _ in range(5):
        tau = random_admissible(1, rng.integers(1, 2**32))[0]
        torus = torus_from_tau(tau)
        lam = complex(rng.normal(), rng.normal())
        scaled = torus_family(lam * torus.lattice, torus.alpha_value)
        assert np.abs(first_integrals(scaled) - first_integrals(torus)).max() < 1e-12


def test_analytic_kernel_standard(standard):
    kernel = analytic_kernel(standard)
    assert kernel.shape == (18, 12)
    # the slope direction is not integrable: d(1/alpha)/d(alpha) = -1 there
    jac = first_integral_jacobian(standard)
    assert abs(jac[1, 8] - (-1.0)) < 1e-14
    alpha_dir = np.zeros(18)
    alpha_dir[16] = 1.0
    assert containment_angle(alpha_dir[:, None], kernel) > 0.1
    # the lattice rescaling direction is integrable (degree-0 homogeneity)
    scaling = np.zeros(18)
    scaling[:16] = realify(standard.lattice)
    scaling /= np.linalg.norm(scaling)
    assert containment_angle(scaling[:, None], kernel) < 1e-10


def test_analytic_kernel_dimension_generic():
    for tau in random_admissible(10, 77):
        kernel = analytic_kernel(torus_from_tau(tau))
        assert kernel.shape == (18, 12)


def test_analytic_regularity_svd_gap():
    from isofol.util import realify_complex_matrix

    for tau in random_admissible(5, 31):
        jac = realify_complex_matrix(first_integral_jacobian(torus_from_tau(tau)))
        sigma = np.linalg.svd(jac, compute_uv=False)
        assert sigma[5] > 1e6 * np.finfo(float).eps * sigma[0]


def test_detector_matches_analytic_kernel(family, standard):
    tau = torus_tau(standard)
    rep = kernel_report(family, tau, "class")
    assert rep.kernel_dim == 12
    assert subspace_distance(rep.kernel_basis, analytic_kernel(standard)) < 1e-6


def test_detector_framed_kernel_dim_ten(family, standard):
    rep = kernel_report(family, torus_tau(standard), "framed")
    assert rep.rank == 8
    assert rep.kernel_dim == 10


def test_class_rank_constant_over_scan(family):
    samples = random_admissible(8, 2024)
    result = rank_scan(family, samples, mode="class")
    assert result.generic_rank == 6
    assert result.ranks == [6] * 8
    assert result.drops == ()


def test_jacobian_matches_closed_form_translation_map(family, standard):
    # d t_i / d e_i1 = 1, d t_i / d e_i2 = alpha, d t_i / d alpha = e_i2
    tau = torus_tau(standard)
    j = jacobian(family, tau, h=1e-5)
    from isofol.util import realify_complex_matrix

    alpha = standard.alpha_value
    dt = np.zeros((4, 9), dtype=complex)
    for i in range(4):
        dt[i, 2 * i] = 1.0
        dt[i, 2 * i + 1] = alpha
        dt[i, 8] = standard.lattice[i, 1]
    assert np.abs(j - realify_complex_matrix(dt)).max() < 1e-6
