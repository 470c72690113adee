"""Truncated polynomial arithmetic against direct evaluation oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinlab.jets import (
    Jet,
    jet_space,
    jmat_det,
    jmat_identity,
    jmat_inverse,
    jmat_mul,
)


def random_jet(space, rng):
    return Jet(space, rng.standard_normal(space.n))


def test_monomial_count_m3_deg4():
    # sum over d <= 4 of C(3 + d - 1, d) = 1 + 3 + 6 + 10 + 15
    assert jet_space(3, 4).n == 35


def test_variable_and_constant_evaluate():
    space = jet_space(3, 4)
    x = np.array([0.3, -1.2, 0.7])
    assert Jet.constant(space, 2.5)(x) == pytest.approx(2.5)
    assert Jet.variable(space, 1)(x) == pytest.approx(-1.2)


def test_product_matches_pointwise_evaluation_below_truncation():
    # degree 1 times degree 1 stays below the truncation, so the jet
    # product must agree with the pointwise product exactly
    space = jet_space(2, 4)
    rng = np.random.default_rng(7)
    a = Jet.constant(space, 0.5) + Jet.variable(space, 0) * 2.0
    b = Jet.variable(space, 1) + Jet.variable(space, 0) * (-0.25)
    x = rng.standard_normal(2)
    assert (a * b)(x) == pytest.approx(a(x) * b(x), rel=1e-14)


def test_truncation_drops_high_degree():
    space = jet_space(2, 2)
    x0 = Jet.variable(space, 0)
    cube = x0 * x0 * x0
    assert cube.max_abs() == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 4), st.integers(2, 4))
def test_ring_laws(seed, m, degree):
    space = jet_space(m, degree)
    rng = np.random.default_rng(seed)
    a, b, c = (random_jet(space, rng) for _ in range(3))
    lhs = (a + b) * c
    rhs = a * c + b * c
    assert np.allclose(lhs.coeffs, rhs.coeffs, atol=1e-12)
    assert np.allclose((a * b).coeffs, (b * a).coeffs, atol=1e-13)
    assert np.allclose(((a * b) * c).coeffs, (a * (b * c)).coeffs, atol=1e-12)


def test_homogeneous_parts_sum_back():
    space = jet_space(3, 3)
    rng = np.random.default_rng(3)
    a = random_jet(space, rng)
    total = sum((a.homogeneous_part(d) for d in range(4)), Jet.zero(space))
    assert np.allclose(total.coeffs, a.coeffs)


def test_matrix_determinant_against_numpy_on_numbers():
    # constant jets reduce the determinant to the plain numeric one
    space = jet_space(2, 3)
    rng = np.random.default_rng(11)
    A = rng.standard_normal((3, 3))
    J = np.zeros((3, 3, space.n))
    J[:, :, 0] = A
    det = jmat_det(space, J)
    assert det.coeffs[0] == pytest.approx(np.linalg.det(A), rel=1e-12)
    assert abs(det.coeffs[1:]).max() == 0.0


def unipotent(space, n, rng, amp=0.3):
    A = jmat_identity(space, n)
    A[:, :, 1:] += rng.standard_normal((n, n, space.n - 1)) * amp
    return A


def test_matrix_inverse_neumann():
    space = jet_space(3, 4)
    rng = np.random.default_rng(5)
    n = 4
    A = unipotent(space, n, rng)
    prod = jmat_mul(space, A, jmat_inverse(space, A))
    assert np.abs(prod - jmat_identity(space, n)).max() <= 1e-12


def test_det_multiplicative_up_to_truncation():
    space = jet_space(2, 3)
    rng = np.random.default_rng(13)
    A = unipotent(space, 2, rng, amp=0.2)
    B = unipotent(space, 2, rng, amp=0.2)
    lhs = jmat_det(space, jmat_mul(space, A, B))
    rhs = jmat_det(space, A) * jmat_det(space, B)
    assert np.allclose(lhs.coeffs, rhs.coeffs, atol=1e-12)
