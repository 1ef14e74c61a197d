import numpy as np
import pytest
from hypothesis import given, strategies as st

from cauchydirac.clifford import (
    METRIC,
    apply_slash,
    boost_sl2c,
    gamma_standard,
    minkowski_dot,
    random_sl2c,
    rotation_sl2c,
    slash,
    slash_covariant,
    spin_from_sl2c,
    weyl_transfer,
)

I4 = np.eye(4)
finite = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)


@st.composite
def sl2c(draw):
    z = np.array([draw(finite) + 1j * draw(finite) for _ in range(4)]).reshape(2, 2)
    det = np.linalg.det(z)
    if abs(det) < 1e-2:
        z = z + np.eye(2) * (1.5 + np.abs(z).max())
        det = np.linalg.det(z)
    return z / np.sqrt(det)


def test_gamma0_is_diag():
    g = gamma_standard().gamma
    assert np.array_equal(g[0], np.diag([1, 1, -1, -1]).astype(complex))


def test_squares_follow_metric():
    g = gamma_standard().gamma
    assert np.allclose(g[0] @ g[0], I4, atol=0)
    for k in (1, 2, 3):
        assert np.allclose(g[k] @ g[k], -I4, atol=0)


def test_anticommutators_exact():
    assert gamma_standard().anticommutator_defect() == 0.0


def test_gamma0_hermitian_spatial_antihermitian():
    g = gamma_standard().gamma
    assert np.allclose(g[0].conj().T, g[0])
    for k in (1, 2, 3):
        assert np.allclose(g[k].conj().T, -g[k])


def test_slash_of_time_unit_is_gamma0():
    assert np.allclose(slash([1.0, 0, 0, 0]), gamma_standard().gamma[0])


def test_slash_square_of_rest_vector():
    m = 1.7
    s = slash([m, 0, 0, 0])
    assert np.allclose(s @ s, m * m * I4, atol=1e-14)


def test_slash_square_random(rng):
    for _ in range(20):
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        s = slash(v)
        assert np.abs(s @ s - minkowski_dot(v, v) * I4).max() <= 1e-12 * max(1, np.abs(v).max() ** 2)


def test_slash_covariant_matches_lowered():
    v = np.array([0.3, -1.2, 0.5, 2.0])
    assert np.allclose(slash_covariant(METRIC @ v), slash(v))


def test_slash_rejects_wrong_shape():
    with pytest.raises(ValueError):
        slash([1.0, 2.0, 3.0])


def test_apply_slash_matches_matrix(rng):
    v = rng.standard_normal((5, 4))
    u = rng.standard_normal((5, 4)) + 1j * rng.standard_normal((5, 4))
    direct = np.einsum("kab,kb->ka", slash(v), u)
    assert np.allclose(apply_slash(v, u), direct, atol=1e-14)


def test_weyl_transfer_involutive_unitary():
    t = weyl_transfer()
    assert np.allclose(t @ t, I4, atol=1e-15)
    assert np.allclose(t.conj().T @ t, I4, atol=1e-15)


def test_weyl_transfer_gamma0_block_antidiagonal():
    t = weyl_transfer()
    w = t @ gamma_standard().gamma[0] @ t
    assert np.allclose(w[:2, :2], 0) and np.allclose(w[2:, 2:], 0)
    assert np.allclose(w[:2, 2:], np.eye(2)) and np.allclose(w[2:, :2], np.eye(2))


def test_identity_lift():
    pair = spin_from_sl2c(np.eye(2))
    assert np.allclose(pair.spin, I4, atol=1e-15)
    assert np.allclose(pair.lorentz, I4, atol=1e-15)


def test_diagonal_boost_lorentz():
    eta = 0.6
    pair = spin_from_sl2c(np.diag([np.exp(eta / 2), np.exp(-eta / 2)]))
    lam = pair.lorentz
    assert lam[0, 0] == pytest.approx(np.cosh(eta), abs=1e-13)
    assert abs(lam[0, 3]) == pytest.approx(np.sinh(eta), abs=1e-13)
    assert np.allclose(lam[1:3, 1:3], np.eye(2), atol=1e-13)


def test_boost_helper_matches_diagonal_form():
    assert np.allclose(boost_sl2c(0.6, 3), np.diag([np.exp(0.3), np.exp(-0.3)]))


def test_rotation_quarter_turn():
    theta = np.pi / 2
    pair = spin_from_sl2c(np.diag([np.exp(-1j * theta / 2), np.exp(1j * theta / 2)]))
    lam = pair.lorentz
    assert lam[0, 0] == pytest.approx(1.0, abs=1e-13)
    assert np.allclose(lam[3, 3], 1.0, atol=1e-13)
    # quarter turn in the 1-2 plane
    assert np.allclose(np.abs(lam[1:3, 1:3]), [[0, 1], [1, 0]], atol=1e-13)
    assert np.allclose(rotation_sl2c(theta, 3), np.diag([np.exp(-1j * theta / 2), np.exp(1j * theta / 2)]))


def test_rejects_non_unit_determinant():
    with pytest.raises(ValueError):
        spin_from_sl2c(np.diag([2.0, 1.0]))
    with pytest.raises(ValueError):
        spin_from_sl2c(np.eye(3))


def test_random_sl2c_has_unit_determinant(rng):
    for _ in range(10):
        assert abs(np.linalg.det(random_sl2c(rng)) - 1) < 1e-12


@given(sl2c())
def test_spin_intertwines_gammas(m):
    pair = spin_from_sl2c(m, tol=1e-9)
    g = gamma_standard().gamma
    s, s_inv, lam = pair.spin, np.linalg.inv(pair.spin), pair.lorentz
    scale = max(1.0, np.abs(lam).max())
    for mu in range(4):
        lhs = s_inv @ g[mu] @ s
        rhs = np.einsum("n,nab->ab", lam[mu], g)
        assert np.abs(lhs - rhs).max() <= 1e-10 * scale


@given(sl2c())
def test_spin_preserves_dirac_adjoint(m):
    s = spin_from_sl2c(m, tol=1e-9).spin
    g0 = gamma_standard().gamma[0]
    assert np.abs(s.conj().T @ g0 @ s - g0).max() <= 1e-10 * max(1.0, np.abs(s).max() ** 2)


@given(sl2c())
def test_lorentz_image_is_orthochronous_isometry(m):
    lam = spin_from_sl2c(m, tol=1e-9).lorentz
    assert np.isrealobj(lam)
    scale = max(1.0, np.abs(lam).max() ** 2)
    assert np.abs(lam.T @ METRIC @ lam - METRIC).max() <= 1e-10 * scale
    assert lam[0, 0] >= 1 - 1e-12
    assert np.linalg.det(lam) == pytest.approx(1.0, rel=1e-8)


@given(sl2c(), sl2c())
def test_lift_is_homomorphism(a, b):
    pa, pb = spin_from_sl2c(a, tol=1e-9), spin_from_sl2c(b, tol=1e-9)
    pab = spin_from_sl2c(a @ b, tol=1e-8)
    prod = pa @ pb
    scale = max(1.0, np.abs(prod.lorentz).max())
    assert np.abs(pab.spin - prod.spin).max() <= 1e-9 * max(1.0, np.abs(prod.spin).max())
    assert np.abs(pab.lorentz - prod.lorentz).max() <= 1e-9 * scale


def test_inverse_pair(rng):
    pair = spin_from_sl2c(random_sl2c(rng))
    both = pair @ pair.inverse()
    assert np.allclose(both.spin, I4, atol=1e-12)
    assert np.allclose(both.lorentz, I4, atol=1e-12)
