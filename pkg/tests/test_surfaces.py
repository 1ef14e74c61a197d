import numpy as np
import pytest
from hypothesis import given, strategies as st

from cauchydirac.clifford import METRIC, gamma_standard
from cauchydirac.fields import Grid3
from cauchydirac.surfaces import (
    InvalidSurfaceError,
    bump,
    flat,
    flat_foliation,
    foliation_residuals,
    graph,
    lorentz_image,
    make_surface,
    relaxing_bump_foliation,
    surface_form_matrix,
    tilted,
    unit_normal,
    validate_surface,
)

G = gamma_standard().gamma
slope_comp = st.floats(-0.55, 0.55)
point = st.tuples(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))


def test_flat_normal():
    assert np.allclose(unit_normal(flat(), [0.2, -1.0, 3.0]), [1, 0, 0, 0])


def test_tilted_normal():
    n = unit_normal(tilted([0.5, 0, 0]), [0.1, 0.2, 0.3])
    assert np.allclose(n, np.array([1, 0.5, 0, 0]) / np.sqrt(0.75), atol=1e-15)


@given(slope_comp, slope_comp, slope_comp, point)
def test_normal_is_unit_timelike(a, b, c, x):
    surf = tilted([a, b, c])
    n = unit_normal(surf, x)
    assert n @ METRIC @ n == pytest.approx(1.0, abs=1e-12)
    assert n[0] > 0


def test_form_matrix_flat_is_gamma0():
    assert np.allclose(surface_form_matrix(flat(), [1.0, 2.0, 3.0]), G[0])


def test_form_matrix_linear_graph():
    # slash((1, grad t)) lowers the spatial index, so the gradient enters with a minus sign
    got = surface_form_matrix(tilted([0.0, 0.3, 0.0]), [0.4, 0.0, -1.0])
    assert np.allclose(got, G[0] - 0.3 * G[2], atol=1e-15)


@given(slope_comp, slope_comp, slope_comp, point)
def test_form_matrix_positive_after_gamma0(a, b, c, x):
    m = G[0] @ surface_form_matrix(tilted([a, b, c]), x)
    assert np.allclose(m, m.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(m).min() > 0


def test_bump_form_matrix_positive():
    surf = bump(0.4, 1.0)
    x = Grid3(2.0, 8).points().reshape(-1, 3)
    m = G[0] @ surface_form_matrix(surf, x)
    assert np.linalg.eigvalsh(m).min() > 0


def test_arctan_graph_fails_validation():
    surf = graph(
        lambda x: np.arctan(x[..., 0]),
        lambda x: np.stack([1 / (1 + x[..., 0] ** 2), 0 * x[..., 0], 0 * x[..., 0]], axis=-1),
        bound=1.0,
        name="arctan",
    )
    with pytest.raises(InvalidSurfaceError):
        validate_surface(surf, Grid3(2.0, 8))


def test_steep_plane_fails_validation():
    with pytest.raises(ValueError):
        tilted([1.2, 0.0, 0.0])


def test_flat_validation_report():
    rep = validate_surface(flat(), Grid3(2.0, 8))
    assert rep.max_gradient == 0.0
    assert rep.inverse_norm_sup == pytest.approx(1.0, abs=1e-14)
    assert rep.passed


def test_tilted_validation_matches_svd():
    surf = tilted([0.5, 0, 0])
    rep = validate_surface(surf, Grid3(2.0, 8))
    n = unit_normal(surf, np.zeros(3))
    m = G[0] @ np.einsum("m,mab->ab", METRIC @ n, G)
    expected = 1.0 / np.linalg.svd(m, compute_uv=False).min()
    assert rep.inverse_norm_sup == pytest.approx(expected, rel=1e-12)
    assert np.isfinite(rep.inverse_norm_sup)


def test_make_surface_round_trip():
    surf = make_surface("tilted", slope=[0.1, 0.2, 0.0], t0=0.5)
    again = make_surface(**{"name": surf.describe()["name"]}, **surf.describe()["params"])
    x = np.array([[0.3, 1.0, -2.0]])
    assert np.allclose(again.height(x), surf.height(x))
    with pytest.raises(ValueError):
        make_surface("sphere")


def test_shifted_surface():
    surf = tilted([0.2, 0, 0]).shifted(1.5)
    assert surf.height(np.array([1.0, 0, 0])) == pytest.approx(1.7)


def test_flat_foliation_of_flat_plane():
    fol = flat_foliation(flat())
    x = np.array([[0.7, 1.0, 2.0, 3.0]])
    assert np.allclose(fol.tau(x), 0.7)
    assert np.allclose(fol.speed(0.7, x[:, 1:]), 1.0)
    assert np.allclose(fol.normal(0.7, x[:, 1:]), [1, 0, 0, 0])
    assert fol.is_flat


def test_flat_foliation_of_tilted_plane_tau():
    fol = flat_foliation(tilted([0.5, 0, 0]))
    pts = np.array([[1.0, 0, 0, 0], [1.0, 2.0, 0, 0], [-0.5, -1.0, 3.0, 1.0]])
    assert np.allclose(fol.tau(pts), pts[:, 0] - 0.5 * pts[:, 1], atol=1e-15)
    assert not fol.is_flat


@pytest.mark.parametrize(
    "fol",
    [flat_foliation(tilted([0.3, -0.2, 0.1])), flat_foliation(bump(0.3, 1.0)),
     relaxing_bump_foliation(0.3, 1.0, 0.5)],
    ids=["tilted", "bump", "relaxing"],
)
def test_foliation_time_function(fol, rng):
    pts = np.concatenate([rng.uniform(-1, 1, (100, 1)), rng.uniform(-2, 2, (100, 3))], axis=1)
    member, resid = foliation_residuals(fol, pts)
    assert member.max() <= 1e-10
    assert resid.max() <= 1e-6


def test_relaxing_bump_rejects_nonmonotone():
    with pytest.raises(ValueError):
        relaxing_bump_foliation(1.5, 1.0, 0.5)


def test_boosted_flat_plane_is_tilted():
    eta = 0.3
    lam = np.eye(4)
    lam[0, 0] = lam[3, 3] = np.cosh(eta)
    lam[0, 3] = lam[3, 0] = np.sinh(eta)
    img = lorentz_image(flat(), lam)
    slope, _ = img.plane
    assert np.allclose(np.abs(slope), [0, 0, np.tanh(eta)], atol=1e-14)
    assert img.bound == pytest.approx(np.tanh(eta))


def test_lorentz_image_of_bump_contains_images(rng):
    eta = 0.2
    lam = np.eye(4)
    lam[0, 0] = lam[1, 1] = np.cosh(eta)
    lam[0, 1] = lam[1, 0] = np.sinh(eta)
    surf = bump(0.3, 1.0)
    img = lorentz_image(surf, lam)
    x = surf.lift(rng.uniform(-1.5, 1.5, (20, 3)))
    y = x @ lam.T
    assert np.allclose(img.height(y[:, 1:]), y[:, 0], atol=1e-10)


@pytest.mark.parametrize("surf", [flat(0.2), tilted([0.3, -0.1, 0.2], 0.5), bump(0.3, 1.0, 0.1)],
                         ids=["flat", "tilted", "bump"])
@given(y=st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)))
def test_translated_surface_contains_shifted_points(surf, y):
    y = np.array(y)
    x = surf.lift(np.array([[0.3, -0.2, 0.5], [1.0, 1.0, -1.0]]))
    moved = surf.translated(y)
    z = x - y
    assert np.allclose(moved.height(z[:, 1:]), z[:, 0], atol=1e-14)
    assert np.allclose(moved.gradient(z[:, 1:]), surf.gradient(x[:, 1:]), atol=1e-14)
    again = make_surface(moved.describe()["name"], **moved.describe()["params"])
    assert np.allclose(again.height(z[:, 1:]), z[:, 0], atol=1e-14)
