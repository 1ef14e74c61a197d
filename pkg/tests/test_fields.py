import numpy as np
import pytest
from hypothesis import given, strategies as st

from cauchydirac import fieldio
from cauchydirac.fields import (
    DEFAULT_SPINOR,
    Grid3,
    MassShellField,
    Momentum3Field,
    PWSampleSpec,
    SurfaceField,
    bump_profile,
    bump_surface_field,
    derivative_m,
    gaussian_shell_field,
    inner_m,
    inner_sigma,
    norm,
    peak_bump,
    peak_bump_derivative,
    pw_norm_estimate,
    sobolev_norm_m,
    spectral_tail_fraction,
    sup_derivative_norm,
)
from cauchydirac.surfaces import flat, tilted

GRID = Grid3(2.0, 8)
MASS = 1.0


def random_shell(rng, grid=GRID, m=MASS):
    vals = rng.standard_normal((2,) + grid.shape + (4,)) + 1j * rng.standard_normal((2,) + grid.shape + (4,))
    return MassShellField.projected(grid, m, vals)


def rest_node_field(grid=GRID, m=MASS, spinor=(1.0, 0.0, 0.0, 0.0)):
    """Field supported on the upper-sheet node p = 0."""
    vals = np.zeros((2,) + grid.shape + (4,), dtype=complex)
    vals[(0,) + (grid.n // 2,) * 3] = spinor
    return MassShellField(grid, m, vals)


def test_grid_layout():
    g = Grid3(4.0, 16)
    assert g.spacing == 0.5
    assert g.axis[g.n // 2] == 0.0
    assert g.axis[0] == -4.0
    assert g.dual().spacing == pytest.approx(np.pi / 4.0)
    with pytest.raises(ValueError):
        Grid3(1.0, 7)


def test_inner_m_zero_field():
    assert inner_m(MassShellField.zeros(GRID, MASS), random_shell(np.random.default_rng(0))) == 0


def test_inner_m_single_node_gives_weight():
    psi = rest_node_field()
    assert inner_m(psi, psi) == pytest.approx(GRID.weight)


def test_inner_m_hermitian_and_positive(rng):
    a, b = random_shell(rng), random_shell(rng)
    assert inner_m(a, b) == pytest.approx(np.conj(inner_m(b, a)), rel=1e-13)
    assert inner_m(a, a).real > 0
    assert abs(inner_m(a, a).imag) < 1e-14 * inner_m(a, a).real


def test_inner_m_rejects_grid_mismatch(rng):
    with pytest.raises(ValueError):
        inner_m(random_shell(rng), random_shell(rng, Grid3(3.0, 8)))


def test_projected_field_lies_in_bundle(rng):
    psi = random_shell(rng)
    assert psi.bundle_residual() <= 1e-13
    again = psi.reproject()
    assert np.allclose(again.values, psi.values, atol=1e-13)


def test_inner_sigma_flat_is_plain_sum(rng):
    vals = rng.standard_normal(GRID.shape + (4,)) + 1j * rng.standard_normal(GRID.shape + (4,))
    other = rng.standard_normal(GRID.shape + (4,)) + 0j
    a = SurfaceField(flat(), GRID, vals)
    b = SurfaceField(flat(), GRID, other)
    expected = np.sum(np.conj(vals) * other) * GRID.weight
    assert inner_sigma(a, b) == pytest.approx(expected, rel=1e-13)
    assert inner_sigma(a, SurfaceField(flat(), GRID, np.zeros_like(vals))) == 0


def test_inner_sigma_positive_on_tilted(rng):
    vals = rng.standard_normal(GRID.shape + (4,)) + 1j * rng.standard_normal(GRID.shape + (4,))
    a = SurfaceField(tilted([0.4, -0.3, 0.2]), GRID, vals)
    val = inner_sigma(a, a)
    assert val.real > 0 and abs(val.imag) < 1e-12 * val.real


def test_sobolev_order_zero_is_norm(rng):
    psi = random_shell(rng)
    assert sobolev_norm_m(psi, 0) == pytest.approx(norm(psi), rel=1e-13)


def test_sobolev_order_one_rest_node():
    m = 1.5
    psi = rest_node_field(m=m)
    assert sobolev_norm_m(psi, 1) ** 2 == pytest.approx((1 + m * m) * norm(psi) ** 2, rel=1e-13)


def test_sobolev_monotone(rng):
    psi = random_shell(rng)
    values = [sobolev_norm_m(psi, n) for n in range(4)]
    assert all(a <= b for a, b in zip(values, values[1:]))


def test_derivative_scales_by_momentum():
    grid = GRID
    vals = np.zeros((2,) + grid.shape + (4,), dtype=complex)
    idx = (0, grid.n // 2 + 1, grid.n // 2, grid.n // 2)
    vals[idx] = [1.0, 2.0, 0.0, 0.0]
    psi = MassShellField(grid, MASS, vals)
    p1 = grid.axis[idx[1]]
    d1 = derivative_m(psi, 1)
    # lower index: p_1 = -p^1
    assert np.allclose(d1.values[idx], -1j * (-p1) * vals[idx])
    d0 = derivative_m(psi, 0)
    assert np.allclose(d0.values[idx], -1j * np.sqrt(p1**2 + 1) * vals[idx])
    with pytest.raises(ValueError):
        derivative_m(psi, 4)


def test_derivative_bounded_by_sobolev(rng):
    psi = random_shell(rng)
    for j in range(4):
        assert norm(derivative_m(psi, j)) <= sobolev_norm_m(psi, 1) * (1 + 1e-12)


@given(st.floats(-1.5, 1.5))
def test_peak_bump_derivative_matches_difference(r):
    h = 1e-6
    if abs(abs(r) - 1) < 1e-3:
        return
    fd = (peak_bump(r + h) - peak_bump(r - h)) / (2 * h)
    assert peak_bump_derivative(r) == pytest.approx(fd, abs=1e-6)


def test_bump_datum_peak_and_support():
    grid = Grid3(2.0, 16)
    chi = bump_surface_field(flat(), grid, radius=1.0)
    centre = chi.values[(grid.n // 2,) * 3]
    assert np.allclose(centre, np.exp(-1) * DEFAULT_SPINOR)
    r = np.linalg.norm(grid.points(), axis=-1)
    assert np.all(chi.values[r >= 1.0] == 0)
    with pytest.raises(ValueError):
        bump_surface_field(flat(), grid, radius=2.5)


def test_cauchy_schwarz_on_surfaces(rng):
    grid = Grid3(2.0, 8)
    surf = tilted([0.3, 0, 0])
    a = SurfaceField(surf, grid, rng.standard_normal(grid.shape + (4,)) + 0j)
    b = SurfaceField(surf, grid, rng.standard_normal(grid.shape + (4,)) * 1j)
    assert abs(inner_sigma(a, b)) <= norm(a) * norm(b) * (1 + 1e-12)


def test_sup_derivative_zero_field():
    chi = SurfaceField(flat(), GRID, np.zeros(GRID.shape + (4,), dtype=complex))
    assert sup_derivative_norm(chi, 2) == 0.0


def test_sup_derivative_order_zero_is_peak():
    chi = bump_surface_field(flat(), Grid3(2.0, 16), radius=1.0)
    assert sup_derivative_norm(chi, 0) == pytest.approx(np.exp(-1), rel=1e-14)


def test_sup_derivative_order_one_matches_analytic_gradient():
    grid = Grid3(1.5, 96)
    chi = bump_surface_field(flat(), grid, radius=1.0)
    x = grid.points()
    r2 = np.sum(x * x, axis=-1)
    inside = r2 < 1
    prof = bump_profile(x, np.zeros(3), 1.0)
    grad = np.zeros(x.shape)
    grad[inside] = (prof[inside] * -2.0 / (1 - r2[inside]) ** 2)[:, None] * x[inside]
    exact = (prof + np.abs(grad).sum(axis=-1)).max()
    assert sup_derivative_norm(chi, 1) == pytest.approx(exact, rel=1e-4)


def test_gaussian_shell_field_in_bundle():
    psi = gaussian_shell_field(Grid3(3.0, 8), 1.0, width=0.8, offset=(0.2, 0, 0))
    assert psi.bundle_residual() < 1e-13
    assert norm(psi) > 0


def test_spectral_tail_fraction_bounds():
    grid = Grid3(3.0, 8)
    narrow = gaussian_shell_field(grid, 1.0, width=0.3)
    wide = gaussian_shell_field(grid, 1.0, width=3.0)
    assert 0 <= spectral_tail_fraction(narrow) < spectral_tail_fraction(wide) <= 1


def test_pw_zero_field():
    chi = SurfaceField(flat(), GRID, np.zeros(GRID.shape + (4,), dtype=complex))
    assert pw_norm_estimate(chi, 1.0, 3) == 0.0


def test_pw_real_samples_order_one_is_real_sup():
    from cauchydirac.transforms import f_msigma

    grid = Grid3(1.0, 8)
    chi = bump_surface_field(flat(), grid, radius=0.5)
    psi = f_msigma(chi)
    p4 = np.concatenate([np.sqrt(np.sum(grid.dual().points() ** 2, -1) + 1)[..., None],
                         grid.dual().points()], axis=-1).reshape(-1, 4)
    got = pw_norm_estimate(chi, 1.0, 1, points=p4.astype(complex))
    assert got == pytest.approx(np.linalg.norm(psi.plus, axis=-1).max(), rel=1e-12)


def test_pw_rejects_small_alpha():
    chi = bump_surface_field(flat(), Grid3(1.0, 8), radius=0.5)
    with pytest.raises(ValueError):
        pw_norm_estimate(chi, 0.5, 3)


def test_pw_sample_spec_nested_and_on_shell():
    small = PWSampleSpec(count=64).draw()
    large = PWSampleSpec(count=128).draw()
    assert np.allclose(small, large[:64])
    defect = small[:, 0] ** 2 - np.sum(small[:, 1:] ** 2, axis=-1) - 1
    assert np.abs(defect).max() < 1e-10
    assert np.linalg.norm(small[:, 1:].imag, axis=-1).max() <= 2.0


def test_pw_stable_under_doubling():
    chi = bump_surface_field(flat(), Grid3(0.6, 16), radius=0.5)
    a = pw_norm_estimate(chi, 1.0, 3, PWSampleSpec(1000))
    b = pw_norm_estimate(chi, 1.0, 3, PWSampleSpec(2000))
    assert np.isfinite(a) and a > 0
    assert abs(b - a) / a <= 0.2


@pytest.mark.parametrize("dtype", ["complex128", "complex64"])
def test_field_file_round_trip(tmp_path, rng, dtype):
    psi = random_shell(rng)
    path = fieldio.save_field(tmp_path / "psi.cdf", psi, extra={"t": 0.5}, dtype=dtype)
    back = fieldio.load_field(path)
    tol = 0 if dtype == "complex128" else 1e-6
    assert isinstance(back, MassShellField) and back.mass == psi.mass
    assert np.allclose(back.values, psi.values, atol=tol * np.abs(psi.values).max(), rtol=0)
    header, _ = fieldio.read_header(path)
    assert header["extra"] == {"t": 0.5}


def test_surface_field_file_round_trip(tmp_path):
    chi = bump_surface_field(tilted([0.2, 0, 0], 0.5), Grid3(2.0, 8), radius=1.0)
    back = fieldio.load_field(fieldio.save_field(tmp_path / "chi.cdf", chi))
    assert np.array_equal(back.values, chi.values)
    assert back.surface.describe() == chi.surface.describe()
    assert np.allclose(back.support[0], chi.support[0])


def test_momentum_field_csv(tmp_path, rng):
    grid = Grid3(1.0, 4)
    phi = Momentum3Field(grid, rng.standard_normal(grid.shape + (4,)) + 1j)
    path = fieldio.export_csv(tmp_path / "phi.csv", phi)
    rows = np.loadtxt(path, delimiter=",", skiprows=1)
    head = path.read_text().splitlines()[0].split(",")
    assert head[:3] == ["p1", "p2", "p3"] and len(head) == 11
    assert rows.shape == (64, 11)
    assert np.allclose(rows[:, 3] + 1j * rows[:, 4], phi.values[..., 0].ravel())


def test_bad_magic_rejected(tmp_path):
    p = tmp_path / "junk.cdf"
    p.write_bytes(b"NOTAFILE" + b"\0" * 16)
    with pytest.raises(ValueError):
        fieldio.read_header(p)
