"""Grids, discretised fields, scalar products, norms and canonical test data.

Position grids and momentum grids share one layout: ``n`` nodes per axis at
``(i - n/2) * h`` with ``h = 2 * extent / n``, so ``0`` is always a node.  The
momentum grid paired with a position grid is its discrete Fourier dual
(``dp = pi / X``), which makes the flat transforms exactly inverse to each
other.
"""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .clifford import apply_slash, gamma_standard
from .massshell import energy


@dataclass(frozen=True)
class Grid3:
    """Uniform cubic lattice of ``n**3`` nodes with half-width ``extent``."""

    extent: float
    n: int

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise ValueError(f"points per axis must be even and >= 2, got {self.n}")
        if not self.extent > 0:
            raise ValueError("grid extent must be positive")

    @property
    def spacing(self):
        return 2.0 * self.extent / self.n

    @property
    def weight(self):
        return self.spacing**3

    @property
    def shape(self):
        return (self.n, self.n, self.n)

    @property
    def axis(self):
        return (np.arange(self.n) - self.n // 2) * self.spacing

    def points(self):
        """Node coordinates, shape (n, n, n, 3)."""
        a = self.axis
        return np.stack(np.meshgrid(a, a, a, indexing="ij"), axis=-1)

    def dual(self):
        """The Fourier-dual grid with spacing ``pi / extent``."""
        return Grid3(np.pi * self.n / (2.0 * self.extent), self.n)

    def contains(self, lo, hi):
        """True if the box ``[lo, hi]`` lies inside the node range."""
        a = self.axis
        return bool(np.all(np.asarray(lo) >= a[0]) and np.all(np.asarray(hi) <= a[-1]))

    def describe(self):
        return {"extent": self.extent, "n": self.n}


def grid_mismatch(a, b):
    if a.n != b.n or not np.isclose(a.extent, b.extent, rtol=1e-14, atol=0):
        raise ValueError(f"grid mismatch: {a} vs {b}")


@dataclass(frozen=True)
class Momentum3Field:
    """C^4-valued samples on a 3-momentum grid; ``values`` shape (n, n, n, 4)."""

    grid: Grid3
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.grid.shape + (4,):
            raise ValueError(f"values shape {self.values.shape} does not fit grid")


def shell_four_momenta(grid, m):
    """Four-momenta on both sheets, shape (2, n, n, n, 4): index 0 is ``+E``."""
    pv = grid.points()
    e = energy(pv, m)
    plus = np.concatenate([e[..., None], pv], axis=-1)
    minus = np.concatenate([-e[..., None], pv], axis=-1)
    return np.stack([plus, minus])


def project_bundle(grid, m, values):
    """Apply ``(pslash + m) gamma^0 / (2 p0)`` nodewise on both sheets."""
    p4 = shell_four_momenta(grid, m)
    g0v = np.einsum("ab,...b->...a", gamma_standard().gamma[0], values)
    return (apply_slash(p4, g0v) + m * g0v) / (2.0 * p4[..., :1])


def bundle_residual(grid, m, values):
    """Per-node ``|(pslash - m) psi| / max-node-norm`` on both sheets."""
    p4 = shell_four_momenta(grid, m)
    r = np.linalg.norm(apply_slash(p4, values) - m * values, axis=-1)
    scale = np.linalg.norm(values, axis=-1).max()
    return r / scale if scale > 0 else r


@dataclass(frozen=True)
class MassShellField:
    """Dirac-bundle section sampled on both sheets of a momentum grid.

    ``values`` has shape (2, n, n, n, 4); index 0 is the upper sheet
    (``p0 = +E``) and index 1 the lower sheet.
    """

    grid: Grid3
    mass: float
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (2,) + self.grid.shape + (4,):
            raise ValueError(f"values shape {self.values.shape} does not fit grid")
        if self.mass <= 0:
            raise ValueError("mass must be positive")

    @property
    def plus(self):
        return self.values[0]

    @property
    def minus(self):
        return self.values[1]

    @classmethod
    def projected(cls, grid, mass, values):
        """Project arbitrary samples onto the bundle."""
        return cls(grid, mass, project_bundle(grid, mass, np.asarray(values, dtype=complex)))

    @classmethod
    def zeros(cls, grid, mass):
        return cls(grid, mass, np.zeros((2,) + grid.shape + (4,), dtype=complex))

    def bundle_residual(self):
        return float(bundle_residual(self.grid, self.mass, self.values).max())

    def reproject(self):
        return MassShellField.projected(self.grid, self.mass, self.values)

    def with_values(self, values):
        return MassShellField(self.grid, self.mass, values)

    def __add__(self, other):
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar):
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class SurfaceField:
    """C^4-valued samples at the lifted points ``(t(xvec), xvec)`` of a grid.

    ``support`` is the declared support box ``(lo, hi)`` in chart coordinates
    or None when unknown.
    """

    surface: object
    grid: Grid3
    values: np.ndarray
    support: tuple = None

    def __post_init__(self):
        if self.values.shape != self.grid.shape + (4,):
            raise ValueError(f"values shape {self.values.shape} does not fit grid")

    def chart_points(self):
        return self.grid.points()

    def lifted_points(self):
        return self.surface.lift(self.grid.points())

    def support_mask(self):
        return np.any(self.values != 0, axis=-1)

    def with_values(self, values, support=None):
        return SurfaceField(self.surface, self.grid, values, support or self.support)


def _pairwise_total(x):
    # numpy reduces contiguous 1-D arrays pairwise, giving a deterministic order
    return np.sum(np.ascontiguousarray(x).ravel())


def inner_m(phi, psi):
    """Scalar product ``sum m^2 phi^* psi / p0^2`` over both sheets times ``dp^3``."""
    grid_mismatch(phi.grid, psi.grid)
    if phi.mass != psi.mass:
        raise ValueError("mass mismatch")
    m = psi.mass
    e2 = energy(psi.grid.points(), m) ** 2
    dens = np.sum(np.conj(phi.values) * psi.values, axis=-1) * (m * m / e2)
    return complex(_pairwise_total(dens) * psi.grid.weight)


def inner_3(phi, psi):
    """Standard ``L^2`` scalar product on 3-momentum space."""
    grid_mismatch(phi.grid, psi.grid)
    dens = np.sum(np.conj(phi.values) * psi.values, axis=-1)
    return complex(_pairwise_total(dens) * psi.grid.weight)


def inner_sigma(phi, psi):
    """Surface scalar product ``sum phibar G psi d^3x`` with the surface form ``G``.

    ``phibar G = phi^* gamma^0 slash((1, grad t))``.
    """
    grid_mismatch(phi.grid, psi.grid)
    if phi.surface is not psi.surface and phi.surface.describe() != psi.surface.describe():
        raise ValueError("surface mismatch")
    x = psi.grid.points()
    grad = psi.surface.gradient(x)
    w = np.concatenate([np.ones(x.shape[:-1])[..., None], grad], axis=-1)
    g0 = gamma_standard().gamma[0]
    g_psi = np.einsum("ab,...b->...a", g0, apply_slash(w, psi.values))
    dens = np.sum(np.conj(phi.values) * g_psi, axis=-1)
    return complex(_pairwise_total(dens) * psi.grid.weight)


def norm(field):
    """Norm of any of the three field kinds under its own scalar product."""
    if isinstance(field, MassShellField):
        val = inner_m(field, field)
    elif isinstance(field, Momentum3Field):
        val = inner_3(field, field)
    else:
        val = inner_sigma(field, field)
    return float(np.sqrt(max(val.real, 0.0)))


def multi_indices(order, dim=4):
    """All multi-indices ``beta`` in ``N_0^dim`` with ``|beta| <= order``."""
    return [b for b in itertools.product(range(order + 1), repeat=dim) if sum(b) <= order]


def lowered_momenta(grid, m):
    """Covariant ``p_mu`` on both sheets, shape (2, n, n, n, 4)."""
    return shell_four_momenta(grid, m) * np.array([1.0, -1.0, -1.0, -1.0])


def sobolev_norm_m(psi, order):
    """``sqrt(sum_{|beta| <= order} ||p^beta psi||^2)`` with the mass-shell product."""
    if order < 0:
        raise ValueError("order must be non-negative")
    p = lowered_momenta(psi.grid, psi.mass)
    m = psi.mass
    e2 = energy(psi.grid.points(), m) ** 2
    base = np.sum(np.abs(psi.values) ** 2, axis=-1) * (m * m / e2)
    weight = np.zeros(base.shape)
    for beta in multi_indices(order):
        mono = np.ones(base.shape)
        for mu, k in enumerate(beta):
            if k:
                mono = mono * p[..., mu] ** (2 * k)
        weight += mono
    return float(np.sqrt(_pairwise_total(weight * base) * psi.grid.weight))


def derivative_m(psi, j):
    """Momentum-side derivative: multiply by ``-i p_j`` (lower index)."""
    if j not in range(4):
        raise ValueError("derivative index must be 0..3")
    p = lowered_momenta(psi.grid, psi.mass)[..., j]
    return psi.with_values(-1j * p[..., None] * psi.values)


def peak_bump(r):
    """``exp(1 - 1/(1 - r^2))`` on ``|r| < 1`` and 0 outside; peak value 1."""
    r = np.asarray(r, dtype=float)
    out = np.zeros(r.shape)
    inside = np.abs(r) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


def peak_bump_derivative(r):
    """Derivative of :func:`peak_bump`."""
    r = np.asarray(r, dtype=float)
    out = np.zeros(r.shape)
    inside = np.abs(r) < 1.0
    ri = r[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ri**2)) * (-2.0 * ri / (1.0 - ri**2) ** 2)
    return out


def normalized_spinor(u):
    u = np.asarray(u, dtype=complex)
    return u / np.linalg.norm(u)


DEFAULT_SPINOR = normalized_spinor([1.0, 0.3j, 0.2, -0.5])


def bump_profile(x, center, radius):
    """``exp(-1/(1 - |x - c|^2 / R^2))`` inside the ball, else 0 (peak ``e^-1``)."""
    d2 = np.sum((np.asarray(x) - np.asarray(center)) ** 2, axis=-1) / radius**2
    out = np.zeros(d2.shape)
    inside = d2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - d2[inside]))
    return out


def bump_surface_field(surface, grid, center=(0.0, 0.0, 0.0), radius=1.0, spinor=None):
    """Smooth compactly supported datum ``bump_profile(x) * u`` on a surface.

    Raises
    ------
    ValueError
        If the support ball is not inside the grid.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    c = np.asarray(center, dtype=float)
    lo, hi = c - radius, c + radius
    if not grid.contains(lo, hi):
        raise ValueError(f"support box {lo}..{hi} exceeds the grid")
    u = DEFAULT_SPINOR if spinor is None else normalized_spinor(spinor)
    prof = bump_profile(grid.points(), c, radius)
    return SurfaceField(surface, grid, prof[..., None] * u, (lo, hi))


def gaussian_shell_field(grid, m, center=(0.0, 0.0, 0.0), width=1.0, offset=(0.0, 0.0, 0.0),
                         spinor=None, sheets=(1.0, 1.0)):
    """Smooth bundle section from a momentum-space Gaussian.

    ``exp(-|p - c|^2 / (2 w^2)) * e^{-i p . offset} * u`` on each sheet,
    weighted by ``sheets``, then projected onto the bundle.
    """
    p = grid.points()
    prof = np.exp(-np.sum((p - np.asarray(center)) ** 2, axis=-1) / (2.0 * width**2))
    prof = prof * np.exp(-1j * p @ np.asarray(offset, dtype=float))
    u = DEFAULT_SPINOR if spinor is None else normalized_spinor(spinor)
    vals = np.stack([sheets[0] * prof[..., None] * u, sheets[1] * prof[..., None] * u])
    return MassShellField.projected(grid, m, vals)


def spectral_tail_fraction(field, fraction=0.5):
    """Share of the squared norm carried by nodes with ``|p| > fraction * P``.

    Mass-shell fields are weighted with their own density ``m^2 / p0^2``.
    Used to warn when a momentum grid truncates a field.
    """
    grid = field.grid
    pn = np.linalg.norm(grid.points(), axis=-1)
    dens = np.sum(np.abs(field.values) ** 2, axis=-1)
    if isinstance(field, MassShellField):
        dens = dens.sum(axis=0) * field.mass**2 / energy(grid.points(), field.mass) ** 2
    total = dens.sum()
    return float(dens[pn > fraction * grid.extent].sum() / total) if total > 0 else 0.0


def _fd_first(arr, axis, h):
    # fourth-order central difference with zero padding outside the grid
    pad = [(0, 0)] * arr.ndim
    pad[axis] = (2, 2)
    a = np.pad(arr, pad)
    n = arr.shape[axis]

    def sl(k):
        s = [slice(None)] * arr.ndim
        s[axis] = slice(2 + k, 2 + k + n)
        return a[tuple(s)]

    return (-sl(2) + 8 * sl(1) - 8 * sl(-1) + sl(-2)) / (12.0 * h)


def sup_derivative_norm(chi, order):
    """``max_x sum_{|beta| <= order} |D^beta chi(x)|`` by central differences.

    Derivatives are taken in the chart coordinates with a fourth-order
    stencil; ``order`` is limited to 4.
    """
    if not 0 <= order <= 4:
        raise ValueError("order must be between 0 and 4")
    h = chi.grid.spacing
    cache = {(0, 0, 0): chi.values}
    total = np.zeros(chi.grid.shape)
    for beta in sorted(multi_indices(order, dim=3), key=sum):
        if beta not in cache:
            k = next(i for i in range(3) if beta[i] > 0)
            lower = list(beta)
            lower[k] -= 1
            cache[beta] = _fd_first(cache[tuple(lower)], k, h)
        total += np.linalg.norm(cache[beta], axis=-1)
    return float(total.max())


@dataclass(frozen=True)
class PWSampleSpec:
    """Quasi-random complexified shell samples for the Paley-Wiener estimator.

    Points come from a scrambled Halton sequence, so a larger ``count`` with
    the same seed extends the smaller set.  Real parts of ``pvec`` have
    log-uniform magnitude in ``[re_min, re_max]``; imaginary parts have
    magnitude uniform in ``[0, im_max]``, which keeps the near-real region
    (where the weighted sup of a compactly supported datum sits) well covered.
    Both directions are uniform on the sphere.
    """

    count: int = 1000
    re_max: float = 20.0
    im_max: float = 2.0
    re_min: float = 0.05
    seed: int = 0
    branches: tuple = (1, -1)

    def draw(self, m=1.0):
        u = qmc.Halton(7, scramble=True, seed=self.seed).random(self.count)
        direction = _sphere(u[:, 0], u[:, 1])
        im_direction = _sphere(u[:, 2], u[:, 3])
        mag = np.exp(np.log(self.re_min) + u[:, 4] * np.log(self.re_max / self.re_min))
        pv = direction * mag[:, None] + 1j * im_direction * (self.im_max * u[:, 5])[:, None]
        branches = np.asarray(self.branches)
        br = branches[np.minimum((u[:, 6] * len(branches)).astype(int), len(branches) - 1)]
        p0 = br * np.sqrt(np.sum(pv * pv, axis=-1) + m * m)
        return np.concatenate([p0[:, None], pv], axis=-1)


def _sphere(a, b):
    z = 2.0 * a - 1.0
    phi = 2.0 * np.pi * b
    s = np.sqrt(1.0 - z * z)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)


def pw_norm_estimate(chi, alpha, order, samples=None, m=1.0, points=None):
    """Sampled Paley-Wiener norm ``sup |p|^(n-1) e^{-alpha |Im pvec|} |Psi(p)|``.

    Parameters
    ----------
    chi : SurfaceField
        Compactly supported datum.
    alpha : float
        Must exceed ``sqrt2 * sup |x|`` over the lifted support.
    order : int
        The exponent ``n``.
    samples : PWSampleSpec, optional
        Sampling recipe; ignored when ``points`` is given.
    points : ndarray, shape (k, 4), optional
        Explicit complex shell points.
    """
    from .transforms import f_msigma_complex

    mask = chi.support_mask()
    if not mask.any():
        return 0.0
    lifted = chi.lifted_points()[mask]
    radius = float(np.linalg.norm(lifted, axis=-1).max())
    if alpha <= np.sqrt(2.0) * radius:
        raise ValueError(f"alpha = {alpha} must exceed sqrt2 * sup|x| = {np.sqrt(2) * radius:.4g}")
    if points is None:
        points = (samples or PWSampleSpec()).draw(m)
    psi = f_msigma_complex(chi, points, m)
    size = np.linalg.norm(points, axis=-1)
    damp = np.exp(-alpha * np.linalg.norm(points[:, 1:].imag, axis=-1))
    vals = size ** (order - 1) * damp * np.linalg.norm(psi, axis=-1)
    return float(vals.max())
