"""Poincare and gauge actions on the field representations, and numerical
checks of how the transforms intertwine them."""

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage

from .clifford import SpinLorentzPair, apply_slash, gamma_standard
from .dynamics import FourPotential, evolve_full
from .fields import (
    MassShellField,
    SurfaceField,
    norm,
    peak_bump,
    peak_bump_derivative,
    project_bundle,
    shell_four_momenta,
)
from .surfaces import lorentz_image, validate_surface
from .transforms import f_0m, f_msigma, f_msigma_points


class ClippingWarning(RuntimeWarning):
    """Part of a field was transported off the grid."""


def _phase_dot(p4, y):
    return p4[..., 0] * y[0] - np.sum(p4[..., 1:] * y[1:], axis=-1)


def translate_m(psi, y):
    """Multiply by ``exp(-i p . y)``; in space-time this is ``psi(x) -> psi(x + y)``."""
    y = np.asarray(y, dtype=float)
    p4 = shell_four_momenta(psi.grid, psi.mass)
    return psi.with_values(np.exp(-1j * _phase_dot(p4, y))[..., None] * psi.values)


def _interp(values, coords):
    """Trilinear interpolation of (n, n, n, 4) complex samples at fractional indices (3, K)."""
    out = np.empty((coords.shape[1], values.shape[-1]), dtype=complex)
    for a in range(values.shape[-1]):
        re = ndimage.map_coordinates(values[..., a].real, coords, order=1, mode="constant", cval=0.0)
        im = ndimage.map_coordinates(values[..., a].imag, coords, order=1, mode="constant", cval=0.0)
        out[:, a] = re + 1j * im
    return out


def _fractional_index(grid, pts):
    return ((pts - grid.axis[0]) / grid.spacing).reshape(-1, 3).T


def _inside(grid, pts):
    lo, hi = grid.axis[0], grid.axis[-1]
    tol = 1e-9 * grid.spacing
    return np.all((pts >= lo - tol) & (pts <= hi + tol), axis=-1)


def translate_sigma(chi, y):
    """Datum on ``Sigma - y`` with values ``chi(x + y)``.

    Grid-aligned spatial shifts re-index exactly; other shifts interpolate
    trilinearly in the chart.
    """
    y = np.asarray(y, dtype=float)
    surface = chi.surface.translated(y)
    # x on Sigma - y maps to x + y on Sigma; the chart offset is yvec
    steps = y[1:] / chi.grid.spacing
    if np.allclose(steps, np.rint(steps), atol=1e-12):
        k = np.rint(steps).astype(int)
        vals = np.zeros_like(chi.values)
        n = chi.grid.n
        src = [slice(max(0, kk), n + min(0, kk)) for kk in k]
        dst = [slice(max(0, -kk), n + min(0, -kk)) for kk in k]
        vals[tuple(dst)] = chi.values[tuple(src)]
    else:
        pts = chi.grid.points() + y[1:]
        vals = _interp(chi.values, _fractional_index(chi.grid, pts)).reshape(chi.values.shape)
    support = None
    if chi.support is not None:
        support = (np.asarray(chi.support[0]) - y[1:], np.asarray(chi.support[1]) - y[1:])
    return SurfaceField(surface, chi.grid, vals, support)


def lorentz_m(psi, pair, report=None):
    """``(L psi)(p) = S psi(Lambda^{-1} p)`` with trilinear sampling and re-projection.

    The sample at ``Lambda^{-1} p`` is projected onto its Dirac fibre before
    ``S`` is applied and the result is projected onto the fibre at ``p``.
    Nodes whose preimage leaves the grid are set to zero.  If ``report`` is a
    dict it receives ``clipped_fraction``: the share of the squared norm at
    source nodes whose image falls outside the grid.
    """
    lam = pair.lorentz
    if lam[0, 0] < 1 - 1e-12 or np.linalg.det(lam) < 0:
        raise ValueError("only proper orthochronous transformations are supported")
    inv = np.linalg.inv(lam)
    grid, m = psi.grid, psi.mass
    p4 = shell_four_momenta(grid, m)
    q4 = p4 @ inv.T
    out = np.zeros_like(psi.values)
    spin = np.asarray(pair.spin)
    for sheet in range(2):
        q = q4[sheet]
        sampled = _interp(psi.values[sheet], _fractional_index(grid, q[..., 1:]))
        sampled = sampled.reshape(grid.shape + (4,))
        sampled[~_inside(grid, q[..., 1:])] = 0
        sampled = _project_at(q, m, sampled)
        out[sheet] = np.einsum("ab,...b->...a", spin, sampled)
    out = project_bundle(grid, m, out)
    if report is not None:
        image = p4 @ lam.T
        lost = ~_inside(grid, image[..., 1:])
        dens = np.sum(np.abs(psi.values) ** 2, axis=-1)
        total = dens.sum()
        frac = float(dens[lost].sum() / total) if total > 0 else 0.0
        report["clipped_fraction"] = frac
        if frac > 1e-6:
            warnings.warn(f"clipped mass fraction {frac:.2e}", ClippingWarning)
    return MassShellField(grid, m, out)


def _project_at(q4, m, values):
    g0v = np.einsum("ab,...b->...a", gamma_standard().gamma[0], values)
    return (apply_slash(q4, g0v) + m * g0v) / (2.0 * q4[..., :1])


def lorentz_sigma(chi, pair, report=None):
    """Datum on the image surface ``Lambda Sigma`` with values ``S chi(Lambda^{-1} y)``.

    Values are sampled trilinearly in the source chart.  Raises
    :class:`~cauchydirac.surfaces.InvalidSurfaceError` if the image is not
    space-like over the support.
    """
    lam = pair.lorentz
    target = lorentz_image(chi.surface, lam)
    grid = chi.grid
    y = target.lift(grid.points())
    x = y @ np.linalg.inv(lam).T
    xv = x[..., 1:]
    vals = _interp(chi.values, _fractional_index(grid, xv)).reshape(chi.values.shape)
    vals[~_inside(grid, xv)] = 0
    vals = np.einsum("ab,...b->...a", np.asarray(pair.spin), vals)
    mask = np.any(vals != 0, axis=-1)
    if mask.any():
        validate_surface(target, grid.points()[mask])
    if report is not None:
        report["target_bound"] = target.bound
    return SurfaceField(target, grid, vals)


@dataclass(frozen=True)
class GaugeFunction:
    """Real gauge function ``lambda(x)`` with its covariant gradient ``d_mu lambda``."""

    value: Callable
    gradient: Callable
    support: tuple
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.value(np.asarray(x, dtype=float))

    def outside_support_max(self, samples):
        x = np.asarray(samples, dtype=float)
        lo, hi = map(np.asarray, self.support)
        outside = np.any((x < lo) | (x > hi), axis=-1)
        return float(np.abs(self(x[outside])).max()) if outside.any() else 0.0

    def describe(self):
        return {"name": self.name, "params": self.params}


def bump_gauge(amplitude=0.5, radius=1.2, t_center=2.0, t_halfwidth=0.8, center=(0.0, 0.0, 0.0)):
    """``lambda = amplitude * s(|x - c| / R) * s((t - tc) / w)`` with peak-one bumps ``s``."""
    c = np.asarray(center, dtype=float)

    def parts(x):
        d = x[..., 1:] - c
        r = np.linalg.norm(d, axis=-1)
        tau = (x[..., 0] - t_center) / t_halfwidth
        return d, r, tau

    def value(x):
        _, r, tau = parts(x)
        return amplitude * peak_bump(r / radius) * peak_bump(tau)

    def gradient(x):
        d, r, tau = parts(x)
        sr = peak_bump(r / radius)
        st = peak_bump(tau)
        out = np.zeros(x.shape)
        out[..., 0] = amplitude * sr * peak_bump_derivative(tau) / t_halfwidth
        safe = np.where(r > 0, r, 1.0)
        radial = amplitude * st * peak_bump_derivative(r / radius) / (radius * safe)
        out[..., 1:] = radial[..., None] * d
        return out

    lo = np.concatenate([[t_center - t_halfwidth], c - radius])
    hi = np.concatenate([[t_center + t_halfwidth], c + radius])
    params = {"amplitude": float(amplitude), "radius": float(radius), "t_center": float(t_center),
              "t_halfwidth": float(t_halfwidth), "center": c.tolist()}
    return GaugeFunction(value, gradient, (lo, hi), "bump", params)


def gauge_transform(values, points, gauge):
    """Pointwise ``exp(-i lambda(x)) psi(x)``."""
    lam = gauge(points)
    return np.exp(-1j * lam)[..., None] * np.asarray(values)


def gauge_field(chi, gauge, sign=1.0):
    """Apply ``exp(-i sign lambda)`` to a surface datum at its lifted points."""
    vals = gauge_transform(chi.values, chi.lifted_points(), _scaled(gauge, sign))
    return chi.with_values(vals)


def _scaled(gauge, sign):
    return GaugeFunction(lambda x: sign * gauge(x), lambda x: sign * gauge.gradient(x), gauge.support,
                         gauge.name, gauge.params)


def gauge_potential(potential, gauge):
    """The potential ``A + d lambda`` with the union of both support boxes."""
    lo = np.minimum(potential.support[0], gauge.support[0])
    hi = np.maximum(potential.support[1], gauge.support[1])
    if potential.is_zero:
        lo, hi = map(np.asarray, gauge.support)

    def fld(x):
        return potential(x) + gauge.gradient(x)

    params = {"potential": potential.describe(), "gauge": gauge.describe()}
    return FourPotential(fld, (lo, hi), "gauge-shifted", params)


def gauge_residual(chi, potential, gauge, t1, foliation, steps=50, t0=0.0):
    """Compare ``A + d lambda`` evolution against ``Gamma_lambda F^A Gamma_{-lambda}``.

    Returns the relative L2 residual on ``Sigma_{t1}`` together with the
    relative size of the gauge effect itself.
    """
    shifted = gauge_potential(potential, gauge)
    lhs, _ = evolve_full(chi, t1, foliation, shifted, t0=t0, steps=steps, store_every=steps)
    pre = gauge_field(chi, gauge, sign=-1.0)
    mid, _ = evolve_full(pre, t1, foliation, potential, t0=t0, steps=steps, store_every=steps)
    rhs = gauge_field(mid, gauge)
    den = norm(rhs)
    return {
        "residual": norm(lhs.with_values(lhs.values - rhs.values)) / den,
        "gauge_effect": norm(lhs.with_values(lhs.values - mid.values)) / den,
    }


def _sample_points(chi, count=48, rng_seed=0):
    mask = chi.support_mask()
    pts = chi.lifted_points()[mask]
    rng = np.random.default_rng(rng_seed)
    pick = rng.choice(len(pts), size=min(count, len(pts)), replace=False)
    return pts[np.sort(pick)]


def _relative(a, b):
    den = np.sqrt(np.sum(np.abs(b) ** 2))
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2)) / den) if den > 0 else 0.0


def check_covariance(chi, transform, m=1.0, momentum=None, exact_momentum_side=True):
    """Residuals of the transforms' compatibility with translations or boosts.

    Parameters
    ----------
    chi : SurfaceField
    transform : SpinLorentzPair or array_like of shape (4,)
        A spin/Lorentz pair, or a translation vector ``y``.
    exact_momentum_side : bool
        For Lorentz pairs, evaluate ``S F chi (Lambda^{-1} p)`` by summing the
        transform at the exact preimages instead of interpolating on the grid.

    Returns
    -------
    dict
        ``surface_shell``: ``||T_M F_MSigma chi - F_M,TSigma T_Sigma chi|| / ||chi||``.
        ``solution_shell``: relative residual of ``T_0 F_0M = F_0M T_M`` at
        sample points of the support.
    """
    chi_norm = norm(chi)
    psi = f_msigma(chi, momentum, m)
    probe = _sample_points(chi)
    if isinstance(transform, SpinLorentzPair):
        lam = transform.lorentz
        moved = lorentz_sigma(chi, transform)
        rhs = f_msigma(moved, psi.grid, m)
        if exact_momentum_side:
            p4 = shell_four_momenta(psi.grid, m)
            q4 = p4 @ np.linalg.inv(lam).T
            vals = np.stack([f_msigma_points(chi, q4[s].reshape(-1, 4), m) for s in range(2)])
            vals = np.einsum("ab,...b->...a", transform.spin, vals.reshape(psi.values.shape))
            lhs = MassShellField.projected(psi.grid, m, vals)
        else:
            lhs = lorentz_m(psi, transform)
        surface_shell = norm(lhs - rhs) / chi_norm
        x = lorentz_image(chi.surface, lam).lift(probe[:, 1:]) if probe.size else probe
        a = np.einsum("ab,kb->ka", transform.spin, f_0m(psi, x @ np.linalg.inv(lam).T))
        b = f_0m(lhs, x)
        solution_shell = _relative(b, a)
        kind = "lorentz"
    else:
        y = np.asarray(transform, dtype=float)
        lhs = translate_m(psi, y)
        rhs = f_msigma(translate_sigma(chi, y), psi.grid, m)
        surface_shell = norm(lhs - rhs) / chi_norm
        x = probe - y
        a = f_0m(psi, x + y)
        b = f_0m(translate_m(psi, y), x)
        solution_shell = _relative(b, a)
        kind = "translation"
    return {"kind": kind, "surface_shell": surface_shell, "solution_shell": solution_shell}
