"""Generalised Fourier transforms between surface data, the mass shell,
3-momentum space and free solutions, plus free evolution between surfaces.

Continuum formulas realised as Riemann sums::

    F_MSigma chi(p)  = (pslash + m)/(2m) (2 pi)^{-3/2} sum_x e^{ip.x} G(x) chi(x) dx^3
    F_0M psi(x)      = (2 pi)^{-3/2} / m  sum_{p, sheets} e^{-ip.x} (m^2 / p0) psi(p) dp^3
    F_3M psi         = m (psi_+ - psi_-) / E
    F_M3 phi         = (pslash + m) gamma^0 phi / (2m)        (each sheet)

with ``x0 = t(xvec)`` on the surface and ``G = slash((1, grad t))``.  Direct
summation is the reference; on hyperplanes ``x0 = c`` with the Fourier-dual
momentum grid the same sums are evaluated by FFT.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .clifford import apply_slash, gamma_standard
from .fields import (
    Grid3,
    MassShellField,
    Momentum3Field,
    SurfaceField,
    grid_mismatch,
    shell_four_momenta,
)
from .massshell import energy

TWO_PI_32 = (2.0 * np.pi) ** -1.5
COMPLEX_CAP = 40.0
_GAMMA0_DIAG = np.array([1.0, 1.0, -1.0, -1.0])


class OutOfRangeError(ValueError):
    """Complex momenta too far from the real shell for a safe evaluation."""


def f_3m(psi):
    """Mass shell to 3-momentum space: ``m (psi_+ - psi_-) / E`` nodewise."""
    e = energy(psi.grid.points(), psi.mass)
    return Momentum3Field(psi.grid, psi.mass * (psi.plus - psi.minus) / e[..., None])


def f_m3(phi, m=1.0):
    """3-momentum space to mass shell: ``(pslash + m) gamma^0 phi / (2m)`` on each sheet."""
    p4 = shell_four_momenta(phi.grid, m)
    g0phi = np.einsum("ab,...b->...a", gamma_standard().gamma[0], phi.values)
    vals = (apply_slash(p4, g0phi[None]) + m * g0phi[None]) / (2.0 * m)
    return MassShellField(phi.grid, m, vals)


def _is_dual(position, momentum):
    return position.n == momentum.n and np.isclose(
        position.spacing * momentum.spacing * position.n, 2.0 * np.pi, rtol=1e-13, atol=0
    )


def _axis_tables(position, momentum):
    # exp(-i p_k x_j) per axis
    return np.exp(-1j * np.outer(momentum.axis, position.axis))


def _centered_fft(a):
    axes = (0, 1, 2)
    return np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(a, axes=axes), axes=axes), axes=axes)


def _centered_ifft_sum(a):
    # sum_k exp(+i p_k x_j) a_k on dual grids
    axes = (0, 1, 2)
    n3 = a.shape[0] * a.shape[1] * a.shape[2]
    return n3 * np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(a, axes=axes), axes=axes), axes=axes)


def surface_density(chi):
    """``G(x) chi(x) dx^3`` on the chart grid."""
    if chi.surface.flat_time is not None:
        # G = gamma^0 on equal-time planes
        return chi.values * (_GAMMA0_DIAG * chi.grid.weight)
    x = chi.grid.points()
    grad = chi.surface.gradient(x)
    w = np.concatenate([np.ones(x.shape[:-1])[..., None], grad], axis=-1)
    return apply_slash(w, chi.values) * chi.grid.weight


def _check_support(chi):
    if chi.support is not None:
        lo, hi = chi.support
        if not chi.grid.contains(lo, hi):
            raise ValueError("declared support escapes the grid")


def choose_method(position, momentum, surface, method):
    if method not in ("auto", "fft", "direct"):
        raise ValueError(f"unknown method {method!r}")
    fast_ok = surface.flat_time is not None and _is_dual(position, momentum)
    if method == "fft" and not fast_ok:
        raise ValueError("FFT path needs a hyperplane x0 = c and the dual momentum grid")
    return "fft" if (method == "fft" or (method == "auto" and fast_ok)) else "direct"


def _sheet_sums(chi, momentum, m, method):
    """``sum_x e^{i(s E t - p.x)} G chi dx^3`` for both sheets, shape (2, n, n, n, 4)."""
    dens = surface_density(chi)
    e = energy(momentum.points(), m)
    path = choose_method(chi.grid, momentum, chi.surface, method)
    if path == "fft":
        c = chi.surface.flat_time
        base = _centered_fft(dens)
        ph = np.exp(1j * e * c)[..., None]
        return np.stack([ph * base, np.conj(ph) * base])
    mask = np.any(dens != 0, axis=-1)
    idx = np.argwhere(mask).astype(np.int64)
    heights = chi.surface.height(chi.grid.points()[mask])
    values = np.ascontiguousarray(dens[mask])
    table = _axis_tables(chi.grid, momentum)
    out = np.zeros(momentum.shape + (2, 4), dtype=complex)
    _kernels.forward_grid(table, table, table, e, heights.astype(float), values, idx, out)
    return np.moveaxis(out, 3, 0)


def f_msigma(chi, momentum=None, m=1.0, method="auto"):
    """Surface datum to mass-shell section.

    Parameters
    ----------
    chi : SurfaceField
    momentum : Grid3, optional
        Momentum grid; defaults to the Fourier dual of ``chi.grid``.
    m : float
        Mass.
    method : {"auto", "fft", "direct"}
        ``auto`` takes the FFT path on hyperplanes ``x0 = c`` with the dual
        grid and direct summation otherwise.
    """
    _check_support(chi)
    momentum = momentum or chi.grid.dual()
    sums = _sheet_sums(chi, momentum, m, method)
    p4 = shell_four_momenta(momentum, m)
    vals = (apply_slash(p4, sums) + m * sums) * (TWO_PI_32 / (2.0 * m))
    return MassShellField(momentum, m, vals)


def _lifted_support(chi):
    dens = surface_density(chi)
    mask = np.any(dens != 0, axis=-1)
    x = chi.grid.points()[mask]
    t = chi.surface.height(x)
    return x, t, dens[mask]


def f_msigma_points(chi, p4, m=1.0, chunk=256):
    """Evaluate the surface transform at explicit four-momenta ``p4`` (K, 4).

    Points may lie on either sheet of the real shell or on the complexified
    shell.  Complex points are limited to ``|Im pvec| * diam(supp) <= 40``.

    Returns
    -------
    ndarray, shape (K, 4)
    """
    p4 = np.atleast_2d(np.asarray(p4))
    x, t, dens = _lifted_support(chi)
    out = np.zeros((len(p4), 4), dtype=complex)
    if len(x) == 0:
        return out
    if np.iscomplexobj(p4) and np.any(p4.imag != 0):
        lifted = np.concatenate([t[:, None], x], axis=1)
        diam = 2.0 * np.linalg.norm(lifted - lifted.mean(axis=0), axis=1).max()
        if np.any(np.linalg.norm(p4[:, 1:].imag, axis=1) * diam > COMPLEX_CAP):
            raise OutOfRangeError("|Im p| * diam(supp) exceeds the overflow cap")
        for i0 in range(0, len(p4), chunk):
            blk = p4[i0:i0 + chunk]
            phase = np.exp(1j * (np.outer(blk[:, 0], t) - blk[:, 1:] @ x.T))
            out[i0:i0 + chunk] = phase @ dens
    else:
        p4 = p4.real.astype(float)
        e = np.abs(p4[:, 0])
        sums = np.zeros((len(p4), 2, 4), dtype=complex)
        _kernels.forward_points(
            np.ascontiguousarray(p4[:, 1:]), e, np.ascontiguousarray(x), t.astype(float),
            np.ascontiguousarray(dens), sums,
        )
        out = np.where((p4[:, 0] >= 0)[:, None], sums[:, 0], sums[:, 1])
    return (apply_slash(p4, out) + m * out) * (TWO_PI_32 / (2.0 * m))


def f_msigma_complex(chi, points, m=1.0):
    """Complexified surface transform at complex shell points.

    ``points`` is a :class:`~cauchydirac.massshell.ComplexShellPoint` or an
    array of complex four-momenta (K, 4).
    """
    if hasattr(points, "four"):
        return f_msigma_points(chi, np.asarray(points.four, dtype=complex)[None], points.m)[0]
    return f_msigma_points(chi, np.asarray(points, dtype=complex), m)


def shell_weights(psi):
    """``(2 pi)^{-3/2} (m / p0) psi dp^3`` on both sheets: the summand of ``F_0M``."""
    e = energy(psi.grid.points(), psi.mass)[..., None]
    scale = TWO_PI_32 * psi.mass * psi.grid.weight
    return np.stack([psi.plus * (scale / e), -psi.minus * (scale / e)])


def f_0m(psi, points):
    """Free solution of the mass-shell section at space-time points (..., 4)."""
    pts = np.asarray(points, dtype=float)
    flat = pts.reshape(-1, 4)
    w = shell_weights(psi)
    pv = psi.grid.points().reshape(-1, 3)
    e = energy(pv, psi.mass)
    weights = np.ascontiguousarray(np.moveaxis(w, 0, -2).reshape(-1, 2, 4))
    out = np.zeros((len(flat), 4), dtype=complex)
    _kernels.backward_points(pv, e, weights, np.ascontiguousarray(flat), out)
    return out.reshape(pts.shape[:-1] + (4,))


def f_sigma0(evaluate, surface, grid, support=None):
    """Restrict a space-time evaluator to the lifted grid points of ``surface``."""
    vals = np.asarray(evaluate(surface.lift(grid.points())), dtype=complex)
    return SurfaceField(surface, grid, np.broadcast_to(vals, grid.shape + (4,)).copy(), support)


def f_sigma_m(psi, surface, grid=None, mask=None, method="auto"):
    """Free solution of ``psi`` restricted to ``surface`` on a chart grid.

    This is ``f_sigma0(f_0m(psi, .), surface, grid)`` computed with the grid
    kernels (or FFT on hyperplanes).  ``mask`` limits evaluation to a subset
    of nodes; other nodes are set to zero.
    """
    grid = grid or psi.grid.dual()
    w = shell_weights(psi)
    path = choose_method(grid, psi.grid, surface, method)
    if path == "fft" and mask is None:
        c = surface.flat_time
        e = energy(psi.grid.points(), psi.mass)[..., None]
        ph = np.exp(-1j * e * c)
        vals = _centered_ifft_sum(ph * w[0] + np.conj(ph) * w[1])
        return SurfaceField(surface, grid, vals)
    if mask is None:
        mask = np.ones(grid.shape, dtype=bool)
    idx = np.argwhere(mask).astype(np.int64)
    heights = surface.height(grid.points()[mask]).astype(float)
    table = np.conj(_axis_tables(grid, psi.grid))
    e = energy(psi.grid.points(), psi.mass)
    weights = np.ascontiguousarray(np.moveaxis(w, 0, -2))
    out = np.zeros((len(idx), 4), dtype=complex)
    _kernels.backward_grid(table, table, table, e, heights, weights, idx, out)
    vals = np.zeros(grid.shape + (4,), dtype=complex)
    vals[mask] = out
    return SurfaceField(surface, grid, vals)


def free_evolve(chi, target, momentum=None, m=1.0, method="auto"):
    """Free Dirac evolution of ``chi`` onto the surface ``target`` (same chart grid)."""
    psi = f_msigma(chi, momentum, m, method)
    return f_sigma_m(psi, target, chi.grid, method=method)


def shell_phase(psi, dt):
    """Multiply the sheets by ``exp(-i s E dt)``: free evolution by ``dt`` in time."""
    e = energy(psi.grid.points(), psi.mass)[..., None]
    ph = np.exp(-1j * e * dt)
    return psi.with_values(np.stack([ph * psi.plus, np.conj(ph) * psi.minus]))


def inverse_dft_3(phi, grid=None):
    """Standard inverse Fourier transform of a 3-momentum field onto a position grid."""
    grid = grid or phi.grid.dual()
    if not _is_dual(grid, phi.grid):
        raise ValueError("inverse DFT needs the dual position grid")
    vals = _centered_ifft_sum(phi.values) * (TWO_PI_32 * phi.grid.weight)
    return vals


TAGS = ("3", "M", "Sigma", "0")


@dataclass(frozen=True)
class TransformPlan:
    """A resolved transform between two representations.

    ``source`` and ``target`` are tags from ``("3", "M", "Sigma", "0")``.
    ``fast`` records whether the FFT path applies.
    """

    source: str
    target: str
    position: Grid3
    momentum: Grid3
    mass: float = 1.0
    source_surface: object = None
    target_surface: object = None
    fast: bool = False

    def describe(self):
        return {
            "source": self.source,
            "target": self.target,
            "position": self.position.describe(),
            "momentum": self.momentum.describe(),
            "mass": self.mass,
            "source_surface": None if self.source_surface is None else self.source_surface.describe(),
            "target_surface": None if self.target_surface is None else self.target_surface.describe(),
            "fast": self.fast,
            "quadrature": "riemann",
        }


def plan_transform(source, target, position, momentum=None, mass=1.0,
                   source_surface=None, target_surface=None):
    """Validate endpoints and decide whether the FFT path applies."""
    for tag in (source, target):
        if tag not in TAGS:
            raise ValueError(f"unknown representation {tag!r}; expected one of {TAGS}")
    if source == "0":
        raise ValueError("free solutions are inputs only through a surface; use source 'Sigma'")
    if source == "Sigma" and source_surface is None:
        raise ValueError("source 'Sigma' needs a source surface")
    if target in ("Sigma", "0") and target_surface is None:
        raise ValueError(f"target {target!r} needs a target surface")
    momentum = momentum or position.dual()
    fast = True
    if source_surface is not None:
        fast &= source_surface.flat_time is not None
    if target_surface is not None:
        fast &= target_surface.flat_time is not None
    fast &= _is_dual(position, momentum)
    return TransformPlan(source, target, position, momentum, mass, source_surface, target_surface,
                         bool(fast))


def execute(plan, operand):
    """Apply a :class:`TransformPlan` to a field of the source kind."""
    expected = {"3": Momentum3Field, "M": MassShellField, "Sigma": SurfaceField}[plan.source]
    if not isinstance(operand, expected):
        raise TypeError(f"plan source {plan.source!r} expects {expected.__name__}")
    if plan.source == "Sigma":
        grid_mismatch(operand.grid, plan.position)
        shell = f_msigma(operand, plan.momentum, plan.mass)
    elif plan.source == "3":
        shell = f_m3(operand, plan.mass)
    else:
        shell = operand
    if plan.target == "M":
        return shell
    if plan.target == "3":
        return f_3m(shell)
    return f_sigma_m(shell, plan.target_surface, plan.position)
