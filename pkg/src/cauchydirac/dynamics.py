"""Interaction-picture evolution on a foliation.

The state is kept in mass-shell form ``phi_t``.  The generator is

    ell_t = F_MSigma_t  (v nslash Aslash)  F_Sigma_t M

so that ``i d phi_t / dt = ell_t phi_t``.  Solvers: a Picard iteration of
the Volterra form with trapezoid time quadrature, classical RK4, and an
independent split-step stepper on equal-time planes.
"""

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage

from .clifford import gamma_standard, slash, slash_covariant
from .fields import MassShellField, SurfaceField, norm, peak_bump
from .surfaces import flat
from .transforms import choose_method, f_0m, f_msigma, f_sigma_m, shell_phase


class ConvergenceWarning(RuntimeWarning):
    """Picard iteration stopped at its cap above tolerance."""


@dataclass(frozen=True)
class FourPotential:
    """External potential with covariant components ``A_mu(x)``.

    ``field`` maps points (..., 4) to (..., 4).  ``support`` is the declared
    box ``(lo, hi)`` in space-time outside of which ``A`` vanishes.
    """

    field: Callable
    support: tuple
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.field(np.asarray(x, dtype=float))

    @property
    def time_range(self):
        return float(self.support[0][0]), float(self.support[1][0])

    @property
    def is_zero(self):
        return self.name == "zero"

    def outside_support_max(self, samples):
        """Largest ``|A|`` among sample points outside the declared box."""
        x = np.asarray(samples, dtype=float)
        lo, hi = map(np.asarray, self.support)
        outside = np.any((x < lo) | (x > hi), axis=-1)
        if not outside.any():
            return 0.0
        return float(np.abs(self(x[outside])).max())

    def describe(self):
        return {"name": self.name, "params": self.params}


def zero_potential():
    return FourPotential(lambda x: np.zeros(x.shape), (np.zeros(4), np.zeros(4)), "zero", {})


def bump_potential(amplitude=0.5, direction=(1.0, 0.0, 0.0, 0.0), radius=1.5,
                   t_center=0.7, t_halfwidth=0.5, center=(0.0, 0.0, 0.0)):
    """``A^mu = amplitude * a^mu * s(|x - c| / R) * s((t - tc) / w)`` with peak-one bumps ``s``.

    ``direction`` is contravariant; the stored field is lowered with the
    metric.  Support: the ball of radius ``R`` for ``|t - tc| < w``.
    """
    a_low = amplitude * np.asarray(direction, dtype=float) * np.array([1.0, -1.0, -1.0, -1.0])
    c = np.asarray(center, dtype=float)

    def fld(x):
        r = np.linalg.norm(x[..., 1:] - c, axis=-1)
        prof = peak_bump(r / radius) * peak_bump((x[..., 0] - t_center) / t_halfwidth)
        return prof[..., None] * a_low

    lo = np.concatenate([[t_center - t_halfwidth], c - radius])
    hi = np.concatenate([[t_center + t_halfwidth], c + radius])
    params = {
        "amplitude": float(amplitude), "direction": list(map(float, direction)),
        "radius": float(radius), "t_center": float(t_center),
        "t_halfwidth": float(t_halfwidth), "center": c.tolist(),
    }
    return FourPotential(fld, (lo, hi), "bump", params)


def canonical_potential():
    """Electrostatic bump of amplitude 0.5, radius 1.5, time support [0.2, 1.2]."""
    return bump_potential()


def _leaf_mask(leaf, grid, potential):
    lo, hi = map(np.asarray, potential.support)
    x = grid.points()
    inside = np.all((x >= lo[1:]) & (x <= hi[1:]), axis=-1)
    if not inside.any():
        return inside
    t = leaf.height(x[inside])
    sub = (t >= lo[0]) & (t <= hi[0])
    inside[inside] = sub
    return inside


def apply_lt(phi, t, foliation, potential, position=None, method="auto"):
    """Interaction generator ``ell_t`` applied to a mass-shell state.

    Evaluates the free solution of ``phi`` on the leaf ``Sigma_t`` where the
    potential's support meets it, multiplies by ``v nslash Aslash`` and
    transforms back.  Returns the zero field when the support misses the
    leaf.
    """
    if potential.is_zero:
        return MassShellField.zeros(phi.grid, phi.mass)
    position = position or phi.grid.dual()
    leaf = foliation.surface_at(t)
    mask = _leaf_mask(leaf, position, potential)
    if not mask.any():
        return MassShellField.zeros(phi.grid, phi.mass)
    path = choose_method(position, phi.grid, leaf, method)
    use_fft = path == "fft"
    psi = f_sigma_m(phi, leaf, position, mask=None if use_fft else mask, method=path)
    xv = position.points()[mask]
    x4 = leaf.lift(xv)
    a = potential(x4)
    tt = np.full(len(xv), float(t))
    mult = (foliation.speed(tt, xv)[:, None, None] * slash(foliation.normal(tt, xv))) @ slash_covariant(a)
    vals = np.zeros(psi.values.shape, dtype=complex)
    vals[mask] = np.einsum("nab,nb->na", mult, psi.values[mask])
    src = SurfaceField(leaf, position, vals)
    return f_msigma(src, phi.grid, phi.mass, method=path)


@dataclass
class EvolutionTrajectory:
    """Interaction-picture states ``phi_t`` at increasing times."""

    times: np.ndarray
    states: list
    foliation: object
    potential: FourPotential
    method: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def initial(self):
        return self.states[0]

    @property
    def final(self):
        return self.states[-1]

    def norms(self):
        return np.array([norm(s) for s in self.states])

    def unitarity_drift(self):
        n = self.norms()
        return float(np.abs(n - n[0]).max() / n[0]) if n[0] > 0 else 0.0

    def state_at(self, t):
        """Linear interpolation between stored states."""
        ts = self.times
        if t < ts[0] - 1e-12 or t > ts[-1] + 1e-12:
            raise ValueError(f"time {t} outside trajectory range [{ts[0]}, {ts[-1]}]")
        k = int(np.clip(np.searchsorted(ts, t) - 1, 0, len(ts) - 2)) if len(ts) > 1 else 0
        if len(ts) == 1:
            return self.states[0]
        theta = (t - ts[k]) / (ts[k + 1] - ts[k])
        if theta <= 0:
            return self.states[k]
        if theta >= 1:
            return self.states[k + 1]
        return self.states[k] * (1 - theta) + self.states[k + 1] * theta


class Generator:
    """Bound ``ell_t`` for a fixed foliation, potential and position grid."""

    def __init__(self, foliation, potential, position=None, method="auto"):
        self.foliation = foliation
        self.potential = potential
        self.position = position
        self.method = method
        self.calls = 0

    def __call__(self, phi, t):
        self.calls += 1
        return apply_lt(phi, t, self.foliation, self.potential, self.position, self.method)

    def vanishes_at(self, t, grid):
        if self.potential.is_zero:
            return True
        position = self.position or grid.dual()
        return not _leaf_mask(self.foliation.surface_at(t), position, self.potential).any()


def _time_grid(t0, t1, steps):
    if steps < 1:
        raise ValueError("steps must be >= 1")
    return t0 + (t1 - t0) * np.arange(steps + 1) / steps


def rk4_solve(chi_hat, t0, t1, steps, foliation, potential, position=None,
              store_every=1, project=True, method="auto"):
    """Classical RK4 for ``i d phi / dt = ell_t phi``.

    Stores every ``store_every``-th state plus the last one.  The largest
    bundle residual before each projection is recorded.
    """
    gen = Generator(foliation, potential, position, method)
    ts = _time_grid(t0, t1, steps)
    dt = ts[1] - ts[0]
    phi = chi_hat
    times = [ts[0]]
    states = [phi]
    worst = 0.0

    def rhs(state, t):
        return gen(state, t) * (-1j)

    for k in range(steps):
        t = ts[k]
        if all(gen.vanishes_at(s, phi.grid) for s in (t, t + dt / 2, t + dt)):
            new = phi
        else:
            k1 = rhs(phi, t)
            k2 = rhs(phi + k1 * (dt / 2), t + dt / 2)
            k3 = rhs(phi + k2 * (dt / 2), t + dt / 2)
            k4 = rhs(phi + k3 * dt, t + dt)
            new = phi + (k1 + k2 * 2 + k3 * 2 + k4) * (dt / 6)
            if project:
                worst = max(worst, new.bundle_residual())
                new = new.reproject()
        phi = new
        if (k + 1) % store_every == 0 or k + 1 == steps:
            times.append(ts[k + 1])
            states.append(phi)
    diag = {"steps": steps, "generator_calls": gen.calls, "max_bundle_residual": worst}
    return EvolutionTrajectory(np.array(times), states, foliation, potential, "rk4", diag)


def picard_solve(chi_hat, t0, t1, steps, iterations, foliation, potential, position=None,
                 tol=1e-10, method="auto"):
    """Picard iteration of ``phi_t = chi - i int_{t0}^t ell_s phi_s ds``.

    The integral uses the composite trapezoid rule on the step grid.  The
    iteration stops when the sup over stored times of the relative
    increment drops below ``tol`` or after ``iterations`` sweeps.
    ``diagnostics["increments"]`` lists the increment of every sweep.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    gen = Generator(foliation, potential, position, method)
    ts = _time_grid(t0, t1, steps)
    dt = ts[1] - ts[0]
    active = [not gen.vanishes_at(t, chi_hat.grid) for t in ts]
    scale = norm(chi_hat) or 1.0
    states = [chi_hat] * len(ts)
    increments = []
    for _ in range(iterations):
        ell = [gen(states[k], ts[k]) if active[k] else None for k in range(len(ts))]
        acc = None
        new = [chi_hat]
        for k in range(1, len(ts)):
            pair = [v for v in (ell[k - 1], ell[k]) if v is not None]
            if pair:
                seg = pair[0] if len(pair) == 1 else pair[0] + pair[1]
                seg = seg * (dt / 2)
                acc = seg if acc is None else acc + seg
            new.append(chi_hat if acc is None else chi_hat - acc * 1j)
        inc = max(norm(a - b) for a, b in zip(new, states)) / scale
        increments.append(inc)
        states = new
        if inc <= tol:
            break
    converged = increments[-1] <= tol
    ratios = [b / a for a, b in zip(increments, increments[1:]) if a > 0]
    diag = {
        "steps": steps,
        "iterations": len(increments),
        "increments": increments,
        "contraction": ratios,
        "converged": converged,
        "final_increment": increments[-1],
        "generator_calls": gen.calls,
    }
    if not converged:
        warnings.warn(
            f"Picard stopped after {len(increments)} sweeps, increment {increments[-1]:.3e}",
            ConvergenceWarning,
        )
    return EvolutionTrajectory(ts, states, foliation, potential, "picard", diag)


def reconstruct(traj, x):
    """Space-time solution ``psi(x) = F_0M phi_{tau(x)} (x)`` at points (..., 4)."""
    pts = np.asarray(x, dtype=float)
    flat_pts = pts.reshape(-1, 4)
    tau = np.atleast_1d(traj.foliation.tau(flat_pts))
    lo, hi = traj.times[0], traj.times[-1]
    if np.any(tau < lo - 1e-12) or np.any(tau > hi + 1e-12):
        raise ValueError("tau(x) outside the trajectory time range")
    out = np.zeros((len(flat_pts), 4), dtype=complex)
    ts = traj.times
    if len(ts) == 1:
        return f_0m(traj.states[0], flat_pts).reshape(pts.shape[:-1] + (4,))
    k = np.clip(np.searchsorted(ts, tau) - 1, 0, len(ts) - 2)
    for idx in np.unique(k):
        sel = k == idx
        theta = ((tau[sel] - ts[idx]) / (ts[idx + 1] - ts[idx]))[:, None]
        a = f_0m(traj.states[idx], flat_pts[sel])
        b = f_0m(traj.states[idx + 1], flat_pts[sel])
        out[sel] = (1 - theta) * a + theta * b
    return out.reshape(pts.shape[:-1] + (4,))


def _leaf_check(chi, foliation, t0):
    x = chi.grid.points()
    dev = np.abs(foliation.height(t0, x) - chi.surface.height(x)).max()
    if dev > 1e-10:
        raise ValueError(f"datum surface is not the leaf at t0 = {t0} (deviation {dev:.3e})")


def evolve_full(chi, t1, foliation, potential, t0=0.0, method="rk4", steps=50,
                iterations=8, momentum=None, store_every=1, tol=1e-10):
    """Full evolution of ``chi`` on ``Sigma_{t0}`` to the leaf ``Sigma_{t1}``.

    Returns
    -------
    SurfaceField
        The solution on ``Sigma_{t1}`` over the datum's chart grid.
    EvolutionTrajectory
    """
    _leaf_check(chi, foliation, t0)
    chi_hat = f_msigma(chi, momentum)
    if method == "rk4":
        traj = rk4_solve(chi_hat, t0, t1, steps, foliation, potential, chi.grid, store_every)
    elif method == "picard":
        traj = picard_solve(chi_hat, t0, t1, steps, iterations, foliation, potential, chi.grid, tol)
    else:
        raise ValueError(f"unknown solver {method!r}")
    out = f_sigma_m(traj.final, foliation.surface_at(t1), chi.grid)
    return out, traj


def _alpha_matrices():
    g = gamma_standard()
    return g.alpha


def potential_step(potential, x4, dt):
    """Pointwise ``exp(-i (A_0 + alpha^k A_k) dt)`` at points (..., 4)."""
    a = potential(x4)
    a0 = a[..., 0]
    av = a[..., 1:]
    na = np.linalg.norm(av, axis=-1)
    safe = np.where(na > 0, na, 1.0)
    unit = av / safe[..., None]
    aa = np.einsum("...k,kab->...ab", unit, _alpha_matrices())
    eye = np.eye(4)
    rot = np.cos(na * dt)[..., None, None] * eye - 1j * np.sin(na * dt)[..., None, None] * aa
    return np.exp(-1j * a0 * dt)[..., None, None] * rot


def split_step_reference(chi, potential, t1, steps, momentum=None):
    """Strang split-operator reference solution on equal-time planes.

    Alternates exact free half steps (mass-shell phases) with pointwise
    potential phases at the midpoint time.  ``chi`` must live on ``x0 = 0``.
    """
    if chi.surface.flat_time != 0.0:
        raise ValueError("split-step reference needs data on the plane x0 = 0")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    grid = chi.grid
    plane = flat(0.0)
    dt = t1 / steps
    x = grid.points()
    psi = chi.values
    t_lo, t_hi = potential.time_range

    def half_free(vals, tau):
        shell = f_msigma(SurfaceField(plane, grid, vals), momentum)
        return f_sigma_m(shell_phase(shell, tau), plane, grid).values

    pending = 0.0
    for k in range(steps):
        t_mid = (k + 0.5) * dt
        if potential.is_zero or t_mid < t_lo or t_mid > t_hi:
            pending += dt
            continue
        psi = half_free(psi, pending + dt / 2)
        pending = dt / 2
        x4 = np.concatenate([np.full(x.shape[:-1] + (1,), t_mid), x], axis=-1)
        u = potential_step(potential, x4, dt)
        psi = np.einsum("...ab,...b->...a", u, psi)
    if pending:
        psi = half_free(psi, pending)
    return SurfaceField(flat(t1), grid, psi)


def dirac_residual(evaluate, points, step, potential=None, m=1.0):
    """``|(i dslash - Aslash - m) psi|`` at points (K, 4) by fourth-order differences.

    ``evaluate`` maps points (..., 4) to spinors (..., 4).  Returns the
    residual norms and the spinor norms at the points.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    g = gamma_standard().gamma
    offsets = np.array([-2, -1, 1, 2])
    coef = np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * step)
    stencil = x[:, None, None, :] + offsets[None, None, :, None] * step * np.eye(4)[None, :, None, :]
    vals = evaluate(stencil.reshape(-1, 4)).reshape(len(x), 4, 4, 4)
    deriv = np.einsum("o,kmoa->kma", coef, vals)
    center = evaluate(x)
    res = 1j * np.einsum("mab,kmb->ka", g, deriv) - m * center
    if potential is not None:
        res -= np.einsum("kab,kb->ka", slash_covariant(potential(x)), center)
    return np.linalg.norm(res, axis=-1), np.linalg.norm(center, axis=-1)


def surface_density(field):
    """Pointwise conserved density ``psi^* gamma^0 G psi`` on the field's surface."""
    x = field.grid.points()
    grad = field.surface.gradient(x)
    w = np.concatenate([np.ones(x.shape[:-1])[..., None], grad], axis=-1)
    g0 = gamma_standard().gamma[0]
    gpsi = np.einsum("ab,...bc,...c->...a", g0, slash(w), field.values)
    return np.real(np.sum(np.conj(field.values) * gpsi, axis=-1))


def causal_shadow_mask(field, support_points, inflate):
    """Nodes of ``field``'s surface within the causal shadow of ``support_points``.

    ``support_points`` has shape (S, 4).  A node ``x`` is inside when some
    support point ``y`` has ``|xvec - yvec| - |x0 - y0| <= inflate``.  When
    both the support and the surface are equal-time planes, the spatial
    distance comes from an exact Euclidean distance transform.
    """
    grid = field.grid
    y = np.asarray(support_points, dtype=float)
    xv = grid.points()
    t_surf = field.surface.flat_time
    if t_surf is not None and np.allclose(y[:, 0], y[0, 0]):
        on_grid = np.zeros(grid.shape, dtype=bool)
        idx = np.rint((y[:, 1:] - grid.axis[0]) / grid.spacing).astype(int)
        if np.all((idx >= 0) & (idx < grid.n)) and np.allclose(
            grid.axis[0] + idx * grid.spacing, y[:, 1:], atol=1e-9 * grid.spacing
        ):
            on_grid[tuple(idx.T)] = True
            dist = ndimage.distance_transform_edt(~on_grid) * grid.spacing
            return dist - abs(t_surf - y[0, 0]) <= inflate + 1e-12
    x4 = field.surface.lift(xv).reshape(-1, 4)
    inside = np.zeros(len(x4), dtype=bool)
    for i0 in range(0, len(x4), 4096):
        blk = x4[i0:i0 + 4096]
        sep = np.linalg.norm(blk[:, None, 1:] - y[None, :, 1:], axis=-1)
        sep -= np.abs(blk[:, None, 0] - y[None, :, 0])
        inside[i0:i0 + 4096] = (sep <= inflate + 1e-12).any(axis=1)
    return inside.reshape(grid.shape)


def causal_leakage(field, support_points, inflate):
    """Share of the field's surface density outside the inflated causal shadow."""
    dens = surface_density(field)
    total = dens.sum()
    if total <= 0:
        return 0.0
    mask = causal_shadow_mask(field, support_points, inflate)
    return float(dens[~mask].sum() / total)


def support_points(chi):
    """Lifted points of the nodes where ``chi`` is nonzero, shape (S, 4)."""
    mask = chi.support_mask()
    return chi.surface.lift(chi.grid.points()[mask])


def relative_l2(a, b):
    """``||a - b|| / ||b||`` over raw node values."""
    a = np.asarray(a)
    b = np.asarray(b)
    den = np.sqrt(np.sum(np.abs(b) ** 2))
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2)) / den) if den > 0 else float(np.sqrt(np.sum(np.abs(a) ** 2)))


def state_distance(a, b):
    """Relative mass-shell distance ``||a - b|| / ||b||``."""
    nb = norm(b)
    return norm(a - b) / nb if nb > 0 else norm(a)
