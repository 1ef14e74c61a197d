"""Space-like Cauchy surfaces as graphs ``x0 = t(xvec)`` and foliations by them."""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .clifford import gamma_standard, slash


class InvalidSurfaceError(ValueError):
    """The surface is not space-like somewhere on the probed region."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class CauchySurface:
    """Graph ``x0 = height(xvec)`` with an analytic gradient.

    ``height`` and ``gradient`` take arrays of shape (..., 3) and return
    shapes (...) and (..., 3).  ``bound`` is the declared supremum of
    ``|gradient|``.  ``plane`` holds ``(slope, offset)`` for affine graphs.
    """

    height: Callable
    gradient: Callable
    bound: float
    name: str = "custom"
    params: dict = field(default_factory=dict)
    plane: tuple = None

    def __post_init__(self):
        if not 0.0 <= self.bound:
            raise ValueError("declared gradient bound must be non-negative")

    @property
    def flat_time(self):
        """The constant height if the surface is a hyperplane ``x0 = c``, else None."""
        if self.plane is None:
            return None
        slope, offset = self.plane
        return float(offset) if not np.any(slope) else None

    def lift(self, xvec):
        """Space-time points ``(height(xvec), xvec)``."""
        xvec = np.asarray(xvec, dtype=float)
        return np.concatenate([self.height(xvec)[..., None], xvec], axis=-1)

    def shifted(self, dt):
        """The surface moved by ``dt`` along the time axis."""
        params = dict(self.params)
        params["t0"] = params.get("t0", 0.0) + dt
        plane = None
        if self.plane is not None:
            plane = (self.plane[0], self.plane[1] + dt)
        return CauchySurface(
            lambda x: self.height(x) + dt,
            self.gradient,
            self.bound,
            self.name,
            params,
            plane,
        )

    def translated(self, y):
        """The surface ``Sigma - y``, i.e. the graph ``x0 = t(xvec + yvec) - y0``."""
        y = np.asarray(y, dtype=float)
        yv = y[1:]
        if not np.any(yv):
            return self.shifted(-y[0])
        if self.plane is not None:
            slope, offset = self.plane
            return tilted(slope, offset + float(np.dot(slope, yv)) - y[0],
                          name="flat" if not np.any(slope) else "tilted")
        if self.name == "bump":
            p = self.params
            centre = np.asarray(p.get("center", np.zeros(3))) - yv
            return bump(p["amplitude"], p["width"], p["t0"] - y[0], centre)
        return CauchySurface(
            lambda x: self.height(np.asarray(x, dtype=float) + yv) - y[0],
            lambda x: self.gradient(np.asarray(x, dtype=float) + yv),
            self.bound,
            self.name + "-translated",
            {**self.params, "translation": y.tolist()},
        )

    def describe(self):
        return {"name": self.name, "params": _jsonable(self.params)}


def _jsonable(params):
    out = {}
    for k, v in params.items():
        out[k] = np.asarray(v).tolist() if isinstance(v, np.ndarray | list | tuple) else v
    return out


def flat(t0=0.0):
    """Hyperplane ``x0 = t0``."""
    return tilted((0.0, 0.0, 0.0), t0, name="flat")


def tilted(slope, t0=0.0, name="tilted"):
    """Plane ``x0 = slope . xvec + t0`` with ``|slope| < 1``."""
    a = np.asarray(slope, dtype=float)
    if a.shape != (3,):
        raise ValueError("slope must be a 3-vector")
    norm = float(np.linalg.norm(a))
    if norm >= 1.0:
        raise InvalidSurfaceError(f"plane slope |a| = {norm:.4g} is not space-like")

    def height(x):
        return np.asarray(x, dtype=float) @ a + t0

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(a, x.shape).copy()

    params = {"t0": float(t0)} if name == "flat" else {"slope": a.tolist(), "t0": float(t0)}
    return CauchySurface(height, gradient, norm, name, params, (a, float(t0)))


def bump(amplitude, width, t0=0.0, center=(0.0, 0.0, 0.0)):
    """Localised graph ``x0 = t0 + amplitude * exp(-|x - c|^2 / width^2)``.

    The gradient bound is ``sqrt2 * |amplitude| * exp(-1/2) / width``.
    """
    if width <= 0:
        raise ValueError("bump width must be positive")
    bound = np.sqrt(2.0) * abs(amplitude) * np.exp(-0.5) / width
    if bound >= 1.0:
        raise InvalidSurfaceError(f"bump surface has gradient bound {bound:.4g} >= 1")

    c = np.asarray(center, dtype=float)

    def height(x):
        d = np.asarray(x, dtype=float) - c
        return t0 + amplitude * np.exp(-np.sum(d * d, axis=-1) / width**2)

    def gradient(x):
        d = np.asarray(x, dtype=float) - c
        b = np.exp(-np.sum(d * d, axis=-1) / width**2)
        return (-2.0 * amplitude / width**2) * b[..., None] * d

    params = {"amplitude": float(amplitude), "width": float(width), "t0": float(t0)}
    if np.any(c):
        params["center"] = c.tolist()
    return CauchySurface(height, gradient, float(bound), "bump", params)


def graph(height, gradient, bound, name="custom", params=None):
    """Wrap user-supplied height and gradient callables without validation."""
    return CauchySurface(height, gradient, bound, name, params or {})


SURFACE_FAMILIES = {"flat": flat, "tilted": tilted, "bump": bump}


def make_surface(name, **params):
    """Build a named surface family from keyword parameters."""
    try:
        factory = SURFACE_FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown surface family {name!r}") from None
    return factory(**params)


def unit_normal(surface, xvec):
    """Future-directed unit normal ``(1, grad t) / sqrt(1 - |grad t|^2)``."""
    grad = surface.gradient(np.asarray(xvec, dtype=float))
    g2 = np.sum(grad * grad, axis=-1)
    if np.any(g2 >= 1.0):
        raise InvalidSurfaceError("surface gradient reaches the light cone")
    w = np.concatenate([np.ones(g2.shape)[..., None], grad], axis=-1)
    return w / np.sqrt(1.0 - g2)[..., None]


def surface_form_matrix(surface, xvec):
    """Density of the spinor-valued 3-form against ``d^3x`` on the graph.

    Equals ``slash((1, grad t)) = gamma^0 - gamma^k d_k t``, which is
    ``sqrt(1 - |grad t|^2)`` times the slash of the unit normal.
    """
    grad = surface.gradient(np.asarray(xvec, dtype=float))
    w = np.concatenate([np.ones(grad.shape[:-1])[..., None], grad], axis=-1)
    return slash(w)


@dataclass
class SurfaceReport:
    """Space-likeness summary of a surface over a set of probe points."""

    max_gradient: float
    inverse_norm_sup: float
    declared_bound: float
    passed: bool


def _probe_points(probe):
    if hasattr(probe, "points"):
        return probe.points().reshape(-1, 3)
    return np.asarray(probe, dtype=float).reshape(-1, 3)


def validate_surface(surface, probe):
    """Check ``sup |grad t| <= V < 1`` and bound ``||(gamma^0 nslash)^{-1}||``.

    Parameters
    ----------
    surface : CauchySurface
    probe : Grid3 or array_like, shape (..., 3)
        Chart points at which the gradient is sampled.

    Returns
    -------
    SurfaceReport

    Raises
    ------
    InvalidSurfaceError
        If ``|grad t| >= 1`` at some probe point.
    """
    pts = _probe_points(probe)
    grad = surface.gradient(pts)
    gnorm = np.sqrt(np.sum(grad * grad, axis=-1))
    gmax = float(gnorm.max())
    if gmax >= 1.0:
        report = SurfaceReport(gmax, float("inf"), surface.bound, False)
        raise InvalidSurfaceError(f"max |grad t| = {gmax:.6g} >= 1: not a Cauchy surface", report)
    g0 = gamma_standard().gamma[0]
    n = unit_normal(surface, pts[np.argsort(gnorm)[-min(len(pts), 64):]])
    mats = g0 @ slash(n)
    sv = np.linalg.svd(mats, compute_uv=False)
    inv_sup = float((1.0 / sv.min(axis=-1)).max())
    return SurfaceReport(gmax, inv_sup, surface.bound, gmax <= surface.bound * (1 + 1e-12))


def lorentz_image(surface, lorentz, shift=None):
    """Image graph of ``surface`` under ``x -> lorentz @ x + shift``.

    Planes map to planes in closed form; other graphs are solved pointwise by
    bisection with an implicit-function gradient.
    """
    lam = np.asarray(lorentz, dtype=float)
    shift = np.zeros(4) if shift is None else np.asarray(shift, dtype=float)
    inv = np.linalg.inv(lam)
    if surface.plane is not None:
        slope, t0 = surface.plane
        covec = np.concatenate([[1.0], -np.asarray(slope)])
        new = covec @ inv
        offset = (t0 + new @ shift) / new[0]
        return tilted(-new[1:] / new[0], offset, name="flat" if np.allclose(new[1:], 0) else "tilted")

    def residual(tp, y):
        y4 = np.concatenate([tp[..., None], y], axis=-1) - shift
        x = y4 @ inv.T
        return x[..., 0] - surface.height(x[..., 1:]), x

    def height(y):
        y = np.asarray(y, dtype=float)
        shape = y.shape[:-1]
        lo = np.full(shape, -1.0)
        hi = np.full(shape, 1.0)
        lo, hi = _bracket(lambda t: residual(t, y)[0], lo, hi)
        return _bisect(lambda t: residual(t, y)[0], lo, hi)

    def gradient(y):
        y = np.asarray(y, dtype=float)
        tp = height(y)
        _, x = residual(tp, y)
        grad_t = surface.gradient(x[..., 1:])
        # d(residual)/dy^mu = inv[0, mu] - grad_t . inv[1:, mu]
        d = inv[0][None, :] - np.einsum("...k,km->...m", grad_t, inv[1:])
        return -d[..., 1:] / d[..., :1]

    vmax = _boosted_bound(surface.bound, lam)
    return CauchySurface(height, gradient, vmax, surface.name + "-image", dict(surface.params))


def _boosted_bound(bound, lam):
    # rapidity of the boost part bounds how far tilts can grow
    gamma = abs(lam[0, 0])
    speed = np.sqrt(max(0.0, 1.0 - 1.0 / gamma**2))
    return min(0.999999, (bound + speed) / (1.0 + bound * speed))


def _bracket(f, lo, hi, grow=2.0, max_iter=60):
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(max_iter):
        flo = f(lo)
        fhi = f(hi)
        bad_lo = flo > 0
        bad_hi = fhi < 0
        if not (bad_lo.any() or bad_hi.any()):
            return lo, hi
        width = hi - lo
        lo = np.where(bad_lo, lo - grow * width, lo)
        hi = np.where(bad_hi, hi + grow * width, hi)
    raise RuntimeError("failed to bracket root")


def _bisect(f, lo, hi, tol=1e-12):
    lo = lo.copy()
    hi = hi.copy()
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        up = f(mid) > 0
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class Foliation:
    """Family of Cauchy surfaces ``Sigma_t`` given by ``x0 = height(t, xvec)``.

    ``height`` must be strictly increasing in ``t``; ``rate`` is its
    ``t``-derivative and ``gradient`` its spatial gradient.  The time function
    ``tau`` is computed by bisection unless an analytic one is supplied.
    """

    height: Callable
    rate: Callable
    gradient: Callable
    bound: float
    name: str = "custom"
    params: dict = field(default_factory=dict)
    analytic_tau: Callable = None
    base: CauchySurface = None

    def surface_at(self, t):
        if self.base is not None:
            return self.base.shifted(t)
        return CauchySurface(
            lambda x: self.height(t, x),
            lambda x: self.gradient(t, x),
            self.bound,
            self.name + "-leaf",
            {**self.params, "t": float(t)},
        )

    @property
    def is_flat(self):
        """True when every leaf is a hyperplane ``x0 = const``."""
        return self.base is not None and self.base.flat_time is not None

    def normal(self, t, xvec):
        """Unit normal of the leaf through ``(t, xvec)``; ``t`` may be an array."""
        grad = self.gradient(t, np.asarray(xvec, dtype=float))
        g2 = np.sum(grad * grad, axis=-1)
        w = np.concatenate([np.ones(g2.shape)[..., None], grad], axis=-1)
        return w / np.sqrt(1.0 - g2)[..., None]

    def speed(self, t, xvec):
        """Normal speed ``v`` fixed by ``d tau = n / v``."""
        grad = self.gradient(t, np.asarray(xvec, dtype=float))
        g2 = np.sum(grad * grad, axis=-1)
        return self.rate(t, xvec) / np.sqrt(1.0 - g2)

    def tau(self, x):
        """Leaf label ``t`` with ``x`` on ``Sigma_t``; ``x`` has shape (..., 4)."""
        x = np.asarray(x, dtype=float)
        if self.analytic_tau is not None:
            return self.analytic_tau(x)
        x0 = x[..., 0]
        xv = x[..., 1:]

        def f(t):
            return self.height(t, xv) - x0

        lo, hi = _bracket(f, x0 - 1.0, x0 + 1.0)
        return _bisect(f, lo, hi)

    def describe(self):
        return {"name": self.name, "params": _jsonable(self.params)}


def flat_foliation(base):
    """Translates ``Sigma + t e_0`` of a base surface; ``tau(x) = x0 - t(xvec)``."""
    return Foliation(
        height=lambda t, x: base.height(x) + t,
        rate=lambda t, x: np.ones(np.shape(x)[:-1]),
        gradient=lambda t, x: base.gradient(x),
        bound=base.bound,
        name="flat",
        params={"base": base.describe()},
        analytic_tau=lambda x: x[..., 0] - base.height(x[..., 1:]),
        base=base,
    )


def relaxing_bump_foliation(amplitude, width, relax_time):
    """Leaves ``x0 = t + amplitude * rho(t) * exp(-|x|^2 / width^2)``.

    ``rho(t) = (1 - tanh(t / relax_time)) / 2`` relaxes the bump from full
    height in the past to flat in the future.  Monotone in ``t`` when
    ``amplitude < 2 * relax_time``.
    """
    if relax_time <= 0:
        raise ValueError("relax_time must be positive")
    if abs(amplitude) >= 2.0 * relax_time:
        raise ValueError("leaves are not monotone in t; need |amplitude| < 2 relax_time")
    bound = np.sqrt(2.0) * abs(amplitude) * np.exp(-0.5) / width
    if bound >= 1.0:
        raise InvalidSurfaceError(f"leaves have gradient bound {bound:.4g} >= 1")

    def profile(x):
        x = np.asarray(x, dtype=float)
        return np.exp(-np.sum(x * x, axis=-1) / width**2)

    def rho(t):
        return 0.5 * (1.0 - np.tanh(t / relax_time))

    def drho(t):
        return -0.5 / (relax_time * np.cosh(t / relax_time) ** 2)

    def height(t, x):
        return t + amplitude * rho(t) * profile(x)

    def rate(t, x):
        return 1.0 + amplitude * drho(t) * profile(x)

    def gradient(t, x):
        x = np.asarray(x, dtype=float)
        scale = -2.0 * amplitude * rho(t) * profile(x) / width**2
        return scale[..., None] * x

    params = {"amplitude": float(amplitude), "width": float(width), "relax_time": float(relax_time)}
    return Foliation(height, rate, gradient, float(bound), "relaxing-bump", params)


def foliation_residuals(foliation, points, step=1e-4):
    """Membership defect and ``|d tau - n / v|`` at space-time points (n, 4).

    Returns a pair of arrays: ``|height(tau(x), xvec) - x0|`` and the max-norm
    residual of the central-difference gradient of ``tau`` against ``n_mu / v``.
    """
    x = np.asarray(points, dtype=float)
    t = foliation.tau(x)
    member = np.abs(foliation.height(t, x[:, 1:]) - x[:, 0])
    dtau = np.empty_like(x)
    for mu in range(4):
        e = np.zeros(4)
        e[mu] = step
        dtau[:, mu] = (foliation.tau(x + e) - foliation.tau(x - e)) / (2 * step)
    n = foliation.normal(t, x[:, 1:])
    n_low = n * np.array([1.0, -1.0, -1.0, -1.0])
    v = foliation.speed(t, x[:, 1:])
    resid = np.abs(dtau - n_low / v[:, None]).max(axis=-1)
    return member, resid
