"""Mass-shell geometry on the real and the complexified hyperboloid.

Energies, sheet parametrisation, Dirac-bundle projectors, the invariant
measure weight, the inequalities satisfied on the complex shell and the
holomorphic disc map used to push points away from ``p0 = 0``.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .clifford import gamma_standard, slash

# Constants of the disc map construction.
DISC_DELTA = 1.0 / 12.0
DISC_EPS = 1.0 / 3.0
DISC_GAMMA = 1.0 / 6.0
DISC_H = 2.0 * (np.sqrt(1.0 - DISC_DELTA**2) - DISC_EPS - DISC_DELTA)


class RamificationWarning(UserWarning):
    """Raised when a complex shell point sits where both branches meet."""


def energy(pvec, m):
    """Positive energy ``sqrt(|p|^2 + m^2)`` of real 3-momenta (trailing axis 3)."""
    if m <= 0:
        raise ValueError("mass must be positive")
    pvec = np.asarray(pvec, dtype=float)
    return np.sqrt(np.sum(pvec * pvec, axis=-1) + m * m)


def shell_momenta(pvec, sheet, m):
    """Four-momenta ``(sheet * E, pvec)`` for real 3-momenta on one sheet."""
    pvec = np.asarray(pvec, dtype=float)
    e = sheet * energy(pvec, m)
    return np.concatenate([e[..., None], pvec], axis=-1)


@dataclass(frozen=True)
class OnShellMomentum:
    """A point of the real mass shell."""

    pvec: np.ndarray
    sheet: int
    m: float = 1.0

    def __post_init__(self):
        if self.sheet not in (1, -1):
            raise ValueError("sheet must be +1 or -1")
        object.__setattr__(self, "pvec", np.asarray(self.pvec, dtype=float))

    @property
    def p0(self):
        return self.sheet * float(energy(self.pvec, self.m))

    @property
    def four(self):
        return np.concatenate([[self.p0], self.pvec])


def projector(p):
    """Orthogonal projector ``(pslash + m) gamma^0 / (2 p0)`` onto the Dirac bundle.

    Accepts an :class:`OnShellMomentum` or the pair ``(four_momenta, m)`` as a
    tuple, where ``four_momenta`` has shape (..., 4).
    """
    if isinstance(p, OnShellMomentum):
        four, m = p.four, p.m
    else:
        four, m = p
        four = np.asarray(four)
    g0 = gamma_standard().gamma[0]
    ps = slash(four) + m * np.eye(4)
    return ps @ g0 / (2.0 * four[..., 0, None, None])


def measure_weight(p):
    """Signed weight ``m^2 / p0`` of the invariant measure (negative on the lower sheet)."""
    return p.m * p.m / p.p0


@dataclass(frozen=True)
class ComplexShellPoint:
    """A point ``(p0, pvec)`` of the complexified mass shell."""

    pvec: np.ndarray
    p0: complex
    branch: int
    m: float = 1.0

    @property
    def four(self):
        return np.concatenate([[self.p0], self.pvec])

    @property
    def ramified(self):
        return self.p0 == 0

    def shell_defect(self):
        """``|p0^2 - pvec.pvec - m^2| / m^2``."""
        return abs(self.p0**2 - np.sum(self.pvec**2) - self.m**2) / self.m**2


def complex_lift(pvec, branch, m=1.0):
    """Lift a complex 3-momentum to the complex shell on the given branch.

    ``p0 = branch * sqrt(pvec.pvec + m^2)`` with the principal root, so the
    ``+1`` branch has ``Re p0 >= 0``.  A :class:`RamificationWarning` is issued
    when ``pvec.pvec + m^2`` vanishes.
    """
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    if m <= 0:
        raise ValueError("mass must be positive")
    pvec = np.asarray(pvec, dtype=complex)
    radicand = np.sum(pvec * pvec) + m * m
    if abs(radicand) <= 1e-14 * m * m:
        warnings.warn("complex shell point at a ramification point, p0 = 0", RamificationWarning)
        return ComplexShellPoint(pvec, 0j, branch, m)
    return ComplexShellPoint(pvec, branch * np.sqrt(radicand), branch, m)


def complex_lift_many(pvecs, branches, m=1.0):
    """Vectorised lift: ``pvecs`` shape (n, 3) complex, ``branches`` shape (n,).

    Returns complex four-momenta of shape (n, 4).  No ramification check.
    """
    pvecs = np.asarray(pvecs, dtype=complex)
    p0 = np.asarray(branches) * np.sqrt(np.sum(pvecs * pvecs, axis=-1) + m * m)
    return np.concatenate([p0[..., None], pvecs], axis=-1)


def exp_bound_constant(eps, m):
    """Explicit constant ``C`` in ``m v |pvec| <= C (m/12 v |p0|) exp(eps |Im pvec|)``.

    The estimate ``m v |pvec| <= sqrt3 (|p0| v |Im pvec|)`` together with
    ``s <= (1 + eps s) / eps`` gives ``C = sqrt3 * max(1, 12 / (eps m))``.
    """
    return np.sqrt(3.0) * max(1.0, 12.0 / (eps * m))


@dataclass
class ShellInequalityReport:
    """Outcome of the four complex-shell inequalities over a set of points.

    Each ``slack_*`` is the minimum over points of (right side - left side);
    a bound holds when its slack is non-negative up to roundoff.
    """

    im_p0: bool
    im_norm: bool
    norm: bool
    exponential: bool
    slack_im_p0: float
    slack_im_norm: tuple
    slack_norm: tuple
    empirical_constant: float
    constant: float
    eps: float
    count: int

    @property
    def passed(self):
        return self.im_p0 and self.im_norm and self.norm and self.exponential


def check_shell_inequalities(points, eps=DISC_EPS, rtol=1e-12):
    """Check the complex-shell inequalities on one point or a batch.

    Parameters
    ----------
    points : ComplexShellPoint or tuple (four, m)
        A single point, or complex four-momenta of shape (n, 4) with mass ``m``.
    eps : float
        Exponent rate in the exponential bound.
    rtol : float
        Relative roundoff allowance applied to each comparison.

    Returns
    -------
    ShellInequalityReport
        The exponential bound is checked against :func:`exp_bound_constant`;
        the smallest constant that works on the sample is reported as
        ``empirical_constant``.
    """
    if isinstance(points, ComplexShellPoint):
        four = points.four[None, :]
        m = points.m
    else:
        four, m = points
        four = np.atleast_2d(np.asarray(four, dtype=complex))
    p0 = four[:, 0]
    pv = four[:, 1:]
    im_p0 = np.abs(p0.imag)
    im_pv = np.linalg.norm(pv.imag, axis=-1)
    im_p = np.linalg.norm(four.imag, axis=-1)
    abs_pv = np.linalg.norm(pv, axis=-1)
    abs_p = np.linalg.norm(four, axis=-1)
    big = np.maximum(m, abs_pv)

    slack = {
        "im_p0": (im_pv - im_p0, im_pv),
        "im_lower": (im_p - im_pv, im_p),
        "im_upper": (np.sqrt(2.0) * im_pv - im_p, im_p),
        "lower": (abs_p - m, abs_p),
        "upper": (np.sqrt(3.0) * big - abs_p, abs_p),
    }
    ok = {k: bool(np.all(v >= -rtol * (1.0 + scale))) for k, (v, scale) in slack.items()}
    low = {k: float(v.min()) for k, (v, _) in slack.items()}
    ratio = big / (np.maximum(m / 12.0, np.abs(p0)) * np.exp(eps * im_pv))
    const = exp_bound_constant(eps, m)
    emp = float(ratio.max())
    return ShellInequalityReport(
        im_p0=ok["im_p0"],
        im_norm=ok["im_lower"] and ok["im_upper"],
        norm=ok["lower"] and ok["upper"],
        exponential=bool(emp <= const * (1 + rtol)),
        slack_im_p0=low["im_p0"],
        slack_im_norm=(low["im_lower"], low["im_upper"]),
        slack_norm=(low["lower"], low["upper"]),
        empirical_constant=emp,
        constant=float(const),
        eps=eps,
        count=len(four),
    )


def random_complex_shell(rng, count, m=1.0, im_max=5.0, re_max=10.0):
    """Random complex shell points with ``|Im pvec| <= im_max * m``.

    Real parts are uniform in a ball of radius ``re_max * m``; imaginary parts
    uniform in a ball of radius ``im_max * m``; branches are random.
    """
    def ball(radius):
        d = rng.standard_normal((count, 3))
        d /= np.linalg.norm(d, axis=-1, keepdims=True)
        return d * (radius * rng.random(count) ** (1.0 / 3.0))[:, None]

    pv = ball(re_max * m) + 1j * ball(im_max * m)
    branches = rng.choice([-1, 1], size=count)
    return complex_lift_many(pv, branches, m)


@dataclass
class DiscMap:
    """Holomorphic map ``k`` of the closed unit disc into the complex shell.

    Built from a base point with ``|p0| <= m/12``; ``k(0)`` is the base point
    and ``|k0| >= m/12`` on the unit circle.
    """

    base: ComplexShellPoint
    qvec: np.ndarray
    r: complex
    eps: float = DISC_EPS
    delta: float = DISC_DELTA
    gamma: float = DISC_GAMMA
    report: dict = field(default_factory=dict)

    @property
    def m(self):
        return self.base.m

    def h(self, t):
        p = self.base
        norm_p = np.linalg.norm(p.pvec)
        return 2.0 * (norm_p - self.eps * self.m * self.r * t - p.p0 * self.r)

    def g(self, t):
        em_t = self.eps * self.m * np.asarray(t, dtype=complex)
        return (em_t**2 + 2.0 * self.base.p0 * em_t) / self.h(t)

    def __call__(self, t):
        """Four-vectors ``k(t)``, shape ``t.shape + (4,)``."""
        t = np.asarray(t, dtype=complex)
        g = self.g(t)
        k0 = self.base.p0 + self.eps * self.m * t + g * self.r
        kv = self.base.pvec + g[..., None] * self.qvec
        return np.concatenate([k0[..., None], kv], axis=-1)

    def verify(self, n_boundary=64, n_radii=16):
        """Sample the disc and check the construction's guarantees."""
        m = self.m
        angles = np.linspace(0.0, 2 * np.pi, n_boundary, endpoint=False)
        circle = np.exp(1j * angles)
        radii = np.linspace(0.0, 1.0, n_radii + 1)[1:]
        disc = np.concatenate([[0.0], (radii[:, None] * circle[None, :]).ravel()])
        k_disc = self(disc)
        k_circle = self(circle)
        shell = np.abs(k_disc[:, 0] ** 2 - np.sum(k_disc[:, 1:] ** 2, axis=-1) - m * m)
        origin = np.abs(self(0.0) - self.base.four).max()
        shift = np.linalg.norm(k_disc[:, 1:] - self.base.pvec, axis=-1).max()
        k0_min = np.abs(k_circle[:, 0]).min()
        h_min = np.abs(self.h(disc)).min()
        self.report = {
            "origin_defect": float(origin),
            "shell_defect": float(shell.max() / (m * m)),
            "max_shift": float(shift),
            "min_k0_circle": float(k0_min),
            "min_abs_h": float(h_min),
            "origin_ok": bool(origin <= 1e-12 * m),
            "shell_ok": bool(shell.max() <= 1e-12 * m * m),
            "shift_ok": bool(shift <= self.gamma * m * (1 + 1e-12)),
            "k0_ok": bool(k0_min >= self.delta * m * (1 - 1e-12)),
            "h_ok": bool(h_min >= DISC_H * m * (1 - 1e-12)),
        }
        return self.report

    @property
    def passed(self):
        keys = ("origin_ok", "shell_ok", "shift_ok", "k0_ok", "h_ok")
        return bool(self.report) and all(self.report[k] for k in keys)


def disc_map_build(p, n_boundary=64, n_radii=16):
    """Construct and verify the disc map through a shell point near ``p0 = 0``.

    Raises
    ------
    ValueError
        If ``|p0| > m/12`` or ``pvec = 0``.
    """
    m = p.m
    if abs(p.p0) > DISC_DELTA * m * (1 + 1e-12):
        raise ValueError(f"|p0| = {abs(p.p0):.4g} exceeds m/12")
    norm_p = np.linalg.norm(p.pvec)
    if norm_p == 0:
        raise ValueError("disc map needs pvec != 0")
    q = np.conj(p.pvec) / norm_p
    r = np.sqrt(np.sum(q * q))
    dm = DiscMap(p, q, complex(r))
    dm.verify(n_boundary, n_radii)
    return dm
