"""Dirac matrices, Feynman slash and the spin cover of the Lorentz group.

Conventions used throughout the package:

* metric ``diag(+1, -1, -1, -1)``
* standard (Dirac) representation, ``gamma^0 = diag(I, -I)``,
  ``gamma^k = [[0, sigma_k], [-sigma_k, 0]]``
* four-vectors passed to :func:`slash` are contravariant
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

_I2 = np.eye(2, dtype=complex)
_Z2 = np.zeros((2, 2), dtype=complex)


@dataclass(frozen=True)
class GammaBasis:
    """Four Dirac matrices together with the metric they anticommute to."""

    gamma: np.ndarray
    metric: np.ndarray

    @property
    def lowered(self):
        """Matrices with a lower index, ``gamma_mu = g_mu_nu gamma^nu``."""
        return np.einsum("mn,nab->mab", self.metric, self.gamma)

    @property
    def alpha(self):
        """``gamma^0 gamma^k`` for k = 1, 2, 3."""
        return np.einsum("ab,kbc->kac", self.gamma[0], self.gamma[1:])

    def anticommutator_defect(self):
        """Max entry of ``{gamma^mu, gamma^nu} - 2 g^{mu nu} I`` over all pairs."""
        g = self.gamma
        ident = np.eye(4)
        worst = 0.0
        for mu in range(4):
            for nu in range(4):
                anti = g[mu] @ g[nu] + g[nu] @ g[mu]
                worst = max(worst, np.abs(anti - 2 * self.metric[mu, nu] * ident).max())
        return worst


@lru_cache(maxsize=1)
def gamma_standard():
    """Return the standard-representation :class:`GammaBasis`."""
    g0 = np.block([[_I2, _Z2], [_Z2, -_I2]])
    gk = [np.block([[_Z2, s], [-s, _Z2]]) for s in PAULI]
    gamma = np.stack([g0, *gk])
    gamma.setflags(write=False)
    metric = METRIC.copy()
    metric.setflags(write=False)
    return GammaBasis(gamma, metric)


def slash(v, basis=None):
    """Feynman slash ``gamma^mu g_mu_nu v^nu`` of contravariant vectors.

    Parameters
    ----------
    v : array_like, shape (..., 4)
        Contravariant components, real or complex.
    basis : GammaBasis, optional
        Defaults to the standard representation.

    Returns
    -------
    ndarray, shape (..., 4, 4)
    """
    basis = basis or gamma_standard()
    v = np.asarray(v)
    if v.shape[-1] != 4:
        raise ValueError(f"expected trailing dimension 4, got shape {v.shape}")
    return np.einsum("...m,mab->...ab", v, basis.lowered)


def slash_covariant(a, basis=None):
    """Slash of covariant components, ``gamma^mu a_mu``."""
    basis = basis or gamma_standard()
    a = np.asarray(a)
    if a.shape[-1] != 4:
        raise ValueError(f"expected trailing dimension 4, got shape {a.shape}")
    return np.einsum("...m,mab->...ab", a, basis.gamma)


def apply_slash(v, spinor, basis=None):
    """Compute ``slash(v) @ spinor`` without forming per-node matrices.

    ``v`` has shape (..., 4) and ``spinor`` shape (..., 4); leading axes
    broadcast.
    """
    if basis is None or basis is gamma_standard():
        return _apply_slash_standard(np.asarray(v), np.asarray(spinor))
    low = basis.lowered
    v = np.asarray(v)
    out = None
    for mu in range(4):
        term = v[..., mu, None] * np.einsum("ab,...b->...a", low[mu], spinor)
        out = term if out is None else out + term
    return out


def _apply_slash_standard(v, u):
    # slash(v) u = (v0 a - (v.sigma) b, (v.sigma) a - v0 b) with u = (a, b)
    v0, v1, v2, v3 = (v[..., k] for k in range(4))
    a0, a1, b0, b1 = (u[..., k] for k in range(4))
    vm, vp = v1 - 1j * v2, v1 + 1j * v2
    shape = np.broadcast_shapes(v.shape, u.shape)
    out = np.empty(shape, dtype=np.result_type(v, u, 1j))
    out[..., 0] = v0 * a0 - (v3 * b0 + vm * b1)
    out[..., 1] = v0 * a1 - (vp * b0 - v3 * b1)
    out[..., 2] = (v3 * a0 + vm * a1) - v0 * b0
    out[..., 3] = (vp * a0 - v3 * a1) - v0 * b1
    return out


def weyl_transfer():
    """Unitary ``T`` taking the Weyl (chiral) representation to the standard one.

    ``T = T^{-1} = (1/sqrt 2) [[I, I], [I, -I]]``.
    """
    return np.block([[_I2, _I2], [_I2, -_I2]]) / np.sqrt(2.0)


@dataclass(frozen=True)
class SpinLorentzPair:
    """A spin matrix ``S`` and the Lorentz matrix ``Lambda`` it covers.

    ``S^{-1} gamma^mu S = Lambda^mu_nu gamma^nu`` holds for the pair.
    """

    spin: np.ndarray
    lorentz: np.ndarray
    sl2c: np.ndarray

    def inverse(self):
        m_inv = np.linalg.inv(self.sl2c)
        return SpinLorentzPair(np.linalg.inv(self.spin), np.linalg.inv(self.lorentz), m_inv)

    def __matmul__(self, other):
        return SpinLorentzPair(
            self.spin @ other.spin, self.lorentz @ other.lorentz, self.sl2c @ other.sl2c
        )


def spin_from_sl2c(m, tol=1e-12):
    """Lift ``M`` in SL(2, C) to its Dirac spin matrix and Lorentz image.

    Parameters
    ----------
    m : array_like, shape (2, 2)
        Complex matrix with unit determinant.
    tol : float
        Allowed deviation of ``det M`` from one.

    Returns
    -------
    SpinLorentzPair
        ``S = T diag(M, (M^*)^{-1}) T`` and
        ``Lambda^mu_nu = tr(S^{-1} gamma^mu S gamma_nu) / 4``.

    Raises
    ------
    ValueError
        If ``M`` is not 2x2 or ``det M`` differs from one by more than ``tol``.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"SL(2,C) element must be 2x2, got {m.shape}")
    det = np.linalg.det(m)
    if abs(det - 1.0) > tol:
        raise ValueError(f"det M = {det:.6g}, expected 1")
    t = weyl_transfer()
    chiral = np.block([[m, _Z2], [_Z2, np.linalg.inv(m.conj().T)]])
    s = t @ chiral @ t
    basis = gamma_standard()
    s_inv = np.linalg.inv(s)
    conj = np.einsum("ab,mbc,cd->mad", s_inv, basis.gamma, s)
    lam = np.einsum("mab,nba->mn", conj, basis.lowered) / 4.0
    if np.abs(lam.imag).max() > 1e-9 * max(1.0, np.abs(lam).max()):
        raise ValueError("Lorentz image is not real; M is ill-conditioned")
    return SpinLorentzPair(s, lam.real, m)


def boost_sl2c(rapidity, axis=3):
    """SL(2, C) element of a pure boost along spatial ``axis`` (1, 2 or 3)."""
    sigma = PAULI[axis - 1]
    return np.cosh(rapidity / 2) * _I2 + np.sinh(rapidity / 2) * sigma


def rotation_sl2c(angle, axis=3):
    """SL(2, C) element of a rotation by ``angle`` about spatial ``axis``."""
    sigma = PAULI[axis - 1]
    return np.cos(angle / 2) * _I2 - 1j * np.sin(angle / 2) * sigma


def random_sl2c(rng):
    """Draw a random SL(2, C) element from complex Gaussian entries.

    The draw is rescaled by the principal square root of its determinant.
    """
    z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    return z / np.sqrt(np.linalg.det(z))


def minkowski_dot(a, b):
    """``g_mu_nu a^mu b^nu`` over the trailing axis (no conjugation)."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., 0] * b[..., 0] - np.sum(a[..., 1:] * b[..., 1:], axis=-1)
