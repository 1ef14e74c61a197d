"""Dirac evolution between Cauchy surfaces via mass-shell Fourier transforms."""

from .clifford import (
    GammaBasis,
    SpinLorentzPair,
    boost_sl2c,
    gamma_standard,
    rotation_sl2c,
    slash,
    slash_covariant,
    spin_from_sl2c,
)
from .dynamics import (
    EvolutionTrajectory,
    FourPotential,
    bump_potential,
    evolve_full,
    picard_solve,
    rk4_solve,
    zero_potential,
)
from .fields import Grid3, MassShellField, Momentum3Field, SurfaceField, bump_surface_field, norm
from .massshell import complex_lift, disc_map_build, energy, projector
from .surfaces import (
    CauchySurface,
    Foliation,
    bump,
    flat,
    flat_foliation,
    relaxing_bump_foliation,
    tilted,
)
from .transforms import f_0m, f_3m, f_m3, f_msigma, f_sigma_m, free_evolve

__version__ = "0.1.0"

__all__ = [
    "CauchySurface", "EvolutionTrajectory", "Foliation", "FourPotential", "GammaBasis", "Grid3",
    "MassShellField", "Momentum3Field", "SpinLorentzPair", "SurfaceField", "boost_sl2c", "bump",
    "bump_potential", "bump_surface_field", "complex_lift", "disc_map_build", "energy",
    "evolve_full", "f_0m", "f_3m", "f_m3", "f_msigma", "f_sigma_m", "flat", "flat_foliation",
    "free_evolve", "gamma_standard", "norm", "picard_solve", "projector", "relaxing_bump_foliation",
    "rk4_solve", "rotation_sl2c", "slash", "slash_covariant", "spin_from_sl2c", "tilted",
    "zero_potential",
]
