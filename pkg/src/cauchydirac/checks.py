"""Budgeted numerical checks, grouped into suites for the command line.

Every check yields a :class:`CheckResult` holding the measured value, its
budget and the comparison used.  Suites that exercise dynamics read their
datum, potential and grid from a :class:`~cauchydirac.scenario.Scenario`;
the others run at fixed resolutions chosen for desk-scale runtimes.
"""

import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import clifford, massshell
from .dynamics import (
    ConvergenceWarning,
    causal_leakage,
    evolve_full,
    relative_l2,
    split_step_reference,
    state_distance,
    support_points,
)
from .fields import (
    Grid3,
    MassShellField,
    Momentum3Field,
    PWSampleSpec,
    bump_surface_field,
    gaussian_shell_field,
    inner_3,
    inner_m,
    inner_sigma,
    norm,
    pw_norm_estimate,
)
from .surfaces import flat, tilted
from .symmetry import check_covariance, gauge_residual
from .transforms import f_3m, f_m3, f_msigma, f_msigma_points, f_sigma_m, free_evolve, shell_phase


@dataclass
class CheckResult:
    """Outcome of one budgeted measurement.

    ``relation`` is ``"<="`` (value within budget), ``"<"`` or ``">="``.
    Only ``scalable`` budgets are multiplied by a tolerance scale.
    """

    name: str
    value: float
    budget: float
    relation: str = "<="
    runtime: float = 0.0
    scalable: bool = True
    details: dict = field(default_factory=dict)
    budget_scale: float = 1.0

    @property
    def effective_budget(self):
        return self.budget * self.budget_scale if self.scalable else self.budget

    @property
    def passed(self):
        v, b = self.value, self.effective_budget
        if not np.isfinite(v):
            return False
        return {"<=": v <= b, "<": v < b, ">=": v >= b}[self.relation]

    def line(self, show_runtime=True):
        mark = "PASS" if self.passed else "FAIL"
        text = f"{mark} {self.name}: {self.value:.3e} {self.relation} {self.effective_budget:.3e}"
        return text + (f" ({self.runtime:.1f} s)" if show_runtime else "")

    def as_dict(self):
        out = asdict(self)
        out["budget"] = self.effective_budget
        out["passed"] = bool(self.passed)
        del out["budget_scale"]
        return out


class _Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def _rel_matrix(a, b):
    return float(np.abs(a - b).max() / max(1.0, np.abs(b).max()))


# --- algebra -----------------------------------------------------------------

def clifford_checks(seed=0, count=100):
    """Anticommutators, ``S^* g0 S = g0``, ``Lambda gamma = S^-1 gamma S`` and the homomorphism."""
    rng = np.random.default_rng(seed)
    with _Timer() as tm:
        basis = clifford.gamma_standard()
        defect = basis.anticommutator_defect()
        g0 = basis.gamma[0]
        herm = conj = hom_spin = hom_lorentz = 0.0
        for _ in range(count):
            a = clifford.spin_from_sl2c(clifford.random_sl2c(rng))
            b = clifford.spin_from_sl2c(clifford.random_sl2c(rng))
            s = a.spin
            scale = np.linalg.norm(s, 2) ** 2
            herm = max(herm, np.abs(s.conj().T @ g0 @ s - g0).max() / scale)
            lhs = np.einsum("mn,nab->mab", a.lorentz, basis.gamma)
            rhs = np.einsum("ab,mbc,cd->mad", np.linalg.inv(s), basis.gamma, s)
            conj = max(conj, np.abs(lhs - rhs).max() / scale)
            ab = clifford.spin_from_sl2c(a.sl2c @ b.sl2c)
            hom_spin = max(hom_spin, _rel_matrix(ab.spin, a.spin @ b.spin))
            hom_lorentz = max(hom_lorentz, _rel_matrix(ab.lorentz, a.lorentz @ b.lorentz))
    t = tm.elapsed / 4
    return [
        CheckResult("clifford.anticommutator", defect, 1e-10, runtime=t),
        CheckResult("clifford.spin_preserves_gamma0", herm, 1e-10, runtime=t),
        CheckResult("clifford.lorentz_conjugation", conj, 1e-10, runtime=t),
        CheckResult("clifford.homomorphism", max(hom_spin, hom_lorentz), 1e-10, runtime=t,
                    details={"spin": hom_spin, "lorentz": hom_lorentz}),
    ]


def projector_checks(seed=0, count=1000, m=1.0):
    """Projector identities on random momenta of both sheets."""
    rng = np.random.default_rng(seed)
    with _Timer() as tm:
        pv = rng.normal(scale=3.0, size=(count, 3))
        plus = massshell.shell_momenta(pv, 1, m)
        minus = massshell.shell_momenta(pv, -1, m)
        both = np.concatenate([plus, minus])
        proj = massshell.projector((both, m))
        eye = np.eye(4)
        idem = np.abs(proj @ proj - proj).max()
        herm = np.abs(proj - np.conj(np.swapaxes(proj, -1, -2))).max()
        trace = np.abs(np.trace(proj, axis1=-2, axis2=-1) - 2.0).max()
        complete = np.abs(proj[:count] + proj[count:] - eye).max()
        bundle = np.abs(clifford.slash(both) @ proj - m * proj).max()
    t = tm.elapsed / 5
    return [
        CheckResult("projector.idempotent", idem, 1e-12, runtime=t),
        CheckResult("projector.hermitian", herm, 1e-12, runtime=t),
        CheckResult("projector.trace_two", trace, 1e-12, runtime=t),
        CheckResult("projector.completeness", complete, 1e-12, runtime=t),
        CheckResult("projector.bundle", bundle, 1e-12, runtime=t),
    ]


# --- transforms ----------------------------------------------------------------

def _random_momentum3(grid, rng):
    vals = rng.standard_normal(grid.shape + (4,)) + 1j * rng.standard_normal(grid.shape + (4,))
    return Momentum3Field(grid, vals)


def _random_shell(grid, m, rng):
    vals = rng.standard_normal((2,) + grid.shape + (4,)) + 1j * rng.standard_normal((2,) + grid.shape + (4,))
    return MassShellField.projected(grid, m, vals)


def exact_identity_checks(seed=0, n=16, extent=3.0, m=1.0):
    """``f_3m`` and ``f_m3`` are mutually inverse and ``f_3m`` is an isometry."""
    rng = np.random.default_rng(seed)
    grid = Grid3(extent, n)
    with _Timer() as tm:
        phi = _random_momentum3(grid, rng)
        psi = _random_shell(grid, m, rng)
        back3 = f_3m(f_m3(phi, m))
        backm = f_m3(f_3m(psi), m)
        err3 = relative_l2(back3.values, phi.values)
        errm = state_distance(backm, psi)
        other = _random_shell(grid, m, rng)
        lhs = inner_3(f_3m(psi), f_3m(other))
        rhs = inner_m(psi, other)
        iso = abs(lhs - rhs) / (norm(psi) * norm(other))
    t = tm.elapsed / 3
    return [
        CheckResult("transforms.3m_after_m3", err3, 1e-13, runtime=t),
        CheckResult("transforms.m3_after_3m", errm, 1e-13, runtime=t),
        CheckResult("transforms.3m_isometry", iso, 1e-12, runtime=t),
    ]


def round_trip_error(surface, n, extent=2.0, radius=1.0, m=1.0):
    """Relative L2 error of ``f_sigma_m(f_msigma(chi))`` against ``chi`` for a bump datum."""
    grid = Grid3(extent, n)
    chi = bump_surface_field(surface, grid, radius=radius)
    back = f_sigma_m(f_msigma(chi, m=m), surface, grid)
    return relative_l2(back.values, chi.values)


def round_trip_checks(sizes=(16, 32), budgets=(1e-2, 2.5e-3), extent=2.0, slope=0.3,
                      planes=("flat", "tilted")):
    """Quadrature round trip on the plane ``x0 = 0`` and a tilted plane."""
    out = []
    surfaces = {"flat": flat(), "tilted": tilted((slope, 0.0, 0.0))}
    for label in planes:
        surface = surfaces[label]
        errs = []
        for n, budget in zip(sizes, budgets):
            with _Timer() as tm:
                err = round_trip_error(surface, n, extent)
            errs.append(err)
            out.append(CheckResult(f"round_trip.{label}.n{n}", err, budget, runtime=tm.elapsed))
        if label == "tilted" and errs[0] > 0 and errs[1] > 0:
            order = np.log(errs[0] / errs[1]) / np.log(sizes[1] / sizes[0])
            out.append(CheckResult(f"round_trip.{label}.order", float(order), 2.0, ">=",
                                   scalable=False, details={"errors": errs}))
    return out


def flat_path_checks(n=16, extent=2.0, m=1.0, dt=1.0):
    """FFT path against direct sums, and free evolution against the phase oracle."""
    grid = Grid3(extent, n)
    chi = bump_surface_field(flat(), grid)
    with _Timer() as tm:
        fast = f_msigma(chi, m=m, method="fft")
        slow = f_msigma(chi, m=m, method="direct")
        fwd = state_distance(slow, fast)
        back_fast = f_sigma_m(fast, flat(), grid, method="fft")
        back_slow = f_sigma_m(fast, flat(), grid, method="direct")
        bwd = relative_l2(back_slow.values, back_fast.values)
    t1 = tm.elapsed
    with _Timer() as tm:
        moved = free_evolve(chi, flat(dt), m=m, method="direct")
        oracle = f_sigma_m(shell_phase(fast, dt), flat(0.0), grid, method="fft")
        evo = relative_l2(moved.values, oracle.values)
    return [
        CheckResult("flat_path.fft_vs_direct", max(fwd, bwd), 1e-10, runtime=t1,
                    details={"forward": fwd, "backward": bwd}),
        CheckResult("flat_path.free_evolution", evo, 1e-10, runtime=tm.elapsed),
    ]


def surface_independence_checks(n=16, extent=6.0, slope=0.3, m=1.0):
    """``<phi, psi>`` of two free solutions on ``x0 = 0`` and on a tilted plane."""
    grid = Grid3(extent, n)
    momentum = grid.dual()
    with _Timer() as tm:
        phi = gaussian_shell_field(momentum, m, center=(0.5, 0.0, 0.0), width=0.8,
                                   offset=(0.3, 0.0, 0.0), sheets=(1.0, 0.4))
        psi = gaussian_shell_field(momentum, m, center=(0.3, 0.2, 0.0), width=0.9,
                                   offset=(-0.2, 0.1, 0.0), spinor=[0.4, 1.0, -0.3j, 0.2],
                                   sheets=(0.8, 0.6))
        values = []
        for surface in (flat(), tilted((slope, 0.0, 0.0))):
            a = f_sigma_m(phi, surface, grid)
            b = f_sigma_m(psi, surface, grid)
            values.append(inner_sigma(a, b))
        ref = inner_m(phi, psi)
        err = abs(values[1] - values[0]) / abs(values[0])
    return [CheckResult("scalar_product.surface_independence", err, 1e-2, runtime=tm.elapsed,
                        details={"flat": [values[0].real, values[0].imag],
                                 "tilted": [values[1].real, values[1].imag],
                                 "mass_shell": [ref.real, ref.imag]})]


# --- dynamics ------------------------------------------------------------------

def _quiet_evolve(*args, **kwargs):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        out = evolve_full(*args, **kwargs)
    return out, [str(w.message) for w in caught]


def _scenario_objects(scenario):
    return scenario.datum(), scenario.foliation(), scenario.potential(), scenario.solver


def causal_support_checks(scenario, inflate_cells=2):
    """Mass outside the inflated causal shadow after free and interacting evolution."""
    from .dynamics import zero_potential

    chi, foliation, potential, solver = _scenario_objects(scenario)
    t0, t1, steps = solver["t0"], solver["t1"], solver["steps"]
    support = support_points(chi)
    inflate = inflate_cells * chi.grid.spacing
    out = []
    for label, pot in (("free", zero_potential()), ("interacting", potential)):
        with _Timer() as tm:
            (final, _), _ = _quiet_evolve(chi, t1, foliation, pot, t0=t0, steps=steps,
                                          store_every=steps)
            leak = causal_leakage(final, support, inflate)
        out.append(CheckResult(f"causality.{label}_leakage", leak,
                               scenario.budgets.get("causal_leakage", 1e-3), runtime=tm.elapsed))
    return out


def unitarity_checks(scenario, split_steps=(25, 50, 100)):
    """Norm drift, Picard against RK4 and the split-step oracle."""
    chi, foliation, potential, solver = _scenario_objects(scenario)
    t0, t1, steps = solver["t0"], solver["t1"], solver["steps"]
    out = []
    with _Timer() as tm:
        (rk, traj), _ = _quiet_evolve(chi, t1, foliation, potential, t0=t0, method="rk4",
                                      steps=steps, store_every=solver["store_every"])
    out.append(CheckResult("unitarity.norm_drift", traj.unitarity_drift(),
                           scenario.budgets.get("unitarity_drift", 1e-3), runtime=tm.elapsed))
    with _Timer() as tm:
        (pic, ptraj), msgs = _quiet_evolve(chi, t1, foliation, potential, t0=t0, method="picard",
                                           steps=steps, iterations=solver["iterations"],
                                           tol=solver["tolerance"])
    out.append(CheckResult("unitarity.picard_vs_rk4", state_distance(ptraj.final, traj.final),
                           1e-4, runtime=tm.elapsed,
                           details={"picard_increments": ptraj.diagnostics["increments"],
                                    "warnings": msgs}))
    if foliation.is_flat and chi.surface.flat_time == 0.0:
        errs = []
        with _Timer() as tm:
            refs = [split_step_reference(chi, potential, t1 - t0, k) for k in split_steps]
            errs = [relative_l2(r.values, rk.values) for r in refs]
            self_diff = [relative_l2(a.values, b.values) for a, b in zip(refs, refs[1:])]
        out.append(CheckResult("unitarity.split_step_agreement", errs[-1], 1e-2,
                               runtime=tm.elapsed, details={"steps": list(split_steps),
                                                            "errors": errs}))
        ratio = self_diff[1] / self_diff[0] if self_diff[0] > 0 else 0.0
        out.append(CheckResult("unitarity.split_step_self_convergence", ratio, 1.0, "<",
                               scalable=False, details={"successive_differences": self_diff}))
    return out


def gauge_checks(scenario):
    """``A`` and ``A + d lambda`` evolutions agree after conjugation by ``Gamma_lambda``."""
    gauge_cfg = dict(scenario.config["gauge"])
    n = int(gauge_cfg.pop("n", scenario.grid().n))
    chi, foliation, potential, solver = _scenario_objects(scenario)
    if n != chi.grid.n:
        from .scenario import from_dict

        refined = scenario.describe()
        refined["grid"] = dict(refined["grid"], n=n)
        chi = from_dict(refined).datum()
    with _Timer() as tm:
        res = gauge_residual(chi, potential, scenario.gauge(), solver["t1"], foliation,
                             steps=solver["steps"], t0=solver["t0"])
    return [CheckResult("gauge.covariance", res["residual"], 1e-3, runtime=tm.elapsed,
                        details={"gauge_effect": res["gauge_effect"], "n": n})]


# --- covariance ----------------------------------------------------------------

def covariance_checks(rapidity=0.3, sizes=(16, 24), boost_extent=1.2, shift_n=16, shift_extent=2.0,
                      axis=3):
    """Grid-aligned translation and boost compatibility residuals."""
    grid = Grid3(shift_extent, shift_n)
    chi = bump_surface_field(flat(), grid)
    h = grid.spacing
    with _Timer() as tm:
        res = check_covariance(chi, [0.3, 2 * h, -h, 0.0])
    out = [CheckResult("covariance.translation", max(res["surface_shell"], res["solution_shell"]),
                       1e-10, runtime=tm.elapsed, details=res)]
    pair = clifford.spin_from_sl2c(clifford.boost_sl2c(rapidity, axis))
    boosts = []
    for n in sizes:
        with _Timer() as tm:
            chi = bump_surface_field(flat(), Grid3(boost_extent, n))
            res = check_covariance(chi, pair)
        boosts.append(res["surface_shell"])
        out.append(CheckResult(f"covariance.boost.n{n}", res["surface_shell"],
                               3e-2, runtime=tm.elapsed, details=res))
    out.append(CheckResult("covariance.boost.refinement", boosts[1] / boosts[0], 1.0, "<",
                           scalable=False, details={"residuals": boosts}))
    return out


# --- Paley-Wiener --------------------------------------------------------------

def paley_wiener_checks(radius=0.5, margin=0.2, order=3, samples=1000, n=16, extent=0.6,
                        scan_range=(1.0, 40.0), m=1.0):
    """Sampled Paley-Wiener norm stability and real-shell decay rate."""
    grid = Grid3(extent, n)
    chi = bump_surface_field(flat(), grid, radius=radius)
    alpha = np.sqrt(2.0) * radius + margin
    with _Timer() as tm:
        small = pw_norm_estimate(chi, alpha, order, PWSampleSpec(count=samples), m)
        large = pw_norm_estimate(chi, alpha, order, PWSampleSpec(count=2 * samples), m)
        change = abs(large - small) / small if small > 0 else np.inf
    out = [CheckResult("paley_wiener.sample_stability", change, 0.2, runtime=tm.elapsed,
                       details={"estimate": small, "doubled": large, "alpha": alpha})]
    with _Timer() as tm:
        slope, radii, env = decay_slope(chi, scan_range, m=m)
    out.append(CheckResult("paley_wiener.decay_slope", slope, -(order - 1) + 0.5, "<=",
                           scalable=False, runtime=tm.elapsed,
                           details={"envelope": env.tolist(), "radii": radii.tolist()}))
    return out


def decay_slope(chi, scan_range=(1.0, 40.0), count=32, directions=32, seed=0, m=1.0):
    """Least-squares slope of ``log envelope |Psi|`` against ``log <p>`` on the real shell.

    The envelope is the running maximum from above of the largest amplitude
    over sampled directions and both sheets at each radius.  The fit starts
    at the amplitude peak, so the low-momentum plateau is excluded, and the
    scan stops at three quarters of the chart grid's Nyquist momentum,
    beyond which the sampled sum aliases.

    Returns
    -------
    slope : float
    radii, envelope : ndarray
        The scanned radii and envelope values.
    """
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((directions, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    top = min(scan_range[1], 0.75 * np.pi / chi.grid.spacing)
    radii = np.geomspace(scan_range[0], top, count)
    pv = (radii[:, None, None] * d[None]).reshape(-1, 3)
    e = np.sqrt(np.sum(pv**2, axis=1) + m * m)
    vals = np.stack([f_msigma_points(chi, np.c_[s * e, pv], m) for s in (1, -1)])
    amp = np.linalg.norm(vals, axis=-1).reshape(2, count, directions).max(axis=(0, 2))
    env = np.maximum.accumulate(amp[::-1])[::-1]
    start = int(np.argmax(amp))
    size = np.sqrt(radii**2 + m * m)
    if count - start < 3:
        return np.nan, radii, env
    slope = np.polyfit(np.log(size[start:]), np.log(env[start:]), 1)[0]
    return float(slope), radii, env


# --- geometry ------------------------------------------------------------------

def geometry_checks(seed=0, count=10_000, m=1.0, disc_points=8):
    """Complex-shell inequalities and the disc-map claims."""
    rng = np.random.default_rng(seed)
    with _Timer() as tm:
        four = massshell.random_complex_shell(rng, count, m)
        rep = massshell.check_shell_inequalities((four, m))
    out = [CheckResult("geometry.shell_inequalities", 0.0 if rep.passed else 1.0, 0.0,
                       scalable=False, runtime=tm.elapsed,
                       details={"im_p0": rep.im_p0, "im_norm": rep.im_norm, "norm": rep.norm,
                                "exponential": rep.exponential,
                                "empirical_constant": rep.empirical_constant,
                                "constant": rep.constant})]
    worst = {"origin": 0.0, "shell": 0.0, "shift": 0.0, "k0": np.inf, "h": np.inf}
    with _Timer() as tm:
        for i in range(disc_points):
            if i == 0:
                p0, pv = 0j, np.array([1j * m, 0.0, 0.0])
            else:
                p0 = m / 12.0 * rng.uniform(0, 1) * np.exp(2j * np.pi * rng.uniform())
                w = rng.normal(size=3) + 1j * rng.normal(size=3)
                pv = w * np.sqrt((p0 * p0 - m * m) / np.sum(w * w))
            rep = massshell.disc_map_build(massshell.ComplexShellPoint(pv, p0, 1, m)).report
            worst["origin"] = max(worst["origin"], rep["origin_defect"])
            worst["shell"] = max(worst["shell"], rep["shell_defect"])
            worst["shift"] = max(worst["shift"], rep["max_shift"])
            worst["k0"] = min(worst["k0"], rep["min_k0_circle"])
            worst["h"] = min(worst["h"], rep["min_abs_h"])
    t = tm.elapsed / 5
    out += [
        CheckResult("geometry.disc_origin", worst["origin"], 1e-12, runtime=t),
        CheckResult("geometry.disc_shell", worst["shell"], 1e-12, runtime=t),
        CheckResult("geometry.disc_shift", worst["shift"], m / 6.0, scalable=False, runtime=t),
        CheckResult("geometry.disc_boundary_k0", worst["k0"], m / 12.0, ">=", scalable=False,
                    runtime=t),
        CheckResult("geometry.disc_denominator", worst["h"], massshell.DISC_H * m, ">=",
                    scalable=False, runtime=t),
    ]
    return out


# --- suites --------------------------------------------------------------------

def _seed(scenario):
    return scenario.seed if scenario is not None else 0


SUITE_CHECKS = {
    "algebra": lambda sc: clifford_checks(_seed(sc)) + projector_checks(_seed(sc)),
    "transforms": lambda sc: (exact_identity_checks(_seed(sc)) + round_trip_checks()
                              + flat_path_checks() + surface_independence_checks()),
    "causality": causal_support_checks,
    "dynamics": unitarity_checks,
    "covariance": lambda sc: covariance_checks(
        sc.config["covariance"]["rapidity"], tuple(sc.config["covariance"]["sizes"]),
        sc.config["covariance"]["extent"], axis=sc.config["covariance"]["axis"]),
    "gauge": gauge_checks,
    "paley-wiener": lambda sc: paley_wiener_checks(),
    "geometry": lambda sc: geometry_checks(_seed(sc)),
}


def run_suite(name, scenario=None, tolerance_scale=1.0):
    """Run a named suite; returns its list of :class:`CheckResult`."""
    if name not in SUITE_CHECKS:
        raise ValueError(f"unknown suite {name!r}")
    if scenario is None:
        from .scenario import canonical

        scenario = canonical()
    results = SUITE_CHECKS[name](scenario)
    for r in results:
        r.budget_scale = tolerance_scale
    return results
