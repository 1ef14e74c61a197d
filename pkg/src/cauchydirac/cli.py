"""Command-line driver: ``cauchydirac {evolve,check,transform} <config>``.

Exit codes: 0 every budget met, 1 a check or budget failed, 2 invalid
configuration, 3 runtime error.  Artifacts go to ``<out>/<scenario-name>/``.
"""

import argparse
import csv
import json
import sys
import time
import traceback
import warnings

import numpy as np

from . import scenario as scenario_mod
from .checks import CheckResult, run_suite
from .dynamics import ConvergenceWarning, causal_leakage, picard_solve, rk4_solve, support_points
from .fieldio import export_csv, save_field
from .fields import norm, spectral_tail_fraction
from .transforms import TAGS, execute, f_msigma, f_sigma_m, plan_transform

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
SUMMARY_SCHEMA = 1
FAILURE_MARKER = "FAILED"
TAIL_WARNING = 1e-8


def _write_json(path, payload):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _budgeted(name, value, budget, relation="<=", scale=1.0, scalable=True):
    return CheckResult(name, float(value), float(budget), relation, scalable=scalable,
                       budget_scale=scale)


def _prepare_dir(path):
    path.mkdir(parents=True, exist_ok=True)
    marker = path / FAILURE_MARKER
    if marker.exists():
        marker.unlink()
    return path


def _mark_failed(path, reason):
    path.mkdir(parents=True, exist_ok=True)
    (path / FAILURE_MARKER).write_text(reason.rstrip() + "\n")


def run_evolve(sc, out_root=None, tolerance_scale=1.0, log=print):
    """Evolve the scenario datum and write all artifacts.

    Returns the exit status.  ``summary.json`` holds no timings, so reruns
    of the same scenario and seed reproduce it byte for byte.
    """
    out = _prepare_dir(sc.output_dir(out_root))
    fields_dir = _prepare_dir(out / "fields")
    timings = {}
    t_start = time.perf_counter()
    chi = sc.datum()
    foliation = sc.foliation()
    potential = sc.potential()
    solver = sc.solver
    t0, t1, steps = float(solver["t0"]), float(solver["t1"]), int(solver["steps"])
    chi_hat = f_msigma(chi, sc.momentum(), sc.mass)
    timings["datum"] = time.perf_counter() - t_start

    tic = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        if solver["method"] == "rk4":
            traj = rk4_solve(chi_hat, t0, t1, steps, foliation, potential, chi.grid,
                             int(solver["store_every"]))
        else:
            traj = picard_solve(chi_hat, t0, t1, steps, int(solver["iterations"]), foliation,
                                potential, chi.grid, float(solver["tolerance"]))
    timings["solve"] = time.perf_counter() - tic
    notes = [str(w.message) for w in caught]

    tic = time.perf_counter()
    norms = traj.norms()
    initial = norms[0] if norms[0] > 0 else 1.0
    with (out / "norms.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "norm", "relative_drift"])
        for t, nv in zip(traj.times, norms):
            writer.writerow([repr(float(t)), repr(float(nv)), repr(float(abs(nv - norms[0]) / initial))])

    support = support_points(chi)
    inflate = 2 * chi.grid.spacing
    leaks = []
    with (out / "leakage.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "leakage_fraction"])
        for t, state in zip(traj.times, traj.states):
            restricted = f_sigma_m(state, foliation.surface_at(t), chi.grid)
            leak = causal_leakage(restricted, support, inflate)
            leaks.append(leak)
            writer.writerow([repr(float(t)), repr(float(leak))])
    timings["diagnostics"] = time.perf_counter() - tic

    tic = time.perf_counter()
    manifest = {"format": "cauchydirac-field", "kind": "mass-shell",
                "description": "interaction-picture states phi_t", "states": []}
    for i, (t, state) in enumerate(zip(traj.times, traj.states)):
        name = f"state_{i:04d}.cdf"
        save_field(fields_dir / name, state, extra={"t": float(t)})
        manifest["states"].append({"file": name, "t": float(t), "norm": float(norms[i])})
    final = f_sigma_m(traj.final, foliation.surface_at(t1), chi.grid)
    final_name = "final_surface.cdf"
    if final.surface.name in ("flat", "tilted", "bump"):
        save_field(fields_dir / final_name, final, extra={"t": t1})
    else:
        np.save(fields_dir / "final_surface_values.npy", final.values)
        final_name = "final_surface_values.npy"
    export_csv(fields_dir / "final_surface.csv", final)
    manifest["final_surface"] = {"file": final_name, "csv": "final_surface.csv", "t": t1,
                                 "surface": final.surface.describe()}
    _write_json(fields_dir / "manifest.json", manifest)
    timings["export"] = time.perf_counter() - tic

    budgets = sc.budgets
    results = [
        _budgeted("unitarity_drift", traj.unitarity_drift(), budgets["unitarity_drift"],
                  scale=tolerance_scale),
        _budgeted("causal_leakage", max(leaks), budgets["causal_leakage"], scale=tolerance_scale),
    ]
    if traj.method == "rk4":
        results.append(_budgeted("bundle_residual", traj.diagnostics["max_bundle_residual"],
                                 budgets["bundle_residual"], scale=tolerance_scale))
    else:
        results.append(_budgeted("picard_increment", traj.diagnostics["final_increment"],
                                 budgets["picard_increment"], scale=tolerance_scale))
    tail = spectral_tail_fraction(chi_hat)
    if tail > TAIL_WARNING:
        notes.append(f"spectral mass {tail:.2e} outside |p| <= P/2 exceeds {TAIL_WARNING:g}; "
                     "the momentum grid truncates the datum")
    passed = all(r.passed for r in results)
    summary = {
        "schema_version": SUMMARY_SCHEMA,
        "scenario": sc.name,
        "seed": sc.seed,
        "tolerance_scale": tolerance_scale,
        "config": sc.describe(),
        "solver": {"method": traj.method, **{k: v for k, v in traj.diagnostics.items()}},
        "initial_norm": float(norm(chi)),
        "results": {r.name: {"value": r.value, "budget": r.effective_budget,
                             "relation": r.relation, "passed": bool(r.passed)} for r in results},
        "unitarity_drift": float(traj.unitarity_drift()),
        "spectral_tail": tail,
        "warnings": notes,
        "passed": passed,
    }
    _write_json(out / "summary.json", summary)
    timings["total"] = time.perf_counter() - t_start
    _write_json(out / "timings.json", timings)
    for r in results:
        log(r.line(show_runtime=False))
    for note in notes:
        log(f"warning: {note}")
    if not passed:
        failed = [r.name for r in results if not r.passed]
        _mark_failed(out, "budget breach: " + ", ".join(failed))
        return EXIT_CHECK
    return EXIT_OK


def run_checks(sc, suites=None, out_root=None, tolerance_scale=1.0, log=print):
    """Run check suites and write ``checks.json``; returns the exit status."""
    suites = list(suites or sc.config["checks"])
    out = _prepare_dir(sc.output_dir(out_root))
    report = {"schema_version": SUMMARY_SCHEMA, "scenario": sc.name, "seed": sc.seed,
              "tolerance_scale": tolerance_scale, "suites": {}}
    ok = True
    for suite in suites:
        tic = time.perf_counter()
        results = run_suite(suite, sc, tolerance_scale)
        for r in results:
            log(f"[{suite}] {r.line()}")
        ok &= all(r.passed for r in results)
        report["suites"][suite] = {"runtime": time.perf_counter() - tic,
                                   "passed": all(r.passed for r in results),
                                   "checks": [r.as_dict() for r in results]}
    report["passed"] = ok
    _write_json(out / "checks.json", report)
    if not ok:
        failed = [c["name"] for s in report["suites"].values() for c in s["checks"] if not c["passed"]]
        _mark_failed(out, "failed checks: " + ", ".join(failed))
        return EXIT_CHECK
    return EXIT_OK


def run_transform(sc, source, target, out_root=None, log=print):
    """Transform the scenario datum between representations.

    The operand is the datum on the initial leaf, carried to ``source``
    first when needed; ``Sigma`` and ``0`` targets use the leaf at
    ``solver.t1``.
    """
    out = _prepare_dir(sc.output_dir(out_root))
    fields_dir = _prepare_dir(out / "fields")
    chi = sc.datum()
    momentum = sc.momentum()
    target_surface = sc.foliation().surface_at(float(sc.solver["t1"]))
    if source == "Sigma":
        operand = chi
    else:
        prep = plan_transform("Sigma", source, chi.grid, momentum, sc.mass, chi.surface)
        operand = execute(prep, chi)
    plan = plan_transform(source, target, chi.grid, momentum, sc.mass,
                          chi.surface if source == "Sigma" else None,
                          target_surface if target in ("Sigma", "0") else None)
    tic = time.perf_counter()
    result = execute(plan, operand)
    elapsed = time.perf_counter() - tic
    stem = f"transform_{source}_to_{target}"
    save_field(fields_dir / f"{stem}.cdf", result, extra={"plan": plan.describe()})
    export_csv(fields_dir / f"{stem}.csv", result)
    report = {"plan": plan.describe(), "source_norm": norm(operand), "target_norm": norm(result),
              "runtime": elapsed, "file": f"fields/{stem}.cdf"}
    _write_json(out / f"{stem}.json", report)
    log(f"{source} -> {target}: norm {report['source_norm']:.6e} -> {report['target_norm']:.6e} "
        f"({'fft' if plan.fast else 'direct'}, {elapsed:.1f} s)")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="cauchydirac", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="scenario JSON file")
    common.add_argument("--out", help="output root (default: the scenario's 'output')")
    common.add_argument("--threads", type=int, help="worker threads for the transform kernels")
    common.add_argument("--tolerance-scale", type=float, default=1.0,
                        help="multiply every scalable budget by this factor")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("evolve", parents=[common], help="run the scenario evolution")
    chk = sub.add_parser("check", parents=[common], help="run check suites")
    chk.add_argument("--suite", action="append", choices=scenario_mod.SUITES,
                     help="suite to run (repeatable; default: the scenario's 'checks')")
    tr = sub.add_parser("transform", parents=[common], help="transform the datum")
    tr.add_argument("--from", dest="source", required=True, choices=TAGS)
    tr.add_argument("--to", dest="target", required=True, choices=TAGS)
    return parser


def _set_threads(k):
    import numba

    limit = numba.config.NUMBA_NUM_THREADS
    if k < 1:
        raise scenario_mod.ConfigError([("--threads", f"must be >= 1, got {k}")])
    if k > limit:
        print(f"note: --threads {k} exceeds the {limit} available; using {limit}", file=sys.stderr)
        k = limit
    numba.set_num_threads(k)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if not args.tolerance_scale > 0:
            raise scenario_mod.ConfigError([("--tolerance-scale", "must be > 0")])
        sc = scenario_mod.load(args.config)
        if args.threads is not None:
            _set_threads(args.threads)
    except scenario_mod.ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "evolve":
            return run_evolve(sc, args.out, args.tolerance_scale)
        if args.command == "check":
            return run_checks(sc, args.suite, args.out, args.tolerance_scale)
        return run_transform(sc, args.source, args.target, args.out)
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        out = sc.output_dir(args.out)
        _mark_failed(out, f"{type(exc).__name__}: {exc}\n{traceback.format_exc()}")
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
