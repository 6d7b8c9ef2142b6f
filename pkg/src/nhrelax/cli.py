"""Command-line entry point.

Subcommands: spectrum, propagator, relax, sweep, steady, interference,
localization, verify.  Every command writes CSV artifacts with a JSON sidecar
(full config echo, version, wall time); CSV bodies are byte-identical across
re-runs at fixed worker count.  Floats are printed with 17 significant digits
so artifacts are bit-stable inputs for the figure layer.

Exit codes: 0 success, 1 configuration error, 2 numerical failure (the
triggering error name lands in the sidecar), 3 verification-suite failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__, analysis, dynamics, models, oracle, propagator
from ._hnsteady import steady_occupations
from .errors import NhrelaxError
from .models import ModelSpec
from .ndlinalg import integrate_linear_ode, solve_steady_sylvester

WORKERS_ENV = "NHRELAX_WORKERS"

COMMANDS = ("spectrum", "propagator", "relax", "sweep", "steady",
            "interference", "localization", "verify")

MODEL_FIELDS = ("kind", "statistics", "L", "w", "kappa", "lambda_loss",
                "Gamma", "u", "gamma_ssh", "T_nnn", "phi")


def fmt(x):
    """17-significant-digit float formatting, lowercase exponent."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.16e}"


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) if not isinstance(v, str) else v for v in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_sidecar(path, config, extra=None, error=None, t_start=None):
    meta = {
        "tool": "nhrelax",
        "version": __version__,
        "command": config.get("command"),
        "config": config,
        "wall_time_s": None if t_start is None else time.time() - t_start,
    }
    if extra:
        meta.update(extra)
    if error is not None:
        meta["error"] = {"type": type(error).__name__, "message": str(error)}
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def sidecar_path(out):
    return out + ".json"


def build_parser():
    p = argparse.ArgumentParser(
        prog="nhrelax",
        description="relaxation laboratory for dissipative non-reciprocal lattices")
    p.add_argument("--config", help="JSON file with a flat config object "
                   "(mirrors the CLI flags; 'command' selects the subcommand)")
    sub = p.add_subparsers(dest="command")

    def add_model_args(sp):
        sp.add_argument("--model", choices=["hn", "ssh", "nnn"], default="hn")
        sp.add_argument("--stats", choices=["fermion", "boson"], default="fermion")
        sp.add_argument("--L", type=int, default=40)
        sp.add_argument("--w", type=float, default=1.0)
        sp.add_argument("--kappa", type=float, default=0.0)
        sp.add_argument("--lambda", dest="lambda_loss", type=float, default=0.0)
        sp.add_argument("--Gamma", type=float, default=0.0)
        sp.add_argument("--u", type=float, default=None)
        sp.add_argument("--gamma-ssh", dest="gamma_ssh", type=float, default=None)
        sp.add_argument("--T-nnn", dest="T_nnn", type=float, default=None)
        sp.add_argument("--phi", type=float, default=None)
        sp.add_argument("--out", required=True, help="output CSV path")

    sp = sub.add_parser("spectrum", help="eigenvalues of the effective Hamiltonian")
    add_model_args(sp)

    sp = sub.add_parser("propagator", help="P(m, j; t) curves and peak statistics")
    add_model_args(sp)
    sp.add_argument("--j", type=str, default="1", help="source site(s), comma separated")
    sp.add_argument("--m", type=int, default=None, help="probe site (default: last)")
    sp.add_argument("--t-max", type=float, default=None)
    sp.add_argument("--dt", type=float, default=None)
    sp.add_argument("--route", choices=["direct", "no_bounce", "simplified"],
                    default="direct")
    sp.add_argument("--peaks-out", default=None, help="also write peak-stats CSV")

    sp = sub.add_parser("relax", help="single relaxation run")
    add_model_args(sp)
    sp.add_argument("--init", choices=["vacuum", "uniform_ss_avg", "all_filled"],
                    default="vacuum")
    sp.add_argument("--eta", type=float, default=math.exp(-1))
    sp.add_argument("--sustain-factor", type=float, default=3.0)
    sp.add_argument("--trajectory-out", default=None,
                    help="also write the full (t, site, n, delta_n) trajectory CSV")

    sp = sub.add_parser("sweep", help="relaxation times along one parameter")
    add_model_args(sp)
    sp.add_argument("--axis", required=True,
                    choices=["L", "kappa", "lambda_loss", "Gamma", "w"])
    sp.add_argument("--values", required=True,
                    help="start:stop:step (inclusive) or comma-separated list")
    sp.add_argument("--init", choices=["vacuum", "uniform_ss_avg", "all_filled"],
                    default="vacuum")
    sp.add_argument("--eta", type=float, default=math.exp(-1))
    sp.add_argument("--sustain-factor", type=float, default=3.0)
    sp.add_argument("--workers", type=int, default=None,
                    help=f"worker processes (default ${WORKERS_ENV} or 1)")
    sp.add_argument("--evec-out", default=None,
                    help="also write the eigenvector-prediction overlay CSV")
    sp.add_argument("--study", choices=["scan", "saturation"], default="scan",
                    help="saturation: values are pump rates; fits tau_sat vs xi_prop")
    sp.add_argument("--etas", default=None,
                    help="saturation study thresholds, comma separated")

    sp = sub.add_parser("steady", help="steady-state occupations")
    add_model_args(sp)

    sp = sub.add_parser("interference", help="spectral-sum terms at one (m, j, t)")
    add_model_args(sp)
    sp.add_argument("--j", type=int, default=1)
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--t", type=float, default=None,
                    help="default: the peak time (L-j)/Delta")

    sp = sub.add_parser("localization", help="per-eigenvalue decay exponents")
    add_model_args(sp)

    sp = sub.add_parser("verify", help="oracle, route-equivalence and invariant suite")
    sp.add_argument("--out", default=None, help="optional report path")
    return p


def parse_values(text):
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("ranges are start:stop:step")
        start, stop, step = (float(x) for x in parts)
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + k * step for k in range(n)]
    return [float(x) for x in text.split(",")]


def spec_from_args(args):
    kind = {"hn": "HN", "ssh": "SSH", "nnn": "NNN"}[args.model]
    return ModelSpec(kind, args.stats, args.L, w=args.w, kappa=args.kappa,
                     lambda_loss=args.lambda_loss, Gamma=args.Gamma,
                     u=args.u, gamma_ssh=args.gamma_ssh,
                     T_nnn=args.T_nnn, phi=args.phi)


def config_echo(args):
    cfg = {k: v for k, v in vars(args).items() if k != "config"}
    return cfg


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_spectrum(args):
    spec = spec_from_args(args)
    evals = models.reference_eigenvalues(spec)
    rows = [(a + 1, E.real, E.imag) for a, E in enumerate(evals)]
    write_csv(args.out, ["alpha", "re_E", "im_E"], rows)
    sc = models.derived_scales(spec)
    return {"scales": dataclasses.asdict(sc)}


def _relax_row(spec, init, eta, sustain_factor):
    result, _, _ = dynamics.run_relaxation(spec, init=init, eta=eta,
                                           sustain_factor=sustain_factor)
    return (spec.kind.value, spec.statistics.value, spec.L, spec.w, spec.kappa,
            spec.lambda_loss, spec.Gamma, init, eta, result.tau,
            result.tau * spec.delta(), result.sustained)


RELAX_HEADER = ["model", "stat", "L", "w", "kappa", "lambda", "Gamma", "init",
                "eta", "tau", "tau_times_Delta", "sustained"]


def cmd_relax(args):
    spec = spec_from_args(args)
    row = _relax_row(spec, args.init, args.eta, args.sustain_factor)
    write_csv(args.out, RELAX_HEADER, [row])
    if args.trajectory_out:
        S0 = dynamics.initial_state(args.init, spec)
        Delta = spec.delta()
        tau = row[9]
        t_grid = np.arange(0.0, max(3.0 * tau, 10.0 / Delta), 0.05 / Delta)
        traj = dynamics.evolve_covariance(spec, S0, t_grid)
        n_ss = steady_occupations(spec)
        rows = []
        for it, t in enumerate(traj.t_grid):
            for site in range(1, spec.n_sites + 1):
                n_val = traj.occupations[it, site - 1]
                dn = abs(n_val - n_ss[site - 1]) / n_ss[site - 1]
                rows.append((t, site, n_val, dn))
        write_csv(args.trajectory_out, ["t", "site", "n", "delta_n"], rows)
        write_sidecar(sidecar_path(args.trajectory_out), config_echo(args),
                      extra={"Delta": Delta, "n_sites": spec.n_sites})
    return {"tau": row[9], "tau_times_Delta": row[10]}


def _sweep_task(payload):
    spec_json, axis, value, init, eta, sustain = payload
    base = ModelSpec.from_json(spec_json)
    kwargs = {axis: int(value) if axis == "L" else float(value)}
    spec = dataclasses.replace(base, **kwargs)
    return value, _relax_row(spec, init, eta, sustain)


def cmd_sweep(args):
    values = parse_values(args.values)
    if not values:
        raise ValueError("empty sweep value list")
    # seat the first swept value before validating the base model, so e.g. a
    # kappa sweep does not trip the stability guard on the default kappa
    setattr(args, args.axis, int(values[0]) if args.axis == "L" else float(values[0]))
    spec = spec_from_args(args)
    if args.study == "saturation":
        return _cmd_saturation(args, spec, values)
    workers = args.workers or int(os.environ.get(WORKERS_ENV, "1"))
    payloads = [(spec.to_json(), args.axis, v, args.init, args.eta,
                 args.sustain_factor) for v in values]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_task, payloads))
    else:
        results = [_sweep_task(p) for p in payloads]
    results.sort(key=lambda vr: vr[0])
    write_csv(args.out, RELAX_HEADER, [r for _, r in results])

    if args.evec_out:
        rows = []
        for v, _ in results:
            kwargs = {args.axis: int(v) if args.axis == "L" else float(v)}
            s = dataclasses.replace(spec, **kwargs)
            sc = models.derived_scales(s)
            tau_e = analysis.evec_prediction(s)
            inv_xi = 0.0 if np.isinf(sc.xi_loc) else 1.0 / sc.xi_loc
            rows.append((v, inv_xi, tau_e, tau_e * sc.Delta))
        write_csv(args.evec_out,
                  [args.axis, "inv_xi_loc", "tau_evec", "tau_evec_times_Delta"], rows)
        write_sidecar(sidecar_path(args.evec_out), config_echo(args))
    return {"points": len(results)}


def _cmd_saturation(args, spec, gammas):
    etas = ([float(x) for x in args.etas.split(",")]
            if args.etas else [0.2, 0.3, 0.4, 0.5])
    fits = {}
    rows_out = []
    for eta in etas:
        fit, rows = analysis.saturation_study(gammas, spec, eta)
        fits[fmt(eta)] = {"slope": fit.slope, "intercept": fit.intercept,
                          "r_squared": fit.r_squared}
        for r in rows:
            rows_out.append((eta, r["Gamma"], r["xi_prop"], r["tau_sat"],
                             r["tau_sat_times_delta"], r["L_at_saturation"]))
    write_csv(args.out, ["eta", "Gamma", "xi_prop", "tau_sat",
                         "tau_sat_times_Delta", "L_at_saturation"], rows_out)
    return {"fits": fits}


def cmd_propagator(args):
    spec = spec_from_args(args)
    m = args.m if args.m is not None else spec.n_sites
    sources = [int(x) for x in args.j.split(",")]
    sc = models.derived_scales(spec)
    rows = []
    peak_rows = []
    for j in sources:
        d = m - j
        t_hi = args.t_max if args.t_max is not None else 2.5 * max(d, 1) / sc.Delta
        dt = args.dt if args.dt is not None else 0.05 / sc.Delta
        t_grid = np.arange(0.0, t_hi + dt / 2, dt)
        if args.route == "direct":
            H = models.effective_hamiltonian(spec)
            cols = propagator.direct_column(H, j, t_grid)
            logp = np.full(len(t_grid), -np.inf)
            mags = np.abs(cols[:, m - 1])
            nz = mags > 0
            logp[nz] = 2.0 * np.log(mags[nz])
        elif args.route == "no_bounce":
            logp = propagator.p_no_bounce_log(spec, m, j, t_grid)
        else:
            logp = propagator.p_simplified_log(spec, m, j, t_grid)
        for t, lp in zip(t_grid, logp):
            rows.append((spec.kind.value, spec.statistics.value, spec.n_sites,
                         j, m, t, lp, args.route))
        if args.peaks_out and d >= 1 and spec.kind is models.Kind.HN:
            ps = propagator.peak_stats(spec, m, j)
            peak_rows.append((spec.kind.value, spec.statistics.value,
                              spec.n_sites, j, ps.d, ps.t_max, ps.height_log,
                              ps.sigma, ps.width_fitted, ps.xi_prop_implied,
                              sc.xi_prop if sc.xi_prop is not None else math.nan))
    write_csv(args.out, ["model", "stat", "L", "j", "m", "t", "logP", "route"], rows)
    if args.peaks_out:
        write_csv(args.peaks_out,
                  ["model", "stat", "L", "j", "d", "t_max", "log_height",
                   "sigma", "width_fitted", "xi_prop_implied", "xi_prop"],
                  peak_rows)
        write_sidecar(sidecar_path(args.peaks_out), config_echo(args))
    return {"curves": len(sources), "rows": len(rows)}


def cmd_steady(args):
    spec = spec_from_args(args)
    occ = steady_occupations(spec)
    rows = [(site, occ[site - 1]) for site in range(1, spec.n_sites + 1)]
    write_csv(args.out, ["site", "n_ss"], rows)
    return {"n_total": float(np.sum(occ))}


def cmd_interference(args):
    spec = spec_from_args(args)
    m = args.m if args.m is not None else spec.n_sites
    sc = models.derived_scales(spec)
    t = args.t if args.t is not None else (m - args.j) / sc.Delta
    terms = analysis.interference_terms(spec, m, args.j, t)
    ln10 = math.log(10.0)
    rows = [("term", a + 1, terms.log_magnitudes[a] / ln10, terms.phases[a])
            for a in range(len(terms.log_magnitudes))]
    rows.append(("stable_sum", 0, terms.stable_log10, 0.0))
    write_csv(args.out, ["kind", "alpha", "log10_mag", "phase"], rows)
    return {"m": m, "j": args.j, "t": t,
            "max_term_log10": terms.max_term_log10,
            "stable_log10": terms.stable_log10,
            "stable_route": terms.stable_route}


def cmd_localization(args):
    spec = spec_from_args(args)
    evals = models.reference_eigenvalues(spec)
    rows = []
    for a, E in enumerate(evals):
        rep = analysis.localization_extract(spec, E)
        for i, root in enumerate(rep.roots):
            rows.append((spec.kind.value, a + 1, E.real, E.imag, i,
                         root.real, root.imag, rep.exponents[i],
                         rep.phases[i], rep.xi_extracted))
    write_csv(args.out, ["model", "alpha", "re_E", "im_E", "iroot",
                         "re_root", "im_root", "A", "B", "xi"], rows)
    return {"eigenvalues": len(evals)}


# ---------------------------------------------------------------------------
# verify suite
# ---------------------------------------------------------------------------

def _verify_checks():
    """Yield (name, callable) pairs; each callable returns None or raises."""

    def oracle_equivalence():
        rng = np.random.default_rng(7)
        for L in (1, 2, 3):
            for _ in range(2):
                kappa = 0.0 if L == 1 else float(rng.uniform(0.1, 0.7))
                spec = ModelSpec("HN", "fermion", L, w=1.0, kappa=kappa,
                                 lambda_loss=float(rng.uniform(0.0, 0.4)),
                                 Gamma=float(rng.uniform(0.05, 0.3)))
                fl = oracle.build_fock_lindblad(spec)
                t_grid = np.array([0.0, 0.5, 1.5, 4.0])
                occ = oracle.lindblad_brute(fl, t_grid)
                traj = dynamics.evolve_covariance(
                    spec, dynamics.initial_state("vacuum", spec), t_grid)
                dev = np.max(np.abs(occ - traj.occupations))
                if dev > 1e-8:
                    raise NhrelaxError(f"oracle mismatch {dev:.2e} at L={L}")

    def third_quantization():
        for L in (2, 3):
            spec = ModelSpec("HN", "fermion", L, w=1.0, kappa=0.5, Gamma=0.1)
            rep = oracle.third_quantization_check(oracle.build_fock_lindblad(spec))
            if not rep.passed:
                raise NhrelaxError(f"third-quantization residuals too large at L={L}")

    def route_equivalence():
        spec = ModelSpec("HN", "fermion", 12, w=1.0, kappa=0.9, Gamma=0.05)
        H = models.effective_hamiltonian(spec)
        s = models.hn_spectral_analytic(spec)
        cols = propagator.direct_column(H, 2, [0.0, 1.0, 3.0])
        for it, t in ((1, 1.0), (2, 3.0)):
            for m in (5, 12):
                g_dir = cols[it][m - 1]
                g_spec = propagator.propagate_spectral(s, m, 2, t).G
                b = propagator.g_obc_bounce(m, 2, t, spec)
                g_b = np.exp(b.log_abs_g + 1j * b.phase)
                if abs(g_dir - g_spec) > 1e-8 or abs(g_dir - g_b) > 1e-8:
                    raise NhrelaxError(f"route mismatch at m={m}, t={t}")
        # no-bounce + wall-image corrections vs direct at strong non-reciprocity
        spec = ModelSpec("HN", "fermion", 40, w=1.0, kappa=0.999, Gamma=0.05)
        H = models.effective_hamiltonian(spec)
        for j in (10, 30):
            t_pk = propagator.peak_stats(spec, 40, j).t_max
            g_dir = propagator.direct_column(H, j, [0.0, t_pk])[-1][39]
            b = propagator.g_obc_bounce(40, j, t_pk, spec)
            rel = abs(math.exp(2.0 * b.log_abs_g) / abs(g_dir) ** 2 - 1.0)
            if rel > 1e-6:
                raise NhrelaxError(f"bounce-corrected route off by {rel:.2e} at j={j}")

    def localization_benchmark():
        spec = ModelSpec("HN", "fermion", 40, w=1.0, kappa=0.999, Gamma=0.05)
        sc = models.derived_scales(spec)
        for E in models.reference_eigenvalues(spec):
            rep = analysis.localization_extract(spec, E)
            if abs(rep.xi_extracted - sc.xi_loc) > 1e-6:
                raise NhrelaxError("localization extraction off at HN benchmark")

    def quadrature_vs_recurrence():
        for d in (0, 1, 5, 17, 40, 60):
            for x in (0.0, 0.3, 2.0, 11.0, 50.0):
                t = 1.0
                q = propagator.g_infinity(d, x, t)
                lm, ph = propagator.g_infinity_log(d, x, t)
                r = np.exp(lm + 1j * ph) if lm > -700 else 0.0
                if abs(q - r) > 1e-12:
                    raise NhrelaxError(f"quadrature/recurrence gap at d={d}, x={x}")

    def integrator_checks():
        spec = ModelSpec("HN", "fermion", 10, w=1.0, kappa=0.6, Gamma=0.1)
        H = models.effective_hamiltonian(spec)
        integrate_linear_ode(-1j * H, np.eye(10), [0.0, 1.0, 2.5], verify=True)
        traj = dynamics.evolve_covariance(
            spec, dynamics.initial_state("vacuum", spec),
            np.array([0.0, 1.0, 3.0]), verify=True)
        S_ode = None
        # steady state: Sylvester vs kron vectorization vs long-time ODE
        S_sylv = solve_steady_sylvester(H, spec.Gamma)
        n = 10
        eye = np.eye(n)
        Msuper = -1j * (np.kron(eye, H) - np.kron(H.conj(), eye))
        rhs = -2.0 * spec.Gamma * eye.reshape(-1, order="F")
        S_kron = np.linalg.solve(Msuper, rhs).reshape((n, n), order="F")
        if np.max(np.abs(S_sylv - S_kron)) > 1e-10:
            raise NhrelaxError("Sylvester vs kron-vectorization mismatch")
        T = 50.0 / spec.delta()
        traj2 = dynamics.evolve_covariance(
            spec, dynamics.initial_state("vacuum", spec), np.array([0.0, T]))
        dev = np.max(np.abs(traj2.occupations[-1] - S_sylv.diagonal().real)
                     / np.abs(S_sylv.diagonal().real))
        if dev > 1e-6:
            raise NhrelaxError(f"steady-state ODE/Sylvester mismatch {dev:.2e}")

    yield "oracle-equivalence", oracle_equivalence
    yield "third-quantization", third_quantization
    yield "route-equivalence", route_equivalence
    yield "hn-localization-benchmark", localization_benchmark
    yield "g-infinity-quadrature-vs-recurrence", quadrature_vs_recurrence
    yield "integrator-and-steady-state", integrator_checks


def cmd_verify(args):
    results = []
    failed = False
    for name, fn in _verify_checks():
        t0 = time.time()
        try:
            fn()
            status = "ok"
        except Exception as exc:  # noqa: BLE001 - report and fail the suite
            status = f"FAIL: {type(exc).__name__}: {exc}"
            failed = True
        line = f"{name:42s} {status}  ({time.time() - t0:.1f}s)"
        print(line)
        results.append(line)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("\n".join(results) + "\n")
    if failed:
        raise SystemExit(3)
    return {"checks": len(results)}


# ---------------------------------------------------------------------------

def _merge_config_file(argv):
    """Translate --config file.json into an argv list (flags mirror keys)."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    path = argv[idx + 1]
    with open(path) as fh:
        cfg = json.load(fh)
    command = cfg.pop("command", None)
    if command not in COMMANDS:
        raise ValueError(f"config must name a command from {COMMANDS}")
    out = [command]
    for key, val in cfg.items():
        if val is None:
            continue
        flag = "--" + key.replace("_", "-")
        if key in ("lambda_loss",):
            flag = "--lambda"
        if isinstance(val, bool):
            if val:
                out.append(flag)
        else:
            out.extend([flag, str(val)])
    return argv[:idx] + out + argv[idx + 2:]


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _merge_config_file(argv)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 1

    handlers = {
        "spectrum": cmd_spectrum,
        "propagator": cmd_propagator,
        "relax": cmd_relax,
        "sweep": cmd_sweep,
        "steady": cmd_steady,
        "interference": cmd_interference,
        "localization": cmd_localization,
        "verify": cmd_verify,
    }
    t0 = time.time()
    cfg = config_echo(args)
    out = getattr(args, "out", None)
    try:
        extra = handlers[args.command](args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NhrelaxError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        if out:
            write_sidecar(sidecar_path(out), cfg, error=exc, t_start=t0)
        return 2
    if out:
        write_sidecar(sidecar_path(out), cfg, extra=extra, t_start=t0)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
