"""Config-driven command line for every experiment in the package.

Subcommands: fbm-sample, irregularity, levelsets, decompose, vp-norm,
solve, mass-check, strichartz, stochastic-strichartz, flow-convergence,
quadrilinear-check.

Precedence: command-line flags override config-file values override
defaults.  Every run writes a deterministic ``manifest.json`` (resolved
config + version) next to its outputs; wall-clock info goes to a separate
``run_info.json`` so primary artifacts stay byte-identical across reruns.
The only environment variable honored is MODNLS_OUTPUT_DIR.
"""

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

import modnls
from modnls import bench, lattice, paths, solver, spectral, variation
from modnls.io_utils import ensure_dir, write_csv, write_json


def _int(x):
    return int(x)


def _float(x):
    return float(x)


def _str(x):
    return str(x)


def _intlist(x):
    return [int(v) for v in str(x).split(",") if v != ""]


def _floatlist(x):
    return [float(v) for v in str(x).split(",") if v != ""]


def _bool(x):
    if isinstance(x, bool):
        return x
    if str(x).lower() in ("1", "true", "yes", "on"):
        return True
    if str(x).lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {x!r}")


GLOBAL_PARAMS = {
    "seed": (_int, 0, "master seed"),
    "output_dir": (_str, None, "output directory (default: MODNLS_OUTPUT_DIR or '.')"),
    "format": (_str, "csv", "primary output format: csv or json"),
    "workers": (_int, 1, "parallel workers for Monte Carlo loops"),
}

COMMANDS = {
    "fbm-sample": {
        "hurst": (_float, 0.5, "Hurst index in (0,1)"),
        "steps": (_int, 1024, "grid steps"),
        "horizon": (_float, 1.0, "time horizon"),
    },
    "irregularity": {
        "kind": (_str, "fbm", "path kind: fbm | identity | custom"),
        "input": (_str, "", "path CSV (t,w) when kind=custom"),
        "hurst": (_float, 0.5, "Hurst index for kind=fbm"),
        "steps": (_int, 1024, "path grid steps"),
        "horizon": (_float, 1.0, "path horizon"),
        "rho": (_float, 0.9, "decay exponent"),
        "gamma": (_float, 0.5, "time regularity exponent"),
        "tau_max": (_int, 1000, "integer tau grid 1..tau_max (plus tau=0)"),
        "pair_grid": (_int, 8, "time pairs from an equispaced subgrid of this size"),
    },
    "levelsets": {
        "n": (_int, 1, "box half side"),
        "center": (_intlist, [0, 0], "box center a,b"),
    },
    "decompose": {
        "side": (_int, 8, "side of the square point grid carrying the data"),
        "constant": (_int, 0, "richness constant; 0 selects it automatically"),
        "data": (_str, "random", "random | ones"),
    },
    "vp-norm": {
        "input": (_str, "", "signal CSV with columns t,re,im"),
        "p": (_float, 2.0, "variation exponent, > 1"),
    },
    "solve": {
        "s": (_float, 0.5, "Sobolev index"),
        "n_freq": (_int, 8, "box half side"),
        "dt": (_float, 1e-3, "time step"),
        "horizon": (_float, 0.1, "solve horizon"),
        "beta": (_float, 1.0, "smallness parameter"),
        "epsilon": (_float, 0.0, "Strichartz parameter; 0 means s/5"),
        "hurst": (_float, 0.5, "Hurst index of the modulation (ignored if identity)"),
        "identity_path": (_bool, False, "use W(t) = t"),
        "path_steps": (_int, 100, "modulation grid steps"),
        "data_norm": (_float, 1e-2, "H^s norm of the random initial data"),
        "linear_only": (_bool, False, "disable the nonlinearity"),
        "tol": (_float, 1e-10, "fixed point tolerance"),
        "max_iterations": (_int, 30, "Picard iteration cap"),
    },
    "mass-check": {
        "s": (_float, 0.5, "Sobolev index"),
        "n_freq": (_int, 8, "box half side"),
        "dt": (_float, 1e-4, "base time step (second run halves it)"),
        "horizon": (_float, 0.1, "solve horizon"),
        "hurst": (_float, 0.5, "Hurst index of the modulation"),
        "path_steps": (_int, 100, "modulation grid steps"),
        "data_norm": (_float, 1e-2, "H^s norm of the random initial data"),
        "tol": (_float, 1e-12, "fixed point tolerance"),
    },
    "strichartz": {
        "n_list": (_intlist, [2, 4, 8], "box half sides"),
        "trials": (_int, 20, "random fields per (N, path)"),
        "paths": (_int, 5, "fBm paths per N"),
        "t0": (_float, 0.1, "interval length"),
        "epsilon": (_float, 0.1, "Strichartz parameter"),
        "hurst": (_float, 0.5, "Hurst index"),
        "steps": (_int, 256, "path grid steps"),
    },
    "stochastic-strichartz": {
        "n": (_int, 4, "box half side"),
        "trials": (_int, 100, "Monte Carlo trials"),
        "t0": (_float, 0.1, "interval length"),
        "hurst": (_float, 0.5, "Hurst index"),
        "steps": (_int, 256, "path grid steps"),
    },
    "flow-convergence": {
        "n_freq": (_int, 4, "box half side of the data"),
        "decay": (_float, 4.0, "coefficient decay power of <k>"),
        "amplitude": (_float, 0.01, "coefficient scale"),
        "seeds": (_int, 100, "number of fBm paths"),
        "hurst": (_float, 0.5, "Hurst index"),
        "steps": (_int, 512, "path grid steps"),
        "horizon": (_float, 0.1, "path horizon"),
        "deltas": (_floatlist, [0.1, 0.05, 0.025, 0.0125], "shrinking windows"),
    },
    "quadrilinear-check": {
        "n": (_int, 2, "box half side (<= 4)"),
        "trials": (_int, 20, "random fields"),
        "paths": (_int, 5, "paths: identity plus fBm samples"),
        "t0": (_float, 0.25, "interval length"),
        "hurst": (_float, 0.5, "Hurst index"),
        "steps": (_int, 256, "fBm grid steps"),
    },
}


# ---------------------------------------------------------------------------
# config file handling


def parse_config_file(path):
    """Flat key-value file with [section] headers; returns
    {section: {key: (value, line_number)}}."""
    sections = {}
    current = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#") or line.startswith(";"):
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1].strip()
                sections.setdefault(current, {})
                continue
            if "=" not in line:
                raise SystemExit(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            if current is None:
                raise SystemExit(f"{path}:{lineno}: key outside any [section]")
            key, _, value = line.partition("=")
            sections[current][key.strip().replace("-", "_")] = (value.strip(), lineno)
    return sections


def resolve_params(command, args_ns, config_path):
    """defaults < config file section < explicit flags, unknown keys rejected."""
    spec = {**GLOBAL_PARAMS, **COMMANDS[command]}
    resolved = {name: default for name, (_, default, _) in spec.items()}
    if config_path:
        sections = parse_config_file(config_path)
        for section, entries in sections.items():
            if section != command and section not in COMMANDS and section != "global":
                raise SystemExit(f"{config_path}: unknown section [{section}]")
        for section in ("global", command):
            for key, (value, lineno) in sections.get(section, {}).items():
                if key not in spec:
                    raise SystemExit(
                        f"{config_path}:{lineno}: unknown key '{key}' for [{section}]"
                    )
                try:
                    resolved[key] = spec[key][0](value)
                except (TypeError, ValueError) as exc:
                    raise SystemExit(f"{config_path}:{lineno}: bad value for '{key}': {exc}")
    for key, value in vars(args_ns).items():
        if key in spec and value is not None:
            resolved[key] = value
    if resolved["output_dir"] is None:
        resolved["output_dir"] = os.environ.get("MODNLS_OUTPUT_DIR", ".")
    if resolved["format"] not in ("csv", "json"):
        raise SystemExit(f"format must be csv or json, got {resolved['format']!r}")
    return resolved


def write_manifest(outdir, command, params):
    manifest = {
        "command": command,
        "config": {k: params[k] for k in sorted(params)},
        "version": modnls.__version__,
        "kernel_backend": modnls.backend_name(),
    }
    write_json(os.path.join(outdir, "manifest.json"), manifest)


def emit_table(outdir, stem, header, rows, fmt):
    """Primary tabular artifact in the configured format."""
    if fmt == "csv":
        write_csv(os.path.join(outdir, stem + ".csv"), header, rows)
    else:
        write_json(
            os.path.join(outdir, stem + ".json"),
            [dict(zip(header, row)) for row in rows],
        )


# ---------------------------------------------------------------------------
# shared helpers


def _make_path(kind, hurst, steps, horizon, seed, input_csv=""):
    if kind == "identity":
        return paths.ModulationPath.identity(horizon, steps)
    if kind == "custom":
        if not input_csv:
            raise SystemExit("kind=custom needs --input pointing at a path CSV")
        return paths.ModulationPath.from_csv(input_csv)
    if kind == "fbm":
        return paths.sample_fbm(hurst, steps, horizon, seed)
    raise SystemExit(f"unknown path kind {kind!r}")


def _decaying_random_field(box, decay, rng, scale=1.0):
    side = box.side
    coeffs = scale * (rng.standard_normal((side, side)) + 1j * rng.standard_normal((side, side)))
    kx, ky = np.meshgrid(
        np.arange(box.center[0] - box.half_side, box.center[0] + box.half_side + 1),
        np.arange(box.center[1] - box.half_side, box.center[1] + box.half_side + 1),
        indexing="ij",
    )
    weights = (1.0 + kx ** 2 + ky ** 2) ** (-decay / 2.0)
    return spectral.FourierField(box, coeffs * weights)


def _solver_initial_data(params, rng):
    box = lattice.FrequencyBox((0, 0), params["n_freq"])
    field = _decaying_random_field(box, 2.0, rng)
    norm = spectral.hs_norm(field, params["s"])
    if norm > 0:
        field = field * (params["data_norm"] / norm)
    return field


# ---------------------------------------------------------------------------
# subcommand runners


def run_fbm_sample(params, outdir):
    path = paths.sample_fbm(params["hurst"], params["steps"], params["horizon"], params["seed"])
    emit_table(outdir, "path", ["t", "w"], list(zip(path.times, path.values)), params["format"])
    return {"samples": len(path.times)}


def run_irregularity(params, outdir):
    path = _make_path(
        params["kind"], params["hurst"], params["steps"], params["horizon"],
        params["seed"], params["input"],
    )
    grid = np.linspace(0.0, path.horizon, params["pair_grid"] + 1)
    pairs = [(float(grid[i]), float(grid[j])) for i in range(len(grid)) for j in range(i + 1, len(grid))]
    taus = [0.0] + [float(t) for t in range(1, params["tau_max"] + 1)]
    query = paths.IrregularityQuery(params["rho"], params["gamma"], tuple(taus), tuple(pairs))
    rows = paths.irregularity_rows(path, query)
    emit_table(outdir, "irregularity", ["rho", "gamma", "tau", "s", "t", "value"], rows, params["format"])
    value = max(r[5] for r in rows)
    write_json(os.path.join(outdir, "summary.json"), {
        "value": value,
        "grid_note": "grid maximum; a lower bound for the supremum over R x {s<t}",
    })
    return {"value": value}


def run_levelsets(params, outdir):
    center = params["center"]
    box = lattice.FrequencyBox((center[0], center[1]), params["n"])
    hist = lattice.level_set_histogram(box)
    rows = [(t, hist[t]) for t in sorted(hist)]
    emit_table(outdir, "levelsets", ["tau", "count"], rows, params["format"])
    return {"total": int(sum(hist.values())), "levels": len(hist)}


def run_decompose(params, outdir):
    rng = np.random.default_rng(np.random.SeedSequence(params["seed"]))
    side = params["side"]
    pts = [(i, j) for i in range(side) for j in range(side)]
    if params["data"] == "ones":
        f = {pt: 1.0 for pt in pts}
    else:
        f = {pt: float(v) for pt, v in zip(pts, rng.random(len(pts)))}
    if params["constant"] > 0:
        dec = lattice.rich_line_decomposition(f, params["constant"])
        constant = params["constant"]
    else:
        constant, dec = lattice.auto_richness_constant(f)
    report = lattice.decomposition_report(dec)
    report["auto_selected"] = params["constant"] <= 0
    write_json(os.path.join(outdir, "decomposition.json"), report)
    return {"constant": constant, "layers": len(dec.layers)}


def run_vp_norm(params, outdir):
    if not params["input"]:
        raise SystemExit("vp-norm needs --input pointing at a signal CSV (t,re,im)")
    signal = variation.SampledSignal.from_csv(params["input"])
    value = variation.vp_norm(signal, params["p"])
    write_json(os.path.join(outdir, "vp_norm.json"), {
        "p": params["p"],
        "samples": len(signal.times),
        "vp_norm": value,
    })
    return {"vp_norm": value}


def _solve_common(params, dt, tol):
    rng = np.random.default_rng(np.random.SeedSequence(params["seed"], spawn_key=(3,)))
    u0 = _solver_initial_data(params, rng)
    if params.get("identity_path"):
        path = paths.ModulationPath.identity(params["horizon"], params["path_steps"])
    else:
        path = paths.sample_fbm(params["hurst"], params["path_steps"], params["horizon"], params["seed"])
    cfg = solver.SolverConfig(
        s=params["s"],
        n_freq=params["n_freq"],
        dt=dt,
        horizon=params["horizon"],
        epsilon=params.get("epsilon") or None,
        beta=params.get("beta", 1.0),
        fixed_point_tol=tol,
        max_iterations=params.get("max_iterations", 30),
        nonlinearity_on=not params.get("linear_only", False),
    )
    return u0, path, solver.picard_solve(u0, path, cfg)


def run_solve(params, outdir):
    if params["epsilon"] and params["epsilon"] >= params["s"]:
        raise SystemExit("epsilon must be smaller than s")
    u0, path, sol = _solve_common(params, params["dt"], params["tol"])
    rows = []
    kx, ky = sol.field(0).k_arrays()
    for i, t in enumerate(sol.times):
        cs = sol.coeffs[i]
        for a in range(sol.box.side):
            for b in range(sol.box.side):
                rows.append((float(t), int(kx[a, b]), int(ky[a, b]), cs[a, b].real, cs[a, b].imag))
    emit_table(outdir, "solution", ["t", "kx", "ky", "re", "im"], rows, params["format"])
    m0 = sol.mass_trajectory[0]
    drift_rows = [
        (float(t), float(m), abs(m - m0) / m0 if m0 > 0 else 0.0)
        for t, m in zip(sol.times, sol.mass_trajectory)
    ]
    emit_table(outdir, "mass", ["t", "mass", "drift"], drift_rows, params["format"])
    diagnostics = {
        "converged": bool(sol.converged),
        "iterations": len(sol.iteration_distances),
        "iteration_distances": [float(d) for d in sol.iteration_distances],
        "contraction_factors": [float(f) for f in sol.contraction_factors],
        "residual": float(sol.residual),
        "mass_drift": solver.mass_drift(sol),
        "mass_trajectory": [float(m) for m in sol.mass_trajectory],
    }
    if sol.times[-1] <= sol.config.short_horizon():
        diagnostics["zn_surrogate"] = solver.zn_surrogate_norm(sol)
    write_json(os.path.join(outdir, "diagnostics.json"), diagnostics)
    return {"converged": sol.converged, "mass_drift": diagnostics["mass_drift"]}


def run_mass_check(params, outdir):
    base = dict(params)
    base.setdefault("beta", 1.0)
    base.setdefault("epsilon", 0.0)
    u0, path, sol = _solve_common(base, params["dt"], params["tol"])
    _, _, sol_half = _solve_common(base, params["dt"] / 2.0, params["tol"])
    drift = solver.mass_drift(sol)
    drift_half = solver.mass_drift(sol_half)
    m0 = sol.mass_trajectory[0]
    rows = [
        (float(t), float(m), abs(m - m0) / m0 if m0 > 0 else 0.0)
        for t, m in zip(sol.times, sol.mass_trajectory)
    ]
    emit_table(outdir, "mass", ["t", "mass", "drift"], rows, params["format"])
    write_json(os.path.join(outdir, "mass_check.json"), {
        "dt": params["dt"],
        "drift": drift,
        "drift_half_dt": drift_half,
        "shrink_factor": drift / drift_half if drift_half > 0 else float("inf"),
    })
    return {"drift": drift, "drift_half_dt": drift_half}


def _pathwise_one(args):
    (n, ip, it, hurst, steps, seed, t0, epsilon) = args
    box = lattice.FrequencyBox((0, 0), n)
    # paths are sampled on [0, t0], the bench interval
    path = paths.sample_fbm_trial(hurst, steps, t0, seed, bench.PATH_SEED_DOMAIN, ip)
    rng = np.random.default_rng(paths.trial_seed(seed, bench.DATA_SEED_DOMAIN, ip * 10000 + it))
    f = spectral.FourierField.random(box, rng)
    return bench.pathwise_ratio(f, box, path, (0.0, t0), epsilon)


def run_strichartz(params, outdir):
    jobs = []
    for n in params["n_list"]:
        for ip in range(params["paths"]):
            for it in range(params["trials"]):
                jobs.append((n, ip, it, params["hurst"], params["steps"],
                             params["seed"], params["t0"], params["epsilon"]))
    if params["workers"] > 1:
        with ProcessPoolExecutor(max_workers=params["workers"]) as ex:
            ratios = list(ex.map(_pathwise_one, jobs, chunksize=8))
    else:
        ratios = [_pathwise_one(j) for j in jobs]
    rows = [
        (params["seed"], job[0], params["t0"], params["epsilon"], params["hurst"], r)
        for job, r in zip(jobs, ratios)
    ]
    emit_table(outdir, "ratios", ["seed", "N", "T0", "eps", "H", "ratio"], rows, params["format"])
    per_n = {}
    for job, r in zip(jobs, ratios):
        per_n.setdefault(job[0], []).append(r)
    summary = {str(n): {"max": max(v), "mean": float(np.mean(v))} for n, v in sorted(per_n.items())}
    ns = sorted(per_n)
    growth = {
        f"{a}->{b}": summary[str(b)]["max"] / summary[str(a)]["max"]
        for a, b in zip(ns[:-1], ns[1:])
    }
    write_json(os.path.join(outdir, "summary.json"), {"per_n": summary, "max_growth": growth})
    return {"max_ratio": max(ratios)}


def run_stochastic_strichartz(params, outdir):
    box = lattice.FrequencyBox((0, 0), params["n"])
    report = bench.stochastic_ratio(
        box, params["hurst"], params["trials"], (0.0, params["t0"]),
        params["steps"], params["seed"],
    )
    report.to_json(os.path.join(outdir, "report.json"))
    denom = report.extra["denominator"]
    rows = [
        (params["seed"], params["n"], params["t0"], 0.0, params["hurst"], float(x ** 0.25 / denom))
        for x in report.extra["trial_fourth_powers"]
    ]
    emit_table(outdir, "trials", ["seed", "N", "T0", "eps", "H", "ratio"], rows, params["format"])
    return {"ratio": report.ratios[0], "standard_error": report.extra["standard_error"]}


def _flow_one(args):
    (i, hurst, steps, horizon, seed, deltas, n_freq, decay, amplitude) = args
    box = lattice.FrequencyBox((0, 0), n_freq)
    kx, ky = np.meshgrid(
        np.arange(-n_freq, n_freq + 1), np.arange(-n_freq, n_freq + 1), indexing="ij"
    )
    coeffs = amplitude * (1.0 + kx ** 2 + ky ** 2) ** (-decay / 2.0)
    u0 = spectral.FourierField(box, coeffs.astype(complex))
    path = paths.sample_fbm_trial(hurst, steps, horizon, seed, bench.PATH_SEED_DOMAIN, i)
    return solver.linear_flow_convergence(u0, path, deltas)


def run_flow_convergence(params, outdir):
    jobs = [
        (i, params["hurst"], params["steps"], params["horizon"], params["seed"],
         params["deltas"], params["n_freq"], params["decay"], params["amplitude"])
        for i in range(params["seeds"])
    ]
    if params["workers"] > 1:
        with ProcessPoolExecutor(max_workers=params["workers"]) as ex:
            values = list(ex.map(_flow_one, jobs, chunksize=8))
    else:
        values = [_flow_one(j) for j in jobs]
    rows = []
    for i, vals in enumerate(values):
        for delta, v in zip(params["deltas"], vals):
            rows.append((i, float(delta), float(v)))
    emit_table(outdir, "flow", ["seed_index", "delta", "value"], rows, params["format"])
    means = np.mean(np.asarray(values), axis=0)
    write_json(os.path.join(outdir, "summary.json"), {
        "deltas": [float(d) for d in params["deltas"]],
        "mean_values": [float(m) for m in means],
    })
    return {"mean_values": [float(m) for m in means]}


def run_quadrilinear_check(params, outdir):
    box = lattice.FrequencyBox((0, 0), params["n"])
    horizon = params["t0"] * 1.2
    path_list = [paths.ModulationPath.identity(horizon, 4)]
    for i in range(max(0, params["paths"] - 1)):
        path_list.append(
            paths.sample_fbm_trial(params["hurst"], params["steps"], horizon,
                                   params["seed"], bench.PATH_SEED_DOMAIN, i)
        )
    rows = []
    worst = 0.0
    for ip, path in enumerate(path_list):
        for it in range(params["trials"]):
            rng = np.random.default_rng(
                paths.trial_seed(params["seed"], bench.DATA_SEED_DOMAIN, ip * 10000 + it)
            )
            f = spectral.FourierField.random(box, rng)
            err = bench.quadrilinear_identity_check(f, path, (0.0, params["t0"]))
            rows.append((ip, it, float(err)))
            worst = max(worst, err)
    emit_table(outdir, "quadrilinear", ["path_index", "trial", "relative_error"], rows, params["format"])
    write_json(os.path.join(outdir, "summary.json"), {"max_relative_error": worst})
    return {"max_relative_error": worst}


RUNNERS = {
    "fbm-sample": run_fbm_sample,
    "irregularity": run_irregularity,
    "levelsets": run_levelsets,
    "decompose": run_decompose,
    "vp-norm": run_vp_norm,
    "solve": run_solve,
    "mass-check": run_mass_check,
    "strichartz": run_strichartz,
    "stochastic-strichartz": run_stochastic_strichartz,
    "flow-convergence": run_flow_convergence,
    "quadrilinear-check": run_quadrilinear_check,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="modnls", description=__doc__)
    parser.add_argument("--config", default=None, help="config file with [subcommand] sections")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, spec in COMMANDS.items():
        p = sub.add_parser(command)
        for name, (typ, default, helptext) in {**GLOBAL_PARAMS, **spec}.items():
            flag = "--" + name.replace("_", "-")
            if typ is _bool:
                p.add_argument(flag, action="store_const", const=True, default=None, help=helptext)
            else:
                p.add_argument(flag, type=typ, default=None, help=f"{helptext} (default {default})")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    params = resolve_params(command, args, args.config)
    outdir = ensure_dir(params["output_dir"])
    started = time.time()
    write_manifest(outdir, command, params)
    try:
        summary = RUNNERS[command](params, outdir)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        sys.stderr.write(f"modnls {command}: {exc}\n")
        return 3
    write_json(os.path.join(outdir, "run_info.json"), {
        "started_unix": started,
        "elapsed_seconds": time.time() - started,
    })
    sys.stdout.write(json.dumps({"command": command, **summary}, sort_keys=True, default=str) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
