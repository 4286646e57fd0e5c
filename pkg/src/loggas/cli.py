"""Command-line interface: one binary, deterministic subcommands.

Subcommands: ``sample`` (exact spectral draws), ``spectrum-stats``
(empirical-measure report for a sample file), ``dou simulate`` /
``dou couple`` (diffusion paths and coupled-distance series), ``verify``
(inequality checks), and ``lassalle`` (exact generator eigenfunctions).

Every run is a pure function of its parameters and the seed.  Each
output file is accompanied by a ``<file>.manifest.json`` sidecar holding
the resolved parameters (with provenance: flag, config file, or
default), the package version, the active kernel lane, and SHA-256
digests of the payload.  Exit codes: 0 success, 2 parameter or input
errors, 3 when a verification produced a violated bound.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__, analysis, dynamics, ensemble, inequalities, symfun
from .errors import ConfigError, DomainError
from .kernels import active_lane
from .rng import PURPOSE_INITIAL, RngStream, substream_id

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VIOLATION = 3


def _fmt(x):
    """17 significant digits: round-trips float64 exactly."""
    return f"{float(x):.17g}"


# ---------------------------------------------------------------------------
# Config files: line-oriented `key = value`, flags take precedence
# ---------------------------------------------------------------------------


def load_config(path):
    """Parse a config file into {key: (raw_value, line_number)}."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(
                    f"{path}:{lineno}: expected `key = value`", line=lineno)
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if not key:
                raise ConfigError(
                    f"{path}:{lineno}: empty key", line=lineno)
            out[key] = (value, lineno)
    return out


def _merge_params(args, spec, config_path):
    """Resolve each option from flag > config > default, with provenance."""
    raw = load_config(config_path) if config_path else {}
    valid = {name for name, _, _ in spec}
    for key, (_, lineno) in raw.items():
        if key not in valid:
            raise ConfigError(
                f"{config_path}:{lineno}: unknown key {key!r}; valid keys: "
                + ", ".join(sorted(valid)), line=lineno)
    params = {}
    provenance = {}
    for name, typ, default in spec:
        flag_val = getattr(args, name, None)
        if flag_val is not None:
            try:
                params[name] = (typ(flag_val) if isinstance(flag_val, str)
                                else flag_val)
            except (TypeError, ValueError) as exc:
                raise DomainError(f"bad value for --{name.replace('_', '-')}:"
                                  f" {exc}") from exc
            provenance[name] = "flag"
        elif name in raw:
            text, lineno = raw[name]
            try:
                params[name] = typ(text)
            except (TypeError, ValueError) as exc:
                raise ConfigError(
                    f"{config_path}:{lineno}: bad value for {name!r}: {exc}",
                    line=lineno) from exc
            provenance[name] = "config"
        else:
            params[name] = default
            provenance[name] = "default"
    return params, provenance


# ---------------------------------------------------------------------------
# Output plumbing
# ---------------------------------------------------------------------------


def _write_bytes(path, data):
    with open(path, "wb") as fh:
        fh.write(data)
    return {
        "path": str(path),
        "sha256": hashlib.sha256(data).hexdigest(),
        "bytes": len(data),
    }


def _render_csv(comments, header, rows):
    buf = io.StringIO()
    for key, value in comments.items():
        buf.write(f"# {key}={value}\r\n")
    writer = csv.writer(buf)  # RFC-4180 CRLF line endings
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue().encode()


def _render_json(obj):
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


def _emit(out_path, payload, subcommand, params, provenance, t0, argv):
    record = _write_bytes(out_path, payload)
    manifest = {
        "schema": "loggas/manifest/1",
        "subcommand": subcommand,
        "argv": argv,
        "params": {k: (v if not isinstance(v, float) else float(_fmt(v)))
                   for k, v in params.items()},
        "provenance": provenance,
        "version": __version__,
        "kernel_lane": active_lane(),
        "wall_clock_s": round(time.perf_counter() - t0, 6),
        "outputs": [record],
    }
    _write_bytes(str(out_path) + ".manifest.json", _render_json(manifest))


# ---------------------------------------------------------------------------
# Test-function and initial-condition mini-grammars
# ---------------------------------------------------------------------------


def parse_test_function(spec, n):
    """Grammar: linear:a1,..,an[:c] | max | explin:lam[:c] |
    linstat:identity | linstat:stieltjes_re:a:b | linstat:stieltjes_im:a:b |
    poly:FILE(json with n_vars and rational power-sum coefficients)."""
    parts = spec.split(":")
    kind = parts[0]
    if kind == "linear":
        if len(parts) not in (2, 3):
            raise DomainError(f"bad linear spec {spec!r}")
        a = [float(v) for v in parts[1].split(",")]
        if len(a) != n:
            raise DomainError(f"linear spec needs {n} coefficients")
        c = float(parts[2]) if len(parts) == 3 else 0.0
        return inequalities.linear(a, c)
    if kind == "max":
        return inequalities.max_coordinate()
    if kind == "explin":
        if len(parts) not in (2, 3):
            raise DomainError(f"bad explin spec {spec!r}")
        return inequalities.exp_linear(float(parts[1]),
                                       float(parts[2]) if len(parts) == 3
                                       else 0.0)
    if kind == "linstat":
        if len(parts) == 2 and parts[1] == "identity":
            return inequalities.linear_statistic("identity")
        if len(parts) == 4 and parts[1] in ("stieltjes_re", "stieltjes_im"):
            return inequalities.linear_statistic(
                parts[1], complex(float(parts[2]), float(parts[3])))
        raise DomainError(f"bad linstat spec {spec!r}")
    if kind == "poly":
        if len(parts) != 2:
            raise DomainError(f"bad poly spec {spec!r}")
        with open(parts[1], "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        coeffs = {}
        for key, value in doc["coeffs"].items():
            partition = tuple(int(v) for v in key.split(",")) if key else ()
            coeffs[partition] = Fraction(value)
        poly = symfun.SymPolynomial(int(doc["n_vars"]), coeffs)
        if poly.n_vars != n:
            raise DomainError("polynomial n_vars does not match --n")
        return inequalities.sym_poly(poly)
    raise DomainError(f"unknown test function kind {kind!r}")


def parse_initial_condition(spec, model, seed, index):
    """Grammar: equilibrium-sample | equispaced[a,b] | file:PATH."""
    if spec == "equilibrium-sample":
        rng = RngStream(seed, substream_id(PURPOSE_INITIAL, index))
        return ensemble.sample_spectrum(model, rng).points
    if spec.startswith("equispaced[") and spec.endswith("]"):
        a, b = (float(v) for v in spec[len("equispaced["):-1].split(","))
        return np.linspace(b, a, model.n)
    if spec.startswith("file:"):
        pts = np.loadtxt(spec[len("file:"):], delimiter=",", ndmin=1)
        return np.sort(pts)[::-1]
    raise DomainError(f"unknown initial condition {spec!r}")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

_MODEL_SPEC = [("n", int, None), ("beta", float, None), ("rho", float, None)]


def _model_from(params):
    if params["n"] is None or params["beta"] is None:
        raise DomainError("--n and --beta are required")
    return ensemble.GasModel(params["n"], params["beta"], params.get("rho"))


def cmd_sample(args, argv):
    t0 = time.perf_counter()
    spec = _MODEL_SPEC + [
        ("reps", int, 1), ("seed", int, 0), ("stream0", int, 0),
        ("threads", int, 1), ("format", str, "csv"), ("out", str, None),
    ]
    params, prov = _merge_params(args, spec, args.config)
    model = _model_from(params)
    if params["out"] is None:
        raise DomainError("--out is required")
    draws = ensemble.sample_spectra(model, params["reps"], params["seed"],
                                    params["stream0"],
                                    threads=params["threads"])
    comments = {
        "schema": "loggas/spectra/1", "n": model.n, "beta": _fmt(model.beta),
        "rho": _fmt(model.rho), "reps": params["reps"],
        "seed": params["seed"], "stream0": params["stream0"],
    }
    if params["format"] == "csv":
        payload = _render_csv(
            comments, [f"x{i + 1}" for i in range(model.n)],
            (tuple(float(v) for v in row) for row in draws))
    elif params["format"] == "json":
        payload = _render_json({
            "schema": "loggas/spectra/1",
            "params": {k: params[k] for k in
                       ("n", "beta", "rho", "reps", "seed", "stream0")},
            "draws": [[float(_fmt(v)) for v in row] for row in draws],
        })
    else:
        raise DomainError(f"unknown format {params['format']!r}")
    _emit(params["out"], payload, "sample", params, prov, t0, argv)
    return EXIT_OK


def read_spectra_csv(path):
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader)
        for row in reader:
            if row:
                rows.append([float(v) for v in row])
    if not rows:
        raise DomainError(f"{path}: no data rows")
    arr = np.asarray(rows)
    return header, arr


def cmd_spectrum_stats(args, argv):
    t0 = time.perf_counter()
    spec = [("in_path", str, None), ("beta", float, None),
            ("grid", int, 10_000), ("out", str, None)]
    params, prov = _merge_params(args, spec, args.config)
    if params["in_path"] is None or params["beta"] is None:
        raise DomainError("--in and --beta are required")
    _, arr = read_spectra_csv(params["in_path"])
    law = analysis.SemicircleLaw(params["beta"])
    pooled = analysis.EmpiricalMeasure(arr.ravel())
    largest = arr.max(axis=1)
    report = {
        "schema": "loggas/spectrum-stats/1",
        "n": int(arr.shape[1]),
        "rows": int(arr.shape[0]),
        "beta": params["beta"],
        "moments": {
            "mean": float(arr.mean()),
            "second": float((arr**2).sum(axis=1).mean()),
            "sum_mean": float(arr.sum(axis=1).mean()),
            "sum_var": float(arr.sum(axis=1).var(ddof=1))
            if arr.shape[0] > 1 else 0.0,
        },
        "ks_vs_semicircle": analysis.ks_distance(pooled, law.cdf),
        "w2_vs_semicircle": analysis.wasserstein_to_semicircle(
            2, pooled, law, params["grid"]),
        "largest_atom": {
            "mean": float(largest.mean()),
            "min": float(largest.min()),
            "max": float(largest.max()),
            "edge": law.edge,
        },
    }
    payload = _render_json(report)
    out = params["out"] or (params["in_path"] + ".stats.json")
    params_out = dict(params)
    params_out["out"] = out
    _emit(out, payload, "spectrum-stats", params_out, prov, t0, argv)
    return EXIT_OK


def cmd_dou_simulate(args, argv):
    t0 = time.perf_counter()
    spec = _MODEL_SPEC + [
        ("dt", float, 1e-3), ("t_end", float, 1.0), ("reps", int, 1),
        ("seed", int, 0), ("record_every", int, 10),
        ("scheme", str, "euler_reflected"), ("x0", str, "equilibrium-sample"),
        ("out", str, None),
    ]
    params, prov = _merge_params(args, spec, args.config)
    model = _model_from(params)
    if params["out"] is None:
        raise DomainError("--out is required")
    douparams = dynamics.DouParams(model, dt=params["dt"],
                                   t_end=params["t_end"],
                                   scheme=params["scheme"])
    x0s = np.stack([
        parse_initial_condition(params["x0"], model, params["seed"], r)
        for r in range(params["reps"])])
    batch = dynamics.simulate_batch(douparams, x0s, params["seed"],
                                    record_every=params["record_every"])
    comments = {
        "schema": "loggas/dou-simulate/1", "n": model.n,
        "beta": _fmt(model.beta), "rho": _fmt(model.rho),
        "dt": _fmt(params["dt"]), "t_end": _fmt(params["t_end"]),
        "scheme": params["scheme"], "reps": params["reps"],
        "seed": params["seed"],
        "boundary_events": int(batch.events.sum()),
        "flagged_steps": int(batch.flagged.sum()),
    }
    header = ["path", "t"] + [f"x{i + 1}" for i in range(model.n)]
    rows = []
    for p in range(params["reps"]):
        for k, tval in enumerate(batch.times):
            rows.append((p, float(tval),
                         *(float(v) for v in batch.paths[p, k])))
    payload = _render_csv(comments, header, rows)
    _emit(params["out"], payload, "dou simulate", params, prov, t0, argv)
    return EXIT_OK


def cmd_dou_couple(args, argv):
    t0 = time.perf_counter()
    spec = _MODEL_SPEC + [
        ("dt", float, 1e-3), ("t_end", float, 1.0), ("reps", int, 1),
        ("seed", int, 0), ("record_every", int, 10), ("p", int, 2),
        ("x0", str, "equilibrium-sample"), ("y0", str, "equispaced[-1,1]"),
        ("out", str, None),
    ]
    params, prov = _merge_params(args, spec, args.config)
    model = _model_from(params)
    if params["out"] is None:
        raise DomainError("--out is required")
    douparams = dynamics.DouParams(model, dt=params["dt"],
                                   t_end=params["t_end"])
    x0s = np.stack([
        parse_initial_condition(params["x0"], model, params["seed"], 2 * r)
        for r in range(params["reps"])])
    y0s = np.stack([
        parse_initial_condition(params["y0"], model, params["seed"], 2 * r + 1)
        for r in range(params["reps"])])
    times, dists = dynamics.couple_batch(douparams, x0s, y0s, params["seed"],
                                         record_every=params["record_every"])
    mean_p = np.mean(dists ** params["p"], axis=0) ** (1.0 / params["p"])
    comments = {
        "schema": "loggas/dou-couple/1", "n": model.n,
        "beta": _fmt(model.beta), "rho": _fmt(model.rho),
        "dt": _fmt(params["dt"]), "t_end": _fmt(params["t_end"]),
        "reps": params["reps"], "p": params["p"], "seed": params["seed"],
        "fitted_rate": _fmt(dynamics.fit_decay_rate(times, mean_p)),
    }
    rows = [(float(t), float(d)) for t, d in zip(times, mean_p)]
    payload = _render_csv(comments, ["t", "distance"], rows)
    _emit(params["out"], payload, "dou couple", params, prov, t0, argv)
    return EXIT_OK


def _grid(text):
    return [float(v) for v in text.split(",") if v]


def cmd_verify(args, argv):
    t0 = time.perf_counter()
    spec = _MODEL_SPEC + [
        ("fn", str, None), ("reps", int, 100_000), ("seed", int, 0),
        ("stream0", int, 0), ("threads", int, 1),
        ("lambda_grid", _grid, [0.5, 1.0, 2.0]),
        ("r_grid", _grid, [0.1, 0.2, 0.3, 0.4, 0.5]),
        ("format", str, "json"), ("out", str, None),
    ]
    params, prov = _merge_params(args, spec, args.config)
    model = _model_from(params)
    check = args.check
    needs_fn = check in ("poincare", "lsi", "herbst", "tails")
    f = None
    if needs_fn:
        if params["fn"] is None:
            raise DomainError(f"verify {check} requires --fn")
        f = parse_test_function(params["fn"], model.n)

    report = {"schema": "loggas/verify/1", "check": check,
              "params": {k: v for k, v in params.items()
                         if k not in ("format", "out")},
              "kernel_lane": active_lane()}
    exit_code = EXIT_OK
    csv_payload = None
    if check in ("poincare", "lsi"):
        fn = inequalities.poincare_check if check == "poincare" \
            else inequalities.lsi_check
        rep = fn(model, f, params["reps"], params["seed"], params["stream0"],
                 threads=params["threads"])
        report.update({
            "name": rep.name,
            "lhs": {"mean": rep.lhs.mean, "std_error": rep.lhs.std_error,
                    "n_samples": rep.lhs.n_samples},
            "rhs": {"mean": rep.rhs.mean, "std_error": rep.rhs.std_error,
                    "n_samples": rep.rhs.n_samples},
            "ratio": rep.ratio,
            "verdict": rep.verdict,
        })
        if rep.verdict == "violation":
            exit_code = EXIT_VIOLATION
    elif check == "herbst":
        rep = inequalities.herbst_laplace_check(
            model, f, params["lambda_grid"], params["reps"], params["seed"],
            params["stream0"], threads=params["threads"])
        report.update({
            "name": rep.name, "lip": rep.lip,
            "rows": [{"lambda": r.lam, "log_mgf": r.log_mgf,
                      "std_error": r.std_error, "bound": r.bound,
                      "satisfied": r.satisfied} for r in rep.rows],
            "verdict": "satisfied" if rep.all_satisfied else "violation",
        })
        if not rep.all_satisfied:
            exit_code = EXIT_VIOLATION
    elif check == "tails":
        rep = inequalities.concentration_tails(
            model, f, params["r_grid"], params["reps"], params["seed"],
            params["stream0"], threads=params["threads"])
        report.update({
            "name": rep.name, "lip": rep.lip, "mean": rep.mean,
            "rows": [{"r": r.r, "empirical": r.empirical,
                      "wilson_low": r.wilson_low, "wilson_high": r.wilson_high,
                      "bound": r.bound, "satisfied": r.satisfied}
                     for r in rep.rows],
            "verdict": "satisfied" if rep.all_satisfied else "violation",
        })
        if not rep.all_satisfied:
            exit_code = EXIT_VIOLATION
        if params["format"] == "csv":
            csv_payload = _render_csv(
                {"schema": "loggas/tails/1", "fn": params["fn"],
                 "n": model.n, "beta": _fmt(model.beta),
                 "rho": _fmt(model.rho), "seed": params["seed"]},
                ["r", "empirical"],
                [(r.r, r.empirical) for r in rep.rows])
    elif check == "factorization":
        rep = inequalities.factorization_check(
            model, params["reps"], params["seed"], params["stream0"],
            threads=params["threads"])
        report.update({
            "var_diag": {"mean": rep.var_diag.mean,
                         "std_error": rep.var_diag.std_error,
                         "expected": 1.0 / model.rho},
            "ks_normalized": rep.ks_normalized,
            "correlations": rep.correlations,
            "corr_threshold": rep.corr_threshold,
            "verdict": "satisfied" if rep.correlations_pass else "violation",
        })
        if not rep.correlations_pass:
            exit_code = EXIT_VIOLATION
    else:
        raise DomainError(f"unknown check {check!r}")

    payload = csv_payload if csv_payload is not None else _render_json(report)
    out = params["out"]
    if out is None:
        sys.stdout.write(payload.decode())
    else:
        _emit(out, payload, f"verify {check}", params, prov, t0, argv)
    return exit_code


def _parse_bool(text):
    if isinstance(text, bool):
        return text
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def cmd_lassalle(args, argv):
    t0 = time.perf_counter()
    spec = [("n", int, None), ("beta", str, None), ("max_degree", int, 2),
            ("symbolic", _parse_bool, False), ("json_out", str, None)]
    params, prov = _merge_params(args, spec, args.config)
    if params["n"] is None:
        raise DomainError("--n is required")
    symbolic = bool(params["symbolic"]) or params["beta"] is None
    beta = None if symbolic else Fraction(params["beta"])
    eigs = symfun.hermite_lassalle(params["n"], params["max_degree"], beta)
    doc = {
        "schema": "loggas/lassalle/1",
        "n": params["n"],
        "beta": "symbolic" if symbolic else str(beta),
        "max_degree": params["max_degree"],
        "eigenfunctions": [],
    }
    for e in eigs:
        coeffs = {}
        for key in sorted(e.polynomial.coeffs,
                          key=lambda t: (symfun.weight(t), t)):
            c = e.polynomial.coeffs[key]
            text = str(c.constant_value()) if c.is_constant else str(c)
            coeffs[",".join(str(p) for p in key)] = text
        doc["eigenfunctions"].append({
            "partition": list(e.partition),
            "eigenvalue": e.eigenvalue,
            "coefficients": coeffs,
            "squared_norm": (str(e.squared_norm.constant_value())
                             if e.squared_norm.is_constant
                             else str(e.squared_norm)),
        })
    payload = _render_json(doc)
    if params["json_out"] is None:
        sys.stdout.write(payload.decode())
    else:
        _emit(params["json_out"], payload, "lassalle", params, prov, t0, argv)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_common(p, names):
    # every option is parsed as a raw string; _merge_params applies the
    # subcommand's type table so config-file and flag values are treated
    # identically
    if "config" not in names:
        p.add_argument("--config", default=None, help="key = value file; "
                       "flags override file entries")
    for name in names:
        flag = "--" + name.replace("_", "-")
        if name == "in_path":
            flag = "--in"
        if name == "symbolic":
            p.add_argument("--symbolic", action="store_const", const=True,
                           default=None, help="keep beta symbolic")
            continue
        p.add_argument(flag, dest=name, default=None)


def build_parser():
    top = argparse.ArgumentParser(
        prog="loggas",
        description="simulation and verification toolkit for 1D log-gases")
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="exact spectral draws")
    _add_common(p, ["n", "beta", "rho", "reps", "seed", "stream0", "threads",
                    "format", "out"])
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("spectrum-stats", help="empirical-measure report")
    _add_common(p, ["in_path", "beta", "grid", "out"])
    p.set_defaults(func=cmd_spectrum_stats)

    dou = sub.add_parser("dou", help="interacting-diffusion integrators")
    dousub = dou.add_subparsers(dest="dou_command", required=True)
    p = dousub.add_parser("simulate", help="independent paths")
    _add_common(p, ["n", "beta", "rho", "dt", "t_end", "reps", "seed",
                    "record_every", "scheme", "x0", "out"])
    p.set_defaults(func=cmd_dou_simulate)
    p = dousub.add_parser("couple", help="same-noise coupled pairs")
    _add_common(p, ["n", "beta", "rho", "dt", "t_end", "reps", "seed",
                    "record_every", "p", "x0", "y0", "out"])
    p.set_defaults(func=cmd_dou_couple)

    p = sub.add_parser("verify", help="inequality checks")
    p.add_argument("check", choices=["poincare", "lsi", "herbst", "tails",
                                     "factorization"])
    _add_common(p, ["n", "beta", "rho", "fn", "reps", "seed", "stream0",
                    "threads", "lambda_grid", "r_grid", "format", "out"])
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("lassalle", help="exact generator eigenfunctions")
    _add_common(p, ["n", "beta", "max_degree", "symbolic", "json_out"])
    p.set_defaults(func=cmd_lassalle)

    return top


def run(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, list(argv))
    except (DomainError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
