"""Command-line front end.

Values are resolved as built-in defaults < ``--config`` file < flags.
Every parameter flag takes a scalar (``0.9``), a list (``0.3,0.9``) or a
range (``0.8:1.2:41`` or ``1e-3:1:13:log``); lists and ranges become grid
axes, scalars fixed parameters.

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(including scans in which some grid point failed; those rows are still
written, with the error class in the ``status`` column).
"""
from __future__ import annotations

import argparse
import math
import sys
from importlib import resources

import yaml

from . import cstar, entanglement, meso, oracle, redfield, scan
from .errors import ConfigError, NumericalError
from .model import BathTemps, ModelParams
from .quadratic import fermionic_pairs, sigma_z_profile

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

# flag name -> parameter key
PARAM_FLAGS = {
    "gamma": "gamma", "h": "h", "T-L": "T_L", "T-R": "T_R", "T": "T", "k": "k",
    "l": "l", "m": "m", "n": "n", "K": "K", "Gamma": "Gamma", "N": "N", "dh": "dh",
}

ORACLE_TOL = {"lindblad_covariance": 1e-10, "lindblad_wick": 1e-10,
              "redfield_calibration": 1e-8, "redfield_gibbs": 1e-8}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message, source="command line")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="YAML scan file")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: logical cores)")
    p.add_argument("--out", default="-", help="CSV output path, '-' for stdout")
    p.add_argument("--json", dest="json_path", help="also write a JSON summary here")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any parameter")
    for flag, key in PARAM_FLAGS.items():
        p.add_argument(f"--{flag}", dest=f"p_{key}", metavar="VALUE")
    return p


def _method_arg(p, default="cstar", choices=("cstar", "meso", "redfield")):
    p.add_argument("--method", choices=choices, default=None, help=f"default: {default}")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="ness-lab", description="NESS of the open XY chain by C* quadrature, "
                     "mesoreservoir and Redfield covariance solves.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("dispersion", parents=[common], help="eps_k and v_k over a k grid")
    for name, hlp in (("correlate", "<f_l^dag f_m> and <f_l f_m>"),
                      ("magnetization", "bulk <sigma^z>"),
                      ("susceptibility", "d<sigma^z>/dh")):
        _method_arg(sub.add_parser(name, parents=[common], help=hlp))
    p = sub.add_parser("derivative-scan", parents=[common], help="h-derivatives of Im<f_l^dag f_m>")
    _method_arg(p)
    p.add_argument("--order", type=int, choices=(1, 3), default=3)
    p = sub.add_parser("jump", parents=[common], help="derivative jump at h_c (order 1) or h = 1 (order 3)")
    _method_arg(p)
    p.add_argument("--order", type=int, choices=(1, 3), default=3)
    p.add_argument("--h-star", type=float, default=None)
    p = sub.add_parser("qmi", parents=[common], help="I(2n) of the C* NESS and its log fit")
    p.add_argument("--sizes", default=None, help="comma-separated n values (default 8,16,32,64,128)")
    sub.add_parser("meso-ness", parents=[common], help="mesoreservoir NESS profile")
    sub.add_parser("redfield-ness", parents=[common], help="Redfield NESS profile")
    sub.add_parser("oracle-check", parents=[common], help="covariance routes against dense references")
    p = sub.add_parser("figure", parents=[common], help="run a shipped figure preset")
    p.add_argument("preset", nargs="?", help="preset name, e.g. fig1")
    p.add_argument("--list", action="store_true", help="list presets and exit")
    return parser


# --- helpers ---------------------------------------------------------------------

def _overrides(args) -> dict:
    out = {}
    for flag, key in PARAM_FLAGS.items():
        val = getattr(args, f"p_{key}", None)
        if val is not None:
            out[key] = scan.parse_value(val)
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"expected KEY=VALUE, got {item!r}", field="--set", source="command line")
        key, val = item.split("=", 1)
        out[key.strip()] = scan.parse_value(val)
    return out


def _specs(args, observable: str, method_default: str = "cstar", default_grid: dict | None = None):
    overrides = _overrides(args)
    overrides["observable"] = observable
    if getattr(args, "method", None):
        overrides["method"] = args.method
    defaults = {"method": method_default, "observable": observable}
    if args.config:
        specs = scan.load_spec_file(args.config, overrides, defaults)
    else:
        data = {"grid": dict(default_grid or {})}
        specs = scan.load_specs(yaml.safe_dump(data), "command line", overrides, defaults)
    if len(specs) != 1:
        raise ConfigError("this command takes a single scan; use 'figure' for multi-scan files",
                          field="scans", source=args.config)
    return specs[0]


def _point_meta(spec: scan.ScanSpec, P: dict):
    params = {k: P[k] for k in ("gamma", "h")}
    for k in ("l", "m", "n", "K", "Gamma", "N"):
        if k in spec.params or k in spec.axis_names:
            params[k] = P[k]
    return params, {"T_L": P["T_L"], "T_R": P["T_R"]}


def _scan_summary(spec, table, elapsed):
    P = spec.points()[0]
    params, temps = _point_meta(spec, P)
    obs = scan.OBSERVABLES[(spec.method, spec.observable)].columns
    values = {c: table.column(c) for c in obs}
    if len(table.rows) == 1:
        values = {c: v[0] for c, v in values.items()}
    value = values[obs[-1]] if len(obs) == 1 else values
    return scan.summary(spec.method, params, temps, spec.observable, value, None, elapsed,
                        grid={a.name: list(a.values) for a in spec.grid}, failures=table.failures)


def _finish(table, args, meta) -> int:
    scan.emit_csv(table, args.out)
    if args.json_path:
        scan.emit_summary_json(meta, args.json_path)
    return EXIT_NUMERICAL if table.failures else EXIT_OK


# --- commands --------------------------------------------------------------------

def _run_scan_command(args, observable, method_default="cstar", default_grid=None) -> int:
    spec = _specs(args, observable, method_default, default_grid)
    with scan.Stopwatch() as sw:
        table = scan.run_scan(spec, args.jobs)
    return _finish(table, args, _scan_summary(spec, table, sw.elapsed))


def cmd_dispersion(args):
    return _run_scan_command(args, "dispersion", default_grid={"k": {"start": 0.0, "stop": math.pi, "count": 101}})


def cmd_correlate(args):
    return _run_scan_command(args, "correlation")


def cmd_magnetization(args):
    return _run_scan_command(args, "magnetization")


def cmd_susceptibility(args):
    return _run_scan_command(args, "susceptibility")


def cmd_derivative_scan(args):
    if args.order == 1:
        grid = {"h": {"start": 0.6, "stop": 0.9, "count": 60}}
    else:
        grid = {"h": {"start": 0.8, "stop": 1.2, "count": 80}}
    return _run_scan_command(args, f"d{args.order}", default_grid=grid)


def cmd_jump(args):
    spec = _specs(args, f"d{args.order}")
    table = scan.Table(["index", *spec.axis_names, "status", "h_star", "left", "right", "jump", "stderr",
                        "residual", "reference", "significant"])
    values, errors = [], []
    with scan.Stopwatch() as sw:
        for i, P in enumerate(spec.points()):
            combo = tuple(P[a] if a != "T" else P["T_L"] for a in spec.axis_names)
            try:
                r = scan.jump_protocol(spec.method, args.order, P, args.h_star)
            except (NumericalError, ValueError) as exc:
                table.rows.append((i, *combo, type(exc).__name__, *([math.nan] * 7), 0))
                values.append(None)
                errors.append(None)
                continue
            e = r.estimate
            table.rows.append((i, *combo, "ok", r.h_star, e.left, e.right, e.jump, e.stderr, e.residual,
                               r.reference, r.significant))
            values.append(e.jump)
            errors.append(e.stderr)
    params, temps = _point_meta(spec, spec.points()[0])
    single = len(values) == 1
    meta = scan.summary(spec.method, params, temps, f"jump_d{args.order}_im_fdf",
                        values[0] if single else values, errors[0] if single else errors, sw.elapsed,
                        reference=table.column("reference")[0] if single else table.column("reference"))
    return _finish(table, args, meta)


def cmd_qmi(args):
    spec = _specs(args, "qmi")
    if args.sizes:
        sizes = [int(s) for s in args.sizes.split(",")]
    elif "n" in spec.axis_names:
        sizes = [int(v) for v in spec.grid[spec.axis_names.index("n")].values]
    else:
        sizes = [8, 16, 32, 64, 128]
    if len(set(sizes)) < 4 or min(sizes) < 1:
        raise ConfigError("the log fit needs at least four distinct positive sizes", field="sizes",
                          source="command line")
    axes = tuple(a for a in spec.grid if a.name != "n")
    spec = scan.ScanSpec(spec.method, spec.observable, axes, spec.params, spec.output_path)
    table = scan.Table(["index", *spec.axis_names, "status", "n", "qmi"])
    fits = []
    with scan.Stopwatch() as sw:
        for i, P in enumerate(spec.points()):
            combo = tuple(P[a] if a != "T" else P["T_L"] for a in spec.axis_names)
            try:
                C = cstar.correlation_window(1, 2 * max(sizes), scan._p(P), scan._b(P))
                vals = entanglement.qmi_scaling(C, sizes)
                fit = entanglement.fit_log_scaling(sizes, vals)
            except (NumericalError, ValueError) as exc:
                table.rows.append((i, *combo, type(exc).__name__, math.nan, math.nan))
                fits.append(None)
                continue
            table.rows.extend((i, *combo, "ok", n, v) for n, v in zip(sizes, vals))
            fits.append({"slope": fit.slope, "intercept": fit.intercept, "residual": fit.residual,
                         "fitted_range": fit.fitted_range})
    params, temps = _point_meta(spec, spec.points()[0])
    value = [f and f["slope"] for f in fits]
    err = [f and f["residual"] for f in fits]
    meta = scan.summary("cstar", params, temps, "qmi_log_slope", value[0] if len(fits) == 1 else value,
                        err[0] if len(fits) == 1 else err, sw.elapsed, fits=fits, sizes=sizes)
    return _finish(table, args, meta)


def _profile_table(C, first, count):
    table = scan.Table(["site", "sigma_z", "re_fdf_next", "im_fdf_next"])
    prof = sigma_z_profile(C)
    N = len(prof)
    for j in range(first, first + count):
        if j + 1 < N:
            pair = fermionic_pairs(C, j + 1, j + 2)
            nxt = (float(pair.fdf.real), float(pair.fdf.imag))
        else:
            nxt = (math.nan, math.nan)
        table.rows.append((j - first + 1, float(prof[j]), *nxt))
    return table


def _single_point(spec):
    pts = spec.points()
    if len(pts) != 1:
        raise ConfigError("this command takes a single parameter point, not a grid", field="grid")
    return pts[0]


def cmd_meso_ness(args):
    spec = _specs(args, "profile", "meso")
    P = _single_point(spec)
    cfg = scan._meso_cfg(P)
    with scan.Stopwatch() as sw:
        C = meso.meso_ness(cfg)
        value = meso.bulk_magnetization(C, cfg)
    params, temps = _point_meta(spec, P)
    params.update(K=cfg.K, n=cfg.n, Gamma=cfg.Gamma)
    table = _profile_table(C, cfg.K, cfg.n)
    return _finish(table, args, scan.summary("meso", params, temps, "bulk_magnetization", value, None, sw.elapsed))


def cmd_redfield_ness(args):
    spec = _specs(args, "profile", "redfield")
    P = _single_point(spec)
    cfg = scan._red_cfg(P)
    with scan.Stopwatch() as sw:
        C = redfield.redfield_ness(cfg)
        value = redfield.bulk_magnetization(C)
    params, temps = _point_meta(spec, P)
    params["N"] = cfg.N
    table = _profile_table(C, 0, cfg.N)
    return _finish(table, args, scan.summary("redfield", params, temps, "bulk_magnetization", value, None,
                                             sw.elapsed))


def oracle_checks(gamma=0.5, h=0.9) -> dict:
    """Deviations of the covariance routes from the dense references."""
    P = dict(scan.DEFAULTS, gamma=gamma, h=h, T_L=0.5, T_R=1.0, Gamma=0.3)
    cov, wick = scan.meso_lindblad_check(P)
    calib = redfield.check_calibration() if (gamma, h) == (0.5, 0.9) else math.nan
    cfg = redfield.RedfieldConfig(4, ModelParams(gamma, h), BathTemps(1.0, 1.0))
    H = oracle.dense_hamiltonian(4, gamma, h)
    gibbs = oracle.trace_distance(oracle.dense_redfield_ness(cfg), oracle.gibbs_state(H, 1.0))
    return {"lindblad_covariance": cov, "lindblad_wick": wick,
            "redfield_calibration": calib, "redfield_gibbs": gibbs}


def cmd_oracle_check(args):
    with scan.Stopwatch() as sw:
        checks = oracle_checks()
    table = scan.Table(["check", "value", "tolerance", "passed"])
    for name, val in checks.items():
        table.rows.append((name, val, ORACLE_TOL[name], bool(val < ORACLE_TOL[name])))
    worst = max(checks.values())
    meta = scan.summary("oracle", {"gamma": 0.5, "h": 0.9}, {"T_L": 0.5, "T_R": 1.0}, "max_deviation",
                        worst, None, sw.elapsed, checks=checks)
    scan.emit_csv(table, args.out)
    if args.json_path:
        scan.emit_summary_json(meta, args.json_path)
    return EXIT_OK if all(r[-1] for r in table.rows) else EXIT_NUMERICAL


def preset_names() -> list[str]:
    root = resources.files("ness_lab") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_preset(name: str, overrides: dict | None = None) -> list[scan.ScanSpec]:
    if name.isdigit():
        name = f"fig{name}"
    if name not in preset_names():
        raise ConfigError(f"unknown preset {name!r} (known: {', '.join(preset_names())})", field="preset")
    text = (resources.files("ness_lab") / "presets" / f"{name}.yaml").read_text(encoding="utf-8")
    return scan.load_specs(text, f"{name}.yaml", overrides)


def cmd_figure(args):
    if args.list:
        for name in preset_names():
            print(name)
        return EXIT_OK
    if not args.preset:
        raise ConfigError("a preset name is required", field="preset", source="command line")
    specs = load_preset(args.preset, _overrides(args))
    outdir = "." if args.out == "-" else args.out
    name = args.preset if not args.preset.isdigit() else f"fig{args.preset}"
    failures, runs = 0, []
    for spec in specs:
        with scan.Stopwatch() as sw:
            table = scan.run_scan(spec, args.jobs)
        path = f"{outdir}/{name}_{spec.name}.csv"
        scan.emit_csv(table, path)
        print(path, file=sys.stderr)
        failures += table.failures
        runs.append(_scan_summary(spec, table, sw.elapsed) | {"csv": path, "reduced_scale": spec.reduced_scale})
    if args.json_path:
        meta = scan.summary("preset", {}, {}, name, None, None, sum(r["wall_time_s"] for r in runs), scans=runs)
        scan.emit_summary_json(meta, args.json_path)
    return EXIT_NUMERICAL if failures else EXIT_OK


COMMANDS = {
    "dispersion": cmd_dispersion,
    "correlate": cmd_correlate,
    "magnetization": cmd_magnetization,
    "susceptibility": cmd_susceptibility,
    "derivative-scan": cmd_derivative_scan,
    "jump": cmd_jump,
    "qmi": cmd_qmi,
    "meso-ness": cmd_meso_ness,
    "redfield-ness": cmd_redfield_ness,
    "oracle-check": cmd_oracle_check,
    "figure": cmd_figure,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"ness-lab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"ness-lab: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"ness-lab: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
