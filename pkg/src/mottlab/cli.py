"""Command-line runner: one subcommand per computation, CSV out, JSON manifest.

Every subcommand accepts ``--out``, ``--seed``, ``--threads`` and
``--config``.  A config file is INI text; keys in ``[common]`` and in the
section named after the subcommand are the long flag names (``nu-list`` or
``nu_list``) and are parsed by the same converters as the flags.  Explicit
flags win over the file.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .errors import (BroadeningError, ConfigurationError, DomainError, IllConditionedFit,
                     InvalidParameterError, MottlabError, NumericFailure, OutOfRegimeError)

THREADS_ENV = "MOTTLAB_THREADS"

EXIT_CODES = {
    "ok": 0,
    "regime_check_failed": 1,
    "usage": 2,
    "InvalidParameterError": 3,
    "DomainError": 4,
    "OutOfRegimeError": 5,
    "ConfigurationError": 6,
    "BroadeningError": 7,
    "NumericFailure": 8,
    "IllConditionedFit": 9,
    "MottlabError": 10,
}

# most specific first
_ERROR_ORDER = (IllConditionedFit, NumericFailure, BroadeningError, ConfigurationError,
                OutOfRegimeError, DomainError, InvalidParameterError, MottlabError)


class SchemaError(Exception):
    """Unknown key or unparsable value in a config file."""


def float_list(text):
    try:
        vals = [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def alpha_value(text):
    if str(text).strip().lower() == "golden":
        return (math.sqrt(5.0) - 1.0) / 2.0
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"alpha must be 'golden' or a number, got {text!r}") from exc


def format_value(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def read_csv(path):
    """Header and rows of a CSV written by this tool; numeric cells become floats."""
    def cell(v):
        try:
            return float(v)
        except ValueError:
            return v

    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [[cell(v) for v in row] for row in r]


# ---- subcommands -------------------------------------------------------------

def _regime(args, nu=None):
    from .model import RegimeParams
    return RegimeParams(args.d, args.EF, nu if nu is not None else args.nu_list[0], rho=args.rho,
                        localization_radius=args.rl, overlap_amplitude=args.I0)


def cmd_sigma(args):
    from .response import sigma_sweep
    nus = args.nu_list
    if args.nu_min is not None or args.nu_max is not None:
        if args.nu_min is None or args.nu_max is None or not 0 < args.nu_min <= args.nu_max:
            raise InvalidParameterError("nu", "--nu-min and --nu-max need 0 < nu-min <= nu-max")
        nus = list(np.geomspace(args.nu_min, args.nu_max, args.points))
    rows = sigma_sweep(_regime(args, nus[0]), nus, args.preset)
    return ["nu", "sigma_integral", "sigma_asymptotic", "ratio"], rows, {}


def cmd_correlators(args):
    from .correlators import (FIGURE_PRESETS, correlator_curve, default_grid, figure_regime,
                              peak_diagnostics, sum_rules)
    from .model import RegimeParams
    if args.preset:
        reg = figure_regime(args.preset)
        used = dict(FIGURE_PRESETS[args.preset])
    else:
        reg = RegimeParams(args.d, -args.rl**-2, args.nu, rho=args.rho, localization_radius=args.rl)
        used = dict(dimension=args.d, nu=args.nu, r_l=args.rl, rho=args.rho)
    x = default_grid(reg, extent_rl=args.extent, step=args.step)
    curve = correlator_curve(x, reg)
    peaks = peak_diagnostics(curve)
    rules = sum_rules(curve)
    results = {
        "parameters": used,
        "resonance_radius": curve.resonance_radius,
        "origin_height": peaks.origin_height,
        "dip_location": peaks.dip_location,
        "dip_height": peaks.dip_height,
        "decay_rate": peaks.decay_rate,
        "zero_integral_residual": float(rules.zero_integral_residual),
        "tail_deviation": float(rules.tail_deviation),
        "moment_mismatch": float(rules.moment_mismatch),
        "method": curve.method,
    }
    return ["x", "C1", "C2"], list(zip(curve.x, curve.C1, curve.C2)), results


def _profile(args):
    from .model import DensityProfile
    if args.profile == "gaussian":
        return DensityProfile.gaussian(args.mu, args.center, args.width)
    return DensityProfile.uniform(args.mu, args.g_lo, args.g_hi)


def cmd_dos(args):
    from .expansion import dos_curve
    from .model import RegimeParams
    prof = _profile(args)
    reg = RegimeParams(args.d, args.EF, 1e-4 * abs(args.EF), localization_radius=args.rl,
                       overlap_amplitude=args.I0)
    curve = dos_curve(args.E_list, prof, reg)
    return ["E", "rho1", "rho2", "mu"], curve.rows(), {"profile": prof.label}


def cmd_twowell(args):
    from .model import RegimeParams
    from .twowell import sweep
    reg = RegimeParams(1, args.EF, 1e-4 * abs(args.EF), localization_radius=args.rl,
                       overlap_amplitude=args.I0)
    rows = sweep(args.g1, args.g2, args.y_list, reg, args.mode)
    return ["y", "E1", "E2", "theta", "X12"], rows, {}


def cmd_delta1d(args):
    from .delta1d import DeltaPair, fit_error_decay, sweep_rows
    rows = sweep_rows(args.g1, args.g2, args.y_list)
    results = {"critical_separation": DeltaPair(args.g1, args.g2, 0.0).critical_separation}
    if len(args.y_list) >= 2 and args.g2 > 0:
        results["error_decay_slope"] = fit_error_decay(args.g1, args.g2, args.y_list)[0]
    return ["y", "E1_exact", "E2_exact", "E1_proj", "E2_proj", "split_err"], rows, results


def cmd_direct_kubo(args):
    from .directkubo import (BoxParams, calibrate_overlap, ensemble_kubo, mott_scaling_fit,
                             run_ensemble)
    from .model import DensityProfile
    prof = DensityProfile.uniform(args.mu, args.g_lo, args.g_hi) if args.mu > 0 else None
    params = BoxParams(args.L, args.h, args.mu, prof)
    nus = np.asarray(args.nu_list, dtype=float)
    window = args.window if args.window > 0 else None
    records = run_ensemble(params, args.seed, args.realizations, E_F=args.EF, nus=nus,
                           eta_ratio=args.eta_ratio, window=window, threads=args.threads)
    est = ensemble_kubo(records, nus, eta_ratio=args.eta_ratio, window=window)
    results = {"realizations": est.R, "window": window}
    if args.fit:
        I0, rl = calibrate_overlap(abs(args.EF), h=args.h)
        fit = mott_scaling_fit(est, I0)
        results.update(I0=I0, r_l=rl, p=fit.p, p_stderr=fit.p_stderr, p_ci=list(fit.ci),
                       amplitude=fit.amplitude, chi2_red=fit.chi2_red, condition=fit.condition)
    return ["nu", "sigma", "stderr"], est.rows(), results


def cmd_maryland(args):
    from .maryland import MarylandParams, calibrate_diophantine, contrast_report, spectrum
    from .model import RegimeParams
    params = MarylandParams(1, args.g, (args.alpha,), args.omega)
    C, beta = calibrate_diophantine(args.alpha, 2 * args.window)
    params = params.with_constants(C, beta)
    reg = RegimeParams(1, -1.0, min(args.nu_list), localization_radius=args.rl)
    rows = contrast_report(params, args.nu_list, reg, args.window, tuple(args.energy_window))
    extra = None
    if args.out:
        spec = spectrum(params, args.window)
        extra = (_sibling(args.out, "spectrum"), ["t", "E_t"], spec.rows())
    table = [(r.nu, r.r_random, r.r1_formula, r.r1_empirical) for r in rows]
    return (["nu", "r_random", "r1_formula", "r1_empirical"], table,
            {"C": C, "beta": beta, "extra": extra})


def cmd_validate(args):
    from .model import RegimeParams, validate_regime
    params = RegimeParams(args.d, args.EF, args.nu_list[0], well_density=args.mu_wells,
                          well_radius=args.a)
    rep = validate_regime(params, {"default": args.threshold})
    rows = [(c.name, c.ratio, c.threshold, c.passed) for c in rep.checks]
    return ["check", "ratio", "threshold", "passed"], rows, {"passed": rep.passed}


# ---- parser ------------------------------------------------------------------

def _common(p):
    p.add_argument("--out", default=None, help="CSV path; a .manifest.json is written next to it")
    p.add_argument("--seed", type=int, default=0, help="master seed for Monte Carlo commands")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default: ${THREADS_ENV} or 1)")
    p.add_argument("--config", default=None, help="INI file with [common]/[<command>] sections")


def _regime_flags(p, nu_default="1e-4"):
    p.add_argument("--d", type=int, default=1, choices=(1, 2, 3))
    p.add_argument("--EF", type=float, default=-1.0)
    p.add_argument("--nu", "--nu-list", dest="nu_list", type=float_list, default=float_list(nu_default))
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--rl", type=float, default=None)
    p.add_argument("--I0", type=float, default=None)


def build_parser():
    parser = argparse.ArgumentParser(prog="mottlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mottlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sigma", help="two-well conductivity vs its Mott asymptotics")
    _regime_flags(p)
    p.add_argument("--preset", choices=("mott", "white-noise"), default="mott")
    p.add_argument("--nu-min", type=float, default=None, help="log-spaced sweep, overrides --nu")
    p.add_argument("--nu-max", type=float, default=None)
    p.add_argument("--points", type=int, default=9)
    p.set_defaults(func=cmd_sigma)

    p = sub.add_parser("correlators", help="C1, C2 curves (fig1/fig2 presets)")
    p.add_argument("--preset", choices=("fig1", "fig2"), default=None)
    p.add_argument("--d", type=int, default=1, choices=(1, 2, 3))
    p.add_argument("--nu", type=float, default=1e-4)
    p.add_argument("--rl", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--extent", type=float, default=15.0, help="grid reaches r(nu) + extent r_l")
    p.add_argument("--step", type=float, default=None)
    p.set_defaults(func=cmd_correlators)

    p = sub.add_parser("dos", help="one-well DOS and the pair correction")
    p.add_argument("--d", type=int, default=1, choices=(1, 2, 3))
    p.add_argument("--EF", type=float, default=-1.0, help="sets the default r_l and I0")
    p.add_argument("--rl", type=float, default=None)
    p.add_argument("--I0", type=float, default=None)
    p.add_argument("--profile", choices=("gaussian", "uniform"), default="gaussian")
    p.add_argument("--mu", type=float, default=1e-3)
    p.add_argument("--center", type=float, default=1.0)
    p.add_argument("--width", type=float, default=0.1)
    p.add_argument("--g-lo", type=float, default=1.0)
    p.add_argument("--g-hi", type=float, default=2.0)
    p.add_argument("--E", "--E-list", dest="E_list", type=float_list, default=float_list("-1.1,-1.0,-0.9"))
    p.set_defaults(func=cmd_dos)

    p = sub.add_parser("twowell", help="projected pair levels, mixing angle, dipole")
    p.add_argument("--g1", type=float, default=1.0)
    p.add_argument("--g2", type=float, default=1.0)
    p.add_argument("--y", "--y-list", dest="y_list", type=float_list, default=float_list("4,6,8,10,12"))
    p.add_argument("--mode", choices=("model", "delta_exact", "delta_state_overlap"), default="model")
    p.add_argument("--EF", type=float, default=-1.0)
    p.add_argument("--rl", type=float, default=None)
    p.add_argument("--I0", type=float, default=None)
    p.set_defaults(func=cmd_twowell)

    p = sub.add_parser("delta1d", help="exact delta-pair levels vs the projection")
    p.add_argument("--g1", type=float, default=1.0)
    p.add_argument("--g2", type=float, default=1.0)
    p.add_argument("--y", "--y-list", dest="y_list", type=float_list, default=float_list("4,6,8,10,12"))
    p.set_defaults(func=cmd_delta1d)

    p = sub.add_parser("direct-kubo", help="Monte Carlo Kubo conductivity in a 1D box")
    p.add_argument("--L", type=float, default=400.0)
    p.add_argument("--h", type=float, default=0.098)
    p.add_argument("--mu", type=float, default=0.05)
    p.add_argument("--g-lo", type=float, default=0.975)
    p.add_argument("--g-hi", type=float, default=1.025)
    p.add_argument("--EF", type=float, default=-1.0)
    p.add_argument("--nu", "--nu-list", dest="nu_list", type=float_list,
                   default=float_list("1e-4,2e-4,4e-4,8e-4,1.5e-3,3e-3"))
    p.add_argument("--eta-ratio", type=float, default=0.2)
    p.add_argument("--window", type=float, default=0.04,
                   help="average E_F over this energy window (0: sharp E_F)")
    p.add_argument("--realizations", type=int, default=200)
    p.add_argument("--fit", action="store_true", help="fit sigma = A nu^2 ln^p(2 I0/nu)")
    p.set_defaults(func=cmd_direct_kubo)

    p = sub.add_parser("maryland", help="resonance distances in the Maryland model")
    p.add_argument("--alpha", type=alpha_value, default=alpha_value("golden"))
    p.add_argument("--g", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=0.3)
    p.add_argument("--window", type=int, default=2000, help="sites -window..window")
    p.add_argument("--nu", "--nu-list", dest="nu_list", type=float_list,
                   default=float_list("0.1,0.05,0.02,0.01,0.005,0.002"))
    p.add_argument("--energy-window", type=float_list, default=float_list("-1,1"))
    p.add_argument("--rl", type=float, default=1.0, help="r_l of the random model in the report")
    p.set_defaults(func=cmd_maryland)

    p = sub.add_parser("validate", help="strong-localization inequalities")
    p.add_argument("--d", type=int, default=1, choices=(1, 2, 3))
    p.add_argument("--EF", type=float, default=-1.0)
    p.add_argument("--nu", "--nu-list", dest="nu_list", type=float_list, default=float_list("1e-4"))
    p.add_argument("--mu-wells", type=float, default=None, help="well density")
    p.add_argument("--a", type=float, default=None, help="well radius")
    p.add_argument("--threshold", type=float, default=0.05)
    p.set_defaults(func=cmd_validate)

    for sp in sub.choices.values():
        _common(sp)
    return parser


def _apply_config(parser, argv, args):
    """Re-parse with config-file values installed as subparser defaults."""
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sp = sub.choices[args.command]
    cfg = configparser.ConfigParser()
    cfg.optionxform = str
    if not cfg.read(args.config):
        raise SchemaError(f"cannot read config file {args.config!r}")
    by_name = {}
    for act in sp._actions:
        for opt in act.option_strings:
            key = opt.lstrip("-").replace("-", "_")
            by_name[key] = act
            by_name.setdefault(key.lower(), act)
    values = {}
    for section in ("common", args.command):
        if not cfg.has_section(section):
            continue
        for key, raw in cfg.items(section):
            norm = key.replace("-", "_")
            act = by_name.get(norm) or by_name.get(norm.lower())
            if act is None or act.dest in ("config", "help"):
                raise SchemaError(f"unknown key {key!r} in [{section}]")
            if isinstance(act, argparse._StoreTrueAction):
                values[act.dest] = cfg.getboolean(section, key)
                continue
            try:
                val = act.type(raw) if act.type else raw
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise SchemaError(f"[{section}] {key}: {exc}") from exc
            if act.choices is not None and val not in act.choices:
                raise SchemaError(f"[{section}] {key}: {val!r} not in {list(act.choices)}")
            values[act.dest] = val
    unknown = set(cfg.sections()) - {"common", args.command}
    if unknown:
        raise SchemaError(f"unknown config sections {sorted(unknown)}")
    sp.set_defaults(**values)
    return parser.parse_args(argv)


def _sibling(out, tag):
    root, ext = os.path.splitext(out)
    return f"{root}.{tag}{ext or '.csv'}"


def _sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def _error_record(exc, code):
    return json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code})


def exit_code_for(exc):
    for cls in _ERROR_ORDER:
        if isinstance(exc, cls):
            return EXIT_CODES[cls.__name__]
    return EXIT_CODES["MottlabError"]


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.config:
            args = _apply_config(parser, argv, args)
    except SchemaError as exc:
        print(_error_record(exc, EXIT_CODES["usage"]), file=sys.stderr)
        return EXIT_CODES["usage"]
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads is None:
        args.threads = int(os.environ.get(THREADS_ENV, "1"))
    started = datetime.now(timezone.utc).isoformat()
    try:
        header, rows, results = args.func(args)
    except MottlabError as exc:
        code = exit_code_for(exc)
        print(_error_record(exc, code), file=sys.stderr)
        return code
    extra = results.pop("extra", None)
    text = csv_text(header, rows)
    if args.out is None:
        sys.stdout.write(text)
        if results:
            print(json.dumps(_jsonable(results)), file=sys.stderr)
    else:
        outputs = []
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
        outputs.append(args.out)
        if extra is not None:
            path, xh, xrows = extra
            with open(path, "w", newline="") as fh:
                fh.write(csv_text(xh, xrows))
            outputs.append(path)
        params = {k: v for k, v in vars(args).items() if k not in ("func",)}
        manifest = {
            "command": args.command,
            "parameters": _jsonable(params),
            "seed": args.seed,
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "started": started,
            "finished": datetime.now(timezone.utc).isoformat(),
            "outputs": {p: _sha256(p) for p in outputs},
            "results": _jsonable(results),
        }
        with open(os.path.splitext(args.out)[0] + ".manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
    if args.command == "validate":
        passed = results.get("passed", True) if args.out is None else manifest["results"]["passed"]
        if not passed:
            return EXIT_CODES["regime_check_failed"]
    return EXIT_CODES["ok"]


if __name__ == "__main__":
    sys.exit(main())
