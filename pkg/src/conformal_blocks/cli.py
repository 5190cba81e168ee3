"""Command-line front end.

    conformal-blocks eval PARAMS --z 0.4+0.3i
    conformal-blocks coeffs PARAMS [--basis lambda|large_z|g|nu]
    conformal-blocks validate PARAMS
    conformal-blocks verify PARAMS --kind ip1 --z 0.4+0.3i [--mc-budget N --seed S]
    conformal-blocks fourier --kind theorem1 --gamma 0.3 --n 0 --q 1 [--oracle]
    conformal-blocks grid PARAMS --center 0 --radius 0.5 --counts 5 5 [--format csv]

PARAMS is a JSON file {"p": 1, "a0": [re, im], "a": [[re, im], ...], "b": ...,
"a0_t": ..., "a_t": ..., "b_t": ...}.  Every emitted number carries a method
tag ("closed-form" or "oracle") and an error estimate.  Exit codes: 0 ok,
1 numerical failure (or a failed verification), 2 bad input.
"""

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy

from . import __version__
from . import blocks, fourier, mellin, oracle
from .errors import ConditionCViolation, InputError, NumericError

CLOSED = "closed-form"
ORACLE = "oracle"
DEFAULT_SEED = 0


class UsageError(InputError):
    def __init__(self, message, field=None):
        self.field = field
        super().__init__(message)


def parse_complex(text):
    """'0.4+0.3i', '0.4+0.3j', '-2', '1e-3i' -> complex."""
    s = str(text).strip().replace(" ", "").replace("i", "j").replace("I", "j")
    try:
        return complex(s)
    except ValueError:
        raise UsageError(f"cannot parse complex number {text!r}", "z") from None


def pair(z):
    z = complex(z)
    return [z.real, z.imag]


def load_params(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"parameter file {path} not found", "params_file") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"parameter file is not valid JSON: {exc}", "params_file") from None
    required = ("a0", "a", "b", "a0_t", "a_t", "b_t")
    for key in required:
        if key not in data:
            raise UsageError(f"parameter file lacks field {key!r}", key)
    for key in required:
        vals = [data[key]] if key in ("a0", "a0_t") else data[key]
        if not isinstance(vals, list):
            raise UsageError(f"field {key!r} must be a list of [re, im] pairs", key)
        for v in vals:
            if not (isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v)):
                raise UsageError(f"field {key!r}: complex numbers are [re, im] arrays, got {v!r}", key)
    try:
        return blocks.ParameterSet.from_dict(data)
    except ValueError as exc:
        raise UsageError(str(exc), "p") from None


def _series_entry(res, method=CLOSED):
    return {"value": pair(res.value), "abs_err": float(res.tail_bound), "method": method,
            "converged": bool(res.converged)}


def _oracle_entry(est):
    out = {"value": pair(est.value), "abs_err": float(est.abs_error), "method": ORACLE,
           "engine": est.method.value, "n_evals": int(est.n_evals), "converged": bool(est.converged)}
    if est.seed is not None:
        out["seed"] = est.seed
    if est.regularization is not None:
        out["regularization"] = {"eps": list(est.regularization.eps),
                                 "exponents": list(est.regularization.exponents)}
    return out


def versions():
    return {"conformal_blocks": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


# ---------------------------------------------------------------- commands

def cmd_eval(args):
    ps = load_params(args.params_file)
    z = parse_complex(args.z)
    res = blocks.evaluate(ps, z, tol=args.tol)
    return {"result": _series_entry(res), "condition_report": blocks.validate(ps).to_dict()}


def cmd_coeffs(args):
    ps = load_params(args.params_file)
    fn = {"lambda": blocks.lambda_coeffs, "large_z": blocks.large_z_coeffs,
          "g": blocks.g_basis_coeffs, "nu": blocks.nu_coeffs}[args.basis]
    dec = fn(ps)
    rows = [{"j": j, "value": pair(c), "abs_err": 0.0, "method": CLOSED}
            for j, c in enumerate(dec.coeffs)]
    out = {"basis": dec.basis.value, "coefficients": rows}
    if dec.prefactor is not None and dec.prefactor != 1:
        out["prefactor"] = {"value": pair(dec.prefactor), "abs_err": 0.0, "method": CLOSED}
    out["condition_report"] = blocks.validate(ps).to_dict()
    return out


def cmd_validate(args):
    ps = load_params(args.params_file)
    rep = blocks.validate(ps)
    if not rep.ok:
        raise ConditionCViolation(rep)
    return {"condition_report": rep.to_dict()}


_KINDS = {"ip1": oracle.Kind.Ip1, "ip2": oracle.Kind.Ip2_iterated,
          "appendix": oracle.Kind.AppendixA}


def cmd_verify(args):
    ps = load_params(args.params_file)
    kind = _KINDS[args.kind]
    if kind == oracle.Kind.AppendixA:
        closed = mellin.boundary_value_closed_form(ps).value
        closed_err = 0.0
        spec = oracle.IntegrandSpec(kind, ps)
    else:
        if args.z is None:
            raise UsageError("--z is required for this kind", "z")
        z = parse_complex(args.z)
        res = blocks.evaluate(ps, z, tol=args.tol)
        closed, closed_err = res.value, res.tail_bound
        spec = oracle.IntegrandSpec(kind, ps, z)
    method = "MC" if args.mc else None
    est = oracle.integrate(spec, budget=args.mc_budget, method=method, seed=args.seed)
    diff = abs(closed - est.value)
    allowed = max(args.rel_tol * abs(closed), est.abs_error)
    return {"closed_form": {"value": pair(closed), "abs_err": float(closed_err), "method": CLOSED},
            "oracle": _oracle_entry(est),
            "difference": diff, "allowed": allowed, "pass": bool(diff <= allowed)}


def cmd_fourier(args):
    q = parse_complex(args.q)
    if args.kind == "theorem1":
        gt = args.gamma + args.n if args.gamma_t is None else args.gamma_t
        fp = fourier.FourierParams(args.gamma, gt, q)
        val = fourier.theorem1_general(fp)
        spec_args = (oracle.Kind.Fourier, fp)
    else:
        qp = fourier.QCDParams(args.v1, args.v2, parse_complex(args.rho), q)
        val = fourier.theorem2_halfinteger_case(qp)
        spec_args = (oracle.Kind.QCD, qp)
    out = {"closed_form": {"value": pair(val), "abs_err": 0.0, "method": CLOSED}}
    if args.oracle:
        est = oracle.integrate(oracle.IntegrandSpec(*spec_args))
        out["oracle"] = _oracle_entry(est)
        out["difference"] = abs(val - est.value)
    return out


def _grid_points(center, radius, counts):
    nx, ny = counts
    if nx < 1 or ny < 1:
        raise UsageError("grid counts must be >= 1", "counts")
    xs = [center.real] if nx == 1 else list(np.linspace(center.real - radius, center.real + radius, nx))
    ys = [center.imag] if ny == 1 else list(np.linspace(center.imag - radius, center.imag + radius, ny))
    return [complex(x, y) for y in ys for x in xs]


def _grid_eval(ps, z, tol):
    try:
        res = blocks.evaluate(ps, z, tol=tol)
        return {"z": pair(z), "value": pair(res.value), "abs_err": float(res.tail_bound),
                "method": CLOSED}
    except (InputError, NumericError) as exc:
        return {"z": pair(z), "value": [math.nan, math.nan], "abs_err": math.inf,
                "method": f"{CLOSED}:error:{type(exc).__name__}"}


def cmd_grid(args):
    ps = load_params(args.params_file)
    blocks.require_condition_c(ps)
    pts = _grid_points(parse_complex(args.center), args.radius, args.counts)
    with ThreadPoolExecutor(max_workers=oracle._workers(None)) as ex:
        rows = list(ex.map(lambda z: _grid_eval(ps, z, args.tol), pts))
    return {"grid": {"center": pair(parse_complex(args.center)), "radius": args.radius,
                     "counts": list(args.counts)}, "rows": rows}


COMMANDS = {"eval": cmd_eval, "coeffs": cmd_coeffs, "validate": cmd_validate,
            "verify": cmd_verify, "fourier": cmd_fourier, "grid": cmd_grid}


# ---------------------------------------------------------------- output

def _csv_rows(command, report):
    if command == "grid":
        for r in report["rows"]:
            yield r["z"] + r["value"] + [r["abs_err"], r["method"]]
    elif command == "eval":
        r = report["result"]
        yield report["request"]["z_value"] + r["value"] + [r["abs_err"], r["method"]]
    elif command in ("verify", "fourier"):
        z = report["request"].get("z_value", [math.nan, math.nan])
        for key in ("closed_form", "oracle"):
            if key in report:
                r = report[key]
                yield z + r["value"] + [r["abs_err"], r["method"]]
    elif command == "coeffs":
        for r in report["coefficients"]:
            yield [math.nan, math.nan] + r["value"] + [r["abs_err"], f"{r['method']}:j={r['j']}"]
    else:
        raise UsageError(f"CSV output is not available for {command}", "output_format")


def to_csv(command, report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re(z)", "im(z)", "re(I)", "im(I)", "abs_err", "method"])
    for row in _csv_rows(command, report):
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def build_parser():
    p = argparse.ArgumentParser(prog="conformal-blocks", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, params=True):
        if params:
            sp.add_argument("params_file")
        sp.add_argument("--tol", type=float, default=1e-14)
        sp.add_argument("--format", dest="output_format", choices=("json", "csv"), default="json")
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--mc-budget", type=int, default=None)

    sp = sub.add_parser("eval", help="closed-form value at one z")
    common(sp)
    sp.add_argument("--z", required=True)
    sp = sub.add_parser("coeffs", help="block coefficients")
    common(sp)
    sp.add_argument("--basis", choices=("lambda", "large_z", "g", "nu"), default="lambda")
    sp = sub.add_parser("validate", help="Condition C report")
    common(sp)
    sp = sub.add_parser("verify", help="closed form against brute-force quadrature")
    common(sp)
    sp.add_argument("--kind", choices=sorted(_KINDS), default="ip1")
    sp.add_argument("--z")
    sp.add_argument("--rel-tol", type=float, default=1e-3)
    sp.add_argument("--mc", action="store_true", help="force the Monte Carlo engine")
    sp = sub.add_parser("fourier", help="Fourier transforms of power laws")
    common(sp, params=False)
    sp.add_argument("--kind", choices=("theorem1", "theorem2"), default="theorem1")
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--gamma-t", type=float)
    sp.add_argument("--n", type=int, default=0)
    sp.add_argument("--v1", type=float)
    sp.add_argument("--v2", type=float)
    sp.add_argument("--rho", default="2")
    sp.add_argument("--q", required=True)
    sp.add_argument("--oracle", action="store_true")
    sp = sub.add_parser("grid", help="closed-form values on a rectangular z grid")
    common(sp)
    sp.add_argument("--center", default="0")
    sp.add_argument("--radius", type=float, required=True)
    sp.add_argument("--counts", type=int, nargs=2, required=True, metavar=("NX", "NY"))
    return p


def _check_fourier_args(args):
    if args.command != "fourier":
        return
    need = ("gamma",) if args.kind == "theorem1" else ("v1", "v2")
    for name in need:
        if getattr(args, name) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required for {args.kind}", name)


def _request_echo(args):
    req = {k: v for k, v in vars(args).items()}
    for key in ("z", "center"):
        if req.get(key) is not None:
            req[f"{key}_value"] = pair(parse_complex(req[key]))
    if "counts" in req and req["counts"] is not None:
        req["counts"] = list(req["counts"])
    return req


_COMPLEX_FLAGS = ("--z", "--center", "--q", "--rho")


def _attach_negative_values(argv):
    # argparse reads "--z -0.5+0.2i" as two options; glue the value on
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _COMPLEX_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def run(argv=None, stdout=None, stderr=None):
    """Run one command; returns the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    argv = _attach_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    t0 = time.perf_counter()
    try:
        _check_fourier_args(args)
        echo = _request_echo(args)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            report = COMMANDS[args.command](args)
        report = {"request": echo, **report,
                  "warnings": sorted({f"{w.category.__name__}: {w.message}" for w in caught}),
                  "timing_s": time.perf_counter() - t0, "versions": versions()}
        if args.output_format == "csv":
            stdout.write(to_csv(args.command, report))
        else:
            stdout.write(json.dumps(report, indent=2) + "\n")
        if args.command == "verify" and not report["pass"]:
            return 1
        return 0
    except ConditionCViolation as exc:
        diag = {"error": "ConditionCViolation", "message": str(exc),
                "violations": exc.report.to_dict()["violations"]}
        stderr.write(json.dumps(diag) + "\n")
        return 2
    except InputError as exc:
        diag = {"error": type(exc).__name__, "message": str(exc)}
        if getattr(exc, "field", None):
            diag["field"] = exc.field
        stderr.write(json.dumps(diag) + "\n")
        return 2
    except NumericError as exc:
        stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
