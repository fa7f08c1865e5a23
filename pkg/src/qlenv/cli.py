"""Command-line entry point: ``qlenv <command> FILE [options]``.

Reports are JSON on stdout with sorted keys; diagnostics go to stderr.
Exit codes: 0 success, 1 domain verdict failure, 2 input error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from . import linalg as la
from .classical import classify_d1, commutation_residual, to_classical_form
from .decompose import decompose
from .exceptions import NotClassical, NotUnitaryScheme, QleError
from .fixtures import EXAMPLES, PARAMETERS, build
from .io import CoefficientFile, ParseError, report
from .lindblad import detailed_balance_check, from_coefficients, semigroup_apply
from .simulate import SimConfig, compare_with_lindblad
from .validation import check_tolerance, default_tol, parse_observable

log = logging.getLogger("qlenv")

EXIT_OK, EXIT_DOMAIN, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def classical_form_dict(cf):
    return {
        "A0": cf.A0,
        "brownian": [{"index": t.index, "A": t.A} for t in cf.brownian],
        "poisson": [
            {"index": t.index, "B": t.B, "S": t.S, "rho": t.rho, "intensity": t.intensity, "jump": t.jump}
            for t in cf.poisson
        ],
        "gauge_only": [{"index": t.index, "S": t.S} for t in cf.gauge_only],
        "noise_change": cf.noise_change,
        "residuals": dict(sorted(cf.residuals.items())),
    }


def decomposition_dict(res):
    return {
        "dim_classical": res.dim_classical,
        "dim_quantum": res.dim_quantum,
        "Kc_basis": res.Kc_basis.T,
        "Kq_basis": res.Kq_basis.T,
        "tier": res.tier,
        "maximal_certified": res.maximal_certified,
        "classical_part": classical_form_dict(res.classical_part) if res.classical_part is not None else None,
        "quantum_L0": list(res.quantum_part.L0) if res.quantum_part is not None else [],
        "certificate": res.certificate,
    }


def _load(path):
    try:
        if path == "-":
            text = sys.stdin.read()
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return CoefficientFile.loads(text), text
    except (ParseError, la.ShapeError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _valid(cfile, tol):
    try:
        return cfile.coefficients.check(tol)
    except NotUnitaryScheme as exc:
        raise InputError(f"invalid coefficients: {exc.condition} violated (residual {exc.residual:.3e})") from None


def _tol(args):
    return check_tolerance(args.tol) if args.tol is not None else default_tol()


def cmd_validate(args):
    cfile, text = _load(args.path)
    c = cfile.coefficients
    tol = _tol(args)
    try:
        c.check(tol)
    except NotUnitaryScheme as exc:
        body = {"valid": False, "violation": exc.condition, "residual": exc.residual, "tolerance": tol}
        return EXIT_DOMAIN, report("validate", body, text)
    return EXIT_OK, report("validate", {"valid": True, "dim_system": c.n, "dim_noise": c.d, "tolerance": tol}, text)


def _classification(c, tol, search_budget):
    body = {"commutation_residual": commutation_residual(c)}
    if c.d == 1:
        v = classify_d1(c.H, c.L0[0], c.S, tol)
        body["d1"] = {"kind": v.kind, "theta": v.theta, "lambda": v.lam}
    try:
        cf = to_classical_form(c, tol)
    except NotClassical as exc:
        body["not_classical"] = exc.as_dict()
        res = decompose(c, tol, search_budget)
        body["verdict"] = "Mixed" if res.dim_classical else "Quantum"
        body["dim_classical"] = res.dim_classical
        return body, None
    body["verdict"] = "Classical"
    body["classical_form"] = classical_form_dict(cf)
    return body, cf


def cmd_classify(args):
    cfile, text = _load(args.path)
    tol = _tol(args)
    c = _valid(cfile, tol)
    body, _ = _classification(c, tol, args.search_budget)
    body["tolerance"] = tol
    return EXIT_OK, report("classify", body, text)


def cmd_decompose(args):
    cfile, text = _load(args.path)
    tol = _tol(args)
    c = _valid(cfile, tol)
    res = decompose(c, tol, args.search_budget, seed=args.seed)
    verdict = "Classical" if res.dim_quantum == 0 else ("Mixed" if res.dim_classical else "Quantum")
    body = {"verdict": verdict, "decomposition": decomposition_dict(res), "tolerance": tol}
    return EXIT_OK, report("decompose", body, text)


def _observable(args, n):
    try:
        return parse_observable(args.observable, n)
    except (ValueError, la.ShapeError) as exc:
        raise InputError(f"bad observable: {exc}") from None


def cmd_lindblad(args):
    cfile, text = _load(args.path)
    tol = _tol(args)
    c = _valid(cfile, tol)
    if args.time < 0:
        raise InputError("--time must be nonnegative")
    X = _observable(args, c.n)
    g = from_coefficients(c, tol)
    out = semigroup_apply(g, X, args.time)
    body = {"lindblad": {"observable": X, "time": args.time, "result": out, "jump_ops": list(g.jump_ops)}}
    return EXIT_OK, report("lindblad", body, text)


def cmd_detailed_balance(args):
    cfile, text = _load(args.path)
    tol = _tol(args)
    c = _valid(cfile, tol)
    v = detailed_balance_check(c, tol)
    body = {"detailed_balance": v.holds, "reason": v.reason, "failure": v.failure}
    if v.classical_form is not None:
        body["classical_form"] = classical_form_dict(v.classical_form)
    return (EXIT_OK if v.holds else EXIT_DOMAIN), report("detailed-balance", body, text)


def cmd_simulate(args):
    cfile, text = _load(args.path)
    tol = _tol(args)
    c = _valid(cfile, tol)
    X = _observable(args, c.n)
    try:
        config = SimConfig(args.dt, args.time, args.ntraj, args.seed, args.reunitarize)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    try:
        cf = to_classical_form(c, tol)
    except NotClassical as exc:
        print(
            f"refusing to simulate: the equation is not classical ({exc.reason}); "
            "run 'qlenv decompose' to extract its classical part",
            file=sys.stderr,
        )
        return EXIT_DOMAIN, report("simulate", {"refused": True, "not_classical": exc.as_dict()}, text)
    r = compare_with_lindblad(cf, c.H, X, args.time, config, workers=args.workers)
    body = {
        "simulation": {
            "config": {"dt": config.dt, "t_final": config.t_final, "n_traj": config.n_traj, "seed": config.seed, "reunitarize": config.reunitarize},
            "estimate": r["estimate"],
            "exact": r["exact"],
            "stderr": r["stderr"],
            "max_abs_error": r["max_abs_error"],
            "bound": r["bound"],
            "pass": r["pass"],
            "unitarity_defect": r["unitarity_defect"],
        }
    }
    return (EXIT_OK if r["pass"] else EXIT_DOMAIN), report("simulate", body, text)


def _angle(text):
    """Float, also accepting ``pi`` expressions like ``pi/6``."""
    t = text.strip().replace("π", "pi")
    try:
        return float(t)
    except ValueError:
        pass
    allowed = set("0123456789.+-*/() epi")
    if not set(t) <= allowed:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    try:
        return float(eval(t, {"__builtins__": {}}, {"pi": math.pi}))  # noqa: S307 - restricted charset
    except Exception:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def cmd_examples(args):
    params = {}
    if args.theta is not None:
        params["theta"] = args.theta
    if args.lam is not None:
        params["lam" if args.name != "poisson_d1" else "rho"] = args.lam
    try:
        c = build(args.name, **params)
    except KeyError as exc:
        raise InputError(exc.args[0]) from None
    except ValueError as exc:
        raise InputError(str(exc)) from None
    meta = {"name": args.name}
    names = PARAMETERS.get(args.name, ())
    defaults = {"theta": math.pi / 6, "lam": 2.0, "rho": 1.0}
    for p in names:
        meta[p] = repr(params.get(p, defaults[p]))
    text = CoefficientFile(c, meta).dumps()
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        return EXIT_OK, ""
    return EXIT_OK, text


def build_parser():
    p = argparse.ArgumentParser(prog="qlenv", description="Classify quantum Langevin equations as classical, quantum or mixed.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug diagnostics on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def with_file(name, func, help):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("path", help="coefficient file ('-' for stdin)")
        sp.add_argument("--tol", type=float, default=None, help=f"tolerance (default ${'QLENV_TOL'} or {la.DEFAULT_TOL})")
        sp.set_defaults(func=func)
        return sp

    with_file("validate", cmd_validate, "check that H is self-adjoint and S unitary")
    sp = with_file("classify", cmd_classify, "classical form or failure reason")
    sp.add_argument("--search-budget", type=int, default=2000)
    sp = with_file("decompose", cmd_decompose, "split the noise into classical and quantum parts")
    sp.add_argument("--search-budget", type=int, default=2000)
    sp.add_argument("--seed", type=int, default=0)
    sp = with_file("lindblad", cmd_lindblad, "apply the semigroup to an observable")
    sp.add_argument("--observable", default="sigma_z")
    sp.add_argument("--time", type=float, default=1.0)
    with_file("detailed-balance", cmd_detailed_balance, "Brownian-only classical witness")
    sp = with_file("simulate", cmd_simulate, "Monte Carlo check against the semigroup")
    sp.add_argument("--observable", default="sigma_z")
    sp.add_argument("--time", type=float, default=0.5)
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--ntraj", type=lambda s: int(float(s)), default=10000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--reunitarize", action="store_true")

    sp = sub.add_parser("examples", help="write a built-in fixture file")
    sp.add_argument("name", help=f"one of: {', '.join(sorted(EXAMPLES))}")
    sp.add_argument("--theta", type=_angle, default=None)
    sp.add_argument("--lambda", dest="lam", type=_angle, default=None)
    sp.add_argument("-o", "--output", default=None)
    sp.set_defaults(func=cmd_examples)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        code, out = args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, QleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if out:
        sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
