"""``fobs`` command line.

Exit codes: 0 success/feasible, 2 infeasible (report still written),
1 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import cstr as cstr_mod
from .io import (
    ExpressionModel,
    SpecError,
    linear_report,
    load_json,
    load_system,
    nonlinear_report,
    report_beta,
    report_charpoly,
    report_observer,
    save_json,
)
from .linear import Infeasible, design_linear, realize_observer
from .model import LinearSystem, observability_index
from .nonlinear import (
    build_T_nonlinear,
    check_condition,
    fit_beta,
    sample_box,
    verify_design_conditions,
)
from .simulate import error_analysis, simulate, write_csv
from .spectrum import ConjugatePairError, parse_eigenvalues, poly_from_eigenvalues

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 1, 2


class InputError(Exception):
    pass


def default_seed():
    raw = os.environ.get("FOBS_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"FOBS_SEED must be an integer, got {raw!r}") from None


def _charpoly(args):
    try:
        eigs = parse_eigenvalues(args.eigenvalues)
    except ValueError as err:
        raise InputError(f"--eigenvalues: {err}") from None
    if len(eigs) != args.order:
        raise InputError(f"--order {args.order} needs {args.order} eigenvalues, got {len(eigs)}")
    try:
        return poly_from_eigenvalues(eigs)
    except ConjugatePairError as err:
        raise InputError(f"--eigenvalues: {err}") from None


def _vector(text, flag, size=None):
    try:
        vec = np.array([float(t) for t in text.split(",") if t.strip()])
    except ValueError:
        raise InputError(f"{flag}: expected comma-separated numbers") from None
    if size is not None and vec.shape != (size,):
        raise InputError(f"{flag}: expected {size} values, got {vec.size}")
    return vec


def cmd_design_linear(args):
    sys_ = load_system(args.system)
    if not isinstance(sys_, LinearSystem):
        raise InputError(f"{args.system}: design-linear needs a linear system")
    cp = _charpoly(args)
    try:
        design = design_linear(sys_, cp, strict=args.strict_span)
    except Infeasible as inf:
        save_json(args.out, linear_report(cp=cp, infeasible=inf, strict=args.strict_span))
        print(f"infeasible: residual {inf.residual:.6g}")
        return EXIT_INFEASIBLE
    save_json(args.out, linear_report(design, strict=args.strict_span))
    print(f"feasible: res_dyn {design.res_dyn:.3g}, res_out {design.res_out:.3g}")
    return EXIT_OK if design.certified else EXIT_INFEASIBLE


def _nonlinear(model):
    if isinstance(model, ExpressionModel):
        return model.system()
    return model.as_nonlinear()


def cmd_verify_nonlinear(args):
    if args.beta is None and not args.fit:
        raise InputError("verify-nonlinear needs --beta PATH or --fit")
    model = load_system(args.system)
    nl = _nonlinear(model)
    cp = _charpoly(args)
    seed = args.seed if args.seed is not None else default_seed()
    samples = sample_box(nl.domain_box, args.samples, seed)
    fit = None
    if args.fit:
        train = sample_box(nl.domain_box, args.samples, seed + 1)
        fit = fit_beta(nl, cp, train, samples)
        beta = fit.beta
    else:
        beta = report_beta(load_json(args.beta))
        if beta.v != cp.v or beta.p != nl.p:
            raise InputError(f"{args.beta}: beta must have shape ({cp.v + 1}, {nl.p})")
    obs = realize_observer(cp, beta)
    T = build_T_nonlinear(nl, cp, beta)
    cond = check_condition(nl, cp, beta, samples)
    check = verify_design_conditions(nl, obs, T, samples)
    T_expr = model.transformation_expressions(cp, beta) if isinstance(model, ExpressionModel) else None
    rep = nonlinear_report(cp, beta, obs, cond, check, T_expr, fit)
    save_json(args.out, rep)
    print(f"{'feasible' if rep['feasible'] else 'infeasible'}: condition residual "
          f"{cond['max_residual']:.3g} (scale {cond['scale']:.3g}), {cond['label']}")
    return EXIT_OK if rep["feasible"] else EXIT_INFEASIBLE


def cmd_simulate(args):
    model = load_system(args.system)
    rep = load_json(args.observer)
    obs = report_observer(rep)
    if isinstance(model, LinearSystem):
        plant = model
        if rep.get("T") is None:
            raise InputError(f"{args.observer}: report has no T")
        T = np.asarray(rep["T"], dtype=float)
    else:
        plant = model.system()
        T = build_T_nonlinear(plant, report_charpoly(rep), report_beta(rep))
    if obs.p != plant.p:
        raise InputError("observer and system have different output counts")
    x0 = _vector(args.x0, "--x0", plant.n)
    Tmap = T if callable(T) else (lambda x: T @ x)
    if args.xi0 is not None:
        xi0 = _vector(args.xi0, "--xi0", obs.v)
    elif args.consistent:
        xi0 = Tmap(x0)
    else:
        xi0 = Tmap(x0) + args.init_error
    traj = simulate(plant, obs, x0, xi0, args.steps)
    ea = error_analysis(traj, T, obs)
    write_csv(args.out, traj, ea.analytic_err)
    if traj.diverged_at is not None:
        print(f"simulation diverged: {traj.message}", file=sys.stderr)
        return EXIT_INPUT
    print(f"max |err - analytic_err| = {ea.max_dev:.3g} over {traj.N} steps")
    return EXIT_OK


def cmd_cstr(args):
    cs = cstr_mod.run_case_study(init_error=args.init_error, N=args.steps)
    states = cs.states_abs
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "C_A", "C_B", "theta", "theta_j", "z", "z_hat", "err", "analytic_err"])
        for k in range(len(cs.err)):
            w.writerow([k, *map(repr, map(float, states[k])), repr(float(cs.z_abs[k])),
                        repr(float(cs.z_hat_abs[k])), repr(float(cs.err[k])),
                        repr(float(cs.analytic_err[k]))])
    print(f"alpha_1 = {cs.design.alpha1:.6g}; max |err - analytic_err| = {cs.max_dev:.3g}")
    if cs.trajectory.diverged_at is not None:
        print(f"simulation diverged: {cs.trajectory.message}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def cmd_obs_index(args):
    sys_ = load_system(args.system)
    if not isinstance(sys_, LinearSystem):
        raise InputError("obs-index needs a linear system")
    idx = observability_index(sys_)
    print("unobservable" if idx is None else idx)
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="fobs", description="Functional observer design toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design-linear", help="design a linear functional observer")
    p.add_argument("--system", required=True)
    p.add_argument("--eigenvalues", required=True, help='e.g. "0.5, 0.3+0.4i, 0.3-0.4i"')
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--strict-span", action="store_true",
                   help="exclude the highest iterated outputs (forces D = 0)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_design_linear)

    p = sub.add_parser("verify-nonlinear", help="check or fit beta on sampled states")
    p.add_argument("--system", required=True)
    p.add_argument("--eigenvalues", required=True)
    p.add_argument("--order", type=int, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--beta", help="JSON file with a 'beta' array (beta_0 first)")
    g.add_argument("--fit", action="store_true")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_verify_nonlinear)

    p = sub.add_parser("simulate", help="simulate plant and observer, write CSV")
    p.add_argument("--system", required=True)
    p.add_argument("--observer", required=True, help="design report JSON")
    p.add_argument("--x0", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--xi0")
    g.add_argument("--consistent", action="store_true")
    g.add_argument("--init-error", type=float)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("cstr", help="reactor case study, write CSV")
    p.add_argument("--init-error", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=600)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cstr)

    p = sub.add_parser("obs-index", help="print the observability index")
    p.add_argument("--system", required=True)
    p.set_defaults(func=cmd_obs_index)
    return ap


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if getattr(args, "steps", 1) < 1 or getattr(args, "samples", 1) < 1:
        print("fobs: error: --steps/--samples must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except (InputError, SpecError) as err:
        print(f"fobs: error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
