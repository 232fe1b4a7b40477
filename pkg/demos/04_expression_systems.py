#!/usr/bin/env python3
"""
Declaring plants with expressions
=================================

Nonlinear plants can be written as JSON with expression strings, the same
format the ``fobs`` command line reads. The transformation ``T`` of the
observer then comes back as an expression too.

Grammar notes: ``x1 .. xn`` are states, ``^`` is right associative and binds
tighter than unary minus, and ``exp`` is the only function.
"""

import numpy as np

from fobs import expr
from fobs.io import cstr_spec, system_from_dict
from fobs.linear import realize_observer
from fobs.nonlinear import check_condition, fit_beta, sample_box
from fobs.spectrum import poly_from_eigenvalues


def grammar():
    for text, x in [("2^3^2", []), ("-x1^2", [3.0]), ("x1*exp(-x2/2)", [2.0, 0.0])]:
        tree = expr.parse(text, max(1, len(x)))
        print(f"  {text:16s} -> {expr.to_string(tree):20s} = {expr.evaluate(tree, np.array(x))}")
    try:
        expr.parse("x1 + ", 1)
    except expr.ExprSyntaxError as err:
        print(f"  'x1 + '          -> {err}")


def small_plant():
    # z = x1 is driven by x2^2, and x2^2 can be recovered from y(k+1) - a y(k)
    spec = {
        "kind": "nonlinear",
        "name": "quadratic-coupling",
        "n": 2,
        "p": 1,
        "params": {"a": 0.5, "c": 0.6},
        "F": ["c*x1 + x2^2", "a*x2 + x2^2"],
        "H": ["x2"],
        "q": "x1",
        "domain_box": {"lower": [-0.5, -0.5], "upper": [0.5, 0.5]},
    }
    for key in ("F", "H", "q"):
        print(f"  {key}: {spec[key]}")
    model = system_from_dict(spec)
    sys = model.system()
    for eig in (0.6, 0.3):
        cp = poly_from_eigenvalues([eig])
        fit = fit_beta(sys, cp, sample_box(sys.domain_box, 200, 0), sample_box(sys.domain_box, 200, 1))
        print(f"  order 1 at eigenvalue {eig}: beta = {np.round(fit.beta.beta.ravel(), 6)}, "
              f"validation residual {fit.validation_residual:.1e}, candidate {fit.candidate}")
    cp = poly_from_eigenvalues([0.6])
    fit = fit_beta(sys, cp, sample_box(sys.domain_box, 200, 0), sample_box(sys.domain_box, 200, 1))
    res = check_condition(sys, cp, fit.beta, sample_box(sys.domain_box, 1000, 2))
    print(f"  sampled condition at 0.6: {res['max_residual']:.1e} ({res['label']})")
    print("  T_1(x) =", model.transformation_expressions(cp, fit.beta)[0])
    obs = realize_observer(cp, fit.beta)
    print(f"  observer: xi+ = {obs.A[0, 0]} xi + ({obs.B[0, 0]:.4f}) y, "
          f"z_hat = xi + ({obs.D[0, 0]:.4f}) y")


def reactor():
    model = system_from_dict(cstr_spec())
    print(f"  reactor spec: {len(model.params)} parameters, first update:")
    print("   ", model.F[0][:110], "...")


if __name__ == "__main__":
    print("Grammar")
    grammar()
    print("\nA small plant")
    small_plant()
    print("\nThe reactor in expression form")
    reactor()
