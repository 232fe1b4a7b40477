#!/usr/bin/env python3
"""
Checking a nonlinear plant on samples
=====================================

For a nonlinear plant the existence condition is an identity in ``x``. The
library checks it on uniform samples from a box, so a pass is evidence on
that box and nothing more.

Two toy plants:

* a plant where the functional obeys a linear recursion once the measured
  output is subtracted, so a scalar observer exists;
* ``x+ = 0.9 x``, ``y = x``, ``z = x^2``. The combination ``z(k+1) + a z(k)``
  is quadratic in ``x`` while the outputs only supply linear terms, so every
  fit is rejected.
"""

import warnings

import numpy as np

from fobs import CharPoly, NonlinearSystem, build_T_nonlinear, fit_beta, sample_box
from fobs.linear import realize_observer
from fobs.nonlinear import DegenerateFitWarning, check_condition, verify_design_conditions


def good_plant():
    print("Plant with an exact scalar observer")
    print("-" * 40)
    # x1+ = 0.5 x1 + sin(x2), x2+ = 0.7 x2; measure y = sin(x2), estimate x1
    sys = NonlinearSystem(
        F=lambda x: np.array([0.5 * x[0] + np.sin(x[1]), 0.7 * x[1]]),
        H=lambda x: np.array([np.sin(x[1])]),
        q=lambda x: x[0],
        n=2,
        p=1,
        domain_box=([-2.0, -2.0], [2.0, 2.0]),
    )
    cp = CharPoly([-0.5])
    fit = fit_beta(sys, cp, sample_box(sys.domain_box, 300, 1), sample_box(sys.domain_box, 300, 2))
    print(f"fitted beta = {fit.beta.beta.ravel()}, validation residual {fit.validation_residual:.1e}")
    print(f"candidate: {fit.candidate} ({fit.label})")
    obs = realize_observer(cp, fit.beta)
    T = build_T_nonlinear(sys, cp, fit.beta)
    chk = verify_design_conditions(sys, obs, T, sample_box(sys.domain_box, 500, 3))
    print(f"design conditions: dyn {chk['max_res_dyn']:.1e}, out {chk['max_res_out']:.1e}, "
          f"certified {chk['certified']}")
    print()


def quadratic_functional():
    print("Quadratic functional: no observer of order 1")
    print("-" * 40)
    sys = NonlinearSystem(
        F=lambda x: 0.9 * x, H=lambda x: x, q=lambda x: x[0] ** 2, n=1, p=1,
        domain_box=([-1.0], [1.0]),
    )
    train, val = sample_box(sys.domain_box, 200, 4), sample_box(sys.domain_box, 200, 5)
    for a1 in (-0.5, 0.0, 0.5):
        with warnings.catch_warnings():
            # H(F x) = 0.9 H(x) makes the regression rank deficient
            warnings.simplefilter("ignore", DegenerateFitWarning)
            fit = fit_beta(sys, CharPoly([a1]), train, val)
        print(f"  alpha_1 = {a1:+.1f}: validation residual {fit.validation_residual:.3f}, "
              f"candidate {fit.candidate}")
    # the exception: eigenvalue 0.81 = 0.9^2 is the mode of x^2 itself
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateFitWarning)
        fit = fit_beta(sys, CharPoly([-0.81]), train, val)
    res = check_condition(sys, CharPoly([-0.81]), fit.beta, val)
    print(f"  alpha_1 = -0.81: the quadratic terms cancel, residual {res['max_residual']:.1e}, "
          f"candidate {fit.candidate}")


if __name__ == "__main__":
    good_plant()
    quadratic_functional()
