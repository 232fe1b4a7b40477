#!/usr/bin/env python3
"""
Linear functional observers: when does a low-order one exist?
=============================================================

A functional observer estimates one scalar ``z = q x`` from the outputs
``y = H x`` without rebuilding the whole state. Whether an observer of
order ``v`` exists depends on the eigenvalues you ask it to have.

This script walks through three cases:

1. a two-state plant where order 1 works for exactly one eigenvalue;
2. a random plant, where order ``v_o - 1`` works for any stable spectrum
   (``v_o`` is the observability index);
3. the same plant with a full design, its certificate and a short simulation.
"""

import numpy as np

from fobs import (
    Infeasible,
    LinearSystem,
    design_linear,
    minimal_order_search,
    observability_index,
    simulate,
    error_analysis,
)


def spectrum_dependence():
    print("1. Feasibility depends on the requested eigenvalue")
    print("-" * 50)
    # z = x2 is never seen directly: y = x1 and the modes are decoupled
    sys = LinearSystem([[0.8, 0.0], [0.0, 0.5]], [[1.0, 0.0]], [[0.0, 1.0]])
    vo = observability_index(sys)
    print(f"observability index: {'unobservable' if vo is None else vo}")
    for eig in (0.5, 0.7):
        try:
            d = design_linear(sys, [eig])
            print(f"  eigenvalue {eig}: feasible, residual {d.feasibility_residual:.1e}")
            print(f"    observer xi+ = {d.observer.A[0, 0]} xi, z_hat = xi  (T = {d.T[0]})")
        except Infeasible as inf:
            print(f"  eigenvalue {eig}: infeasible, residual {inf.residual:.3f}")
    # at 0.5 the observer copies the x2 mode, which needs no measurement
    print()


def order_below_index(rng):
    print("2. Order v_o - 1 works for arbitrary stable eigenvalues")
    print("-" * 50)
    F = rng.standard_normal((5, 5)) / np.sqrt(5)
    H = rng.standard_normal((1, 5))
    q = rng.standard_normal((1, 5))
    sys = LinearSystem(F, H, q)
    vo = observability_index(sys)
    print(f"n = {sys.n}, p = {sys.p}, observability index v_o = {vo}")
    for trial in range(3):
        eigs = list(rng.uniform(-0.9, 0.9, size=vo - 1))
        d = design_linear(sys, eigs)
        print(f"  eigenvalues {np.round(eigs, 3)}: certified={d.certified}, "
              f"res_dyn {d.res_dyn:.1e}, res_out {d.res_out:.1e}")

    # searching upward from order 1 with one fixed eigenvalue set per order
    sets = [list(np.linspace(0.1, 0.4, v)) for v in range(1, vo)]
    d = minimal_order_search(sys, sets)
    print(f"  lowest feasible order with the chosen sets: {d.v if d else None}")
    print()
    return sys, d


def run(sys, d, rng):
    print("3. Simulating the cascade")
    print("-" * 50)
    x0 = rng.standard_normal(sys.n)
    xi0 = d.T @ x0 + 1.0  # deliberately wrong start
    traj = simulate(sys, d.observer, x0, xi0, 40)
    ea = error_analysis(traj, d.T, d.observer)
    for k in (0, 1, 2, 5, 10, 20, 40):
        print(f"  k={k:3d}  z={traj.true_z[k]: .6f}  z_hat={traj.z_hat[k]: .6f}  "
              f"err={traj.err[k]: .3e}")
    print(f"  largest gap to the predicted error C A^k e0: {ea.max_dev:.1e}")


def main():
    rng = np.random.default_rng(7)
    spectrum_dependence()
    sys, d = order_below_index(rng)
    run(sys, d, rng)


if __name__ == "__main__":
    main()
