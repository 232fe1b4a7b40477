"""Plant/observer cascade simulation and error-law checks."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .nonlinear import _as_map

__all__ = ["Trajectory", "ErrorAnalysis", "simulate", "error_analysis", "write_csv"]


@dataclass(frozen=True)
class Trajectory:
    """Cascade history for ``k = 0..N``.

    If the plant produced a non-finite or out-of-domain state, the arrays stop
    at the last good step and ``diverged_at`` holds the failing step.
    """

    states: np.ndarray
    outputs: np.ndarray
    true_z: np.ndarray
    xi_hat: np.ndarray
    z_hat: np.ndarray
    diverged_at: int = None
    message: str = ""

    @property
    def N(self):
        return len(self.true_z) - 1

    @property
    def err(self):
        return self.z_hat - self.true_z


def simulate(sys, obs, x0, xi0, N):
    """Run ``x+ = F(x)``, ``xi+ = A xi + B H(x)``, ``z_hat = C xi + D H(x)``.

    Works with linear or nonlinear plants. ``N`` is the number of steps.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    x = np.asarray(x0, dtype=float)
    xi = np.asarray(xi0, dtype=float)
    if x.shape != (sys.n,):
        raise ValueError(f"x0 must have shape ({sys.n},), got {x.shape}")
    if xi.shape != (obs.v,):
        raise ValueError(f"xi0 must have shape ({obs.v},), got {xi.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("x0 must be finite")
    if obs.p != sys.p:
        raise ValueError("observer input width does not match plant outputs")

    states = np.empty((N + 1, sys.n))
    outputs = np.empty((N + 1, sys.p))
    true_z = np.empty(N + 1)
    xi_hat = np.empty((N + 1, obs.v))
    z_hat = np.empty(N + 1)
    diverged_at, message = None, ""
    last = N
    for k in range(N + 1):
        try:
            with np.errstate(over="raise", invalid="raise"):
                y = sys.output(x)
                z = sys.functional(x)
                zh = obs.estimate(xi, y)
            if not (np.all(np.isfinite(y)) and np.isfinite(z) and np.isfinite(zh)):
                raise FloatingPointError("non-finite output")
        except (ArithmeticError, ValueError) as exc:
            diverged_at, message, last = k, f"step {k}: {exc}", k - 1
            break
        states[k], outputs[k], true_z[k], xi_hat[k], z_hat[k] = x, y, z, xi, zh
        if k == N:
            break
        try:
            with np.errstate(over="raise", invalid="raise"):
                x_next = sys.step(x)
            if not np.all(np.isfinite(x_next)):
                raise FloatingPointError("non-finite state")
        except (ArithmeticError, ValueError) as exc:
            diverged_at, message, last = k + 1, f"step {k + 1}: {exc}", k
            break
        xi = obs.step(xi, y)
        x = x_next
    keep = slice(0, last + 1)
    return Trajectory(
        states[keep], outputs[keep], true_z[keep], xi_hat[keep], z_hat[keep], diverged_at, message
    )


@dataclass(frozen=True)
class ErrorAnalysis:
    observed_err: np.ndarray
    analytic_err: np.ndarray
    max_dev: float
    scale: float = 1.0


def error_analysis(traj, T, obs):
    """Compare ``z_hat(k) - z(k)`` with ``C A^k (xi_hat(0) - T(x(0)))``.

    ``A^k`` is applied to the running error vector, never formed explicitly.
    ``scale`` is ``max(1, max |z|, max |z_hat|)``: the error is a difference
    of two signals of that size, so its rounding error is relative to it.
    """
    Tmap = _as_map(T)
    e = traj.xi_hat[0] - Tmap(traj.states[0])
    analytic = np.empty(len(traj.true_z))
    for k in range(len(analytic)):
        analytic[k] = float((obs.C @ e)[0])
        e = obs.A @ e
    observed = traj.err
    scale = max(1.0, float(np.max(np.abs(traj.true_z))), float(np.max(np.abs(traj.z_hat))))
    return ErrorAnalysis(observed, analytic, float(np.max(np.abs(observed - analytic))), scale)


def write_csv(path_or_file, traj, analytic_err=None):
    """Columns ``k, x_1..x_n, y_1..y_p, z, z_hat, err, analytic_err``."""
    n = traj.states.shape[1]
    p = traj.outputs.shape[1]
    header = (
        ["k"]
        + [f"x_{i + 1}" for i in range(n)]
        + [f"y_{j + 1}" for j in range(p)]
        + ["z", "z_hat", "err", "analytic_err"]
    )
    if analytic_err is None:
        analytic_err = np.full(len(traj.true_z), np.nan)
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(header)
        for k in range(len(traj.true_z)):
            w.writerow(
                [k]
                + [repr(float(v)) for v in traj.states[k]]
                + [repr(float(v)) for v in traj.outputs[k]]
                + [repr(float(traj.true_z[k])), repr(float(traj.z_hat[k])),
                   repr(float(traj.err[k])), repr(float(analytic_err[k]))]
            )
    finally:
        if own:
            fh.close()
