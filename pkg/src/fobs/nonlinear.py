"""Sampled verification and construction of functional observers for
nonlinear plants.

The existence condition is an identity in ``x``; here it is checked on
uniform samples from the plant's ``domain_box``. A passing check is therefore
evidence on that box only, never a global proof.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .linear import BetaCoefficients
from .model import NumericOverflowError, _check_state

__all__ = [
    "FIT_TOL",
    "SAMPLED_TOL",
    "DOMAIN_LABEL",
    "SampleSet",
    "sample_box",
    "DegenerateFitWarning",
    "condition_residual",
    "check_condition",
    "FitResult",
    "fit_beta",
    "NonlinearTransformation",
    "build_T_nonlinear",
    "verify_design_conditions",
]

FIT_TOL = 1e-6
SAMPLED_TOL = 1e-8
DOMAIN_LABEL = "verified on domain_box only"


class DegenerateFitWarning(UserWarning):
    """The sampled least-squares system for beta is rank deficient."""


@dataclass(frozen=True)
class SampleSet:
    points: np.ndarray
    seed: int
    count: int


def sample_box(box, count, seed):
    """Draw ``count`` points uniformly from ``box = (lower, upper)``.

    The same seed reproduces the same points bit for bit.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    lo, hi = (np.asarray(b, dtype=float) for b in box)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lo, hi, size=(count, lo.size))
    pts.setflags(write=False)
    return SampleSet(pts, seed, count)


def _iterates(sys, m, x):
    """``q(F^i x)`` and ``H(F^i x)`` for ``i = 0..m`` (``m`` may be 0)."""
    x = _check_state(sys, x)
    qs = np.empty(m + 1)
    hs = np.empty((m + 1, sys.p))
    for i in range(m + 1):
        if i:
            x = sys.step(x)
            if not np.all(np.isfinite(x)):
                raise NumericOverflowError(i, x)
        qs[i] = sys.functional(x)
        hs[i] = sys.output(x)
    if not (np.all(np.isfinite(qs)) and np.all(np.isfinite(hs))):
        raise NumericOverflowError(m, x)
    return qs, hs


def _target(cp, qs):
    v = cp.v
    return sum(cp.coef(i) * qs[v - i] for i in range(v + 1))


def condition_residual(sys, cp, beta, x):
    """``[qF^v + sum alpha_i qF^(v-i)](x) - [sum beta_i HF^(v-i)](x)``.

    Vanishes identically exactly when ``(alpha, beta)`` admit a functional
    observer with linear error dynamics.
    """
    if beta.v != cp.v:
        raise ValueError("beta and polynomial orders differ")
    v = cp.v
    try:
        qs, hs = _iterates(sys, v, x)
    except NumericOverflowError as exc:
        raise NumericOverflowError(exc.index, np.asarray(x)) from None
    combo = sum(beta[i] @ hs[v - i] for i in range(v + 1))
    return float(_target(cp, qs) - combo)


def check_condition(sys, cp, beta, samples, tol=SAMPLED_TOL):
    """Maximum ``|condition_residual|`` over a sample set.

    ``scale`` is ``max(1, max |target|)``; ``satisfied`` means
    ``max_residual <= tol * scale``.
    """
    worst = 0.0
    scale = 1.0
    v = cp.v
    for x in samples.points:
        qs, hs = _iterates(sys, v, x)
        t = _target(cp, qs)
        r = t - sum(beta[i] @ hs[v - i] for i in range(v + 1))
        worst = max(worst, abs(float(r)))
        scale = max(scale, abs(float(t)))
    return {
        "max_residual": worst,
        "scale": scale,
        "satisfied": worst <= tol * scale,
        "label": DOMAIN_LABEL,
    }


def _regression(sys, cp, points):
    v, p = cp.v, sys.p
    rows = np.empty((len(points), (v + 1) * p))
    rhs = np.empty(len(points))
    for k, x in enumerate(points):
        qs, hs = _iterates(sys, v, x)
        rhs[k] = _target(cp, qs)
        # unknown block i is beta_i and multiplies H F^(v-i)
        rows[k] = hs[::-1].ravel()
    return rows, rhs


@dataclass(frozen=True)
class FitResult:
    beta: BetaCoefficients
    train_residual: float
    validation_residual: float
    scale: float
    rank: int
    candidate: bool
    label: str = DOMAIN_LABEL


def fit_beta(sys, cp, train, validate, tol=FIT_TOL):
    """Least-squares fit of beta to the sampled existence condition.

    The fit is only a *candidate* when the validation residual is at most
    ``tol * max(1, max |target|)`` on the validation set.
    """
    v, p = cp.v, sys.p
    unknowns = (v + 1) * p
    if train.count < unknowns:
        raise ValueError(f"need at least {unknowns} training points, got {train.count}")
    rows, rhs = _regression(sys, cp, train.points)
    c, _, rank, _ = np.linalg.lstsq(rows, rhs, rcond=None)
    if rank < unknowns:
        warnings.warn(
            f"beta regression has rank {rank} < {unknowns}; returning the minimum-norm fit",
            DegenerateFitWarning,
            stacklevel=2,
        )
    train_res = float(np.max(np.abs(rows @ c - rhs)))
    vrows, vrhs = _regression(sys, cp, validate.points)
    val_res = float(np.max(np.abs(vrows @ c - vrhs)))
    scale = max(1.0, float(np.max(np.abs(vrhs))))
    beta = BetaCoefficients(c.reshape(v + 1, p))
    return FitResult(beta, train_res, val_res, scale, int(rank), val_res <= tol * scale)


class NonlinearTransformation:
    """The map ``T: R^n -> R^v`` built from iterated ``q`` and ``H``.

    Component ``v`` (the last) is ``q - beta_0 H``; each earlier component
    adds one more composition with ``F``. Calling the object evaluates all
    components from one shared pass over the iterates.
    """

    def __init__(self, sys, cp, beta):
        if beta.v != cp.v:
            raise ValueError("beta and polynomial orders differ")
        self.sys = sys
        self.cp = cp
        self.beta = beta

    @property
    def v(self):
        return self.cp.v

    def __call__(self, x):
        v, cp, beta = self.v, self.cp, self.beta
        qs, hs = _iterates(self.sys, v - 1, x)
        out = np.empty(v)
        for k in range(v):
            out[v - 1 - k] = sum(
                cp.coef(i) * qs[k - i] - beta[i] @ hs[k - i] for i in range(k + 1)
            )
        return out

    def component(self, j):
        """Callable for component ``j`` (1-based, as ``T_1 .. T_v``)."""
        if not 1 <= j <= self.v:
            raise IndexError(j)
        return lambda x: float(self(x)[j - 1])

    @property
    def components(self):
        return [self.component(j) for j in range(1, self.v + 1)]


def build_T_nonlinear(sys, cp, beta):
    return NonlinearTransformation(sys, cp, beta)


def verify_design_conditions(sys, obs, T, samples, tol=SAMPLED_TOL):
    """Sampled residuals of ``T(F(x)) = A T(x) + B H(x)`` and
    ``q(x) = C T(x) + D H(x)``.

    ``T`` may be a :class:`NonlinearTransformation`, any callable, or a
    ``v x n`` matrix.
    """
    Tmap = _as_map(T)
    worst_dyn = worst_out = 0.0
    scale = 1.0
    for x in samples.points:
        Tx = Tmap(x)
        Fx = sys.step(x)
        TFx = Tmap(Fx)
        y = sys.output(x)
        qx = sys.functional(x)
        worst_dyn = max(worst_dyn, float(np.max(np.abs(TFx - obs.A @ Tx - obs.B @ y))))
        worst_out = max(worst_out, abs(qx - float((obs.C @ Tx + obs.D @ y)[0])))
        scale = max(scale, float(np.max(np.abs(TFx))), abs(qx))
    bound = tol * scale
    return {
        "max_res_dyn": worst_dyn,
        "max_res_out": worst_out,
        "scale": scale,
        "certified": worst_dyn <= bound and worst_out <= bound,
        "label": DOMAIN_LABEL,
    }


def _as_map(T):
    if callable(T):
        return T
    M = np.atleast_2d(np.asarray(T, dtype=float))
    return lambda x: M @ x
