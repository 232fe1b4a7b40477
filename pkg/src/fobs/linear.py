"""Functional observer design for linear plants.

The pipeline is ``solve_beta -> realize_observer -> build_T ->
verify_luenberger``; :func:`design_linear` runs all four.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import LinearSystem
from .spectrum import CharPoly, companion_realization, poly_from_eigenvalues, warn_if_unstable

__all__ = [
    "FEAS_TOL",
    "CERT_TOL",
    "BetaCoefficients",
    "ObserverRealization",
    "LinearDesign",
    "Infeasible",
    "build_condition_matrix",
    "functional_target",
    "least_squares_beta",
    "solve_beta",
    "realize_observer",
    "build_T",
    "verify_luenberger",
    "beta_identity_residual",
    "design_linear",
    "minimal_order_search",
]

FEAS_TOL = 1e-9
CERT_TOL = 1e-10


class Infeasible(Exception):
    """No exact beta exists for the requested order and spectrum.

    Attributes
    ----------
    residual : float
        ``||g - beta^T M||_inf`` of the least-squares fit.
    beta : BetaCoefficients
        The least-squares (minimum-norm) fit, for diagnostics.
    """

    def __init__(self, residual, beta=None):
        self.residual = float(residual)
        self.beta = beta
        super().__init__(f"infeasible: least-squares residual {self.residual:.3e}")


@dataclass(frozen=True)
class BetaCoefficients:
    """Rows ``beta_0, ..., beta_v`` (each of width ``p``) as a ``(v+1, p)`` array."""

    beta: np.ndarray

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.beta, dtype=float)).copy()
        if b.ndim != 2 or b.shape[0] < 2:
            raise ValueError(f"beta must have shape (v+1, p) with v >= 1, got {b.shape}")
        if not np.all(np.isfinite(b)):
            raise ValueError("beta has non-finite entries")
        b.setflags(write=False)
        object.__setattr__(self, "beta", b)

    @property
    def v(self):
        return self.beta.shape[0] - 1

    @property
    def p(self):
        return self.beta.shape[1]

    def __getitem__(self, i):
        return self.beta[i]

    def scaled(self, c):
        return BetaCoefficients(c * self.beta)


@dataclass(frozen=True)
class ObserverRealization:
    """Matrices of ``xi+ = A xi + B y``, ``z_hat = C xi + D y``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        D = np.atleast_2d(np.asarray(self.D, dtype=float))
        v = A.shape[0]
        if A.shape != (v, v) or B.shape[0] != v or C.shape != (1, v) or D.shape != (1, B.shape[1]):
            raise ValueError(
                f"inconsistent observer shapes A{A.shape} B{B.shape} C{C.shape} D{D.shape}"
            )
        for name, val in (("A", A), ("B", B), ("C", C), ("D", D)):
            object.__setattr__(self, name, val)

    @property
    def v(self):
        return self.A.shape[0]

    @property
    def p(self):
        return self.B.shape[1]

    def step(self, xi, y):
        return self.A @ xi + self.B @ y

    def estimate(self, xi, y):
        return float((self.C @ xi + self.D @ y)[0])


def build_condition_matrix(sys, v, strict=False):
    """Stack the rows ``H_j F^i`` for ``i = 0..v``, i-major then j.

    With ``strict=True`` the last block (``i = v``) is dropped, which forces
    ``beta_0 = 0`` and hence ``D = 0``.
    """
    if v < 1:
        raise ValueError("v must be at least 1")
    top = v - 1 if strict else v
    blocks = []
    Hk = sys.H
    for _ in range(top + 1):
        blocks.append(Hk)
        Hk = Hk @ sys.F
    return np.vstack(blocks)


def functional_target(sys, cp):
    """Row ``q F^v + alpha_1 q F^(v-1) + ... + alpha_v q``."""
    v = cp.v
    powers = [sys.q]
    for _ in range(v):
        powers.append(powers[-1] @ sys.F)
    return sum(cp.coef(i) * powers[v - i] for i in range(v + 1))


def _check_dims(sys, cp):
    if not isinstance(sys, LinearSystem):
        raise TypeError("expected a LinearSystem")
    if cp.v < 1:
        raise ValueError("observer order must be at least 1")


def least_squares_beta(sys, cp, strict=False):
    """Minimum-norm least-squares beta and its residual ``||g - beta^T M||_inf``.

    Returns
    -------
    beta : BetaCoefficients
    residual : float
    scale : float
        ``max(1, ||g||_inf)``, the normalisation used by the feasibility test.
    """
    _check_dims(sys, cp)
    v, p = cp.v, sys.p
    M = build_condition_matrix(sys, v, strict=strict)
    g = functional_target(sys, cp)[0]
    c, *_ = np.linalg.lstsq(M.T, g, rcond=None)
    residual = float(np.max(np.abs(g - c @ M)))
    # c[i*p:(i+1)*p] multiplies H F^i, i.e. it is beta_(v-i)
    blocks = c.reshape(-1, p)
    if strict:
        blocks = np.vstack([blocks, np.zeros((1, p))])
    beta = BetaCoefficients(blocks[::-1])
    return beta, residual, max(1.0, float(np.max(np.abs(g))))


def solve_beta(sys, cp, feas_tol=FEAS_TOL, strict=False):
    """Find ``beta`` such that the target functional lies in the span of the
    iterated outputs.

    Raises
    ------
    Infeasible
        When the relative least-squares residual exceeds ``feas_tol``.
    """
    beta, residual, scale = least_squares_beta(sys, cp, strict=strict)
    if residual > feas_tol * scale:
        raise Infeasible(residual, beta)
    return beta


def realize_observer(cp, beta):
    """Canonical realisation: ``A, C`` from the companion form,
    ``B`` row ``r`` equal to ``beta_(v-r+1) - alpha_(v-r+1) beta_0`` and
    ``D = beta_0``.
    """
    if beta.v != cp.v:
        raise ValueError(f"beta has order {beta.v}, polynomial has order {cp.v}")
    warn_if_unstable(cp)
    v = cp.v
    A, C = companion_realization(cp)
    b0 = beta[0]
    B = np.vstack([beta[v - r + 1] - cp.coef(v - r + 1) * b0 for r in range(1, v + 1)])
    return ObserverRealization(A, B, C, b0.reshape(1, -1).copy())


def build_T(sys, cp, beta):
    """Linear transformation ``T`` (``v x n``) solving the design equations.

    Counting rows from the bottom, row ``v - k`` is
    ``sum_{i=0..k} (alpha_i q - beta_i H) F^(k-i)`` with ``alpha_0 = 1``.
    """
    v = cp.v
    qF = [sys.q[0]]
    HF = [sys.H]
    for _ in range(v - 1):
        qF.append(qF[-1] @ sys.F)
        HF.append(HF[-1] @ sys.F)
    T = np.zeros((v, sys.n))
    for k in range(v):
        T[v - 1 - k] = sum(
            cp.coef(i) * qF[k - i] - beta[i] @ HF[k - i] for i in range(k + 1)
        )
    return T


def verify_luenberger(sys, obs, T):
    """Residuals of ``TF = AT + BH`` and ``q = CT + DH`` (max-abs entry).

    Returns
    -------
    dict with ``res_dyn``, ``res_out`` and ``certified`` (both residuals
    at most ``1e-10 * max(1, ||T||)``).
    """
    T = np.atleast_2d(T)
    res_dyn = float(np.max(np.abs(T @ sys.F - obs.A @ T - obs.B @ sys.H)))
    res_out = float(np.max(np.abs(sys.q - obs.C @ T - obs.D @ sys.H)))
    bound = CERT_TOL * max(1.0, float(np.max(np.abs(T))))
    return {
        "res_dyn": res_dyn,
        "res_out": res_out,
        "certified": res_dyn <= bound and res_out <= bound,
    }


def beta_identity_residual(cp, beta, obs):
    """Largest violation of ``beta_k = sum_{i<k} alpha_i C A^(k-1-i) B + alpha_k D``."""
    v = cp.v
    # CA^j B for j = 0..v-1
    CAjB = []
    row = obs.C
    for _ in range(v):
        CAjB.append((row @ obs.B)[0])
        row = row @ obs.A
    worst = 0.0
    for k in range(v + 1):
        rebuilt = cp.coef(k) * obs.D[0]
        for i in range(k):
            rebuilt = rebuilt + cp.coef(i) * CAjB[k - 1 - i]
        worst = max(worst, float(np.max(np.abs(rebuilt - beta[k]))))
    return worst


@dataclass(frozen=True)
class LinearDesign:
    """A complete, verified linear functional observer design."""

    charpoly: CharPoly
    beta: BetaCoefficients
    observer: ObserverRealization
    T: np.ndarray
    feasibility_residual: float
    res_dyn: float
    res_out: float
    certified: bool

    @property
    def v(self):
        return self.charpoly.v


def design_linear(sys, eigenvalues_or_cp, feas_tol=FEAS_TOL, strict=False):
    """Run the whole design for one order/spectrum.

    ``eigenvalues_or_cp`` is either a :class:`CharPoly` or a list of
    eigenvalues. Raises :class:`Infeasible` when no observer exists.
    """
    cp = eigenvalues_or_cp
    if not isinstance(cp, CharPoly):
        cp = poly_from_eigenvalues(cp)
    beta, residual, scale = least_squares_beta(sys, cp, strict=strict)
    if residual > feas_tol * scale:
        raise Infeasible(residual, beta)
    obs = realize_observer(cp, beta)
    T = build_T(sys, cp, beta)
    res = verify_luenberger(sys, obs, T)
    return LinearDesign(cp, beta, obs, T, residual, res["res_dyn"], res["res_out"], res["certified"])


def minimal_order_search(sys, eigen_sets, feas_tol=FEAS_TOL, strict=False):
    """Lowest order with a feasible design.

    ``eigen_sets[v-1]`` holds the ``v`` eigenvalues to try at order ``v``.
    The caller chooses them: feasibility depends on the spectrum, so none are
    invented here. For an observable plant with observability index ``v_o``,
    order ``v_o - 1`` always succeeds.

    Returns the :class:`LinearDesign`, or ``None`` if no order up to
    ``len(eigen_sets)`` is feasible.
    """
    for v, eigs in enumerate(eigen_sets, start=1):
        if len(eigs) != v:
            raise ValueError(f"order {v} needs {v} eigenvalues, got {len(eigs)}")
        cp = poly_from_eigenvalues(eigs)
        try:
            return design_linear(sys, cp, feas_tol=feas_tol, strict=strict)
        except Infeasible:
            continue
    return None
