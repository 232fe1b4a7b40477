"""Discrete-time plant models, iterated maps and observability analysis."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "LinearSystem",
    "NonlinearSystem",
    "NumericOverflowError",
    "iterate_map",
    "functional_sequence",
    "numerical_rank",
    "observability_matrix",
    "observability_index",
]

RANK_RTOL = 1e-10


class NumericOverflowError(ArithmeticError):
    """Raised when an iterate of the state map stops being finite."""

    def __init__(self, index, x=None):
        self.index = index
        self.x = x
        super().__init__(f"non-finite value in iterate F^{index}(x)")


def _as_matrix(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


@dataclass(frozen=True)
class LinearSystem:
    """Autonomous linear plant ``x+ = F x``, ``y = H x``, ``z = q x``.

    ``q`` is stored as a ``1 x n`` row.
    """

    F: np.ndarray
    H: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        F = _as_matrix(self.F, "F")
        H = _as_matrix(self.H, "H")
        q = _as_matrix(self.q, "q")
        n = F.shape[0]
        if F.shape != (n, n) or n < 1:
            raise ValueError(f"F must be square, got shape {F.shape}")
        if H.shape[1] != n or not 1 <= H.shape[0] <= n:
            raise ValueError(f"H must be p x {n} with 1 <= p <= {n}, got {H.shape}")
        if q.shape != (1, n):
            raise ValueError(f"q must be 1 x {n}, got {q.shape}")
        for name, val in (("F", F), ("H", H), ("q", q)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n(self):
        return self.F.shape[0]

    @property
    def p(self):
        return self.H.shape[0]

    def step(self, x):
        return self.F @ x

    def output(self, x):
        return self.H @ x

    def functional(self, x):
        return float(self.q[0] @ x)

    def as_nonlinear(self, domain_box=None):
        """Wrap as a :class:`NonlinearSystem` with matrix-vector callables.

        The default domain box is the unit cube ``[-1, 1]^n``.
        """
        if domain_box is None:
            domain_box = (-np.ones(self.n), np.ones(self.n))
        F, H, q = self.F, self.H, self.q[0]
        return NonlinearSystem(
            F=lambda x: F @ x,
            H=lambda x: H @ x,
            q=lambda x: float(q @ x),
            n=self.n,
            p=self.p,
            domain_box=domain_box,
        )


@dataclass(frozen=True)
class NonlinearSystem:
    """Autonomous nonlinear plant given by callables.

    ``F`` maps an ``n``-vector to an ``n``-vector, ``H`` to a ``p``-vector and
    ``q`` to a scalar. Callables must be reentrant. ``domain_box`` is a pair
    ``(lower, upper)`` of ``n``-vectors bounding the region on which designs
    are checked.
    """

    F: Callable[[np.ndarray], np.ndarray]
    H: Callable[[np.ndarray], np.ndarray]
    q: Callable[[np.ndarray], float]
    n: int
    p: int
    domain_box: tuple = field(default=None)
    name: str = ""

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if self.domain_box is None:
            raise ValueError("domain_box is required for a nonlinear system")
        lo, hi = (np.asarray(b, dtype=float) for b in self.domain_box)
        if lo.shape != (self.n,) or hi.shape != (self.n,):
            raise ValueError(f"domain_box bounds must have shape ({self.n},)")
        if not np.all(lo < hi):
            raise ValueError("domain_box requires lower < upper in every coordinate")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "domain_box", (lo, hi))

    def step(self, x):
        return np.asarray(self.F(x), dtype=float)

    def output(self, x):
        return np.atleast_1d(np.asarray(self.H(x), dtype=float))

    def functional(self, x):
        return float(self.q(x))

    def contains(self, x, atol=0.0):
        lo, hi = self.domain_box
        return bool(np.all(x >= lo - atol) and np.all(x <= hi + atol))


def _check_state(sys, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (sys.n,):
        raise ValueError(f"state must have shape ({sys.n},), got {x.shape}")
    return x


def iterate_map(sys, j, x):
    """Return ``F^j(x)``, the ``j``-fold composition of the state map.

    Raises
    ------
    NumericOverflowError
        If an intermediate iterate is not finite; ``index`` names the iterate.
    """
    if j < 0:
        raise ValueError("j must be non-negative")
    x = _check_state(sys, x)
    for i in range(1, j + 1):
        x = sys.step(x)
        if not np.all(np.isfinite(x)):
            raise NumericOverflowError(i, x)
    return x


def functional_sequence(sys, v, x):
    """Evaluate ``q(F^i(x))`` and ``H(F^i(x))`` for ``i = 0..v``.

    The iterates are computed once and shared between the two lists.

    Returns
    -------
    qs : ndarray, shape (v+1,)
    hs : ndarray, shape (v+1, p)
    """
    if v < 1:
        raise ValueError("v must be at least 1")
    x = _check_state(sys, x)
    qs = np.empty(v + 1)
    hs = np.empty((v + 1, sys.p))
    for i in range(v + 1):
        if i:
            x = sys.step(x)
            if not np.all(np.isfinite(x)):
                raise NumericOverflowError(i, x)
        qs[i] = sys.functional(x)
        hs[i] = sys.output(x)
    return qs, hs


def numerical_rank(M, rtol=RANK_RTOL):
    """Count singular values above ``max(M.shape) * sigma_max * rtol``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > max(M.shape) * s[0] * rtol))


def observability_matrix(sys, blocks):
    """Stack ``H F^i`` for ``i = 0..blocks-1`` (i-major, then output index)."""
    rows = []
    Hk = sys.H
    for _ in range(blocks):
        rows.append(Hk)
        Hk = Hk @ sys.F
    return np.vstack(rows)


def observability_index(sys):
    """Smallest ``k`` such that ``[H; HF; ...; HF^(k-1)]`` has rank ``n``.

    Returns ``None`` when the pair ``(F, H)`` is unobservable.
    """
    n = sys.n
    rows = np.empty((0, n))
    Hk = sys.H
    for k in range(1, n + 1):
        rows = np.vstack([rows, Hk])
        if numerical_rank(rows) == n:
            return k
        Hk = Hk @ sys.F
    return None
