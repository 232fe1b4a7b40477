"""Characteristic polynomials and the observer-canonical (A, C) pair."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CharPoly",
    "ConjugatePairError",
    "UnstableObserverWarning",
    "poly_from_eigenvalues",
    "companion_realization",
    "parse_eigenvalues",
]

PAIR_TOL = 1e-12


class ConjugatePairError(ValueError):
    """A non-real eigenvalue was supplied without its complex conjugate."""


class UnstableObserverWarning(UserWarning):
    """The requested observer spectrum is not inside the open unit disc."""


@dataclass(frozen=True)
class CharPoly:
    """Monic polynomial ``lambda^v + alpha[0] lambda^(v-1) + ... + alpha[v-1]``.

    ``roots`` is kept when the polynomial was built from eigenvalues.
    """

    alpha: np.ndarray
    roots: tuple = None

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float)).copy()
        if alpha.ndim != 1 or alpha.size < 1:
            raise ValueError("alpha must be a non-empty vector")
        if not np.all(np.isfinite(alpha)):
            raise ValueError("alpha has non-finite entries")
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        if self.roots is not None:
            object.__setattr__(self, "roots", tuple(complex(r) for r in self.roots))

    @property
    def v(self):
        return self.alpha.size

    def coef(self, i):
        """``alpha_i`` with the convention ``alpha_0 = 1``."""
        return 1.0 if i == 0 else float(self.alpha[i - 1])

    def eigenvalues(self):
        if self.roots is not None:
            return np.array(self.roots)
        A, _ = companion_realization(self)
        return np.linalg.eigvals(A)

    @property
    def is_stable(self):
        """True when every eigenvalue lies strictly inside the unit disc."""
        return bool(np.all(np.abs(self.eigenvalues()) < 1.0))


def _check_conjugate_pairs(roots):
    unmatched = [r for r in roots if abs(r.imag) > PAIR_TOL]
    while unmatched:
        r = unmatched.pop()
        for i, s in enumerate(unmatched):
            if abs(s - r.conjugate()) <= PAIR_TOL:
                del unmatched[i]
                break
        else:
            raise ConjugatePairError(f"eigenvalue {r} has no conjugate partner")


def poly_from_eigenvalues(roots):
    """Expand ``prod(lambda - r)`` into a real :class:`CharPoly`.

    Non-real roots must come in conjugate pairs (to within 1e-12).
    """
    roots = [complex(r) for r in roots]
    if not roots:
        raise ValueError("at least one eigenvalue is required")
    _check_conjugate_pairs(roots)
    c = np.array([1.0 + 0j])
    for r in roots:
        c = np.convolve(c, [1.0, -r])
    # pairing is verified above, so the imaginary parts are rounding residue
    return CharPoly(c.real[1:], roots=tuple(roots))


def companion_realization(cp):
    """Observer canonical form for ``cp``.

    ``A`` has ones on the subdiagonal and ``(-alpha_v, ..., -alpha_1)`` in its
    last column; ``C = [0 ... 0 1]``.
    """
    v = cp.v
    A = np.zeros((v, v))
    A[np.arange(1, v), np.arange(v - 1)] = 1.0
    A[:, -1] = -cp.alpha[::-1]
    C = np.zeros((1, v))
    C[0, -1] = 1.0
    return A, C


def warn_if_unstable(cp, stacklevel=3):
    if not cp.is_stable:
        warnings.warn(
            f"observer eigenvalues {cp.eigenvalues()} are not all inside the unit "
            "disc; the estimation error will not decay",
            UnstableObserverWarning,
            stacklevel=stacklevel,
        )


def parse_eigenvalues(text):
    """Parse ``"0.5, 0.3+0.4i, 0.3-0.4i"`` into a list of complex numbers."""
    out = []
    for tok in text.split(","):
        tok = tok.strip().replace(" ", "")
        if not tok:
            continue
        out.append(complex(tok.replace("i", "j")))
    if not out:
        raise ValueError("no eigenvalues given")
    return out


def format_eigenvalue(r):
    r = complex(r)
    if r.imag == 0:
        return repr(r.real)
    return f"{r.real!r}{r.imag:+}i"
