"""JSON system specs, design reports and their validation.

System spec (linear)::

    {"kind": "linear", "name": "...", "F": [[...]], "H": [[...]], "q": [...]}

System spec (nonlinear)::

    {"kind": "nonlinear", "name": "...", "n": 4, "p": 2,
     "params": {"dt": 0.5, ...},
     "F": ["<expr>", ...], "H": ["<expr>", ...], "q": "<expr>",
     "domain_box": {"lower": [...], "upper": [...]}}

Expressions use the grammar in :mod:`fobs.expr`. Floats are written with
``repr`` so every value survives a round trip bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .linear import (
    BetaCoefficients,
    ObserverRealization,
    beta_identity_residual,
    verify_luenberger,
)
from .model import LinearSystem, NonlinearSystem
from .spectrum import CharPoly, format_eigenvalue

__all__ = [
    "SpecError",
    "ExpressionModel",
    "system_from_dict",
    "system_to_dict",
    "load_system",
    "save_json",
    "load_json",
    "linear_report",
    "nonlinear_report",
    "report_observer",
    "report_charpoly",
    "report_beta",
    "revalidate_report",
    "cstr_spec",
]


class SpecError(ValueError):
    """A spec or report file is malformed."""


@dataclass(frozen=True)
class ExpressionModel:
    """A nonlinear plant declared with expression strings."""

    n: int
    p: int
    F: tuple
    H: tuple
    q: str
    params: dict = field(default_factory=dict)
    domain_box: tuple = None
    name: str = ""

    def __post_init__(self):
        if len(self.F) != self.n:
            raise SpecError(f"F needs {self.n} expressions, got {len(self.F)}")
        if len(self.H) != self.p:
            raise SpecError(f"H needs {self.p} expressions, got {len(self.H)}")
        names = set(self.params)
        parsed = {}
        for label, texts in (("F", self.F), ("H", self.H), ("q", (self.q,))):
            trees = []
            for i, t in enumerate(texts):
                try:
                    trees.append(ex.parse(t, self.n, names))
                except ex.ExprError as err:
                    raise SpecError(f"{label}[{i}]: {err}") from err
            parsed[label] = tuple(trees)
        object.__setattr__(self, "_trees", parsed)

    @property
    def trees(self):
        return self._trees

    def system(self):
        P = dict(self.params)
        Fs = [ex.compile_expr(e, P) for e in self.trees["F"]]
        Hs = [ex.compile_expr(e, P) for e in self.trees["H"]]
        qf = ex.compile_expr(self.trees["q"][0], P)
        return NonlinearSystem(
            F=lambda x: np.array([f(x) for f in Fs]),
            H=lambda x: np.array([h(x) for h in Hs]),
            q=qf,
            n=self.n,
            p=self.p,
            domain_box=self.domain_box,
            name=self.name,
        )

    def transformation_expressions(self, cp, beta):
        """``T_1 .. T_v`` as expression strings, by composing ``F``."""
        v = cp.v
        states = [ex.Var(i) for i in range(self.n)]
        qF, HF = [], []
        for k in range(v):
            qF.append(ex.substitute(self.trees["q"][0], states))
            HF.append([ex.substitute(h, states) for h in self.trees["H"]])
            if k < v - 1:
                states = [ex.substitute(f, states) for f in self.trees["F"]]
        out = [None] * v
        for k in range(v):
            node = None
            for i in range(k + 1):
                terms = [(cp.coef(i), qF[k - i])]
                terms += [(-float(beta[i][j]), HF[k - i][j]) for j in range(self.p)]
                for c, t in terms:
                    if c == 0.0:
                        continue
                    mag = abs(c)
                    piece = t if mag == 1.0 else ex.BinOp("*", ex.Num(mag), t)
                    if node is None:
                        node = piece if c > 0 else ex.Neg(piece)
                    else:
                        node = ex.BinOp("+" if c > 0 else "-", node, piece)
            out[v - 1 - k] = ex.to_string(node if node is not None else ex.Num(0.0))
        return out


def _matrix(d, key, ctx):
    try:
        a = np.asarray(d[key], dtype=float)
    except KeyError:
        raise SpecError(f"{ctx}: missing '{key}'") from None
    except (TypeError, ValueError) as err:
        raise SpecError(f"{ctx}: '{key}' is not numeric: {err}") from None
    return a


def system_from_dict(d, ctx="system"):
    kind = d.get("kind")
    if kind == "linear":
        F = _matrix(d, "F", ctx)
        H = _matrix(d, "H", ctx)
        q = _matrix(d, "q", ctx)
        try:
            return LinearSystem(F, H, q)
        except ValueError as err:
            raise SpecError(f"{ctx}: {err}") from None
    if kind == "nonlinear":
        for key in ("n", "p", "F", "H", "q", "domain_box"):
            if key not in d:
                raise SpecError(f"{ctx}: missing '{key}'")
        box = d["domain_box"]
        try:
            lo = np.asarray(box["lower"], dtype=float)
            hi = np.asarray(box["upper"], dtype=float)
        except (KeyError, TypeError, ValueError):
            raise SpecError(f"{ctx}: domain_box needs numeric 'lower' and 'upper'") from None
        n, p = int(d["n"]), int(d["p"])
        if lo.shape != (n,) or hi.shape != (n,) or not np.all(lo < hi):
            raise SpecError(f"{ctx}: domain_box must give {n} bounds with lower < upper")
        q = d["q"]
        if isinstance(q, list):
            if len(q) != 1:
                raise SpecError(f"{ctx}: q must be a single expression")
            q = q[0]
        return ExpressionModel(
            n=n,
            p=p,
            F=tuple(d["F"]),
            H=tuple(d["H"]),
            q=q,
            params={k: float(v) for k, v in d.get("params", {}).items()},
            domain_box=(lo, hi),
            name=d.get("name", ""),
        )
    raise SpecError(f"{ctx}: 'kind' must be 'linear' or 'nonlinear', got {kind!r}")


def system_to_dict(sys, name=""):
    if isinstance(sys, LinearSystem):
        return {
            "kind": "linear",
            "name": name,
            "F": sys.F.tolist(),
            "H": sys.H.tolist(),
            "q": sys.q[0].tolist(),
        }
    if isinstance(sys, ExpressionModel):
        lo, hi = sys.domain_box
        return {
            "kind": "nonlinear",
            "name": sys.name or name,
            "n": sys.n,
            "p": sys.p,
            "params": dict(sys.params),
            "F": list(sys.F),
            "H": list(sys.H),
            "q": sys.q,
            "domain_box": {"lower": list(map(float, lo)), "upper": list(map(float, hi))},
        }
    raise TypeError("only LinearSystem and ExpressionModel serialise to JSON")


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as err:
        raise SpecError(f"{path}: {err.strerror}") from None
    except json.JSONDecodeError as err:
        raise SpecError(f"{path}: line {err.lineno}: {err.msg}") from None


def save_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def load_system(path):
    return system_from_dict(load_json(path), ctx=str(path))


def _cp_fields(cp):
    eig = cp.roots if cp.roots is not None else ()
    return {
        "order": cp.v,
        "eigenvalues": [format_eigenvalue(r) for r in eig],
        "alpha": cp.alpha.tolist(),
    }


def _obs_fields(obs):
    return {"A": obs.A.tolist(), "B": obs.B.tolist(), "C": obs.C.tolist(), "D": obs.D.tolist()}


def linear_report(design=None, cp=None, infeasible=None, strict=False):
    """Report for a linear design, or for an infeasible request."""
    if design is not None:
        obs = design.observer
        rep = {"kind": "linear", "feasible": bool(design.certified)}
        rep.update(_cp_fields(design.charpoly))
        rep.update({
            "beta": design.beta.beta.tolist(),
            **_obs_fields(obs),
            "T": design.T.tolist(),
            "residuals": {
                "feasibility": design.feasibility_residual,
                "res_dyn": design.res_dyn,
                "res_out": design.res_out,
                "beta_identities": beta_identity_residual(design.charpoly, design.beta, obs),
            },
        })
    else:
        rep = {"kind": "linear", "feasible": False}
        rep.update(_cp_fields(cp))
        rep.update({
            "beta": infeasible.beta.beta.tolist() if infeasible.beta is not None else None,
            "A": None, "B": None, "C": None, "D": None, "T": None,
            "residuals": {"feasibility": infeasible.residual},
        })
    rep["diagnostics"] = {"strict_span": bool(strict)}
    return rep


def nonlinear_report(cp, beta, obs, condition, design_check, T_expressions=None, fit=None):
    rep = {"kind": "nonlinear"}
    rep.update(_cp_fields(cp))
    residuals = {
        "condition_max": condition["max_residual"],
        "condition_scale": condition["scale"],
        "max_res_dyn": design_check["max_res_dyn"],
        "max_res_out": design_check["max_res_out"],
    }
    if fit is not None:
        residuals["train"] = fit.train_residual
        residuals["validation"] = fit.validation_residual
        residuals["fit_rank"] = fit.rank
        feasible = bool(fit.candidate)
    else:
        feasible = bool(condition["satisfied"] and design_check["certified"])
    rep.update({
        "feasible": feasible,
        "beta": beta.beta.tolist(),
        **_obs_fields(obs),
        "T": T_expressions,
        "residuals": residuals,
        "diagnostics": {"label": condition["label"], "beta_source": "fit" if fit else "supplied"},
    })
    return rep


def report_charpoly(rep):
    eig = rep.get("eigenvalues") or None
    roots = [complex(e.replace("i", "j")) for e in eig] if eig else None
    return CharPoly(rep["alpha"], roots=roots)


def report_beta(rep):
    if rep.get("beta") is None:
        raise SpecError("report carries no beta")
    return BetaCoefficients(rep["beta"])


def report_observer(rep):
    if rep.get("A") is None:
        raise SpecError("report carries no observer (infeasible design?)")
    return ObserverRealization(rep["A"], rep["B"], rep["C"], rep["D"])


def revalidate_report(rep, sys):
    """Recompute the certification of a stored linear report against ``sys``."""
    if rep.get("kind") != "linear" or rep.get("T") is None:
        raise SpecError("only feasible linear reports can be re-validated this way")
    res = verify_luenberger(sys, report_observer(rep), np.asarray(rep["T"]))
    return res["certified"]


def cstr_spec(params=None, ref=None, half_width=(0.5, 0.5, 20.0, 20.0)):
    """Expression-form spec of the reactor in deviation variables."""
    from .cstr import CstrParams, steady_state

    P = params or CstrParams()
    ref = ref or steady_state(P)
    table = {
        "dt": P.dt, "FV": P.dilution, "FjVj": P.dilution_j,
        "CAin": P.ca_in, "CBin": P.cb_in, "Tin": P.theta_in, "Tjin": P.theta_j_in,
        "A1": P.A1, "A2": P.A2, "A3": P.A3, "E1": P.E1, "E2": P.E2, "E3": P.E3,
        "Z": P.Z, "heat": P.heating, "kr": P.exchange_r, "kj": P.exchange_j,
        "CAr": ref.ca, "CBr": ref.cb, "Tr": ref.theta, "Tjr": ref.theta_j,
    }
    ca, cb, th, thj = "(x1 + CAr)", "(x2 + CBr)", "(x3 + Tr)", "(x4 + Tjr)"
    k2 = f"A2*exp(-E2/{th})"
    rate = (
        f"(A1*exp(-E1/{th})*{k2}*{ca}*{cb}*Z/(1 + {k2}*{cb})"
        f" + A3*exp(-E3/{th})*{ca}*{cb})"
    )
    F = [
        f"{ca} + dt*(FV*(CAin - {ca}) - {rate}) - CAr",
        f"{cb} + dt*(FV*(CBin - {cb}) - {rate}) - CBr",
        f"{th} + dt*(heat*{rate}) + dt*(FV*(Tin - {th}) - kr*({th} - {thj})) - Tr",
        f"{thj} + dt*(FjVj*(Tjin - {thj}) + kj*({th} - {thj})) - Tjr",
    ]
    hw = list(map(float, half_width))
    return {
        "kind": "nonlinear",
        "name": "cstr-deviation",
        "n": 4,
        "p": 2,
        "params": table,
        "F": F,
        "H": ["x3", "x4"],
        "q": "x1 + x2",
        "domain_box": {"lower": [-h for h in hw], "upper": hw},
    }
