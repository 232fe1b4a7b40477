"""Non-isothermal CSTR (N-methylpyridine oxidation by hydrogen peroxide).

State ``x = (C_A, C_B, theta, theta_j)``: the two reactant concentrations
(mol/L), reactor temperature and jacket outlet temperature (K). The measured
outputs are the two temperatures and the estimated functional is the total
reactant concentration ``C_A + C_B``.

Units
-----
Parameter defaults keep the tabulated values and units as given. Two
conversions are applied when the model is evaluated:

* the reaction enthalpy is given in kJ/mol and used in J/mol, so that it
  matches ``rho * c_p`` in J/(L K);
* the flow rates are given in L/min while the sampling period, the kinetics
  and ``U`` (W = J/s) are per second, so flows are divided by
  ``flow_time_scale = 60``. ``CstrParams.raw_flow_units()`` keeps the flows as raw
  numbers instead (sampling-normalised flow ``dt*F/V = 0.1``); with that
  choice the jacket update ``1 - dt*F_j/V_j`` is about ``-15.7`` and the
  explicit-Euler plant diverges within a few steps.

The reactor energy balance uses the reactor heat capacity ``rho c_p V`` in
the jacket exchange term. That is the grouping under which the closed-form
observer gains make the existence condition an exact identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .linear import BetaCoefficients, ObserverRealization, realize_observer
from .model import NonlinearSystem
from .nonlinear import NonlinearTransformation, build_T_nonlinear
from .simulate import Trajectory, error_analysis, simulate
from .spectrum import CharPoly

__all__ = [
    "CstrParams",
    "CstrReference",
    "TABLE_REFERENCE",
    "EMPTY_REACTOR",
    "CstrDomainError",
    "StabilityBoundError",
    "reaction_rate",
    "cstr_step",
    "steady_state",
    "fixed_point_residual",
    "cstr_system",
    "CstrDesign",
    "analytic_design",
    "CaseStudy",
    "run_case_study",
]


class CstrDomainError(ValueError):
    """Temperature left the domain of the Arrhenius rate law."""


class StabilityBoundError(ValueError):
    """Sampling period violates ``dt < 2 V / F``."""


@dataclass(frozen=True)
class CstrParams:
    ca_in: float = 2.0  # mol/L
    cb_in: float = 1.5  # mol/L
    theta_in: float = 373.0  # K
    theta_j_in: float = 300.0  # K
    dt: float = 0.5  # s
    flow: float = 0.1  # L/min
    flow_j: float = 1.0  # L/min
    volume: float = 0.5  # L
    volume_j: float = 3e-2  # L
    A1: float = math.exp(8.08)
    A2: float = math.exp(28.12)
    A3: float = math.exp(25.12)
    delta_h_kj: float = -160.0  # kJ/mol
    rho: float = 1200.0  # g/L
    rho_j: float = 1000.0  # g/L
    cp_j: float = 3.0  # J/(g K)
    cp: float = 3.4  # J/(g K)
    U: float = 0.942  # W/(m^2 K)
    S_A: float = 1.0  # m^2
    Z: float = 0.0021  # mol/L
    E1: float = 3952.0  # K
    E2: float = 7927.0  # K
    E3: float = 12989.0  # K
    flow_time_scale: float = 60.0  # seconds per flow time unit

    def __post_init__(self):
        for name, val in self.__dict__.items():
            if name == "delta_h_kj":
                if not val < 0:
                    raise ValueError("reaction must be exothermic (delta_h_kj < 0)")
            elif name == "dt":
                if not val >= 0:
                    raise ValueError("dt must be non-negative")
            elif not val > 0:
                raise ValueError(f"{name} must be positive, got {val}")

    @classmethod
    def raw_flow_units(cls, **overrides):
        """Flows used as raw numbers, alongside a per-second sampling period."""
        return cls(flow_time_scale=1.0, **overrides)

    @property
    def delta_h(self):
        """Reaction enthalpy in J/mol."""
        return self.delta_h_kj * 1e3

    @property
    def dilution(self):
        """``F / V`` per model time unit."""
        return self.flow / self.flow_time_scale / self.volume

    @property
    def dilution_j(self):
        return self.flow_j / self.flow_time_scale / self.volume_j

    @property
    def exchange_r(self):
        """``U S_A / (rho c_p V)``."""
        return self.U * self.S_A / (self.rho * self.cp * self.volume)

    @property
    def exchange_j(self):
        """``U S_A / (rho_j c_pj V_j)``."""
        return self.U * self.S_A / (self.rho_j * self.cp_j * self.volume_j)

    @property
    def heating(self):
        """Adiabatic temperature rise per unit of reaction, ``-dH / (rho c_p)``."""
        return -self.delta_h / (self.rho * self.cp)

    @property
    def gamma(self):
        """``2 rho c_p / (-dH)``."""
        return 2.0 * self.rho * self.cp / (-self.delta_h)


@dataclass(frozen=True)
class CstrReference:
    ca: float
    cb: float
    theta: float
    theta_j: float

    def as_array(self):
        return np.array([self.ca, self.cb, self.theta, self.theta_j])

    @property
    def z(self):
        return self.ca + self.cb


TABLE_REFERENCE = CstrReference(0.6684, 0.1684, 410.2332, 302.03384)
EMPTY_REACTOR = np.array([0.0, 0.0, 300.0, 300.0])


def reaction_rate(ca, cb, theta, params=None):
    """Overall rate: catalysed term plus the uncatalysed Arrhenius term."""
    P = params or CstrParams()
    if not theta > 0:
        raise CstrDomainError(f"temperature must be positive, got {theta}")
    k1 = P.A1 * math.exp(-P.E1 / theta)
    k2 = P.A2 * math.exp(-P.E2 / theta)
    k3 = P.A3 * math.exp(-P.E3 / theta)
    return k1 * k2 * ca * cb * P.Z / (1.0 + k2 * cb) + k3 * ca * cb


def cstr_step(x, params=None):
    """One explicit-Euler step of the reactor model (absolute variables)."""
    P = params or CstrParams()
    ca, cb, th, thj = (float(v) for v in x)
    if not (th > 0 and thj > 0):
        raise CstrDomainError(f"temperatures must be positive, got ({th}, {thj})")
    r = reaction_rate(ca, cb, th, P)
    dt = P.dt
    out = np.array([
        ca + dt * (P.dilution * (P.ca_in - ca) - r),
        cb + dt * (P.dilution * (P.cb_in - cb) - r),
        th + dt * (P.heating * r)
        + dt * (P.dilution * (P.theta_in - th) - P.exchange_r * (th - thj)),
        thj + dt * (P.dilution_j * (P.theta_j_in - thj) + P.exchange_j * (th - thj)),
    ])
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"non-finite CSTR update from state {list(x)}")
    return out


def _reduced_balance(theta, P):
    # concentrations and jacket temperature implied by the other three balances
    thj = (P.dilution_j * P.theta_j_in + P.exchange_j * theta) / (P.dilution_j + P.exchange_j)
    ca = P.ca_in - (P.dilution * (theta - P.theta_in) + P.exchange_r * (theta - thj)) / (
        P.heating * P.dilution
    )
    cb = ca - (P.ca_in - P.cb_in)
    return ca, cb, thj


def steady_state(params=None, near=TABLE_REFERENCE, theta_max=1000.0):
    """Exact fixed point of :func:`cstr_step`.

    All physical steady states (non-negative concentrations) are located on
    a temperature grid and the one closest to ``near`` is polished with a
    root finder on the full four-state map.
    """
    P = params or CstrParams()

    def g(theta):
        ca, cb, _ = _reduced_balance(theta, P)
        return P.dilution * (P.ca_in - ca) - reaction_rate(ca, cb, theta, P)

    grid = np.linspace(P.theta_j_in * 0.5, theta_max, 20001)
    vals = np.array([g(t) for t in grid])
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0 or fa * fb < 0:
            t = optimize.brentq(g, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps)
            ca, cb, thj = _reduced_balance(t, P)
            if ca >= 0 and cb >= 0:
                roots.append(np.array([ca, cb, t, thj]))
    if not roots:
        raise RuntimeError("no physical steady state found")
    target = near.as_array()
    best = min(roots, key=lambda r: np.linalg.norm((r - target) / [1, 1, 100, 100]))
    sol = optimize.root(lambda x: cstr_step(x, P) - x, best, method="hybr", tol=1e-15)
    x = sol.x if sol.success and np.max(np.abs(cstr_step(sol.x, P) - sol.x)) <= np.max(
        np.abs(cstr_step(best, P) - best)) else best
    return CstrReference(*map(float, x))


def fixed_point_residual(ref=TABLE_REFERENCE, params=None):
    """``cstr_step(ref) - ref``; zero for an exact steady state."""
    x = ref.as_array()
    return cstr_step(x, params) - x


def cstr_system(params=None, ref=None, half_width=(0.5, 0.5, 20.0, 20.0)):
    """The reactor in deviation variables ``x' = x - ref`` as a
    :class:`NonlinearSystem` with outputs ``(theta', theta_j')`` and
    functional ``C_A' + C_B'``.

    ``ref`` defaults to the exact steady state for ``params``.
    """
    P = params or CstrParams()
    ref = ref or steady_state(P)
    r = ref.as_array()
    hw = np.asarray(half_width, dtype=float)
    return NonlinearSystem(
        F=lambda x: cstr_step(x + r, P) - r,
        H=lambda x: np.array([x[2], x[3]]),
        q=lambda x: float(x[0] + x[1]),
        n=4,
        p=2,
        domain_box=(-hw, hw),
        name="cstr",
    )


@dataclass(frozen=True)
class CstrDesign:
    alpha1: float
    beta0: np.ndarray
    beta1: np.ndarray
    charpoly: CharPoly
    beta: BetaCoefficients
    observer: ObserverRealization
    closed_form_observer: ObserverRealization
    coefficient_mismatch: float


def analytic_design(params=None):
    """Closed-form scalar observer for the reactor.

    ``closed_form_observer`` writes ``A, B, D`` directly in terms of the
    reactor parameters; ``coefficient_mismatch`` is its largest difference
    from the realisation obtained from ``beta``.
    """
    P = params or CstrParams()
    F_V = P.dilution
    if not P.dt < 2.0 / F_V:
        raise StabilityBoundError(
            f"dt = {P.dt} must be below 2 V / F = {2.0 / F_V} for |alpha_1| < 1"
        )
    dt, g = P.dt, P.gamma
    heat_loss = 2.0 * P.U * P.S_A / (-P.delta_h * P.volume)
    alpha1 = dt * F_V - 1.0
    beta0 = np.array([-g, 1.0])
    beta1 = np.array([
        g * (1.0 - F_V * dt - P.exchange_r * dt) - P.exchange_j * dt,
        P.dilution_j * dt + P.exchange_j * dt + heat_loss * dt - 1.0,
    ])
    cp = CharPoly([alpha1], roots=(-alpha1,))
    beta = BetaCoefficients(np.vstack([beta0, beta1]))
    obs = realize_observer(cp, beta)
    closed_form = ObserverRealization(
        A=[[-(dt * F_V - 1.0)]],
        B=[[
            -dt * (heat_loss + P.exchange_j),
            dt * (P.dilution_j - F_V + P.exchange_j + heat_loss),
        ]],
        C=[[1.0]],
        D=[[-g, 1.0]],
    )
    mismatch = max(
        float(np.max(np.abs(getattr(obs, m) - getattr(closed_form, m)))) for m in "ABCD"
    )
    return CstrDesign(alpha1, beta0, beta1, cp, beta, obs, closed_form, mismatch)


@dataclass(frozen=True)
class CaseStudy:
    """Result of :func:`run_case_study`.

    ``trajectory`` is in deviation variables; ``z_abs``/``z_hat_abs`` add the
    reference total concentration back.
    """

    params: CstrParams
    reference: CstrReference
    design: CstrDesign
    T: NonlinearTransformation
    trajectory: Trajectory
    analytic_err: np.ndarray
    max_dev: float

    @property
    def err(self):
        return self.trajectory.err

    @property
    def z_abs(self):
        return self.trajectory.true_z + self.reference.z

    @property
    def z_hat_abs(self):
        return self.trajectory.z_hat + self.reference.z

    @property
    def states_abs(self):
        return self.trajectory.states + self.reference.as_array()


def run_case_study(init_error=1.0, N=600, params=None, x0=EMPTY_REACTOR, ref=None):
    """Simulate the reactor from ``x0`` with the observer started at
    ``T(x0') + init_error``.
    """
    P = params or CstrParams()
    ref = ref or steady_state(P)
    design = analytic_design(P)
    sys = cstr_system(P, ref)
    T = build_T_nonlinear(sys, design.charpoly, design.beta)
    x0_dev = np.asarray(x0, dtype=float) - ref.as_array()
    xi0 = T(x0_dev) + init_error
    traj = simulate(sys, design.observer, x0_dev, xi0, N)
    ea = error_analysis(traj, T, design.observer)
    return CaseStudy(P, ref, design, T, traj, ea.analytic_err, ea.max_dev)
