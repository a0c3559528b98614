"""Hamiltonian-side constructions on the reduced and restricted charts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .charts import BundleSpec, Connection, CoordinateMap, make_connection
from .errors import ChartMismatchError, InvalidConnectionError, NotInvertibleError, ScopeError
from .expr import Expr, ZERO, as_expr, differentiate, evaluate, substitute
from .forms import DiffForm, VectorFieldExpr, exterior_derivative, volume
from .lagrangian import LagrangianSystem, energy_density, momentum_part
from .legendre import (
    ConstraintSet,
    affine_momenta,
    image_constraints,
    invert_reduced,
    invert_reduced_symbolic,
    legendre_map,
    particular_velocity,
    reduce_modulo,
)


def pairing(chart, connection: Connection) -> Expr:
    """``Σ p_A_nu Γ^A_nu`` on a chart carrying momenta."""
    total = ZERO
    for nu in range(chart.m):
        for a in range(chart.N):
            g = connection.gamma(a, nu)
            if not g.is_zero_poly():
                total = total + chart.p(a, nu) * g
    return total


@dataclass(frozen=True)
class HamiltonianSystem:
    bundle: BundleSpec
    H: Expr
    chart_kind: str = "Pi"
    connection: Connection | None = None
    H_nabla: Expr | None = None
    constraints: ConstraintSet | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.chart_kind not in ("Pi", "J1PiStar"):
            raise ChartMismatchError(f"Hamiltonian systems live on Pi or J1PiStar, not {self.chart_kind}")
        object.__setattr__(self, "H", as_expr(self.H))
        chart = self.chart
        for s in self.H.free_symbols():
            if s.role == "velocity":
                raise ChartMismatchError(f"Hamiltonian depends on velocity {s.name}")
            if s not in chart:
                raise ChartMismatchError(f"Hamiltonian uses {s.name}, not a coordinate of {self.chart_kind}")
        if self.H_nabla is not None:
            object.__setattr__(self, "H_nabla", as_expr(self.H_nabla))
            if self.connection is None:
                raise InvalidConnectionError("a global Hamiltonian needs a connection")
            gap = self.H - self.H_nabla - pairing(chart, self.connection)
            if not gap.is_zero_poly():
                raise ValueError("H must equal H_nabla + p·Gamma")

    @property
    def chart(self):
        return self.bundle.chart(self.chart_kind)

    @property
    def m(self):
        return self.bundle.m

    @property
    def N(self):
        return self.bundle.N


def hamilton_cartan(h: HamiltonianSystem):
    """``Θ_h = p dy ∧ d^{m-1}x − H d^m x`` and ``Ω_h = −dΘ_h``."""
    chart = h.chart
    P = [[chart.p(a, nu) for nu in range(h.m)] for a in range(h.N)]
    theta = momentum_part(chart, P) - volume(chart, h.H)
    return theta, -exterior_derivative(theta)


def connection_section_form(bundle: BundleSpec, connection: Connection, chart_kind: str = "Pi") -> DiffForm:
    """``p dy ∧ d^{m-1}x − p Γ d^m x``."""
    chart = bundle.chart(chart_kind)
    return hamilton_cartan(HamiltonianSystem(bundle, pairing(chart, connection), chart_kind))[0]


def compose_density(connection: Connection, density, chart_kind: str = "Pi") -> HamiltonianSystem:
    """System with ``H = density + p Γ``."""
    bundle = connection.bundle
    density = as_expr(density)
    for s in density.free_symbols():
        if s.role == "velocity":
            raise ChartMismatchError(f"Hamiltonian density depends on velocity {s.name}")
    chart = bundle.chart(chart_kind)
    return HamiltonianSystem(bundle, density + pairing(chart, connection), chart_kind, connection, density)


def from_hyperregular(sys: LagrangianSystem, connection: Connection | None = None, chart_kind: str = "Pi") -> HamiltonianSystem:
    """``H = p·v − L`` at ``v = FL^{-1}(p)``; exact for a constant invertible Hessian."""
    try:
        vsol = invert_reduced_symbolic(sys)
    except ScopeError as exc:
        raise NotInvertibleError(f"no symbolic inverse ({exc}); use NumericHamiltonian") from None
    # Pi and J1PiStar share symbol names, so vsol serves both charts
    H = substitute(energy_density(sys), vsol)
    if connection is None:
        return HamiltonianSystem(sys.bundle, H, chart_kind)
    chart = sys.bundle.chart(chart_kind)
    return HamiltonianSystem(sys.bundle, H, chart_kind, connection, H - pairing(chart, connection))


class NumericHamiltonian:
    """``H(x, y, p)`` of a regular Lagrangian, evaluated through Newton inversion.

    Gradients are exact given the inverse: ``∂H/∂p = v*`` and
    ``∂H/∂y = −∂L/∂y(v*)``.
    """

    def __init__(self, sys: LagrangianSystem, tol: float = 1e-12):
        self.sys = sys
        self.tol = tol
        self._force = [differentiate(sys.L, f"y_{a}") for a in range(sys.N)]

    def _solve(self, base: dict, p):
        v = invert_reduced(self.sys, p, base, tol=self.tol)
        point = dict(base)
        for s, val in zip(self.sys.velocity_symbols(), v):
            point[s.name] = float(val)
        return v, point

    def value(self, base: dict, p) -> float:
        v, point = self._solve(base, p)
        return float(np.dot(np.asarray(p, dtype=float), v) - evaluate(self.sys.L, point))

    def gradients(self, base: dict, p):
        """Returns ``(∂H/∂p flat, ∂H/∂y)``."""
        v, point = self._solve(base, p)
        return v, np.array([-evaluate(f, point) for f in self._force])


def restrict_almost_regular(sys: LagrangianSystem, connection: Connection | None = None) -> HamiltonianSystem:
    """Hamiltonian on the primary constraint set of an affine-momenta Lagrangian.

    ``H_nabla`` is ``E^∇_L`` at a particular inverse velocity, with the pivot
    momenta of the linear constraints eliminated.
    """
    connection = connection or make_connection(sys.bundle)
    cset = image_constraints(sys, "reduced")
    aff = affine_momenta(sys)
    chart = cset.chart
    vstar = particular_velocity(sys, aff, chart)
    E = energy_density(sys, connection)
    H0 = reduce_modulo(substitute(E, vstar), cset)
    back = substitute(H0, legendre_map(sys, "reduced").as_assignment())
    if back != E:
        raise ScopeError("energy density is not constant on the Legendre fibers")
    H = H0 + pairing(chart, connection)
    return HamiltonianSystem(sys.bundle, H, "Pi", connection, H0, cset)


# --------------------------------------------------------------------------
# field equations


@dataclass(frozen=True)
class HDWOperator:
    """HDW equations as ``∂_nu y_A = velocity[A][nu]``, ``Σ_nu ∂_nu p_A_nu = −force[A]``."""

    system: HamiltonianSystem
    mode: str
    velocity: tuple  # [A][nu]
    force: tuple  # [A]

    def apply(self, section: dict) -> list:
        """Residual expressions along a closed-form section ``name -> Expr(x)``.

        Order: ``R1[A][nu]`` flattened with ``nu*N + A``, then ``R2[A]``.
        """
        b = self.system.bundle
        assign = {self.system.chart.symbol(k): as_expr(v) for k, v in section.items()}
        r1, r2 = [], []
        for nu in range(b.m):
            for a in range(b.N):
                dy = differentiate(assign[self.system.chart.symbol(f"y_{a}")], f"x_{nu}")
                r1.append(dy - substitute(self.velocity[a][nu], assign))
        for a in range(b.N):
            div = ZERO
            for nu in range(b.m):
                div = div + differentiate(assign[self.system.chart.symbol(f"p_{a}_{nu}")], f"x_{nu}")
            r2.append(div + substitute(self.force[a], assign))
        return r1 + r2

    def same_as(self, other: "HDWOperator") -> bool:
        return self.velocity == other.velocity and self.force == other.force

    def describe(self) -> list:
        b = self.system.bundle
        out = []
        for nu in range(b.m):
            for a in range(b.N):
                out.append(f"d(y_{a})/d(x_{nu}) = {self.velocity[a][nu]}")
        for a in range(b.N):
            div = " + ".join(f"d(p_{a}_{nu})/d(x_{nu})" for nu in range(b.m))
            out.append(f"{div} = {-self.force[a]}")
        return out


def hdw_residual(h: HamiltonianSystem, mode: str = "local") -> HDWOperator:
    b = h.bundle
    if mode == "local":
        vel = tuple(tuple(differentiate(h.H, f"p_{a}_{nu}") for nu in range(b.m)) for a in range(b.N))
        force = tuple(differentiate(h.H, f"y_{a}") for a in range(b.N))
    elif mode == "covariant":
        if h.connection is None or h.H_nabla is None:
            raise InvalidConnectionError("covariant equations need a connection and a global Hamiltonian")
        G = h.connection
        chart = h.chart
        vel = tuple(
            tuple(differentiate(h.H_nabla, f"p_{a}_{nu}") + G.gamma(a, nu) for nu in range(b.m))
            for a in range(b.N)
        )
        force = []
        for a in range(b.N):
            f = differentiate(h.H_nabla, f"y_{a}")
            for eta in range(b.m):
                for c in range(b.N):
                    f = f + chart.p(c, eta) * differentiate(G.gamma(c, eta), f"y_{a}")
            force.append(f)
        force = tuple(force)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return HDWOperator(h, mode, vel, force)


def lift_vertical_field(bundle: BundleSpec, beta, chart_kind: str = "Pi") -> VectorFieldExpr:
    """``β^A ∂/∂y_A − p_B_nu ∂β^B/∂y_A ∂/∂p_A_nu``."""
    beta = [as_expr(b) for b in beta]
    if len(beta) != bundle.N:
        raise ChartMismatchError(f"need {bundle.N} components, got {len(beta)}")
    for bexpr in beta:
        for s in bexpr.free_symbols():
            if s.role not in ("base", "field"):
                raise ChartMismatchError(f"vertical field component depends on {s.name}")
    chart = bundle.chart(chart_kind)
    comps = {}
    for a in range(bundle.N):
        comps[f"y_{a}"] = beta[a]
        for nu in range(bundle.m):
            acc = ZERO
            for c in range(bundle.N):
                acc = acc - chart.p(c, nu) * differentiate(beta[c], f"y_{a}")
            comps[f"p_{a}_{nu}"] = acc
    return VectorFieldExpr.from_dict(chart, comps)


def psi_transfer(h: HamiltonianSystem) -> HamiltonianSystem:
    """Move between Pi and J1PiStar along the coordinate identity."""
    other = "J1PiStar" if h.chart_kind == "Pi" else "Pi"
    return HamiltonianSystem(h.bundle, h.H, other, h.connection, h.H_nabla, h.constraints)


# --------------------------------------------------------------------------
# sections of the projections


def hamiltonian_section_map(h: HamiltonianSystem) -> CoordinateMap:
    """Section Pi -> J1Estar with ``q_eta_eta = −H/m`` and zero off-diagonal.

    Any section with trace ``−H`` yields the same Hamilton-Cartan forms; this
    is the canonical member used throughout.
    """
    b = h.bundle
    src = b.chart("Pi")
    tgt = b.chart("J1Estar")
    images = {}
    for e in range(b.m):
        for n in range(b.m):
            images[f"q_{e}_{n}"] = h.H * (-1) / b.m if e == n else ZERO
    for s in tgt.of_role("momentum"):
        images[s.name] = Expr.sym(s)
    return CoordinateMap.from_dict(src, tgt, images)


def connection_section_map(connection: Connection) -> CoordinateMap:
    """Linear section Pi -> J1Estar: ``q_eta_nu = −p_A_nu Γ^A_eta``."""
    b = connection.bundle
    src = b.chart("Pi")
    tgt = b.chart("J1Estar")
    images = {}
    for e in range(b.m):
        for n in range(b.m):
            acc = ZERO
            for a in range(b.N):
                acc = acc - src.p(a, n) * connection.gamma(a, e)
            images[f"q_{e}_{n}"] = acc
    for s in tgt.of_role("momentum"):
        images[s.name] = Expr.sym(s)
    return CoordinateMap.from_dict(src, tgt, images)


def mu_section_map(h: HamiltonianSystem) -> CoordinateMap:
    """Section J1PiStar -> MPi with ``pe = −H``."""
    b = h.bundle
    src = b.chart("J1PiStar")
    tgt = b.chart("MPi")
    images = {"pe": -h.H}
    for s in tgt.of_role("momentum"):
        images[s.name] = Expr.sym(s)
    return CoordinateMap.from_dict(src, tgt, images)
