"""Lagrangian-side derivations on the jet chart J1E."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .charts import BundleSpec, Connection, make_connection
from .errors import ChartMismatchError, DomainError
from .expr import Expr, as_expr, differentiate, evaluate, substitute
from .forms import DiffForm, exterior_derivative, volume, volume_contracted, wedge
from .linalg import numeric_rank, rank


@dataclass(frozen=True)
class LagrangianSystem:
    bundle: BundleSpec
    L: Expr
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "L", as_expr(self.L))
        chart = self.chart
        for s in self.L.free_symbols():
            if s not in chart:
                raise ChartMismatchError(f"Lagrangian uses {s.name}, which is not a J1E coordinate")

    @property
    def chart(self):
        return self.bundle.chart("J1E")

    @property
    def m(self):
        return self.bundle.m

    @property
    def N(self):
        return self.bundle.N

    def velocity_symbols(self) -> list:
        """Velocities in flat order ``nu*N + A``."""
        return self.chart.of_role("velocity")


@dataclass(frozen=True)
class SectionExpr:
    """Closed-form section ``y_A = phi_A(x)``."""

    bundle: BundleSpec
    components: tuple

    def __post_init__(self):
        comps = tuple(as_expr(c) for c in self.components)
        if len(comps) != self.bundle.N:
            raise ChartMismatchError(f"section needs {self.bundle.N} components, got {len(comps)}")
        for c in comps:
            for s in c.free_symbols():
                if s.role != "base" or s.indices[0] >= self.bundle.m:
                    raise ChartMismatchError(f"section component depends on {s.name}; only x is allowed")
        object.__setattr__(self, "components", comps)

    def jet_assignment(self) -> dict:
        """Substitution ``y -> phi``, ``v_A_nu -> d phi_A / d x_nu``."""
        chart = self.bundle.chart("J1E")
        out = {}
        for a, phi in enumerate(self.components):
            out[chart.symbol(f"y_{a}")] = phi
            for nu in range(self.bundle.m):
                out[chart.symbol(f"v_{a}_{nu}")] = differentiate(phi, f"x_{nu}")
        return out


def momenta(sys: LagrangianSystem) -> list:
    """``P[A][nu] = ∂L/∂v_A_nu``."""
    return [[differentiate(sys.L, f"v_{a}_{nu}") for nu in range(sys.m)] for a in range(sys.N)]


def momenta_flat(sys: LagrangianSystem) -> list:
    return [differentiate(sys.L, s) for s in sys.velocity_symbols()]


def hessian(sys: LagrangianSystem) -> list:
    """Second velocity derivatives, rows and columns indexed by ``nu*N + A``."""
    vs = sys.velocity_symbols()
    first = [differentiate(sys.L, s) for s in vs]
    return [[differentiate(first[i], vs[j]) for j in range(len(vs))] for i in range(len(vs))]


@dataclass
class RegularityReport:
    classification: str  # regular | singular | indeterminate
    full_rank: int
    sampled_ranks: list = field(default_factory=list)
    symbolic_rank: int | None = None
    constant_hessian: bool = False
    hyperregular_certified: bool = False

    @property
    def rank(self):
        if self.symbolic_rank is not None:
            return self.symbolic_rank
        if self.sampled_ranks and len(set(self.sampled_ranks)) == 1:
            return self.sampled_ranks[0]
        return None

    def as_dict(self) -> dict:
        return {
            "classification": self.classification,
            "full_rank": self.full_rank,
            "symbolic_rank": self.symbolic_rank,
            "sampled_ranks": list(self.sampled_ranks),
            "constant_hessian": self.constant_hessian,
            "hyperregular_certified": self.hyperregular_certified,
        }


def _exact_constant_matrix(h) -> list | None:
    out = []
    for row in h:
        r = []
        for e in row:
            if not e.is_constant():
                return None
            c = e.constant_value()
            if not isinstance(c, Fraction):
                c = Fraction(c)
            r.append(c)
        out.append(r)
    return out


def classify_regularity(sys: LagrangianSystem, samples: int = 16, seed: int = 0, points=None) -> RegularityReport:
    """Rank of the velocity Hessian at sample points.

    ``points`` (list of name -> value dicts, missing coordinates default to 0)
    replaces the random samples.  A constant Hessian also gets an exact rank.
    """
    h = hessian(sys)
    n = len(h)
    exact = _exact_constant_matrix(h)
    sym_rank = rank(exact) if exact is not None else None
    coords = [s.name for s in sys.chart.symbols]
    if points is None:
        rng = np.random.default_rng(seed)
        pts = [{c: float(rng.uniform(-2.0, 2.0)) for c in coords} for _ in range(max(samples, 1))]
    else:
        pts = [{c: float(p.get(c, 0.0)) for c in coords} for p in points]
    ranks = []
    for pt in pts:
        try:
            mat = np.array([[evaluate(e, pt) for e in row] for row in h], dtype=float)
        except DomainError:
            continue
        ranks.append(numeric_rank(mat))
    if sym_rank is not None and points is None:
        cls = "regular" if sym_rank == n else "singular"
    elif ranks and len(set(ranks)) == 1:
        cls = "regular" if ranks[0] == n else "singular"
    else:
        cls = "indeterminate"
    certified = exact is not None and sym_rank == n and sys.L.is_polynomial()
    return RegularityReport(cls, n, ranks, sym_rank, exact is not None, certified)


def energy_density(sys: LagrangianSystem, connection: Connection | None = None) -> Expr:
    """``Σ ∂L/∂v (v − Γ) − L`` on J1E."""
    connection = connection or make_connection(sys.bundle)
    chart = sys.chart
    total = -sys.L
    for nu in range(sys.m):
        for a in range(sys.N):
            p = differentiate(sys.L, f"v_{a}_{nu}")
            total = total + p * (chart.v(a, nu) - connection.gamma(a, nu))
    return total


def momentum_part(chart, P) -> DiffForm:
    """``Σ P[A][nu] dy_A ∧ d^{m-1}x_nu`` on ``chart``."""
    out = DiffForm(chart, chart.m)
    for nu in range(chart.m):
        for a in range(chart.N):
            dy = DiffForm.differential(chart, f"y_{a}")
            out = out + wedge(dy, volume_contracted(chart, nu, P[a][nu]))
    return out


def poincare_cartan(sys: LagrangianSystem):
    """Return ``(Θ_L, Ω_L)``."""
    chart = sys.chart
    theta = momentum_part(chart, momenta(sys)) - volume(chart, energy_density(sys))
    return theta, -exterior_derivative(theta)


def theta_small(sys: LagrangianSystem) -> DiffForm:
    """``Θ_L − L d^m x``."""
    return poincare_cartan(sys)[0] - volume(sys.chart, sys.L)


def euler_lagrange_residual(sys: LagrangianSystem, phi: SectionExpr) -> list:
    """``∂L/∂y_A − Σ_nu D_nu ∂L/∂v_A_nu`` along the prolongation of ``phi``."""
    assign = phi.jet_assignment()
    out = []
    for a in range(sys.N):
        r = substitute(differentiate(sys.L, f"y_{a}"), assign)
        for nu in range(sys.m):
            pa = substitute(differentiate(sys.L, f"v_{a}_{nu}"), assign)
            r = r - differentiate(pa, f"x_{nu}")
        out.append(r)
    return out


def euler_lagrange_operator(sys: LagrangianSystem) -> dict:
    """Pieces of the EL equations as J1E expressions, for numeric use.

    Returns ``force[A] = ∂L/∂y_A`` and ``momenta[A][nu]``.
    """
    return {
        "force": [differentiate(sys.L, f"y_{a}") for a in range(sys.N)],
        "momenta": momenta(sys),
    }

