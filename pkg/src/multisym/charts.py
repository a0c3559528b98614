"""Adapted coordinate charts on E and its jet and multimomentum bundles.

Every chart lists the base coordinates ``x_0 .. x_{m-1}`` first, then the
fields ``y_0 .. y_{N-1}``, then fiber coordinates:

==========  =============================================================
E           x, y
J1E         x, y, v_A_nu              (nu outer, A inner)
J1Estar     x, y, q_eta_nu, p_A_nu    (q: eta outer, nu inner)
Pi          x, y, p_A_nu
MPi         x, y, pe, p_A_nu
J1PiStar    x, y, p_A_nu
==========  =============================================================

Velocity and momentum symbols are flattened with index ``nu*N + A``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from .errors import ChartMismatchError, DimensionError, InvalidConnectionError
from .expr import Expr, Symbol, ZERO, as_expr, substitute

CHART_KINDS = ("E", "J1E", "J1Estar", "Pi", "MPi", "J1PiStar")


@dataclass(frozen=True)
class Chart:
    kind: str
    m: int
    N: int
    symbols: tuple = field(compare=False, repr=False)

    def __iter__(self):
        return iter(self.symbols)

    def __len__(self):
        return len(self.symbols)

    @property
    def dim(self) -> int:
        return len(self.symbols)

    @cached_property
    def _positions(self) -> dict:
        return {s: i for i, s in enumerate(self.symbols)}

    @cached_property
    def _by_name(self) -> dict:
        return {s.name: s for s in self.symbols}

    def index(self, s) -> int:
        s = self.symbol(s) if not isinstance(s, Symbol) else s
        try:
            return self._positions[s]
        except KeyError:
            raise ChartMismatchError(f"{s.name} is not a coordinate of {self.kind}") from None

    def symbol(self, s) -> Symbol:
        if isinstance(s, Symbol):
            return s
        if isinstance(s, Expr):
            (s,) = s.free_symbols()
            return s
        try:
            return self._by_name[s]
        except KeyError:
            raise ChartMismatchError(f"{s} is not a coordinate of {self.kind}") from None

    def __contains__(self, s) -> bool:
        if isinstance(s, str):
            return s in self._by_name
        return s in self._positions

    # named coordinates as expressions
    def x(self, nu: int) -> Expr:
        return Expr.sym(self._by_name[f"x_{nu}"])

    def y(self, a: int) -> Expr:
        return Expr.sym(self._by_name[f"y_{a}"])

    def v(self, a: int, nu: int) -> Expr:
        return Expr.sym(self._by_name[f"v_{a}_{nu}"])

    def p(self, a: int, nu: int) -> Expr:
        return Expr.sym(self._by_name[f"p_{a}_{nu}"])

    def q(self, eta: int, nu: int) -> Expr:
        return Expr.sym(self._by_name[f"q_{eta}_{nu}"])

    @property
    def pe(self) -> Expr:
        return Expr.sym(self._by_name["pe"])

    def of_role(self, role: str) -> list:
        return [s for s in self.symbols if s.role == role]

    @property
    def base_symbols(self) -> list:
        return self.symbols[: self.m]


def _build_chart(kind: str, m: int, N: int) -> Chart:
    xs = [Symbol(f"x_{n}", "base", (n,)) for n in range(m)]
    ys = [Symbol(f"y_{a}", "field", (a,)) for a in range(N)]
    vs = [Symbol(f"v_{a}_{n}", "velocity", (a, n)) for n in range(m) for a in range(N)]
    ps = [Symbol(f"p_{a}_{n}", "momentum", (a, n)) for n in range(m) for a in range(N)]
    qs = [Symbol(f"q_{e}_{n}", "generalized", (e, n)) for e in range(m) for n in range(m)]
    pe = [Symbol("pe", "extended", ())]
    if kind == "M":
        return Chart(kind, m, N, tuple(xs))
    fiber = {
        "E": [],
        "J1E": vs,
        "J1Estar": qs + ps,
        "Pi": ps,
        "MPi": pe + ps,
        "J1PiStar": ps,
    }[kind]
    return Chart(kind, m, N, tuple(xs + ys + fiber))


@dataclass(frozen=True)
class BundleSpec:
    m: int
    N: int

    def __post_init__(self):
        for label, value in (("m", self.m), ("N", self.N)):
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise DimensionError(f"{label} must be a positive integer, got {value!r}")

    @cached_property
    def charts(self) -> dict:
        return {k: _build_chart(k, self.m, self.N) for k in CHART_KINDS}

    @cached_property
    def base_chart(self) -> Chart:
        """Chart on M itself (base coordinates only), the source of sections."""
        return _build_chart("M", self.m, self.N)

    def chart(self, kind: str) -> Chart:
        if kind == "M":
            return self.base_chart
        try:
            return self.charts[kind]
        except KeyError:
            raise ChartMismatchError(f"unknown chart kind {kind!r}") from None

    def flat(self, a: int, nu: int) -> int:
        return nu * self.N + a

    def unflat(self, k: int) -> tuple:
        """Inverse of :meth:`flat`: returns ``(A, nu)``."""
        return k % self.N, k // self.N


def make_bundle(m: int, N: int) -> BundleSpec:
    return BundleSpec(m, N)


# --------------------------------------------------------------------------
# coordinate maps


@dataclass(frozen=True)
class CoordinateMap:
    """Map ``source -> target`` given by one image per target coordinate."""

    source: Chart
    target: Chart
    images: tuple

    def __post_init__(self):
        images = tuple(as_expr(e) for e in self.images)
        object.__setattr__(self, "images", images)
        if len(images) != self.target.dim:
            raise DimensionError(
                f"{len(images)} images given for a {self.target.kind} chart of dimension {self.target.dim}"
            )
        for i, e in enumerate(images):
            stray = [s for s in e.free_symbols() if s.role != "auxiliary" and s not in self.source]
            if stray:
                raise ChartMismatchError(
                    f"image of {self.target.symbols[i].name} uses {stray[0].name}, "
                    f"not a coordinate of {self.source.kind}"
                )

    @classmethod
    def from_dict(cls, source: Chart, target: Chart, images: dict) -> "CoordinateMap":
        """Images keyed by target symbol name; base and field coordinates default to identity."""
        out = []
        for s in target.symbols:
            if s.name in images:
                out.append(as_expr(images[s.name]))
            elif s in source and s.role in ("base", "field"):
                out.append(Expr.sym(s))
            else:
                raise DimensionError(f"no image given for {s.name}")
        return cls(source, target, tuple(out))

    def image(self, s) -> Expr:
        return self.images[self.target.index(s)]

    def as_assignment(self) -> dict:
        return dict(zip(self.target.symbols, self.images))

    def pull(self, e: Expr) -> Expr:
        """Pullback of a function on the target chart."""
        return substitute(e, self.as_assignment())

    def then(self, other: "CoordinateMap") -> "CoordinateMap":
        """``other ∘ self``: apply ``self`` first."""
        return compose(other, self)


def compose(outer: CoordinateMap, inner: CoordinateMap) -> CoordinateMap:
    """``outer ∘ inner`` by eager substitution."""
    if inner.target != outer.source:
        raise ChartMismatchError(
            f"cannot compose {inner.source.kind}->{inner.target.kind} with "
            f"{outer.source.kind}->{outer.target.kind}"
        )
    assign = inner.as_assignment()
    return CoordinateMap(inner.source, outer.target, tuple(substitute(e, assign) for e in outer.images))


def identity_map(chart: Chart) -> CoordinateMap:
    return CoordinateMap(chart, chart, tuple(Expr.sym(s) for s in chart.symbols))


def first_difference(f: CoordinateMap, g: CoordinateMap):
    """Name of the first target coordinate where the images differ, else None."""
    if f.source != g.source or f.target != g.target:
        return "<chart>"
    for s, a, b in zip(f.target.symbols, f.images, g.images):
        if a != b:
            return s.name
    return None


def projection_map(bundle: BundleSpec, kind: str) -> CoordinateMap:
    """Natural maps between the multimomentum charts.

    ``delta`` J1Estar->Pi, ``iota0`` J1Estar->MPi, ``mu`` MPi->J1PiStar,
    ``psi`` J1PiStar->Pi.
    """
    c = bundle.charts
    if kind == "delta":
        src, tgt = c["J1Estar"], c["Pi"]
        images = {}
    elif kind == "iota0":
        src, tgt = c["J1Estar"], c["MPi"]
        trace = sum((src.q(n, n) for n in range(bundle.m)), ZERO)
        images = {"pe": trace}
    elif kind == "mu":
        src, tgt = c["MPi"], c["J1PiStar"]
        images = {}
    elif kind == "psi":
        src, tgt = c["J1PiStar"], c["Pi"]
        images = {}
    elif kind == "psi_inv":
        src, tgt = c["Pi"], c["J1PiStar"]
        images = {}
    else:
        raise ValueError(f"unknown projection {kind!r}")
    for s in tgt.symbols:
        if s.role == "momentum":
            images[s.name] = Expr.sym(s)
    return CoordinateMap.from_dict(src, tgt, images)


def canonical_form(bundle: BundleSpec, kind: str):
    """Tautological m-form on J1Estar (trace of q) or MPi (pe)."""
    from . import forms

    if kind not in ("J1Estar", "MPi"):
        raise ChartMismatchError(f"no canonical form on {kind}")
    chart = bundle.chart(kind)
    if kind == "J1Estar":
        scalar = sum((chart.q(n, n) for n in range(bundle.m)), ZERO)
    else:
        scalar = chart.pe
    return forms.momentum_form(chart, scalar)


# --------------------------------------------------------------------------
# connections


@dataclass(frozen=True)
class Connection:
    """Components Γ^A_ν stored flat with index ``nu*N + A``."""

    bundle: BundleSpec
    components: tuple

    def gamma(self, a: int, nu: int) -> Expr:
        return self.components[self.bundle.flat(a, nu)]

    @property
    def is_trivial(self) -> bool:
        return all(c.is_zero_poly() for c in self.components)


def make_connection(bundle: BundleSpec, components=None) -> Connection:
    """Validate Γ components (``None`` gives the trivial connection)."""
    n = bundle.m * bundle.N
    if components is None:
        return Connection(bundle, tuple(ZERO for _ in range(n)))
    comps = tuple(as_expr(c) for c in components)
    if len(comps) != n:
        raise DimensionError(f"connection needs {n} components, got {len(comps)}")
    for k, c in enumerate(comps):
        for s in c.free_symbols():
            if s.role not in ("base", "field"):
                a, nu = bundle.unflat(k)
                raise InvalidConnectionError(
                    f"component Gamma^{a}_{nu} depends on {s.name}; only x and y are allowed"
                )
            if s.indices[0] >= (bundle.m if s.role == "base" else bundle.N):
                raise InvalidConnectionError(f"{s.name} is out of range for this bundle")
    return Connection(bundle, comps)
