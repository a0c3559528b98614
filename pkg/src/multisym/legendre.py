"""Legendre maps, their inversion, and image constraints."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .charts import CoordinateMap, compose, first_difference, projection_map
from .errors import ConvergenceError, NotInvertibleError, ScopeError
from .expr import Expr, ZERO, affine_decomposition, as_expr, differentiate, evaluate, substitute
from .lagrangian import LagrangianSystem, hessian, momenta, momenta_flat
from .linalg import left_nullspace, numeric_rank, rank, rref, solve

MAP_TARGETS = {
    "generalized": "J1Estar",
    "reduced": "Pi",
    "extended_hat": "MPi",
    "extended_tilde": "MPi",
    "restricted": "J1PiStar",
}


def legendre_map(sys: LagrangianSystem, kind: str) -> CoordinateMap:
    """Legendre map of ``kind`` as a coordinate map out of J1E."""
    try:
        target = sys.bundle.chart(MAP_TARGETS[kind])
    except KeyError:
        raise ValueError(f"unknown Legendre map {kind!r}") from None
    chart = sys.chart
    P = momenta(sys)
    images = {}
    for a in range(sys.N):
        for nu in range(sys.m):
            images[f"p_{a}_{nu}"] = P[a][nu]
    if kind in ("extended_hat", "extended_tilde", "generalized"):
        vp = ZERO
        for a in range(sys.N):
            for nu in range(sys.m):
                vp = vp + chart.v(a, nu) * P[a][nu]
        if kind == "extended_hat":
            images["pe"] = -vp
        elif kind == "extended_tilde":
            images["pe"] = sys.L - vp
        else:
            for eta in range(sys.m):
                for nu in range(sys.m):
                    acc = ZERO
                    for a in range(sys.N):
                        acc = acc - chart.v(a, eta) * P[a][nu]
                    images[f"q_{eta}_{nu}"] = acc
    return CoordinateMap.from_dict(chart, target, images)


# --------------------------------------------------------------------------
# inversion


def _compile(exprs):
    return lambda point: np.array([evaluate(e, point) for e in exprs], dtype=float)


def invert_reduced(sys: LagrangianSystem, p, base_point=None, tol: float = 1e-10, max_iter: int = 50):
    """Velocities ``v*`` with ``momenta(v*) = p`` by damped Newton from ``v = 0``.

    ``p`` is a flat sequence in ``nu*N + A`` order; ``base_point`` maps x/y
    names to values (default 0).  Returns a flat numpy array.
    """
    vs = sys.velocity_symbols()
    n = len(vs)
    target = np.asarray(p, dtype=float).reshape(n)
    point = {s.name: 0.0 for s in sys.chart.symbols}
    point.update(base_point or {})
    P = momenta_flat(sys)
    H = hessian(sys)
    v = np.zeros(n)

    def residual(vec):
        for s, val in zip(vs, vec):
            point[s.name] = float(val)
        return np.array([evaluate(e, point) for e in P]) - target

    r = residual(v)
    norm = float(np.max(np.abs(r)))
    for _ in range(max_iter + 1):
        if norm <= tol:
            return v
        residual(v)
        J = np.array([[evaluate(e, point) for e in row] for row in H], dtype=float)
        if numeric_rank(J) < n:
            raise NotInvertibleError("Hessian is singular at the current iterate")
        step = np.linalg.solve(J, -r)
        lam = 1.0
        while True:
            trial = v + lam * step
            r_trial = residual(trial)
            n_trial = float(np.max(np.abs(r_trial)))
            if n_trial < norm or lam < 1e-6:
                break
            lam *= 0.5
        v, r, norm = trial, r_trial, n_trial
    raise ConvergenceError(f"Newton did not converge in {max_iter} iterations (residual {norm:.3e})")


@dataclass
class AffineMomenta:
    """``P = M v + b`` with constant exact ``M`` and ``b`` free of velocities."""

    M: list
    b: list


def affine_momenta(sys: LagrangianSystem) -> AffineMomenta:
    vs = sys.velocity_symbols()
    if sys.L.degree_in(vs) > 2:
        raise ScopeError("Lagrangian has degree > 2 in the velocities; only affine momenta are supported")
    M, b = [], []
    for e in momenta_flat(sys):
        try:
            coeffs, rest = affine_decomposition(e, vs)
        except ValueError as exc:
            raise ScopeError(f"momenta are not affine in the velocities: {exc}") from None
        row = []
        for c in coeffs:
            if not c.is_constant():
                raise ScopeError("velocity coefficient matrix depends on (x, y); rank may vary and is not solved")
            val = c.constant_value()
            row.append(val if isinstance(val, Fraction) else Fraction(val))
        M.append(row)
        b.append(rest)
    return AffineMomenta(M, b)


def invert_reduced_symbolic(sys: LagrangianSystem) -> dict:
    """Exact ``v`` as expressions in (x, y, p) for a constant invertible Hessian."""
    aff = affine_momenta(sys)
    n = len(aff.M)
    if rank(aff.M) < n:
        raise NotInvertibleError("velocity Hessian is singular; no symbolic inverse")
    pi = sys.bundle.chart("Pi")
    ps = pi.of_role("momentum")
    rhs = [Expr.sym(ps[k]) - aff.b[k] for k in range(n)]
    inv = _inverse_rows(aff.M)
    out = {}
    for i, s in enumerate(sys.velocity_symbols()):
        acc = ZERO
        for k in range(n):
            if inv[i][k] != 0:
                acc = acc + rhs[k] * inv[i][k]
        out[s] = acc
    return out


def _inverse_rows(M):
    n = len(M)
    cols = []
    for j in range(n):
        e = [Fraction(int(i == j)) for i in range(n)]
        cols.append(solve(M, e))
    return [[cols[j][i] for j in range(n)] for i in range(n)]


# --------------------------------------------------------------------------
# image constraints


@dataclass
class ConstraintSet:
    chart: object
    tag: str
    constraints: list
    linear_matrix: list = field(default_factory=list)
    pivots: list = field(default_factory=list)
    substitution: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def __len__(self):
        return len(self.constraints)

    def reduce(self, e) -> Expr:
        return reduce_modulo(as_expr(e), self)

    def as_dict(self) -> dict:
        return {
            "tag": self.tag,
            "chart": self.chart.kind,
            "constraints": [str(c) for c in self.constraints],
            "linear_matrix": [[str(x) for x in row] for row in self.linear_matrix],
            "notes": list(self.notes),
        }


_TAGS = {
    "reduced": "reduced",
    "restricted": "restricted",
    "extended_hat": "extended-hat",
    "extended_tilde": "extended-tilde",
    "generalized": "generalized",
}


def particular_velocity(sys: LagrangianSystem, aff: AffineMomenta, chart) -> dict:
    """A velocity ``v*(p)`` with ``M v* + b = p`` on the image; free velocities set to 0."""
    n = len(aff.M)
    ps = chart.of_role("momentum")
    rhs = [Expr.sym(ps[k]) - aff.b[k] for k in range(n)]
    # independent rows of M
    _, row_piv = rref([list(col) for col in zip(*aff.M)])
    rows = [aff.M[i] for i in row_piv]
    _, col_piv = rref(rows)
    square = [[r[j] for j in col_piv] for r in rows]
    inv = _inverse_rows(square) if square else []
    out = {s: ZERO for s in sys.velocity_symbols()}
    vs = sys.velocity_symbols()
    for i, j in enumerate(col_piv):
        acc = ZERO
        for k, r in enumerate(row_piv):
            if inv[i][k] != 0:
                acc = acc + rhs[r] * inv[i][k]
        out[vs[j]] = acc
    return out


def _kernel_directions(aff: AffineMomenta) -> list:
    from .linalg import nullspace

    return nullspace(aff.M)


def _projectable(sys, image: Expr, kernel: list) -> bool:
    """True when ``image`` is constant along velocity kernel directions."""
    vs = sys.velocity_symbols()
    for k in kernel:
        d = ZERO
        for s, c in zip(vs, k):
            if c != 0:
                d = d + differentiate(image, s) * c
        if not d.is_zero_poly():
            return False
    return True


def image_constraints(sys: LagrangianSystem, kind: str = "reduced") -> ConstraintSet:
    """Constraints cutting out the image of a Legendre map (affine momenta only)."""
    if kind not in MAP_TARGETS:
        raise ValueError(f"unknown Legendre map {kind!r}")
    aff = affine_momenta(sys)
    chart = sys.bundle.chart(MAP_TARGETS[kind])
    ps = chart.of_role("momentum")
    W = left_nullspace(aff.M)
    constraints, pivots, subst = [], [], {}
    for w in W:
        c = ZERO
        for k, wk in enumerate(w):
            if wk != 0:
                c = c + (Expr.sym(ps[k]) - aff.b[k]) * wk
        constraints.append(c)
        piv = next(k for k, wk in enumerate(w) if wk != 0)
        pivots.append(ps[piv])
        # w is in reduced echelon form with unit pivot
        subst[ps[piv]] = Expr.sym(ps[piv]) - c
    cset = ConstraintSet(chart, _TAGS[kind], constraints, [list(w) for w in W], pivots, subst)
    if kind in ("extended_hat", "extended_tilde", "generalized"):
        fmap = legendre_map(sys, kind)
        vstar = particular_velocity(sys, aff, chart)
        kernel = _kernel_directions(aff)
        extra = ["pe"] if kind != "generalized" else [
            f"q_{e}_{n}" for e in range(sys.m) for n in range(sys.m)
        ]
        pending = [(Expr.sym(chart.symbol(n)), fmap.image(n), n) for n in extra]
        skipped = []
        for coord, img, name in pending:
            if not _projectable(sys, img, kernel):
                skipped.append(name)
                continue
            cset.constraints.append(coord - reduce_modulo(substitute(img, vstar), cset))
        if skipped:
            cset.notes.append(f"not constant on Legendre fibers, no relation emitted: {', '.join(skipped)}")
        diag = [f"q_{n}_{n}" for n in range(sys.m)]
        if kind == "generalized" and set(diag) & set(skipped):
            trace = sum((Expr.sym(chart.symbol(n)) for n in diag), ZERO)
            img = sum((fmap.image(n) for n in diag), ZERO)
            if _projectable(sys, img, kernel):
                cset.constraints.append(trace - reduce_modulo(substitute(img, vstar), cset))
                cset.notes.append("trace relation emitted for the diagonal q coordinates")
    return cset


def reduce_modulo(e: Expr, cset: ConstraintSet) -> Expr:
    """Eliminate the pivot momenta of the linear constraints from ``e``."""
    if not cset.substitution:
        return e
    return substitute(e, cset.substitution)


def vanishes_on_image(sys: LagrangianSystem, kind: str, constraint: Expr) -> bool:
    return substitute(constraint, legendre_map(sys, kind).as_assignment()).is_zero_poly()


# --------------------------------------------------------------------------
# commutativity of the bundle diagram


@dataclass
class CompatCheck:
    name: str
    passed: bool
    first_difference: str | None = None


def _compare(name, f: CoordinateMap, g: CoordinateMap) -> CompatCheck:
    diff = first_difference(f, g)
    return CompatCheck(name, diff is None, diff)


def check_projection_compat(sys: LagrangianSystem, maps: dict | None = None) -> list:
    """Normal-form checks that the Legendre maps commute with the projections.

    ``maps`` may override individual Legendre maps (used for negative controls).
    """
    b = sys.bundle
    lm = {k: legendre_map(sys, k) for k in MAP_TARGETS}
    lm.update(maps or {})
    checks = [
        _compare("delta∘generalized = reduced", compose(projection_map(b, "delta"), lm["generalized"]), lm["reduced"]),
        _compare("iota0∘generalized = extended_hat", compose(projection_map(b, "iota0"), lm["generalized"]), lm["extended_hat"]),
        _compare("mu∘extended_tilde = restricted", compose(projection_map(b, "mu"), lm["extended_tilde"]), lm["restricted"]),
        _compare("mu∘extended_hat = restricted", compose(projection_map(b, "mu"), lm["extended_hat"]), lm["restricted"]),
        _compare("psi∘restricted = reduced", compose(projection_map(b, "psi"), lm["restricted"]), lm["reduced"]),
    ]
    gap = lm["extended_tilde"].image("pe") - lm["extended_hat"].image("pe") - sys.L
    checks.append(CompatCheck("extended_tilde.pe - extended_hat.pe = L", gap.is_zero_poly(), None if gap.is_zero_poly() else "pe"))
    return checks
