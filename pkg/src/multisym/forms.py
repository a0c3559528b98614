"""Differential forms with symbolic coefficients on an adapted chart.

A term is keyed by a strictly increasing tuple of chart coordinate
positions.  ``d^m x`` is ``dx_0 ∧ … ∧ dx_{m-1}`` and
``d^{m-1}x_nu = i(∂/∂x_nu) d^m x = (-1)^nu dx_0 ∧ … (omit nu) … ∧ dx_{m-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .charts import Chart, CoordinateMap
from .errors import ChartMismatchError, DimensionError
from .expr import Expr, ZERO, ZeroVerdict, as_expr, differentiate, is_zero, substitute, to_latex


def _merge_sign(a: tuple, b: tuple):
    """Sorted concatenation of disjoint index tuples and its permutation sign."""
    if set(a) & set(b):
        return None, 0
    inversions = sum(1 for i in a for j in b if i > j)
    return tuple(sorted(a + b)), (-1 if inversions % 2 else 1)


class DiffForm:
    __slots__ = ("chart", "degree", "_terms")

    def __init__(self, chart: Chart, degree: int, terms: dict | None = None):
        if degree < 0 or degree > chart.dim:
            raise DimensionError(f"degree {degree} impossible on a {chart.dim}-dimensional chart")
        self.chart = chart
        self.degree = degree
        clean = {}
        for idx, c in (terms or {}).items():
            idx = tuple(idx)
            if len(idx) != degree or list(idx) != sorted(set(idx)):
                raise DimensionError(f"malformed index tuple {idx}")
            c = as_expr(c)
            if not c.is_zero_poly():
                clean[idx] = c
        self._terms = clean

    # construction -------------------------------------------------------
    @classmethod
    def function(cls, chart: Chart, f) -> "DiffForm":
        return cls(chart, 0, {(): as_expr(f)})

    @classmethod
    def differential(cls, chart: Chart, s) -> "DiffForm":
        return cls(chart, 1, {(chart.index(s),): Expr.const(1)})

    # inspection ---------------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return sorted(self._terms.items())

    def coefficient(self, idx) -> Expr:
        idx = tuple(self.chart.index(i) if not isinstance(i, int) else i for i in idx)
        if len(idx) != self.degree or list(idx) != sorted(set(idx)):
            raise DimensionError(f"index tuple {idx} is not strictly increasing of length {self.degree}")
        if any(i < 0 or i >= self.chart.dim for i in idx):
            raise DimensionError(f"index tuple {idx} out of range")
        return self._terms.get(idx, ZERO)

    def is_zero_poly(self) -> bool:
        return not self._terms

    def zero_verdict(self, samples: int = 64, seed: int = 0) -> ZeroVerdict:
        """Combined verdict over all coefficients (weakest one wins)."""
        worst = ZeroVerdict("proven-zero")
        for c in self._terms.values():
            v = is_zero(c, samples, seed)
            if v.status == "proven-nonzero":
                return v
            if v.status == "undecided":
                worst = ZeroVerdict("undecided", v.samples, max(worst.max_abs, v.max_abs))
        return worst

    def _check(self, other: "DiffForm"):
        if not isinstance(other, DiffForm):
            raise TypeError("expected a DiffForm")
        if other.chart != self.chart:
            raise ChartMismatchError(f"forms live on {self.chart.kind} and {other.chart.kind}")

    # algebra ------------------------------------------------------------
    def __add__(self, other):
        self._check(other)
        if other.degree != self.degree:
            raise DimensionError("cannot add forms of different degree")
        terms = dict(self._terms)
        for k, c in other._terms.items():
            terms[k] = terms.get(k, ZERO) + c
        return DiffForm(self.chart, self.degree, terms)

    def __neg__(self):
        return DiffForm(self.chart, self.degree, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, f) -> "DiffForm":
        f = as_expr(f)
        return DiffForm(self.chart, self.degree, {k: f * c for k, c in self._terms.items()})

    def __mul__(self, f):
        if isinstance(f, DiffForm):
            return wedge(self, f)
        return self.scale(f)

    def __rmul__(self, f):
        return self.scale(f)

    def __xor__(self, other):
        return wedge(self, other)

    def __eq__(self, other):
        if not isinstance(other, DiffForm):
            return NotImplemented
        return self.chart == other.chart and self.degree == other.degree and self._terms == other._terms

    def __hash__(self):
        return hash((self.chart, self.degree, frozenset(self._terms.items())))

    def map_coefficients(self, fn) -> "DiffForm":
        return DiffForm(self.chart, self.degree, {k: fn(c) for k, c in self._terms.items()})

    def __repr__(self):
        if not self._terms:
            return f"DiffForm({self.chart.kind}, {self.degree}, 0)"
        parts = []
        for idx, c in self.items():
            d = "^".join("d" + self.chart.symbols[i].name for i in idx)
            parts.append(f"({c})" + (f" {d}" if d else ""))
        return f"DiffForm({self.chart.kind}, {self.degree}, " + " + ".join(parts) + ")"


def zero_form(chart: Chart, degree: int) -> DiffForm:
    return DiffForm(chart, degree)


def wedge(f: DiffForm, g: DiffForm) -> DiffForm:
    f._check(g)
    if f.degree + g.degree > f.chart.dim:
        raise DimensionError("wedge degree exceeds the chart dimension")
    terms: dict = {}
    for i, a in f._terms.items():
        for j, b in g._terms.items():
            idx, sign = _merge_sign(i, j)
            if idx is None:
                continue
            prod = a * b
            terms[idx] = terms.get(idx, ZERO) + (prod if sign > 0 else -prod)
    return DiffForm(f.chart, f.degree + g.degree, terms)


def exterior_derivative(f: DiffForm) -> DiffForm:
    chart = f.chart
    if f.degree == chart.dim:
        raise DimensionError("exterior derivative of a top-degree form leaves the chart")
    terms: dict = {}
    for idx, c in f._terms.items():
        for s in c.free_symbols():
            if s not in chart:
                continue
            k = chart.index(s)
            if k in idx:
                continue
            dc = differentiate(c, s)
            if dc.is_zero_poly():
                continue
            new, sign = _merge_sign((k,), idx)
            terms[new] = terms.get(new, ZERO) + (dc if sign > 0 else -dc)
    return DiffForm(chart, f.degree + 1, terms)


@dataclass(frozen=True)
class VectorFieldExpr:
    chart: Chart
    components: tuple

    def __post_init__(self):
        comps = tuple(as_expr(c) for c in self.components)
        if len(comps) != self.chart.dim:
            raise DimensionError(f"{len(comps)} components for a {self.chart.dim}-dimensional chart")
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_dict(cls, chart: Chart, comps: dict) -> "VectorFieldExpr":
        out = [ZERO] * chart.dim
        for k, v in comps.items():
            out[chart.index(k)] = as_expr(v)
        return cls(chart, tuple(out))

    def component(self, s) -> Expr:
        return self.components[self.chart.index(s)]


def interior_product(X: VectorFieldExpr, f: DiffForm) -> DiffForm:
    if X.chart != f.chart:
        raise ChartMismatchError(f"vector field on {X.chart.kind}, form on {f.chart.kind}")
    if f.degree == 0:
        raise DimensionError("interior product of a 0-form is undefined")
    terms: dict = {}
    for idx, c in f._terms.items():
        for pos, k in enumerate(idx):
            comp = X.components[k]
            if comp.is_zero_poly():
                continue
            rest = idx[:pos] + idx[pos + 1:]
            val = comp * c
            terms[rest] = terms.get(rest, ZERO) + (val if pos % 2 == 0 else -val)
    return DiffForm(f.chart, f.degree - 1, terms)


def pullback(F: CoordinateMap, f: DiffForm) -> DiffForm:
    if F.target != f.chart:
        raise ChartMismatchError(f"map lands in {F.target.kind}, form lives on {f.chart.kind}")
    src = F.source
    if f.degree > src.dim:
        raise DimensionError(f"cannot pull a {f.degree}-form back to a {src.dim}-dimensional chart")
    assign = F.as_assignment()
    if f.degree == 0:
        return DiffForm.function(src, substitute(f.coefficient(()), assign))
    one_forms: dict = {}

    def d_image(k):
        if k not in one_forms:
            img = F.images[k]
            terms = {}
            for s in img.free_symbols():
                if s in src:
                    terms[(src.index(s),)] = differentiate(img, s)
            one_forms[k] = DiffForm(src, 1, terms)
        return one_forms[k]

    total = DiffForm(src, f.degree)
    for idx, c in f._terms.items():
        piece = DiffForm.function(src, substitute(c, assign))
        for k in idx:
            piece = wedge(piece, d_image(k))
        total = total + piece
    return total


# --------------------------------------------------------------------------
# base volume forms


def volume_index(chart: Chart) -> tuple:
    return tuple(range(chart.m))


def volume(chart: Chart, coeff=1) -> DiffForm:
    """``coeff * d^m x``."""
    return DiffForm(chart, chart.m, {volume_index(chart): as_expr(coeff)})


def volume_contracted(chart: Chart, nu: int, coeff=1) -> DiffForm:
    """``coeff * d^{m-1}x_nu``."""
    idx = tuple(i for i in range(chart.m) if i != nu)
    c = as_expr(coeff)
    return DiffForm(chart, chart.m - 1, {idx: c if nu % 2 == 0 else -c})


def momentum_form(chart: Chart, scalar) -> DiffForm:
    """``scalar d^m x + p_A_nu dy_A ∧ d^{m-1}x_nu`` on a chart carrying p."""
    out = volume(chart, scalar)
    for nu in range(chart.m):
        for a in range(chart.N):
            dy = DiffForm.differential(chart, f"y_{a}")
            out = out + wedge(dy, volume_contracted(chart, nu, chart.p(a, nu)))
    return out


# --------------------------------------------------------------------------
# LaTeX


def _latex_differential(chart: Chart, k: int) -> str:
    from .expr import _latex_symbol

    return "d" + _latex_symbol(chart.symbols[k])


def form_to_latex(f: DiffForm) -> str:
    """Render using ``d^m x`` and ``d^{m-1}x_\\nu`` where the pattern allows."""
    chart = f.chart
    m = chart.m
    base = set(range(m))
    pieces = []
    for idx, c in f.items():
        present = [i for i in idx if i < m]
        fiber = [i for i in idx if i >= m]
        missing = sorted(base - set(present))
        sign = 1
        tail = ""
        if not missing and m > 0 and present:
            sign = -1 if (m * len(fiber)) % 2 else 1
            tail = "d^{%d}x" % m
        elif len(missing) == 1 and m > 1:
            nu = missing[0]
            sign = -1 if ((m - 1) * len(fiber) + nu) % 2 else 1
            tail = "d^{%d}x_{%d}" % (m - 1, nu)
        else:
            fiber = list(idx)
        diffs = [_latex_differential(chart, k) for k in fiber]
        if tail:
            diffs.append(tail)
        coeff = c if sign > 0 else -c
        text = to_latex(coeff)
        if len(coeff.terms) > 1:
            text = f"\\left({text}\\right)"
        wedge_part = " \\wedge ".join(diffs)
        if wedge_part and coeff == 1:
            pieces.append(wedge_part)
        elif wedge_part and coeff == -1:
            pieces.append(f"-{wedge_part}")
        else:
            pieces.append(f"{text} \\, {wedge_part}" if wedge_part else text)
    if not pieces:
        return "0"
    return " + ".join(pieces).replace("+ -", "- ")
