"""Symbolic scalar expressions with an exact canonical polynomial form.

An :class:`Expr` is a sparse Laurent polynomial with rational (or float)
coefficients over *atoms*.  Atoms are chart symbols, elementary functions of
one argument (``sin cos exp log sinh cosh``) and reciprocals of non-monomial
expressions.  Every operation returns a normalized value: monomials are kept
in a dict keyed by sorted atom/exponent tuples, zero coefficients are dropped,
so two polynomials over the rationals are equal exactly when their normal
forms are identical.

Expressions are immutable and all functions here are pure.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Union

import numpy as np

from .errors import (
    DomainError,
    IndexOutOfRangeError,
    ParseError,
    UnassignedSymbolError,
    UnknownIdentifierError,
)

Number = Union[int, Fraction, float]

FUNCTIONS = ("sin", "cos", "exp", "log", "sinh", "cosh")

_ROLE_RANK = {
    "base": 0,
    "field": 1,
    "velocity": 2,
    "generalized": 3,
    "extended": 4,
    "momentum": 5,
    "auxiliary": 6,
}

_NAME_PATTERNS = (
    (re.compile(r"^x_(\d+)$"), "base"),
    (re.compile(r"^y_(\d+)$"), "field"),
    (re.compile(r"^v_(\d+)_(\d+)$"), "velocity"),
    (re.compile(r"^p_(\d+)_(\d+)$"), "momentum"),
    (re.compile(r"^q_(\d+)_(\d+)$"), "generalized"),
    (re.compile(r"^pe$"), "extended"),
)


# --------------------------------------------------------------------------
# atoms


@dataclass(frozen=True)
class Symbol:
    """A named chart coordinate.

    ``indices`` follow the textual name: ``v_A_nu`` and ``p_A_nu`` carry
    ``(A, nu)``, ``q_eta_nu`` carries ``(eta, nu)``.
    """

    name: str
    role: str = "auxiliary"
    indices: tuple = ()
    sort_key: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        idx = self.indices
        if self.role in ("velocity", "momentum"):
            # base index outer, field index inner: matches chart order
            idx = (idx[1], idx[0])
        object.__setattr__(self, "sort_key", (0, _ROLE_RANK[self.role], idx, self.name))

    @classmethod
    def from_name(cls, name: str) -> "Symbol":
        for pattern, role in _NAME_PATTERNS:
            match = pattern.match(name)
            if match:
                return cls(name, role, tuple(int(g) for g in match.groups()))
        if not re.match(r"^[A-Za-z][A-Za-z0-9_]*$", name) or name in FUNCTIONS:
            raise ParseError(f"invalid identifier {name!r}")
        return cls(name, "auxiliary", ())

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Expr"
    sort_key: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "sort_key", (1, self.name, self.arg.sort_key))


@dataclass(frozen=True)
class Inv:
    """Reciprocal of a non-monomial expression whose leading coefficient is 1."""

    base: "Expr"
    sort_key: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "sort_key", (2, self.base.sort_key))


Atom = Union[Symbol, Func, Inv]
Monomial = tuple  # tuple[tuple[Atom, int], ...] sorted by atom sort_key


def _coerce_coeff(value):
    if isinstance(value, bool):
        raise TypeError("bool is not a numeric coefficient")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, (Fraction, float)):
        return value
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.integer):
        return Fraction(int(value))
    raise TypeError(f"unsupported coefficient {value!r}")


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for atom, e in b:
        exps[atom] = exps.get(atom, 0) + e
    return tuple(sorted(((k, v) for k, v in exps.items() if v != 0), key=lambda t: t[0].sort_key))


def _mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def _mono_key(m: Monomial):
    return tuple((atom.sort_key, e) for atom, e in m)


def _term_order(item):
    mono, _ = item
    return (-_mono_degree(mono), _mono_key(mono))


# --------------------------------------------------------------------------
# Expr


class Expr:
    __slots__ = ("_terms", "_hash", "_key")

    def __init__(self, terms: Mapping | None = None):
        # trusted constructor: terms already normalized
        self._terms = dict(terms) if terms else {}
        self._hash = None
        self._key = None

    # construction -------------------------------------------------------
    @classmethod
    def const(cls, value: Number) -> "Expr":
        c = _coerce_coeff(value)
        return cls({(): c}) if c != 0 else cls()

    @classmethod
    def sym(cls, symbol: Symbol | str) -> "Expr":
        if isinstance(symbol, str):
            symbol = Symbol.from_name(symbol)
        return cls({((symbol, 1),): Fraction(1)})

    @classmethod
    def _atom(cls, atom, exponent: int = 1) -> "Expr":
        return cls({((atom, exponent),): Fraction(1)})

    @staticmethod
    def _from_items(items) -> "Expr":
        terms = {}
        for mono, c in items:
            terms[mono] = terms.get(mono, 0) + c
        return Expr({m: c for m, c in terms.items() if c != 0})

    # inspection ---------------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return sorted(self._terms.items(), key=_term_order)

    @property
    def sort_key(self):
        if self._key is None:
            self._key = tuple((_mono_key(m), float(c)) for m, c in self.items())
        return self._key

    def is_zero_poly(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(m == () for m in self._terms)

    def constant_value(self) -> Number:
        if not self.is_constant():
            raise ValueError("expression is not constant")
        return self._terms.get((), Fraction(0))

    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    def atoms(self) -> set:
        return {atom for m in self._terms for atom, _ in m}

    def free_symbols(self) -> set:
        out = set()
        for atom in self.atoms():
            if isinstance(atom, Symbol):
                out.add(atom)
            elif isinstance(atom, Func):
                out |= atom.arg.free_symbols()
            else:
                out |= atom.base.free_symbols()
        return out

    def is_polynomial(self) -> bool:
        """True when every atom is a symbol raised to a non-negative power."""
        return all(isinstance(a, Symbol) and e > 0 for m in self._terms for a, e in m)

    def is_laurent(self) -> bool:
        return all(isinstance(a, Symbol) for m in self._terms for a, _ in m)

    def degree_in(self, symbols: Iterable[Symbol]) -> float:
        """Total degree in ``symbols``; ``inf`` if they occur non-polynomially."""
        symbols = set(symbols)
        best = 0
        for mono in self._terms:
            d = 0
            for atom, e in mono:
                if isinstance(atom, Symbol):
                    if atom in symbols:
                        if e < 0:
                            return math.inf
                        d += e
                elif (atom.arg if isinstance(atom, Func) else atom.base).free_symbols() & symbols:
                    return math.inf
            best = max(best, d)
        return best

    # arithmetic ---------------------------------------------------------
    @staticmethod
    def _wrap(other) -> "Expr":
        if isinstance(other, Expr):
            return other
        if isinstance(other, Symbol):
            return Expr.sym(other)
        return Expr.const(other)

    def __add__(self, other):
        other = Expr._wrap(other)
        if not other._terms:
            return self
        terms = dict(self._terms)
        for m, c in other._terms.items():
            s = terms.get(m, 0) + c
            if s == 0:
                terms.pop(m, None)
            else:
                terms[m] = s
        return Expr(terms)

    __radd__ = __add__

    def __neg__(self):
        return Expr({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-Expr._wrap(other))

    def __rsub__(self, other):
        return Expr._wrap(other) + (-self)

    def __mul__(self, other):
        other = Expr._wrap(other)
        if not self._terms or not other._terms:
            return Expr()
        terms: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                terms[m] = terms.get(m, 0) + c1 * c2
        return Expr({m: c for m, c in terms.items() if c != 0})

    __rmul__ = __mul__

    def reciprocal(self) -> "Expr":
        if not self._terms:
            raise ZeroDivisionError("division by the zero expression")
        if self.is_monomial():
            (mono, c), = self._terms.items()
            inv_mono = tuple((a, -e) for a, e in mono)
            return Expr({inv_mono: 1 / c})
        lead = self.items()[0][1]
        base = self * (1 / lead)
        return Expr._atom(Inv(base)) * (1 / lead)

    def __truediv__(self, other):
        other = Expr._wrap(other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return Expr._wrap(other) * self.reciprocal()

    def __pow__(self, n):
        if isinstance(n, Expr):
            if not n.is_constant():
                raise TypeError("exponent must be an integer constant")
            n = n.constant_value()
        if isinstance(n, Fraction):
            if n.denominator != 1:
                raise TypeError("exponent must be an integer")
            n = int(n)
        if not isinstance(n, int) or isinstance(n, bool):
            raise TypeError("exponent must be an integer")
        if n < 0:
            return self.reciprocal() ** (-n)
        if n == 0:
            return Expr.const(1)
        if self.is_monomial():
            (mono, c), = self._terms.items()
            return Expr({tuple((a, e * n) for a, e in mono): c ** n})
        result = Expr.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # comparison ---------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Expr):
            return self._terms == other._terms
        if isinstance(other, (int, float, Fraction)) and not isinstance(other, bool):
            return self._terms == Expr.const(other)._terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    def __repr__(self):
        return f"Expr({to_string(self)!r})"

    def __str__(self):
        return to_string(self)

    # convenience wrappers -------------------------------------------------
    def diff(self, s: Symbol | str) -> "Expr":
        return differentiate(self, s)

    def subs(self, assignment: Mapping) -> "Expr":
        return substitute(self, assignment)


def sym(name: str) -> Expr:
    return Expr.sym(name)


def symbols(names: str) -> list:
    return [Expr.sym(n) for n in names.replace(",", " ").split()]


def as_expr(value) -> Expr:
    return Expr._wrap(value)


ZERO = Expr()
ONE = Expr.const(1)


# --------------------------------------------------------------------------
# elementary functions

_ZERO_ARG_VALUES = {"sin": 0, "cos": 1, "exp": 1, "sinh": 0, "cosh": 1}


def apply_function(name: str, arg) -> Expr:
    if name not in FUNCTIONS:
        raise ParseError(f"unknown function {name!r}")
    arg = as_expr(arg)
    if arg.is_zero_poly() and name in _ZERO_ARG_VALUES:
        return Expr.const(_ZERO_ARG_VALUES[name])
    if name == "log" and arg == ONE:
        return ZERO
    return Expr._atom(Func(name, arg))


def sin(e):
    return apply_function("sin", e)


def cos(e):
    return apply_function("cos", e)


def exp(e):
    return apply_function("exp", e)


def log(e):
    return apply_function("log", e)


def sinh(e):
    return apply_function("sinh", e)


def cosh(e):
    return apply_function("cosh", e)


# --------------------------------------------------------------------------
# differentiation


def _symbol_of(s) -> Symbol:
    if isinstance(s, Symbol):
        return s
    if isinstance(s, Expr):
        atoms = list(s._terms)
        if len(atoms) == 1 and s._terms[atoms[0]] == 1 and len(atoms[0]) == 1:
            atom, e = atoms[0][0]
            if isinstance(atom, Symbol) and e == 1:
                return atom
        raise TypeError(f"{s} is not a symbol")
    return Symbol.from_name(s)


def _atom_derivative(atom, s: Symbol, cache: dict) -> Expr:
    if atom in cache:
        return cache[atom]
    if isinstance(atom, Symbol):
        out = ONE if atom == s else ZERO
    elif isinstance(atom, Func):
        inner = _diff(atom.arg, s, cache)
        if inner.is_zero_poly():
            out = ZERO
        else:
            a = atom.arg
            outer = {
                "sin": lambda: cos(a),
                "cos": lambda: -sin(a),
                "exp": lambda: Expr._atom(atom),
                "log": lambda: a.reciprocal(),
                "sinh": lambda: cosh(a),
                "cosh": lambda: sinh(a),
            }[atom.name]()
            out = outer * inner
    else:
        inner = _diff(atom.base, s, cache)
        out = ZERO if inner.is_zero_poly() else -inner * Expr._atom(atom, 2)
    cache[atom] = out
    return out


def _diff(e: Expr, s: Symbol, cache: dict) -> Expr:
    items = []
    for mono, c in e._terms.items():
        for i, (atom, k) in enumerate(mono):
            da = _atom_derivative(atom, s, cache)
            if da.is_zero_poly():
                continue
            rest = mono[:i] + ((atom, k - 1),) + mono[i + 1:] if k != 1 else mono[:i] + mono[i + 1:]
            rest = tuple(t for t in rest if t[1] != 0)
            for dm, dc in da._terms.items():
                items.append((_mono_mul(rest, dm), c * k * dc))
    return Expr._from_items(items)


def differentiate(e: Expr, s) -> Expr:
    """Exact partial derivative of ``e`` with respect to symbol ``s``."""
    e = as_expr(e)
    s = _symbol_of(s)
    if s not in e.free_symbols():
        return ZERO
    return _diff(e, s, {})


# --------------------------------------------------------------------------
# substitution


def _normalize_assignment(assignment: Mapping) -> dict:
    out = {}
    for k, v in assignment.items():
        out[_symbol_of(k)] = as_expr(v)
    return out


def _subst(e: Expr, assignment: dict, cache: dict) -> Expr:
    relevant = False
    for mono in e._terms:
        for atom, _ in mono:
            if _atom_touched(atom, assignment, cache):
                relevant = True
                break
        if relevant:
            break
    if not relevant:
        return e
    items_expr = ZERO
    collected = []
    for mono, c in e._terms.items():
        term = Expr({(): c})
        plain = []
        for atom, k in mono:
            if _atom_touched(atom, assignment, cache):
                term = term * (_atom_image(atom, assignment, cache) ** k)
            else:
                plain.append((atom, k))
        if plain:
            term = term * Expr({tuple(plain): Fraction(1)})
        collected.append(term)
    for t in collected:
        items_expr = items_expr + t
    return items_expr


def _atom_touched(atom, assignment, cache) -> bool:
    key = ("t", atom)
    if key in cache:
        return cache[key]
    if isinstance(atom, Symbol):
        out = atom in assignment
    elif isinstance(atom, Func):
        out = bool(atom.arg.free_symbols() & assignment.keys())
    else:
        out = bool(atom.base.free_symbols() & assignment.keys())
    cache[key] = out
    return out


def _atom_image(atom, assignment, cache) -> Expr:
    key = ("i", atom)
    if key in cache:
        return cache[key]
    if isinstance(atom, Symbol):
        out = assignment[atom]
    elif isinstance(atom, Func):
        out = apply_function(atom.name, _subst(atom.arg, assignment, cache))
    else:
        out = _subst(atom.base, assignment, cache).reciprocal()
    cache[key] = out
    return out


def substitute(e: Expr, assignment: Mapping) -> Expr:
    """Simultaneous substitution of symbols; unassigned symbols pass through."""
    e = as_expr(e)
    assignment = _normalize_assignment(assignment)
    if not assignment:
        return e
    return _subst(e, assignment, {})


# --------------------------------------------------------------------------
# evaluation


def _point_values(point: Mapping) -> dict:
    out = {}
    for k, v in point.items():
        name = k.name if isinstance(k, Symbol) else (str(_symbol_of(k)) if isinstance(k, Expr) else k)
        out[name] = v
    return out


def _coeff_float(c):
    return float(c)


def _eval(e: Expr, values: dict, cache: dict):
    total = 0.0
    for mono, c in e._terms.items():
        term = _coeff_float(c)
        for atom, k in mono:
            v = _eval_atom(atom, values, cache)
            if k < 0:
                if np.any(np.asarray(v) == 0):
                    raise DomainError(f"division by zero evaluating {_atom_string(atom)}")
                term = term * (1.0 / v) ** (-k)
            else:
                term = term * v**k if k != 1 else term * v
        total = total + term
    return total


def _eval_atom(atom, values, cache):
    if atom in cache:
        return cache[atom]
    if isinstance(atom, Symbol):
        try:
            v = values[atom.name]
        except KeyError:
            raise UnassignedSymbolError(f"symbol {atom.name} has no value") from None
    elif isinstance(atom, Func):
        a = _eval(atom.arg, values, cache)
        if atom.name == "log":
            if np.any(np.asarray(a) <= 0):
                raise DomainError("log of a non-positive value")
        v = getattr(np, atom.name)(a)
    else:
        b = _eval(atom.base, values, cache)
        if np.any(np.asarray(b) == 0):
            raise DomainError("division by zero")
        v = 1.0 / b
    cache[atom] = v
    return v


def evaluate(e: Expr, point: Mapping):
    """Evaluate at ``point`` (symbol or name -> float or numpy array).

    Exact coefficients are converted to float once per term.  Array inputs
    broadcast, so a whole grid is evaluated in one call.
    """
    e = as_expr(e)
    values = _point_values(point)
    result = _eval(e, values, {})
    if isinstance(result, np.ndarray):
        return result
    return float(result)


# --------------------------------------------------------------------------
# zero testing


@dataclass(frozen=True)
class ZeroVerdict:
    status: str  # "proven-zero" | "proven-nonzero" | "undecided"
    samples: int = 0
    max_abs: float = 0.0

    @property
    def proven_zero(self) -> bool:
        return self.status == "proven-zero"

    @property
    def likely_zero(self) -> bool:
        return self.status == "proven-zero" or (
            self.status == "undecided" and self.samples > 0 and self.max_abs < 1e-10
        )


def is_zero(e: Expr, samples: int = 64, seed: int = 0) -> ZeroVerdict:
    """Tri-state zero test.

    Exact for Laurent polynomials in the chart symbols.  Anything involving
    function or reciprocal atoms is sampled on ``[-2, 2]^dim`` and at best
    reported ``undecided`` with its evidence.
    """
    e = as_expr(e)
    if e.is_zero_poly():
        return ZeroVerdict("proven-zero")
    if e.is_laurent():
        return ZeroVerdict("proven-nonzero")
    syms = sorted(e.free_symbols(), key=lambda s: s.sort_key)
    rng = np.random.default_rng(seed)
    got, max_abs, attempts = 0, 0.0, 0
    while got < samples and attempts < 20 * samples:
        attempts += 1
        point = {s.name: float(rng.uniform(-2.0, 2.0)) for s in syms}
        try:
            value = abs(evaluate(e, point))
        except DomainError:
            continue
        if not math.isfinite(value):
            continue
        got += 1
        max_abs = max(max_abs, value)
        if value > 1e-6:
            return ZeroVerdict("proven-nonzero", got, max_abs)
    return ZeroVerdict("undecided", got, max_abs)


# --------------------------------------------------------------------------
# printing


def _format_coeff(c) -> str:
    if isinstance(c, float):
        return repr(c)
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def _atom_string(atom) -> str:
    if isinstance(atom, Symbol):
        return atom.name
    if isinstance(atom, Func):
        return f"{atom.name}({to_string(atom.arg)})"
    return f"({to_string(atom.base)})"


def _mono_string(mono) -> str:
    parts = []
    for atom, k in mono:
        s = _atom_string(atom)
        if isinstance(atom, Inv):
            k = -k
        parts.append(s if k == 1 else f"{s}^{k}")
    return "*".join(parts)


def to_string(e: Expr) -> str:
    """Render in the input grammar; ``parse(to_string(e)) == e``."""
    items = e.items()
    if not items:
        return "0"
    out = []
    for i, (mono, c) in enumerate(items):
        neg = c < 0
        mag = -c if neg else c
        body = _mono_string(mono)
        if not body:
            text = _format_coeff(mag)
        elif mag == 1 and not isinstance(mag, float):
            text = body
        else:
            text = f"{_format_coeff(mag)}*{body}"
        if i == 0:
            out.append(f"-{text}" if neg else text)
        else:
            out.append(f" - {text}" if neg else f" + {text}")
    return "".join(out)


def _latex_symbol(s: Symbol) -> str:
    i = s.indices
    if s.role == "base":
        return f"x^{{{i[0]}}}"
    if s.role == "field":
        return f"y^{{{i[0]}}}"
    if s.role == "velocity":
        return f"v^{{{i[0]}}}_{{{i[1]}}}"
    if s.role == "momentum":
        return f"p_{{{i[0]}}}^{{{i[1]}}}"
    if s.role == "generalized":
        return f"\\hat{{p}}_{{{i[0]}}}^{{{i[1]}}}"
    if s.role == "extended":
        return "p"
    return s.name


def _latex_atom(atom) -> str:
    if isinstance(atom, Symbol):
        return _latex_symbol(atom)
    if isinstance(atom, Func):
        return f"\\{atom.name}\\left({to_latex(atom.arg)}\\right)"
    return f"\\left({to_latex(atom.base)}\\right)"


def to_latex(e: Expr) -> str:
    items = e.items()
    if not items:
        return "0"
    out = []
    for i, (mono, c) in enumerate(items):
        neg = c < 0
        mag = -c if neg else c
        factors = []
        for atom, k in mono:
            s = _latex_atom(atom)
            if isinstance(atom, Inv):
                k = -k
            if k != 1:
                if isinstance(atom, Symbol) and atom.role in ("velocity", "momentum", "generalized"):
                    s = f"({s})"
                s = f"{s}^{{{k}}}"
            factors.append(s)
        body = " ".join(factors)
        if isinstance(mag, Fraction) and mag.denominator != 1:
            coeff = f"\\frac{{{mag.numerator}}}{{{mag.denominator}}}"
        else:
            coeff = _format_coeff(mag)
        if not body:
            text = coeff
        elif mag == 1 and not isinstance(mag, float):
            text = body
        else:
            text = f"{coeff} {body}"
        if i == 0:
            out.append(f"-{text}" if neg else text)
        else:
            out.append(f" - {text}" if neg else f" + {text}")
    return "".join(out)


# --------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+|\d+)"
    r"|(?P<name>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, resolver):
        self.tokens = _tokenize(text)
        self.i = 0
        self.resolve = resolver

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind=None, value=None):
        tok = self.tokens[self.i]
        if kind and tok[0] != kind or value is not None and tok[1] != value:
            want = value or kind
            got = tok[1] or "end of input"
            raise ParseError(f"expected {want!r}, found {got!r}", tok[2])
        self.i += 1
        return tok

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected token {tok[1]!r}", tok[2])
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op, _, pos = self.take()[1], None, self.tokens[self.i - 1][2]
            rhs = self.unary()
            if op == "*":
                e = e * rhs
            else:
                if rhs.is_zero_poly():
                    raise ParseError("division by zero", pos)
                e = e / rhs
        return e

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("-", "+"):
            self.take()
            e = self.unary()
            return -e if tok[1] == "-" else e
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            n = self.exponent()
            if n < 0 and base.is_zero_poly():
                raise ParseError("zero raised to a negative power", self.peek()[2])
            return base**n
        return base

    def exponent(self) -> int:
        paren = False
        if self.peek()[1] == "(":
            self.take()
            paren = True
        sign = 1
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            if self.take()[1] == "-":
                sign = -sign
        tok = self.peek()
        if tok[0] != "num" or not tok[1].isdigit():
            raise ParseError("exponent must be an integer literal", tok[2])
        self.take()
        if paren:
            self.take("op", ")")
        return sign * int(tok[1])

    def atom(self):
        kind, value, pos = self.peek()
        if kind == "num":
            self.take()
            if value.isdigit():
                return Expr.const(int(value))
            return Expr.const(float(value))
        if kind == "name":
            self.take()
            if value in FUNCTIONS:
                self.take("op", "(")
                arg = self.expr()
                self.take("op", ")")
                try:
                    return apply_function(value, arg)
                except ParseError as exc:
                    raise ParseError(str(exc), pos) from None
            return Expr.sym(self.resolve(value, pos))
        if kind == "op" and value == "(":
            self.take()
            e = self.expr()
            self.take("op", ")")
            return e
        raise ParseError(f"unexpected token {value or 'end of input'!r}", pos)


def _make_resolver(chart):
    if chart is None:
        def resolve(name, pos):
            try:
                return Symbol.from_name(name)
            except ParseError:
                raise ParseError(f"invalid identifier {name!r}", pos) from None
        return resolve

    known = {s.name: s for s in chart}
    roles = {s.role for s in known.values()}

    def resolve(name, pos):
        if name in known:
            return known[name]
        try:
            s = Symbol.from_name(name)
        except ParseError:
            s = None
        if s is not None and s.role != "auxiliary" and s.role in roles:
            raise IndexOutOfRangeError(f"index out of range in {name!r}", pos)
        raise UnknownIdentifierError(f"unknown identifier {name!r}", pos)

    return resolve


def parse(text: str, chart: Iterable[Symbol] | None = None) -> Expr:
    """Parse infix text into a normalized :class:`Expr`.

    ``chart`` is any iterable of :class:`Symbol` (a ``Chart`` works); when
    given, every identifier must be one of its symbols.
    """
    if not isinstance(text, str):
        raise ParseError(f"expected a string, got {type(text).__name__}")
    if not text.strip():
        raise ParseError("empty expression", 0)
    return _Parser(text, _make_resolver(chart)).parse()


# --------------------------------------------------------------------------
# polynomial helpers used by the Legendre / constraint machinery


def affine_decomposition(e: Expr, variables: Iterable[Symbol]):
    """Split ``e = sum_k a_k * variables[k] + b``; raises if not affine.

    Coefficients ``a_k`` and ``b`` are free of ``variables``.
    """
    variables = list(variables)
    vset = set(variables)
    coeffs = {v: [] for v in variables}
    rest = []
    for mono, c in e._terms.items():
        hits = [(i, atom, k) for i, (atom, k) in enumerate(mono) if atom in vset]
        for atom, _ in mono:
            if not isinstance(atom, Symbol):
                inner = atom.arg if isinstance(atom, Func) else atom.base
                if inner.free_symbols() & vset:
                    raise ValueError("non-polynomial dependence on the variables")
        if not hits:
            rest.append((mono, c))
        elif len(hits) == 1 and hits[0][2] == 1:
            i, atom, _ = hits[0]
            coeffs[atom].append((mono[:i] + mono[i + 1:], c))
        else:
            raise ValueError("expression is not affine in the variables")
    return (
        [Expr._from_items(coeffs[v]) for v in variables],
        Expr._from_items(rest),
    )
