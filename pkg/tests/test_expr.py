from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from conftest import EM_L, to_sympy
from multisym.charts import make_bundle
from multisym.errors import (
    DomainError,
    IndexOutOfRangeError,
    ParseError,
    UnassignedSymbolError,
    UnknownIdentifierError,
)
from multisym.expr import (
    Expr,
    Symbol,
    affine_decomposition,
    cos,
    differentiate,
    evaluate,
    is_zero,
    parse,
    sin,
    substitute,
    sym,
    to_latex,
    to_string,
)

NAMES = ["x_0", "x_1", "y_0", "v_0_0", "v_0_1"]

# random expressions in the input grammar; log is kept away from non-positive arguments
leaf = st.one_of(
    st.sampled_from(NAMES),
    st.integers(-5, 5).map(str),
    st.tuples(st.integers(-9, 9), st.integers(1, 7)).map(lambda t: f"({t[0]}/{t[1]})"),
)


def _extend(children):
    return st.one_of(
        st.tuples(children, children).map(lambda t: f"({t[0]} + {t[1]})"),
        st.tuples(children, children).map(lambda t: f"({t[0]} - {t[1]})"),
        st.tuples(children, children).map(lambda t: f"({t[0]})*({t[1]})"),
        st.tuples(children, st.integers(0, 3)).map(lambda t: f"({t[0]})^{t[1]}"),
        st.tuples(st.sampled_from(["sin", "cos", "exp", "sinh", "cosh"]), children).map(lambda t: f"{t[0]}({t[1]})"),
        children.map(lambda c: f"log(1 + ({c})^2)"),
    )


exprs = st.recursive(leaf, _extend, max_leaves=8)
polys = st.recursive(
    st.one_of(st.sampled_from(NAMES), st.integers(-4, 4).map(str)),
    lambda ch: st.one_of(
        st.tuples(ch, ch).map(lambda t: f"({t[0]} + {t[1]})"),
        st.tuples(ch, ch).map(lambda t: f"({t[0]})*({t[1]})"),
        st.tuples(ch, st.integers(0, 3)).map(lambda t: f"({t[0]})^{t[1]}"),
    ),
    max_leaves=10,
)


def sp(name):
    return sympy.Symbol(name)


# --------------------------------------------------------------------------
# parse


def test_parse_em_lagrangian_is_quadratic():
    c = make_bundle(3, 3).chart("J1E")
    e = parse("1/4*(v_1_2 - v_2_1)^2", c)
    assert e.is_polynomial()
    assert e.degree_in(c.of_role("velocity")) == 2
    assert e == parse("1/4*v_1_2^2 - 1/2*v_1_2*v_2_1 + 1/4*v_2_1^2", c)


def test_parse_sum_of_symbol_and_product():
    e = parse("x_0 + y_0*v_0_0")
    assert len(e.terms) == 2
    assert e == sym("x_0") + sym("y_0") * sym("v_0_0")


def test_parse_rejects_unknown_identifier():
    chart = make_bundle(1, 2).chart("J1E")
    with pytest.raises(UnknownIdentifierError):
        parse("q_7", chart)


def test_parse_rejects_out_of_range_index():
    chart = make_bundle(1, 2).chart("J1E")
    with pytest.raises(IndexOutOfRangeError):
        parse("y_2 + x_0", chart)


def test_parse_reports_syntax_position():
    with pytest.raises(ParseError) as exc:
        parse("x_0 + * 2")
    assert exc.value.position == 6


@pytest.mark.parametrize("text", ["", "(x_0", "x_0)", "sin x_0", "x_0^y_0", "3 $ 4"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse(text)


def test_rationals_are_exact():
    e = parse("1/3 + 1/6")
    assert e.constant_value() == Fraction(1, 2)
    big = parse("12345678901234567890123/7")
    assert big.constant_value() == Fraction(12345678901234567890123, 7)


def test_polynomial_normal_form_is_canonical():
    a = parse("(x_0 + y_0)^2 - 2*x_0*y_0")
    b = parse("y_0^2 + x_0^2")
    assert a == b
    assert to_string(a) == to_string(b)
    assert parse("x_0 - x_0").is_zero_poly()


@settings(max_examples=150, deadline=None)
@given(exprs)
def test_parse_print_roundtrip(text):
    e = parse(text)
    assert parse(to_string(e)) == e


@settings(max_examples=100, deadline=None)
@given(polys, polys)
def test_normal_form_agrees_with_sympy_expand(a, b):
    ea, eb = parse(a), parse(b)
    same = sympy.expand(to_sympy(ea) - to_sympy(eb)) == 0
    assert (ea == eb) == same


# --------------------------------------------------------------------------
# differentiate


def test_em_momentum_derivative():
    c = make_bundle(3, 3).chart("J1E")
    L = parse(EM_L, c)
    got = differentiate(L, "v_1_0")
    assert got == parse("-1/2*(v_1_0 - v_0_1)", c)


def test_derivative_basics():
    assert differentiate(parse("1/2*v_0_0^2"), "v_0_0") == sym("v_0_0")
    assert differentiate(sin(sym("x_0")), "x_0") == cos(sym("x_0"))
    assert differentiate(parse("log(x_0)"), "x_0") == parse("x_0^-1")
    assert differentiate(parse("y_0*x_0"), "v_0_0").is_zero_poly()


@settings(max_examples=150, deadline=None)
@given(exprs, st.sampled_from(NAMES))
def test_derivative_matches_sympy(text, name):
    e = parse(text)
    ours = to_sympy(differentiate(e, name))
    theirs = sympy.diff(to_sympy(e), sp(name))
    rng = np.random.default_rng(len(text))
    for _ in range(3):
        pt = {sp(n): float(v) for n, v in zip(NAMES, rng.uniform(-1, 1, len(NAMES)))}
        a, b = complex(ours.evalf(subs=pt)), complex(theirs.evalf(subs=pt))
        assert abs(a - b) <= 1e-8 * (1 + abs(b))


@settings(max_examples=120, deadline=None)
@given(exprs, exprs, st.integers(-3, 3), st.integers(-3, 3), st.sampled_from(NAMES))
def test_derivative_is_linear(a, b, ka, kb, name):
    ea, eb = parse(a), parse(b)
    lhs = differentiate(ka * ea + kb * eb, name)
    rhs = ka * differentiate(ea, name) + kb * differentiate(eb, name)
    assert is_zero(lhs - rhs, samples=16).likely_zero


@settings(max_examples=120, deadline=None)
@given(exprs, exprs, st.sampled_from(NAMES))
def test_leibniz_rule(a, b, name):
    ea, eb = parse(a), parse(b)
    lhs = differentiate(ea * eb, name)
    rhs = differentiate(ea, name) * eb + ea * differentiate(eb, name)
    assert is_zero(lhs - rhs, samples=16).likely_zero


@settings(max_examples=120, deadline=None)
@given(exprs, st.sampled_from(NAMES), st.sampled_from(NAMES))
def test_mixed_partials_commute(text, s, t):
    e = parse(text)
    d1 = differentiate(differentiate(e, s), t)
    d2 = differentiate(differentiate(e, t), s)
    assert is_zero(d1 - d2, samples=16).likely_zero


@settings(max_examples=150, deadline=None)
@given(exprs, st.sampled_from(NAMES), st.integers(0, 10_000))
def test_derivative_vs_central_difference(text, name, seed):
    e = parse(text)
    d = differentiate(e, name)
    rng = np.random.default_rng(seed)
    pt = {n: float(v) for n, v in zip(NAMES, rng.uniform(-1, 1, len(NAMES)))}
    h = 1e-5
    up, dn = dict(pt), dict(pt)
    up[name] += h
    dn[name] -= h
    fd = (evaluate(e, up) - evaluate(e, dn)) / (2 * h)
    exact = evaluate(d, pt)
    scale = 1 + abs(exact) + abs(evaluate(e, pt))
    assert abs(fd - exact) <= 1e-4 * scale


# --------------------------------------------------------------------------
# substitute and evaluate


def test_substitute_velocity_by_momentum():
    e = substitute(parse("1/2*v_0_0^2"), {"v_0_0": sym("p_0_0")})
    assert e == parse("1/2*p_0_0^2")


def test_substitute_is_simultaneous():
    e = substitute(parse("x_0 + 2*x_1"), {"x_0": sym("x_1"), "x_1": sym("x_0")})
    assert e == parse("x_1 + 2*x_0")


def test_em_energy_on_the_image():
    b = make_bundle(3, 3)
    J = b.chart("J1E")
    L = parse(EM_L, J)
    # E_L = Σ p v - L with p = -1/2 F, evaluated with v written through p on the image
    E = sum((differentiate(L, s) * Expr.sym(s) for s in J.of_role("velocity")), Expr()) - L
    fiber = {"v_1_0": sym("q_1"), "v_0_1": Expr(), "v_2_0": sym("q_2"), "v_0_2": Expr(), "v_1_2": sym("q_3"), "v_2_1": Expr()}
    got = substitute(E, fiber)
    # p_1_0 = -1/2 q_1, p_2_0 = -1/2 q_2, p_2_1 = -1/2 (v_2_1 - v_1_2) = 1/2 q_3
    want = parse("(1/2*q_3)^2 - (-1/2*q_2)^2 - (-1/2*q_1)^2")
    assert got == want


@settings(max_examples=100, deadline=None)
@given(exprs, exprs, st.integers(0, 10_000))
def test_evaluate_commutes_with_substitute(a, b, seed):
    e, g = parse(a), parse(b)
    rng = np.random.default_rng(seed)
    pt = {n: float(v) for n, v in zip(NAMES, rng.uniform(-1, 1, len(NAMES)))}
    direct = evaluate(substitute(e, {"y_0": g}), pt)
    inner = dict(pt, y_0=evaluate(g, pt))
    via = evaluate(e, inner)
    assert abs(direct - via) <= 1e-9 * (1 + abs(via))


def test_evaluate_rational_exactly():
    assert evaluate(parse("1/3 + 2/3"), {}) == 1.0
    assert evaluate(parse("x_0^2"), {"x_0": 3.0}) == 9.0


def test_evaluate_errors():
    with pytest.raises(UnassignedSymbolError):
        evaluate(parse("x_0 + y_0"), {"x_0": 1.0})
    with pytest.raises(DomainError):
        evaluate(parse("log(x_0)"), {"x_0": -1.0})
    with pytest.raises(DomainError):
        evaluate(parse("x_0^-1"), {"x_0": 0.0})


def test_evaluate_vectorised():
    out = evaluate(parse("x_0^2 + 1"), {"x_0": np.array([0.0, 1.0, 2.0])})
    assert np.allclose(out, [1, 2, 5])


# --------------------------------------------------------------------------
# zero test


def test_is_zero_verdicts():
    assert is_zero(parse("(x_0+1)^2 - x_0^2 - 2*x_0 - 1")).proven_zero
    v = is_zero(parse("sin(x_0)^2 + cos(x_0)^2 - 1"))
    assert v.status == "undecided" and v.likely_zero
    assert is_zero(parse("x_0 - 1/10^20*x_0^2")).status == "proven-nonzero"
    assert is_zero(parse("sin(x_0) - x_0")).status == "proven-nonzero"


def test_is_zero_is_seeded():
    e = parse("sin(x_0)^2 + cos(x_0)^2 - 1")
    assert is_zero(e, seed=3) == is_zero(e, seed=3)


# --------------------------------------------------------------------------
# misc


def test_symbol_names_are_bijective():
    for name in ["x_2", "y_1", "v_1_2", "p_0_1", "q_1_0", "pe"]:
        s = Symbol.from_name(name)
        assert Symbol.from_name(s.name) == s
    assert Symbol.from_name("v_1_2").indices == (1, 2)


def test_latex_rendering():
    assert to_latex(parse("v_1_0^2/2")) == r"\frac{1}{2} (v^{1}_{0})^{2}"
    assert r"\sin" in to_latex(parse("sin(x_0)"))


def test_affine_decomposition():
    v = [Symbol.from_name("v_0_0"), Symbol.from_name("v_0_1")]
    coeffs, const = affine_decomposition(parse("2*v_0_0 - x_0*v_0_1 + y_0"), v)
    assert coeffs == [parse("2"), parse("-x_0")] and const == parse("y_0")
    with pytest.raises(ValueError):
        affine_decomposition(parse("v_0_0^2"), v)
