import pytest
from hypothesis import given, settings, strategies as st

from conftest import system
from em_data import HESSIAN, MOMENTA
from multisym.charts import make_bundle, make_connection
from multisym.errors import ChartMismatchError
from multisym.expr import evaluate, parse
from multisym.forms import volume
from multisym.lagrangian import (
    SectionExpr,
    classify_regularity,
    energy_density,
    euler_lagrange_residual,
    hessian,
    momenta,
    poincare_cartan,
    theta_small,
)


def test_em_momenta_match_table(em):
    P = momenta(em)
    for (a, nu), text in MOMENTA.items():
        assert P[a][nu] == parse(text, em.chart), (a, nu)


def test_em_hessian_matches_printed_matrix(em):
    H = hessian(em)
    assert [[h.constant_value() for h in row] for row in H] == HESSIAN


def test_em_is_singular_rank_3(em):
    rep = classify_regularity(em)
    assert rep.classification == "singular"
    assert rep.symbolic_rank == 3
    assert set(rep.sampled_ranks) == {3}


def test_scalar_field_is_regular(scalar):
    rep = classify_regularity(scalar)
    assert rep.classification == "regular" and rep.hyperregular_certified


def test_classify_nonconstant_hessian():
    sys = system("cosh(v_0_0)", 1, 1)
    rep = classify_regularity(sys)
    assert rep.classification == "regular"
    assert rep.symbolic_rank is None and not rep.hyperregular_certified


def test_classify_rank_drop_is_indeterminate():
    # Hessian 6 v vanishes only at v = 0
    sys = system("v_0_0^3", 1, 1)
    rep = classify_regularity(sys, points=[{"v_0_0": 0.0}, {"v_0_0": 1.0}])
    assert rep.classification == "indeterminate"


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(-3, 3), st.sampled_from(["v_0_0", "v_1_0", "v_0_1", "v_1_1", "y_0", "x_0"])), min_size=2, max_size=8))
def test_hessian_is_symmetric(terms):
    L = " + ".join(f"({c})*{a}*{b}*{b}" for (c, a), b in zip(terms, ["v_0_0", "v_1_1", "v_0_1", "v_1_0"] * 2))
    sys = system(L, 2, 2)
    H = hessian(sys)
    n = len(H)
    assert all(H[i][j] == H[j][i] for i in range(n) for j in range(n))


def test_energy_density_free_particle(particle):
    assert energy_density(particle) == parse("1/2*v_0_0^2", particle.chart)
    G = make_connection(particle.bundle, [parse("y_0")])
    assert energy_density(particle, G) == parse("1/2*v_0_0^2 - v_0_0*y_0", particle.chart)


def test_poincare_cartan_volume_coefficient(scalar):
    theta, omega = poincare_cartan(scalar)
    assert theta.coefficient((0, 1)) == -energy_density(scalar)
    assert omega.degree == scalar.m + 1
    assert (theta_small(scalar) - theta + volume(scalar.chart, scalar.L)).is_zero_poly()


def test_euler_lagrange_on_travelling_wave(scalar):
    phi = SectionExpr(scalar.bundle, (parse("sin(x_1 - x_0)"),))
    (r,) = euler_lagrange_residual(scalar, phi)
    assert r.is_zero_poly()
    bad = SectionExpr(scalar.bundle, (parse("x_0^2"),))
    assert euler_lagrange_residual(scalar, bad)[0] == parse("-2")


def test_euler_lagrange_oscillator():
    sys = system("1/2*v_0_0^2 - 1/2*y_0^2", 1, 1)
    phi = SectionExpr(sys.bundle, (parse("cos(x_0)"),))
    (r,) = euler_lagrange_residual(sys, phi)
    assert abs(evaluate(r, {"x_0": 0.3})) < 1e-14


def test_section_rejects_non_base_symbols():
    with pytest.raises(ChartMismatchError):
        SectionExpr(make_bundle(1, 1), (parse("y_0"),))
