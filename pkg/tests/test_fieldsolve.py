import math

import numpy as np
import pytest

from conftest import system
from multisym.errors import ChartMismatchError, CFLError, DimensionError, NotInvertibleError, ScopeError
from multisym.expr import parse
from multisym.fieldsolve import (
    Grid,
    GridSection,
    action_integral,
    contraction_norm,
    energy_series,
    interior,
    legendre_prolong,
    matched_momentum,
    partial,
    prolong,
    residual_norm,
    sample_section,
    solve_evolution,
)
from multisym.hamiltonian import NumericHamiltonian, from_hyperregular, hdw_residual


def wave_residual(scalar, n):
    grid = Grid([[0, 1], [0, 2]], (n, n))
    phi = sample_section(scalar.bundle, "E", grid, {"y_0": parse("sin(x_1 - x_0)")})
    op = hdw_residual(from_hyperregular(scalar))
    return residual_norm(op, legendre_prolong(scalar, phi)).max


def test_grid_geometry():
    g = Grid([[0, 1], [0, 2 * math.pi]], (11, 9), (False, True))
    assert g.h == pytest.approx((0.1, 2 * math.pi / 8))
    assert g.coords()["x_1"].shape == (11, 9)
    with pytest.raises(DimensionError):
        Grid([[0, 1]], (1,))
    with pytest.raises(DimensionError):
        Grid([[1, 0]], (5,))
    with pytest.raises(DimensionError):
        Grid([[0, 1], [0, 1]], (5,))


def test_partial_is_second_order():
    errs = []
    for n in (41, 81):
        g = Grid([[0, 1]], (n,))
        x = g.axis(0)
        errs.append(np.max(np.abs(partial(np.sin(3 * x), g, 0) - 3 * np.cos(3 * x))))
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_periodic_partial():
    g = Grid([[0, 2 * math.pi]], (65,), (True,))
    x = g.axis(0)
    d = partial(np.sin(x), g, 0)
    assert np.max(np.abs(d - np.cos(x))) < 2e-3
    assert d[0] == d[-1]


def test_interior_trims_open_axes_only():
    g = Grid([[0, 1], [0, 1]], (10, 6), (False, True))
    assert interior(np.zeros(g.shape), g).shape == (6, 5)


def test_grid_section_validation_and_json(scalar):
    g = Grid([[0, 1], [0, 1]], (5, 4))
    sec = sample_section(scalar.bundle, "E", g, {"y_0": parse("x_0*x_1")})
    again = GridSection.from_json(scalar.bundle, sec.to_json())
    assert np.array_equal(again.values["y_0"], sec.values["y_0"])
    with pytest.raises(DimensionError):
        GridSection(sec.chart, g, {"y_0": np.zeros((3, 3))})
    with pytest.raises(DimensionError):
        GridSection(scalar.bundle.chart("Pi"), g, {"y_0": np.zeros(g.shape)})


def test_prolong_needs_section_of_e(scalar):
    g = Grid([[0, 1], [0, 1]], (5, 5))
    sec = sample_section(scalar.bundle, "E", g, {"y_0": parse("x_0 + 2*x_1")})
    jet = prolong(sec)
    assert np.allclose(jet.values["v_0_1"], 2.0)
    with pytest.raises(ChartMismatchError):
        prolong(legendre_prolong(scalar, sec))


def test_wave_residual_converges_at_second_order(scalar):
    r = [wave_residual(scalar, n) for n in (21, 41, 81)]
    assert 3 <= r[0] / r[1] <= 5 and 3 <= r[1] / r[2] <= 5


def test_el_residual_of_exact_wave(scalar):
    g = Grid([[0, 1], [0, 2]], (41, 41))
    phi = sample_section(scalar.bundle, "E", g, {"y_0": parse("sin(x_1 - x_0)")})
    assert residual_norm(scalar, phi).max < 5e-3
    with pytest.raises(ChartMismatchError):
        residual_norm(scalar, legendre_prolong(scalar, phi))


def test_free_particle_actions(particle):
    h = from_hyperregular(particle)
    g = Grid([[0, 1]], (101,))
    assert action_integral("lagrangian", particle, {"y_0": parse("x_0")}, g) == pytest.approx(0.5, abs=1e-12)
    sec = {"y_0": parse("x_0"), "p_0_0": parse("1")}
    assert action_integral("hamiltonian", h, sec, g) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        action_integral("kinetic", particle, sec, g)
    with pytest.raises(DimensionError):
        action_integral("lagrangian", particle, {"y_0": parse("x_0")})


def test_free_particle_evolution(particle):
    g = Grid([[0, 1]], (101,))
    el = solve_evolution(particle, {"y": [parse("0")], "v0": [parse("1")]}, g)
    h = from_hyperregular(particle)
    hd = solve_evolution(h, {"y": [parse("0")], "p0": [parse("1")]}, g)
    assert el.values["y_0"][-1] == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(el.values["y_0"], hd.values["y_0"])


def test_oscillator_energy_is_conserved():
    sys = system("1/2*(v_0_0^2 + v_1_0^2) - 1/2*(y_0^2 + 4*y_1^2)", 1, 2)
    h = from_hyperregular(sys)
    g = Grid([[0, 10]], (2001,))
    sec = solve_evolution(h, {"y": [parse("1"), parse("0")], "p0": [parse("0"), parse("1")]}, g)
    E = energy_series(h, sec)
    assert np.max(np.abs(E - E[0])) < 1e-8
    assert np.max(np.abs(sec.values["y_0"] - np.cos(g.axis(0)))) < 1e-8
    assert residual_norm(hdw_residual(h), sec).max < 1e-4


def test_numeric_hamiltonian_evolution():
    # L = cosh(v): v is constant along solutions
    sys = system("cosh(v_0_0)", 1, 1)
    nh = NumericHamiltonian(sys)
    g = Grid([[0, 1]], (21,))
    sec = solve_evolution(nh, {"y": [parse("0")], "p0": [parse(str(math.sinh(0.5)))]}, g)
    assert np.allclose(sec.values["y_0"], 0.5 * g.axis(0), atol=1e-9)


def test_wave_evolution_el_vs_hdw(scalar, scalar_spec):
    g = Grid([[0, 0.3], [0, 2 * math.pi]], (31, 80), (False, True))
    y0, v0 = scalar_spec.initial["y"], scalar_spec.initial["v0"]
    el = solve_evolution(scalar, {"y": y0, "v0": v0}, g)
    hd = solve_evolution(from_hyperregular(scalar), {"y": y0, "p0": matched_momentum(scalar, y0, v0)}, g)
    assert np.max(np.abs(el.values["y_0"] - hd.values["y_0"])) < 1e-10
    exact = sample_section(scalar.bundle, "E", g, {"y_0": parse("sin(x_1 - x_0)")})
    assert np.max(np.abs(el.values["y_0"] - exact.values["y_0"])) < 1e-2
    assert set(hd.values) == {"y_0", "p_0_0", "p_0_1"}


def test_evolution_guards(scalar, em):
    h = from_hyperregular(scalar)
    ini = {"y": [parse("sin(x_1)")], "p0": [parse("0")]}
    with pytest.raises(CFLError):
        solve_evolution(h, ini, Grid([[0, 1], [0, 1]], (11, 41), (False, True)))
    with pytest.raises(ScopeError):
        solve_evolution(h, ini, Grid([[0, 1], [0, 1]], (81, 11)))
    with pytest.raises(ScopeError):
        solve_evolution(em, {"y": [parse("0")] * 3, "v0": [parse("0")] * 3}, Grid([[0, 1]] * 3, (3, 3, 3)))
    singular = system("1/2*(v_0_0 - v_1_0)^2", 1, 2)
    with pytest.raises(NotInvertibleError):
        solve_evolution(singular, {"y": [parse("0")] * 2, "v0": [parse("0")] * 2}, Grid([[0, 1]], (5,)))
    with pytest.raises(DimensionError):
        solve_evolution(h, {"y": [parse("0")]}, Grid([[0, 0.1], [0, 1]], (3, 11), (False, True)))


def test_contraction_small_on_solution_large_off(scalar):
    g = Grid([[0, 1], [0, 2]], (41, 41))
    phi = sample_section(scalar.bundle, "E", g, {"y_0": parse("sin(x_1 - x_0)")})
    sec = legendre_prolong(scalar, phi)
    h = from_hyperregular(scalar)
    on = contraction_norm(h, [parse("1 + y_0")], sec).max
    off = sec.with_values(dict(sec.values, p_0_0=sec.values["p_0_0"] + 0.1 * np.sin(3 * g.coords()["x_0"])))
    assert contraction_norm(h, [parse("1 + y_0")], off).max > 100 * on
