import pytest

from multisym.charts import (
    CHART_KINDS,
    CoordinateMap,
    canonical_form,
    compose,
    first_difference,
    identity_map,
    make_bundle,
    make_connection,
    projection_map,
)
from multisym.errors import ChartMismatchError, DimensionError, InvalidConnectionError
from multisym.expr import parse
from multisym.forms import pullback


def expected_dims(m, N):
    # counted directly: base + fields + fiber
    return {
        "E": m + N,
        "J1E": m + N + m * N,
        "J1Estar": m + N + m * m + m * N,
        "Pi": m + N + m * N,
        "MPi": m + N + 1 + m * N,
        "J1PiStar": m + N + m * N,
    }


@pytest.mark.parametrize("m", range(1, 5))
@pytest.mark.parametrize("N", range(1, 5))
def test_chart_dimensions(m, N):
    b = make_bundle(m, N)
    for kind, dim in expected_dims(m, N).items():
        assert b.chart(kind).dim == dim


@pytest.mark.parametrize("N", [1, 2, 3])
def test_mechanics_dimensions(N):
    b = make_bundle(1, N)
    assert b.chart("J1Estar").dim == 2 * N + 2
    assert b.chart("Pi").dim == 2 * N + 1
    assert b.chart("MPi").dim == 2 * N + 2
    assert b.chart("J1PiStar").dim == 2 * N + 1


def test_chart_ordering_and_names():
    c = make_bundle(2, 3).chart("J1E")
    names = [s.name for s in c]
    assert names[:5] == ["x_0", "x_1", "y_0", "y_1", "y_2"]
    # nu outer, A inner
    assert names[5:8] == ["v_0_0", "v_1_0", "v_2_0"]
    assert make_bundle(2, 3).flat(2, 1) == 5
    assert make_bundle(2, 3).unflat(5) == (2, 1)
    q = [s.name for s in make_bundle(2, 1).chart("J1Estar").of_role("generalized")]
    assert q == ["q_0_0", "q_0_1", "q_1_0", "q_1_1"]


@pytest.mark.parametrize("bad", [0, -1, 1.5, True])
def test_bundle_validation(bad):
    with pytest.raises(DimensionError):
        make_bundle(bad, 1)


def test_unknown_chart_kind():
    with pytest.raises(ChartMismatchError):
        make_bundle(1, 1).chart("TE")
    assert make_bundle(2, 1).chart("M").dim == 2


@pytest.mark.parametrize("m,N", [(1, 1), (2, 1), (3, 3), (2, 4)])
def test_projection_diagram_commutes(m, N):
    b = make_bundle(m, N)
    # Ψ ∘ μ ∘ ι0 = δ
    lhs = projection_map(b, "iota0").then(projection_map(b, "mu")).then(projection_map(b, "psi"))
    assert first_difference(lhs, projection_map(b, "delta")) is None
    loop = compose(projection_map(b, "psi_inv"), projection_map(b, "psi"))
    assert loop.images == identity_map(b.chart("J1PiStar")).images


def test_iota0_pulls_canonical_forms():
    b = make_bundle(2, 2)
    got = pullback(projection_map(b, "iota0"), canonical_form(b, "MPi"))
    assert got == canonical_form(b, "J1Estar")


def test_compose_checks_charts():
    b = make_bundle(1, 1)
    with pytest.raises(ChartMismatchError):
        compose(projection_map(b, "delta"), projection_map(b, "delta"))


def test_coordinate_map_validation():
    b = make_bundle(1, 1)
    E, J = b.chart("E"), b.chart("J1E")
    with pytest.raises(DimensionError):
        CoordinateMap(E, J, (parse("x_0"),))
    with pytest.raises(ChartMismatchError):
        CoordinateMap.from_dict(E, J, {"v_0_0": parse("p_0_0")})
    with pytest.raises(DimensionError):
        CoordinateMap.from_dict(E, J, {})


def test_first_difference_names_coordinate():
    b = make_bundle(1, 2)
    f = projection_map(b, "delta")
    images = list(f.images)
    images[-1] = images[-1] + 1
    g = CoordinateMap(f.source, f.target, tuple(images))
    assert first_difference(f, g) == "p_1_0"


def test_canonical_form_kinds():
    b = make_bundle(1, 1)
    with pytest.raises(ChartMismatchError):
        canonical_form(b, "Pi")


def test_connections():
    b = make_bundle(2, 1)
    assert make_connection(b).is_trivial
    G = make_connection(b, [parse("x_0*y_0"), parse("1")])
    assert G.gamma(0, 1) == parse("1")
    with pytest.raises(InvalidConnectionError):
        make_connection(b, [parse("v_0_0"), parse("0")])
    with pytest.raises(InvalidConnectionError):
        make_connection(b, [parse("y_3"), parse("0")])
    with pytest.raises(DimensionError):
        make_connection(b, [parse("1")])


def test_all_kinds_listed():
    assert set(CHART_KINDS) == set(expected_dims(1, 1))
