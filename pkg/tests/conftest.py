import pytest
import sympy

from multisym.charts import make_bundle
from multisym.expr import parse, to_string
from multisym.lagrangian import LagrangianSystem
from multisym.theory import load_fixture

EM_L = "1/4*((v_1_2 - v_2_1)^2 - (v_2_0 - v_0_2)^2 - (v_1_0 - v_0_1)^2)"


def to_sympy(e):
    """Independent oracle: hand the printed form to sympy."""
    text = to_string(e).replace("^", "**")
    return sympy.sympify(text)


def system(L, m, N, name="test"):
    b = make_bundle(m, N)
    return LagrangianSystem(b, parse(L, b.chart("J1E")), name)


@pytest.fixture(scope="session")
def em():
    return system(EM_L, 3, 3, "em")


@pytest.fixture(scope="session")
def scalar():
    return system("1/2*(v_0_0^2 - v_0_1^2)", 2, 1, "scalar")


@pytest.fixture(scope="session")
def particle():
    return system("1/2*v_0_0^2", 1, 1, "particle")


@pytest.fixture(scope="session")
def scalar_spec():
    return load_fixture("scalar_field")
