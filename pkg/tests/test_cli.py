import json
import subprocess
import sys

import pytest

from multisym.cli import main
from multisym.errors import SchemaError
from multisym.theory import fixture_path, load_fixture, spec_from_dict

FIXTURES = ["free_particle", "scalar_field", "em", "mechanics_dims"]


def run(capsys, *argv):
    status = main(list(argv))
    return status, json.loads(capsys.readouterr().out)


@pytest.mark.parametrize("name", FIXTURES)
@pytest.mark.parametrize("command", ["derive", "classify", "verify"])
def test_commands_succeed_on_fixtures(capsys, command, name):
    status, out = run(capsys, command, name)
    assert status == 0
    assert out["command"] == command and out["theory"] == name
    assert all(c["verdict"] != "fail" for c in out.get("checks", []))


def test_output_is_deterministic(capsys):
    _, first = run(capsys, "verify", "em", "--seed", "7")
    _, second = run(capsys, "verify", "em", "--seed", "7")
    assert first == second


def test_derive_em_reports_constraints(capsys):
    _, out = run(capsys, "derive", "em", "--latex")
    assert out["regularity"]["symbolic_rank"] == 3
    assert out["hamiltonian_origin"] == "almost-regular"
    assert out["global_hamiltonian"] == "-p_0_1^2 - p_0_2^2 + p_1_2^2"
    assert len(out["constraints"]["reduced"]["constraints"]) == 6
    assert "theta_L" in out["latex"]


def test_solve_free_particle(capsys, tmp_path):
    target = tmp_path / "report.json"
    status, out = run(capsys, "solve", "free_particle", "--json", str(target))
    assert status == 0
    assert out["action_lagrangian"] == pytest.approx(0.5, abs=1e-9)
    assert json.loads(target.read_text()) == out


def test_solve_grid_override(capsys):
    status, out = run(capsys, "solve", "mechanics_dims", "--grid", "201")
    assert status == 0 and out["grid"]["shape"] == [201]
    assert out["section_errors"]["oscillation"] < 1e-6


def test_solve_without_grid_is_input_error(capsys):
    status, out = run(capsys, "solve", "em")
    assert status == 2
    assert out["error"]["code"] == "error"


def test_missing_file_is_schema_error(capsys, tmp_path):
    status, out = run(capsys, "verify", str(tmp_path / "nope.json"))
    assert status == 2
    assert out["error"]["code"] == "schema-error"


def test_bad_json(capsys, tmp_path):
    p = tmp_path / "bad.theory.json"
    p.write_text("{not json")
    status, out = run(capsys, "derive", str(p))
    assert status == 2 and out["error"]["code"] == "schema-error"


def test_parse_error_exit_code(capsys, tmp_path):
    p = tmp_path / "t.theory.json"
    p.write_text(json.dumps({"m": 1, "N": 1, "lagrangian": "v_0_0^2 + q_7"}))
    status, out = run(capsys, "derive", str(p))
    assert status == 2
    assert "$.lagrangian" in out["error"]["message"]


def test_bad_grid_flag():
    with pytest.raises(SystemExit) as exc:
        main(["solve", "free_particle", "--grid", "ten"])
    assert exc.value.code == 2


@pytest.mark.parametrize(
    "data,path",
    [
        ({"N": 1, "lagrangian": "0"}, "$.m"),
        ({"m": 0, "N": 1, "lagrangian": "0"}, "$.m"),
        ({"m": 1, "N": 1}, "$"),
        ({"m": 1, "N": 1, "lagrangian": "0", "colour": 1}, "$"),
        ({"m": 1, "N": 1, "lagrangian": "0", "connection": ["0", "0"]}, "$.connection"),
        ({"m": 2, "N": 1, "lagrangian": "0", "grid": {"bounds": [[0, 1]], "shape": [3, 3]}}, "$.grid.bounds"),
        ({"m": 1, "N": 1, "lagrangian": "0", "grid": {"bounds": [[0, 1]]}}, "$.grid.shape"),
        ({"m": 1, "N": 1, "lagrangian": "0", "sections": {"s": {}}}, "$.sections.s.y_0"),
        ({"m": 1, "N": 1, "lagrangian": "0", "initial": {"w": ["0"]}}, "$.initial.w"),
    ],
)
def test_schema_errors_name_the_path(data, path):
    with pytest.raises(SchemaError) as exc:
        spec_from_dict(data)
    assert exc.value.path == path


def test_connection_with_velocity_is_rejected(capsys, tmp_path):
    p = tmp_path / "c.theory.json"
    p.write_text(json.dumps({"m": 1, "N": 1, "lagrangian": "1/2*v_0_0^2", "connection": ["v_0_0"]}))
    status, out = run(capsys, "derive", str(p), "--connection", "spec")
    assert status == 2 and "Gamma" in out["error"]["message"]


def test_spec_connection_is_used(capsys, tmp_path):
    p = tmp_path / "c.theory.json"
    p.write_text(json.dumps({"m": 1, "N": 1, "lagrangian": "1/2*v_0_0^2", "connection": ["y_0"]}))
    _, out = run(capsys, "derive", str(p), "--connection", "spec")
    assert out["global_hamiltonian"] == "-y_0*p_0_0 + 1/2*p_0_0^2"
    assert out["hdw_mode"] == "covariant"


def test_hamiltonian_only_theory(capsys, tmp_path):
    p = tmp_path / "h.theory.json"
    p.write_text(json.dumps({"m": 1, "N": 1, "hamiltonian": "1/2*p_0_0^2 + 1/2*y_0^2", "grid": {"bounds": [[0, 1]], "shape": [101]}, "initial": {"y": ["1"], "p0": ["0"]}}))
    status, out = run(capsys, "solve", str(p))
    assert status == 0 and out["hdw_residual"]["max"] < 1e-4
    status, out = run(capsys, "classify", str(p))
    assert status == 0 and out["regularity"] is None


def test_fixtures_resolve():
    assert fixture_path("em").name == "em.theory.json"
    assert fixture_path("nothing") is None
    assert load_fixture("scalar_field").grid.shape == (64, 200)


def test_console_entry_point():
    done = subprocess.run([sys.executable, "-m", "multisym.cli", "classify", "free_particle"], capture_output=True, text=True)
    assert done.returncode == 0
    assert json.loads(done.stdout)["regularity"]["classification"] == "regular"


def test_cfl_violation_exit_code(capsys):
    status, out = run(capsys, "solve", "scalar_field", "--grid", "10x200")
    assert status == 3 and out["error"]["code"] == "cfl-violation"


def test_identity_failure_exit_code(capsys, tmp_path):
    # H is not the Legendre transform of L, so the two evolutions disagree
    p = tmp_path / "x.theory.json"
    p.write_text(json.dumps({
        "m": 1, "N": 1, "lagrangian": "1/2*v_0_0^2", "hamiltonian": "p_0_0^2",
        "grid": {"bounds": [[0, 1]], "shape": [51]},
        "initial": {"y": ["0"], "v0": ["1"], "p0": ["1"]},
    }))
    status, out = run(capsys, "solve", str(p))
    assert status == 1
    assert out["checks"][0]["verdict"] == "fail"
