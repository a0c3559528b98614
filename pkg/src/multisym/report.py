"""Command execution: derive, classify, verify and solve reports."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .charts import canonical_form, compose, make_connection
from .errors import MultisymError, NotInvertibleError, ScopeError
from .expr import Expr, differentiate, is_zero, parse, to_latex
from .fieldsolve import (
    Grid,
    action_integral,
    legendre_prolong,
    matched_momentum,
    residual_norm,
    sample_section,
    solve_evolution,
)
from .forms import DiffForm, exterior_derivative, form_to_latex, pullback, volume
from .hamiltonian import (
    HamiltonianSystem,
    compose_density,
    connection_section_form,
    from_hyperregular,
    hamilton_cartan,
    hdw_residual,
    mu_section_map,
    psi_transfer,
    restrict_almost_regular,
)
from .lagrangian import (
    LagrangianSystem,
    SectionExpr,
    classify_regularity,
    energy_density,
    euler_lagrange_residual,
    hessian,
    momenta,
    momenta_flat,
    poincare_cartan,
    theta_small,
)
from .legendre import MAP_TARGETS, check_projection_compat, image_constraints, legendre_map
from .theory import TheorySpec

COMMANDS = ("derive", "classify", "verify", "solve")


@dataclass
class Options:
    samples: int = 64
    tol: float | None = None
    connection: str = "trivial"
    latex: bool = False
    grid: tuple | None = None
    seed: int = 0

    def sym_tol(self) -> float:
        return self.tol if self.tol is not None else 1e-10

    def pde_tol(self) -> float:
        return self.tol if self.tol is not None else 1e-3


@dataclass
class Check:
    name: str
    verdict: str  # proven | sampled-pass | fail
    evidence: str = ""

    def as_dict(self):
        return {"name": self.name, "verdict": self.verdict, "evidence": self.evidence}


@dataclass
class Report:
    command: str
    theory: str
    body: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    exit_status: int = 0

    def as_dict(self) -> dict:
        out = {"command": self.command, "theory": self.theory}
        out.update(self.body)
        if self.command == "verify" or self.checks:
            out["checks"] = [c.as_dict() for c in self.checks]
        out["exit_status"] = self.exit_status
        return out


# --------------------------------------------------------------------------
# helpers


def _connection(spec: TheorySpec, opts: Options):
    if opts.connection == "spec" and spec.connection is not None:
        return spec.connection
    return make_connection(spec.bundle)


def _form_check(name: str, diff: DiffForm, opts: Options) -> Check:
    v = diff.zero_verdict(opts.samples, opts.seed)
    return _verdict(name, v, opts)


def _expr_check(name: str, diff: Expr, opts: Options) -> Check:
    return _verdict(name, is_zero(diff, opts.samples, opts.seed), opts)


def _verdict(name, v, opts: Options) -> Check:
    if v.status == "proven-zero":
        return Check(name, "proven", "normal form is zero")
    if v.status == "undecided" and v.samples > 0 and v.max_abs <= opts.sym_tol():
        return Check(name, "sampled-pass", f"{v.samples} samples, max |value| {v.max_abs:.3e}")
    return Check(name, "fail", f"{v.status}, max |value| {v.max_abs:.3e} over {v.samples} samples")


def _bool_check(name: str, ok: bool, evidence: str = "") -> Check:
    return Check(name, "proven" if ok else "fail", evidence or ("exact equality" if ok else "mismatch"))


def _numeric_check(name: str, value: float, tol: float) -> Check:
    ok = bool(np.isfinite(value) and value <= tol)
    return Check(name, "sampled-pass" if ok else "fail", f"{value:.3e} (tolerance {tol:.1e})")


def _lagrangian(spec: TheorySpec) -> LagrangianSystem | None:
    if spec.lagrangian is None:
        return None
    return LagrangianSystem(spec.bundle, spec.lagrangian, spec.name)


def _hamiltonian(spec: TheorySpec, conn) -> tuple:
    """Best available Hamiltonian system and how it was obtained."""
    sys = _lagrangian(spec)
    if spec.hamiltonian is not None:
        h = spec.hamiltonian
        if conn is not None and not conn.is_trivial:
            from .hamiltonian import pairing

            return HamiltonianSystem(spec.bundle, h, "Pi", conn, h - pairing(spec.bundle.chart("Pi"), conn)), "spec"
        return HamiltonianSystem(spec.bundle, h, "Pi"), "spec"
    if sys is None:
        return None, "none"
    try:
        return from_hyperregular(sys, conn), "hyperregular"
    except (NotInvertibleError, ScopeError):
        pass
    try:
        return restrict_almost_regular(sys, conn), "almost-regular"
    except (ScopeError, NotInvertibleError):
        return None, "unavailable"


def _strs(rows):
    return [[str(e) for e in row] for row in rows]


# --------------------------------------------------------------------------
# derive


def derive(spec: TheorySpec, opts: Options) -> Report:
    rep = Report("derive", spec.name)
    body = rep.body
    body["bundle"] = {"m": spec.m, "N": spec.N, "dims": {k: c.dim for k, c in spec.bundle.charts.items()}}
    body["conventions"] = {
        "flat_index": "nu*N + A",
        "momentum": "p_A_nu = dL/dv_A_nu",
        "generalized": "q_eta_nu, eta outer",
    }
    conn = _connection(spec, opts)
    sys = _lagrangian(spec)
    if sys is not None:
        body["lagrangian"] = str(sys.L)
        body["momenta"] = _strs(momenta(sys))
        body["hessian"] = _strs(hessian(sys))
        reg = classify_regularity(sys, samples=min(opts.samples, 32), seed=opts.seed)
        body["regularity"] = reg.as_dict()
        body["energy_density"] = str(energy_density(sys, conn))
        body["legendre_maps"] = {
            k: {s.name: str(e) for s, e in zip(legendre_map(sys, k).target.symbols, legendre_map(sys, k).images) if s.role not in ("base", "field")}
            for k in MAP_TARGETS
        }
        try:
            body["constraints"] = {k: image_constraints(sys, k).as_dict() for k in ("reduced", "extended_tilde", "extended_hat", "generalized")}
        except ScopeError as exc:
            body["constraints"] = {"error": str(exc)}
        body["euler_lagrange"] = [
            f"{differentiate(sys.L, f'y_{a}')} - " + " - ".join(f"D_{nu}({momenta(sys)[a][nu]})" for nu in range(sys.m)) + " = 0"
            for a in range(sys.N)
        ]
        theta, omega = poincare_cartan(sys)
        body["poincare_cartan"] = {"theta": repr(theta), "omega": repr(omega)}
        if opts.latex:
            body["latex"] = {
                "lagrangian": to_latex(sys.L),
                "theta_L": form_to_latex(theta),
                "omega_L": form_to_latex(omega),
            }
    h, origin = _hamiltonian(spec, conn)
    body["hamiltonian_origin"] = origin
    if h is not None:
        body["hamiltonian"] = str(h.H)
        if h.H_nabla is not None:
            body["global_hamiltonian"] = str(h.H_nabla)
        mode = "covariant" if h.connection is not None and not h.connection.is_trivial and h.H_nabla is not None else "local"
        body["hdw_mode"] = mode
        body["hdw_equations"] = hdw_residual(h, mode).describe()
        if opts.latex:
            theta_h, omega_h = hamilton_cartan(h)
            body.setdefault("latex", {})["theta_h"] = form_to_latex(theta_h)
            body["latex"]["omega_h"] = form_to_latex(omega_h)
    return rep


# --------------------------------------------------------------------------
# classify


def classify(spec: TheorySpec, opts: Options) -> Report:
    rep = Report("classify", spec.name)
    sys = _lagrangian(spec)
    if sys is None:
        rep.body["regularity"] = None
        rep.body["note"] = "no Lagrangian given"
        return rep
    reg = classify_regularity(sys, samples=opts.samples, seed=opts.seed)
    rep.body["regularity"] = reg.as_dict()
    if spec.flags.get("hyperregular"):
        rep.body["hyperregular_assertion"] = "accepted from spec flag"
    return rep


# --------------------------------------------------------------------------
# verify


def _random_connection(bundle, rng) -> list:
    out = []
    monos = ["1", "x_0", "y_0", "x_0*y_0", "y_0^2"]
    if bundle.N > 1:
        monos.append(f"y_{bundle.N - 1}")
    for _ in range(bundle.m * bundle.N):
        coeffs = rng.integers(-3, 4, size=len(monos))
        text = " + ".join(f"({c})*{mono}" for c, mono in zip(coeffs, monos))
        out.append(parse(text))
    return out


def lagrangian_checks(sys: LagrangianSystem, conn, opts: Options, n_random: int = 3) -> list:
    b = sys.bundle
    checks = []
    H = hessian(sys)
    n = len(H)
    sym = all(H[i][j] == H[j][i] for i in range(n) for j in range(n))
    checks.append(_bool_check("hessian symmetric", sym))
    jac = [[differentiate(P, s) for s in sys.velocity_symbols()] for P in momenta_flat(sys)]
    checks.append(_bool_check("hessian = jacobian of momenta", jac == H))
    theta_L, omega_L = poincare_cartan(sys)
    vol = tuple(range(b.m))
    checks.append(_expr_check("theta_L volume coefficient = -E_L", theta_L.coefficient(vol) + energy_density(sys), opts))
    for c in check_projection_compat(sys):
        checks.append(_bool_check(c.name, c.passed, "" if c.passed else f"first difference at {c.first_difference}"))
    theta_mpi = canonical_form(b, "MPi")
    theta_hat = canonical_form(b, "J1Estar")
    small = theta_small(sys)
    checks.append(_form_check("extended_tilde* Theta = Theta_L", pullback(legendre_map(sys, "extended_tilde"), theta_mpi) - theta_L, opts))
    checks.append(_form_check("extended_hat* Theta = theta_L", pullback(legendre_map(sys, "extended_hat"), theta_mpi) - small, opts))
    checks.append(_form_check("generalized* Theta_hat = theta_L", pullback(legendre_map(sys, "generalized"), theta_hat) - small, opts))
    checks.append(
        _form_check(
            "extended_tilde* Omega = Omega_L",
            pullback(legendre_map(sys, "extended_tilde"), -exterior_derivative(theta_mpi)) - omega_L,
            opts,
        )
    )
    rng = np.random.default_rng(opts.seed)
    conns = [conn] + [make_connection(b, _random_connection(b, rng)) for _ in range(n_random)]
    for i, G in enumerate(conns):
        lhs = pullback(legendre_map(sys, "reduced"), connection_section_form(b, G)) - theta_L
        label = "given" if i == 0 else f"random #{i}"
        checks.append(_form_check(f"FL* Theta_connection - Theta_L = E_L d^m x ({label} connection)", lhs - volume(sys.chart, energy_density(sys, G)), opts))
    try:
        cset = image_constraints(sys, "reduced")
    except ScopeError:
        cset = None
    if cset is not None:
        from .legendre import affine_momenta
        from .linalg import nullspace

        kernel = len(nullspace(affine_momenta(sys).M))
        checks.append(_bool_check("hessian kernel dimension = linear constraint count", kernel == len(cset), f"kernel {kernel}, constraints {len(cset)}"))
        for kind in ("reduced", "extended_tilde", "extended_hat", "generalized"):
            cs = image_constraints(sys, kind)
            F = legendre_map(sys, kind)
            ok = all(F.pull(c).is_zero_poly() for c in cs.constraints)
            checks.append(_bool_check(f"{kind} constraints vanish on the image", ok))
    return checks


def hamiltonian_checks(sys: LagrangianSystem | None, h: HamiltonianSystem, origin: str, opts: Options) -> list:
    b = h.bundle
    checks = []
    theta_h, omega_h = hamilton_cartan(h)
    if sys is not None and origin == "hyperregular":
        F = legendre_map(sys, "reduced")
        theta_L, omega_L = poincare_cartan(sys)
        checks.append(_form_check("FL* Theta_h = Theta_L", pullback(F, theta_h) - theta_L, opts))
        checks.append(_form_check("FL* Omega_h = Omega_L", pullback(F, omega_h) - omega_L, opts))
        if h.H_nabla is not None:
            checks.append(_expr_check("FL* H_nabla = E_L (connection)", F.pull(h.H_nabla) - energy_density(sys, h.connection), opts))
        hr = psi_transfer(h)
        restricted = legendre_map(sys, "restricted")
        tilde = legendre_map(sys, "extended_tilde")
        checks.append(_bool_check("mu-section of restricted map = extended_tilde", compose(mu_section_map(hr), restricted).images == tilde.images))
    if sys is not None and origin == "almost-regular":
        F = legendre_map(sys, "reduced")
        checks.append(_expr_check("FL0* H0_nabla = E_L (connection)", F.pull(h.H_nabla) - energy_density(sys, h.connection), opts))
    moved = psi_transfer(h)
    t2, _ = hamilton_cartan(moved)
    same = {k: v for k, v in theta_h.terms.items()} == {k: v for k, v in t2.terms.items()}
    checks.append(_bool_check("psi transfer keeps Theta_h coefficients", same))
    checks.append(_bool_check("psi transfer round trip", psi_transfer(moved) == h))
    if h.connection is not None and h.H_nabla is not None:
        local = hdw_residual(h, "local")
        cov = hdw_residual(h, "covariant")
        checks.append(_bool_check("covariant HDW = local HDW", cov.same_as(local)))
        split = hamilton_cartan(compose_density(h.connection, h.H_nabla))[0]
        rhs = connection_section_form(b, h.connection) - volume(h.chart, h.H_nabla)
        checks.append(_bool_check("Theta_h = Theta_connection - H_nabla d^m x", split == rhs))
    return checks


def section_checks(spec: TheorySpec, sys, h, origin, opts: Options) -> tuple:
    checks, numeric = [], {}
    if sys is None:
        return checks, numeric
    for name, comps in spec.sections.items():
        phi = SectionExpr(spec.bundle, tuple(comps[f"y_{a}"] for a in range(spec.N)))
        el = euler_lagrange_residual(sys, phi)
        verdicts = [is_zero(r, opts.samples, opts.seed).status for r in el]
        numeric[f"euler_lagrange_{name}"] = {"residuals": [str(r) for r in el], "zero_test": verdicts}
        if h is not None and origin == "hyperregular" and spec.grid is not None:
            images = {}
            F = legendre_map(sys, "reduced")
            assign = phi.jet_assignment()
            for s, img in zip(F.target.symbols, F.images):
                if s.role in ("field", "momentum"):
                    images[s.name] = img.subs(assign) if s.role == "momentum" else comps[s.name]
            grid = spec.grid
            a_l = action_integral("lagrangian", sys, comps, grid)
            a_h = action_integral("hamiltonian", h, images, grid)
            numeric[f"action_{name}"] = {"lagrangian": a_l, "hamiltonian": a_h}
            checks.append(_numeric_check(f"action equality along {name}", abs(a_l - a_h), max(opts.sym_tol(), 1e-6) if spec.m == 1 else opts.pde_tol()))
    return checks, numeric


def verify(spec: TheorySpec, opts: Options) -> Report:
    rep = Report("verify", spec.name)
    conn = _connection(spec, opts)
    sys = _lagrangian(spec)
    if sys is not None:
        rep.checks += lagrangian_checks(sys, conn, opts)
    h, origin = _hamiltonian(spec, conn)
    rep.body["hamiltonian_origin"] = origin
    if h is not None:
        rep.checks += hamiltonian_checks(sys, h, origin, opts)
    sc, numeric = section_checks(spec, sys, h, origin, opts)
    rep.checks += sc
    rep.body["numeric"] = numeric
    if any(c.verdict == "fail" for c in rep.checks):
        rep.exit_status = 1
    return rep


# --------------------------------------------------------------------------
# solve


def solve(spec: TheorySpec, opts: Options) -> Report:
    rep = Report("solve", spec.name)
    if spec.grid is None:
        raise MultisymError("solve needs a grid in the theory spec")
    grid = spec.grid
    if opts.grid is not None:
        if len(opts.grid) != spec.m:
            raise MultisymError(f"--grid needs {spec.m} sizes")
        grid = Grid(grid.bounds, opts.grid, grid.periodic)
    if "y" not in spec.initial:
        raise MultisymError("solve needs initial data y")
    conn = _connection(spec, opts)
    sys = _lagrangian(spec)
    h, origin = _hamiltonian(spec, conn)
    body = rep.body
    body["grid"] = {"bounds": [list(b) for b in grid.bounds], "shape": list(grid.shape), "periodic": list(grid.periodic)}
    tol = opts.pde_tol()
    el_sec = hdw_sec = None
    if sys is not None and "v0" in spec.initial:
        el_sec = solve_evolution(sys, {"y": spec.initial["y"], "v0": spec.initial["v0"]}, grid)
        body["el_residual"] = residual_norm(sys, el_sec).as_dict()
        body["action_lagrangian"] = action_integral("lagrangian", sys, el_sec)
    if h is not None and (origin in ("hyperregular", "spec")):
        p0 = spec.initial.get("p0")
        if p0 is None and sys is not None and "v0" in spec.initial:
            p0 = matched_momentum(sys, spec.initial["y"], spec.initial["v0"])
        if p0 is not None:
            hdw_sec = solve_evolution(h, {"y": spec.initial["y"], "p0": p0}, grid)
            op = hdw_residual(h)
            body["hdw_residual"] = residual_norm(op, hdw_sec).as_dict()
            body["action_hamiltonian"] = action_integral("hamiltonian", h, hdw_sec)
    if el_sec is not None and hdw_sec is not None:
        diff = max(float(np.max(np.abs(el_sec.values[f"y_{a}"] - hdw_sec.values[f"y_{a}"]))) for a in range(spec.N))
        body["max_field_difference"] = diff
        rep.checks.append(_numeric_check("EL and HDW evolutions agree", diff, tol))
        if sys is not None and origin == "hyperregular":
            lp = legendre_prolong(sys, el_sec)
            a_l = action_integral("lagrangian", sys, el_sec)
            a_h = action_integral("hamiltonian", h, lp)
            body["action_difference"] = abs(a_l - a_h)
            rep.checks.append(_numeric_check("action equality along the EL solution", abs(a_l - a_h), tol))
    for name, comps in spec.sections.items():
        ref = el_sec or hdw_sec
        if ref is None:
            break
        exact = sample_section(spec.bundle, "E", grid, comps)
        err = max(float(np.max(np.abs(ref.values[f"y_{a}"] - exact.values[f"y_{a}"]))) for a in range(spec.N))
        body.setdefault("section_errors", {})[name] = err
    if el_sec is None and hdw_sec is None:
        raise MultisymError("nothing to solve: give v0 (Lagrangian) or p0 (Hamiltonian) initial data")
    if any(c.verdict == "fail" for c in rep.checks):
        rep.exit_status = 1
    return rep


def execute(command: str, spec: TheorySpec, opts: Options | None = None) -> Report:
    opts = opts or Options()
    if command not in COMMANDS:
        raise MultisymError(f"unknown command {command!r}")
    return {"derive": derive, "classify": classify, "verify": verify, "solve": solve}[command](spec, opts)
