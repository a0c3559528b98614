"""Grid sections, finite-difference residuals, evolution solvers and actions.

Grids include both endpoints of every axis, so ``h = (b - a) / (n - 1)``.
On a periodic axis the last sample duplicates the first one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .charts import Chart, CoordinateMap
from .errors import CFLError, ChartMismatchError, ConvergenceError, DimensionError, NotInvertibleError, ScopeError
from .expr import Expr, as_expr, differentiate, evaluate, substitute
from .forms import DiffForm, interior_product, pullback, volume_index
from .hamiltonian import HamiltonianSystem, HDWOperator, NumericHamiltonian, hamilton_cartan, lift_vertical_field
from .lagrangian import LagrangianSystem, SectionExpr, classify_regularity, momenta
from .legendre import legendre_map

CFL_FACTOR = 0.5
TRIM = 2


@dataclass(frozen=True)
class Grid:
    bounds: tuple
    shape: tuple
    periodic: tuple = ()

    def __post_init__(self):
        bounds = tuple((float(a), float(b)) for a, b in self.bounds)
        shape = tuple(int(n) for n in self.shape)
        periodic = tuple(bool(p) for p in self.periodic) or (False,) * len(shape)
        if not (len(bounds) == len(shape) == len(periodic)):
            raise DimensionError("bounds, shape and periodic flags must have one entry per base axis")
        for (a, b), n in zip(bounds, shape):
            if n < 2 or b <= a:
                raise DimensionError(f"invalid axis [{a}, {b}] with {n} points")
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "periodic", periodic)

    @property
    def m(self) -> int:
        return len(self.shape)

    @property
    def h(self) -> tuple:
        return tuple((b - a) / (n - 1) for (a, b), n in zip(self.bounds, self.shape))

    def axis(self, nu: int) -> np.ndarray:
        a, b = self.bounds[nu]
        return np.linspace(a, b, self.shape[nu])

    def coords(self) -> dict:
        mesh = np.meshgrid(*[self.axis(n) for n in range(self.m)], indexing="ij")
        return {f"x_{n}": mesh[n] for n in range(self.m)}


@dataclass
class GridSection:
    """Samples of a section over a rectangular grid, one array per fiber coordinate."""

    chart: Chart
    grid: Grid
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.grid.m != self.chart.m:
            raise DimensionError(f"grid has {self.grid.m} axes, chart base dimension is {self.chart.m}")
        for name, arr in list(self.values.items()):
            arr = np.asarray(arr, dtype=float)
            if arr.shape != self.grid.shape:
                raise DimensionError(f"{name} has shape {arr.shape}, grid is {self.grid.shape}")
            self.values[name] = arr
        for s in self.chart.symbols[self.chart.m:]:
            if s.name not in self.values:
                raise DimensionError(f"missing samples for {s.name}")

    def point(self) -> dict:
        out = self.grid.coords()
        out.update(self.values)
        return out

    def with_values(self, values: dict) -> "GridSection":
        return GridSection(self.chart, self.grid, {k: np.array(v) for k, v in values.items()})

    def to_json(self) -> dict:
        return {
            "chart": self.chart.kind,
            "bounds": [list(b) for b in self.grid.bounds],
            "shape": list(self.grid.shape),
            "periodic": list(self.grid.periodic),
            "values": {k: self.values[k].ravel().tolist() for k in sorted(self.values)},
        }

    @classmethod
    def from_json(cls, bundle, data: dict) -> "GridSection":
        grid = Grid(data["bounds"], data["shape"], data.get("periodic", ()))
        vals = {k: np.asarray(v, dtype=float).reshape(grid.shape) for k, v in data["values"].items()}
        return cls(bundle.chart(data["chart"]), grid, vals)


def sample_section(bundle, kind: str, grid: Grid, images: dict) -> GridSection:
    """Evaluate closed-form fiber coordinates (name -> Expr in x) on ``grid``."""
    chart = bundle.chart(kind)
    pt = grid.coords()
    vals = {}
    for s in chart.symbols[chart.m:]:
        vals[s.name] = _on_grid(as_expr(images[s.name]), pt, grid.shape)
    return GridSection(chart, grid, vals)


def _on_grid(e: Expr, point: dict, shape) -> np.ndarray:
    val = evaluate(e, point)
    return np.array(np.broadcast_to(np.asarray(val, dtype=float), shape))


# --------------------------------------------------------------------------
# differencing


def _periodic_diff(arr: np.ndarray, axis: int, h: float) -> np.ndarray:
    core = np.take(arr, range(arr.shape[axis] - 1), axis=axis)
    d = (np.roll(core, -1, axis=axis) - np.roll(core, 1, axis=axis)) / (2 * h)
    first = np.take(d, [0], axis=axis)
    return np.concatenate([d, first], axis=axis)


def partial(arr: np.ndarray, grid: Grid, nu: int) -> np.ndarray:
    """Second-order difference along axis ``nu`` (one-sided at open boundaries)."""
    if grid.shape[nu] < 3:
        raise DimensionError("need at least 3 points per axis for differencing")
    h = grid.h[nu]
    if grid.periodic[nu]:
        return _periodic_diff(arr, nu, h)
    return np.gradient(arr, h, axis=nu, edge_order=2)


def prolong(phi: GridSection) -> GridSection:
    """Jet prolongation by finite differences."""
    if phi.chart.kind != "E":
        raise ChartMismatchError(f"prolong expects a section of E, got {phi.chart.kind}")
    bundle_m, N = phi.chart.m, phi.chart.N
    from .charts import make_bundle

    j1e = make_bundle(bundle_m, N).chart("J1E")
    vals = dict(phi.values)
    for a in range(N):
        for nu in range(bundle_m):
            vals[f"v_{a}_{nu}"] = partial(phi.values[f"y_{a}"], phi.grid, nu)
    return GridSection(j1e, phi.grid, vals)


def legendre_prolong(sys: LagrangianSystem, phi: GridSection) -> GridSection:
    """Reduced Legendre map applied pointwise to the jet prolongation."""
    jet = prolong(phi)
    pt = jet.point()
    fmap = legendre_map(sys, "reduced")
    vals = {}
    for s, img in zip(fmap.target.symbols, fmap.images):
        if s.role in ("field", "momentum"):
            vals[s.name] = _on_grid(img, pt, phi.grid.shape)
    return GridSection(fmap.target, phi.grid, vals)


# --------------------------------------------------------------------------
# residuals


@dataclass(frozen=True)
class Norms:
    max: float
    rms: float

    def as_dict(self):
        return {"max": self.max, "rms": self.rms}


def interior(arr: np.ndarray, grid: Grid, trim: int = TRIM) -> np.ndarray:
    """Drop ``trim`` layers at open boundaries and the duplicate periodic endpoint."""
    sl = []
    for nu in range(grid.m):
        if grid.periodic[nu]:
            sl.append(slice(0, grid.shape[nu] - 1))
        else:
            sl.append(slice(trim, grid.shape[nu] - trim))
    return arr[tuple(sl)]


def _norms(arrays, grid: Grid, trim: int = TRIM) -> Norms:
    parts = [interior(np.asarray(a, dtype=float), grid, trim).ravel() for a in arrays]
    flat = np.concatenate(parts) if parts else np.zeros(0)
    if flat.size == 0:
        raise DimensionError("grid has no interior points")
    return Norms(float(np.max(np.abs(flat))), float(np.sqrt(np.mean(flat**2))))


def hdw_residual_arrays(op: HDWOperator, section: GridSection) -> list:
    h = op.system
    if section.chart.kind != h.chart_kind or section.chart.m != h.m or section.chart.N != h.N:
        raise ChartMismatchError(f"operator on {h.chart_kind}, section on {section.chart.kind}")
    grid = section.grid
    pt = section.point()
    out = []
    for nu in range(h.m):
        for a in range(h.N):
            dy = partial(section.values[f"y_{a}"], grid, nu)
            out.append(dy - _on_grid(op.velocity[a][nu], pt, grid.shape))
    for a in range(h.N):
        div = sum(partial(section.values[f"p_{a}_{nu}"], grid, nu) for nu in range(h.m))
        out.append(div + _on_grid(op.force[a], pt, grid.shape))
    return out


def el_residual_arrays(sys: LagrangianSystem, section: GridSection) -> list:
    jet = prolong(section)
    grid = section.grid
    pt = jet.point()
    P = momenta(sys)
    out = []
    for a in range(sys.N):
        r = _on_grid(differentiate(sys.L, f"y_{a}"), pt, grid.shape)
        for nu in range(sys.m):
            r = r - partial(_on_grid(P[a][nu], pt, grid.shape), grid, nu)
        out.append(r)
    return out


def residual_norm(op, section: GridSection, trim: int = TRIM) -> Norms:
    """Max and RMS of the residuals over interior grid points.

    ``op`` is an :class:`HDWOperator` (section on its chart) or a
    :class:`LagrangianSystem` (section of E).
    """
    if isinstance(op, HDWOperator):
        arrays = hdw_residual_arrays(op, section)
    elif isinstance(op, LagrangianSystem):
        if section.chart.kind != "E":
            raise ChartMismatchError("Euler-Lagrange residuals need a section of E")
        arrays = el_residual_arrays(op, section)
    else:
        raise TypeError(f"unsupported residual operator {type(op).__name__}")
    return _norms(arrays, section.grid, trim)


def pullback_top_form(form: DiffForm, section: GridSection) -> np.ndarray:
    """Coefficient of ``d^m x`` in the pullback of an m-form along a grid section."""
    chart = form.chart
    m = chart.m
    if form.degree != m:
        raise DimensionError(f"expected an {m}-form, got degree {form.degree}")
    if section.chart != chart:
        raise ChartMismatchError(f"form on {chart.kind}, section on {section.chart.kind}")
    grid = section.grid
    pt = section.point()
    rows = {}

    def jac_row(k):
        if k not in rows:
            s = chart.symbols[k]
            if s.role == "base":
                rows[k] = [np.full(grid.shape, float(s.indices[0] == nu)) for nu in range(m)]
            else:
                rows[k] = [partial(section.values[s.name], grid, nu) for nu in range(m)]
        return rows[k]

    total = np.zeros(grid.shape)
    for idx, c in form.items():
        J = np.stack([np.stack(jac_row(k), axis=-1) for k in idx], axis=-2)
        total = total + _on_grid(c, pt, grid.shape) * np.linalg.det(J)
    return total


def contraction_field(h: HamiltonianSystem, beta, section: GridSection) -> np.ndarray:
    """Grid samples of ``ψ* i(j¹*Z) Ω_h`` for the vertical field with components ``beta``."""
    omega = hamilton_cartan(h)[1]
    X = lift_vertical_field(h.bundle, beta, h.chart_kind)
    return pullback_top_form(interior_product(X, omega), section)


def contraction_norm(h: HamiltonianSystem, beta, section: GridSection, trim: int = TRIM) -> Norms:
    return _norms([contraction_field(h, beta, section)], section.grid, trim)


# --------------------------------------------------------------------------
# actions


def _trapezoid(values: np.ndarray, grid: Grid) -> float:
    out = values
    for nu in reversed(range(grid.m)):
        out = np.trapezoid(out, dx=grid.h[nu], axis=nu)
    return float(out)


def _closed_form_density(kind, system, section, bundle):
    M = bundle.base_chart
    if kind == "lagrangian":
        if isinstance(section, SectionExpr):
            section = {f"y_{a}": c for a, c in enumerate(section.components)}
        images = {}
        for a in range(bundle.N):
            phi = as_expr(section[f"y_{a}"])
            images[f"y_{a}"] = phi
            for nu in range(bundle.m):
                images[f"v_{a}_{nu}"] = differentiate(phi, f"x_{nu}")
        F = CoordinateMap.from_dict(M, system.chart, images)
        return F.pull(system.L)
    F = CoordinateMap.from_dict(M, system.chart, {k: as_expr(v) for k, v in section.items()})
    theta = pullback(F, hamilton_cartan(system)[0])
    return theta.coefficient(volume_index(M))


def action_integral(kind: str, system, section, grid: Grid | None = None) -> float:
    """Trapezoidal integral of ``L`` along ``j¹φ`` or of ``Θ_h`` along ``ψ``.

    ``section`` is a :class:`GridSection` (E for lagrangian, the system's
    chart for hamiltonian) or a closed form (name -> Expr) together with
    ``grid``; closed forms are differentiated exactly.
    """
    if kind not in ("lagrangian", "hamiltonian"):
        raise ValueError(f"unknown action kind {kind!r}")
    if isinstance(section, GridSection):
        grid = section.grid
        if kind == "lagrangian":
            if not isinstance(system, LagrangianSystem) or section.chart.kind != "E":
                raise ChartMismatchError("lagrangian action needs a LagrangianSystem and a section of E")
            jet = prolong(section)
            dens = _on_grid(system.L, jet.point(), grid.shape)
        else:
            if not isinstance(system, HamiltonianSystem) or section.chart != system.chart:
                raise ChartMismatchError("hamiltonian action needs a section on the system's chart")
            dens = pullback_top_form(hamilton_cartan(system)[0], section)
        return _trapezoid(dens, grid)
    if grid is None:
        raise DimensionError("closed-form sections need a grid for quadrature")
    bundle = system.bundle
    dens = _closed_form_density(kind, system, section, bundle)
    return _trapezoid(_on_grid(dens, grid.coords(), grid.shape), grid)


# --------------------------------------------------------------------------
# evolution


def _rk4(f, state: np.ndarray, t: float, dt: float) -> np.ndarray:
    k1 = f(t, state)
    k2 = f(t + dt / 2, state + dt / 2 * k1)
    k3 = f(t + dt / 2, state + dt / 2 * k2)
    k4 = f(t + dt, state + dt * k3)
    return state + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _ev(e: Expr, point: dict, shape) -> np.ndarray:
    return np.array(np.broadcast_to(np.asarray(evaluate(e, point), dtype=float), shape))


def _initial_line(value, grid: Grid, name: str) -> np.ndarray:
    """Initial data on the ``x_0 = a_0`` slice (length ``n_1 - 1`` on a periodic axis)."""
    if grid.m == 1:
        return np.asarray(float(value) if not isinstance(value, Expr) else evaluate(value, {"x_0": grid.bounds[0][0]}))
    n1 = grid.shape[1] - 1
    if isinstance(value, (Expr, str)):
        xs = grid.axis(1)[:n1]
        expr = as_expr(value) if isinstance(value, Expr) else None
        if expr is None:
            from .expr import parse

            expr = parse(value)
        return _ev(expr, {"x_0": grid.bounds[0][0], "x_1": xs}, (n1,))
    arr = np.asarray(value, dtype=float)
    if arr.shape == (grid.shape[1],):
        arr = arr[:n1]
    if arr.shape != (n1,):
        raise DimensionError(f"initial {name} has shape {arr.shape}, expected ({grid.shape[1]},)")
    return arr


class _ELRhs:
    """Accelerations from ``W a = ∂L/∂y − ∂P0/∂x0 − ∂P0/∂y v0 − ∂P0/∂v1 ∂1 v0 − D1 P1``."""

    def __init__(self, sys: LagrangianSystem):
        self.sys = sys
        N, m = sys.N, sys.m
        P = momenta(sys)
        self.P = P
        self.force = [differentiate(sys.L, f"y_{a}") for a in range(N)]
        self.W = [[differentiate(P[a][0], f"v_{b}_0") for b in range(N)] for a in range(N)]
        self.Py = [[differentiate(P[a][0], f"y_{b}") for b in range(N)] for a in range(N)]
        self.Px = [differentiate(P[a][0], "x_0") for a in range(N)]
        self.Pv1 = [[differentiate(P[a][0], f"v_{b}_1") for b in range(N)] for a in range(N)] if m == 2 else None

    def __call__(self, t, state, xs=None, h1=None):
        N = self.sys.N
        y, v0 = state[:N], state[N:]
        shape = y.shape[1:]
        pt = {"x_0": t}
        for a in range(N):
            pt[f"y_{a}"] = y[a]
            pt[f"v_{a}_0"] = v0[a]
        if xs is not None:
            pt["x_1"] = xs
            dv0 = [_pdiff(v0[a], h1) for a in range(N)]
            for a in range(N):
                pt[f"v_{a}_1"] = _pdiff(y[a], h1)
        rhs = []
        for a in range(N):
            r = _ev(self.force[a], pt, shape) - _ev(self.Px[a], pt, shape)
            for b in range(N):
                r = r - _ev(self.Py[a][b], pt, shape) * v0[b]
                if xs is not None:
                    r = r - _ev(self.Pv1[a][b], pt, shape) * dv0[b]
            if xs is not None:
                r = r - _pdiff(_ev(self.P[a][1], pt, shape), h1)
            rhs.append(r)
        W = np.stack([np.stack([_ev(self.W[a][b], pt, shape) for b in range(N)], axis=-1) for a in range(N)], axis=-2)
        rhs = np.stack(rhs, axis=-1)
        acc = np.linalg.solve(W, rhs[..., None])[..., 0]
        acc = np.moveaxis(acc, -1, 0)
        return np.concatenate([v0, acc], axis=0)


def _pdiff(f: np.ndarray, h: float) -> np.ndarray:
    return (np.roll(f, -1, axis=-1) - np.roll(f, 1, axis=-1)) / (2 * h)


class _HDWRhs:
    """``∂0 y = ∂H/∂p0``, ``∂0 p0 = −D1 p1 − ∂H/∂y`` with ``p1`` solved from ``D1 y = ∂H/∂p1``."""

    def __init__(self, h: HamiltonianSystem):
        self.h = h
        N, m = h.N, h.m
        self.vel = [[differentiate(h.H, f"p_{a}_{nu}") for nu in range(m)] for a in range(N)]
        self.force = [differentiate(h.H, f"y_{a}") for a in range(N)]
        if m == 2:
            self.J = [[differentiate(self.vel[a][1], f"p_{b}_1") for b in range(N)] for a in range(N)]
        self._p1 = None

    def _solve_p1(self, pt, dy, shape):
        N = self.h.N
        p1 = self._p1 if self._p1 is not None and self._p1.shape == (N,) + shape else np.zeros((N,) + shape)
        for _ in range(50):
            for a in range(N):
                pt[f"p_{a}_1"] = p1[a]
            F = np.stack([_ev(self.vel[a][1], pt, shape) - dy[a] for a in range(N)], axis=-1)
            if np.max(np.abs(F)) <= 1e-12:
                break
            J = np.stack([np.stack([_ev(self.J[a][b], pt, shape) for b in range(N)], axis=-1) for a in range(N)], axis=-2)
            try:
                step = np.linalg.solve(J, -F[..., None])[..., 0]
            except np.linalg.LinAlgError:
                raise NotInvertibleError("∂²H/∂p1² is singular; cannot recover p1") from None
            p1 = p1 + np.moveaxis(step, -1, 0)
        else:
            raise ConvergenceError("Newton for p1 did not converge")
        self._p1 = p1
        return p1

    def __call__(self, t, state, xs=None, h1=None):
        N = self.h.N
        y, p0 = state[:N], state[N:]
        shape = y.shape[1:]
        pt = {"x_0": t}
        for a in range(N):
            pt[f"y_{a}"] = y[a]
            pt[f"p_{a}_0"] = p0[a]
        div = np.zeros_like(p0)
        if xs is not None:
            pt["x_1"] = xs
            dy = [_pdiff(y[a], h1) for a in range(N)]
            p1 = self._solve_p1(pt, dy, shape)
            for a in range(N):
                pt[f"p_{a}_1"] = p1[a]
                div[a] = _pdiff(p1[a], h1)
        dy0 = np.stack([_ev(self.vel[a][0], pt, shape) for a in range(N)])
        dp0 = np.stack([-div[a] - _ev(self.force[a], pt, shape) for a in range(N)])
        return np.concatenate([dy0, dp0], axis=0)


class _NumericHDWRhs:
    def __init__(self, nh: NumericHamiltonian):
        self.nh = nh

    def __call__(self, t, state, xs=None, h1=None):
        N = self.nh.sys.N
        base = {"x_0": float(t)}
        base.update({f"y_{a}": float(state[a, 0]) for a in range(N)})
        dHdp, dHdy = self.nh.gradients(base, state[N:, 0])
        return np.concatenate([dHdp, -dHdy])[:, None]


def solve_evolution(system, initial: dict, grid: Grid) -> GridSection:
    """RK4 in ``x_0``; on m=2 the ``x_1`` axis must be periodic.

    ``initial`` holds ``y`` (list per field) and ``v0`` for a
    :class:`LagrangianSystem` or ``p0`` for a Hamiltonian system.
    """
    m = grid.m
    if m > 2:
        raise ScopeError("evolution is limited to m <= 2")
    if isinstance(system, LagrangianSystem):
        rep = classify_regularity(system)
        if rep.classification != "regular":
            raise NotInvertibleError(f"Lagrangian is {rep.classification}; evolution needs a regular theory")
        bundle, rhs, second = system.bundle, _ELRhs(system), "v0"
    elif isinstance(system, HamiltonianSystem):
        if system.constraints is not None and len(system.constraints):
            raise NotInvertibleError("constrained Hamiltonian systems cannot be evolved")
        bundle, rhs, second = system.bundle, _HDWRhs(system), "p0"
    elif isinstance(system, NumericHamiltonian):
        if m != 1:
            raise ScopeError("numeric Hamiltonians are evolved for m = 1 only")
        bundle, rhs, second = system.sys.bundle, _NumericHDWRhs(system), "p0"
    else:
        raise TypeError(f"cannot evolve {type(system).__name__}")
    if bundle.m != m:
        raise DimensionError(f"grid has {m} axes, theory has m = {bundle.m}")
    N = bundle.N
    n0 = grid.shape[0]
    dt = grid.h[0]
    xs = h1 = None
    if m == 2:
        if not grid.periodic[1]:
            raise ScopeError("the x_1 axis must be periodic")
        h1 = grid.h[1]
        if dt > CFL_FACTOR * h1 * (1 + 1e-12):
            raise CFLError(f"step {dt:.4g} exceeds {CFL_FACTOR} × spatial spacing {h1:.4g}")
        xs = grid.axis(1)[:-1]
    for key in ("y", second):
        if key not in initial or len(initial[key]) != N:
            raise DimensionError(f"initial data needs {N} entries for {key!r}")
    y0 = [_initial_line(v, grid, "y") for v in initial["y"]]
    s0 = [_initial_line(v, grid, second) for v in initial[second]]
    state = np.stack([np.atleast_1d(a) for a in y0 + s0]).astype(float)
    history = [state]
    t0 = grid.bounds[0][0]

    def f(t, s):
        return rhs(t, s, xs, h1)

    for k in range(n0 - 1):
        state = _rk4(f, state, t0 + k * dt, dt)
        if not np.all(np.isfinite(state)):
            raise ConvergenceError(f"solution blew up at step {k + 1}")
        history.append(state)
    hist = np.stack(history)  # (n0, 2N, n1-1) or (n0, 2N, 1)
    if m == 2:
        hist = np.concatenate([hist, hist[..., :1]], axis=-1)
    else:
        hist = hist[..., 0]
    vals = {}
    for a in range(N):
        vals[f"y_{a}"] = hist[:, a]
    if isinstance(system, LagrangianSystem):
        return GridSection(bundle.chart("E"), grid, vals)
    for a in range(N):
        vals[f"p_{a}_0"] = hist[:, N + a]
    if m == 2:
        p1 = _recover_p1(system, grid, vals)
        vals.update(p1)
    kind = system.chart_kind if isinstance(system, HamiltonianSystem) else "Pi"
    return GridSection(bundle.chart(kind), grid, vals)


def _recover_p1(h: HamiltonianSystem, grid: Grid, vals: dict) -> dict:
    rhs = _HDWRhs(h)
    xs = grid.axis(1)[:-1]
    n0 = grid.shape[0]
    out = {f"p_{a}_1": np.zeros(grid.shape) for a in range(h.N)}
    for k in range(n0):
        t = grid.bounds[0][0] + k * grid.h[0]
        pt = {"x_0": t, "x_1": xs}
        for a in range(h.N):
            pt[f"y_{a}"] = vals[f"y_{a}"][k, :-1]
            pt[f"p_{a}_0"] = vals[f"p_{a}_0"][k, :-1]
        dy = [_pdiff(pt[f"y_{a}"], grid.h[1]) for a in range(h.N)]
        p1 = rhs._solve_p1(pt, dy, xs.shape)
        for a in range(h.N):
            out[f"p_{a}_1"][k, :-1] = p1[a]
            out[f"p_{a}_1"][k, -1] = p1[a][0]
    return out


def matched_momentum(sys: LagrangianSystem, y0, v0) -> list:
    """Closed-form ``p_A_0`` on the initial slice from ``y`` and ``∂0 y`` (expressions in x)."""
    assign = {}
    for a in range(sys.N):
        assign[sys.chart.symbol(f"y_{a}")] = as_expr(y0[a])
        assign[sys.chart.symbol(f"v_{a}_0")] = as_expr(v0[a])
        for nu in range(1, sys.m):
            assign[sys.chart.symbol(f"v_{a}_{nu}")] = differentiate(as_expr(y0[a]), f"x_{nu}")
    return [substitute(momenta(sys)[a][0], assign) for a in range(sys.N)]


def energy_series(h: HamiltonianSystem, section: GridSection) -> np.ndarray:
    """``H`` along an m=1 section, for conservation checks."""
    return _on_grid(h.H, section.point(), section.grid.shape)
