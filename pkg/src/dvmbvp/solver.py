"""Damped, truncated fixed-point solver in exponential characteristic form.

One stage solves, for fixed damping alpha > 0 and truncation level k > 1,

    alpha F_a + v_a . grad F_a = gain_a(F, frozen * mu) - F_a freq_a(F, frozen * mu)

with prescribed inflow, by the monotone inner iteration: the new iterate is
obtained by integrating gain and frequency of the previous one along each
backward characteristic in exponential (integrating-factor) form, starting
from zero.  The outer loop updates the frozen convolved state until the map
reaches its fixed point.  Continuation then sends alpha -> 0 at fixed k, and
an outer sweep raises k.

Every per-cell update integrates from the inflow boundary along the full
characteristic with composite trapezoid steps bounded by `h_s`, so one
iteration is a dense transport sweep, deterministic for fixed inputs.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .collision import (eval_convolved_truncated, eval_truncated, eval_untruncated,
                        frequency_source, gain_truncated, truncated_factor)
from .fields import (BoundaryData, Field, Grid, MollifierSpec, mollify_field,
                     truncate_and_mollify_boundary)
from .geometry import BoundaryArc, ConvexDomain, boundary_param, boundary_quadrature
from .model import VelocityModel


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Numerical parameters for one stage and for the continuation loops."""

    alpha: float = 0.5
    k: float = 16.0
    grid_n: int = 64
    h_s: float | None = None            # path quadrature step; None -> h/2
    tol_inner: float = 1e-9
    tol_outer: float = 1e-8
    tol_continuation: float = 1e-6
    max_inner: int = 400
    max_outer: int = 120
    alpha_schedule: tuple = (0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625)
    k_schedule: tuple = (4.0, 16.0, 64.0, 256.0)
    mollifier_radius: float | None = None   # None -> equal to alpha
    boundary_support_fraction: float | None = None   # None -> 1/k
    inner_start: str = "zero"               # "zero" (monotone) | "warm"
    alpha_extrapolate: bool = True
    eps_geo_rel: float = 1e-6
    n_boundary_quad: int = 1024
    mono_hard_tol: float = 1e-12

    def step(self, grid_h: float) -> float:
        return self.h_s if self.h_s is not None else 0.5 * grid_h

    def radius(self) -> float:
        return self.mollifier_radius if self.mollifier_radius is not None else self.alpha


def compute_mass_cap(domain: ConvexDomain, model: VelocityModel,
                     boundary: BoundaryData, alpha: float,
                     n_quad: int = 1024, arcs=None) -> float:
    """Total inflow flux divided by alpha: the invariant-region mass bound.

    Recomputed from the boundary data of the problem actually being solved
    (for a truncated stage that is the truncated trace).
    """
    if alpha <= 0:
        raise SolverError("mass cap requires positive damping")
    total = 0.0
    for i in range(model.p):
        arc = arcs[i] if arcs is not None else boundary_quadrature(
            domain, model.v[i], +1, n_quad)
        total += arc.integrate_flux(boundary.eval(i, arc.t_params))
    return total / alpha


# ---------------------------------------------------------------------------
# characteristic tables
# ---------------------------------------------------------------------------

class _CharTable:
    """Backward-characteristic sampling for one velocity on one grid.

    For every non-grazing interior cell: entry time s_plus, a uniform node
    ladder of M+1 samples from the entry point to the cell (spatial step at
    most h_s), precomputed bilinear gather stencils, and the boundary
    arclength parameter of the entry point.
    """

    def __init__(self, domain: ConvexDomain, grid: Grid, v, h_s: float, eps_geo_rel: float):
        v = np.asarray(v, dtype=float)
        speed = float(np.hypot(v[0], v[1]))
        zs = grid.centers[grid.mask]
        s_plus = domain.exit_times(zs, -v)
        s_minus = domain.exit_times(zs, v)
        chord = (s_plus + s_minus) * speed
        grazing = chord < eps_geo_rel * domain.diameter
        keep = ~grazing

        self.v = v
        self.speed = speed
        self.cells_flat = np.flatnonzero(grid.mask.ravel())[keep]
        self.grazing_flat = np.flatnonzero(grid.mask.ravel())[grazing]
        self.s_plus = s_plus[keep]
        self.s_minus = s_minus[keep]
        entry = zs[keep] - self.s_plus[:, None] * v
        bp = boundary_param(domain)
        self.t_entry = bp.t_of_point(entry)
        if np.any(grazing):
            g_entry = zs[grazing] - s_plus[grazing][:, None] * v
            self.t_entry_grazing = bp.t_of_point(g_entry)
        else:
            self.t_entry_grazing = np.zeros(0)

        n = len(self.s_plus)
        M = max(1, int(math.ceil(float(np.max(self.s_plus, initial=0.0)) * speed / h_s)))
        self.M = M
        self.dt = self.s_plus / M
        nodes = self.dt[:, None] * np.arange(M + 1)
        pts = entry[:, None, :] + nodes[..., None] * v
        flat, w = grid.interp_weights(pts.reshape(-1, 2))
        self.flat = flat.reshape(n, M + 1)
        self.w = tuple(wk.reshape(n, M + 1) for wk in w)
        # composite trapezoid weights on the node ladder
        tw = np.ones(M + 1)
        tw[0] = tw[-1] = 0.5
        self.trapz_w = self.dt[:, None] * tw[None, :]

    def gather(self, grid: Grid, padded_flat: np.ndarray) -> np.ndarray:
        w00, w10, w01, w11 = self.w
        f = self.flat
        v = padded_flat
        return (w00 * v[f] + w10 * v[f + 1]
                + w01 * v[f + grid.nx] + w11 * v[f + grid.nx + 1])

    def suffix_trapz(self, samples: np.ndarray) -> np.ndarray:
        """T[:, m] = trapezoid integral of the samples from node m to the cell."""
        pair = 0.5 * (samples[:, :-1] + samples[:, 1:]) * self.dt[:, None]
        tails = np.flip(np.cumsum(np.flip(pair, axis=1), axis=1), axis=1)
        return np.concatenate([tails, np.zeros((len(samples), 1))], axis=1)


class SolverWorkspace:
    """Shared per-(domain, model, grid) precomputation for solver passes."""

    def __init__(self, domain: ConvexDomain, model: VelocityModel, grid: Grid,
                 config: SolverConfig):
        self.domain = domain
        self.model = model
        self.grid = grid
        self.config = config
        self.h_s = config.step(grid.h)
        self._tables: dict[int, _CharTable] = {}
        self._arcs: dict[tuple[int, int], BoundaryArc] = {}

    def table(self, i: int) -> _CharTable:
        tab = self._tables.get(i)
        if tab is None:
            tab = _CharTable(self.domain, self.grid, self.model.v[i], self.h_s,
                             self.config.eps_geo_rel)
            self._tables[i] = tab
        return tab

    def arc(self, i: int, sign: int) -> BoundaryArc:
        key = (i, sign)
        arc = self._arcs.get(key)
        if arc is None:
            arc = boundary_quadrature(self.domain, self.model.v[i], sign,
                                      self.config.n_boundary_quad)
            self._arcs[key] = arc
        return arc

    def inflow_arcs(self):
        return [self.arc(i, +1) for i in range(self.model.p)]

    def entry_values(self, boundary: BoundaryData) -> list[np.ndarray]:
        """Inflow trace at the entry point of every tabulated characteristic."""
        out = []
        for i in range(self.model.p):
            tab = self.table(i)
            out.append((np.asarray(boundary.eval(i, tab.t_entry), dtype=float),
                        np.asarray(boundary.eval(i, tab.t_entry_grazing), dtype=float)))
        return out

    def apply_exponential(self, entry_vals, nu: np.ndarray, gain: np.ndarray,
                          alpha: float) -> np.ndarray:
        """One transport sweep of the exponential form for all components."""
        grid = self.grid
        out = np.zeros((self.model.p, grid.ny, grid.nx))
        for i in range(self.model.p):
            tab = self.table(i)
            b, b_graz = entry_vals[i]
            nu_pad = grid.pad(nu[i]).ravel()
            gain_pad = grid.pad(gain[i]).ravel()
            nu_s = tab.gather(grid, nu_pad)
            tails = tab.suffix_trapz(nu_s)
            boundary_term = b * np.exp(-alpha * tab.s_plus - tails[:, 0])
            gain_s = tab.gather(grid, gain_pad)
            damp = alpha * (np.arange(tab.M + 1) - tab.M)[None, :] * tab.dt[:, None]
            gain_term = np.sum(tab.trapz_w * gain_s * np.exp(damp - tails), axis=1)
            comp = out[i].ravel()
            comp[tab.cells_flat] = boundary_term + gain_term
            comp[tab.grazing_flat] = b_graz
        return out

    def path_integral(self, i: int, values2d: np.ndarray) -> np.ndarray:
        """Plain trapezoid integral entry->cell per tabulated cell."""
        tab = self.table(i)
        vals = tab.gather(self.grid, self.grid.pad(values2d).ravel())
        return np.sum(tab.trapz_w * vals, axis=1)

    def path_integral_attenuated(self, i: int, values2d: np.ndarray,
                                 nu2d: np.ndarray, alpha: float = 0.0) -> np.ndarray:
        """Entry->cell integral with the exponential attenuation factor."""
        tab = self.table(i)
        vals = tab.gather(self.grid, self.grid.pad(values2d).ravel())
        nu_s = tab.gather(self.grid, self.grid.pad(nu2d).ravel())
        tails = tab.suffix_trapz(nu_s)
        damp = alpha * (np.arange(tab.M + 1) - tab.M)[None, :] * tab.dt[:, None]
        return np.sum(tab.trapz_w * vals * np.exp(damp - tails), axis=1)

    def scatter(self, i: int, per_cell: np.ndarray, grazing_value=0.0) -> np.ndarray:
        """Place per-tabulated-cell values back onto the full lattice."""
        tab = self.table(i)
        out = np.zeros(self.grid.ny * self.grid.nx)
        out[tab.cells_flat] = per_cell
        out[tab.grazing_flat] = grazing_value
        return out.reshape(self.grid.ny, self.grid.nx)


# ---------------------------------------------------------------------------
# traces
# ---------------------------------------------------------------------------

@dataclass
class SolveTrace:
    kind: str
    increments: list = field(default_factory=list)
    masses: list = field(default_factory=list)
    min_values: list = field(default_factory=list)
    wall_times: list = field(default_factory=list)
    termination: str = ""
    converged: bool = False
    monotone_checked: bool = False
    monotone_violations: int = 0
    mass_cap: float = float("nan")
    mass_cap_max_ratio: float = 0.0
    grazing_cells: int = 0
    children: list = field(default_factory=list)
    residual: float = float("nan")

    @property
    def iterations(self) -> int:
        return len(self.increments)


# ---------------------------------------------------------------------------
# single stage
# ---------------------------------------------------------------------------

def exponential_step(domain: ConvexDomain, model: VelocityModel, boundary: BoundaryData,
                     nu_field: Field, gain_field: Field, alpha: float,
                     workspace: SolverWorkspace | None = None,
                     config: SolverConfig | None = None) -> Field:
    """Integrate boundary data and a given gain against a given frequency.

    Returns, for every cell and component, the exponential-form transport
    solution of (alpha + v.grad + nu) F = gain with the prescribed inflow.
    Grazing cells (chord below the geometric tolerance) take the plain
    boundary value.
    """
    if np.any(nu_field.values < 0) or np.any(gain_field.values < 0):
        raise SolverError("nu and gain fields must be nonnegative")
    ws = workspace or SolverWorkspace(domain, model, nu_field.grid,
                                      config or SolverConfig())
    entry_vals = ws.entry_values(boundary)
    out = ws.apply_exponential(entry_vals, nu_field.values, gain_field.values, alpha)
    return Field(ws.grid, out)


def inner_monotone_solve(domain: ConvexDomain, model: VelocityModel,
                         boundary: BoundaryData, frozen: Field, config: SolverConfig,
                         workspace: SolverWorkspace | None = None,
                         smoothed: Field | None = None,
                         entry_vals=None, start: Field | None = None,
                         mass_cap: float | None = None):
    """Monotone ladder for the stage map at one frozen convolved state.

    Starting from zero, each step transports the previous iterate's truncated
    gain and frequency.  The iterates increase cellwise and their mass stays
    below the damping cap; both properties are monitored and a violation
    beyond the rounding tolerance is a hard failure.  A warm `start` skips
    the monotonicity contract (the ladder then converges but not monotonely).
    """
    if np.any(frozen.values < 0):
        raise SolverError("frozen state must be nonnegative")
    ws = workspace or SolverWorkspace(domain, model, frozen.grid, config)
    alpha, k = config.alpha, config.k
    if smoothed is None:
        smoothed = mollify_field(frozen, MollifierSpec(config.radius()), warn_small=False)
    if entry_vals is None:
        entry_vals = ws.entry_values(boundary)
    if mass_cap is None:
        mass_cap = compute_mass_cap(domain, model, boundary, alpha,
                                    arcs=ws.inflow_arcs())

    source = frequency_source(model, smoothed.values, k)
    tr_sm = truncated_factor(smoothed.values, k)

    trace = SolveTrace(kind="inner", mass_cap=mass_cap,
                       monotone_checked=start is None,
                       grazing_cells=sum(len(ws.table(i).grazing_flat)
                                         for i in range(model.p)))
    F = np.zeros_like(frozen.values) if start is None else start.values.copy()
    area = ws.grid.cell_area
    hard_tol = config.mono_hard_tol
    for q in range(config.max_inner):
        t0 = time.perf_counter()
        nu = source / (1.0 + F / k)
        gain = gain_truncated(model, truncated_factor(F, k), tr_sm)
        F_new = ws.apply_exponential(entry_vals, nu, gain, alpha)
        if trace.monotone_checked:
            viol = int(np.sum(F_new < F))
            trace.monotone_violations += viol
            if viol:
                worst = float(np.max(F - F_new))
                if worst > hard_tol * (1.0 + float(np.max(F))):
                    raise SolverError(
                        f"monotone ladder decreased by {worst:.3e} at iteration {q}; "
                        "this indicates a quadrature defect")
        inc = float(np.abs(F_new - F).sum() * area)
        mass = float(F_new.sum() * area)
        trace.increments.append(inc)
        trace.masses.append(mass)
        trace.min_values.append(float(F_new.min()))
        trace.wall_times.append(time.perf_counter() - t0)
        if mass_cap > 0:
            trace.mass_cap_max_ratio = max(trace.mass_cap_max_ratio, mass / mass_cap)
        F = F_new
        if inc <= config.tol_inner * (mass + 1e-300):
            trace.termination = "converged"
            trace.converged = True
            break
    else:
        trace.termination = "max_inner"
    if trace.mass_cap_max_ratio > 1.0 + 1e-9:
        warnings.warn(f"inner iterate mass exceeded the damping cap by factor "
                      f"{trace.mass_cap_max_ratio:.12f}", stacklevel=2)
    return Field(ws.grid, F), trace


def outer_fixed_point(domain: ConvexDomain, model: VelocityModel,
                      boundary: BoundaryData, config: SolverConfig,
                      workspace: SolverWorkspace | None = None,
                      start: Field | None = None):
    """Picard iteration of the stage map (frozen state -> transported state).

    Convergence of this loop is monitored, not guaranteed; a stall after
    max_outer steps is reported through the trace, never asserted away.
    """
    if config.alpha <= 0 or config.k <= 1:
        raise SolverError("stage requires alpha > 0 and k > 1")
    grid = (start.grid if start is not None else
            (workspace.grid if workspace is not None else Grid(domain, config.grid_n)))
    ws = workspace or SolverWorkspace(domain, model, grid, config)
    entry_vals = ws.entry_values(boundary)
    mass_cap = compute_mass_cap(domain, model, boundary, config.alpha,
                                arcs=ws.inflow_arcs())
    f = start.copy() if start is not None else Field.zeros(grid, model.p)
    trace = SolveTrace(kind="outer", mass_cap=mass_cap)
    prev_inner = None
    for it in range(config.max_outer):
        t0 = time.perf_counter()
        inner_start = prev_inner if config.inner_start == "warm" else None
        F, itrace = inner_monotone_solve(
            domain, model, boundary, f, config, workspace=ws,
            entry_vals=entry_vals, start=inner_start, mass_cap=mass_cap)
        change = F.l1_distance(f)
        rel = change / max(F.mass(), 1e-300)
        trace.increments.append(rel)
        trace.masses.append(F.mass())
        trace.min_values.append(F.min_value())
        trace.wall_times.append(time.perf_counter() - t0)
        trace.children.append(itrace)
        trace.monotone_violations += itrace.monotone_violations
        trace.monotone_checked = trace.monotone_checked or itrace.monotone_checked
        trace.mass_cap_max_ratio = max(trace.mass_cap_max_ratio, itrace.mass_cap_max_ratio)
        f = F
        prev_inner = F
        if rel <= config.tol_outer:
            trace.termination = "converged"
            trace.converged = True
            break
    else:
        trace.termination = "max_outer"
    res = residual_mild(domain, model, boundary, f, k=config.k, alpha=config.alpha,
                        smoothed=mollify_field(f, MollifierSpec(config.radius()),
                                               warn_small=False),
                        workspace=ws)
    trace.residual = res.total_relative
    return f, trace


# ---------------------------------------------------------------------------
# continuation
# ---------------------------------------------------------------------------

@dataclass
class ContinuationResult:
    alphas: list
    fields: list               # per-alpha converged stages
    traces: list
    cauchy_distances: list     # L1 distance between consecutive stages
    estimate: Field            # extrapolated (or last) alpha -> 0 estimate
    extrapolated: bool
    final_residual: float      # undamped truncated mild residual of the estimate
    warnings: list

    @property
    def converged(self) -> bool:
        return all(t.converged for t in self.traces)

    @property
    def last(self) -> Field:
        return self.fields[-1]


def alpha_continuation(domain: ConvexDomain, model: VelocityModel,
                       boundary: BoundaryData, config: SolverConfig,
                       workspace: SolverWorkspace | None = None,
                       start: Field | None = None) -> ContinuationResult:
    """Drive the damping to zero along config.alpha_schedule at fixed k.

    Stages warm-start from the previous solution; consecutive L1 distances
    are reported as an empirical convergence (Cauchy) monitor.  When
    `alpha_extrapolate` is set, the returned estimate removes the leading
    linear damping bias by Richardson extrapolation of the last two stages
    (clipped at zero to preserve positivity).
    """
    schedule = list(config.alpha_schedule)
    if any(a2 >= a1 for a1, a2 in zip(schedule, schedule[1:])) or schedule[-1] <= 0:
        raise SolverError("alpha_schedule must decrease strictly toward 0")
    ws = workspace
    fields_, traces, alphas = [], [], []
    notes = []
    prev = start
    for a in schedule:
        cfg = replace(config, alpha=a)
        if ws is None:
            ws = SolverWorkspace(domain, model, Grid(domain, config.grid_n), cfg)
        F, tr = outer_fixed_point(domain, model, boundary, cfg, workspace=ws, start=prev)
        if not tr.converged:
            notes.append(f"stage alpha={a} did not converge ({tr.termination})")
        fields_.append(F)
        traces.append(tr)
        alphas.append(a)
        prev = F
    dists = [fields_[j].l1_distance(fields_[j - 1]) for j in range(1, len(fields_))]
    for j in range(1, len(dists)):
        if dists[j] > dists[j - 1]:
            notes.append(f"Cauchy distances increased at stage {j + 1}; "
                         "consider refining the grid")
            break
    extrapolated = False
    estimate = fields_[-1]
    if config.alpha_extrapolate and len(fields_) >= 2:
        r = alphas[-2] / alphas[-1]
        vals = (r * fields_[-1].values - fields_[-2].values) / (r - 1.0)
        estimate = Field(estimate.grid, np.maximum(vals, 0.0))
        extrapolated = True
    res = residual_mild(domain, model, boundary, estimate, k=config.k, alpha=0.0,
                        workspace=ws)
    return ContinuationResult(alphas, fields_, traces, dists, estimate,
                              extrapolated, res.total_relative, notes)


@dataclass
class KStage:
    k: float
    boundary: BoundaryData
    continuation: ContinuationResult
    diagnostics: dict


@dataclass
class SweepResult:
    stages: list
    k_distances: list      # L1 distances between consecutive k estimates
    field: Field           # final solution estimate

    @property
    def converged(self) -> bool:
        return all(s.continuation.converged for s in self.stages)


def k_sweep(domain: ConvexDomain, model: VelocityModel, boundary: BoundaryData,
            config: SolverConfig, workspace: SolverWorkspace | None = None,
            collect_diagnostics: bool = True) -> SweepResult:
    """Raise the truncation level along config.k_schedule.

    Each level caps and smooths the inflow trace, runs the damping
    continuation (warm-started from the previous level) and collects the
    level diagnostics: mass, energy, dissipation, entropy functionals and
    translation moduli of the integrated collision frequency.
    """
    ks = list(config.k_schedule)
    if any(k2 <= k1 for k1, k2 in zip(ks, ks[1:])) or ks[0] <= 1:
        raise SolverError("k_schedule must increase and start above 1")
    ws = workspace or SolverWorkspace(domain, model, Grid(domain, config.grid_n), config)
    from . import diagnostics as diag   # deferred: diagnostics imports solver

    stages = []
    prev_field = None
    for k in ks:
        bd_k = truncate_and_mollify_boundary(
            boundary, k, domain, support_fraction=config.boundary_support_fraction)
        cfg = replace(config, k=k)
        cont = alpha_continuation(domain, model, bd_k, cfg, workspace=ws,
                                  start=prev_field)
        info = {}
        if collect_diagnostics:
            info = diag.stage_diagnostics(domain, model, cont.estimate, bd_k,
                                          alpha=cont.alphas[-1], k=k, workspace=ws,
                                          config=cfg)
        stages.append(KStage(k, bd_k, cont, info))
        prev_field = cont.last
    dists = [stages[j].continuation.estimate.l1_distance(stages[j - 1].continuation.estimate)
             for j in range(1, len(stages))]
    return SweepResult(stages, dists, stages[-1].continuation.estimate)


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------

@dataclass
class MildResidual:
    per_component_l1: np.ndarray
    per_component_relative: np.ndarray
    total_relative: float
    max_cell: float


def residual_mild(domain: ConvexDomain, model: VelocityModel, boundary: BoundaryData,
                  field_: Field, k: float | None = None, alpha: float = 0.0,
                  smoothed: Field | None = None,
                  workspace: SolverWorkspace | None = None,
                  config: SolverConfig | None = None) -> MildResidual:
    """Defect of the integral (mild) form along backward characteristics.

    Per cell: F_a(z) - inflow(entry) * e^(-alpha s+) - integral of the net
    collision term (damped by e^(alpha (s - s+)) when alpha > 0).  The net
    term is evaluated on the grid first (gain - loss as arrays), so exact
    algebraic cancellations survive interpolation.  `k=None` selects the
    untruncated operator; passing `smoothed` selects the convolved one.
    """
    cfg = config or SolverConfig()
    ws = workspace or SolverWorkspace(domain, model, field_.grid, cfg)
    if k is None:
        ev = eval_untruncated(model, field_.values)
    elif smoothed is not None:
        ev = eval_convolved_truncated(model, field_.values, smoothed.values, k)
    else:
        ev = eval_truncated(model, field_.values, k)
    net = ev.net
    area = ws.grid.cell_area
    l1 = np.zeros(model.p)
    rel = np.zeros(model.p)
    worst = 0.0
    zero_nu = np.zeros((ws.grid.ny, ws.grid.nx))
    for i in range(model.p):
        tab = ws.table(i)
        b = np.asarray(boundary.eval(i, tab.t_entry), dtype=float)
        if alpha == 0.0:
            coll = ws.path_integral(i, net[i])
        else:
            coll = ws.path_integral_attenuated(i, net[i], zero_nu, alpha)
        predicted = b * np.exp(-alpha * tab.s_plus) + coll
        actual = field_.values[i].ravel()[tab.cells_flat]
        r = np.abs(actual - predicted)
        l1[i] = float(np.sum(r) * area)
        mass_i = float(np.sum(np.abs(actual)) * area)
        rel[i] = l1[i] / max(mass_i, 1e-300)
        if r.size:
            worst = max(worst, float(np.max(r)))
    total_rel = float(np.sum(l1) / max(field_.mass(), 1e-300))
    return MildResidual(l1, rel, total_rel, worst)


@dataclass
class TestFunction:
    name: str
    fn: object            # callable (x, y) -> values
    grad: object          # callable (x, y) -> (2,) gradient arrays


def default_test_functions() -> list[TestFunction]:
    """Polynomials up to degree two; C1 on the closed domain."""
    zero = lambda x, y: np.zeros_like(x)
    one = lambda x, y: np.ones_like(x)
    return [
        TestFunction("1", lambda x, y: np.ones_like(x), lambda x, y: (zero(x, y), zero(x, y))),
        TestFunction("x", lambda x, y: x, lambda x, y: (one(x, y), zero(x, y))),
        TestFunction("y", lambda x, y: y, lambda x, y: (zero(x, y), one(x, y))),
        TestFunction("x^2", lambda x, y: x * x, lambda x, y: (2.0 * x, zero(x, y))),
        TestFunction("x*y", lambda x, y: x * y, lambda x, y: (y, x)),
        TestFunction("y^2", lambda x, y: y * y, lambda x, y: (zero(x, y), 2.0 * y)),
    ]


@dataclass
class RenormalizedDefect:
    name: str
    total: float
    per_component: np.ndarray


def residual_renormalized(domain: ConvexDomain, model: VelocityModel,
                          boundary: BoundaryData, field_: Field,
                          test_functions=None, k: float | None = None,
                          workspace: SolverWorkspace | None = None,
                          config: SolverConfig | None = None):
    """Weak-form defect of the logarithmic (renormalized) formulation.

    For each test function phi: outflow of phi ln(1+F) minus inflow of
    phi ln(1+inflow trace), minus the volume advection of ln(1+F) against
    v . grad phi, minus the volume collision term phi Q(F)/(1+F).  All four
    pieces vanish together exactly for an exact solution.
    """
    cfg = config or SolverConfig()
    ws = workspace or SolverWorkspace(domain, model, field_.grid, cfg)
    if test_functions is None:
        test_functions = default_test_functions()
    if k is None:
        ev = eval_untruncated(model, field_.values)
    else:
        ev = eval_truncated(model, field_.values, k)
    ratio = ev.net / (1.0 + field_.values)
    grid = ws.grid
    X = grid.centers[..., 0]
    Y = grid.centers[..., 1]
    area = grid.cell_area
    lnF = np.log1p(field_.values)
    out = []
    for tf in test_functions:
        phi = np.asarray(tf.fn(X, Y), dtype=float)
        gx, gy = tf.grad(X, Y)
        per_comp = np.zeros(model.p)
        for i in range(model.p):
            v = model.v[i]
            arc_out = ws.arc(i, -1)
            arc_in = ws.arc(i, +1)
            ln_out = np.log1p(grid.interpolate(field_.values[i], arc_out.points))
            phi_out = np.asarray(tf.fn(arc_out.points[:, 0], arc_out.points[:, 1]))
            out_term = arc_out.integrate_flux(phi_out * ln_out)
            ln_in = np.log1p(np.asarray(boundary.eval(i, arc_in.t_params)))
            phi_in = np.asarray(tf.fn(arc_in.points[:, 0], arc_in.points[:, 1]))
            in_term = arc_in.integrate_flux(phi_in * ln_in)
            adv = float(np.sum(lnF[i][grid.mask]
                               * (v[0] * np.asarray(gx) + v[1] * np.asarray(gy))[grid.mask])
                        * area)
            vol = float(np.sum((phi * ratio[i])[grid.mask]) * area)
            per_comp[i] = out_term - in_term - adv - vol
        out.append(RenormalizedDefect(tf.name, float(np.sum(per_comp)), per_comp))
    return out
