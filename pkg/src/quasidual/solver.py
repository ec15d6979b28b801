"""Constrained minimization of the dual energy and the studies built on it.

:func:`solve` runs a projected descent on the Nehari set: each iteration
takes a Sobolev-gradient step ``v <- max(v - alpha (-Delta_h)^{-1} r, floor)``
with Armijo backtracking on ``Phi`` and then rescales ``v`` along its ray to
the fiber minimizer, so every iterate stays on N2.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .energy import DualFunctional, EnergyBreakdown, discrete_l2
from .errors import NoCompatibility, NonPositiveField
from .fiber import local_projection, project_to_nehari
from .grid import GridFunction, boundary_distance, first_eigenfunction, h1_norm_sq
from .problem import ProblemSpec, Sublinear, compat_integral, in_uniqueness_regime, validate
from .transform import KERNEL, TransformKernel


@dataclass
class SolveOptions:
    max_iters: int = 5000
    step_init: float = 0.1
    step_max: float = 1.0
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    positivity_floor: float | None = None  # default 1e-12 * spacing
    residual_tol: float = 1e-8
    nehari_tol: float = 1e-8
    seed: int = 0
    compat_levels: int = 3

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if not self.step_init > 0:
            raise ValueError("step_init must be positive")
        if not 0 < self.armijo_c < 1 or not 0 < self.backtrack < 1:
            raise ValueError("armijo_c and backtrack must lie in (0, 1)")
        if not (self.residual_tol > 0 and self.nehari_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.positivity_floor is not None and not self.positivity_floor > 0:
            raise ValueError("positivity_floor must be positive")

    def floor_for(self, spec: ProblemSpec) -> float:
        if self.positivity_floor is not None:
            return self.positivity_floor
        return 1e-12 * spec.mesh.spacing

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class SolveReport:
    v: GridFunction
    u: GridFunction
    energy: EnergyBreakdown
    residual_norm: float
    residual_pos_norm: float
    residual_neg_norm: float
    nehari_gap: float
    t_final: float
    t_global: float
    iters: int
    epsilon_boundary: float
    primal_residual_norm: float
    floor_active: bool
    converged: bool
    trace: np.ndarray
    status: str = ""

    def to_dict(self, include_trace: bool = True):
        out = {
            "converged": self.converged,
            "status": self.status,
            "iters": self.iters,
            "energy": self.energy.to_dict(),
            "residual_norm": self.residual_norm,
            "residual_pos_norm": self.residual_pos_norm,
            "residual_neg_norm": self.residual_neg_norm,
            "nehari_gap": self.nehari_gap,
            "t_final": self.t_final,
            "t_global": self.t_global,
            "epsilon_boundary": self.epsilon_boundary,
            "primal_residual_norm": self.primal_residual_norm,
            "floor_active": self.floor_active,
            "min_v": float(np.min(self.v.values)),
            "max_v": float(np.max(self.v.values)),
            "h1_norm": float(np.sqrt(h1_norm_sq(self.v))),
        }
        if include_trace:
            out["trace"] = {
                "energy": [float(x) for x in self.trace[:, 0]],
                "residual": [float(x) for x in self.trace[:, 1]],
            }
        return out


def boundary_growth_check(v: GridFunction) -> float:
    """``min v(x) / d(x)`` over interior nodes."""
    if not np.all(v.values > 0):
        raise NonPositiveField("boundary growth needs v > 0")
    return float(np.min(v.values / boundary_distance(v.mesh).values))


def primal_residual(u: GridFunction, spec: ProblemSpec,
                    kernel: TransformKernel = KERNEL) -> GridFunction:
    """Nodal residual of the primal weak form at ``u``.

    The quasilinear operator ``-div((1 + 2u^2) grad u) + 2u |grad u|^2`` is
    discretized in its factored form ``G'(u) (-Delta_h) G(u)``, whose lumped
    weak form with nodal test functions is exactly the nodal gradient of the
    discrete ``J(u) = 1/2 ||G(u)||^2 + ...``.
    """
    vals = u.values
    if not np.all(vals > 0):
        raise NonPositiveField("primal residual needs u > 0")
    lhs = kernel.G_prime(vals) * (spec.mesh.laplacian @ kernel.G(vals))
    if isinstance(spec.case, Sublinear):
        f = spec.b_values * vals**spec.case.p
    else:
        f = -spec.b_values * vals ** (spec.case.q - 1)
    return u.with_values(lhs - spec.h_values * vals ** (-spec.gamma) - f)


def _primal_norm(v: np.ndarray, spec: ProblemSpec, kernel) -> float:
    u = GridFunction(spec.mesh, kernel.g(v))
    return discrete_l2(primal_residual(u, spec, kernel).values, spec.mesh.cell_volume)


def solve(spec: ProblemSpec, init: GridFunction | None = None,
          opts: SolveOptions | None = None, kernel: TransformKernel = KERNEL,
          check_compat: bool = True) -> SolveReport:
    """Minimize ``Phi`` over the Nehari set for ``spec``.

    Raises :class:`NoCompatibility` (without iterating) when the
    compatibility integral for the first eigenfunction diverges. A run that
    hits ``max_iters`` returns a report with ``converged=False``.
    """
    opts = opts or SolveOptions()
    validate(spec)
    if check_compat:
        rep = compat_integral(spec, None, opts.compat_levels, kernel=kernel)
        if not rep.convergent:
            raise NoCompatibility(rep)

    mesh = spec.mesh
    vol = mesh.cell_volume
    fun = DualFunctional(spec, kernel)
    solve_a = mesh.solve_laplacian
    floor = opts.floor_for(spec)

    start = init if init is not None else first_eigenfunction(mesh)[0]
    if start.mesh != mesh:
        raise ValueError("initial field lives on a different mesh")
    if not np.all(start.values > 0):
        raise NonPositiveField("initial field must be positive")
    profile = project_to_nehari(start, spec, kernel=kernel)
    t_final = profile.t_min
    v = t_final * start.values

    e, r = fun.energy_and_residual(v)
    alpha = opts.step_init
    trace = []
    converged = False
    status = "max_iters"
    iters = 0
    for iters in range(opts.max_iters + 1):
        rn = discrete_l2(r, vol)
        gap = float(r @ v) * vol
        trace.append((e.total, rn))
        floor_active = bool(np.any(v <= floor))
        if (rn <= opts.residual_tol and abs(gap) <= opts.nehari_tol
                and not e.capped and not floor_active):
            converged, status = True, "converged"
            break
        if iters == opts.max_iters:
            break
        d = solve_a(r)
        slope = float(r @ d) * vol
        noise = 1e-12 * max(1.0, abs(e.total))
        while True:
            trial = np.maximum(v - alpha * d, floor)
            et, rt = fun.energy_and_residual(trial)
            if alpha * slope > noise:
                ok = et.total <= e.total - opts.armijo_c * alpha * slope
            else:
                # Energy differences are below roundoff; fall back to the H^-1 gradient norm.
                ok = float(rt @ solve_a(rt)) * vol < slope
            if ok or alpha < 1e-14:
                break
            alpha *= opts.backtrack
        if not ok:
            status = "line_search_stalled"
            break
        v, e, r = trial, et, rt
        t, _, _ = local_projection(fun, v)
        if t != 1.0:
            t_final = t
            v = t * v
            e, r = fun.energy_and_residual(v)
        alpha = min(alpha / opts.backtrack, opts.step_max)

    v_gf = GridFunction(mesh, v)
    rn = discrete_l2(r, vol)
    t_global = project_to_nehari(v_gf, spec, kernel=kernel).t_min
    return SolveReport(
        v=v_gf,
        u=GridFunction(mesh, kernel.g(v)),
        energy=e,
        residual_norm=rn,
        residual_pos_norm=discrete_l2(np.maximum(r, 0), vol),
        residual_neg_norm=discrete_l2(np.minimum(r, 0), vol),
        nehari_gap=fun.nehari_gap(v),
        t_final=float(t_final),
        t_global=float(t_global),
        iters=iters,
        epsilon_boundary=boundary_growth_check(v_gf),
        primal_residual_norm=_primal_norm(v, spec, kernel),
        floor_active=bool(np.any(v <= floor)),
        converged=converged,
        trace=np.array(trace),
        status=status,
    )


# uniqueness


@dataclass
class UniquenessReport:
    reports: list[SolveReport]
    distances: np.ndarray
    max_distance: float
    threshold: float
    in_regime: bool
    uniqueness_pass: bool

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.reports)

    def to_dict(self):
        return {
            "n_starts": len(self.reports),
            "in_regime": self.in_regime,
            "uniqueness_pass": self.uniqueness_pass,
            "max_distance": self.max_distance,
            "threshold": self.threshold,
            "all_converged": self.all_converged,
            "distances": self.distances.tolist(),
            "starts": [r.to_dict(include_trace=False) for r in self.reports],
        }


def random_initialization(spec: ProblemSpec, rng: np.random.Generator,
                          n_modes: int = 4) -> GridFunction:
    """Positive field ``s * phi_1 * exp(sum_k a_k sin(k pi x_1) / 2)``."""
    phi1, _ = first_eigenfunction(spec.mesh)
    x = spec.mesh.coords[:, 0]
    a = rng.standard_normal(n_modes)
    bump = sum(a[k] * np.sin((k + 1) * np.pi * x) for k in range(n_modes))
    scale = 10.0 ** rng.uniform(-1, 1)
    return phi1.with_values(scale * phi1.values * np.exp(0.5 * bump))


def uniqueness_probe(spec: ProblemSpec, n_starts: int = 5, opts: SolveOptions | None = None,
                     kernel: TransformKernel = KERNEL) -> UniquenessReport:
    """Solve from ``n_starts`` seeded random starts and compare in ``H^1_0``.

    Outside the uniqueness regimes (critical type, or sublinear with
    ``b >= 0`` and condition (D)) the distances are reported but
    ``uniqueness_pass`` is not asserted (left ``False``).
    """
    opts = opts or SolveOptions()
    validate(spec)
    rng = np.random.default_rng(opts.seed)
    inits = [random_initialization(spec, rng) for _ in range(n_starts)]
    reports = [solve(spec, init, opts, kernel) for init in inits]
    k = len(reports)
    dist = np.zeros((k, k))
    for i, j in itertools.combinations(range(k), 2):
        diff = reports[i].v.with_values(reports[i].v.values - reports[j].v.values)
        dist[i, j] = dist[j, i] = np.sqrt(max(h1_norm_sq(diff), 0.0))
    threshold = 1e3 * opts.residual_tol
    max_d = float(dist.max()) if k > 1 else 0.0
    regime = in_uniqueness_regime(spec)
    ok = regime and all(r.converged for r in reports) and max_d <= threshold
    return UniquenessReport(reports, dist, max_d, threshold, regime, bool(ok))


# lambda continuation


@dataclass
class SweepReport:
    lambdas: np.ndarray
    energies: np.ndarray
    h1_dist: np.ndarray
    min_gap: np.ndarray
    reports: list[SolveReport]
    monotone_ordering: bool
    energy_decreasing: bool
    h1_convergence: bool
    ordering_tol: float
    h1_tol: float

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.reports)

    def to_csv(self) -> str:
        lines = ["lambda,energy,h1_dist,min_gap"]
        for row in zip(self.lambdas, self.energies, self.h1_dist, self.min_gap):
            lines.append(",".join(f"{x:.17g}" for x in row))
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {
            "lambdas": self.lambdas.tolist(),
            "energies": self.energies.tolist(),
            "h1_dist": self.h1_dist.tolist(),
            "min_gap": self.min_gap.tolist(),
            "monotone_ordering": self.monotone_ordering,
            "energy_decreasing": self.energy_decreasing,
            "h1_convergence": self.h1_convergence,
            "ordering_tol": self.ordering_tol,
            "h1_tol": self.h1_tol,
            "all_converged": self.all_converged,
            "solves": [r.to_dict(include_trace=False) for r in self.reports],
        }


def sweep_lambda(spec: ProblemSpec, lambdas, opts: SolveOptions | None = None,
                 kernel: TransformKernel = KERNEL, ordering_tol: float = 1e-10,
                 energy_tol: float = 1e-12, h1_tol: float = 1e-3) -> SweepReport:
    """Solve the family ``b -> lam * b`` over ``lambdas`` (which must contain 0).

    Solves run in descending ``lam`` and warm-start from the previous
    solution; results are returned in ascending ``lam``.
    """
    opts = opts or SolveOptions()
    lams = np.unique(np.asarray(lambdas, dtype=float))
    if lams.size == 0 or lams[0] != 0.0:
        raise ValueError("the lambda grid must include 0")
    if np.any(lams < 0):
        raise ValueError("lambda values must be non-negative")
    if not isinstance(spec.case, Sublinear):
        raise ValueError("the lambda family is defined for the sublinear case")
    if np.any(spec.case.b.evaluate(spec.mesh) < 0):
        raise ValueError("the lambda family needs b >= 0")

    by_lam = {}
    prev = None
    for lam in lams[::-1]:
        rep = solve(spec.replace(lam=float(lam)), prev, opts, kernel)
        by_lam[float(lam)] = rep
        prev = rep.v
    reports = [by_lam[float(lam)] for lam in lams]
    v0 = reports[0].v
    energies = np.array([r.energy.total for r in reports])
    h1 = np.array([np.sqrt(max(h1_norm_sq(r.v.with_values(r.v.values - v0.values)), 0.0))
                   for r in reports])
    gaps = np.array([float(np.min(r.v.values - v0.values)) for r in reports])

    positive = lams > 0
    monotone = bool(np.all(gaps[positive] >= -ordering_tol))
    decreasing = bool(np.all(np.diff(energies) < -energy_tol))
    if positive.sum() == 0:
        h1_ok = True
    else:
        hp = h1[positive]
        h1_ok = bool(np.all(np.diff(hp) > 0) and hp[0] < h1_tol)
    return SweepReport(lams, energies, h1, gaps, reports, monotone, decreasing, h1_ok,
                       ordering_tol, h1_tol)
