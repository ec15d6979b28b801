"""Fiber maps ``phi_v(t) = Phi(t v)`` and projection onto the Nehari set.

Under the compatibility condition ``phi_v`` blows up at both ends of
``(0, inf)``, so it attains its infimum at some interior ``t(v)``; then
``t(v) v`` lies on N2. :func:`project_to_nehari` locates the global minimum by
a log-spaced scan and polishes the stationary point with a safeguarded
Newton-bisection on ``phi_v'``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .energy import DualFunctional
from .errors import NoInteriorMinimum, NonPositiveT
from .grid import GridFunction
from .problem import ProblemSpec
from .transform import KERNEL, TransformKernel

SINGLE_MIN = "SingleMin"
MULTI_CRITICAL = "MultiCritical"


@dataclass
class FiberProfile:
    t_samples: np.ndarray
    phi_values: np.ndarray
    phi_prime_values: np.ndarray
    t_min: float
    phi_min: float
    phi_prime_min: float
    bracket: tuple[float, float]
    shape: str = SINGLE_MIN
    critical_brackets: list[tuple[float, float]] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["t,phi,phi_prime"]
        for t, p, dp in zip(self.t_samples, self.phi_values, self.phi_prime_values):
            lines.append(f"{t:.17g},{p:.17g},{dp:.17g}")
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {
            "t_min": self.t_min,
            "phi_min": self.phi_min,
            "phi_prime_min": self.phi_prime_min,
            "bracket": list(self.bracket),
            "shape": self.shape,
            "critical_brackets": [list(b) for b in self.critical_brackets],
            "n_scan": int(self.t_samples.size),
        }


def _functional(v: GridFunction, spec: ProblemSpec, kernel) -> DualFunctional:
    if v.mesh != spec.mesh:
        raise ValueError("field and spec live on different meshes")
    return DualFunctional(spec, kernel)


def _check_t(t):
    if not t > 0:
        raise NonPositiveT(f"fiber parameter must be positive, got {t}")


def phi(v: GridFunction, t: float, spec: ProblemSpec, kernel: TransformKernel = KERNEL) -> float:
    """``Phi(t v)``."""
    _check_t(t)
    return _functional(v, spec, kernel).energy(t * v.values).total


def phi_prime(v: GridFunction, t: float, spec: ProblemSpec,
              kernel: TransformKernel = KERNEL) -> float:
    """``t ||v||^2 - int h g(tv)^(-gamma) g'(tv) v - int f(g(tv)) g'(tv) v``."""
    _check_t(t)
    return _functional(v, spec, kernel).fiber_parts(v.values, t)[1]


def fiber_tolerance(fun: DualFunctional, vals) -> float:
    norm_sq = float(vals @ (fun.A @ vals)) * fun.vol
    return 1e-10 * max(1.0, norm_sq)


def refine_stationary(fun: DualFunctional, vals, lo: float, hi: float, tol: float,
                      max_iter: int = 200) -> tuple[float, float, float]:
    """Root of ``phi'`` in ``[lo, hi]`` where ``phi'(lo) < 0 < phi'(hi)``.

    Newton steps are taken when they stay inside the bracket, otherwise the
    bracket is bisected geometrically. Returns ``(t, phi(t), phi'(t))``.
    """
    t = np.sqrt(lo * hi)
    for _ in range(max_iter):
        p, dp, d2p = fun.fiber_parts(vals, t, order=2)
        if abs(dp) <= tol:
            return t, p, dp
        if dp < 0:
            lo = t
        else:
            hi = t
        if hi - lo <= 4 * np.spacing(hi):
            return t, p, dp
        step = t - dp / d2p if d2p > 0 else -1.0
        t = step if lo < step < hi else np.sqrt(lo * hi)
    return t, p, dp


def _sign_changes(dp: np.ndarray, t: np.ndarray):
    s = np.sign(dp)
    nz = np.nonzero(s)[0]
    flips = [(float(t[i]), float(t[j])) for i, j in zip(nz[:-1], nz[1:]) if s[i] != s[j]]
    return flips


def project_to_nehari(v: GridFunction, spec: ProblemSpec, t_range=(1e-6, 1e6),
                      n_scan: int = 241, kernel: TransformKernel = KERNEL) -> FiberProfile:
    """Globally minimize ``phi_v`` over ``t > 0``; ``t_min v`` lies on N2."""
    fun = _functional(v, spec, kernel)
    vals = v.values
    ts = np.logspace(np.log10(t_range[0]), np.log10(t_range[1]), n_scan)
    scan = np.array([fun.fiber_parts(vals, t) for t in ts])
    p, dp = scan[:, 0], scan[:, 1]
    i = int(np.argmin(p))  # first index: ties go to the smaller t
    if i == 0 or i == n_scan - 1:
        raise NoInteriorMinimum(
            f"fiber scan minimum at the edge t = {ts[i]:.3g} of [{ts[0]:.3g}, {ts[-1]:.3g}]"
        )
    tol = fiber_tolerance(fun, vals)
    if dp[i] > 0:
        lo, hi = ts[i - 1], ts[i]
    else:
        lo, hi = ts[i], ts[i + 1]
    if abs(dp[i]) <= tol:
        t_min, p_min, dp_min = ts[i], p[i], dp[i]
    elif fun.fiber_parts(vals, lo)[1] < 0 < fun.fiber_parts(vals, hi)[1]:
        t_min, p_min, dp_min = refine_stationary(fun, vals, lo, hi, tol)
    else:
        lo, hi = ts[i - 1], ts[i + 1]
        t_min, p_min, dp_min = refine_stationary(fun, vals, lo, hi, tol)
    profile = FiberProfile(ts, p, dp, float(t_min), float(p_min), float(dp_min),
                           (float(lo), float(hi)),
                           critical_brackets=_sign_changes(dp, ts))
    profile.shape = classify_shape(profile)
    return profile


def local_projection(fun: DualFunctional, vals, t0: float = 1.0, max_expand: int = 60):
    """Stationary point of ``phi_v`` reached by bracketing outward from ``t0``.

    Used inside descent loops where ``t(v)`` stays close to 1 between
    steps; returns ``t0`` unchanged if the polished point does not lower
    ``phi_v``.
    """
    tol = fiber_tolerance(fun, vals)
    p0, dp0 = fun.fiber_parts(vals, t0)
    if abs(dp0) <= tol:
        return t0, p0, dp0
    factor = 1.0 + 1e-3
    inner = t0
    for _ in range(max_expand):
        outer = inner * factor if dp0 < 0 else inner / factor
        dpo = fun.fiber_parts(vals, outer)[1]
        if np.sign(dpo) != np.sign(dp0):
            break
        inner, factor = outer, factor * factor
    else:
        raise NoInteriorMinimum("no stationary point of the fiber map near the current iterate")
    lo, hi = (inner, outer) if dp0 < 0 else (outer, inner)
    t, p, dp = refine_stationary(fun, vals, lo, hi, tol)
    if p > p0:
        return t0, p0, dp0
    return t, p, dp


def classify_shape(profile: FiberProfile) -> str:
    """One sign change of ``phi'`` on the scan means a single minimum."""
    flips = _sign_changes(profile.phi_prime_values, profile.t_samples)
    return SINGLE_MIN if len(flips) <= 1 else MULTI_CRITICAL
