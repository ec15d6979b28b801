"""Dual change of variables ``u = g(v)``.

``g`` solves ``g'(t) = (1 + 2 g(t)^2)^(-1/2)`` with ``g(0) = 0`` and is odd.
It has no closed form, but its inverse does::

    G(s) = (s/2) sqrt(1 + 2 s^2) + arsinh(sqrt(2) s) / (2 sqrt(2)),   G' = sqrt(1 + 2 s^2)

so ``g`` is evaluated by safeguarded Newton iteration on ``G(s) = t``.
Every routine preserves the floating dtype of its input, which lets the
verification suite run in ``np.longdouble`` where round-trip errors below
the double-precision resolution of ``t`` are required.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonConvergence

__all__ = [
    "TransformKernel",
    "PropertyCheck",
    "PropertyReport",
    "KERNEL",
    "verify_properties",
]


def _as_float_array(x, dtype=None):
    arr = np.asarray(x)
    if dtype is not None:
        return arr.astype(dtype, copy=False)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float64)
    return arr


def _unwrap(arr, like):
    # Scalars in, scalars out.
    if np.ndim(like) == 0:
        return arr[()]
    return arr


@dataclass(frozen=True)
class TransformKernel:
    """Evaluator for ``g``, its first two derivatives and its inverse ``G``.

    Parameters
    ----------
    newton_tol : float
        Tolerance on ``|G(s) - t|``, applied as ``newton_tol * max(1, |t|)``
        (absolute for ``|t| <= 1``, scaled by ``|t|`` beyond).
    max_newton_iters : int
        Iteration budget; exceeding it raises :class:`NonConvergence`.
    series_switch : float
        Below this ``|t|`` the seed is the expansion ``t - t^3/3``.
    """

    newton_tol: float = 1e-13
    max_newton_iters: int = 60
    series_switch: float = 1e-4

    def __post_init__(self):
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if self.max_newton_iters < 8:
            raise ValueError("max_newton_iters must be at least 8")
        if not self.series_switch >= 0:
            raise ValueError("series_switch must be non-negative")

    # constants

    @property
    def K0(self) -> float:
        """Sharp constant in ``|g(t)| <= K0 |t|^(1/2)``; equals ``2**0.25``."""
        return 2.0**0.25

    @property
    def lower_constant(self) -> float:
        """``C = g(1)``: ``g(t) >= C t`` on ``(0, 1]`` and ``g(t) >= C sqrt(t)`` beyond."""
        return float(self.g(1.0))

    # inverse map

    def G(self, s):
        """Closed-form inverse ``G = g^{-1}``."""
        s = _as_float_array(s)
        two = s.dtype.type(2)
        r2 = np.sqrt(two)
        out = 0.5 * s * np.sqrt(1 + two * s * s) + np.arcsinh(r2 * s) / (2 * r2)
        return _unwrap(out, s)

    def G_prime(self, s):
        s = _as_float_array(s)
        out = np.sqrt(1 + 2 * s * s)
        return _unwrap(out, s)

    # forward map

    def g(self, t):
        """Return ``g(t)``: the unique ``s`` with ``G(s) = t``."""
        t = _as_float_array(t)
        if not np.all(np.isfinite(t)):
            raise ValueError("g requires finite arguments")
        a = np.abs(t).ravel()
        dt = a.dtype.type
        c4 = np.sqrt(np.sqrt(dt(2)))
        s = np.minimum(a, c4 * np.sqrt(a))
        small = a < self.series_switch
        s[small] = a[small] - a[small] ** 3 / 3
        lo = np.zeros_like(a)
        hi = np.maximum(a, c4 * np.sqrt(a) + 1)
        tol = dt(self.newton_tol) * np.maximum(dt(1), a)

        # Each node is frozen once converged, so results do not depend on batch.
        active = np.arange(a.size)
        for _ in range(self.max_newton_iters):
            sa = s[active]
            res = self.G(sa) - a[active]
            done = np.abs(res) <= tol[active]
            # One polishing step on freshly converged nodes drives the residual to roundoff.
            fin = active[done]
            polished = sa[done] - res[done] / self.G_prime(sa[done])
            ok = (polished >= lo[fin]) & (polished <= hi[fin])
            s[fin] = np.where(ok, polished, sa[done])
            if np.all(done):
                active = active[:0]
                break
            keep = ~done
            active, sa, res = active[keep], sa[keep], res[keep]
            above = res > 0
            hi[active] = np.where(above, sa, hi[active])
            lo[active] = np.where(above, lo[active], sa)
            step = sa - res / self.G_prime(sa)
            inside = (step > lo[active]) & (step < hi[active])
            s[active] = np.where(inside, step, 0.5 * (lo[active] + hi[active]))
        if active.size:
            raise NonConvergence(
                f"Newton inversion of G failed for {active.size} argument(s), "
                f"e.g. t = {a[active[0]]!r}"
            )
        out = np.copysign(s, t.ravel()).reshape(t.shape)
        return _unwrap(out, t)

    def g_prime(self, t):
        """``g'(t) = (1 + 2 g(t)^2)^(-1/2)``, in ``(0, 1]``."""
        gt = _as_float_array(self.g(t))
        return _unwrap(1 / np.sqrt(1 + 2 * gt * gt), gt)

    def g_second(self, t):
        """``g''(t) = -2 g(t) (1 + 2 g(t)^2)^(-2)``."""
        gt = _as_float_array(self.g(t))
        q = 1 + 2 * gt * gt
        return _unwrap(-2 * gt / (q * q), gt)

    def derivatives(self, t):
        """Return ``(g, g', g'')`` at ``t`` with a single inversion."""
        gt = _as_float_array(self.g(t))
        q = 1 + 2 * gt * gt
        gp = 1 / np.sqrt(q)
        gpp = -2 * gt / (q * q)
        return _unwrap(gt, gt), _unwrap(gp, gt), _unwrap(gpp, gt)

    def one_minus_g_prime(self, t):
        """``1 - g'(t)`` without cancellation near ``t = 0``."""
        gt = _as_float_array(self.g(t))
        w = 2 * gt * gt
        root = np.sqrt(1 + w)
        return _unwrap(w / (root * (1 + root)), gt)


KERNEL = TransformKernel()


@dataclass
class PropertyCheck:
    item: int
    description: str
    passed: bool
    margin: float

    def to_dict(self):
        return {
            "item": self.item,
            "description": self.description,
            "passed": bool(self.passed),
            "margin": float(self.margin),
        }


@dataclass
class PropertyReport:
    checks: list[PropertyCheck]
    n_samples: int
    t_max: float
    seed: int
    dtype: str
    K0_estimate: float
    roundtrip_abs_max: float
    roundtrip_scaled_max: float
    inverse_roundtrip_scaled_max: float
    g_second_fd_max_rel: float
    details: dict = field(default_factory=dict)

    @property
    def n_passed(self) -> int:
        return sum(c.passed for c in self.checks)

    @property
    def all_passed(self) -> bool:
        return self.n_passed == len(self.checks)

    def to_dict(self):
        return {
            "n_samples": self.n_samples,
            "t_max": self.t_max,
            "seed": self.seed,
            "dtype": self.dtype,
            "n_passed": self.n_passed,
            "n_checks": len(self.checks),
            "all_passed": self.all_passed,
            "K0_estimate": float(self.K0_estimate),
            "K0": 2.0**0.25,
            "roundtrip_abs_max": float(self.roundtrip_abs_max),
            "roundtrip_scaled_max": float(self.roundtrip_scaled_max),
            "inverse_roundtrip_scaled_max": float(self.inverse_roundtrip_scaled_max),
            "g_second_fd_max_rel": float(self.g_second_fd_max_rel),
            "checks": [c.to_dict() for c in self.checks],
        }


def _min_or_inf(x):
    return float(np.min(x)) if np.size(x) else float("inf")


def _strictly_decreasing_margin(values):
    # Smallest relative drop between consecutive entries (positive = strict decrease).
    v = np.asarray(values)
    drop = (v[:-1] - v[1:]) / np.maximum(np.abs(v[:-1]), np.finfo(v.dtype).tiny)
    return _min_or_inf(drop)


def verify_properties(
    n_samples: int = 10_000,
    t_max: float = 1e6,
    seed: int = 0,
    kernel: TransformKernel = KERNEL,
    dtype=np.float64,
) -> PropertyReport:
    """Check the twelve structural properties of ``g`` on random samples.

    Samples are log-uniform on ``(1e-8, t_max)`` together with their
    reflections. Each item reports ``passed`` and a worst-case margin whose
    sign agrees with the verdict.
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    if not t_max > 1:
        raise ValueError("t_max must exceed 1 so that both branches of item 8 are sampled")
    dtype = np.dtype(dtype)
    dt = dtype.type
    eps = np.finfo(dtype).eps
    slack = 8 * eps

    rng = np.random.default_rng(seed)
    t = np.sort(np.exp(rng.uniform(np.log(1e-8), np.log(t_max), n_samples))).astype(dtype)
    t = np.unique(t)
    g, gp, gpp = kernel.derivatives(t)
    gm, gpm, gppm = kernel.derivatives(-t)
    tol = dt(kernel.newton_tol)
    checks = []

    # (1) well-defined, smooth, invertible
    rt = np.abs(kernel.G(g) - t)
    rt_scaled = rt / np.maximum(dt(1), t)
    s = np.exp(rng.uniform(np.log(1e-8), np.log(float(np.max(g))), n_samples)).astype(dtype)
    inv_scaled = np.abs(kernel.g(kernel.G(s)) - s) / np.maximum(dt(1), s)
    monotone = _min_or_inf(np.diff(g)) > 0
    odd = bool(np.all(gm == -g))
    step = dt(1e-5) * np.maximum(dt(1), t)
    lo = t - step
    fd = (kernel.one_minus_g_prime(lo) - kernel.one_minus_g_prime(t + step)) / (2 * step)
    fd_rel = np.abs(fd - gpp) / np.abs(gpp)
    margin1 = min(
        float(tol - np.max(rt_scaled)),
        float(10 * tol - np.max(inv_scaled)),
        float(1e-6 - np.max(fd_rel)),
    )
    checks.append(PropertyCheck(
        1, "g is well defined, smooth and invertible (round trips, monotone, odd, g'' matches FD)",
        bool(margin1 >= 0 and monotone and odd), margin1,
    ))

    # (2)
    g0 = kernel.g(dt(0))
    checks.append(PropertyCheck(2, "g(0) = 0", bool(g0 == 0), -float(abs(g0))))

    # (3)
    allgp = np.concatenate([gp, gpm])
    m3 = min(_min_or_inf(allgp), _min_or_inf(1 - allgp))
    checks.append(PropertyCheck(3, "0 < g'(t) <= 1", bool(np.all(allgp > 0) and m3 >= 0), m3))

    # (4)
    tg = t * gp
    m4 = min(_min_or_inf((tg - g / 2) / g), _min_or_inf((g - tg) / g + slack))
    checks.append(PropertyCheck(4, "g/2 <= t g' <= g for t > 0", bool(m4 >= 0), m4))

    # (5)
    m5 = _min_or_inf((t - g) / t + slack)
    checks.append(PropertyCheck(5, "|g(t)| <= |t|", bool(m5 >= 0), m5))

    # (6)
    bound6 = 2.0**0.25 + 1e-9
    ratio6 = g / np.sqrt(t)
    m6 = float(bound6 - np.max(ratio6))
    checks.append(PropertyCheck(6, "|g(t)| <= K0 |t|^(1/2), K0 = 2^(1/4)", bool(m6 >= 0), m6))

    # (7)
    m7 = _min_or_inf(g * g - g * gp * t + 1e-12)
    checks.append(PropertyCheck(7, "g^2 - g g' t >= 0", bool(m7 >= 0), m7))

    # (8)
    c8 = kernel.g(dt(1))
    below = t <= 1
    r8 = np.where(below, g / (c8 * t), g / (c8 * np.sqrt(t))) - 1 + slack
    m8 = _min_or_inf(r8)
    checks.append(PropertyCheck(8, "g(t) >= C t on (0,1], g(t) >= C t^(1/2) beyond, C = g(1)",
                                bool(m8 >= 0), m8))

    # (9)
    m9 = min(_min_or_inf(-gpp), _min_or_inf(gppm))
    checks.append(PropertyCheck(9, "g'' < 0 for t > 0 and g'' > 0 for t < 0",
                                bool(np.all(gpp < 0) and np.all(gppm > 0)), float(m9)))

    # pairs for the monotonicity items
    keep = np.concatenate([[True], t[1:] > t[:-1] * (1 + 1e-9)])
    tp, gpairs = t[keep], g[keep]

    # (10)
    margins10 = []
    for gamma in (1.5, 2.0, 3.0):
        margins10.append(_strictly_decreasing_margin(gpairs ** dt(1 - gamma)))
        margins10.append(_strictly_decreasing_margin(gpairs ** dt(-gamma)))
    m10 = min(margins10)
    checks.append(PropertyCheck(10, "g^(1-gamma) and g^(-gamma) decreasing, gamma in {1.5, 2, 3}",
                                bool(m10 > 0), m10))

    # (11)
    m11 = min(_strictly_decreasing_margin(gpairs ** dt(p) / tp) for p in (0.25, 0.5, 0.9))
    checks.append(PropertyCheck(11, "g^p / t decreasing, p in {0.25, 0.5, 0.9}", bool(m11 > 0), m11))

    # (12)
    prod = np.abs(np.concatenate([g * gp, gm * gpm]))
    m12 = float(1 / np.sqrt(dt(2)) - np.max(prod))
    checks.append(PropertyCheck(12, "|g g'| < 1/sqrt(2)", bool(m12 > 0), m12))

    return PropertyReport(
        checks=checks,
        n_samples=int(t.size),
        t_max=float(t_max),
        seed=int(seed),
        dtype=str(dtype),
        K0_estimate=float(np.max(ratio6)),
        roundtrip_abs_max=float(np.max(rt)),
        roundtrip_scaled_max=float(np.max(rt_scaled)),
        inverse_roundtrip_scaled_max=float(np.max(inv_scaled)),
        g_second_fd_max_rel=float(np.max(fd_rel)),
    )
