"""Problem specifications, hypothesis validation and integrability checks.

The primal problem is::

    -Delta u - Delta(u^2) u = h(x) u^(-gamma) + f(x, u),   u > 0,   u = 0 on the boundary

with ``gamma > 1`` and either ``f = b u^p`` (sublinear, ``0 < p < 1``) or
``f = -b u^(q-1)`` (critical type, ``b >= 0``). The coefficient ``b`` is
multiplied by the continuation parameter ``lam`` throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Union

import numpy as np

from .errors import InvalidSpec, NonPositiveField
from .grid import (
    GridFunction,
    Mesh,
    boundary_distance,
    first_eigenfunction_values,
    integrate,
    resample,
)
from .transform import KERNEL, TransformKernel

DELTA_DIV = 0.05

SURROGATE_NOTE = (
    "refinement-trend surrogate: an integral is called divergent when the lumped "
    "estimate still grows by at least delta_div over each of the last two mesh doublings"
)


# coefficients


@dataclass(frozen=True)
class PowerOfDistance:
    """``h(x) = c * d(x)^sigma``."""

    c: float = 1.0
    sigma: float = 0.0

    def evaluate(self, mesh: Mesh) -> np.ndarray:
        return self.c * boundary_distance(mesh).values ** self.sigma

    def describe(self):
        return {"kind": "power", "c": self.c, "sigma": self.sigma}


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Nodal values on some mesh; other meshes get multilinear interpolation."""

    field: GridFunction
    label: str = "tabulated"

    def evaluate(self, mesh: Mesh) -> np.ndarray:
        return resample(self.field, mesh).values

    def describe(self):
        return {"kind": self.label, "n": self.field.mesh.n_per_axis}


@dataclass(frozen=True)
class Constant:
    value: float = 1.0

    def evaluate(self, mesh: Mesh) -> np.ndarray:
        return np.full(mesh.size, float(self.value))

    def describe(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class Cosine:
    """Sign-changing ``b(x) = value * cos(2 pi x_1)``."""

    value: float = 1.0

    def evaluate(self, mesh: Mesh) -> np.ndarray:
        return self.value * np.cos(2 * np.pi * mesh.coords[:, 0])

    def describe(self):
        return {"kind": "cosine", "value": self.value}


Coefficient = Union[PowerOfDistance, Tabulated, Constant, Cosine]


@dataclass(frozen=True)
class Sublinear:
    """``f(x, s) = b(x) s^p`` with ``0 < p < 1``."""

    p: float
    b: Coefficient = Constant(1.0)

    tag = "sublinear"


@dataclass(frozen=True)
class CriticalType:
    """``f(x, s) = -b(x) s^(q-1)`` with ``b >= 0`` and ``q > 2``."""

    q: float
    b: Coefficient = Constant(1.0)

    tag = "critical"


NonlinearityCase = Union[Sublinear, CriticalType]


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    gamma: float
    h_spec: Coefficient
    case: NonlinearityCase
    mesh: Mesh
    lam: float = 1.0

    @cached_property
    def h_values(self) -> np.ndarray:
        return self.h_spec.evaluate(self.mesh)

    @cached_property
    def b_values(self) -> np.ndarray:
        """Effective coefficient ``lam * b`` on the working mesh."""
        return self.lam * self.case.b.evaluate(self.mesh)

    @property
    def exponent(self) -> float:
        return self.case.p if isinstance(self.case, Sublinear) else self.case.q

    def replace(self, **changes) -> "ProblemSpec":
        kw = dict(gamma=self.gamma, h_spec=self.h_spec, case=self.case,
                  mesh=self.mesh, lam=self.lam)
        kw.update(changes)
        return ProblemSpec(**kw)

    def describe(self) -> dict:
        key = "p" if isinstance(self.case, Sublinear) else "q"
        return {
            "dimension": self.mesh.dimension,
            "n": self.mesh.n_per_axis,
            "gamma": self.gamma,
            "lambda": self.lam,
            "h": self.h_spec.describe(),
            "case": self.case.tag,
            key: self.exponent,
            "b": self.case.b.describe(),
        }


# validation


@dataclass
class ValidationReport:
    valid: bool
    condition_d: bool | None
    notes: list[str] = field(default_factory=list)

    def to_dict(self):
        return {"valid": self.valid, "condition_d": self.condition_d, "notes": list(self.notes)}


def boundary_exponent(values: np.ndarray, mesh: Mesh) -> float:
    """Estimate ``sigma`` in ``h ~ d^sigma`` from the two node layers nearest the boundary."""
    d = boundary_distance(mesh).values
    k = np.rint(d / mesh.spacing)
    h1 = np.max(values[k == 1])
    h2 = np.max(values[k == 2])
    return float(np.log2(h2 / h1))


def validate(spec: ProblemSpec) -> ValidationReport:
    """Check the standing hypotheses; raise :class:`InvalidSpec` naming the first violation."""
    notes = []
    if not (np.isfinite(spec.gamma) and spec.gamma > 1):
        raise InvalidSpec("gamma", f"requires gamma > 1, got {spec.gamma}")
    if not (np.isfinite(spec.lam) and spec.lam >= 0):
        raise InvalidSpec("lambda", f"requires lambda >= 0, got {spec.lam}")

    h = spec.h_spec
    if isinstance(h, PowerOfDistance):
        if not h.c > 0:
            raise InvalidSpec("h", f"requires c > 0, got {h.c}")
        if not h.sigma > -1:
            raise InvalidSpec("h", f"d^sigma is integrable only for sigma > -1, got {h.sigma}")
        condition_d = bool(h.sigma > spec.gamma - 1)
    else:
        hv = spec.h_values
        if not (np.all(np.isfinite(hv)) and np.all(hv > 0)):
            raise InvalidSpec("h", "tabulated h must be finite and strictly positive")
        sigma_est = boundary_exponent(hv, spec.mesh)
        condition_d = bool(sigma_est > spec.gamma - 1)
        notes.append(f"condition (D), sigma > gamma - 1, decided from the estimated boundary exponent {sigma_est:.4f}")

    b = spec.case.b.evaluate(spec.mesh)
    if not np.all(np.isfinite(b)):
        raise InvalidSpec("b", "b must be bounded")
    if isinstance(spec.case, Sublinear):
        if not 0 < spec.case.p < 1:
            raise InvalidSpec("p", f"requires 0 < p < 1, got {spec.case.p}")
        if np.all(b == 0):
            notes.append("b == 0: semilinear singular problem without source term")
        elif not np.any(b > 0):
            raise InvalidSpec("b", "positive part of b vanishes identically")
        if spec.lam == 0:
            notes.append("lambda = 0 switches the source term off")
        if np.any(b < 0):
            notes.append("sign-changing b: outside the uniqueness regime")
    else:
        if not spec.case.q > 2:
            raise InvalidSpec("q", f"requires q > 2, got {spec.case.q}")
        if np.any(b < 0):
            raise InvalidSpec("b", "critical-type case requires b >= 0")
    return ValidationReport(True, condition_d, notes)


def in_uniqueness_regime(spec: ProblemSpec) -> bool:
    """Critical type, or sublinear with ``b >= 0`` and condition (D)."""
    if isinstance(spec.case, CriticalType):
        return True
    report = validate(spec)
    b = spec.case.b.evaluate(spec.mesh)
    if np.any(b < 0):
        return False
    return bool(report.condition_d)


# compatibility integrals


@dataclass
class CompatReport:
    integrand: str
    n_per_axis: list[int]
    estimates: list[float]
    ratios: list[float]
    classification: str
    delta_div: float = DELTA_DIV
    note: str = SURROGATE_NOTE

    @property
    def convergent(self) -> bool:
        return self.classification == "convergent"

    def to_dict(self):
        return {
            "integrand": self.integrand,
            "n_per_axis": list(self.n_per_axis),
            "estimates": [float(x) for x in self.estimates],
            "ratios": [float(x) for x in self.ratios],
            "classification": self.classification,
            "delta_div": self.delta_div,
            "note": self.note,
        }


INTEGRANDS = {
    "a": "h |v|^(1-gamma)",
    "b": "h g(v)^(-gamma) g'(v) v",
    "c": "h g(v)^(1-gamma)",
}

FieldLike = Union[GridFunction, Callable[[np.ndarray], np.ndarray], None]


def _field_on(v: FieldLike, mesh: Mesh) -> np.ndarray:
    if v is None:
        return first_eigenfunction_values(mesh.coords)
    if isinstance(v, GridFunction):
        return resample(v, mesh).values
    return np.asarray(v(mesh.coords), dtype=np.float64)


def _integrand(kind: str, spec: ProblemSpec, mesh: Mesh, v: np.ndarray,
               kernel: TransformKernel) -> np.ndarray:
    h = spec.h_spec.evaluate(mesh)
    gamma = spec.gamma
    if kind == "a":
        return h * np.exp((1 - gamma) * np.log(v))
    gv, gp, _ = kernel.derivatives(v)
    if kind == "b":
        return h * np.exp(-gamma * np.log(gv)) * gp * v
    if kind == "c":
        return h * np.exp((1 - gamma) * np.log(gv))
    raise ValueError(f"unknown integrand {kind!r}")


def compat_integral(spec: ProblemSpec, v: FieldLike = None, levels: int = 4,
                    integrand: str = "a", kernel: TransformKernel = KERNEL,
                    delta_div: float = DELTA_DIV) -> CompatReport:
    """Classify ``int h |v|^(1-gamma)`` (or a dual variant) by mesh refinement.

    ``v`` may be ``None`` (the first eigenfunction, re-sampled exactly), a
    callable of node coordinates, or a :class:`GridFunction` (re-sampled by
    multilinear interpolation). The working mesh is ``spec.mesh`` and each
    further level halves the spacing.
    """
    if levels < 3:
        raise ValueError("levels must be at least 3")
    base = _field_on(v, spec.mesh)
    if np.any(~(base > 0)):
        raise NonPositiveField("compatibility integrals need v > 0 on interior nodes")
    mesh = spec.mesh
    ns, est = [], []
    for _ in range(levels):
        vals = _field_on(v, mesh)
        if np.any(~(vals > 0)):
            raise NonPositiveField(f"re-sampled v is not positive on the n={mesh.n_per_axis} mesh")
        ns.append(mesh.n_per_axis)
        est.append(integrate(mesh.field(_integrand(integrand, spec, mesh, vals, kernel))))
        mesh = mesh.refined()
    ratios = [b / a for a, b in zip(est[:-1], est[1:])]
    divergent = all(r >= 1 + delta_div for r in ratios[-2:])
    return CompatReport(INTEGRANDS[integrand], ns, est, ratios,
                        "divergent" if divergent else "convergent", delta_div)


def classify_duality(spec: ProblemSpec, v: FieldLike = None, levels: int = 4,
                     kernel: TransformKernel = KERNEL):
    """Classify the three equivalent integrability conditions (a), (b), (c)."""
    return tuple(compat_integral(spec, v, levels, kind, kernel) for kind in "abc")


# manufactured problem


def manufactured_h(mesh: Mesh, gamma: float, kernel: TransformKernel = KERNEL) -> Tabulated:
    """``h*`` making ``v* = phi_1`` an exact solution when ``b = 0``.

    From ``-Delta phi_1 = N pi^2 phi_1``: ``h* = N pi^2 phi_1 g(phi_1)^gamma / g'(phi_1)``.
    """
    phi = first_eigenfunction_values(mesh.coords)
    gv, gp, _ = kernel.derivatives(phi)
    h = mesh.dimension * np.pi**2 * phi * gv**gamma / gp
    return Tabulated(GridFunction(mesh, h), label="manufactured")


def manufactured_spec(n: int, gamma: float, dimension: int = 1,
                      kernel: TransformKernel = KERNEL) -> ProblemSpec:
    mesh = Mesh(dimension, n)
    return ProblemSpec(gamma, manufactured_h(mesh, gamma, kernel),
                       Sublinear(0.5, Constant(0.0)), mesh, lam=1.0)


# spec files

_KEYS = {"dimension", "n", "gamma", "lambda", "h.kind", "h.c", "h.sigma",
         "case", "p", "q", "b.kind", "b.value"}


def _parse_pairs(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidSpec("syntax", f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key not in _KEYS:
            raise InvalidSpec("key", f"unknown key {key!r} on line {lineno}")
        out[key] = value
    return out


def _number(pairs, key, default=None, cast=float):
    if key not in pairs:
        if default is None:
            raise InvalidSpec(key, "missing required key")
        return default
    try:
        return cast(pairs[key])
    except ValueError:
        raise InvalidSpec(key, f"cannot parse {pairs[key]!r}") from None


def spec_from_pairs(pairs: dict[str, str], kernel: TransformKernel = KERNEL) -> ProblemSpec:
    dim = _number(pairs, "dimension", 1, int)
    n = _number(pairs, "n", 1023 if dim == 1 else 15, int)
    try:
        mesh = Mesh(dim, n)
    except ValueError as exc:
        raise InvalidSpec("mesh", str(exc)) from None
    gamma = _number(pairs, "gamma")
    lam = _number(pairs, "lambda", 1.0)

    bkind = pairs.get("b.kind", "constant").lower()
    bval = _number(pairs, "b.value", 1.0)
    if bkind == "constant":
        b = Constant(bval)
    elif bkind == "cosine":
        b = Cosine(bval)
    else:
        raise InvalidSpec("b.kind", f"expected constant or cosine, got {bkind!r}")

    case = pairs.get("case", "").lower()
    if case in ("sublinear", "f1"):
        nonlin = Sublinear(_number(pairs, "p"), b)
    elif case in ("critical", "f2"):
        nonlin = CriticalType(_number(pairs, "q", 12.0 if dim == 3 else None), b)
    else:
        raise InvalidSpec("case", f"expected sublinear or critical, got {case!r}")

    hkind = pairs.get("h.kind", "power").lower()
    if hkind == "power":
        h = PowerOfDistance(_number(pairs, "h.c", 1.0), _number(pairs, "h.sigma"))
    elif hkind == "manufactured":
        h = manufactured_h(mesh, gamma, kernel)
    else:
        raise InvalidSpec("h.kind", f"expected power or manufactured, got {hkind!r}")
    return ProblemSpec(gamma, h, nonlin, mesh, lam)


def parse_spec(text: str, overrides: list[str] | None = None,
               kernel: TransformKernel = KERNEL) -> ProblemSpec:
    """Parse ``key=value`` spec text; ``overrides`` entries win over the file."""
    pairs = _parse_pairs(text)
    if overrides:
        pairs.update(_parse_pairs("\n".join(overrides)))
    return spec_from_pairs(pairs, kernel)


def load_spec(path, overrides: list[str] | None = None,
              kernel: TransformKernel = KERNEL) -> ProblemSpec:
    return parse_spec(Path(path).read_text(), overrides, kernel)
