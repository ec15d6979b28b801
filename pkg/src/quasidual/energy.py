"""Discrete dual energy, its gradient and the Nehari gap.

For ``v > 0`` with ``u = g(v)`` the dual functional is::

    Phi(v) = 1/2 ||v||^2 + 1/(gamma-1) int h g(v)^(1-gamma) - int F(x, g(v))

with ``-F = -b g^(p+1)/(p+1)`` (sublinear) or ``+b g^q / q`` (critical type).
All integrals use the lumped rule over interior nodes, so the nodal gradient
(divided by the cell volume) is the strong-form residual::

    r = (-Delta_h) v - h g(v)^(-gamma) g'(v) - f(x, g(v)) g'(v)
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveField
from .grid import GridFunction
from .problem import ProblemSpec, Sublinear
from .transform import KERNEL, TransformKernel

VALUE_CAP = 1e300
_LOG_CAP = np.log(VALUE_CAP)


@dataclass
class EnergyBreakdown:
    dirichlet: float
    singular: float
    nonlinear: float
    total: float
    capped: bool = False

    def to_dict(self):
        return {
            "dirichlet": self.dirichlet,
            "singular": self.singular,
            "nonlinear": self.nonlinear,
            "total": self.total,
            "capped": self.capped,
        }


def _capped_power(base: np.ndarray, expo: float):
    """``base**expo`` through logs, capped at ``VALUE_CAP``; returns (values, any_capped)."""
    lg = expo * np.log(base)
    hit = lg > _LOG_CAP
    if np.any(hit):
        warnings.warn(
            f"{int(hit.sum())} singular value(s) capped at {VALUE_CAP:g}", RuntimeWarning,
            stacklevel=3,
        )
        lg = np.minimum(lg, _LOG_CAP)
        return np.exp(lg), True
    return np.exp(lg), False


def _positive(vals: np.ndarray):
    if not np.all(vals > 0):
        raise NonPositiveField("field must be strictly positive on interior nodes")


class DualFunctional:
    """Array-level evaluator of ``Phi`` and its derivatives for one spec."""

    def __init__(self, spec: ProblemSpec, kernel: TransformKernel = KERNEL):
        self.spec = spec
        self.kernel = kernel
        self.mesh = spec.mesh
        self.A = spec.mesh.laplacian
        self.vol = spec.mesh.cell_volume
        self.h = spec.h_values
        self.b = spec.b_values
        self.gamma = spec.gamma
        self.sublinear = isinstance(spec.case, Sublinear)
        self.expo = spec.exponent
        self.capped = False

    # pieces

    def _transform(self, vals):
        _positive(vals)
        return self.kernel.derivatives(vals)

    def _singular_parts(self, gv):
        # g^(-gamma) and g^(1-gamma) = g * g^(-gamma)
        gmg, capped = _capped_power(gv, -self.gamma)
        self.capped = capped
        return gmg, gv * gmg

    def _f_of(self, gv):
        """``f(x, g)`` on the nodes."""
        if self.sublinear:
            return self.b * gv**self.expo
        return -self.b * gv ** (self.expo - 1)

    def _F_of(self, gv):
        if self.sublinear:
            return self.b * gv ** (self.expo + 1) / (self.expo + 1)
        return -self.b * gv**self.expo / self.expo

    # functionals

    def energy(self, vals) -> EnergyBreakdown:
        gv, _, _ = self._transform(vals)
        _, g1 = self._singular_parts(gv)
        dirichlet = 0.5 * float(vals @ (self.A @ vals)) * self.vol
        singular = float(np.sum(self.h * g1)) * self.vol / (self.gamma - 1)
        nonlinear = -float(np.sum(self._F_of(gv))) * self.vol
        return EnergyBreakdown(dirichlet, singular, nonlinear,
                               dirichlet + singular + nonlinear, self.capped)

    def source(self, vals) -> np.ndarray:
        """``h g^(-gamma) g' + f(g) g'``."""
        gv, gp, _ = self._transform(vals)
        gmg, _ = self._singular_parts(gv)
        return (self.h * gmg + self._f_of(gv)) * gp

    def residual(self, vals) -> np.ndarray:
        return self.A @ vals - self.source(vals)

    def energy_and_residual(self, vals):
        gv, gp, _ = self._transform(vals)
        gmg, g1 = self._singular_parts(gv)
        Av = self.A @ vals
        dirichlet = 0.5 * float(vals @ Av) * self.vol
        singular = float(np.sum(self.h * g1)) * self.vol / (self.gamma - 1)
        nonlinear = -float(np.sum(self._F_of(gv))) * self.vol
        e = EnergyBreakdown(dirichlet, singular, nonlinear,
                            dirichlet + singular + nonlinear, self.capped)
        return e, Av - (self.h * gmg + self._f_of(gv)) * gp

    def nehari_gap(self, vals) -> float:
        gv, gp, _ = self._transform(vals)
        gmg, _ = self._singular_parts(gv)
        norm_sq = float(vals @ (self.A @ vals)) * self.vol
        f_term = float(np.sum(self._f_of(gv) * gp * vals)) * self.vol
        h_term = float(np.sum(self.h * gmg * gp * vals)) * self.vol
        return norm_sq - f_term - h_term

    # fiber map along the ray t * v

    def fiber_parts(self, vals, t: float, order: int = 1):
        """Return ``phi(t)``, ``phi'(t)`` and (if ``order == 2``) ``phi''(t)``."""
        tv = t * vals
        gv, gp, gpp = self._transform(tv)
        gmg, g1 = self._singular_parts(gv)
        norm_sq = float(vals @ (self.A @ vals)) * self.vol
        phi = (0.5 * t * t * norm_sq
               + float(np.sum(self.h * g1)) * self.vol / (self.gamma - 1)
               - float(np.sum(self._F_of(gv))) * self.vol)
        dphi = (t * norm_sq
                - float(np.sum(self.h * gmg * gp * vals)) * self.vol
                - float(np.sum(self._f_of(gv) * gp * vals)) * self.vol)
        if order < 2:
            return phi, dphi
        v2 = vals * vals
        sing = self.h * (gmg * gpp - self.gamma * gmg / gv * gp * gp)
        if self.sublinear:
            src = self.b * (gv**self.expo * gpp + self.expo * gv ** (self.expo - 1) * gp * gp)
        else:
            q = self.expo
            src = -self.b * (gv ** (q - 1) * gpp + (q - 1) * gv ** (q - 2) * gp * gp)
        d2phi = norm_sq - float(np.sum((sing + src) * v2)) * self.vol
        return phi, dphi, d2phi


def _check_mesh(v: GridFunction, spec: ProblemSpec):
    if v.mesh != spec.mesh:
        raise ValueError("field and spec live on different meshes")


def energy(v: GridFunction, spec: ProblemSpec, kernel: TransformKernel = KERNEL) -> EnergyBreakdown:
    _check_mesh(v, spec)
    return DualFunctional(spec, kernel).energy(v.values)


def residual(v: GridFunction, spec: ProblemSpec, kernel: TransformKernel = KERNEL) -> GridFunction:
    _check_mesh(v, spec)
    return v.with_values(DualFunctional(spec, kernel).residual(v.values))


def nehari_gap(v: GridFunction, spec: ProblemSpec, kernel: TransformKernel = KERNEL) -> float:
    """``||v||^2 - int f(g(v)) g'(v) v - int h g(v)^(-gamma) g'(v) v``.

    Zero on the Nehari set N2; non-negative on N1.
    """
    _check_mesh(v, spec)
    return DualFunctional(spec, kernel).nehari_gap(v.values)


def discrete_l2(r: np.ndarray, vol: float) -> float:
    return float(np.sqrt(np.dot(r, r) * vol))
