"""Uniform box meshes on the unit interval, square and cube.

Only interior nodes are stored, so every :class:`GridFunction` has an exact
zero boundary trace. Node ``i`` on an axis sits at ``i * spacing`` with
``i = 1..n``; fields are flattened in row-major (C) order with the first
axis slowest.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import factorized


@dataclass(frozen=True)
class Mesh:
    dimension: int
    n_per_axis: int

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if self.n_per_axis < 3:
            raise ValueError("n_per_axis must be at least 3")

    @property
    def spacing(self) -> float:
        return 1.0 / (self.n_per_axis + 1)

    @property
    def size(self) -> int:
        return self.n_per_axis**self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_per_axis,) * self.dimension

    @cached_property
    def axis(self) -> np.ndarray:
        return np.arange(1, self.n_per_axis + 1) * self.spacing

    @cached_property
    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``(size, dimension)``."""
        grids = np.meshgrid(*([self.axis] * self.dimension), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    @cached_property
    def laplacian(self) -> sp.csr_matrix:
        """Matrix of ``-Delta_h`` with zero Dirichlet data folded in."""
        n, h = self.n_per_axis, self.spacing
        t = sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]) / h**2
        eye = sp.identity(n, format="csr")
        if self.dimension == 1:
            a = t
        elif self.dimension == 2:
            a = sp.kron(t, eye) + sp.kron(eye, t)
        else:
            a = (sp.kron(sp.kron(t, eye), eye) + sp.kron(sp.kron(eye, t), eye)
                 + sp.kron(sp.kron(eye, eye), t))
        return sp.csr_matrix(a)

    @cached_property
    def solve_laplacian(self):
        """Callable returning ``(-Delta_h)^{-1} r`` from a cached sparse LU."""
        return factorized(sp.csc_matrix(self.laplacian))

    def refined(self) -> "Mesh":
        """Mesh with the spacing halved (``n -> 2 n + 1``)."""
        return Mesh(self.dimension, 2 * self.n_per_axis + 1)

    def field(self, values) -> "GridFunction":
        return GridFunction(self, values)

    def sample(self, func) -> "GridFunction":
        """Evaluate ``func(coords)`` (coords of shape ``(size, dim)``) on the nodes."""
        return GridFunction(self, func(self.coords))


@dataclass(frozen=True, eq=False)
class GridFunction:
    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if vals.size != self.mesh.size:
            raise ValueError(f"expected {self.mesh.size} nodal values, got {vals.size}")
        object.__setattr__(self, "values", vals)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.mesh, values)

    def scaled(self, c: float) -> "GridFunction":
        return GridFunction(self.mesh, c * self.values)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def boundary_distance(mesh: Mesh) -> GridFunction:
    """Exact distance to the boundary of the unit box."""
    x = mesh.coords
    return GridFunction(mesh, np.min(np.minimum(x, 1.0 - x), axis=1))


def first_eigenfunction_values(coords: np.ndarray) -> np.ndarray:
    """``prod_i sin(pi x_i)`` at arbitrary points; shared by refinement code."""
    return np.prod(np.sin(np.pi * np.asarray(coords)), axis=1)


def first_eigenfunction(mesh: Mesh) -> tuple[GridFunction, float]:
    """Closed-form first Dirichlet eigenpair ``(phi_1, N pi^2)``, ``max phi_1 = 1``."""
    return mesh.sample(first_eigenfunction_values), mesh.dimension * np.pi**2


def apply_laplacian(v: GridFunction) -> GridFunction:
    return v.with_values(v.mesh.laplacian @ v.values)


def integrate(w: GridFunction) -> float:
    """Lumped (rectangle-rule) integral over the interior nodes."""
    return float(np.sum(w.values) * w.mesh.cell_volume)


def l2_norm_sq(v: GridFunction) -> float:
    return float(np.dot(v.values, v.values) * v.mesh.cell_volume)


def h1_norm_sq(v: GridFunction) -> float:
    """Discrete ``int |grad v|^2 = v^T (-Delta_h) v * h^N``."""
    return float(np.dot(v.values, v.mesh.laplacian @ v.values) * v.mesh.cell_volume)


def inner(u: GridFunction, w: GridFunction) -> float:
    return float(np.dot(u.values, w.values) * u.mesh.cell_volume)


def resample(v: GridFunction, mesh: Mesh) -> GridFunction:
    """Multilinear interpolation of ``v`` (with its zero trace) onto ``mesh``."""
    if v.mesh == mesh:
        return v
    if mesh.dimension != v.mesh.dimension:
        raise ValueError("cannot resample across dimensions")
    n = v.mesh.n_per_axis
    axis = np.concatenate([[0.0], v.mesh.axis, [1.0]])
    padded = np.zeros((n + 2,) * mesh.dimension)
    padded[(slice(1, -1),) * mesh.dimension] = v.values.reshape(v.mesh.shape)
    if mesh.dimension == 1:
        return GridFunction(mesh, np.interp(mesh.axis, axis, padded))
    interp = RegularGridInterpolator((axis,) * mesh.dimension, padded)
    return GridFunction(mesh, interp(mesh.coords))


def to_csv(v: GridFunction) -> str:
    """CSV text ``x[,y[,z]],value`` with 17 significant digits per entry."""
    names = ["x", "y", "z"][: v.mesh.dimension]
    lines = [",".join(names + ["value"])]
    for row, val in zip(v.mesh.coords, v.values):
        lines.append(",".join(f"{c:.17g}" for c in (*row, val)))
    return "\n".join(lines) + "\n"


def from_csv(text: str) -> GridFunction:
    """Inverse of :func:`to_csv`; the mesh is inferred from the row count."""
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    header = [h.strip().lower() for h in lines[0].split(",")]
    dim = len(header) - 1
    if dim not in (1, 2, 3) or header[-1] != "value" or header[:-1] != ["x", "y", "z"][:dim]:
        raise ValueError(f"unexpected GridFunction CSV header: {lines[0]!r}")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    n = round(len(data) ** (1.0 / dim))
    mesh = Mesh(dim, n)
    if mesh.size != len(data):
        raise ValueError("row count is not a perfect power of the dimension")
    if not np.allclose(data[:, :dim], mesh.coords, rtol=0, atol=1e-12):
        raise ValueError("node coordinates do not match a uniform interior mesh")
    return GridFunction(mesh, data[:, dim])
