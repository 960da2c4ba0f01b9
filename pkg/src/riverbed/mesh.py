"""Uniform 1D meshes, modal Legendre fields and Gauss quadrature.

Fields store one row of Legendre coefficients per cell, so the zeroth
coefficient is the cell average.  The reference coordinate ``xi`` lives in
[-1, 1] and maps to ``x = x_j + dx/2 * xi``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as leg


@dataclass(frozen=True)
class Mesh1D:
    x0: float
    xL: float
    n_cells: int
    periodic: bool = True

    def __post_init__(self):
        if not self.xL > self.x0:
            raise ValueError(f"need xL > x0, got [{self.x0}, {self.xL}]")
        if self.n_cells < 1:
            raise ValueError("n_cells must be positive")

    @property
    def dx(self) -> float:
        return (self.xL - self.x0) / self.n_cells

    @property
    def edges(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n_cells + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.x0 + self.dx * (np.arange(self.n_cells) + 0.5)

    def physical(self, xi) -> np.ndarray:
        """Physical coordinates of reference points, shape (n_cells, len(xi))."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        return self.centers[:, None] + 0.5 * self.dx * xi[None, :]

    def locate(self, x, side: int = 1):
        """Cell index and reference coordinate of physical points.

        ``side=+1`` takes the limit from the right at interfaces (the cell to
        the right owns the point), ``side=-1`` the limit from the left.
        """
        x = np.asarray(x, dtype=float)
        s = (x - self.x0) / self.dx
        if side >= 0:
            cell = np.floor(s).astype(int)
        else:
            cell = np.ceil(s).astype(int) - 1
        cell = np.clip(cell, 0, self.n_cells - 1)
        xi = 2.0 * (s - cell) - 1.0
        return cell, xi


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss(cls, n_points: int) -> "QuadratureRule":
        return _gauss(n_points)

    @property
    def exact_degree(self) -> int:
        return 2 * len(self.nodes) - 1


@lru_cache(maxsize=None)
def _gauss(n_points: int) -> QuadratureRule:
    x, w = leg.leggauss(n_points)
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(x, w)


def default_quadrature(degree: int) -> QuadratureRule:
    return _gauss(degree + 2)


@lru_cache(maxsize=None)
def basis_table(xi: tuple, degree: int):
    """Legendre values and xi-derivatives at ``xi``: two (len(xi), k+1) arrays."""
    xi = np.asarray(xi, dtype=float)
    V = leg.legvander(xi, degree)
    dV = np.zeros_like(V)
    for m in range(1, degree + 1):
        c = np.zeros(degree + 1)
        c[m] = 1.0
        dV[:, m] = leg.legval(xi, leg.legder(c))
    V.setflags(write=False)
    dV.setflags(write=False)
    return V, dV


def basis_at(xi, degree: int):
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return basis_table(tuple(xi.tolist()), degree)


def inverse_mass(degree: int, dx: float) -> np.ndarray:
    """Diagonal of the inverse cell mass matrix for the Legendre basis."""
    return (2.0 * np.arange(degree + 1) + 1.0) / dx


class PiecewiseField:
    """Discontinuous piecewise polynomial of degree ``k`` on a uniform mesh."""

    def __init__(self, mesh: Mesh1D, coeffs):
        coeffs = np.array(coeffs, dtype=float)
        if coeffs.ndim != 2 or coeffs.shape[0] != mesh.n_cells:
            raise ValueError(
                f"coeffs must have shape (n_cells={mesh.n_cells}, k+1), got {coeffs.shape}"
            )
        coeffs.setflags(write=False)
        self.mesh = mesh
        self.coeffs = coeffs

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def means(self) -> np.ndarray:
        return self.coeffs[:, 0]

    def values(self, xi) -> np.ndarray:
        """Values at reference points in every cell, shape (n_cells, len(xi))."""
        V, _ = basis_at(xi, self.degree)
        return self.coeffs @ V.T

    def derivative_values(self, xi) -> np.ndarray:
        """x-derivative at reference points (within each cell)."""
        _, dV = basis_at(xi, self.degree)
        return (self.coeffs @ dV.T) * (2.0 / self.mesh.dx)

    def __call__(self, x, side: int = 1) -> np.ndarray:
        cell, xi = self.mesh.locate(np.ravel(x), side)
        V = leg.legvander(xi, self.degree)
        out = np.einsum("pm,pm->p", self.coeffs[cell], V)
        return out.reshape(np.shape(x))

    def l2_norm(self) -> float:
        w = self.mesh.dx / (2.0 * np.arange(self.degree + 1) + 1.0)
        return float(np.sqrt(np.sum(self.coeffs**2 * w)))


def project(f, mesh: Mesh1D, degree: int, quad: QuadratureRule | None = None) -> PiecewiseField:
    """Cellwise L2 projection of ``f`` onto degree-``degree`` Legendre modes."""
    if quad is None:
        quad = default_quadrature(degree)
    if quad.exact_degree < 2 * degree:
        raise ValueError("quadrature not exact to degree 2k")
    V, _ = basis_at(quad.nodes, degree)
    fx = np.asarray(f(mesh.physical(quad.nodes)), dtype=float)
    fx = np.broadcast_to(fx, (mesh.n_cells, len(quad.nodes)))
    # (2m+1)/2 * int_{-1}^{1} f P_m dxi
    coeffs = (fx * quad.weights) @ V * (0.5 * (2.0 * np.arange(degree + 1) + 1.0))
    return PiecewiseField(mesh, coeffs)


def evaluate(field: PiecewiseField, cell: int, ref_coord: float) -> float:
    if not 0 <= cell < field.mesh.n_cells:
        raise IndexError(f"cell {cell} outside 0..{field.mesh.n_cells - 1}")
    return float(field.coeffs[cell] @ leg.legvander(np.array([ref_coord]), field.degree)[0])


def l1_error(a: PiecewiseField, b, quad: QuadratureRule | None = None) -> float:
    """Integral of |a - b| on the mesh of ``a``; ``b`` is a field or a function of x."""
    if quad is None:
        quad = _gauss(max(a.degree, getattr(b, "degree", 0)) + 3)
    av = a.values(quad.nodes)
    if isinstance(b, PiecewiseField):
        if b.mesh != a.mesh:
            raise ValueError("fields live on different meshes")
        bv = b.values(quad.nodes)
    else:
        bv = np.broadcast_to(np.asarray(b(a.mesh.physical(quad.nodes)), dtype=float), av.shape)
    return float(0.5 * a.mesh.dx * np.sum(np.abs(av - bv) @ quad.weights))
