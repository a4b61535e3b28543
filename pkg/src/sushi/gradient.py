"""Stabilized discrete gradient, per-cone, and the flux-identification vectors.

Per cell K the gradient of a grid function u is

    grad_K u = (1/|K|) sum |sigma| (u_sigma - u_K) n(K,sigma),

exact for affine fields, and the per-cone stabilized gradient adds the
residual of the face value against the cell-gradient prediction in the
face-normal direction:

    R(K,sigma) u = (alpha/d(K,sigma)) (u_sigma - u_K - grad_K u . (x_sigma - x_K)),
    grad(K,sigma) u = grad_K u + R(K,sigma) u * n(K,sigma).

``alpha`` defaults to sqrt(d); any positive value is admissible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Cell, Mesh
from .spaces import DiscreteFunction


def default_alpha(dim: int) -> float:
    return math.sqrt(dim)


@dataclass
class GradientField:
    """Piecewise-constant gradient, one vector per cone (cell, local face)."""

    per_cell: list[np.ndarray]  # entry K: (k, d) array over the faces of K
    alpha: float

    def cell_average(self, mesh: Mesh) -> np.ndarray:
        """Cone-measure-weighted average per cell, for visualization."""
        out = np.empty((mesh.n_cells, mesh.dim))
        for c in mesh.cells:
            w = c.cone_measures
            out[c.id] = (w[:, None] * self.per_cell[c.id]).sum(axis=0) / w.sum()
        return out

    def l2_norm_sq(self, mesh: Mesh) -> float:
        total = 0.0
        for c in mesh.cells:
            total += float(c.cone_measures @ np.sum(self.per_cell[c.id] ** 2, axis=1))
        return total

    def dump_cones_csv(self, mesh: Mesh, path) -> None:
        """Cone-resolved dump: one row per (cell, face) with the gradient."""
        import csv

        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["cell", "face", "gx", "gy"])
            for c in mesh.cells:
                for i, fid in enumerate(c.faces):
                    g = self.per_cell[c.id][i]
                    writer.writerow([c.id, int(fid), repr(float(g[0])),
                                     repr(float(g[1]))])


def _face_deltas(cell: Cell, u: DiscreteFunction) -> np.ndarray:
    return u.face_values[cell.faces] - u.cell_values[cell.id]


def cell_gradient(mesh: Mesh, u: DiscreteFunction, cell_id: int) -> np.ndarray:
    c = mesh.cells[cell_id]
    delta = _face_deltas(c, u)
    return (c.face_measures * delta) @ c.normals / c.measure


def stabilization_residual(mesh: Mesh, u: DiscreteFunction, cell_id: int,
                           face_id: int, alpha: float | None = None) -> float:
    c = mesh.cells[cell_id]
    a = default_alpha(mesh.dim) if alpha is None else alpha
    i = c.local_index(face_id)
    grad = cell_gradient(mesh, u, cell_id)
    delta = u.face_values[face_id] - u.cell_values[cell_id]
    return a / c.dists[i] * (delta - float(grad @ (c.face_centres[i] - c.point)))


def cell_cone_gradients(cell: Cell, u: DiscreteFunction,
                        alpha: float) -> np.ndarray:
    """All cone gradients of one cell as a (k, d) array."""
    delta = _face_deltas(cell, u)
    grad = (cell.face_measures * delta) @ cell.normals / cell.measure
    pred = (cell.face_centres - cell.point) @ grad
    resid = alpha / cell.dists * (delta - pred)
    return grad[None, :] + resid[:, None] * cell.normals


def gradient_field(mesh: Mesh, u: DiscreteFunction,
                   alpha: float | None = None) -> GradientField:
    """Stabilized gradient on every cone.

    ``u`` must carry materialized face values (barycentric faces already
    reconstructed; see :meth:`BarycentricWeights.reconstruct`).
    """
    a = default_alpha(mesh.dim) if alpha is None else alpha
    per_cell = [cell_cone_gradients(c, u, a) for c in mesh.cells]
    return GradientField(per_cell=per_cell, alpha=a)


def y_vectors(mesh: Mesh, cell_id: int, alpha: float | None = None) -> np.ndarray:
    """Vectors identifying cone gradients from face increments.

    Returns a (k, k, d) array ``Y`` with ``Y[i, j]`` the vector multiplying
    (u_{sigma_j} - u_K) in the cone gradient of face i:

        grad(K, sigma_i) u = sum_j (u_{sigma_j} - u_K) Y[i, j].
    """
    c = mesh.cells[cell_id]
    a = default_alpha(mesh.dim) if alpha is None else alpha
    k = len(c.faces)
    g = (c.face_measures[:, None] * c.normals) / c.measure  # row j: coefficient of delta_j in grad_K
    rel = c.face_centres - c.point
    # proj[i, j] = g_j . (x_sigma_i - x_K)
    proj = rel @ g.T
    coef = (np.eye(k) - proj) * (a / c.dists)[:, None]
    return g[None, :, :] + coef[:, :, None] * c.normals[:, None, :]
