"""Local flux matrices, elimination of barycentric faces, global SPD assembly.

Per cell K the local matrix over its faces is

    A_K[s, s'] = sum over s'' of y(s'', s) . Lambda(K, s'') y(s'', s'),

with Lambda(K, s'') the diffusion tensor integrated over the cone of face
s'', and the numerical flux through face s is

    F(K, s)(u) = sum over s' of A_K[s, s'] (u_K - u_{s'}),

which reproduces the bilinear form integral of grad_D u . Lambda grad_D v.

Assembly is a loop over cells with an inner loop over faces: each flux is
expanded over the retained unknowns (cells and hybrid faces), eliminated
barycentric values are redistributed through their weights, and Dirichlet
values move to the right-hand side.  Triplets are accumulated for both
triangles and coalesced in a canonical order, which makes the assembled
matrix exactly symmetric; storage keeps the strict upper triangle plus
the diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import (
    MissingWeights,
    NonPositiveTensor,
    NonSymmetricTensor,
    SingularAfterElimination,
)
from .geometry import Cell, Mesh
from .gradient import default_alpha, y_vectors
from .spaces import (
    BARYCENTRIC,
    DIRICHLET,
    HYBRID,
    BarycentricWeights,
    EdgePartition,
    UnknownNumbering,
    check_weights,
    numbering_for,
)


def _check_spd_2x2(mat: np.ndarray) -> None:
    mat = np.asarray(mat, dtype=float)
    scale = max(np.abs(mat).max(), 1e-300)
    if np.abs(mat - mat.T).max() > 1e-12 * scale:
        raise NonSymmetricTensor(f"tensor not symmetric: {mat}")
    if np.linalg.eigvalsh(mat).min() <= 0.0:
        raise NonPositiveTensor(f"tensor not positive definite: {mat}")


@dataclass
class TensorField:
    """Symmetric positive-definite diffusion tensor, sampled per cone.

    ``per_cell`` tensors (the default construction) are treated as exactly
    piecewise constant; a smooth callable is sampled at cone centroids.
    """

    per_cell_tensors: np.ndarray | None = None
    constant: np.ndarray | None = None
    func: object = None
    piecewise_constant: bool = True
    lambda_min: float = 0.0
    lambda_max: float = 0.0

    @classmethod
    def from_constant(cls, mat) -> "TensorField":
        mat = np.asarray(mat, dtype=float)
        _check_spd_2x2(mat)
        ev = np.linalg.eigvalsh(mat)
        return cls(constant=mat, lambda_min=float(ev[0]), lambda_max=float(ev[-1]))

    @classmethod
    def from_per_cell(cls, tensors) -> "TensorField":
        tensors = np.asarray(tensors, dtype=float)
        lo, hi = np.inf, 0.0
        for t in tensors:
            _check_spd_2x2(t)
            ev = np.linalg.eigvalsh(t)
            lo, hi = min(lo, ev[0]), max(hi, ev[-1])
        return cls(per_cell_tensors=tensors, lambda_min=float(lo), lambda_max=float(hi))

    @classmethod
    def isotropic_by_region(cls, regions, values: dict) -> "TensorField":
        lam = np.array([values[int(r)] for r in regions], dtype=float)
        tensors = lam[:, None, None] * np.eye(2)[None, :, :]
        return cls.from_per_cell(tensors)

    @classmethod
    def from_callable(cls, func, piecewise_constant: bool = False) -> "TensorField":
        return cls(func=func, piecewise_constant=piecewise_constant,
                   lambda_min=np.nan, lambda_max=np.nan)

    @property
    def is_identity(self) -> bool:
        return self.constant is not None and np.array_equal(self.constant, np.eye(2))

    def cell_tensor(self, cell: Cell) -> np.ndarray:
        if self.constant is not None:
            return self.constant
        if self.per_cell_tensors is not None:
            return self.per_cell_tensors[cell.id]
        mat = np.asarray(self.func(cell.point), dtype=float)
        _check_spd_2x2(mat)
        return mat

    def cone_tensors(self, cell: Cell) -> np.ndarray:
        """Integrated tensor per cone: |D(K, s)| times the sampled tensor."""
        k = len(cell.faces)
        if self.func is not None and not self.piecewise_constant:
            out = np.empty((k, 2, 2))
            for i in range(k):
                centroid = (cell.point + 2.0 * cell.face_centres[i]) / 3.0
                mat = np.asarray(self.func(centroid), dtype=float)
                _check_spd_2x2(mat)
                out[i] = cell.cone_measures[i] * mat
            return out
        return cell.cone_measures[:, None, None] * self.cell_tensor(cell)[None, :, :]


def local_matrix(mesh: Mesh, cell_id: int, tensor: TensorField,
                 alpha: float | None = None) -> np.ndarray:
    """Symmetric positive local flux matrix of one cell."""
    cell = mesh.cells[cell_id]
    y = y_vectors(mesh, cell_id, alpha)
    lam = tensor.cone_tensors(cell)
    a = np.einsum("ija,iab,ikb->jk", y, lam, y)
    return 0.5 * (a + a.T)


def flux(mesh: Mesh, cell_id: int, local_mat: np.ndarray, u) -> np.ndarray:
    """Numerical fluxes of one cell through all its faces.

    Positive for outflow: the flux approximates the integral over the face
    of -Lambda grad u . n_out.
    """
    cell = mesh.cells[cell_id]
    delta = u.cell_values[cell_id] - u.face_values[cell.faces]
    return local_mat @ delta


def rhs_cell_integral(mesh: Mesh, cell_id: int, f) -> float:
    """Integral of f over a cell by the cone-centroid rule (exact for affine f)."""
    cell = mesh.cells[cell_id]
    centroids = (cell.point[None, :] + 2.0 * cell.face_centres) / 3.0
    return float(cell.cone_measures @ np.array([f(c) for c in centroids]))


@dataclass
class LinearSystem:
    """Sparse SPD system over the retained unknowns.

    The matrix is stored as its strict upper triangle plus diagonal; it is
    exactly symmetric by construction.  ``nm`` counts stored nonzero
    entries of the full matrix (both triangles plus the diagonal).
    """

    n: int
    upper: sp.csr_matrix
    diag: np.ndarray
    rhs: np.ndarray
    numbering: UnknownNumbering
    nm: int

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.upper @ x + self.upper.T @ x + self.diag * x

    def full(self) -> sp.csr_matrix:
        return (self.upper + self.upper.T + sp.diags(self.diag)).tocsr()

    def to_dense(self) -> np.ndarray:
        return self.full().toarray()


def _face_expansions(mesh, partition, weights, numbering, dirichlet):
    """Per face: linear expansion [(unknown, coeff)] and Dirichlet constant."""
    expans: list[list[tuple[int, float]]] = [[] for _ in range(mesh.n_faces)]
    consts = np.zeros(mesh.n_faces)
    for f in mesh.faces:
        tag = partition.tags[f.id]
        if tag == HYBRID:
            expans[f.id] = [(numbering.face_index[f.id], 1.0)]
        elif tag == BARYCENTRIC:
            if weights is None or f.id not in weights.support:
                raise MissingWeights(f"no weights for face {f.id}")
            entries = []
            for kind, idx, beta in weights.support[f.id]:
                if kind == "cell":
                    entries.append((idx, beta))
                else:
                    entries.append((numbering.face_index[idx], beta))
            expans[f.id] = entries
        elif tag == DIRICHLET:
            consts[f.id] = dirichlet(f.centre) if dirichlet is not None else 0.0
    return expans, consts


def assemble_triplets(mesh, partition, weights, tensor, source=None,
                      dirichlet=None, alpha=None):
    """Coalesced triplets of the full matrix plus the right-hand side.

    Mirrored entries are accumulated from identical floating-point
    products and summed in a canonical (value-sorted) order, so the
    returned triplet set is exactly symmetric.
    """
    a = default_alpha(mesh.dim) if alpha is None else alpha
    numbering = numbering_for(mesh, partition)
    n = numbering.n
    expans, consts = _face_expansions(mesh, partition, weights, numbering, dirichlet)

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    rhs = np.zeros(n)

    for cell in mesh.cells:
        lm = local_matrix(mesh, cell.id, tensor, a)
        k = len(cell.faces)
        if source is not None:
            rhs[cell.id] += rhs_cell_integral(mesh, cell.id, source)
        # Factor lists of (u_K - u_sigma): +1 on the cell, -coeff on each
        # unknown of the face expansion.  Identical lists serve as test
        # (row) and trial (column) factors, which keeps mirrored products
        # bit-equal.
        factors = []
        for i in range(k):
            fid = int(cell.faces[i])
            fac = [(cell.id, 1.0)]
            fac.extend((col, -coeff) for col, coeff in expans[fid])
            factors.append(fac)
        # Every touched (row, col) pair registers a stored entry, even when
        # the local coefficient is an exact zero: the nonzero count NM
        # follows the increment procedure, not the final values.
        for i in range(k):
            for j in range(k):
                a_ij = lm[i, j]
                fid_j = int(cell.faces[j])
                for row, t in factors[i]:
                    for col, s in factors[j]:
                        rows.append(row)
                        cols.append(col)
                        vals.append((t * s) * a_ij)
                    if partition.tags[fid_j] == DIRICHLET and consts[fid_j] != 0.0:
                        rhs[row] += t * a_ij * consts[fid_j]

    rows_a = np.asarray(rows, dtype=np.int64)
    cols_a = np.asarray(cols, dtype=np.int64)
    vals_a = np.asarray(vals, dtype=float)
    order = np.lexsort((vals_a, cols_a, rows_a))
    rows_a, cols_a, vals_a = rows_a[order], cols_a[order], vals_a[order]
    if len(rows_a):
        change = (rows_a[1:] != rows_a[:-1]) | (cols_a[1:] != cols_a[:-1])
        starts = np.concatenate([[0], np.nonzero(change)[0] + 1])
        sums = np.add.reduceat(vals_a, starts)
        rows_a, cols_a, vals_a = rows_a[starts], cols_a[starts], sums
    return rows_a, cols_a, vals_a, rhs, numbering


def assemble(mesh: Mesh, partition: EdgePartition,
             weights: BarycentricWeights | None, tensor: TensorField,
             source=None, dirichlet=None, alpha: float | None = None) -> LinearSystem:
    """Assemble the sparse SPD system for the composite scheme.

    ``source`` and ``dirichlet`` are scalar callables of position (both
    optional; absent means zero).  Raises ``SingularAfterElimination``
    when elimination leaves an unknown without a positive diagonal.
    """
    if partition.barycentric_faces():
        if weights is None:
            raise MissingWeights("partition has barycentric faces but no weights")
        check_weights(mesh, partition, weights)
    rows, cols, vals, rhs, numbering = assemble_triplets(
        mesh, partition, weights, tensor, source, dirichlet, alpha
    )
    n = numbering.n
    nm = len(rows)

    on_diag = rows == cols
    diag = np.zeros(n)
    diag[rows[on_diag]] = vals[on_diag]
    if np.any(diag <= 0.0):
        bad = int(np.nonzero(diag <= 0.0)[0][0])
        raise SingularAfterElimination(f"unknown {bad} has non-positive diagonal")

    strict = rows < cols
    upper = sp.csr_matrix(
        (vals[strict], (rows[strict], cols[strict])), shape=(n, n)
    )
    return LinearSystem(n=n, upper=upper, diag=diag, rhs=rhs,
                        numbering=numbering, nm=nm)


def export_matrix_market(system: LinearSystem, path) -> None:
    scipy.io.mmwrite(path, system.full(), symmetry="symmetric")
