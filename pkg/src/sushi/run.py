"""End-to-end run orchestration shared by the CLI and the test harness."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import LinearSystem, TensorField, assemble
from .generators import gen_nonconforming_rect, gen_rect, gen_tilted_barrier, gen_tri
from .geometry import Mesh
from .meshfile import read_mesh
from .postproc import ErrorReport, boundary_flux_totals, error_norms, reconstruct_faces
from .problems import ProblemSpec, split_regions
from .solver import SolveReport, solve_cg, solve_dense
from .spaces import (
    BarycentricWeights,
    DiscreteFunction,
    EdgePartition,
    compute_weights,
    partition_faces,
)


def parse_mesh_spec(spec: str) -> tuple[Mesh, np.ndarray | None, str]:
    """Build a mesh from the CLI shorthand grammar.

    ``rect:NxM | tri:N | ncrect:N | barrier:V | file:PATH``; returns the
    mesh, an optional region map, and a normalized label.
    """
    kind, _, arg = spec.partition(":")
    if kind == "rect":
        nx, _, ny = arg.partition("x")
        mesh = gen_rect(int(nx), int(ny))
        return mesh, None, f"rect:{int(nx)}x{int(ny)}"
    if kind == "tri":
        return gen_tri(int(arg)), None, f"tri:{int(arg)}"
    if kind == "ncrect":
        return gen_nonconforming_rect(int(arg)), None, f"ncrect:{int(arg)}"
    if kind == "barrier":
        mesh, regions = gen_tilted_barrier(int(arg))
        return mesh, regions, f"barrier:{int(arg)}"
    if kind == "file":
        return read_mesh(arg), None, f"file:{arg}"
    raise ValueError(f"unknown mesh spec {spec!r}")


@dataclass
class RunResult:
    mesh: Mesh
    regions: np.ndarray | None
    partition: EdgePartition
    weights: BarycentricWeights | None
    tensor: TensorField
    alpha: float | None
    system: LinearSystem
    solution: np.ndarray
    u: DiscreteFunction
    report: SolveReport
    errors: ErrorReport | None = None
    fluxes: dict | None = None


def solve_problem(problem: ProblemSpec, mesh: Mesh,
                  regions: np.ndarray | None = None,
                  policy: str = "all-barycentric",
                  alpha: float | None = None,
                  tol: float = 1e-12,
                  method: str = "cg",
                  with_errors: bool = True,
                  with_fluxes: bool = False) -> RunResult:
    """Assemble, solve and post-process one problem/mesh/policy combination."""
    if regions is None and problem.needs_regions:
        regions = split_regions(mesh)
    partition = partition_faces(mesh, policy, regions)
    weights = None
    if partition.barycentric_faces():
        weights = compute_weights(mesh, partition, regions)
    tensor = problem.make_tensor(mesh, regions)
    system = assemble(
        mesh, partition, weights, tensor,
        source=problem.source, dirichlet=problem.dirichlet, alpha=alpha,
    )
    if method == "dense":
        solution, report = solve_dense(system)
    else:
        solution, report = solve_cg(system, tol=tol)
    u = reconstruct_faces(mesh, partition, weights, solution,
                          system.numbering, dirichlet=problem.dirichlet)
    result = RunResult(
        mesh=mesh, regions=regions, partition=partition, weights=weights,
        tensor=tensor, alpha=alpha, system=system, solution=solution,
        u=u, report=report,
    )
    if with_errors and problem.exact is not None and problem.exact_grad is not None:
        result.errors = error_norms(mesh, u, problem.exact, problem.exact_grad, alpha)
    if with_fluxes:
        result.fluxes = boundary_flux_totals(mesh, tensor, u, alpha)
    return result
