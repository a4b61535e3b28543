"""Built-in benchmark problems: tensors, sources, boundary data, exact fields."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .assembly import TensorField
from .errors import ParseError
from .generators import (
    BARRIER_SLOPE,
    BARRIER_THICKNESS,
    barrier_region,
    phi1,
)


@dataclass
class ProblemSpec:
    """Problem definition bundle.

    ``exact`` and ``exact_grad`` are optional callables of position;
    ``dirichlet`` defaults to the exact solution when one is known.
    ``make_tensor`` builds the tensor field for a given mesh and region
    map, so heterogeneous problems bind their coefficients per cell.
    """

    name: str
    make_tensor: object
    source: object = None
    dirichlet: object = None
    exact: object = None
    exact_grad: object = None
    needs_regions: bool = False
    exact_boundary_flux: dict | None = None


def problem_anisotropic_smooth() -> ProblemSpec:
    """Constant full tensor with a quartic bubble exact solution.

    Lambda = [[1.5, 0.5], [0.5, 1.5]], u = 16 x (1-x) y (1-y), zero on the
    boundary; the source is the hand-differentiated negative divergence of
    Lambda grad u.
    """
    lam = np.array([[1.5, 0.5], [0.5, 1.5]])

    def exact(p):
        x, y = p
        return 16.0 * x * (1.0 - x) * y * (1.0 - y)

    def exact_grad(p):
        x, y = p
        return np.array(
            [16.0 * (1.0 - 2.0 * x) * y * (1.0 - y),
             16.0 * x * (1.0 - x) * (1.0 - 2.0 * y)]
        )

    def source(p):
        x, y = p
        return (
            48.0 * y * (1.0 - y)
            + 48.0 * x * (1.0 - x)
            - 16.0 * (1.0 - 2.0 * x) * (1.0 - 2.0 * y)
        )

    return ProblemSpec(
        name="anisotropic-smooth",
        make_tensor=lambda mesh, regions=None: TensorField.from_constant(lam),
        source=source,
        dirichlet=lambda p: 0.0,
        exact=exact,
        exact_grad=exact_grad,
    )


def problem_quartic_isotropic() -> ProblemSpec:
    """Identity tensor with the same quartic bubble; used by the E(u) study."""
    def exact(p):
        x, y = p
        return 16.0 * x * (1.0 - x) * y * (1.0 - y)

    def exact_grad(p):
        x, y = p
        return np.array(
            [16.0 * (1.0 - 2.0 * x) * y * (1.0 - y),
             16.0 * x * (1.0 - x) * (1.0 - 2.0 * y)]
        )

    def source(p):
        x, y = p
        return 32.0 * y * (1.0 - y) + 32.0 * x * (1.0 - x)

    return ProblemSpec(
        name="quartic-isotropic",
        make_tensor=lambda mesh, regions=None: TensorField.from_constant(np.eye(2)),
        source=source,
        dirichlet=lambda p: 0.0,
        exact=exact,
        exact_grad=exact_grad,
    )


BARRIER_CONTRAST = 1e-2
# Offset keeping the exact solution continuous across the top barrier line.
_TOP_OFFSET = BARRIER_THICKNESS / BARRIER_CONTRAST - BARRIER_THICKNESS


def barrier_exact(p, region: int | None = None) -> float:
    x, y = p
    r = barrier_region(x, y) if region is None else region
    f1 = phi1(x, y)
    if r == 1:
        return -f1
    if r == 2:
        return -f1 / BARRIER_CONTRAST
    return -f1 - _TOP_OFFSET


def barrier_exact_grad(p, region: int | None = None) -> np.ndarray:
    x, y = p
    r = barrier_region(x, y) if region is None else region
    g = np.array([BARRIER_SLOPE, -1.0])
    if r == 2:
        return g / BARRIER_CONTRAST
    return g


def problem_tilted_barrier() -> ProblemSpec:
    """Three-region layered medium with a thin low-permeability tilted slab.

    Permeability 1 outside the slab and 1e-2 inside; the exact solution is
    piecewise affine in the slab-normal coordinate, continuous, with
    continuous co-normal flux, and zero source.  Boundary data is the
    trace of the exact solution; the analytic per-side boundary fluxes are
    (-0.2, 0.2, 1, -1) for x=0, x=1, y=0, y=1.
    """
    return ProblemSpec(
        name="tilted-barrier",
        make_tensor=lambda mesh, regions=None: TensorField.isotropic_by_region(
            regions, {1: 1.0, 2: BARRIER_CONTRAST, 3: 1.0}
        ),
        source=None,
        dirichlet=barrier_exact,
        exact=barrier_exact,
        exact_grad=barrier_exact_grad,
        needs_regions=True,
        exact_boundary_flux={"x=0": -0.2, "x=1": 0.2, "y=0": 1.0, "y=1": -1.0},
    )


def problem_superadmissible_oracle(lam_left: float, lam_right: float) -> ProblemSpec:
    """Two half-domain isotropic coefficients split at x = 1/2.

    Pairs with the two-point flux oracle on rectangular grids; no exact
    solution is attached.
    """
    if lam_left <= 0.0 or lam_right <= 0.0:
        raise ValueError("coefficients must be positive")

    def make_tensor(mesh, regions=None):
        lam = np.array(
            [lam_left if c.point[0] < 0.5 else lam_right for c in mesh.cells]
        )
        return TensorField.from_per_cell(lam[:, None, None] * np.eye(2))

    return ProblemSpec(
        name="superadmissible-oracle",
        make_tensor=make_tensor,
        source=None,
        dirichlet=lambda p: 0.0,
        needs_regions=False,
    )


def split_regions(mesh, x_split: float = 0.5) -> np.ndarray:
    """Two-region map for half-domain problems: 1 left of the split, 2 right."""
    return np.array([1 if c.point[0] < x_split else 2 for c in mesh.cells], dtype=int)


BUILTIN_PROBLEMS = {
    "anisotropic-smooth": problem_anisotropic_smooth,
    "quartic-isotropic": problem_quartic_isotropic,
    "tilted-barrier": problem_tilted_barrier,
}


def _poly_eval(coeffs: np.ndarray, x: float, y: float) -> float:
    xs = x ** np.arange(coeffs.shape[0])
    ys = y ** np.arange(coeffs.shape[1])
    return float(xs @ coeffs @ ys)


def _poly_dx(coeffs: np.ndarray) -> np.ndarray:
    if coeffs.shape[0] == 1:
        return np.zeros((1, coeffs.shape[1]))
    return coeffs[1:, :] * np.arange(1, coeffs.shape[0])[:, None]


def _poly_dy(coeffs: np.ndarray) -> np.ndarray:
    if coeffs.shape[1] == 1:
        return np.zeros((coeffs.shape[0], 1))
    return coeffs[:, 1:] * np.arange(1, coeffs.shape[1])[None, :]


def load_problem_descriptor(path) -> ProblemSpec:
    """Custom problem from a JSON descriptor.

    Recognised keys: ``name``; ``tensor`` (either ``{"constant": 2x2}`` or
    ``{"two_region": {"split_x": v, "left": lam, "right": lam}}``); optional
    ``exact_poly``, a 2D coefficient matrix c[i][j] of sum c_ij x^i y^j, from
    which the gradient, the source -div(Lambda grad u) (constant tensors
    only) and the boundary data are derived.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            desc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON descriptor: {exc}")
    name = desc.get("name", "custom")
    tensor = desc.get("tensor")
    if tensor is None:
        raise ParseError("descriptor needs a 'tensor' entry")

    constant = None
    if "constant" in tensor:
        constant = np.asarray(tensor["constant"], dtype=float)

        def make_tensor(mesh, regions=None, mat=constant):
            return TensorField.from_constant(mat)

    elif "two_region" in tensor:
        tr = tensor["two_region"]
        xs, ll, rr = float(tr.get("split_x", 0.5)), float(tr["left"]), float(tr["right"])

        def make_tensor(mesh, regions=None):
            lam = np.array([ll if c.point[0] < xs else rr for c in mesh.cells])
            return TensorField.from_per_cell(lam[:, None, None] * np.eye(2))

    else:
        raise ParseError("tensor must define 'constant' or 'two_region'")

    exact = exact_grad = source = None
    if "exact_poly" in desc:
        coeffs = np.asarray(desc["exact_poly"], dtype=float)
        cx, cy = _poly_dx(coeffs), _poly_dy(coeffs)
        exact = lambda p: _poly_eval(coeffs, p[0], p[1])
        exact_grad = lambda p: np.array(
            [_poly_eval(cx, p[0], p[1]), _poly_eval(cy, p[0], p[1])]
        )
        if constant is not None:
            cxx, cxy, cyy = _poly_dx(cx), _poly_dy(cx), _poly_dy(cy)
            l00, l01, l11 = constant[0, 0], constant[0, 1], constant[1, 1]

            def source(p):
                x, y = p
                return -(
                    l00 * _poly_eval(cxx, x, y)
                    + 2.0 * l01 * _poly_eval(cxy, x, y)
                    + l11 * _poly_eval(cyy, x, y)
                )

    return ProblemSpec(
        name=name,
        make_tensor=make_tensor,
        source=source,
        dirichlet=exact if exact is not None else (lambda p: 0.0),
        exact=exact,
        exact_grad=exact_grad,
    )
