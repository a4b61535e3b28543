"""Shared fixtures and oracle helpers for the test suite."""

import numpy as np
import pytest

import sushi
from sushi.geometry import compute_geometry


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def build_zigzag_three_row(columns=3):
    """Three stacked rows of quads; the middle row is one cell thick with
    zigzag bounding lines, so its cell points are not collinear with the
    barycentres of its internal vertical faces.  Region map is the row
    index (1, 2, 3)."""
    xs = [float(i) for i in range(columns + 1)]

    def y1(x):
        return 0.35 + 0.06 * np.sin(1.7 * x)

    def y2(x):
        return 0.65 + 0.05 * np.cos(2.3 * x)

    verts = []
    vid = {}

    def v(x, y):
        key = (round(x, 12), round(y, 12))
        if key not in vid:
            vid[key] = len(verts)
            verts.append((x, y))
        return vid[key]

    loops = []
    regions = []
    for i in range(columns):
        x0, x1 = xs[i], xs[i + 1]
        lev0 = [0.0, y1(x0), y2(x0), 1.0]
        lev1 = [0.0, y1(x1), y2(x1), 1.0]
        for j in range(3):
            loops.append(
                [v(x0, lev0[j]), v(x1, lev1[j]), v(x1, lev1[j + 1]), v(x0, lev0[j + 1])]
            )
            regions.append(j + 1)
    mesh = compute_geometry(np.array(verts), loops)
    return mesh, np.array(regions)


def two_point_reference(mesh, lam, kind):
    """Classical two-point cell matrix: harmonic or arithmetic averaging."""
    n = mesh.n_cells
    mat = np.zeros((n, n))
    for f in mesh.faces:
        if f.boundary:
            k = f.cells[0]
            c = mesh.cells[k]
            dk = c.dists[c.local_index(f.id)]
            mat[k, k] += lam[k] * f.measure / dk
        else:
            k, l = f.cells
            ck, cl = mesh.cells[k], mesh.cells[l]
            dk = ck.dists[ck.local_index(f.id)]
            dl = cl.dists[cl.local_index(f.id)]
            if kind == "harmonic":
                t = f.measure * lam[k] * lam[l] / (lam[k] * dl + lam[l] * dk)
            else:
                t = (dk * lam[k] + dl * lam[l]) / (dk + dl) * f.measure / (dk + dl)
            mat[k, k] += t
            mat[l, l] += t
            mat[k, l] -= t
            mat[l, k] -= t
    return mat


def random_zero_boundary(mesh, rng):
    """Random grid function with zero boundary face values."""
    from sushi.spaces import DiscreteFunction

    cv = rng.standard_normal(mesh.n_cells)
    fv = rng.standard_normal(mesh.n_faces)
    for f in mesh.faces:
        if f.boundary:
            fv[f.id] = 0.0
    return DiscreteFunction(cv, fv)
