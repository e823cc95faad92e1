"""Shared fixtures and independent oracle assemblies.

The oracles here deliberately take different routes than the package:
per-triangle gradients come from the rotated-edge formula
(grad phi_a = n x e_a / (2A)) instead of the metric inverse, and the
global operators are materialized as explicit sparse matrices.
"""

import numpy as np
import pytest
import scipy.sparse as sp

import surfreg as sr
from surfreg import synthetic


# -- independent geometric oracles ------------------------------------

def triangle_areas_normals(vertices, triangles):
    e1 = vertices[triangles[:, 1]] - vertices[triangles[:, 0]]
    e2 = vertices[triangles[:, 2]] - vertices[triangles[:, 0]]
    cross = np.cross(e1, e2)
    norms = np.linalg.norm(cross, axis=1)
    return 0.5 * norms, cross / norms[:, None]


def hat_gradients(vertices, triangles):
    """Per-triangle gradients of the three hat functions, shape (L, 3, 3).

    grad phi_a = n x (v_c - v_b) / (2A) for corners (a, b, c) in cyclic
    order; constant on the triangle and tangential by construction.
    """
    areas, normals = triangle_areas_normals(vertices, triangles)
    grads = np.empty((triangles.shape[0], 3, 3))
    for a in range(3):
        b = (a + 1) % 3
        c = (a + 2) % 3
        edge = vertices[triangles[:, c]] - vertices[triangles[:, b]]
        grads[:, a, :] = np.cross(normals, edge) / (2.0 * areas[:, None])
    return grads


def gradient_matrix(vertices, triangles):
    """Sparse (3L x K) matrix taking vertex values to stacked gradients."""
    num_tri = triangles.shape[0]
    k = vertices.shape[0]
    grads = hat_gradients(vertices, triangles)
    rows = np.repeat(np.arange(3 * num_tri), 3)
    cols = np.tile(triangles, (1, 3)).reshape(-1)
    vals = grads.transpose(0, 2, 1).reshape(-1)
    return sp.csr_matrix((vals, (rows, cols)), shape=(3 * num_tri, k))


def stiffness_matrix(vertices, triangles):
    """Doubled-measure stiffness: sum_i 2 A_i <grad phi_a, grad phi_b>."""
    areas, _ = triangle_areas_normals(vertices, triangles)
    grads = hat_gradients(vertices, triangles)
    k = vertices.shape[0]
    rows, cols, vals = [], [], []
    for i in range(triangles.shape[0]):
        local = 2.0 * areas[i] * (grads[i] @ grads[i].T)
        for a in range(3):
            for b in range(3):
                rows.append(triangles[i, a])
                cols.append(triangles[i, b])
                vals.append(local[a, b])
    return sp.csr_matrix((vals, (rows, cols)), shape=(k, k))


def lumped_mass(vertices, triangles):
    """Doubled-measure vertex masses: sum over incident triangles of 2A/3."""
    areas, _ = triangle_areas_normals(vertices, triangles)
    m = np.zeros(vertices.shape[0])
    for a in range(3):
        np.add.at(m, triangles[:, a], 2.0 * areas / 3.0)
    return m


def selector_matrix(triangles, num_vertices):
    """Sparse (3L x K) corner selector in (corner-major, triangle) order."""
    num_tri = triangles.shape[0]
    rows = np.arange(3 * num_tri)
    cols = triangles.T.reshape(-1)
    return sp.csr_matrix(
        (np.ones(3 * num_tri), (rows, cols)), shape=(3 * num_tri, num_vertices)
    )


def operator_matrix(op, n):
    """Densify a ForwardOperator column by column."""
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        cols.append(op.apply(e))
    return np.stack(cols, axis=1)


# -- mesh fixtures -----------------------------------------------------

@pytest.fixture(scope="session")
def ico2():
    mesh = synthetic.icosphere(2)
    return mesh, sr.assemble_geometry(mesh)


@pytest.fixture(scope="session")
def ico3():
    mesh = synthetic.icosphere(3)
    return mesh, sr.assemble_geometry(mesh)


@pytest.fixture(scope="session")
def grid8():
    mesh = synthetic.planar_grid(8)
    return mesh, sr.assemble_geometry(mesh)


def closed_fixtures():
    return [
        ("tetrahedron", synthetic.tetrahedron()),
        ("cube", synthetic.cube_surface()),
        ("icosphere2", synthetic.icosphere(2)),
    ]
