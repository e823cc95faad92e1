"""Built-in meshes and analytic test fields.

Fixtures used by the test-suite and the ``make-testdata`` subcommand:
platonic solids, subdivided icospheres, planar grids, and the piecewise
constant / trigonometric vertex fields that exercise the edge-preserving
and smoothing branches of the solver.
"""

import numpy as np

from .mesh import TriangleMesh

_PHI = (1.0 + np.sqrt(5.0)) / 2.0

_ICO_VERTICES = np.array([
    [-1.0, _PHI, 0.0], [1.0, _PHI, 0.0], [-1.0, -_PHI, 0.0], [1.0, -_PHI, 0.0],
    [0.0, -1.0, _PHI], [0.0, 1.0, _PHI], [0.0, -1.0, -_PHI], [0.0, 1.0, -_PHI],
    [_PHI, 0.0, -1.0], [_PHI, 0.0, 1.0], [-_PHI, 0.0, -1.0], [-_PHI, 0.0, 1.0],
])

_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
], dtype=np.int64)


def tetrahedron():
    """Regular tetrahedron inscribed in the unit sphere, outward oriented."""
    v = np.array([
        [1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0],
    ]) / np.sqrt(3.0)
    t = np.array([[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]], dtype=np.int64)
    return TriangleMesh(v, t)


def cube_surface():
    """Unit cube [0,1]^3 as 12 outward-oriented triangles."""
    v = np.array([
        [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
        [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
    ], dtype=float)
    t = np.array([
        [0, 3, 2], [0, 2, 1],            # bottom
        [4, 5, 6], [4, 6, 7],            # top
        [0, 1, 5], [0, 5, 4],            # front
        [2, 3, 7], [2, 7, 6],            # back
        [0, 4, 7], [0, 7, 3],            # left
        [1, 2, 6], [1, 6, 5],            # right
    ], dtype=np.int64)
    return TriangleMesh(v, t)


def icosphere(subdivisions, radius=1.0):
    """Icosahedron with each face split 4-ways ``subdivisions`` times.

    All vertices are projected onto the sphere of the given radius after
    every split, so the result is a geodesic sphere with
    K = 10*4^n + 2 vertices and L = 20*4^n triangles.
    """
    if subdivisions < 0:
        raise ValueError("subdivisions must be >= 0")
    verts = [p / np.linalg.norm(p) for p in _ICO_VERTICES]
    faces = [tuple(f) for f in _ICO_FACES]
    for _ in range(subdivisions):
        midpoint = {}

        def mid(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in midpoint:
                p = verts[a] + verts[b]
                verts.append(p / np.linalg.norm(p))
                midpoint[key] = len(verts) - 1
            return midpoint[key]

        split = []
        for i0, i1, i2 in faces:
            a, b, c = mid(i0, i1), mid(i1, i2), mid(i2, i0)
            split += [(i0, a, c), (i1, b, a), (i2, c, b), (a, b, c)]
        faces = split
    return TriangleMesh(radius * np.array(verts), np.array(faces, dtype=np.int64))


def planar_grid(n, width=1.0):
    """Open (n+1)x(n+1) grid on [0,width]^2 in the z=0 plane.

    Cell diagonals alternate with cell parity so front propagation sees
    both diagonal directions equally.  The mesh has a boundary; it is a
    fixture for planar checks, not a closed surface.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    coords = np.linspace(0.0, width, n + 1)
    xx, yy = np.meshgrid(coords, coords, indexing="xy")
    v = np.column_stack([xx.ravel(), yy.ravel(), np.zeros((n + 1) ** 2)])

    def idx(ix, iy):
        return iy * (n + 1) + ix

    t = []
    for iy in range(n):
        for ix in range(n):
            a, b = idx(ix, iy), idx(ix + 1, iy)
            c, d = idx(ix + 1, iy + 1), idx(ix, iy + 1)
            if (ix + iy) % 2 == 0:
                t += [(a, b, c), (a, c, d)]
            else:
                t += [(a, b, d), (b, c, d)]
    return TriangleMesh(v, np.array(t, dtype=np.int64))


def unit_triangle():
    """Single right triangle (0,0,0), (1,0,0), (0,1,0); open fixture."""
    v = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    return TriangleMesh(v, np.array([[0, 1, 2]], dtype=np.int64))


def unit_square():
    """Unit square in the z=0 plane as two triangles; open fixture."""
    v = np.array([
        [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0],
    ])
    return TriangleMesh(v, np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64))


def two_region_field(mesh, low=0.0, high=1.0, axis=2, threshold=0.0):
    """Piecewise-constant indicator field split by a coordinate plane."""
    return np.where(mesh.vertices[:, axis] > threshold, high, low).astype(float)


def smooth_field(mesh):
    """Smooth trigonometric field of the ambient coordinates."""
    x, y, z = mesh.vertices.T
    return np.cos(2.0 * x) * np.sin(2.0 * y) + z
