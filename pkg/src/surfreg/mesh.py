"""Triangle meshes and the per-triangle gradient machinery.

A surface is represented by a :class:`TriangleMesh` (vertex coordinates plus
oriented index triples).  :func:`assemble_geometry` precomputes, for every
triangle, the quantities needed by the variational machinery: the triangle
area, the 2x2 metric tensor of the barycentric parametrization, and the 3x3
map taking the three local vertex values of a piecewise-linear function to
its (constant, tangential) gradient vector on that triangle.

Everything is stored per triangle in dense arrays; the equivalent global
block-sparse operators are only ever assembled by the test oracles.
"""

import logging
import os

import numpy as np

logger = logging.getLogger(__name__)

# Jacobian of the barycentric parametrization; identical on every triangle.
REFERENCE_JACOBIAN = np.array([[-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])

# Triangles whose area falls below this fraction of (bbox diagonal)^2 are
# rejected: the metric tensor would not be invertible.
DEGENERATE_AREA_FRACTION = 1e-12


class MeshFormatError(ValueError):
    """Raised when a mesh file cannot be parsed."""


class MeshValidationError(ValueError):
    """Raised when a mesh violates a structural invariant."""


class TriangleMesh:
    """An oriented triangle mesh embedded in 3-space.

    Parameters
    ----------
    vertices : array_like, shape (K, 3)
        Vertex coordinates.
    triangles : array_like, shape (L, 3)
        Index triples into ``vertices``.  All triangles are expected to be
        consistently counter-clockwise oriented; this is checked by
        :meth:`validate`, not by the constructor.

    Notes
    -----
    The constructor performs only cheap structural checks (index range,
    distinct corners).  Manifold and closedness checks live in
    :meth:`validate` so that open fixtures (planar grids, single triangles)
    can still be built directly.  :func:`load_mesh` always validates with
    ``require_closed=True``.
    """

    def __init__(self, vertices, triangles):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshValidationError("vertices must have shape (K, 3)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshValidationError("triangles must have shape (L, 3)")
        if not np.all(np.isfinite(self.vertices)):
            raise MeshValidationError("vertex coordinates must be finite")
        if self.triangles.size:
            if self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices):
                raise MeshValidationError(
                    "triangle index out of range [0, %d)" % len(self.vertices)
                )
            degenerate = (
                (self.triangles[:, 0] == self.triangles[:, 1])
                | (self.triangles[:, 1] == self.triangles[:, 2])
                | (self.triangles[:, 2] == self.triangles[:, 0])
            )
            if degenerate.any():
                raise MeshValidationError(
                    "triangle %d has repeated vertex indices"
                    % int(np.nonzero(degenerate)[0][0])
                )

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_triangles(self):
        return self.triangles.shape[0]

    def undirected_edges(self):
        """Unique undirected edges and their triangle multiplicities.

        Returns
        -------
        edges : ndarray, shape (E, 2)
            Sorted vertex pairs.
        counts : ndarray, shape (E,)
            Number of triangles sharing each edge.
        """
        raw = self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
        raw = np.sort(raw, axis=1)
        return np.unique(raw, axis=0, return_counts=True)

    @property
    def euler_characteristic(self):
        edges, _ = self.undirected_edges()
        return self.num_vertices - len(edges) + self.num_triangles

    def bounding_box_diagonal(self):
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    def edge_lengths(self):
        """Lengths of all unique undirected edges."""
        edges, _ = self.undirected_edges()
        return np.linalg.norm(self.vertices[edges[:, 0]] - self.vertices[edges[:, 1]], axis=1)

    def validate(self, require_closed=True):
        """Check manifoldness, orientation and (optionally) closedness.

        Raises
        ------
        MeshValidationError
            Naming the first offending edge: a boundary edge when
            ``require_closed``, an edge shared by more than two triangles,
            or a repeated directed edge (inconsistent orientation).
        """
        edges, counts = self.undirected_edges()
        bad = np.nonzero(counts > 2)[0]
        if bad.size:
            e = edges[bad[0]]
            raise MeshValidationError(
                "non-manifold edge (%d, %d) shared by %d triangles"
                % (e[0], e[1], counts[bad[0]])
            )
        if require_closed:
            boundary = np.nonzero(counts == 1)[0]
            if boundary.size:
                e = edges[boundary[0]]
                raise MeshValidationError(
                    "boundary edge (%d, %d): mesh is not closed (%d boundary edges)"
                    % (e[0], e[1], boundary.size)
                )
        directed = self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
        key = directed[:, 0] * self.num_vertices + directed[:, 1]
        _, dcounts = np.unique(key, return_counts=True)
        if (dcounts > 1).any():
            dup = np.nonzero(dcounts > 1)[0][0]
            k = np.unique(key)[dup]
            raise MeshValidationError(
                "directed edge (%d, %d) appears twice: inconsistent orientation"
                % (k // self.num_vertices, k % self.num_vertices)
            )


class ConnectivitySelector:
    """Gather map from vertex fields to per-triangle local slots.

    Sparse stand-in for the (3L x K) selection matrix with one unit entry
    per row: row (i, j) picks the global vertex occupying local slot j of
    triangle i.
    """

    def __init__(self, triangles, num_vertices):
        self.rows = np.ascontiguousarray(triangles, dtype=np.int64)
        self.num_vertices = int(num_vertices)

    def apply(self, field):
        """Gather ``field`` (shape (K,) or (K, d)) into shape (L, 3[, d])."""
        field = np.asarray(field)
        if field.shape[0] != self.num_vertices:
            raise ValueError(
                "field has leading dimension %d, expected %d"
                % (field.shape[0], self.num_vertices)
            )
        return field[self.rows]

    def apply_transpose(self, local):
        """Scatter-add per-slot values (shape (L, 3[, d])) back to vertices."""
        local = np.asarray(local)
        out = np.zeros((self.num_vertices,) + local.shape[2:])
        np.add.at(out, self.rows, local)
        return out


class TriangleGeometry:
    """Per-triangle geometric quantities, stored as stacked arrays.

    Attributes
    ----------
    vertices : ndarray, shape (K, 3)
        Reference to the mesh's vertex coordinates.
    area : ndarray, shape (L,)
        Triangle areas.
    vertex_block : ndarray, shape (L, 3, 3)
        Vertex coordinates of each triangle, column-ordered by local basis
        function (column j holds the j-th corner).
    metric : ndarray, shape (L, 2, 2)
        Metric tensor ``(V J^T)^T (V J^T)`` of each triangle; symmetric
        positive definite with ``sqrt(det) = 2 * area``.
    metric_inverse : ndarray, shape (L, 2, 2)
        Explicit 2x2 inverses of ``metric``.
    edge_columns : ndarray, shape (L, 3, 2)
        ``V J^T``: the two edge vectors of each triangle as columns.
    grad_map : ndarray, shape (L, 3, 3)
        ``V J^T G^{-1} J``: maps the 3 local vertex values to the embedded
        gradient 3-vector.  :func:`gradient` applies the factors one at a
        time instead (so constants map to exact zeros); the fused product
        is what the adjoint-side routines transpose.
    normal : ndarray, shape (L, 3)
        Unit triangle normals.
    vertex_mass : ndarray, shape (K,)
        Lumped vertex measure ``(1/3) * sum of 2*area`` over incident
        triangles; the diagonal quadrature weight used by the fit term.
    triangles : ndarray, shape (L, 3)
        Reference to the mesh's index triples (for gather/scatter).
    """

    def __init__(self, vertices, triangles, area, vertex_block, metric,
                 metric_inverse, edge_columns, grad_map, normal, vertex_mass):
        self.vertices = vertices
        self.triangles = triangles
        self.num_vertices = vertices.shape[0]
        self.area = area
        self.jacobian = REFERENCE_JACOBIAN
        self.vertex_block = vertex_block
        self.metric = metric
        self.metric_inverse = metric_inverse
        self.edge_columns = edge_columns
        self.grad_map = grad_map
        self.normal = normal
        self.vertex_mass = vertex_mass

    @property
    def num_triangles(self):
        return self.triangles.shape[0]

    @property
    def total_area(self):
        return float(self.area.sum())


def assemble_geometry(mesh):
    """Precompute areas, metric tensors and gradient maps for every triangle.

    Parameters
    ----------
    mesh : TriangleMesh

    Returns
    -------
    TriangleGeometry

    Raises
    ------
    MeshValidationError
        If a triangle is degenerate (area below the threshold tied to the
        bounding-box diagonal), naming the triangle.
    """
    v = mesh.vertices
    t = mesh.triangles
    e1 = v[t[:, 1]] - v[t[:, 0]]
    e2 = v[t[:, 2]] - v[t[:, 0]]
    cross = np.cross(e1, e2)
    two_area = np.linalg.norm(cross, axis=1)
    threshold = DEGENERATE_AREA_FRACTION * mesh.bounding_box_diagonal() ** 2
    tiny = np.nonzero(0.5 * two_area <= threshold)[0]
    if tiny.size:
        raise MeshValidationError(
            "triangle %d is degenerate (area %.3g below threshold %.3g)"
            % (tiny[0], 0.5 * two_area[tiny[0]], threshold)
        )
    area = 0.5 * two_area
    normal = cross / two_area[:, None]

    # D = V J^T has the two edge vectors as columns; G = D^T D.
    d = np.stack([e1, e2], axis=2)              # (L, 3, 2)
    g = np.einsum("lki,lkj->lij", d, d)         # (L, 2, 2)
    det = g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] * g[:, 1, 0]
    ginv = np.empty_like(g)
    ginv[:, 0, 0] = g[:, 1, 1]
    ginv[:, 1, 1] = g[:, 0, 0]
    ginv[:, 0, 1] = -g[:, 0, 1]
    ginv[:, 1, 0] = -g[:, 1, 0]
    ginv /= det[:, None, None]
    grad_map = np.einsum("lab,lbc,cd->lad", d, ginv, REFERENCE_JACOBIAN)

    vertex_block = v[t].transpose(0, 2, 1)      # columns = corners
    vertex_mass = np.zeros(mesh.num_vertices)
    np.add.at(vertex_mass, t, (2.0 * area / 3.0)[:, None])

    return TriangleGeometry(v, t, area, vertex_block, g, ginv, d, grad_map,
                            normal, vertex_mass)


def gradient(geometry, u):
    """Per-triangle gradient vectors of a piecewise-linear vertex field.

    Parameters
    ----------
    geometry : TriangleGeometry
    u : array_like, shape (K,)

    Returns
    -------
    ndarray, shape (L, 3)
        The constant gradient 3-vector of ``u`` on each triangle.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (geometry.num_vertices,):
        raise ValueError(
            "field has length %d, expected %d" % (u.size, geometry.num_vertices)
        )
    local = u[geometry.triangles]
    # corner differences first: a constant field stays an exact zero
    du = np.stack([local[:, 1] - local[:, 0], local[:, 2] - local[:, 0]], axis=1)
    coef = np.einsum("lij,lj->li", geometry.metric_inverse, du)
    return np.einsum("lai,li->la", geometry.edge_columns, coef)


def divergence(geometry, x):
    """Discrete divergence: the negative adjoint of the weighted gradient.

    Defined so that for any vertex field ``u`` and per-triangle vector
    field ``x``::

        sum_i 2*A_i <grad(u)_i, x_i>  ==  - sum_k u_k * divergence(x)_k

    holds as an exact transpose identity.

    Parameters
    ----------
    geometry : TriangleGeometry
    x : array_like, shape (L, 3)

    Returns
    -------
    ndarray, shape (K,)
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (geometry.num_triangles, 3):
        raise ValueError(
            "vector field has shape %s, expected (%d, 3)"
            % (x.shape, geometry.num_triangles)
        )
    w = np.einsum("lca,lc->la", geometry.grad_map, x)
    w *= (2.0 * geometry.area)[:, None]
    out = np.zeros(geometry.num_vertices)
    np.add.at(out, geometry.triangles, -w)
    return out


def _parse_off(path):
    with open(path, "r") as fh:
        lines = [ln.split("#", 1)[0].strip() for ln in fh]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise MeshFormatError("%s: empty OFF file" % path)
    if lines[0] != "OFF":
        raise MeshFormatError("%s: missing OFF header" % path)
    try:
        counts = [int(tok) for tok in lines[1].split()]
        nv, nf = counts[0], counts[1]
    except (IndexError, ValueError):
        raise MeshFormatError("%s: malformed OFF counts line %r" % (path, lines[1]))
    body = lines[2:]
    if len(body) < nv + nf:
        raise MeshFormatError(
            "%s: expected %d vertex and %d face lines, found %d"
            % (path, nv, nf, len(body))
        )
    try:
        vertices = np.array(
            [[float(tok) for tok in body[i].split()[:3]] for i in range(nv)]
        )
    except (IndexError, ValueError):
        raise MeshFormatError("%s: malformed vertex line" % path)
    faces = []
    for i in range(nv, nv + nf):
        toks = body[i].split()
        try:
            n = int(toks[0])
            idx = [int(tok) for tok in toks[1:1 + n]]
        except (IndexError, ValueError):
            raise MeshFormatError("%s: malformed face line %r" % (path, body[i]))
        if n != 3 or len(idx) != 3:
            raise MeshFormatError(
                "%s: face with %d vertices (only triangles supported)" % (path, n)
            )
        faces.append(idx)
    return vertices, np.array(faces, dtype=np.int64).reshape(-1, 3)


def _parse_obj(path):
    vertices = []
    faces = []
    ignored = set()
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            toks = line.split()
            tag = toks[0]
            if tag == "v":
                try:
                    vertices.append([float(tok) for tok in toks[1:4]])
                except (IndexError, ValueError):
                    raise MeshFormatError("%s:%d: malformed vertex" % (path, lineno))
                if len(toks) < 4:
                    raise MeshFormatError("%s:%d: malformed vertex" % (path, lineno))
            elif tag == "f":
                refs = toks[1:]
                if len(refs) != 3:
                    raise MeshFormatError(
                        "%s:%d: face with %d vertices (only triangles supported)"
                        % (path, lineno, len(refs))
                    )
                try:
                    idx = [int(r.split("/")[0]) for r in refs]
                except ValueError:
                    raise MeshFormatError("%s:%d: malformed face" % (path, lineno))
                if any(i <= 0 for i in idx):
                    raise MeshFormatError(
                        "%s:%d: non-positive face index (relative OBJ indices "
                        "are not supported)" % (path, lineno)
                    )
                faces.append([i - 1 for i in idx])
            else:
                if tag not in ignored:
                    ignored.add(tag)
                    logger.warning("%s: ignoring OBJ record type %r", path, tag)
    return (np.array(vertices, dtype=float).reshape(-1, 3),
            np.array(faces, dtype=np.int64).reshape(-1, 3))


def load_mesh(path, fmt=None):
    """Load and validate a closed triangle mesh from an OFF or OBJ file.

    Parameters
    ----------
    path : str
    fmt : {"off", "obj"}, optional
        Defaults to the file extension.

    Returns
    -------
    TriangleMesh
        Validated: closed, manifold, consistently oriented.

    Raises
    ------
    MeshFormatError
        On parse failures.
    MeshValidationError
        On boundary edges, non-manifold edges, inconsistent orientation or
        bad indices, naming the offending element.
    """
    if fmt is None:
        fmt = os.path.splitext(path)[1].lstrip(".").lower()
    if fmt == "off":
        vertices, triangles = _parse_off(path)
    elif fmt == "obj":
        vertices, triangles = _parse_obj(path)
    else:
        raise MeshFormatError("unsupported mesh format %r" % fmt)
    mesh = TriangleMesh(vertices, triangles)
    mesh.validate(require_closed=True)
    return mesh


def write_off(path, mesh):
    """Write a mesh as an ASCII OFF file."""
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write("%d %d 0\n" % (mesh.num_vertices, mesh.num_triangles))
        for p in mesh.vertices:
            fh.write("%.17g %.17g %.17g\n" % (p[0], p[1], p[2]))
        for t in mesh.triangles:
            fh.write("3 %d %d %d\n" % (t[0], t[1], t[2]))


def write_obj(path, mesh):
    """Write a mesh as a minimal OBJ file (positions and faces only)."""
    with open(path, "w") as fh:
        for p in mesh.vertices:
            fh.write("v %.17g %.17g %.17g\n" % (p[0], p[1], p[2]))
        for t in mesh.triangles:
            fh.write("f %d %d %d\n" % (t[0] + 1, t[1] + 1, t[2] + 1))
