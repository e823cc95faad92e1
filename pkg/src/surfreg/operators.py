"""Forward operators: identity, geodesic Gaussian convolution, noise.

A ForwardOperator is a linear map between vertex fields exposing
`apply`, `apply_adjoint` and `dims`.  The convolution operator blurs a
field with a Gaussian of the *geodesic* distance,

    H_ik proportional to w_k exp(-d_g(v_i, v_k)^2 / (2 tau^2)),

with lumped vertex-area weights w_k and every row normalized to sum 1,
so constants pass through unchanged.  Entries past 4*tau are truncated,
which keeps the matrix sparse; the adjoint is the plain transpose.
"""

import logging

import numpy as np
import scipy.sparse as sp

from .geodesic import geodesic_distances

logger = logging.getLogger(__name__)

TRUNCATION_FACTOR = 4.0


class ForwardOperator:
    """Linear operator interface used by the variational solver."""

    @property
    def dims(self):
        """(input length, output length)."""
        raise NotImplementedError

    def apply(self, u):
        raise NotImplementedError

    def apply_adjoint(self, r):
        raise NotImplementedError


class IdentityOperator(ForwardOperator):
    def __init__(self, n):
        self._n = int(n)

    @property
    def dims(self):
        return (self._n, self._n)

    def _check(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape != (self._n,):
            raise ValueError("field has shape %s, expected (%d,)" % (u.shape, self._n))
        return u

    def apply(self, u):
        return self._check(u)

    def apply_adjoint(self, r):
        return self._check(r)


def identity_operator(n):
    """The denoising forward map: identity on length-n vertex fields."""
    return IdentityOperator(n)


class GeodesicKernel(ForwardOperator):
    """Row-normalized geodesic Gaussian blur.

    Attributes
    ----------
    tau : float
        Kernel width (standard deviation, geodesic length units).
    matrix : scipy.sparse.csr_matrix, shape (K, K)
        The normalized kernel applied by `apply`.
    gauss : scipy.sparse.csr_matrix, shape (K, K)
        The raw Gaussian factor exp(-d^2/(2 tau^2)) before mass
        weighting and row normalization; kept because its asymmetry is
        exactly the front-propagation asymmetry and is what the
        symmetry diagnostics inspect.
    """

    def __init__(self, tau, matrix, gauss):
        self.tau = float(tau)
        self.matrix = matrix
        self.gauss = gauss
        self._adjoint = matrix.T.tocsr()

    @property
    def dims(self):
        n = self.matrix.shape[0]
        return (n, n)

    def _check(self, u):
        u = np.asarray(u, dtype=float)
        n = self.matrix.shape[0]
        if u.shape != (n,):
            raise ValueError("field has shape %s, expected (%d,)" % (u.shape, n))
        return u

    def apply(self, u):
        return self.matrix @ self._check(u)

    def apply_adjoint(self, r):
        return self._adjoint @ self._check(r)


def build_convolution(geometry, tau, truncate=True):
    """Assemble the geodesic Gaussian kernel, one front per row.

    Parameters
    ----------
    geometry : TriangleGeometry
    tau : float
        Kernel width, > 0.
    truncate : bool
        Zero all entries with d > 4*tau (default).  Disable to get the
        dense kernel for small diagnostic meshes.

    Returns
    -------
    GeodesicKernel
    """
    if tau <= 0:
        raise ValueError("tau must be > 0")
    k = geometry.num_vertices
    cutoff = TRUNCATION_FACTOR * tau if truncate else None
    mass = geometry.vertex_mass
    indptr = np.zeros(k + 1, dtype=np.int64)
    index_rows = []
    norm_rows = []
    gauss_rows = []
    for i in range(k):
        d = geodesic_distances(geometry, i, max_dist=cutoff)
        if cutoff is not None:
            cols = np.nonzero(d <= cutoff)[0]
        else:
            cols = np.nonzero(np.isfinite(d))[0]
        g = np.exp(-0.5 * (d[cols] / tau) ** 2)
        row = mass[cols] * g
        total = row.sum()
        index_rows.append(cols)
        norm_rows.append(row / total)
        gauss_rows.append(g)
        indptr[i + 1] = indptr[i] + cols.size
    indices = np.concatenate(index_rows)
    matrix = sp.csr_matrix(
        (np.concatenate(norm_rows), indices, indptr), shape=(k, k)
    )
    gauss = sp.csr_matrix(
        (np.concatenate(gauss_rows), indices.copy(), indptr.copy()), shape=(k, k)
    )
    return GeodesicKernel(tau, matrix, gauss)


def add_noise(u, sigma, seed):
    """Add i.i.d. centered Gaussian noise, reproducible from the seed."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    u = np.asarray(u, dtype=float)
    rng = np.random.default_rng(seed)
    return u + rng.normal(0.0, sigma, size=u.shape)


def save_kernel_triplets(path, kernel):
    """Dump a kernel matrix as binary triplets.

    Layout: three little-endian int64 (rows, cols, nnz) followed by nnz
    records of (int64 row, int64 col, float64 value) in row-major order.
    """
    coo = kernel.matrix.tocoo()
    rec = np.zeros(coo.nnz, dtype=[("i", "<i8"), ("k", "<i8"), ("v", "<f8")])
    rec["i"] = coo.row
    rec["k"] = coo.col
    rec["v"] = coo.data
    with open(path, "wb") as fh:
        np.array([coo.shape[0], coo.shape[1], coo.nnz], dtype="<i8").tofile(fh)
        rec.tofile(fh)


def load_kernel_triplets(path):
    """Read a matrix written by :func:`save_kernel_triplets`."""
    with open(path, "rb") as fh:
        rows, cols, nnz = np.fromfile(fh, dtype="<i8", count=3)
        rec = np.fromfile(fh, dtype=[("i", "<i8"), ("k", "<i8"), ("v", "<f8")], count=nnz)
    if rec.size != nnz:
        raise ValueError("%s: truncated triplet file" % path)
    return sp.csr_matrix((rec["v"], (rec["i"], rec["k"])), shape=(int(rows), int(cols)))
