"""Spherical harmonics and the great-circle (Funk) transform on S^2.

The real orthonormal basis is indexed by j = l(l+1) + m with
l = 0..max_degree and m = -l..l, so a degree bound L gives R = (L+1)^2
functions.  In this basis the great-circle integral transform is
diagonal with eigenvalues 2*pi*P_l(0): zero on every odd degree (odd
functions integrate to zero over any great circle), which is why the
inversion is regularized by the Laplace-Beltrami spectrum l(l+1).

Associated Legendre functions are evaluated with the standard stable
normalized recurrences; no external special-function library is used,
which keeps values reliable up to degrees far beyond the ~26 needed
here.
"""

import csv
import logging

import numpy as np
import scipy.linalg

from .landweber import SolveReport, SolverConfig, power_iteration

logger = logging.getLogger(__name__)


def legendre_at_zero(l):
    """P_l(0) by the recurrence P_l(0) = -P_{l-2}(0) * (l-1)/l.

    Zero for odd l; for even l this reproduces the alternating ratio of
    double factorials (-1)^{l/2} (l-1)!!/l!!.
    """
    if l < 0:
        raise ValueError("l must be >= 0")
    if l % 2 == 1:
        return 0.0
    value = 1.0
    for k in range(2, l + 1, 2):
        value *= -(k - 1.0) / k
    return value


def index_of(l, m):
    """Flat basis index j = l(l+1) + m."""
    return l * (l + 1) + m


def _normalized_legendre(cos_t, sin_t, max_degree):
    """Fully-normalized associated Legendre values, shape (L+1, L+1, N).

    Entry [l, m] is sqrt((2l+1) (l-m)! / (l+m)!) * P_l^m(cos_t) without
    the Condon-Shortley sign, normalized so that the corresponding real
    harmonics have unit L2 norm on the sphere after division by
    sqrt(4*pi) (m=0) resp. sqrt(2*pi) (m>0, with cos/sin factors).
    """
    L = max_degree
    n = cos_t.shape[0]
    p = np.zeros((L + 1, L + 1, n))
    p[0, 0] = 1.0
    for m in range(1, L + 1):
        p[m, m] = np.sqrt((2.0 * m + 1.0) / (2.0 * m)) * sin_t * p[m - 1, m - 1]
    for m in range(L):
        p[m + 1, m] = np.sqrt(2.0 * m + 3.0) * cos_t * p[m, m]
    for m in range(L + 1):
        for l in range(m + 2, L + 1):
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            p[l, m] = a * (cos_t * p[l - 1, m] - b * p[l - 2, m])
    return p


def sh_matrix(xyz, max_degree):
    """Real orthonormal spherical harmonics at unit points, shape (N, R)."""
    xyz = np.asarray(xyz, dtype=float)
    x, y, z = xyz.T
    cos_t = np.clip(z, -1.0, 1.0)
    sin_t = np.sqrt(np.maximum(0.0, x * x + y * y))
    phi = np.arctan2(y, x)
    p = _normalized_legendre(cos_t, sin_t, max_degree)
    r = (max_degree + 1) ** 2
    b = np.empty((xyz.shape[0], r))
    inv_sqrt4pi = 1.0 / np.sqrt(4.0 * np.pi)
    sqrt2 = np.sqrt(2.0)
    for l in range(max_degree + 1):
        b[:, index_of(l, 0)] = p[l, 0] * inv_sqrt4pi
        for m in range(1, l + 1):
            base = sqrt2 * inv_sqrt4pi * p[l, m]
            b[:, index_of(l, m)] = base * np.cos(m * phi)
            b[:, index_of(l, -m)] = base * np.sin(m * phi)
    return b


class SpherePointSet:
    """N unit vectors used as sampling nodes.

    Points must lie on the unit sphere to 1e-12; pass normalize=True to
    rescale (used when reading external files with rounded coordinates).
    """

    def __init__(self, xyz, normalize=False):
        xyz = np.array(xyz, dtype=float).reshape(-1, 3)
        norms = np.linalg.norm(xyz, axis=1)
        if normalize:
            if np.any(norms == 0):
                raise ValueError("point set contains a zero vector")
            if np.max(np.abs(norms - 1.0)) > 1e-6:
                logger.warning("renormalizing points deviating from the unit sphere")
            xyz = xyz / norms[:, None]
        elif np.max(np.abs(norms - 1.0)) > 1e-12:
            raise ValueError("points must lie on the unit sphere (max |r-1| = %.3g)"
                             % float(np.max(np.abs(norms - 1.0))))
        self.xyz = xyz

    def __len__(self):
        return self.xyz.shape[0]


def fibonacci_points(n):
    """Near-uniform golden-angle spiral points on the unit sphere."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return SpherePointSet([[0.0, 0.0, 1.0]])
    i = np.arange(n)
    z = 1.0 - (2.0 * i + 1.0) / n
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    pts = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    return SpherePointSet(pts)


def load_points(path):
    """Read whitespace-separated "x y z" lines into a SpherePointSet."""
    pts = np.loadtxt(path, dtype=float)
    return SpherePointSet(pts, normalize=True)


def save_points(path, points):
    np.savetxt(path, points.xyz, fmt="%.17g")


class ShBasis:
    """Sampled basis plus the diagonal spectra used by the inversion.

    Attributes
    ----------
    max_degree : int
    points : SpherePointSet
    eval_matrix : ndarray, shape (N, R)
        Basis functions evaluated at the sample points.
    degrees, orders : ndarray, shape (R,)
        l and m per flat index j = l(l+1)+m.
    funk_spectrum : ndarray, shape (R,)
        2*pi*P_l(0) per index; exactly zero on odd degrees.
    lb_spectrum : ndarray, shape (R,)
        l(l+1) per index.
    """

    def __init__(self, points, max_degree):
        if max_degree < 0:
            raise ValueError("max_degree must be >= 0")
        self.max_degree = int(max_degree)
        self.points = points
        r = (max_degree + 1) ** 2
        if len(points) < r:
            logger.warning(
                "%d sample points for %d basis functions: least squares "
                "is underdetermined", len(points), r
            )
        self.eval_matrix = sh_matrix(points.xyz, max_degree)
        degrees = np.empty(r, dtype=np.int64)
        orders = np.empty(r, dtype=np.int64)
        for l in range(max_degree + 1):
            for m in range(-l, l + 1):
                degrees[index_of(l, m)] = l
                orders[index_of(l, m)] = m
        self.degrees = degrees
        self.orders = orders
        self.funk_spectrum = 2.0 * np.pi * np.array(
            [legendre_at_zero(l) for l in degrees]
        )
        self.lb_spectrum = (degrees * (degrees + 1)).astype(float)
        self._gram = None

    @property
    def num_functions(self):
        return self.eval_matrix.shape[1]

    def synthesize(self, c):
        c = np.asarray(c, dtype=float)
        if c.shape != (self.num_functions,):
            raise ValueError(
                "coefficients have shape %s, expected (%d,)"
                % (c.shape, self.num_functions)
            )
        return self.eval_matrix @ c

    def gram(self):
        """Cached B^T B."""
        if self._gram is None:
            self._gram = self.eval_matrix.T @ self.eval_matrix
        return self._gram


def fit_coefficients(basis, samples):
    """Least-squares basis coefficients of sampled values.

    Solved by orthogonal factorization rather than the normal equations;
    refuses sample sets that leave the basis matrix numerically rank
    deficient.
    """
    samples = np.asarray(samples, dtype=float)
    n = basis.eval_matrix.shape[0]
    if samples.shape != (n,):
        raise ValueError("samples have shape %s, expected (%d,)" % (samples.shape, n))
    c, _, _, sv = np.linalg.lstsq(basis.eval_matrix, samples, rcond=None)
    if sv[-1] <= 0 or sv[0] / sv[-1] > 1e12:
        raise ValueError(
            "basis matrix is numerically rank deficient (condition %.3g): "
            "use more sample points or a lower max_degree"
            % (np.inf if sv[-1] <= 0 else sv[0] / sv[-1])
        )
    return c


def funk_forward(basis, c):
    """Great-circle transform in coefficient space: multiply by 2*pi*P_l(0)."""
    c = np.asarray(c, dtype=float)
    if c.shape != (basis.num_functions,):
        raise ValueError(
            "coefficients have shape %s, expected (%d,)" % (c.shape, basis.num_functions)
        )
    return basis.funk_spectrum * c


def _inversion_system(basis, y_samples, alpha):
    if alpha <= 0:
        raise ValueError(
            "alpha must be > 0: the transform annihilates all odd-degree "
            "harmonics, so without the Laplace-Beltrami penalty the normal "
            "matrix is rank deficient and the system has no unique solution"
        )
    y_samples = np.asarray(y_samples, dtype=float)
    n = basis.eval_matrix.shape[0]
    if y_samples.shape != (n,):
        raise ValueError("data has shape %s, expected (%d,)" % (y_samples.shape, n))
    f = basis.funk_spectrum
    m = f[:, None] * basis.gram() * f[None, :]
    m[np.diag_indices_from(m)] += alpha * basis.lb_spectrum
    rhs = f * (basis.eval_matrix.T @ y_samples)
    return m, rhs


def funk_invert_direct(basis, y_samples, alpha):
    """Solve (F B^T B F + alpha L) c = F B^T y by a definite direct solve."""
    m, rhs = _inversion_system(basis, y_samples, alpha)
    return scipy.linalg.solve(m, rhs, assume_a="pos")


def funk_invert_landweber(basis, y_samples, alpha, config=None):
    """Landweber iteration on the same optimality system.

    Returns (coefficients, SolveReport).  With the automatic step the
    quadratic objective 0.5||B F c - y||^2 + (alpha/2) c' L c decreases
    monotonically and the iterates converge to the direct solution.
    """
    m, rhs = _inversion_system(basis, y_samples, alpha)
    cfg = config if config is not None else SolverConfig(max_iter=200000)
    if cfg.kappa == "auto":
        lam = power_iteration(lambda v: m @ v, m.shape[0])
        if lam <= 0:
            raise RuntimeError("power iteration failed to bound the curvature")
        kappa = 0.9 * 2.0 / lam
    else:
        kappa = cfg.kappa
    c = np.zeros(m.shape[0])
    report = SolveReport(kappa=kappa)
    first_update = None
    residual = m @ c - rhs
    y2 = float(np.asarray(y_samples, dtype=float) @ np.asarray(y_samples, dtype=float))

    def objective(cc, res):
        # 0.5 c'Mc - c'rhs + 0.5 y'y == 0.5||BFc - y||^2 + (alpha/2) c'Lc
        return 0.5 * float(cc @ (res - rhs)) + 0.5 * y2

    report.trace.append((0, objective(c, residual)))
    for it in range(1, cfg.max_iter + 1):
        step = kappa * residual
        if not np.all(np.isfinite(step)):
            raise RuntimeError("iteration diverged (non-finite update); reduce kappa")
        c = c - step
        residual = m @ c - rhs
        update = float(np.max(np.abs(step)))
        if first_update is None:
            first_update = update if update > 0 else 1.0
        report.iterations = it
        report.final_update = update
        if it % cfg.log_every == 0:
            report.trace.append((it, objective(c, residual)))
        tol = cfg.tol if cfg.tol is not None else 1e-10 * first_update
        if update < tol:
            report.termination = "converged"
            break
    else:
        report.termination = "max_iter"
    if report.trace[-1][0] != report.iterations:
        report.trace.append((report.iterations, objective(c, residual)))
    return c, report


def trig_test_function(xyz):
    """cos(3 pi (z - y)) + cos(3 pi x) at unit vectors; even under x -> -x."""
    xyz = np.asarray(xyz, dtype=float)
    x, y, z = xyz.T
    return np.cos(3.0 * np.pi * (z - y)) + np.cos(3.0 * np.pi * x)


def save_coefficients(path, basis, c):
    """Write coefficients as CSV rows "j,l,m,value"."""
    c = np.asarray(c, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["j", "l", "m", "value"])
        for j in range(basis.num_functions):
            writer.writerow([j, basis.degrees[j], basis.orders[j], repr(float(c[j]))])


def load_coefficients(path):
    """Read a coefficient CSV; returns (values, degrees, orders) by j."""
    rows = []
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:4] != ["j", "l", "m", "value"]:
            raise ValueError("%s: unexpected coefficient header %r" % (path, header))
        for row in reader:
            rows.append((int(row[0]), int(row[1]), int(row[2]), float(row[3])))
    rows.sort()
    c = np.array([r[3] for r in rows])
    degrees = np.array([r[1] for r in rows], dtype=np.int64)
    orders = np.array([r[2] for r in rows], dtype=np.int64)
    return c, degrees, orders
