"""Landweber (explicit gradient descent) minimization of the objective.

The iteration is

    u_{k+1} = u_k - kappa * grad T(u_k)

stopped the first time the sup-norm of the update drops below the
tolerance, or at the iteration cap.  The step size can be given
explicitly or estimated: the largest curvature of the quadratic parts
comes from a short power iteration, the p=1 part contributes the
8/epsilon worst-case bound, and 90% of the resulting stable step is
used.  Because the p=1 bound is only an estimate, an increase of the
objective triggers halving of kappa and a retry of the step; each
halving is recorded in the report.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .functional import regularizer_gradient, tikhonov_gradient, tikhonov_value
from .operators import IdentityOperator

logger = logging.getLogger(__name__)

POWER_ITERATIONS = 30
STEP_SAFETY = 0.9
MAX_HALVINGS = 60


@dataclass
class SolverConfig:
    """Iteration controls.

    kappa is either a positive float or "auto"; tol defaults to
    1e-6 times the data range when left unset.
    """

    kappa: object = "auto"
    max_iter: int = 5000
    tol: float = None
    log_every: int = 50

    def __post_init__(self):
        if self.kappa != "auto":
            self.kappa = float(self.kappa)
            if self.kappa <= 0:
                raise ValueError("kappa must be > 0 or 'auto'")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol is not None and self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")


@dataclass
class SolveReport:
    """What one solve did: counts, final update size, objective trace."""

    iterations: int = 0
    final_update: float = np.inf
    termination: str = "max_iter"
    kappa: float = np.nan
    halvings: int = 0
    trace: list = field(default_factory=list)

    def as_dict(self):
        return {
            "iterations": self.iterations,
            "final_update": self.final_update,
            "termination": self.termination,
            "kappa": self.kappa,
            "halvings": self.halvings,
        }


def power_iteration(apply_fn, n, iterations=POWER_ITERATIONS, seed=0):
    """Estimate the largest eigenvalue of a symmetric PSD linear map."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iterations):
        w = apply_fn(v)
        lam = float(np.linalg.norm(w))
        if not np.isfinite(lam):
            raise RuntimeError("power iteration produced a non-finite value")
        if lam == 0.0:
            return 0.0
        v = w / lam
    return lam


def auto_step(problem):
    """Stable Landweber step for the given problem.

    Returns 0.9 * 2 / (Lambda_fit + alpha * Lambda_reg) where Lambda_fit
    is a power-iteration estimate of the fit curvature F^T M F and
    Lambda_reg is the p=2 curvature estimate, or the 8/epsilon bound for
    the smoothed p=1 penalty.
    """
    geom = problem.geometry
    k = geom.num_vertices
    lam_fit = power_iteration(lambda v: fit_gradient_quadratic(problem, v), k)
    if problem.regularizer.p == 1:
        lam_reg = 8.0 / problem.regularizer.epsilon
    else:
        reg = problem.regularizer
        lam_reg = power_iteration(lambda v: regularizer_gradient(geom, reg, v), k)
    denom = lam_fit + problem.alpha * lam_reg
    if denom <= 0 or not np.isfinite(denom):
        raise RuntimeError("could not estimate a stable step size (curvature %r)" % denom)
    return STEP_SAFETY * 2.0 / denom


def fit_gradient_quadratic(problem, v):
    """The fit Hessian F^T diag(mass) F applied to v (used by auto_step)."""
    return problem.operator.apply_adjoint(
        problem.geometry.vertex_mass * problem.operator.apply(v)
    )


def default_start(problem):
    """Warm start: the data itself when F is the identity, else F^T y."""
    if isinstance(problem.operator, IdentityOperator):
        return problem.data.copy()
    return problem.operator.apply_adjoint(problem.data)


def landweber_minimize(problem, u0=None, config=None):
    """Minimize the objective by plain gradient descent.

    Parameters
    ----------
    problem : TikhonovProblem
    u0 : array_like, optional
        Start iterate; defaults to the warm start of :func:`default_start`.
    config : SolverConfig, optional

    Returns
    -------
    (ndarray, SolveReport)
        Final iterate and the solve telemetry.  The returned objective
        never exceeds the objective at u0 (monotone safeguard).
    """
    cfg = config if config is not None else SolverConfig()
    u = np.array(default_start(problem) if u0 is None else u0, dtype=float)
    if u.shape != (problem.geometry.num_vertices,):
        raise ValueError(
            "u0 has shape %s, expected (%d,)" % (u.shape, problem.geometry.num_vertices)
        )
    kappa = auto_step(problem) if cfg.kappa == "auto" else cfg.kappa
    tol = cfg.tol
    if tol is None:
        span = float(np.ptp(problem.data))
        tol = 1e-6 * span if span > 0 else 1e-6

    report = SolveReport(kappa=kappa)
    obj = tikhonov_value(problem, u)
    report.trace.append((0, obj))
    for it in range(1, cfg.max_iter + 1):
        g = tikhonov_gradient(problem, u)
        if not np.all(np.isfinite(g)):
            raise RuntimeError(
                "gradient contains NaN/Inf at iteration %d; the step size "
                "is likely too large (kappa=%.3g)" % (it, kappa)
            )
        while True:
            u_next = u - kappa * g
            obj_next = tikhonov_value(problem, u_next)
            if obj_next <= obj * (1.0 + 1e-12) + 1e-300:
                break
            report.halvings += 1
            if report.halvings > MAX_HALVINGS:
                raise RuntimeError(
                    "objective kept increasing after %d step halvings; "
                    "gradient may be inconsistent" % MAX_HALVINGS
                )
            kappa *= 0.5
            report.kappa = kappa
        update = float(np.max(np.abs(u_next - u)))
        u = u_next
        obj = obj_next
        report.iterations = it
        report.final_update = update
        if it % cfg.log_every == 0:
            report.trace.append((it, obj))
            logger.debug("iter %d obj %.6e update %.3e", it, obj, update)
        if update < tol:
            report.termination = "converged"
            break
    else:
        report.termination = "max_iter"
    if report.trace[-1][0] != report.iterations:
        report.trace.append((report.iterations, obj))
    return u, report
