"""Command-line pipelines: denoise, deblur, funk-invert, make-testdata.

Every pipeline reads meshes/fields from files, runs the corresponding
solver, and writes any of: the result field, a flat "key = value"
metrics file, a colored PLY, and a PNG report figure.  All pipelines
are deterministic for a fixed --seed.
"""

import argparse
import logging
import sys
import time

import numpy as np

from . import fieldio, report, sphere, synthetic
from .functional import Regularizer, TikhonovProblem
from .landweber import SolverConfig, landweber_minimize
from .mesh import load_mesh, assemble_geometry
from .operators import add_noise, build_convolution, identity_operator

logger = logging.getLogger(__name__)


def _kappa(text):
    if text == "auto":
        return "auto"
    return float(text)


def _add_output_args(p):
    p.add_argument("--out-field", help="write the result field here")
    p.add_argument("--out-metrics", help="write run metrics (key = value lines)")
    p.add_argument("--out-ply", help="write the result as a colored ASCII PLY")
    p.add_argument("--out-figure", help="write a PNG report figure")
    p.add_argument("--colormap", default="viridis", help="PLY colormap (default viridis)")


def _add_solver_args(p):
    p.add_argument("--alpha", type=float, required=True, help="regularization weight > 0")
    p.add_argument("--p", type=int, choices=(1, 2), default=2,
                   help="penalty exponent: 1 edge-preserving, 2 smoothing (default 2)")
    p.add_argument("--epsilon", type=float,
                   help="p=1 smoothing width (default: 1e-3 of the data range)")
    p.add_argument("--kappa", type=_kappa, default="auto",
                   help="step size, or 'auto' for the stability estimate (default auto)")
    p.add_argument("--max-iter", type=int, default=5000, help="iteration cap (default 5000)")
    p.add_argument("--tol", type=float,
                   help="sup-norm update stopping threshold (default 1e-6 of data range)")


def _add_common_args(p):
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--threads", type=int, default=1,
                   help="accepted for interface compatibility; the vectorized "
                        "kernels are deterministic for any value")
    p.add_argument("--snr-unweighted", action="store_true",
                   help="use plain Euclidean norms in SNR instead of lumped "
                        "vertex-area weights")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="surfreg",
        description="Variational denoising, deblurring and great-circle "
                    "inversion for scalar fields on closed triangle meshes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("denoise", help="remove noise from a vertex field (identity forward map)")
    p.add_argument("--mesh", required=True, help="closed mesh, OFF or OBJ")
    p.add_argument("--field", required=True, help="observed vertex field file")
    p.add_argument("--truth", help="reference field for SNR reporting")
    p.add_argument("--sigma", type=float, default=0.0,
                   help="add this much Gaussian noise to the input first (default 0)")
    _add_solver_args(p)
    _add_common_args(p)
    _add_output_args(p)
    p.set_defaults(run=cmd_denoise)

    p = sub.add_parser("deblur", help="deconvolve a geodesic Gaussian blur")
    p.add_argument("--mesh", required=True, help="closed mesh, OFF or OBJ")
    p.add_argument("--field", required=True, help="observed (blurred) vertex field file")
    p.add_argument("--truth", help="reference field for SNR reporting")
    p.add_argument("--sigma", type=float, default=0.0,
                   help="add this much Gaussian noise to the input first (default 0)")
    p.add_argument("--tau", type=float,
                   help="kernel width (default: 2x mean edge length)")
    _add_solver_args(p)
    _add_common_args(p)
    _add_output_args(p)
    p.set_defaults(run=cmd_deblur)

    p = sub.add_parser("funk-invert",
                       help="recover a sphere function from great-circle integral samples")
    p.add_argument("--points", required=True,
                   help="sample nodes: an integer (that many spiral points) or an 'x y z' file")
    p.add_argument("--degree", type=int, default=26, help="basis degree bound (default 26)")
    p.add_argument("--data", help="transformed samples at the nodes (field file)")
    p.add_argument("--synthetic", action="store_true",
                   help="generate data from the built-in even test function")
    p.add_argument("--truth", help="reference samples at the nodes for SNR")
    p.add_argument("--sigma", type=float, default=0.0,
                   help="noise added to synthetic data (default 0)")
    p.add_argument("--method", choices=("direct", "landweber"), default="direct")
    p.add_argument("--alpha", type=float, required=True, help="regularization weight > 0")
    p.add_argument("--kappa", type=_kappa, default="auto")
    p.add_argument("--max-iter", type=int, default=200000)
    p.add_argument("--tol", type=float)
    p.add_argument("--out-coeffs", help="write recovered coefficients as CSV")
    _add_common_args(p)
    _add_output_args(p)
    p.set_defaults(run=cmd_funk)

    p = sub.add_parser("make-testdata", help="emit reproducible synthetic inputs")
    p.add_argument("--kind", choices=("two-region", "smooth", "blurred", "funk"),
                   default="two-region")
    p.add_argument("--mesh", help="mesh for the vertex-field kinds")
    p.add_argument("--tau", type=float, help="blur width for --kind blurred")
    p.add_argument("--sigma", type=float, default=0.0, help="noise level (default 0)")
    p.add_argument("--points", help="node count or file for --kind funk")
    p.add_argument("--degree", type=int, default=26, help="basis degree for --kind funk")
    p.add_argument("--out-field", help="clean field / clean samples output")
    p.add_argument("--out-noisy", help="observed (degraded) field output")
    p.add_argument("--out-points", help="node file output for --kind funk")
    p.add_argument("--out-data", help="transformed noisy samples for --kind funk")
    _add_common_args(p)
    p.set_defaults(run=cmd_testdata)

    return parser


def _load_problem_inputs(args):
    mesh = load_mesh(args.mesh)
    geometry = assemble_geometry(mesh)
    y = fieldio.read_field(args.field, expected_length=mesh.num_vertices)
    if args.sigma > 0:
        y = add_noise(y, args.sigma, args.seed)
    truth = None
    if args.truth:
        truth = fieldio.read_field(args.truth, expected_length=mesh.num_vertices)
    return mesh, geometry, y, truth


def _solve_and_write(args, mesh, geometry, operator, y, truth):
    started = time.perf_counter()
    problem = TikhonovProblem(
        geometry, operator, y, args.alpha, Regularizer(args.p, args.epsilon)
    )
    cfg = SolverConfig(kappa=args.kappa, max_iter=args.max_iter, tol=args.tol)
    u, solve_report = landweber_minimize(problem, None, cfg)
    runtime = time.perf_counter() - started

    weights = None if args.snr_unweighted else geometry.vertex_mass
    metrics = fieldio.RunMetrics(
        alpha=args.alpha,
        p=args.p,
        epsilon=problem.regularizer.epsilon if args.p == 1 else 0.0,
        kappa=solve_report.kappa,
        iterations=solve_report.iterations,
        runtime_s=runtime,
        termination=solve_report.termination,
    )
    if truth is not None:
        metrics.snr_input_db = fieldio.snr(truth, y, weights)
        metrics.snr_output_db = fieldio.snr(truth, u, weights)

    if args.out_field:
        fieldio.write_field(args.out_field, u)
    if args.out_metrics:
        fieldio.write_metrics(args.out_metrics, metrics.as_dict())
    if args.out_ply:
        fieldio.export_colored_mesh(mesh, u, args.out_ply, args.colormap)
    if args.out_figure:
        fields = {"observed": y, "result": u}
        if truth is not None:
            fields["reference"] = truth
        report.save_run_figure(args.out_figure, solve_report, fields)
    print(
        "%s: %d iterations (%s), objective %.6g, snr %.4g -> %.4g dB"
        % (args.command, solve_report.iterations, solve_report.termination,
           solve_report.trace[-1][1], metrics.snr_input_db, metrics.snr_output_db)
    )
    return 0


def cmd_denoise(args):
    mesh, geometry, y, truth = _load_problem_inputs(args)
    return _solve_and_write(args, mesh, geometry,
                            identity_operator(mesh.num_vertices), y, truth)


def cmd_deblur(args):
    mesh, geometry, y, truth = _load_problem_inputs(args)
    tau = args.tau
    if tau is None:
        tau = 2.0 * float(mesh.edge_lengths().mean())
        logger.info("tau defaulted to 2x mean edge length = %.4g", tau)
    kernel = build_convolution(geometry, tau)
    return _solve_and_write(args, mesh, geometry, kernel, y, truth)


def _resolve_points(spec):
    try:
        n = int(spec)
    except ValueError:
        return sphere.load_points(spec)
    return sphere.fibonacci_points(n)


def cmd_funk(args):
    points = _resolve_points(args.points)
    basis = sphere.ShBasis(points, args.degree)
    truth = None
    if args.synthetic:
        truth = sphere.trig_test_function(points.xyz)
        c_true = sphere.fit_coefficients(basis, truth)
        y = basis.synthesize(sphere.funk_forward(basis, c_true))
        if args.sigma > 0:
            y = add_noise(y, args.sigma, args.seed)
    elif args.data:
        y = fieldio.read_field(args.data, expected_length=len(points))
    else:
        raise ValueError("funk-invert needs --data FILE or --synthetic")
    if args.truth:
        truth = fieldio.read_field(args.truth, expected_length=len(points))

    started = time.perf_counter()
    solve_report = None
    if args.method == "direct":
        c = sphere.funk_invert_direct(basis, y, args.alpha)
    else:
        cfg = SolverConfig(kappa=args.kappa, max_iter=args.max_iter, tol=args.tol)
        c, solve_report = sphere.funk_invert_landweber(basis, y, args.alpha, cfg)
    runtime = time.perf_counter() - started
    u = basis.synthesize(c)

    metrics = fieldio.RunMetrics(
        alpha=args.alpha,
        p=2,
        epsilon=0.0,
        kappa=solve_report.kappa if solve_report else float("nan"),
        iterations=solve_report.iterations if solve_report else 0,
        runtime_s=runtime,
        termination=solve_report.termination if solve_report else "direct",
    )
    if truth is not None:
        metrics.snr_input_db = fieldio.snr(truth, y)
        metrics.snr_output_db = fieldio.snr(truth, u)
    extras = metrics.as_dict()
    extras["degree"] = args.degree
    extras["num_points"] = len(points)
    extras["lb_seminorm"] = float(np.sqrt(c @ (basis.lb_spectrum * c)))

    if args.out_coeffs:
        sphere.save_coefficients(args.out_coeffs, basis, c)
    if args.out_field:
        fieldio.write_field(args.out_field, u)
    if args.out_metrics:
        fieldio.write_metrics(args.out_metrics, extras)
    if args.out_figure:
        sets = {"recovered": c}
        if args.synthetic:
            sets["reference"] = c_true
        report.save_spectrum_figure(args.out_figure, basis, sets, solve_report)
    print(
        "funk-invert: %s, lb seminorm %.6g, snr %.4g -> %.4g dB"
        % (extras["termination"], extras["lb_seminorm"],
           metrics.snr_input_db, metrics.snr_output_db)
    )
    return 0


def cmd_testdata(args):
    if args.kind in ("two-region", "smooth", "blurred"):
        if not args.mesh:
            raise ValueError("--mesh is required for --kind %s" % args.kind)
        mesh = load_mesh(args.mesh)
        if args.kind == "two-region":
            clean = synthetic.two_region_field(mesh)
        else:
            clean = synthetic.smooth_field(mesh)
        observed = clean
        if args.kind == "blurred":
            geometry = assemble_geometry(mesh)
            tau = args.tau or 2.0 * float(mesh.edge_lengths().mean())
            observed = build_convolution(geometry, tau).apply(clean)
        observed = add_noise(observed, args.sigma, args.seed)
        if args.out_field:
            fieldio.write_field(args.out_field, clean)
        if args.out_noisy:
            fieldio.write_field(args.out_noisy, observed)
        print("make-testdata: %s on %d vertices (sigma=%g, seed=%d)"
              % (args.kind, mesh.num_vertices, args.sigma, args.seed))
        return 0

    # funk: nodes, clean samples, noisy transformed samples
    points = _resolve_points(args.points or "900")
    basis = sphere.ShBasis(points, args.degree)
    truth = sphere.trig_test_function(points.xyz)
    c_true = sphere.fit_coefficients(basis, truth)
    data = basis.synthesize(sphere.funk_forward(basis, c_true))
    data = add_noise(data, args.sigma, args.seed)
    if args.out_points:
        sphere.save_points(args.out_points, points)
    if args.out_field:
        fieldio.write_field(args.out_field, truth)
    if args.out_data:
        fieldio.write_field(args.out_data, data)
    print("make-testdata: funk with %d points, degree %d (sigma=%g, seed=%d)"
          % (len(points), args.degree, args.sigma, args.seed))
    return 0


def cli_run(argv=None):
    """Parse arguments, dispatch, and map failures to exit code 1."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if not logging.getLogger().handlers:
        logging.basicConfig(level=logging.INFO,
                            format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.run(args)
    except (ValueError, RuntimeError, OSError) as exc:
        module = type(exc).__module__
        origin = module if module.startswith("surfreg") else "surfreg"
        print("error [%s]: %s" % (origin, exc), file=sys.stderr)
        return 1


def main():
    sys.exit(cli_run())


if __name__ == "__main__":
    main()
