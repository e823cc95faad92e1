"""Field, metrics and colored-mesh I/O plus the SNR fidelity metric.

Vertex fields travel as plain text, one value per line, or as CSV
"index,value" rows.  Run metrics are a flat "key = value" file chosen
to diff cleanly; parsing it back yields the exact written values.
Colored meshes go out as ASCII PLY with 8-bit RGB per vertex.
"""

import math
from dataclasses import dataclass

import numpy as np


def write_field(path, values, fmt="plain"):
    """Write a vertex field; fmt is "plain" (one value per line) or "csv"."""
    values = np.asarray(values, dtype=float)
    with open(path, "w") as fh:
        if fmt == "plain":
            for v in values:
                fh.write("%.17g\n" % v)
        elif fmt == "csv":
            for i, v in enumerate(values):
                fh.write("%d,%.17g\n" % (i, v))
        else:
            raise ValueError("unknown field format %r" % fmt)


def read_field(path, expected_length=None):
    """Read a vertex field written by :func:`write_field` (either format)."""
    with open(path, "r") as fh:
        lines = [ln.strip() for ln in fh]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if any("," in ln for ln in lines):
        pairs = []
        for ln in lines:
            idx, val = ln.split(",", 1)
            pairs.append((int(idx), float(val)))
        pairs.sort()
        if [p[0] for p in pairs] != list(range(len(pairs))):
            raise ValueError("%s: CSV indices do not cover 0..%d" % (path, len(pairs) - 1))
        values = np.array([p[1] for p in pairs])
    else:
        values = np.array([float(ln) for ln in lines])
    if not np.all(np.isfinite(values)):
        raise ValueError("%s: field contains non-finite values" % path)
    if expected_length is not None and values.size != expected_length:
        raise ValueError(
            "%s: field has %d values, mesh has %d vertices"
            % (path, values.size, expected_length)
        )
    return values


def snr(reference, estimate, weights=None):
    """Signal-to-noise ratio 20*log10(||ref|| / ||estimate - ref||) in dB.

    Norms are weighted by the lumped vertex masses when `weights` is
    given (mesh-resolution independent), plain Euclidean otherwise.
    Returns +inf for an exact reconstruction; callers flag that case as
    "exact" in reports.
    """
    reference = np.asarray(reference, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if reference.shape != estimate.shape:
        raise ValueError("reference and estimate lengths differ")
    if weights is None:
        weights = np.ones_like(reference)
    else:
        weights = np.asarray(weights, dtype=float)
    ref2 = float(weights @ (reference * reference))
    if ref2 == 0.0:
        raise ValueError("reference field is identically zero")
    err = estimate - reference
    err2 = float(weights @ (err * err))
    if err2 == 0.0:
        return math.inf
    return 10.0 * math.log10(ref2 / err2)


@dataclass
class RunMetrics:
    """Summary of one pipeline run, serializable to the metrics file."""

    snr_input_db: float = math.nan
    snr_output_db: float = math.nan
    alpha: float = math.nan
    p: int = 0
    epsilon: float = math.nan
    kappa: float = math.nan
    iterations: int = 0
    runtime_s: float = math.nan
    termination: str = ""

    def as_dict(self):
        out = {
            "snr_input_db": self.snr_input_db,
            "snr_output_db": self.snr_output_db,
            "alpha": self.alpha,
            "p": self.p,
            "epsilon": self.epsilon,
            "kappa": self.kappa,
            "iterations": self.iterations,
            "runtime_s": self.runtime_s,
            "termination": self.termination,
        }
        if math.isinf(self.snr_input_db):
            out["snr_input_exact"] = "yes"
        if math.isinf(self.snr_output_db):
            out["snr_output_exact"] = "yes"
        return out


def write_metrics(path, mapping):
    """Write "key = value" lines; values round-trip exactly through repr."""
    with open(path, "w") as fh:
        for key, value in mapping.items():
            if isinstance(value, float):
                fh.write("%s = %s\n" % (key, repr(value)))
            else:
                fh.write("%s = %s\n" % (key, value))


def read_metrics(path):
    """Parse a metrics file back into a dict (int, then float, then str)."""
    out = {}
    with open(path, "r") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, raw = line.partition("=")
            key = key.strip()
            raw = raw.strip()
            try:
                out[key] = int(raw)
                continue
            except ValueError:
                pass
            try:
                out[key] = float(raw)
            except ValueError:
                out[key] = raw
    return out


def _colormap_rgb(values, colormap):
    from matplotlib import colormaps

    values = np.asarray(values, dtype=float)
    lo, hi = float(values.min()), float(values.max())
    if hi > lo:
        t = (values - lo) / (hi - lo)
    else:
        t = np.full_like(values, 0.5)
    rgba = colormaps[colormap](t)
    return (np.clip(rgba[:, :3], 0.0, 1.0) * 255.0).round().astype(np.uint8)


def export_colored_mesh(mesh, field, path, colormap="viridis"):
    """Write an ASCII PLY with the field mapped linearly onto a colormap.

    The map is linear over [min(field), max(field)]; a constant field
    maps to the colormap midpoint.
    """
    field = np.asarray(field, dtype=float)
    if field.shape != (mesh.num_vertices,):
        raise ValueError(
            "field has shape %s, expected (%d,)" % (field.shape, mesh.num_vertices)
        )
    rgb = _colormap_rgb(field, colormap)
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write("element vertex %d\n" % mesh.num_vertices)
        fh.write("property float x\nproperty float y\nproperty float z\n")
        fh.write("property uchar red\nproperty uchar green\nproperty uchar blue\n")
        fh.write("element face %d\n" % mesh.num_triangles)
        fh.write("property list uchar int vertex_indices\n")
        fh.write("end_header\n")
        for p, c in zip(mesh.vertices, rgb):
            fh.write("%.9g %.9g %.9g %d %d %d\n" % (p[0], p[1], p[2], c[0], c[1], c[2]))
        for t in mesh.triangles:
            fh.write("3 %d %d %d\n" % (t[0], t[1], t[2]))


def read_ply(path):
    """Minimal ASCII PLY reader for round-trip checks.

    Returns (vertices (K,3), faces (L,3), colors (K,3) or None).
    """
    with open(path, "r") as fh:
        if fh.readline().strip() != "ply":
            raise ValueError("%s: not a PLY file" % path)
        nv = nf = 0
        has_color = False
        element = None
        for line in fh:
            toks = line.split()
            if toks[0] == "element":
                element = toks[1]
                if element == "vertex":
                    nv = int(toks[2])
                elif element == "face":
                    nf = int(toks[2])
            elif toks[0] == "property" and element == "vertex" and toks[-1] == "red":
                has_color = True
            elif toks[0] == "end_header":
                break
        verts = np.zeros((nv, 3))
        colors = np.zeros((nv, 3), dtype=np.uint8) if has_color else None
        for i in range(nv):
            toks = fh.readline().split()
            verts[i] = [float(v) for v in toks[:3]]
            if has_color:
                colors[i] = [int(v) for v in toks[3:6]]
        faces = np.zeros((nf, 3), dtype=np.int64)
        for i in range(nf):
            toks = fh.readline().split()
            if int(toks[0]) != 3:
                raise ValueError("%s: non-triangle face" % path)
            faces[i] = [int(v) for v in toks[1:4]]
    return verts, faces, colors
