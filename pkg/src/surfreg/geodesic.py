"""Geodesic distances on triangle meshes by front propagation.

Distances solve the discrete eikonal equation |grad d| = 1 with the
triangle-based fast-marching update.  A vertex C supported by a pair
(A, B) with known values d = (d_A, d_B) receives the candidate

    t = (p + sqrt(p^2 - s (r - 1))) / s,
    s = 1' Q 1,   p = 1' Q d,   r = d' Q d,   Q = (W' W)^{-1},

where W holds the edge vectors C->A, C->B: the arrival time at C of a
planar unit-speed front matching d on the pair.  The candidate is kept
only when it is causal, i.e. t >= max(d_A, d_B) and Q (t 1 - d) >= 0
componentwise (the front reaches C from inside the wedge); otherwise
the Dijkstra-style edge update d_X + |CX| fills in.

Wedges wider than 90 degrees break the causality argument, so obtuse
corners are split at build time: the strip of triangles across the
opposite edge is unfolded isometrically into the wedge plane until
every virtual support pair subtends an acute angle.  If the unfolding
runs off the mesh or exceeds the depth cap, the marcher degrades to
pure edge-graph (Dijkstra) distances and logs an accuracy warning.

The planar-front model is exact only far from the source; next to it
the true front is strongly curved and the two-point update overshoots.
Each sweep therefore seeds every vertex within a few edge lengths of
the source with its exact distance, computed by unfolding triangle
strips around the source and shooting straight segments through the
visible wedge of each strip.
"""

import heapq
import logging
from math import sqrt as _msqrt

import numpy as np

logger = logging.getLogger(__name__)

# Unfolding depth per obtuse corner before giving up on the mesh.
MAX_UNFOLD_DEPTH = 16

# Radius of the exact-seeding ball around each source, in units of the
# longest edge touching the source fan, and limits on the strip search.
SOURCE_EXACT_FACTOR = 4.0
MAX_EXACT_DEPTH = 24
_EXACT_NODE_BUDGET = 4000

_COS_TOL = 1e-12
_CAUSAL_TOL = 1e-12


class FastMarcher:
    """Reusable front-propagation state for one mesh.

    Builds the per-vertex update stencils (edge neighbours plus acute
    support pairs with their inverse Gram matrices) once; `distances`
    then runs one front per call.
    """

    def __init__(self, geometry):
        self.geometry = geometry
        self.num_vertices = geometry.num_vertices
        self.fallback_reason = None
        self._fallback_warned = False
        self._seed_cache = {}
        self._build_neighbors()
        self._build_vertex_triangles()
        self._build_supports()

    # -- construction -------------------------------------------------

    def _build_neighbors(self):
        t = self.geometry.triangles
        v = self.geometry.vertices
        raw = np.sort(t[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        edges = np.unique(raw, axis=0)
        lengths = np.linalg.norm(v[edges[:, 0]] - v[edges[:, 1]], axis=1)
        both = np.vstack([edges, edges[:, ::-1]])
        blen = np.concatenate([lengths, lengths])
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        blen = blen[order]
        self._nbr_start = np.searchsorted(
            both[:, 0], np.arange(self.num_vertices + 1)
        ).tolist()
        self._nbr_idx = both[:, 1].tolist()
        self._nbr_len = blen.tolist()

    def _build_vertex_triangles(self):
        t = self.geometry.triangles
        flat = t.ravel()
        tri_ids = np.repeat(np.arange(t.shape[0]), 3)
        order = np.argsort(flat, kind="stable")
        self._vtx_tri_start = np.searchsorted(
            flat[order], np.arange(self.num_vertices + 1)
        ).tolist()
        self._vtx_tri = tri_ids[order].tolist()

    def _build_supports(self):
        geom = self.geometry
        t = geom.triangles
        v = geom.vertices
        num_tri = t.shape[0]

        edge_tris = {}
        for ti in range(num_tri):
            a, b, c = t[ti]
            for e in ((a, b), (b, c), (c, a)):
                key = (e[0], e[1]) if e[0] < e[1] else (e[1], e[0])
                edge_tris.setdefault(key, []).append(ti)
        self._edge_tris = edge_tris

        by_vertex = [[] for _ in range(self.num_vertices)]
        obtuse = []
        for c in range(3):
            ci = t[:, c]
            ai = t[:, (c + 1) % 3]
            bi = t[:, (c + 2) % 3]
            ea = v[ai] - v[ci]
            eb = v[bi] - v[ci]
            gaa = np.einsum("ij,ij->i", ea, ea)
            gbb = np.einsum("ij,ij->i", eb, eb)
            gab = np.einsum("ij,ij->i", ea, eb)
            scale = np.sqrt(gaa * gbb)
            acute = gab > -_COS_TOL * scale
            det = gaa * gbb - gab * gab
            ok = acute & (det > 1e-300)
            for i in np.nonzero(ok)[0]:
                by_vertex[ci[i]].append((
                    int(ai[i]), int(bi[i]),
                    float(gbb[i] / det[i]), float(-gab[i] / det[i]),
                    float(gaa[i] / det[i]),
                ))
            for i in np.nonzero(~acute)[0]:
                obtuse.append((int(ci[i]), int(ai[i]), int(bi[i]), int(i)))

        for ci, ai, bi, tri in obtuse:
            la = np.linalg.norm(v[ai] - v[ci])
            lb = np.linalg.norm(v[bi] - v[ci])
            cos_t = float((v[ai] - v[ci]) @ (v[bi] - v[ci])) / (la * lb)
            cos_t = min(1.0, max(-1.0, cos_t))
            sin_t = np.sqrt(max(0.0, 1.0 - cos_t * cos_t))
            a2 = np.array([la, 0.0])
            b2 = np.array([lb * cos_t, lb * sin_t])
            pieces = []
            if self._split_wedge(ai, a2, bi, b2, tri, MAX_UNFOLD_DEPTH, pieces):
                by_vertex[ci].extend(pieces)
            else:
                self.fallback_reason = (
                    "obtuse corner at vertex %d (triangle %d) could not be "
                    "split by unfolding" % (ci, tri)
                )

        start = [0]
        sa, sb, sq = [], [], []
        for lst in by_vertex:
            for a, b, qaa, qab, qbb in lst:
                sa.append(a)
                sb.append(b)
                sq.append((qaa, qab, qbb))
            start.append(len(sa))
        self._sup_start = start
        self._sup_a = sa
        self._sup_b = sb
        self._sup_q = sq

        # Accepting vertex X must re-update every vertex whose stencil
        # reads X.  For acute meshes that is exactly the edge neighbours;
        # unfolded supports can reach further.
        influence = [set() for _ in range(self.num_vertices)]
        for c in range(self.num_vertices):
            for e in range(self._nbr_start[c], self._nbr_start[c + 1]):
                influence[self._nbr_idx[e]].add(c)
            for s in range(start[c], start[c + 1]):
                influence[sa[s]].add(c)
                influence[sb[s]].add(c)
        inf_start = [0]
        inf_idx = []
        for group in influence:
            inf_idx.extend(sorted(group))
            inf_start.append(len(inf_idx))
        self._inf_start = inf_start
        self._inf_idx = inf_idx

    def _split_wedge(self, a_idx, a2, b_idx, b2, from_tri, depth, out):
        """Cover the wedge spanned by planar points a2, b2 with acute pairs.

        Appends (a, b, qaa, qab, qbb) support tuples to `out`; returns
        False when the strip leaves the mesh, degenerates, or `depth`
        runs out.
        """
        gaa = float(a2 @ a2)
        gbb = float(b2 @ b2)
        gab = float(a2 @ b2)
        scale = np.sqrt(gaa * gbb)
        if scale <= 0.0:
            return False
        if gab > -_COS_TOL * scale:
            det = gaa * gbb - gab * gab
            if det <= 1e-300:
                return False
            out.append((int(a_idx), int(b_idx),
                        float(gbb / det), float(-gab / det), float(gaa / det)))
            return True
        if depth == 0:
            return False
        key = (a_idx, b_idx) if a_idx < b_idx else (b_idx, a_idx)
        tris = self._edge_tris.get(key, ())
        nxt = None
        for ti in tris:
            if ti != from_tri:
                nxt = ti
        if nxt is None:
            return False
        tri = self.geometry.triangles[nxt]
        p_idx = int(tri[0] + tri[1] + tri[2] - a_idx - b_idx)
        v = self.geometry.vertices
        da = np.linalg.norm(v[p_idx] - v[a_idx])
        db = np.linalg.norm(v[p_idx] - v[b_idx])
        e = b2 - a2
        el = np.linalg.norm(e)
        if el <= 0.0:
            return False
        ehat = e / el
        n = np.array([-ehat[1], ehat[0]])
        x = (da * da - db * db + el * el) / (2.0 * el)
        h = np.sqrt(max(0.0, da * da - x * x))
        # place the apex on the far side of the edge from the wedge origin
        side = 1.0 if float(a2 @ n) >= 0.0 else -1.0
        p2 = a2 + x * ehat + side * h * n
        return self._split_wedge(a_idx, a2, p_idx, p2, nxt, depth - 1, out) and \
            self._split_wedge(p_idx, p2, b_idx, b2, nxt, depth - 1, out)

    def _exact_seeds(self, source):
        """Exact distances to every vertex near `source`, as {vertex: d}.

        Strip seeds miss geodesics that pass straight through a mesh
        vertex (the visibility wedge pinches to zero width there), so
        one level of composition through the seeded vertices is added:
        a concatenation of two straight unfolded segments is still an
        actual surface path, hence still an upper bound.
        """
        seeds = dict(self._strip_seeds(source))
        for via, d_via in list(seeds.items()):
            if via == source:
                continue
            for w, d_w in self._strip_seeds(via).items():
                cand = d_via + d_w
                prev = seeds.get(w)
                if prev is None or cand < prev:
                    seeds[w] = cand
        return seeds

    def _strip_seeds(self, source):
        """Exact distances from straight segments through unfolded strips.

        Unfolds each triangle strip leaving the source fan into the
        plane (source at the origin) and records straight-segment
        lengths to the vertices the strip makes visible.  Every value
        is the length of an actual surface path, so seeding the sweep
        with them can never undershoot the true distance.  Cached per
        source; callers must not mutate the result.
        """
        cached = self._seed_cache.get(source)
        if cached is not None:
            return cached
        v = self.geometry.vertices
        t = self.geometry.triangles
        seeds = {source: 0.0}
        vs = v[source]
        tris = self._vtx_tri[
            self._vtx_tri_start[source]:self._vtx_tri_start[source + 1]
        ]
        r0 = 0.0
        for ti in tris:
            a, b, c = t[ti]
            for x, y in ((a, b), (b, c), (c, a)):
                ln = float(np.linalg.norm(v[x] - v[y]))
                if ln > r0:
                    r0 = ln
        r0 *= SOURCE_EXACT_FACTOR
        budget = [_EXACT_NODE_BUDGET]
        for ti in tris:
            others = [int(x) for x in t[ti] if x != source]
            a_idx, b_idx = others
            ea = v[a_idx] - vs
            eb = v[b_idx] - vs
            la = float(np.linalg.norm(ea))
            lb = float(np.linalg.norm(eb))
            if la <= 0.0 or lb <= 0.0:
                continue
            if la < seeds.get(a_idx, np.inf):
                seeds[a_idx] = la
            if lb < seeds.get(b_idx, np.inf):
                seeds[b_idx] = lb
            cos_g = min(1.0, max(-1.0, float(ea @ eb) / (la * lb)))
            sin_g = _msqrt(max(0.0, 1.0 - cos_g * cos_g))
            if sin_g <= 1e-12:
                continue
            self._unfold_exact(
                a_idx, la, 0.0, b_idx, lb * cos_g, lb * sin_g, int(ti),
                1.0, 0.0, cos_g, sin_g, r0, seeds, MAX_EXACT_DEPTH, budget,
            )
        self._seed_cache[source] = seeds
        return seeds

    def _unfold_exact(self, a_idx, ax, ay, b_idx, bx, by, from_tri,
                      lox, loy, hix, hiy, r0, seeds, depth, budget):
        """Walk the strip across edge (a, b), collecting exact seeds.

        (ax, ay), (bx, by) are the unfolded edge endpoints with the
        source at the origin; (lo, hi) bound the wedge of directions
        whose rays cross every edge unfolded so far (kept ccw, always
        narrower than pi).
        """
        if depth == 0 or budget[0] <= 0:
            return
        budget[0] -= 1
        if lox * hiy - loy * hix <= 1e-18:
            return
        ex, ey = bx - ax, by - ay
        ee = ex * ex + ey * ey
        if ee <= 0.0:
            return
        # prune once the nearest point of the edge leaves the ball
        s = -(ax * ex + ay * ey) / ee
        if s < 0.0:
            s = 0.0
        elif s > 1.0:
            s = 1.0
        cx, cy = ax + s * ex, ay + s * ey
        if cx * cx + cy * cy > r0 * r0:
            return
        key = (a_idx, b_idx) if a_idx < b_idx else (b_idx, a_idx)
        nxt = None
        for ti in self._edge_tris.get(key, ()):
            if ti != from_tri:
                nxt = ti
        if nxt is None:
            return
        tri = self.geometry.triangles[nxt]
        p_idx = int(tri[0] + tri[1] + tri[2]) - a_idx - b_idx
        v = self.geometry.vertices
        da = float(np.linalg.norm(v[p_idx] - v[a_idx]))
        db = float(np.linalg.norm(v[p_idx] - v[b_idx]))
        el = _msqrt(ee)
        ux, uy = ex / el, ey / el
        nx, ny = -uy, ux
        x = (da * da - db * db + ee) / (2.0 * el)
        h = _msqrt(max(0.0, da * da - x * x))
        side = 1.0 if (ax * nx + ay * ny) >= 0.0 else -1.0
        px = ax + x * ux + side * h * nx
        py = ay + x * uy + side * h * ny
        if lox * py - loy * px >= 0.0 and px * hiy - py * hix >= 0.0:
            dist = _msqrt(px * px + py * py)
            cur = seeds.get(p_idx)
            if cur is None or dist < cur:
                seeds[p_idx] = dist
        # sub-wedge over (a, p)
        if ax * py - ay * px > 0.0:
            nlox, nloy = (ax, ay) if lox * ay - loy * ax >= 0.0 else (lox, loy)
            nhix, nhiy = (px, py) if px * hiy - py * hix >= 0.0 else (hix, hiy)
            if nlox * nhiy - nloy * nhix > 0.0:
                self._unfold_exact(a_idx, ax, ay, p_idx, px, py, nxt,
                                   nlox, nloy, nhix, nhiy,
                                   r0, seeds, depth - 1, budget)
        # sub-wedge over (p, b)
        if px * by - py * bx > 0.0:
            nlox, nloy = (px, py) if lox * py - loy * px >= 0.0 else (lox, loy)
            nhix, nhiy = (bx, by) if bx * hiy - by * hix >= 0.0 else (hix, hiy)
            if nlox * nhiy - nloy * nhix > 0.0:
                self._unfold_exact(p_idx, px, py, b_idx, bx, by, nxt,
                                   nlox, nloy, nhix, nhiy,
                                   r0, seeds, depth - 1, budget)

    # -- propagation --------------------------------------------------

    def distances(self, source, max_dist=None):
        """Geodesic distances from one source vertex.

        Parameters
        ----------
        source : int
        max_dist : float, optional
            Stop the front once the next value would exceed this; vertices
            past the cutoff keep +inf.  Without it, the full mesh is swept
            and a disconnected mesh raises an error naming unreached
            vertices.

        Returns
        -------
        ndarray, shape (K,)
        """
        if not 0 <= source < self.num_vertices:
            raise ValueError("source %d out of range [0, %d)" % (source, self.num_vertices))
        seeds = self._exact_seeds(source)
        if self.fallback_reason is not None:
            if not self._fallback_warned:
                logger.warning(
                    "%s; using edge-graph (Dijkstra) distances, accuracy "
                    "degrades to first order", self.fallback_reason
                )
                self._fallback_warned = True
            d = self._sweep(seeds, max_dist, with_supports=False)
        else:
            d = self._sweep(seeds, max_dist, with_supports=True)
        if max_dist is None:
            unreached = np.nonzero(np.isinf(d))[0]
            if unreached.size:
                shown = ", ".join(str(i) for i in unreached[:8])
                raise ValueError(
                    "mesh is disconnected: %d vertices unreached from %d "
                    "(e.g. %s)" % (unreached.size, source, shown)
                )
        return d

    def _sweep(self, seeds, max_dist, with_supports):
        inf = np.inf
        cutoff = inf if max_dist is None else float(max_dist)
        k = self.num_vertices
        d = [inf] * k
        heap = []
        for vtx, val in seeds.items():
            d[vtx] = val
            heap.append((val, vtx))
        heapq.heapify(heap)
        accepted = bytearray(k)
        pop = heapq.heappop
        push = heapq.heappush
        nstart, nidx, nlen = self._nbr_start, self._nbr_idx, self._nbr_len
        sstart, sa, sb, sq = self._sup_start, self._sup_a, self._sup_b, self._sup_q
        istart, iidx = self._inf_start, self._inf_idx
        sqrt = _msqrt

        while heap:
            dv, vtx = pop(heap)
            if accepted[vtx]:
                continue
            if dv > cutoff:
                break
            accepted[vtx] = 1
            for j in range(istart[vtx], istart[vtx + 1]):
                c = iidx[j]
                if accepted[c]:
                    continue
                best = d[c]
                for e in range(nstart[c], nstart[c + 1]):
                    dn = d[nidx[e]]
                    if dn == inf:
                        continue
                    cand = dn + nlen[e]
                    if cand < best:
                        best = cand
                if with_supports:
                    for s in range(sstart[c], sstart[c + 1]):
                        da = d[sa[s]]
                        if da == inf:
                            continue
                        db = d[sb[s]]
                        if db == inf:
                            continue
                        qaa, qab, qbb = sq[s]
                        ssum = qaa + 2.0 * qab + qbb
                        p = qaa * da + qab * (da + db) + qbb * db
                        r = qaa * da * da + 2.0 * qab * da * db + qbb * db * db
                        disc = p * p - ssum * (r - 1.0)
                        if disc <= 0.0:
                            continue
                        t = (p + sqrt(disc)) / ssum
                        if t >= best or t < da or t < db:
                            continue
                        if qaa * (t - da) + qab * (t - db) < -_CAUSAL_TOL:
                            continue
                        if qab * (t - da) + qbb * (t - db) < -_CAUSAL_TOL:
                            continue
                        best = t
                if best < d[c]:
                    d[c] = best
                    push(heap, (best, c))
        out = np.array(d)
        if max_dist is not None:
            out[out > cutoff] = inf
        return out


def geodesic_distances(geometry, source, max_dist=None):
    """Distances from `source` to every vertex, fast-marching the mesh.

    The update stencils are cached on the geometry, so repeated calls
    (e.g. one front per kernel row) pay the build cost once.
    """
    marcher = getattr(geometry, "_marcher", None)
    if marcher is None:
        marcher = FastMarcher(geometry)
        geometry._marcher = marcher
    return marcher.distances(source, max_dist=max_dist)
