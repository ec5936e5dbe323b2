"""Numba kernels for Laguerre-cell clipping and piecewise-linear integration.

Polygon buffers are fixed-width float64 arrays; a cell is the slice
``verts[i, :counts[i]]`` in counterclockwise order.  Edge k of a cell runs
from vertex k to vertex k+1 (mod count), and ``labels[i, k]`` holds the index
of the competing site whose bisector carries that edge, or -1 for an edge
inherited from the domain boundary.

All kernels are sequential and deterministic; fastmath stays off so results
are bit-identical across runs.
"""

import numpy as np
from numba import njit

# Cells of planar power diagrams rarely exceed ~20 vertices; 128 leaves a
# wide safety margin for degenerate clip chains.
MAX_VERTS = 128


@njit(cache=True)
def _clip(px, pl, n, ax, ay, b, lab, qx, ql):
    """Clip polygon px[:n] against {x : ax*x + ay*y <= b}; result in qx/ql.

    Returns the new vertex count.  New edges created on the clip line get
    label ``lab``.
    """
    m = 0
    for k in range(n):
        k2 = k + 1
        if k2 == n:
            k2 = 0
        sx = px[k, 0]
        sy = px[k, 1]
        ex = px[k2, 0]
        ey = px[k2, 1]
        ds = ax * sx + ay * sy - b
        de = ax * ex + ay * ey - b
        s_in = ds <= 0.0
        e_in = de <= 0.0
        if s_in:
            qx[m, 0] = sx
            qx[m, 1] = sy
            ql[m] = pl[k]
            m += 1
        if s_in != e_in:
            t = ds / (ds - de)
            qx[m, 0] = sx + t * (ex - sx)
            qx[m, 1] = sy + t * (ey - sy)
            ql[m] = lab if s_in else pl[k]
            m += 1
    return m


@njit(cache=True)
def build_cells(dom, sites, psi, order, dist):
    """Build every additively-weighted cell by sequential halfplane clipping.

    ``order[i]`` lists the other site indices sorted by distance from site i
    and ``dist[i]`` the matching distances.  Competitors whose bisector cannot
    intersect the current cell (it lies beyond the cell's circumradius around
    the site) are skipped; once the sorted distance passes the safe cutoff the
    remaining competitors are skipped wholesale.
    """
    N = sites.shape[0]
    nd = dom.shape[0]
    verts = np.zeros((N, MAX_VERTS, 2))
    labels = np.full((N, MAX_VERTS), -1, np.int64)
    counts = np.zeros(N, np.int64)
    bx = np.empty((MAX_VERTS, 2))
    bl = np.empty(MAX_VERTS, np.int64)
    cx = np.empty((MAX_VERTS, 2))
    cl = np.empty(MAX_VERTS, np.int64)
    spread = 0.0
    if N > 1:
        spread = psi.max() - psi.min()
    for i in range(N):
        m = nd
        for k in range(nd):
            bx[k, 0] = dom[k, 0]
            bx[k, 1] = dom[k, 1]
            bl[k] = -1
        r2max = 0.0
        for k in range(m):
            dx = bx[k, 0] - sites[i, 0]
            dy = bx[k, 1] - sites[i, 1]
            r2 = dx * dx + dy * dy
            if r2 > r2max:
                r2max = r2
        radius = np.sqrt(r2max)
        stop_d = radius + np.sqrt(radius * radius + spread)
        for q in range(N - 1):
            j = order[i, q]
            d = dist[i, q]
            if d >= stop_d:
                break
            dpsi = psi[j] - psi[i]
            # Signed distance from site i to the bisector; if it exceeds the
            # cell circumradius the halfplane contains the whole cell.
            if (d * d + dpsi) / (2.0 * d) >= radius:
                continue
            ax = 2.0 * (sites[j, 0] - sites[i, 0])
            ay = 2.0 * (sites[j, 1] - sites[i, 1])
            b = (sites[j, 0] * sites[j, 0] + sites[j, 1] * sites[j, 1]
                 - sites[i, 0] * sites[i, 0] - sites[i, 1] * sites[i, 1]
                 + dpsi)
            m = _clip(bx, bl, m, ax, ay, b, j, cx, cl)
            for k in range(m):
                bx[k, 0] = cx[k, 0]
                bx[k, 1] = cx[k, 1]
                bl[k] = cl[k]
            if m == 0:
                break
            r2max = 0.0
            for k in range(m):
                dx = bx[k, 0] - sites[i, 0]
                dy = bx[k, 1] - sites[i, 1]
                r2 = dx * dx + dy * dy
                if r2 > r2max:
                    r2max = r2
            radius = np.sqrt(r2max)
            stop_d = radius + np.sqrt(radius * radius + spread)
        counts[i] = m
        for k in range(m):
            verts[i, k, 0] = bx[k, 0]
            verts[i, k, 1] = bx[k, 1]
            labels[i, k] = bl[k]
    return verts, labels, counts


@njit(cache=True)
def canonicalize_cells(verts, labels, counts, tol):
    """Merge consecutive near-duplicate vertices (closer than tol) in place.

    When vertex k collapses onto its predecessor, the predecessor inherits
    k's outgoing-edge label.  Cells left with fewer than 3 vertices are
    emptied.
    """
    N = counts.shape[0]
    for i in range(N):
        m = counts[i]
        if m == 0:
            continue
        w = 0
        for k in range(m):
            x = verts[i, k, 0]
            y = verts[i, k, 1]
            lab = labels[i, k]
            if w > 0:
                dx = x - verts[i, w - 1, 0]
                dy = y - verts[i, w - 1, 1]
                if dx * dx + dy * dy < tol * tol:
                    labels[i, w - 1] = lab
                    continue
            verts[i, w, 0] = x
            verts[i, w, 1] = y
            labels[i, w] = lab
            w += 1
        # wraparound merge: drop the last vertex if it matches the first
        if w > 1:
            dx = verts[i, w - 1, 0] - verts[i, 0, 0]
            dy = verts[i, w - 1, 1] - verts[i, 0, 1]
            if dx * dx + dy * dy < tol * tol:
                w -= 1
        if w < 3:
            w = 0
        counts[i] = w


@njit(cache=True)
def _tri_edge(tp, e):
    """Inward halfplane (ax, ay, b) with a.x <= b for edge e of CCW triangle tp."""
    e2 = e + 1
    if e2 == 3:
        e2 = 0
    px = tp[e, 0]
    py = tp[e, 1]
    qx = tp[e2, 0]
    qy = tp[e2, 1]
    ax = qy - py
    ay = -(qx - px)
    b = ax * px + ay * py
    return ax, ay, b


@njit(cache=True)
def cell_masses(verts, counts, tri_pts, tri_lin, tri_bbox):
    """Integrate the piecewise-linear density over every cell.

    ``tri_lin[t]`` holds (a, b, c) with rho(x, y) = a + b*x + c*y on triangle
    t.  Each cell is clipped against each triangle; the linear integrand is
    then exact from the piece's area and first moments.
    """
    N = counts.shape[0]
    T = tri_pts.shape[0]
    out = np.zeros(N)
    qx = np.empty((MAX_VERTS, 2))
    ql = np.empty(MAX_VERTS, np.int64)
    rx = np.empty((MAX_VERTS, 2))
    rl = np.empty(MAX_VERTS, np.int64)
    for i in range(N):
        n = counts[i]
        if n < 3:
            continue
        xmin = verts[i, 0, 0]
        xmax = xmin
        ymin = verts[i, 0, 1]
        ymax = ymin
        for k in range(1, n):
            x = verts[i, k, 0]
            y = verts[i, k, 1]
            if x < xmin:
                xmin = x
            if x > xmax:
                xmax = x
            if y < ymin:
                ymin = y
            if y > ymax:
                ymax = y
        for t in range(T):
            if (tri_bbox[t, 0] > xmax or tri_bbox[t, 2] < xmin
                    or tri_bbox[t, 1] > ymax or tri_bbox[t, 3] < ymin):
                continue
            m = n
            for k in range(n):
                qx[k, 0] = verts[i, k, 0]
                qx[k, 1] = verts[i, k, 1]
                ql[k] = -1
            for e in range(3):
                ax, ay, b = _tri_edge(tri_pts[t], e)
                m = _clip(qx, ql, m, ax, ay, b, -1, rx, rl)
                for k in range(m):
                    qx[k, 0] = rx[k, 0]
                    qx[k, 1] = rx[k, 1]
                    ql[k] = rl[k]
                if m == 0:
                    break
            if m < 3:
                continue
            area2 = 0.0
            sx6 = 0.0
            sy6 = 0.0
            for k in range(m):
                k2 = k + 1
                if k2 == m:
                    k2 = 0
                cr = qx[k, 0] * qx[k2, 1] - qx[k2, 0] * qx[k, 1]
                area2 += cr
                sx6 += (qx[k, 0] + qx[k2, 0]) * cr
                sy6 += (qx[k, 1] + qx[k2, 1]) * cr
            out[i] += (tri_lin[t, 0] * 0.5 * area2
                       + tri_lin[t, 1] * sx6 / 6.0
                       + tri_lin[t, 2] * sy6 / 6.0)
    return out


@njit(cache=True)
def cell_second_moments(verts, counts, sites, tri_pts, tri_lin, tri_bbox):
    """Integrate |x - y_i|^2 * rho over every cell, exactly for linear rho.

    Each clipped piece is fanned from its first vertex and a symmetric
    4-point triangle rule exact for cubics is applied (quadratic distance
    times linear density has total degree 3).
    """
    N = counts.shape[0]
    T = tri_pts.shape[0]
    out = np.zeros(N)
    qx = np.empty((MAX_VERTS, 2))
    ql = np.empty(MAX_VERTS, np.int64)
    rx = np.empty((MAX_VERTS, 2))
    rl = np.empty(MAX_VERTS, np.int64)
    # Degree-3 rule: centroid with weight -27/48, three points at
    # barycentric (3/5, 1/5, 1/5) with weight 25/48.
    l1 = np.array([1.0 / 3.0, 0.6, 0.2, 0.2])
    l2 = np.array([1.0 / 3.0, 0.2, 0.6, 0.2])
    l3 = np.array([1.0 / 3.0, 0.2, 0.2, 0.6])
    wq = np.array([-27.0 / 48.0, 25.0 / 48.0, 25.0 / 48.0, 25.0 / 48.0])
    for i in range(N):
        n = counts[i]
        if n < 3:
            continue
        sx = sites[i, 0]
        sy = sites[i, 1]
        xmin = verts[i, 0, 0]
        xmax = xmin
        ymin = verts[i, 0, 1]
        ymax = ymin
        for k in range(1, n):
            x = verts[i, k, 0]
            y = verts[i, k, 1]
            if x < xmin:
                xmin = x
            if x > xmax:
                xmax = x
            if y < ymin:
                ymin = y
            if y > ymax:
                ymax = y
        for t in range(T):
            if (tri_bbox[t, 0] > xmax or tri_bbox[t, 2] < xmin
                    or tri_bbox[t, 1] > ymax or tri_bbox[t, 3] < ymin):
                continue
            m = n
            for k in range(n):
                qx[k, 0] = verts[i, k, 0]
                qx[k, 1] = verts[i, k, 1]
                ql[k] = -1
            for e in range(3):
                ax, ay, b = _tri_edge(tri_pts[t], e)
                m = _clip(qx, ql, m, ax, ay, b, -1, rx, rl)
                for k in range(m):
                    qx[k, 0] = rx[k, 0]
                    qx[k, 1] = rx[k, 1]
                    ql[k] = rl[k]
                if m == 0:
                    break
            if m < 3:
                continue
            a0 = tri_lin[t, 0]
            a1 = tri_lin[t, 1]
            a2 = tri_lin[t, 2]
            x0 = qx[0, 0]
            y0 = qx[0, 1]
            for k in range(1, m - 1):
                x1 = qx[k, 0]
                y1 = qx[k, 1]
                x2 = qx[k + 1, 0]
                y2 = qx[k + 1, 1]
                area = 0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))
                acc = 0.0
                for q in range(4):
                    x = l1[q] * x0 + l2[q] * x1 + l3[q] * x2
                    y = l1[q] * y0 + l2[q] * y1 + l3[q] * y2
                    rho = a0 + a1 * x + a2 * y
                    dx = x - sx
                    dy = y - sy
                    acc += wq[q] * (dx * dx + dy * dy) * rho
                out[i] += area * acc
    return out


@njit(cache=True)
def segment_density_integrals(segs, tri_pts, tri_lin, edge_tol):
    """Line integral of the piecewise-linear density along each segment.

    Segments are clipped parametrically against each triangle; the trapezoid
    rule is exact per piece since rho is linear there.  A piece whose midpoint
    lies within edge_tol of a triangle edge line is counted with weight 1/2,
    so a segment lying exactly on a shared mesh edge is not double counted.
    """
    F = segs.shape[0]
    T = tri_pts.shape[0]
    out = np.zeros(F)
    for f in range(F):
        p0x = segs[f, 0, 0]
        p0y = segs[f, 0, 1]
        dx = segs[f, 1, 0] - p0x
        dy = segs[f, 1, 1] - p0y
        seg_len = np.sqrt(dx * dx + dy * dy)
        if seg_len <= 0.0:
            continue
        for t in range(T):
            t0 = 0.0
            t1 = 1.0
            ok = True
            for e in range(3):
                ax, ay, b = _tri_edge(tri_pts[t], e)
                # triangle interior is a.x <= b; require c0 + c1*t <= 0
                c0 = ax * p0x + ay * p0y - b
                c1 = ax * dx + ay * dy
                if c1 > 0.0:
                    tc = -c0 / c1
                    if tc < t1:
                        t1 = tc
                elif c1 < 0.0:
                    tc = -c0 / c1
                    if tc > t0:
                        t0 = tc
                elif c0 > 0.0:
                    ok = False
                    break
            if not ok or t1 - t0 <= 1e-14:
                continue
            mx = p0x + 0.5 * (t0 + t1) * dx
            my = p0y + 0.5 * (t0 + t1) * dy
            weight = 1.0
            for e in range(3):
                ax, ay, b = _tri_edge(tri_pts[t], e)
                nn = np.sqrt(ax * ax + ay * ay)
                if nn > 0.0 and abs(ax * mx + ay * my - b) / nn < edge_tol:
                    weight = 0.5
                    break
            a0 = tri_lin[t, 0]
            a1 = tri_lin[t, 1]
            a2 = tri_lin[t, 2]
            r0 = a0 + a1 * (p0x + t0 * dx) + a2 * (p0y + t0 * dy)
            r1 = a0 + a1 * (p0x + t1 * dx) + a2 * (p0y + t1 * dy)
            out[f] += weight * (t1 - t0) * seg_len * 0.5 * (r0 + r1)
    return out
