"""Numba kernels for the frame-aligned upwind eikonal scheme.

At a node with orientation θ the six neighbours are taken one step along
±A1, ±A2, ±A3. A1/A3 neighbours lie in the same θ-slab and are bilinearly
interpolated; the interpolation cell always contains the node itself, so the
self-weight w0 is eliminated algebraically: the neighbour value becomes the
remaining corners renormalised by (1 - w0) and the effective step h / (1 - w0).
"""

import math

import numba as nb
import numpy as np

INF = np.inf


@nb.njit(cache=True, inline="always")
def _side(W, k, j, i, si, sj, a, b, nx, ny):
    """Self-eliminated bilinear neighbour in the cell spanned by (si, sj).

    Returns (value, 1 - w0); value is +inf when the cell leaves the grid or
    touches an unreached node with positive weight.
    """
    i1 = i + si
    j1 = j + sj
    if a > 0.0 and (i1 < 0 or i1 >= nx):
        return INF, 1.0
    if b > 0.0 and (j1 < 0 or j1 >= ny):
        return INF, 1.0
    w0 = (1.0 - a) * (1.0 - b)
    rest = 1.0 - w0
    acc = 0.0
    w = a * (1.0 - b)
    if w > 0.0:
        v = W[k, j, i1]
        if v == INF:
            return INF, rest
        acc += w * v
    w = (1.0 - a) * b
    if w > 0.0:
        v = W[k, j1, i]
        if v == INF:
            return INF, rest
        acc += w * v
    w = a * b
    if w > 0.0:
        v = W[k, j1, i1]
        if v == INF:
            return INF, rest
        acc += w * v
    return acc / rest, rest


@nb.njit(cache=True, inline="always")
def _spatial_dir(W, k, j, i, dx, dy, hx, hy, nx, ny):
    """Upwind neighbour along ±(dx, dy): (min value, effective step length)."""
    a = abs(dx) / hx
    b = abs(dy) / hy
    si = 1 if dx >= 0.0 else -1
    sj = 1 if dy >= 0.0 else -1
    h = math.sqrt(dx * dx + dy * dy)
    vp, rp = _side(W, k, j, i, si, sj, a, b, nx, ny)
    vm, rm = _side(W, k, j, i, -si, -sj, a, b, nx, ny)
    # rp == rm by symmetry of the stencil
    if vp <= vm:
        return vp, h / rp
    return vm, h / rm


@nb.njit(cache=True, inline="always")
def _neighbours(W, k, j, i, c, s, step, hx, hy, ht, nx, ny, nt):
    m1, h1 = _spatial_dir(W, k, j, i, step * c, step * s, hx, hy, nx, ny)
    m3, h3 = _spatial_dir(W, k, j, i, -step * s, step * c, hx, hy, nx, ny)
    kp = k + 1
    if kp == nt:
        kp = 0
    km = k - 1
    if km < 0:
        km = nt - 1
    m2 = min(W[kp, j, i], W[km, j, i])
    return m1, h1, m2, ht, m3, h3


@nb.njit(cache=True, inline="always")
def _solve_local(m1, a1, m2, a2, m3, a3, rhs):
    """Largest admissible root of sum_i a_i * max(u - m_i, 0)^2 = rhs."""
    # sorting network on (m, a) pairs
    if m2 < m1:
        m1, m2 = m2, m1
        a1, a2 = a2, a1
    if m3 < m2:
        m2, m3 = m3, m2
        a2, a3 = a3, a2
    if m2 < m1:
        m1, m2 = m2, m1
        a1, a2 = a2, a1
    if m1 == INF:
        return INF
    u = m1 + math.sqrt(rhs / a1)
    if u <= m2:
        return u
    A = a1 + a2
    B = a1 * m1 + a2 * m2
    Cc = a1 * m1 * m1 + a2 * m2 * m2
    disc = B * B - A * (Cc - rhs)
    u = (B + math.sqrt(max(disc, 0.0))) / A
    if u <= m3:
        return u
    A += a3
    B += a3 * m3
    Cc += a3 * m3 * m3
    disc = B * B - A * (Cc - rhs)
    return (B + math.sqrt(max(disc, 0.0))) / A


@nb.njit(cache=True, inline="always")
def _update_node(W, C, k, j, i, cos_t, sin_t, step, hx, hy, ht, w1, w2, w3):
    nt, ny, nx = W.shape
    m1, h1, m2, h2, m3, h3 = _neighbours(W, k, j, i, cos_t[k], sin_t[k], step,
                                         hx, hy, ht, nx, ny, nt)
    c = C[k, j, i]
    return _solve_local(m1, w1 / (h1 * h1), m2, w2 / (h2 * h2), m3, w3 / (h3 * h3), c * c)


@nb.njit(cache=True)
def sweep_cycle(W, C, frozen, cos_t, sin_t, step, hx, hy, ht, w1, w2, w3):
    """One Gauss-Seidel cycle over the 8 axis orderings; returns the sup-norm change."""
    nt, ny, nx = W.shape
    change = 0.0
    for order in range(8):
        dk = 1 if (order & 4) == 0 else -1
        dj = 1 if (order & 2) == 0 else -1
        di = 1 if (order & 1) == 0 else -1
        for kk in range(nt):
            k = kk if dk > 0 else nt - 1 - kk
            for jj in range(ny):
                j = jj if dj > 0 else ny - 1 - jj
                for ii in range(nx):
                    i = ii if di > 0 else nx - 1 - ii
                    if frozen[k, j, i]:
                        continue
                    u = _update_node(W, C, k, j, i, cos_t, sin_t, step, hx, hy, ht,
                                     w1, w2, w3)
                    old = W[k, j, i]
                    if u < old:
                        W[k, j, i] = u
                        d = INF if old == INF else old - u
                        if d > change:
                            change = d
    return change


@nb.njit(cache=True, parallel=True)
def jacobi_step(W, Wout, C, frozen, cos_t, sin_t, step, hx, hy, ht, w1, w2, w3):
    """Double-buffered update of every node, parallel over θ-slabs."""
    nt, ny, nx = W.shape
    changes = np.zeros(nt)
    for k in nb.prange(nt):
        local = 0.0
        for j in range(ny):
            for i in range(nx):
                old = W[k, j, i]
                Wout[k, j, i] = old
                if frozen[k, j, i]:
                    continue
                u = _update_node(W, C, k, j, i, cos_t, sin_t, step, hx, hy, ht,
                                 w1, w2, w3)
                if u < old:
                    Wout[k, j, i] = u
                    d = INF if old == INF else old - u
                    if d > local:
                        local = d
        changes[k] = local
    return changes.max()


@nb.njit(cache=True)
def hamiltonian(W, C, frozen, cos_t, sin_t, step, hx, hy, ht, w1, w2, w3):
    """Relative residual |H(W) - C^2| / C^2 of the upwind scheme at every node."""
    nt, ny, nx = W.shape
    out = np.zeros(W.shape)
    for k in range(nt):
        for j in range(ny):
            for i in range(nx):
                u = W[k, j, i]
                if frozen[k, j, i]:
                    continue
                if u == INF:
                    out[k, j, i] = np.nan
                    continue
                m1, h1, m2, h2, m3, h3 = _neighbours(W, k, j, i, cos_t[k], sin_t[k], step,
                                                     hx, hy, ht, nx, ny, nt)
                H = 0.0
                if u > m1:
                    H += w1 * ((u - m1) / h1) ** 2
                if u > m2:
                    H += w2 * ((u - m2) / h2) ** 2
                if u > m3:
                    H += w3 * ((u - m3) / h3) ** 2
                c2 = C[k, j, i] ** 2
                out[k, j, i] = abs(H - c2) / c2
    return out


# -- adaptive-stencil variant -------------------------------------------------
# In each θ-slab the spatial block of the dual metric is decomposed as
# D = sum_k rho_k v_k v_k^T with integer offsets v_k (Selling's obtuse
# superbase reduction), so every neighbour is an exact grid node.


def selling_2d(D: np.ndarray, max_iter: int = 10000):
    """Obtuse-superbase decomposition of a 2x2 SPD matrix.

    Returns (weights, offsets) with offsets of shape (3, 2) integer.
    """
    e = [np.array([1, 0]), np.array([0, 1]), np.array([-1, -1])]
    for _ in range(max_iter):
        for i, j, k in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
            if e[i] @ D @ e[j] > 1e-14 * abs(np.trace(D)):
                e[i], e[j], e[k] = -e[i], e[j], e[i] - e[j]
                break
        else:
            break
    else:
        raise RuntimeError("Selling reduction did not terminate")
    weights = np.empty(3)
    offsets = np.empty((3, 2), dtype=np.int64)
    for n, (i, j, k) in enumerate(((0, 1, 2), (0, 2, 1), (1, 2, 0))):
        weights[n] = max(-(e[i] @ D @ e[j]), 0.0)
        offsets[n] = (-e[k][1], e[k][0])
    return weights, offsets


@nb.njit(cache=True, inline="always")
def _axis_min(W, k, j, i, oi, oj, nx, ny):
    v = INF
    i1 = i + oi
    j1 = j + oj
    if 0 <= i1 < nx and 0 <= j1 < ny:
        v = W[k, j1, i1]
    i1 = i - oi
    j1 = j - oj
    if 0 <= i1 < nx and 0 <= j1 < ny:
        w = W[k, j1, i1]
        if w < v:
            v = w
    return v


@nb.njit(cache=True, inline="always")
def _solve4(m, a, rhs):
    """Largest admissible root of sum_i a_i max(u - m_i, 0)^2 = rhs, 4 terms."""
    # insertion sort of 4 pairs, skipping zero weights
    n = 0
    ms = np.empty(4)
    al = np.empty(4)
    for t in range(4):
        if a[t] <= 0.0 or m[t] == INF:
            continue
        p = n
        while p > 0 and ms[p - 1] > m[t]:
            ms[p] = ms[p - 1]
            al[p] = al[p - 1]
            p -= 1
        ms[p] = m[t]
        al[p] = a[t]
        n += 1
    if n == 0:
        return INF
    A = 0.0
    B = 0.0
    Cc = 0.0
    u = INF
    for t in range(n):
        A += al[t]
        B += al[t] * ms[t]
        Cc += al[t] * ms[t] * ms[t]
        disc = B * B - A * (Cc - rhs)
        u = (B + math.sqrt(max(disc, 0.0))) / A
        if t == n - 1 or u <= ms[t + 1]:
            break
    return u


@nb.njit(cache=True, inline="always")
def _selling_terms(W, k, j, i, offs, rho, at, m, a):
    nt, ny, nx = W.shape
    for n in range(3):
        m[n] = _axis_min(W, k, j, i, offs[k, n, 0], offs[k, n, 1], nx, ny)
        a[n] = rho[k, n]
    kp = k + 1
    if kp == nt:
        kp = 0
    km = k - 1
    if km < 0:
        km = nt - 1
    m[3] = min(W[kp, j, i], W[km, j, i])
    a[3] = at


@nb.njit(cache=True)
def sweep_cycle_selling(W, C, frozen, offs, rho, at):
    nt, ny, nx = W.shape
    m = np.empty(4)
    a = np.empty(4)
    change = 0.0
    for order in range(8):
        dk = 1 if (order & 4) == 0 else -1
        dj = 1 if (order & 2) == 0 else -1
        di = 1 if (order & 1) == 0 else -1
        for kk in range(nt):
            k = kk if dk > 0 else nt - 1 - kk
            for jj in range(ny):
                j = jj if dj > 0 else ny - 1 - jj
                for ii in range(nx):
                    i = ii if di > 0 else nx - 1 - ii
                    if frozen[k, j, i]:
                        continue
                    _selling_terms(W, k, j, i, offs, rho, at, m, a)
                    c = C[k, j, i]
                    u = _solve4(m, a, c * c)
                    old = W[k, j, i]
                    if u < old:
                        W[k, j, i] = u
                        d = INF if old == INF else old - u
                        if d > change:
                            change = d
    return change


@nb.njit(cache=True, parallel=True)
def jacobi_step_selling(W, Wout, C, frozen, offs, rho, at):
    nt, ny, nx = W.shape
    changes = np.zeros(nt)
    for k in nb.prange(nt):
        m = np.empty(4)
        a = np.empty(4)
        local = 0.0
        for j in range(ny):
            for i in range(nx):
                old = W[k, j, i]
                Wout[k, j, i] = old
                if frozen[k, j, i]:
                    continue
                _selling_terms(W, k, j, i, offs, rho, at, m, a)
                c = C[k, j, i]
                u = _solve4(m, a, c * c)
                if u < old:
                    Wout[k, j, i] = u
                    d = INF if old == INF else old - u
                    if d > local:
                        local = d
        changes[k] = local
    return changes.max()


@nb.njit(cache=True)
def hamiltonian_selling(W, C, frozen, offs, rho, at):
    nt, ny, nx = W.shape
    out = np.zeros(W.shape)
    m = np.empty(4)
    a = np.empty(4)
    for k in range(nt):
        for j in range(ny):
            for i in range(nx):
                if frozen[k, j, i]:
                    continue
                u = W[k, j, i]
                if u == INF:
                    out[k, j, i] = np.nan
                    continue
                _selling_terms(W, k, j, i, offs, rho, at, m, a)
                H = 0.0
                for n in range(4):
                    if u > m[n]:
                        H += a[n] * (u - m[n]) ** 2
                c2 = C[k, j, i] ** 2
                out[k, j, i] = abs(H - c2) / c2
    return out


# -- second-order correction phase (adaptive stencil only) ---------------------
# Starting from the converged first-order field, each one-sided difference
# along a stencil offset e is replaced by (3u - 4W(x-e) + W(x-2e)) / 2 when the
# two upwind values are ordered, i.e. neighbour (4 m1 - m2) / 3 with weight 9/4.


@nb.njit(cache=True, inline="always")
def _terms_o2(W, k, j, i, offs, rho, at, m, a):
    nt, ny, nx = W.shape
    for n in range(4):
        if n < 3:
            oi = offs[k, n, 0]
            oj = offs[k, n, 1]
            ok = 0
            w = rho[k, n]
        else:
            oi = 0
            oj = 0
            ok = 1
            w = at
        best = INF
        best2 = INF
        for sgn in (1, -1):
            i1 = i + sgn * oi
            j1 = j + sgn * oj
            if not (0 <= i1 < nx and 0 <= j1 < ny):
                continue
            v = W[(k + sgn * ok) % nt, j1, i1]
            if v < best:
                best = v
                i2 = i + 2 * sgn * oi
                j2 = j + 2 * sgn * oj
                if 0 <= i2 < nx and 0 <= j2 < ny:
                    best2 = W[(k + 2 * sgn * ok) % nt, j2, i2]
                else:
                    best2 = INF
        if best2 < INF and best2 <= best:
            m[n] = (4.0 * best - best2) / 3.0
            a[n] = 2.25 * w
        else:
            m[n] = best
            a[n] = w


@nb.njit(cache=True)
def sweep_cycle_o2(W, C, frozen, offs, rho, at):
    nt, ny, nx = W.shape
    m = np.empty(4)
    a = np.empty(4)
    change = 0.0
    for order in range(8):
        dk = 1 if (order & 4) == 0 else -1
        dj = 1 if (order & 2) == 0 else -1
        di = 1 if (order & 1) == 0 else -1
        for kk in range(nt):
            k = kk if dk > 0 else nt - 1 - kk
            for jj in range(ny):
                j = jj if dj > 0 else ny - 1 - jj
                for ii in range(nx):
                    i = ii if di > 0 else nx - 1 - ii
                    if frozen[k, j, i]:
                        continue
                    _terms_o2(W, k, j, i, offs, rho, at, m, a)
                    c = C[k, j, i]
                    u = _solve4(m, a, c * c)
                    if u < INF:
                        d = abs(W[k, j, i] - u)
                        W[k, j, i] = u
                        if d > change:
                            change = d
    return change


# -- discrete descent flow ------------------------------------------------------
# -G^{-1} dW assembled from the same one-sided differences the solver used:
# each stencil term contributes weight * (u - m)_+ along the offset pointing to
# its smaller neighbour. Returned in Cartesian (x, y, θ) units, divided by C².


@nb.njit(cache=True)
def upwind_flow_selling(W, C, offs, rho, at, hx, hy, ht):
    nt, ny, nx = W.shape
    out = np.zeros((nt, ny, nx, 3))
    for k in range(nt):
        kp = k + 1 if k + 1 < nt else 0
        km = k - 1 if k > 0 else nt - 1
        for j in range(ny):
            for i in range(nx):
                u = W[k, j, i]
                if u == INF or u == 0.0:
                    continue
                vx = 0.0
                vy = 0.0
                vt = 0.0
                for n in range(3):
                    oi = offs[k, n, 0]
                    oj = offs[k, n, 1]
                    best = INF
                    sg = 0
                    for s in (1, -1):
                        i1 = i + s * oi
                        j1 = j + s * oj
                        if 0 <= i1 < nx and 0 <= j1 < ny and W[k, j1, i1] < best:
                            best = W[k, j1, i1]
                            sg = s
                    if best < u:
                        f = rho[k, n] * (u - best) * sg
                        vx += f * oi * hx
                        vy += f * oj * hy
                vp = W[kp, j, i]
                vm = W[km, j, i]
                if min(vp, vm) < u:
                    if vp <= vm:
                        vt += at * (u - vp) * ht
                    else:
                        vt -= at * (u - vm) * ht
                c2 = C[k, j, i] ** 2
                out[k, j, i, 0] = vx / c2
                out[k, j, i, 1] = vy / c2
                out[k, j, i, 2] = vt / c2
    return out


@nb.njit(cache=True, inline="always")
def _signed_dir(W, k, j, i, dx, dy, hx, hy, nx, ny):
    """Like ``_spatial_dir`` but also returns +1/-1 for the side that won."""
    a = abs(dx) / hx
    b = abs(dy) / hy
    si = 1 if dx >= 0.0 else -1
    sj = 1 if dy >= 0.0 else -1
    h = math.sqrt(dx * dx + dy * dy)
    vp, rp = _side(W, k, j, i, si, sj, a, b, nx, ny)
    vm, rm = _side(W, k, j, i, -si, -sj, a, b, nx, ny)
    if vp <= vm:
        return vp, h / rp, 1.0
    return vm, h / rm, -1.0


@nb.njit(cache=True)
def upwind_flow_frame(W, C, cos_t, sin_t, step, hx, hy, ht, w1, w2, w3):
    nt, ny, nx = W.shape
    out = np.zeros((nt, ny, nx, 3))
    for k in range(nt):
        c = cos_t[k]
        s = sin_t[k]
        kp = k + 1 if k + 1 < nt else 0
        km = k - 1 if k > 0 else nt - 1
        for j in range(ny):
            for i in range(nx):
                u = W[k, j, i]
                if u == INF or u == 0.0:
                    continue
                a = 0.0
                b = 0.0
                m, h, sg = _signed_dir(W, k, j, i, step * c, step * s, hx, hy, nx, ny)
                if m < u:
                    a = sg * w1 * (u - m) / h
                m, h, sg = _signed_dir(W, k, j, i, -step * s, step * c, hx, hy, nx, ny)
                if m < u:
                    b = sg * w3 * (u - m) / h
                vt = 0.0
                vp = W[kp, j, i]
                vm = W[km, j, i]
                if min(vp, vm) < u:
                    if vp <= vm:
                        vt = w2 * (u - vp) / ht
                    else:
                        vt = -w2 * (u - vm) / ht
                c2 = C[k, j, i] ** 2
                out[k, j, i, 0] = (a * c - b * s) / c2
                out[k, j, i, 1] = (a * s + b * c) / c2
                out[k, j, i, 2] = vt / c2
    return out
