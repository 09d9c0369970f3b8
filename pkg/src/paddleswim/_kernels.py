"""Jitted numerical cores for the swimmer model.

Everything here works on plain float64 arrays; shapes and conventions are
owned by :mod:`paddleswim.swimmer`.  Drag blocks are "c-free": the damping
scale multiplies them at the call sites that need physical wrenches.

Shape signals arrive pre-sampled on the integrator's half-step grid
(rows 0, 1, 2, ... at spacing dt/2), so a fine step k uses rows 2k, 2k+1
and 2k+2 for its Runge-Kutta stages.  The inner loops reuse caller-owned
work buffers; the integrators run millions of fine steps per trajectory.
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_NONFINITE = 1


@njit(cache=True, nogil=True)
def _seg_velocity_map(alpha, n, d, i, vxi, va, abuf):
    """Fill the maps from (body velocity, joint rates) to link-i frame velocity.

    ``i`` is 0-based; ``vxi`` is (3, 3), ``va`` is (3, n), ``abuf`` is a
    length-n scratch vector.  Implements the rotation-chain sums for a paddle
    of n/2 equal segments hinged at the body origin; empty sums are zero.
    """
    half = n // 2
    base = 0 if i < half else half
    ell = d / n
    vxi[:] = 0.0
    va[:] = 0.0

    # cumulative link angles relative to the body, abuf[k] = alpha_base+...+alpha_k
    acc = 0.0
    for k in range(base, i + 1):
        acc += alpha[k]
        abuf[k] = acc
    Ai = abuf[i]
    ci, si = np.cos(Ai), np.sin(Ai)

    vxi[0, 0] = ci
    vxi[0, 1] = si
    vxi[1, 0] = -si
    vxi[1, 1] = ci
    vxi[2, 2] = 1.0

    # own rotation sweeps half a segment length
    vxi[1, 2] = 0.5 * ell
    for j in range(base, i + 1):
        va[1, j] = 0.5 * ell
        va[2, j] = 1.0
    # earlier links k sweep a full segment length, rotated into frame i
    for k in range(base, i):
        beta = Ai - abuf[k]
        ux, uy = np.sin(beta), np.cos(beta)
        vxi[0, 2] += ell * ux
        vxi[1, 2] += ell * uy
        for j in range(base, k + 1):
            va[0, j] += ell * ux
            va[1, j] += ell * uy


@njit(cache=True, nogil=True)
def _seg_wrench_map(alpha, n, d, i, wi, abuf):
    """Fill the (3, 3) map from a link-i wrench to a wrench on the body."""
    half = n // 2
    base = 0 if i < half else half
    ell = d / n
    wi[:] = 0.0

    acc = 0.0
    for k in range(base, i + 1):
        acc += alpha[k]
        abuf[k] = acc
    Ai = abuf[i]
    ci, si = np.cos(Ai), np.sin(Ai)

    wi[0, 0] = ci
    wi[0, 1] = -si
    wi[1, 0] = si
    wi[1, 1] = ci
    wi[2, 2] = 1.0
    wi[2, 0] = 0.0
    wi[2, 1] = 0.5 * ell
    for k in range(base + 1, i + 1):
        beta = Ai - abuf[k - 1]
        wi[2, 0] += ell * np.sin(beta)
        wi[2, 1] += ell * np.cos(beta)


@njit(cache=True, nogil=True)
def _drag_blocks_into(alpha, n, L, d, Cx, Cy, Vxx, Nxa, vxi, va, abuf):
    """Velocity-to-wrench blocks of the total drag: F = Vxx @ xi + Nxa @ alpha_dot.

    Fills the (3, 3) body-velocity block and the (3, n) joint-rate block,
    both c-free and negative (drag opposes motion).
    """
    Vxx[:] = 0.0
    Nxa[:] = 0.0
    Vxx[0, 0] = -Cx * L
    Vxx[1, 1] = -Cy * L
    Vxx[2, 2] = -Cy * L ** 3 / 12.0

    ell = d / n
    c0 = Cx * ell
    c1 = Cy * ell
    c2 = Cy * ell ** 3 / 12.0
    for i in range(n):
        _seg_velocity_map(alpha, n, d, i, vxi, va, abuf)
        # the wrench map back to the body is the transpose of the
        # body-velocity block, so each segment adds -vxi^T diag(c) [vxi | va]
        for r in range(3):
            w0 = vxi[0, r] * c0
            w1 = vxi[1, r] * c1
            w2 = vxi[2, r] * c2
            for q in range(3):
                Vxx[r, q] -= w0 * vxi[0, q] + w1 * vxi[1, q] + w2 * vxi[2, q]
            for q in range(n):
                Nxa[r, q] -= w0 * va[0, q] + w1 * va[1, q] + w2 * va[2, q]


@njit(cache=True, nogil=True)
def drag_blocks(alpha, n, L, d, Cx, Cy):
    """Allocating convenience wrapper around :func:`_drag_blocks_into`."""
    Vxx = np.empty((3, 3))
    Nxa = np.empty((3, n))
    vxi = np.empty((3, 3))
    va = np.empty((3, n))
    abuf = np.empty(n)
    _drag_blocks_into(alpha, n, L, d, Cx, Cy, Vxx, Nxa, vxi, va, abuf)
    return Vxx, Nxa


@njit(cache=True, nogil=True)
def stokes_connection_kernel(alpha, n, L, d, Cx, Cy):
    """Solve the drag force balance for the (3, n) connection matrix A_visc."""
    Vxx, Nxa = drag_blocks(alpha, n, L, d, Cx, Cy)
    return np.linalg.solve(Vxx, Nxa)


@njit(cache=True, nogil=True)
def _exp_step(g, xi0, xi1, xi2, dt):
    """In-place left update g <- g * exp(dt * xi)."""
    w = xi2 * dt
    vx = xi0 * dt
    vy = xi1 * dt
    if abs(w) < 1e-8:
        a = 1.0 - w * w / 6.0
        b = 0.5 * w - w ** 3 / 24.0
    else:
        a = np.sin(w) / w
        b = (1.0 - np.cos(w)) / w
    dx = a * vx - b * vy
    dy = b * vx + a * vy
    c, s = np.cos(g[2]), np.sin(g[2])
    g[0] += c * dx - s * dy
    g[1] += s * dx + c * dy
    g[2] += w


@njit(cache=True, nogil=True)
def _p_rhs(p, alpha_dot, Vxx, Nxa, c, inv_m, inv_mI, out):
    """Momentum-form right-hand side: dp/dt = ad*_xi p + c (Vxx xi + Nxa alpha_dot)."""
    xi0 = inv_m * p[0]
    xi1 = inv_m * p[1]
    xi2 = inv_mI * p[2]
    out[0] = xi2 * p[1]
    out[1] = -xi2 * p[0]
    out[2] = xi1 * p[0] - xi0 * p[1]
    for r in range(3):
        acc = Vxx[r, 0] * xi0 + Vxx[r, 1] * xi1 + Vxx[r, 2] * xi2
        for q in range(alpha_dot.shape[0]):
            acc += Nxa[r, q] * alpha_dot[q]
        out[r] += c * acc


@njit(cache=True, nogil=True)
def integrate_momentum(alpha_sg, dalpha_sg, dt, eps, c, Ibar, n, L, d, Cx, Cy,
                       g, p, stride, rec_g, rec_xi, rec_p, rec_at):
    """RK4 on the body momentum with group reconstruction by midpoint exponential.

    ``alpha_sg``/``dalpha_sg`` are half-grid samples (2K+1 rows for K fine
    steps of size ``dt``).  Every ``stride`` fine steps the state after the
    step is written to the record arrays starting at slot ``rec_at``.  ``g``
    and ``p`` are updated in place so chunks can be chained.  Returns
    (status, fine steps completed).
    """
    K = (alpha_sg.shape[0] - 1) // 2
    m = eps * c
    inv_m = 1.0 / m
    inv_mI = 1.0 / (m * Ibar)

    k1 = np.empty(3)
    k2 = np.empty(3)
    k3 = np.empty(3)
    k4 = np.empty(3)
    pt = np.empty(3)
    vxi = np.empty((3, 3))
    va = np.empty((3, n))
    abuf = np.empty(n)
    VxxA = np.empty((3, 3))
    NxaA = np.empty((3, n))
    VxxB = np.empty((3, 3))
    NxaB = np.empty((3, n))
    VxxC = np.empty((3, 3))
    NxaC = np.empty((3, n))

    _drag_blocks_into(alpha_sg[0], n, L, d, Cx, Cy, VxxA, NxaA, vxi, va, abuf)
    for k in range(K):
        _drag_blocks_into(alpha_sg[2 * k + 1], n, L, d, Cx, Cy, VxxB, NxaB, vxi, va, abuf)
        _drag_blocks_into(alpha_sg[2 * k + 2], n, L, d, Cx, Cy, VxxC, NxaC, vxi, va, abuf)
        da0 = dalpha_sg[2 * k]
        da1 = dalpha_sg[2 * k + 1]
        da2 = dalpha_sg[2 * k + 2]

        _p_rhs(p, da0, VxxA, NxaA, c, inv_m, inv_mI, k1)
        for r in range(3):
            pt[r] = p[r] + 0.5 * dt * k1[r]
        _p_rhs(pt, da1, VxxB, NxaB, c, inv_m, inv_mI, k2)
        for r in range(3):
            pt[r] = p[r] + 0.5 * dt * k2[r]
        _p_rhs(pt, da1, VxxB, NxaB, c, inv_m, inv_mI, k3)
        for r in range(3):
            pt[r] = p[r] + dt * k3[r]
        _p_rhs(pt, da2, VxxC, NxaC, c, inv_m, inv_mI, k4)

        p_old0, p_old1, p_old2 = p[0], p[1], p[2]
        p[0] += (dt / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        p[1] += (dt / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        p[2] += (dt / 6.0) * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])

        _exp_step(g,
                  inv_m * 0.5 * (p_old0 + p[0]),
                  inv_m * 0.5 * (p_old1 + p[1]),
                  inv_mI * 0.5 * (p_old2 + p[2]),
                  dt)

        VxxA[:] = VxxC
        NxaA[:] = NxaC

        if (k + 1) % stride == 0:
            if not (np.isfinite(p[0]) and np.isfinite(p[1]) and np.isfinite(p[2])):
                return STATUS_NONFINITE, k + 1
            idx = rec_at + (k + 1) // stride - 1
            for r in range(3):
                rec_g[idx, r] = g[r]
                rec_p[idx, r] = p[r]
            rec_xi[idx, 0] = inv_m * p[0]
            rec_xi[idx, 1] = inv_m * p[1]
            rec_xi[idx, 2] = inv_mI * p[2]
    return STATUS_OK, K


@njit(cache=True, nogil=True)
def integrate_world(alpha_sg, dalpha_sg, dt, eps, c, Ibar, n, L, d, Cx, Cy,
                    g, gdot, stride, rec_g, rec_xi, rec_p, rec_at):
    """RK4 on world coordinates (g, g_dot); cross-check of the momentum form."""
    K = (alpha_sg.shape[0] - 1) // 2
    m = eps * c
    y = np.empty(6)
    y[0:3] = g
    y[3:6] = gdot
    ks = np.empty((4, 6))
    yt = np.empty(6)
    vxi = np.empty((3, 3))
    va = np.empty((3, n))
    abuf = np.empty(n)
    VxxA = np.empty((3, 3))
    NxaA = np.empty((3, n))
    VxxB = np.empty((3, 3))
    NxaB = np.empty((3, n))
    VxxC = np.empty((3, 3))
    NxaC = np.empty((3, n))

    _drag_blocks_into(alpha_sg[0], n, L, d, Cx, Cy, VxxA, NxaA, vxi, va, abuf)
    for k in range(K):
        _drag_blocks_into(alpha_sg[2 * k + 1], n, L, d, Cx, Cy, VxxB, NxaB, vxi, va, abuf)
        _drag_blocks_into(alpha_sg[2 * k + 2], n, L, d, Cx, Cy, VxxC, NxaC, vxi, va, abuf)

        for stage in range(4):
            if stage == 0:
                yt[:] = y
                Vxx, Nxa, da = VxxA, NxaA, dalpha_sg[2 * k]
            elif stage == 1:
                for r in range(6):
                    yt[r] = y[r] + 0.5 * dt * ks[0, r]
                Vxx, Nxa, da = VxxB, NxaB, dalpha_sg[2 * k + 1]
            elif stage == 2:
                for r in range(6):
                    yt[r] = y[r] + 0.5 * dt * ks[1, r]
                Vxx, Nxa, da = VxxB, NxaB, dalpha_sg[2 * k + 1]
            else:
                for r in range(6):
                    yt[r] = y[r] + dt * ks[2, r]
                Vxx, Nxa, da = VxxC, NxaC, dalpha_sg[2 * k + 2]

            cth, sth = np.cos(yt[2]), np.sin(yt[2])
            xi0 = cth * yt[3] + sth * yt[4]
            xi1 = -sth * yt[3] + cth * yt[4]
            xi2 = yt[5]
            f0 = Vxx[0, 0] * xi0 + Vxx[0, 1] * xi1 + Vxx[0, 2] * xi2
            f1 = Vxx[1, 0] * xi0 + Vxx[1, 1] * xi1 + Vxx[1, 2] * xi2
            f2 = Vxx[2, 0] * xi0 + Vxx[2, 1] * xi1 + Vxx[2, 2] * xi2
            for q in range(n):
                f0 += Nxa[0, q] * da[q]
                f1 += Nxa[1, q] * da[q]
                f2 += Nxa[2, q] * da[q]
            ks[stage, 0] = yt[3]
            ks[stage, 1] = yt[4]
            ks[stage, 2] = yt[5]
            ks[stage, 3] = (cth * f0 - sth * f1) / eps
            ks[stage, 4] = (sth * f0 + cth * f1) / eps
            ks[stage, 5] = f2 / (eps * Ibar)

        for r in range(6):
            y[r] += (dt / 6.0) * (ks[0, r] + 2.0 * ks[1, r] + 2.0 * ks[2, r] + ks[3, r])

        VxxA[:] = VxxC
        NxaA[:] = NxaC

        if (k + 1) % stride == 0:
            ok = True
            for r in range(6):
                if not np.isfinite(y[r]):
                    ok = False
            if not ok:
                return STATUS_NONFINITE, k + 1
            idx = rec_at + (k + 1) // stride - 1
            cth, sth = np.cos(y[2]), np.sin(y[2])
            xi0 = cth * y[3] + sth * y[4]
            xi1 = -sth * y[3] + cth * y[4]
            for r in range(3):
                rec_g[idx, r] = y[r]
            rec_xi[idx, 0] = xi0
            rec_xi[idx, 1] = xi1
            rec_xi[idx, 2] = y[5]
            rec_p[idx, 0] = m * xi0
            rec_p[idx, 1] = m * xi1
            rec_p[idx, 2] = m * Ibar * y[5]
    g[:] = y[0:3]
    gdot[:] = y[3:6]
    return STATUS_OK, K


@njit(cache=True, nogil=True)
def stokes_path(alpha_sg, dalpha_sg, dt, n, L, d, Cx, Cy, g, rec_g, rec_xi, rec_at):
    """Algebraic Stokes-limit trajectory: xi = -A_visc(alpha) alpha_dot at all
    half-grid rows, with the pose advanced by midpoint exponentials."""
    rows = alpha_sg.shape[0]
    K = (rows - 1) // 2
    xi_all = np.empty((rows, 3))
    for r in range(rows):
        A = stokes_connection_kernel(alpha_sg[r], n, L, d, Cx, Cy)
        for q in range(3):
            acc = 0.0
            for j in range(n):
                acc += A[q, j] * dalpha_sg[r, j]
            xi_all[r, q] = -acc
    for k in range(K):
        _exp_step(g, xi_all[2 * k + 1, 0], xi_all[2 * k + 1, 1], xi_all[2 * k + 1, 2], dt)
        idx = rec_at + k
        for r in range(3):
            rec_g[idx, r] = g[r]
            rec_xi[idx, r] = xi_all[2 * k + 2, r]
    return STATUS_OK, K
