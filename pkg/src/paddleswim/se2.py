"""Planar rigid-motion group SE(2) and its Lie algebra.

Conventions used throughout the package:

* A group element is a length-3 float array ``g = [x, y, theta]`` giving the
  position of the body frame in the world and its heading.  ``theta`` is
  stored unwrapped (it accumulates); comparisons modulo 2*pi are up to the
  caller.
* A body velocity ``xi = [xi_x, xi_y, xi_theta]`` is the world velocity of
  the frame pulled back to the frame itself.  Momenta and wrenches are
  elements of the dual space and use the same component ordering, so the
  natural pairing is the plain dot product.

All functions are pure and operate on (and return) plain ndarrays.
"""

import numpy as np

__all__ = [
    "identity", "compose", "inverse", "world_to_body", "body_to_world",
    "bracket", "ad_star", "ad_star_matrix", "Ad", "Ad_star", "hat", "vee",
    "exp", "reconstruct",
]

_TINY = 1e-12


def identity():
    return np.zeros(3)


def _rot(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def compose(g1, g2):
    """Group product: apply g2 in the frame of g1."""
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    out = np.empty(3)
    out[:2] = g1[:2] + _rot(g1[2]) @ g2[:2]
    out[2] = g1[2] + g2[2]
    return out


def inverse(g):
    g = np.asarray(g, dtype=float)
    out = np.empty(3)
    out[:2] = -(_rot(g[2]).T @ g[:2])
    out[2] = -g[2]
    return out


def world_to_body(g, gdot):
    """Pull a world-frame velocity [xdot, ydot, thetadot] back to the body frame."""
    g = np.asarray(g, dtype=float)
    gdot = np.asarray(gdot, dtype=float)
    out = np.empty(3)
    out[:2] = _rot(g[2]).T @ gdot[:2]
    out[2] = gdot[2]
    return out


def body_to_world(g, xi):
    """Inverse of :func:`world_to_body`."""
    g = np.asarray(g, dtype=float)
    xi = np.asarray(xi, dtype=float)
    out = np.empty(3)
    out[:2] = _rot(g[2]) @ xi[:2]
    out[2] = xi[2]
    return out


def hat(xi):
    """3x3 homogeneous matrix representation of an algebra element."""
    return np.array([
        [0.0, -xi[2], xi[0]],
        [xi[2], 0.0, xi[1]],
        [0.0, 0.0, 0.0],
    ])


def vee(m):
    return np.array([m[0, 2], m[1, 2], m[1, 0]])


def bracket(xi, eta):
    """Lie bracket on se(2), [xi, eta] = vee(hat(xi) hat(eta) - hat(eta) hat(xi))."""
    return np.array([
        xi[2] * -eta[1] - eta[2] * -xi[1],
        xi[2] * eta[0] - eta[2] * xi[0],
        0.0,
    ])


def ad_star(xi, p):
    """Coadjoint action: <ad_star(xi, p), eta> = <p, bracket(xi, eta)> for all eta."""
    return np.array([
        xi[2] * p[1],
        -xi[2] * p[0],
        xi[1] * p[0] - xi[0] * p[1],
    ])


def ad_star_matrix(p):
    """Matrix M(p) with M(p) @ xi = ad_star(xi, p); linear in p."""
    return np.array([
        [0.0, 0.0, p[1]],
        [0.0, 0.0, -p[0]],
        [-p[1], p[0], 0.0],
    ])


def Ad(g, xi):
    """Adjoint action of a group element on the algebra."""
    g = np.asarray(g, dtype=float)
    out = np.empty(3)
    out[:2] = _rot(g[2]) @ xi[:2] - xi[2] * np.array([-g[1], g[0]])
    out[2] = xi[2]
    return out


def Ad_star(g, p):
    """Dual of Ad: <Ad_star(g, p), xi> = <p, Ad(g, xi)>."""
    g = np.asarray(g, dtype=float)
    out = np.empty(3)
    out[:2] = _rot(g[2]).T @ p[:2]
    out[2] = p[2] - (g[0] * p[1] - g[1] * p[0])
    return out


def exp(xi):
    """Group exponential of an algebra element (closed form)."""
    xi = np.asarray(xi, dtype=float)
    w = xi[2]
    out = np.empty(3)
    if abs(w) < 1e-8:
        # 2nd-order Taylor of the left Jacobian keeps O(w^2) accuracy at w -> 0
        a = 1.0 - w * w / 6.0
        b = 0.5 * w - w ** 3 / 24.0
    else:
        a = np.sin(w) / w
        b = (1.0 - np.cos(w)) / w
    out[0] = a * xi[0] - b * xi[1]
    out[1] = b * xi[0] + a * xi[1]
    out[2] = w
    return out


def _check_finite(xi_series):
    if not np.all(np.isfinite(xi_series)):
        raise ValueError("body-velocity series contains non-finite samples")


def reconstruct(g0, xi_series, dt, method="exp_midpoint"):
    """Integrate g' = DL_g xi for a uniformly sampled body-velocity signal.

    ``xi_series`` holds samples xi(k*dt), shape (m, 3).  Returns the pose
    series of shape (m, 3) starting at ``g0``.

    Methods:

    * ``exp_midpoint`` (default): per-step group exponential with the
      midpoint velocity, g_{k+1} = g_k * exp(dt * (xi_k + xi_{k+1}) / 2).
      Second order, and exact for constant xi.
    * ``rk4``: classical RK4 directly on the (x, y, theta) coordinates with
      linearly interpolated xi; fourth order, provided as a cross-check.
    """
    xi_series = np.asarray(xi_series, dtype=float)
    _check_finite(xi_series)
    m = xi_series.shape[0]
    out = np.empty((m, 3))
    out[0] = np.asarray(g0, dtype=float)
    if method == "exp_midpoint":
        for k in range(m - 1):
            xi_mid = 0.5 * (xi_series[k] + xi_series[k + 1])
            out[k + 1] = compose(out[k], exp(dt * xi_mid))
    elif method == "rk4":
        for k in range(m - 1):
            xi0 = xi_series[k]
            xi1 = 0.5 * (xi_series[k] + xi_series[k + 1])
            xi2 = xi_series[k + 1]
            g = out[k]
            k1 = body_to_world(g, xi0)
            k2 = body_to_world(g + 0.5 * dt * k1, xi1)
            k3 = body_to_world(g + 0.5 * dt * k2, xi1)
            k4 = body_to_world(g + dt * k3, xi2)
            out[k + 1] = g + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    else:
        raise ValueError(f"unknown reconstruction method: {method!r}")
    return out
