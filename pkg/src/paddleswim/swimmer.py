"""The n-segment planar paddle swimmer.

A rigid central body of length L (all the mass, uniformly distributed) carries
two paddles hinged at the body origin, each a chain of n/2 massless equal
segments of total length d.  Every link experiences slender-body drag, linear
in its velocity, with coefficients Cx (axial) and Cy = 2 Cx (transverse) per
unit length.  Joint angles are measured counterclockwise from the body x-axis
for the base joints (rest poses +pi/2 and -pi/2) and between adjacent
segments for inner joints.

The dimensionless inertia-damping ratio epsilon = m / c selects the regime:
epsilon = 0 is the exact viscous (Stokes) limit where the body velocity is an
algebraic function of the shape velocity; epsilon > 0 integrates the full
momentum dynamics.  Gaits have period 2*pi time units.
"""

import io
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, se2
from .errors import ConfigError, NumericalError

__all__ = [
    "SwimmerParams", "ShapeState", "Trajectory",
    "drag_matrices", "link_maps", "total_wrench", "stokes_connection",
    "drag_blocks", "simulate",
]


@dataclass(frozen=True)
class SwimmerParams:
    """Physical constants of the paddle swimmer.

    ``epsilon`` is the inertia-damping ratio; the inertial scale is
    ``m = epsilon * c``.  Zero drag coefficients are allowed (they turn the
    swimmer into a free rigid body) but the Stokes-limit operations then fail.
    """

    n: int = 2
    L: float = 1.0
    d: float = 0.5
    Cx: float = 1.0
    Cy: float = 2.0
    Ibar: float = 1.0
    epsilon: float = 0.0
    c: float = 1.0

    def __post_init__(self):
        if self.n < 2 or self.n % 2 != 0:
            raise ConfigError(f"n must be an even integer >= 2, got {self.n}")
        for name in ("L", "d", "Ibar", "c"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        if self.Cx < 0 or self.Cy < 0:
            raise ConfigError("drag coefficients must be >= 0")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be >= 0")

    @property
    def m(self):
        return self.epsilon * self.c

    def replace(self, **kw):
        from dataclasses import replace
        return replace(self, **kw)


@dataclass(frozen=True)
class ShapeState:
    """Instantaneous shape configuration on the n-torus."""

    alpha: np.ndarray
    alpha_dot: np.ndarray
    alpha_ddot: np.ndarray


@dataclass
class Trajectory:
    """Uniformly sampled simulation record."""

    t: np.ndarray            # (m,)
    alpha: np.ndarray        # (m, n)
    alpha_dot: np.ndarray
    alpha_ddot: np.ndarray
    g: np.ndarray            # (m, 3) world pose [x, y, theta]
    xi: np.ndarray           # (m, 3) body velocity
    p: np.ndarray            # (m, 3) body momentum
    params: SwimmerParams | None = field(default=None, repr=False)

    @property
    def n(self):
        return self.alpha.shape[1]

    def __len__(self):
        return self.t.shape[0]

    @property
    def dt(self):
        return float(self.t[1] - self.t[0])

    def to_csv(self, path_or_buf):
        n = self.n
        header = (
            ["t"]
            + [f"alpha_{j}" for j in range(1, n + 1)]
            + [f"dalpha_{j}" for j in range(1, n + 1)]
            + [f"ddalpha_{j}" for j in range(1, n + 1)]
            + ["x", "y", "theta", "xi_x", "xi_y", "xi_theta", "p_x", "p_y", "p_theta"]
        )
        data = np.column_stack([
            self.t, self.alpha, self.alpha_dot, self.alpha_ddot, self.g, self.xi, self.p,
        ])
        if hasattr(path_or_buf, "write"):
            _write_csv(path_or_buf, header, data)
        else:
            with open(path_or_buf, "w") as fh:
                _write_csv(fh, header, data)

    @classmethod
    def from_csv(cls, path_or_buf, params=None):
        if hasattr(path_or_buf, "read"):
            raw = path_or_buf.read()
        else:
            with open(path_or_buf) as fh:
                raw = fh.read()
        lines = raw.strip().splitlines()
        header = lines[0].split(",")
        n = sum(1 for h in header if h.startswith("alpha_"))
        data = np.loadtxt(io.StringIO("\n".join(lines[1:])), delimiter=",", ndmin=2)
        t = data[:, 0]
        alpha = data[:, 1:1 + n]
        alpha_dot = data[:, 1 + n:1 + 2 * n]
        alpha_ddot = data[:, 1 + 2 * n:1 + 3 * n]
        g = data[:, 1 + 3 * n:4 + 3 * n]
        xi = data[:, 4 + 3 * n:7 + 3 * n]
        p = data[:, 7 + 3 * n:10 + 3 * n]
        return cls(t, alpha, alpha_dot, alpha_ddot, g, xi, p, params=params)

    def shape_series(self):
        from .shapes import ShapeSeries
        return ShapeSeries(self.t, self.alpha, self.alpha_dot, self.alpha_ddot)


def _write_csv(fh, header, data):
    fh.write(",".join(header) + "\n")
    fmt = ",".join(["%.17g"] * data.shape[1])
    for row in data:
        fh.write(fmt % tuple(row) + "\n")


def drag_matrices(params):
    """Slender-body drag resultants (segment, central link), including c."""
    ell = params.d / params.n
    c_seg = params.c * np.diag([
        params.Cx * ell, params.Cy * ell, params.Cy * ell ** 3 / 12.0,
    ])
    c_L = params.c * np.diag([
        params.Cx * params.L, params.Cy * params.L, params.Cy * params.L ** 3 / 12.0,
    ])
    return c_seg, c_L


def link_maps(params, alpha, i):
    """Velocity and wrench maps of segment i (1-based).

    Returns ``V_i`` of shape (3, 3 + n) sending (body velocity, joint rates)
    to the link-frame velocity, and ``W_i`` of shape (3, 3) sending a
    link-frame wrench to a wrench on the body.  Both are assembled from their
    own rotation-chain sums; the duality <f, V_i (xi, 0)> = <W_i f, xi> is a
    property of the model, not of shared code.
    """
    n = params.n
    if not 1 <= i <= n:
        raise ConfigError(f"segment index must be in 1..{n}, got {i}")
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (n,):
        raise ConfigError(f"alpha must have shape ({n},)")
    vxi = np.empty((3, 3))
    va = np.empty((3, n))
    wi = np.empty((3, 3))
    abuf = np.empty(n)
    _kernels._seg_velocity_map(alpha, n, params.d, i - 1, vxi, va, abuf)
    _kernels._seg_wrench_map(alpha, n, params.d, i - 1, wi, abuf)
    return np.hstack([vxi, va]), wi


def total_wrench(params, alpha, alpha_dot, xi):
    """Net drag wrench on the body: central-link drag plus all segment drags."""
    alpha = np.asarray(alpha, dtype=float)
    alpha_dot = np.asarray(alpha_dot, dtype=float)
    xi = np.asarray(xi, dtype=float)
    c_seg, c_L = drag_matrices(params)
    w = -c_L @ xi
    vel = np.concatenate([xi, alpha_dot])
    for i in range(1, params.n + 1):
        V_i, W_i = link_maps(params, alpha, i)
        w -= W_i @ (c_seg @ (V_i @ vel))
    return w


def drag_blocks(params, alpha):
    """c-free blocks (Vxx, Nxa) with total wrench = c (Vxx xi + Nxa alpha_dot)."""
    alpha = np.asarray(alpha, dtype=float)
    return _kernels.drag_blocks(alpha, params.n, params.L, params.d, params.Cx, params.Cy)


def stokes_connection(params, alpha):
    """Viscous connection A_visc(alpha): xi = -A_visc alpha_dot balances drag."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (params.n,):
        raise ConfigError(f"alpha must have shape ({params.n},)")
    try:
        A = _kernels.stokes_connection_kernel(
            alpha, params.n, params.L, params.d, params.Cx, params.Cy)
    except Exception as exc:
        raise NumericalError(f"singular drag system at alpha={alpha}") from exc
    if not np.all(np.isfinite(A)):
        raise NumericalError(f"singular drag system at alpha={alpha}")
    return A


def _as_signal(shape_signal):
    if hasattr(shape_signal, "sample"):
        return shape_signal

    class _CallableSignal:
        def sample(self, times):
            states = [shape_signal(float(t)) for t in np.atleast_1d(times)]
            if isinstance(states[0], ShapeState):
                triples = [(s.alpha, s.alpha_dot, s.alpha_ddot) for s in states]
            else:
                triples = states
            a = np.array([np.asarray(tr[0], dtype=float) for tr in triples])
            da = np.array([np.asarray(tr[1], dtype=float) for tr in triples])
            dda = np.array([np.asarray(tr[2], dtype=float) for tr in triples])
            return a, da, dda

    return _CallableSignal()


def simulate(params, shape_signal, t_span, dt, g0=None, p0=None, method="momentum"):
    """Integrate the swimmer driven by a shape signal.

    ``shape_signal`` is either an object with a vectorized
    ``sample(times) -> (alpha, alpha_dot, alpha_ddot)`` method (see
    :mod:`paddleswim.shapes`) or a callable ``t -> ShapeState``.  Records are
    taken every ``dt``; for epsilon > 0 the stiff momentum equation is
    sub-stepped internally so the fine step never exceeds epsilon / 10.

    ``method`` selects the momentum-form integrator (default) or the
    world-coordinate form (``"world"``), which must agree to integration
    tolerance.  epsilon = 0 dispatches to the algebraic Stokes solution.
    """
    if dt <= 0:
        raise ConfigError("dt must be > 0")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 <= t0:
        raise ConfigError("t_span must have t1 > t0")
    n_user = int(np.floor((t1 - t0) / dt + 1e-9))
    if n_user < 1:
        raise ConfigError("t_span shorter than one step")
    sig = _as_signal(shape_signal)
    n = params.n
    eps, c = params.epsilon, params.c

    g0 = np.zeros(3) if g0 is None else np.asarray(g0, dtype=float).copy()
    p0 = np.zeros(3) if p0 is None else np.asarray(p0, dtype=float).copy()

    if eps > 0 and dt > eps / 5.0:
        warnings.warn(
            f"dt={dt:g} exceeds epsilon/5={eps / 5:g}; refining the momentum step",
            stacklevel=2)
    stride = 1 if eps == 0 else max(1, int(np.ceil(dt / (eps / 10.0) - 1e-12)))
    dt_fine = dt / stride

    rec_t = t0 + np.arange(n_user + 1) * dt
    rec_a, rec_da, rec_dda = sig.sample(rec_t)
    rec_g = np.empty((n_user + 1, 3))
    rec_xi = np.empty((n_user + 1, 3))
    rec_p = np.empty((n_user + 1, 3))
    rec_g[0] = g0

    if eps == 0:
        Vxx, Nxa = drag_blocks(params, rec_a[0])
        rec_xi[0] = -np.linalg.solve(Vxx, Nxa @ rec_da[0])
        rec_p[:] = 0.0
    else:
        rec_p[0] = p0
        rec_xi[0] = p0 / (params.m * np.array([1.0, 1.0, params.Ibar]))

    g = g0.copy()
    p = p0.copy()
    gdot = se2.body_to_world(g0, rec_xi[0]) if method == "world" else None

    # chunked fine-grid signal sampling keeps peak memory bounded
    chunk_user = max(1, (1 << 21) // (2 * stride))
    j = 0
    while j < n_user:
        jn = min(n_user, j + chunk_user)
        kfine = (jn - j) * stride
        times = t0 + j * dt + np.arange(2 * kfine + 1) * (dt_fine / 2.0)
        a_sg, da_sg, _ = sig.sample(times)
        if not (np.all(np.isfinite(a_sg)) and np.all(np.isfinite(da_sg))):
            raise NumericalError("shape signal produced non-finite samples")
        if eps == 0:
            status, done = _kernels.stokes_path(
                a_sg, da_sg, dt_fine, n, params.L, params.d, params.Cx, params.Cy,
                g, rec_g, rec_xi, j + 1)
        elif method == "momentum":
            status, done = _kernels.integrate_momentum(
                a_sg, da_sg, dt_fine, eps, c, params.Ibar, n,
                params.L, params.d, params.Cx, params.Cy,
                g, p, stride, rec_g, rec_xi, rec_p, j + 1)
        elif method == "world":
            status, done = _kernels.integrate_world(
                a_sg, da_sg, dt_fine, eps, c, params.Ibar, n,
                params.L, params.d, params.Cx, params.Cy,
                g, gdot, stride, rec_g, rec_xi, rec_p, j + 1)
        else:
            raise ConfigError(f"unknown integration method: {method!r}")
        if status != _kernels.STATUS_OK:
            t_fail = t0 + j * dt + done * dt_fine
            raise NumericalError(
                f"state became non-finite near t={t_fail:.6g} "
                f"(epsilon={eps:g}, dt={dt:g}); the integration blew up")
        j = jn

    return Trajectory(rec_t, rec_a, rec_da, rec_dda, rec_g, rec_xi, rec_p, params=params)
